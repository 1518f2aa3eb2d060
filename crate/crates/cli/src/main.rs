fn main() {
    std::process::exit(resolv_cli::run(std::env::args_os()));
}
