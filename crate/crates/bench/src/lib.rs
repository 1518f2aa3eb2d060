//! Fixtures shared by the benchmarks.

use resolv_core::{EpsGrid, Family, Member, ParamBox, PenalizedMle, Penalty};

/// Gaussian location experiment on `[-3, 3]^d` with `eps = sqrt(2/n)` and zero penalty.
pub fn gaussian_experiment(d: usize, n: usize) -> (Member, PenalizedMle) {
    let fam = Family::Gaussian { dim: d };
    let eps = (2.0 / n as f64).sqrt();
    let grid = EpsGrid::new(vec![0.0; d], eps, ParamBox::cube(d, -3.0, 3.0).unwrap()).unwrap();
    let truth = Member::new(fam, vec![0.3; d]).unwrap();
    (
        truth,
        PenalizedMle::new(fam, &grid, &Penalty::Zero).unwrap(),
    )
}
