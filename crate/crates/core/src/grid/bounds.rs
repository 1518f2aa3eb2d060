//! Closed-form bounds on sums over `eps`-discretizations.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use super::{unit_sphere_area, RadialEnvelope};
use crate::error::{invalid, precondition, Error, Result};

/// Coefficient in front of the radial integral in the tail-sum bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailCoefficient {
    /// `2 pi^(d/2) / ((eps/4)^d Gamma(d/2))`
    ExactGamma,
    /// `(20 / (eps sqrt d))^d`, which dominates the exact form.
    Stirling,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            name,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn dim_ok(d: usize) -> Result<()> {
    if d == 0 {
        Err(invalid("d", "dimension must be positive"))
    } else {
        Ok(())
    }
}

pub fn tail_coefficient(eps: f64, d: usize, form: TailCoefficient) -> f64 {
    match form {
        TailCoefficient::ExactGamma => unit_sphere_area(d) * (4.0 / eps).powi(d as i32),
        TailCoefficient::Stirling => (20.0 / (eps * (d as f64).sqrt())).powi(d as i32),
    }
}

/// Bound on `sum_{theta in grid, ||theta - theta*|| > R} g(||theta - theta*||)` for a
/// non-increasing envelope `g`: `coefficient * int_{R/4}^inf g(r) r^(d-1) dr`.
pub fn tail_sum_integral_bound(
    envelope: &RadialEnvelope,
    eps: f64,
    d: usize,
    radius: f64,
    form: TailCoefficient,
) -> Result<f64> {
    positive("eps", eps)?;
    dim_ok(d)?;
    if !(radius >= 3.0 * eps) {
        return Err(precondition(
            "tail-sum bound",
            format!("R >= 3 eps (R = {radius}, eps = {eps})"),
        ));
    }
    if !envelope.nonincreasing_from(radius / 4.0) {
        return Err(precondition("tail-sum bound", "g must be non-increasing"));
    }
    let integral = envelope.moment(d as f64 - 1.0, radius / 4.0)?;
    Ok(tail_coefficient(eps, d, form) * integral)
}

/// `(1 + k sqrt(pi) / (eps sqrt c))^d` with `k = 1` when the Gaussian peak is a grid
/// point and `k = 2` otherwise.
pub fn gaussian_sum_bound(eps: f64, c: f64, d: usize, off_center: bool) -> Result<f64> {
    positive("eps", eps)?;
    positive("c", c)?;
    dim_ok(d)?;
    let k = if off_center { 2.0 } else { 1.0 };
    Ok((1.0 + k * PI.sqrt() / (eps * c.sqrt())).powi(d as i32))
}

/// `(20/(eps sqrt d))^d (4/R)^(q-d) / (q-d)`, bounding `sum ||theta - theta*||^-q`
/// over grid points outside `B(theta*, R)`.
pub fn power_sum_bound(eps: f64, d: usize, radius: f64, q: f64) -> Result<f64> {
    positive("eps", eps)?;
    dim_ok(d)?;
    if !(radius >= 3.0 * eps) {
        return Err(precondition(
            "power-sum bound",
            format!("R >= 3 eps (R = {radius}, eps = {eps})"),
        ));
    }
    let df = d as f64;
    if !(q > df) {
        return Err(Error::Divergent(format!(
            "sum of r^-{q} over a {d}-dimensional lattice requires q > d"
        )));
    }
    Ok(
        tail_coefficient(eps, d, TailCoefficient::Stirling) * (4.0 / radius).powf(q - df)
            / (q - df),
    )
}

/// Inputs shared by the three power-decay bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerDecayParams {
    pub eps: f64,
    pub d: usize,
    /// Excluded radius `R` around `theta*`.
    pub radius: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub n: usize,
    /// Gaussian factor `exp(-kappa ||theta||^2)`; zero when absent.
    pub kappa: f64,
    pub theta_star_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    LargeN,
    Reversed,
    Middle,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::LargeN => "large-n",
            Regime::Reversed => "reversed",
            Regime::Middle => "middle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeBound {
    pub value: f64,
    pub regime: Regime,
    /// Every applicable bound, in regime order.
    pub candidates: Vec<(Regime, f64)>,
}

const BOUNDARY_TOL: f64 = 1e-12;

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= BOUNDARY_TOL * y.abs().max(1.0)
}

impl PowerDecayParams {
    fn validate(&self) -> Result<()> {
        positive("eps", self.eps)?;
        dim_ok(self.d)?;
        positive("a", self.a)?;
        positive("b", self.b)?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(
                "alpha",
                format!("must lie in (0, 1], got {}", self.alpha),
            ));
        }
        if self.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(invalid(
                "kappa",
                format!("must be non-negative, got {}", self.kappa),
            ));
        }
        if !(self.theta_star_norm >= 0.0) {
            return Err(invalid("theta_star_norm", "must be non-negative"));
        }
        let gate = (4.0 * self.a.powf(1.0 / self.b)).max(3.0 * self.eps);
        if !(self.radius >= gate) {
            return Err(precondition(
                "power-decay bound",
                format!(
                    "R >= 4 a^(1/b) v 3 eps (R = {}, required {gate})",
                    self.radius
                ),
            ));
        }
        Ok(())
    }

    fn thresholds(&self) -> (f64, f64) {
        let ab = self.alpha * self.b;
        let d = self.d as f64;
        ((d - 1.0) / ab, (d + 1.0) / ab)
    }

    pub fn large_n_applies(&self) -> bool {
        let n = self.n as f64;
        let (_, hi) = self.thresholds();
        n >= hi || near(n, hi)
    }

    pub fn reversed_applies(&self) -> bool {
        let n = self.n as f64;
        let (lo, _) = self.thresholds();
        self.kappa > 0.0 && (n <= lo || near(n, lo))
    }

    pub fn middle_applies(&self) -> bool {
        let n = self.n as f64;
        let (lo, hi) = self.thresholds();
        self.kappa > 0.0 && ((n > lo && n < hi) || near(n, lo) || near(n, hi))
    }
}

/// Bound for `n >= (d+1)/(alpha b)`: `(4R / (eps sqrt(n alpha b log(R / 4a^(1/b)))))^d`.
pub fn power_decay_large_n_bound(p: &PowerDecayParams) -> Result<f64> {
    p.validate()?;
    if !p.large_n_applies() {
        return Err(precondition(
            "power-decay bound (large n)",
            "n >= (d+1)/(alpha b)",
        ));
    }
    let log_term = (p.radius / (4.0 * p.a.powf(1.0 / p.b))).ln();
    let denom = p.eps * (p.n as f64 * p.alpha * p.b * log_term).sqrt();
    Ok((4.0 * p.radius / denom).powi(p.d as i32))
}

/// Bound for `n <= (d-1)/(alpha b)` with Gaussian factor `kappa > 0`:
/// `2 e^(kappa ||theta*||^2) (4 sqrt(2 pi e) sqrt(d v a^(2/b) kappa) / (eps sqrt(n alpha b kappa)))^d`.
pub fn power_decay_reversed_bound(p: &PowerDecayParams) -> Result<f64> {
    p.validate()?;
    if !p.reversed_applies() {
        return Err(precondition(
            "power-decay bound (reversed)",
            "kappa > 0 and n <= (d-1)/(alpha b)",
        ));
    }
    let d = p.d as f64;
    let inner = d.max(p.a.powf(2.0 / p.b) * p.kappa);
    let base = 4.0 * (2.0 * PI * E).sqrt() * inner.sqrt()
        / (p.eps * (p.n as f64 * p.alpha * p.b * p.kappa).sqrt());
    Ok(2.0 * (p.kappa * p.theta_star_norm.powi(2)).exp() * base.powi(p.d as i32))
}

/// Bound for `(d-1)/(alpha b) < n < (d+1)/(alpha b)` with `kappa > 0`:
/// `e^(kappa ||theta*||^2) (20 / (eps sqrt(n alpha b)))^d (22/R^3 + 2 sqrt(kappa))`.
pub fn power_decay_middle_bound(p: &PowerDecayParams) -> Result<f64> {
    p.validate()?;
    if !p.middle_applies() {
        return Err(precondition(
            "power-decay bound (middle)",
            "kappa > 0 and (d-1)/(alpha b) < n < (d+1)/(alpha b)",
        ));
    }
    let base = 20.0 / (p.eps * (p.n as f64 * p.alpha * p.b).sqrt());
    Ok((p.kappa * p.theta_star_norm.powi(2)).exp()
        * base.powi(p.d as i32)
        * (22.0 / p.radius.powi(3) + 2.0 * p.kappa.sqrt()))
}

/// Dispatches on `n` and returns the smallest applicable power-decay bound.
pub fn power_decay_regime_bound(p: &PowerDecayParams) -> Result<RegimeBound> {
    p.validate()?;
    let mut candidates = Vec::new();
    if p.large_n_applies() {
        candidates.push((Regime::LargeN, power_decay_large_n_bound(p)?));
    }
    if p.reversed_applies() {
        candidates.push((Regime::Reversed, power_decay_reversed_bound(p)?));
    }
    if p.middle_applies() {
        candidates.push((Regime::Middle, power_decay_middle_bound(p)?));
    }
    let (regime, value) = candidates
        .iter()
        .copied()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .ok_or_else(|| {
            precondition(
                "power-decay bound",
                format!(
                    "n = {} < (d+1)/(alpha b) needs a Gaussian factor kappa > 0 from a squared-norm penalty",
                    p.n
                ),
            )
        })?;
    Ok(RegimeBound {
        value,
        regime,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize, n: usize, kappa: f64) -> PowerDecayParams {
        PowerDecayParams {
            eps: 0.1,
            d,
            radius: 12.0,
            a: 1.0,
            b: 1.0,
            alpha: 0.5,
            n,
            kappa,
            theta_star_norm: 0.0,
        }
    }

    #[test]
    fn gaussian_sum_examples() {
        assert!(
            (gaussian_sum_bound(1.0, 1.0, 1, false).unwrap() - 2.772_453_850_905_516).abs() < 1e-14
        );
        assert!(
            (gaussian_sum_bound(1.0, 1.0, 1, true).unwrap() - 4.544_907_701_811_032).abs() < 1e-14
        );
        assert!(gaussian_sum_bound(0.0, 1.0, 1, true).is_err());
        assert!(gaussian_sum_bound(1.0, -1.0, 1, true).is_err());
    }

    #[test]
    fn tail_and_power_examples() {
        let env = RadialEnvelope::power(1.0, 3.0);
        let stirling =
            tail_sum_integral_bound(&env, 1.0, 1, 3.0, TailCoefficient::Stirling).unwrap();
        assert!((stirling - 20.0 * 8.0 / 9.0).abs() < 1e-12);
        let exact =
            tail_sum_integral_bound(&env, 1.0, 1, 3.0, TailCoefficient::ExactGamma).unwrap();
        assert!((exact - 8.0 * 8.0 / 9.0).abs() < 1e-12);
        assert!(tail_sum_integral_bound(&env, 1.0, 1, 2.9, TailCoefficient::Stirling).is_err());
        assert!((power_sum_bound(1.0, 1, 3.0, 3.0).unwrap() - 17.777_777_777_777_78).abs() < 1e-12);
        assert!(matches!(
            power_sum_bound(1.0, 1, 3.0, 1.0),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn stirling_dominates_exact() {
        for d in 1..=6 {
            for eps in [0.01, 0.3, 1.0, 7.0] {
                let e = tail_coefficient(eps, d, TailCoefficient::ExactGamma);
                let s = tail_coefficient(eps, d, TailCoefficient::Stirling);
                assert!(e <= s, "d={d} eps={eps}");
            }
        }
    }

    #[test]
    fn large_n_example() {
        let b = power_decay_regime_bound(&params(1, 100, 0.0)).unwrap();
        assert_eq!(b.regime, Regime::LargeN);
        assert!((b.value - 64.764_051_419_722_55).abs() < 1e-9);
    }

    #[test]
    fn reversed_and_middle_dispatch() {
        // d=5, alpha b = 1/2: reversed for n <= 8, middle for 8 < n < 12.
        let r = power_decay_regime_bound(&params(5, 4, 1.0)).unwrap();
        assert_eq!(r.regime, Regime::Reversed);
        assert_eq!(r.candidates.len(), 1);
        let m = power_decay_regime_bound(&params(5, 10, 1.0)).unwrap();
        assert_eq!(m.candidates[0].0, Regime::Middle);
        // Both boundaries admit two lemmas.
        assert_eq!(
            power_decay_regime_bound(&params(5, 8, 1.0))
                .unwrap()
                .candidates
                .len(),
            2
        );
        assert_eq!(
            power_decay_regime_bound(&params(5, 12, 1.0))
                .unwrap()
                .candidates
                .len(),
            2
        );
        assert!(power_decay_regime_bound(&params(5, 4, 0.0)).is_err());
        let mut p = params(1, 100, 0.0);
        p.radius = 0.2;
        assert!(power_decay_regime_bound(&p).is_err());
    }
}
