//! Lattices `v + eps Z^d`, their restriction to boxes, and lattice sums.

mod bounds;
pub mod oracle;

pub use bounds::{
    gaussian_sum_bound, power_decay_large_n_bound, power_decay_middle_bound,
    power_decay_regime_bound, power_decay_reversed_bound, power_sum_bound, tail_coefficient,
    tail_sum_integral_bound, PowerDecayParams, Regime, RegimeBound, TailCoefficient,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::numeric::{squared_distance, CompensatedSum};
use crate::quadrature::{integrate, IntegrationSpec};

/// Default limit on the number of points a grid may enumerate.
pub const DEFAULT_POINT_CAP: usize = 10_000_000;

const INDEX_TOL: f64 = 1e-9;

/// Axis-aligned box; bounds may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParamBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(invalid("box", "dimension must be positive"));
        }
        for (j, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if a.is_nan() || b.is_nan() || a > b {
                return Err(invalid("box", format!("axis {j} has bounds [{a}, {b}]")));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

/// An `eps`-discretization `{v + eps m : m in Z^d}` restricted to a bounded box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsGrid {
    offset: Vec<f64>,
    spacing: f64,
    domain: ParamBox,
    /// Inclusive lattice index range per axis.
    index_lo: Vec<i64>,
    index_hi: Vec<i64>,
    cap: usize,
}

impl EpsGrid {
    pub fn new(offset: Vec<f64>, spacing: f64, domain: ParamBox) -> Result<Self> {
        Self::with_cap(offset, spacing, domain, DEFAULT_POINT_CAP)
    }

    pub fn with_cap(offset: Vec<f64>, spacing: f64, domain: ParamBox, cap: usize) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid(
                "eps",
                format!("spacing must be positive and finite, got {spacing}"),
            ));
        }
        domain.check_dim(offset.len())?;
        if !domain.is_bounded() {
            return Err(invalid("box", "grids require a bounded box"));
        }
        if offset.iter().any(|v| !v.is_finite()) {
            return Err(invalid("offset", "must be finite"));
        }
        let mut index_lo = Vec::with_capacity(offset.len());
        let mut index_hi = Vec::with_capacity(offset.len());
        for j in 0..offset.len() {
            let lo = ((domain.lo[j] - offset[j]) / spacing - INDEX_TOL).ceil();
            let hi = ((domain.hi[j] - offset[j]) / spacing + INDEX_TOL).floor();
            if lo.abs() > 9e15 || hi.abs() > 9e15 {
                return Err(invalid("eps", "lattice indices overflow"));
            }
            index_lo.push(lo as i64);
            index_hi.push(hi as i64);
        }
        Ok(Self {
            offset,
            spacing,
            domain,
            index_lo,
            index_hi,
            cap,
        })
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn domain(&self) -> &ParamBox {
        &self.domain
    }

    pub fn axis_counts(&self) -> Vec<usize> {
        self.index_lo
            .iter()
            .zip(&self.index_hi)
            .map(|(a, b)| if b >= a { (b - a + 1) as usize } else { 0 })
            .collect()
    }

    /// Number of points as a float, so huge grids can be reported without overflow.
    pub fn count(&self) -> f64 {
        self.axis_counts().iter().map(|&c| c as f64).product()
    }

    fn coordinate(&self, axis: usize, index: i64) -> f64 {
        self.offset[axis] + self.spacing * index as f64
    }

    /// Points in lexicographic order of their lattice index (first axis slowest).
    pub fn enumerate_points(&self) -> Result<GridPoints> {
        let count = self.count();
        if count > self.cap as f64 {
            return Err(Error::GridTooLarge {
                count,
                cap: self.cap,
            });
        }
        if count == 0.0 {
            return Err(Error::EmptyGrid);
        }
        let d = self.dim();
        let counts = self.axis_counts();
        let total = count as usize;
        let mut coords = Vec::with_capacity(total * d);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            for j in 0..d {
                coords.push(self.coordinate(j, self.index_lo[j] + idx[j] as i64));
            }
            for j in (0..d).rev() {
                idx[j] += 1;
                if idx[j] < counts[j] {
                    break;
                }
                idx[j] = 0;
            }
        }
        Ok(GridPoints { dim: d, coords })
    }

    /// Membership in `(v + eps Z^d) ∩ box`, up to a relative index tolerance of 1e-9.
    pub fn contains(&self, theta: &[f64]) -> bool {
        if theta.len() != self.dim() {
            return false;
        }
        theta.iter().enumerate().all(|(j, &t)| {
            let k = (t - self.offset[j]) / self.spacing;
            let m = k.round();
            (k - m).abs() <= INDEX_TOL * (1.0 + k.abs())
                && (m as i64) >= self.index_lo[j]
                && (m as i64) <= self.index_hi[j]
        })
    }

    fn nearest_indices(&self, theta: &[f64]) -> Result<Vec<i64>> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: theta.len(),
            });
        }
        let half = 0.5 * self.spacing * (1.0 + INDEX_TOL);
        let mut out = Vec::with_capacity(self.dim());
        for (j, &t) in theta.iter().enumerate() {
            if !(t >= self.domain.lo[j] - half && t <= self.domain.hi[j] + half) {
                return Err(Error::OutsideGrid {
                    coordinate: j,
                    value: t,
                });
            }
            if self.index_hi[j] < self.index_lo[j] {
                return Err(Error::EmptyGrid);
            }
            // Round half toward the smaller index.
            let m = ((t - self.offset[j]) / self.spacing - 0.5).ceil() as i64;
            out.push(m.clamp(self.index_lo[j], self.index_hi[j]));
        }
        Ok(out)
    }

    /// Closest grid point; ties go to the lexicographically smaller lattice index.
    pub fn nearest_point(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let m = self.nearest_indices(theta)?;
        Ok(m.iter()
            .enumerate()
            .map(|(j, &k)| self.coordinate(j, k))
            .collect())
    }

    /// Position of the closest grid point in enumeration order.
    pub fn nearest_ordinal(&self, theta: &[f64]) -> Result<usize> {
        let m = self.nearest_indices(theta)?;
        let counts = self.axis_counts();
        let mut ordinal = 0usize;
        for j in 0..self.dim() {
            ordinal = ordinal * counts[j] + (m[j] - self.index_lo[j]) as usize;
        }
        Ok(ordinal)
    }
}

/// Enumerated grid points, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoints {
    pub dim: usize,
    pub coords: Vec<f64>,
}

impl GridPoints {
    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }
}

/// Unbounded lattice `v + eps Z^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub offset: Vec<f64>,
    pub spacing: f64,
}

impl Lattice {
    pub fn new(offset: Vec<f64>, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid(
                "eps",
                format!("spacing must be positive and finite, got {spacing}"),
            ));
        }
        if offset.is_empty() {
            return Err(invalid("offset", "dimension must be positive"));
        }
        Ok(Self { offset, spacing })
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    /// Number of candidate points in the index box covering `B(center, radius)`.
    pub fn box_count(&self, center: &[f64], radius: f64) -> f64 {
        (0..self.dim())
            .map(|j| {
                let lo = ((center[j] - radius - self.offset[j]) / self.spacing).ceil();
                let hi = ((center[j] + radius - self.offset[j]) / self.spacing).floor();
                (hi - lo + 1.0).max(0.0)
            })
            .product()
    }

    /// Compensated sum of `f(point, distance)` over lattice points with
    /// `distance <= radius` from `center`. Terms are reduced in lattice order so the
    /// result does not depend on thread scheduling.
    pub fn sum_within<F>(&self, center: &[f64], radius: f64, f: F) -> f64
    where
        F: Fn(&[f64], f64) -> f64 + Sync,
    {
        let d = self.dim();
        let eps = self.spacing;
        let ranges: Vec<(i64, i64)> = (0..d)
            .map(|j| {
                let lo = ((center[j] - radius - self.offset[j]) / eps).ceil() as i64;
                let hi = ((center[j] + radius - self.offset[j]) / eps).floor() as i64;
                (lo, hi)
            })
            .collect();
        let (first_lo, first_hi) = ranges[0];
        if first_hi < first_lo {
            return 0.0;
        }
        let r2 = radius * radius;
        let partials: Vec<f64> = (first_lo..=first_hi)
            .into_par_iter()
            .map(|m0| {
                let mut acc = CompensatedSum::new();
                let mut point = vec![0.0; d];
                point[0] = self.offset[0] + eps * m0 as f64;
                let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
                if ranges[1..].iter().any(|(a, b)| b < a) {
                    return 0.0;
                }
                loop {
                    for j in 1..d {
                        point[j] = self.offset[j] + eps * idx[j] as f64;
                    }
                    let dist2 = squared_distance(&point, center);
                    if dist2 <= r2 {
                        acc.add(f(&point, dist2.sqrt()));
                    }
                    let mut j = d - 1;
                    loop {
                        if j == 0 {
                            return acc.value();
                        }
                        idx[j] += 1;
                        if idx[j] <= ranges[j].1 {
                            break;
                        }
                        idx[j] = ranges[j].0;
                        j -= 1;
                    }
                }
            })
            .collect();
        partials.into_iter().collect::<CompensatedSum>().value()
    }
}

/// Radial envelope `g(r) = scale * r^power * exp(-rate r^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialEnvelope {
    pub scale: f64,
    pub power: f64,
    pub rate: f64,
}

impl RadialEnvelope {
    pub fn gaussian(scale: f64, rate: f64) -> Self {
        Self {
            scale,
            power: 0.0,
            rate,
        }
    }

    /// `scale * r^-q`.
    pub fn power(scale: f64, q: f64) -> Self {
        Self {
            scale,
            power: -q,
            rate: 0.0,
        }
    }

    /// `scale * r^-q * exp(-rate r^2)`.
    pub fn gaussian_power(scale: f64, rate: f64, q: f64) -> Self {
        Self {
            scale,
            power: -q,
            rate,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        let p = if self.power == 0.0 {
            1.0
        } else {
            r.powf(self.power)
        };
        self.scale * p * (-self.rate * r * r).exp()
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0 && self.scale.is_finite())
            || !(self.rate >= 0.0)
            || self.power.is_nan()
        {
            return Err(invalid("envelope", format!("{self:?}")));
        }
        Ok(())
    }

    /// Whether `g` is non-increasing on `[r0, inf)`.
    pub fn nonincreasing_from(&self, r0: f64) -> bool {
        self.scale == 0.0
            || self.power <= 0.0
            || (self.rate > 0.0 && r0 * r0 >= self.power / (2.0 * self.rate))
    }

    /// `int_{s0}^inf g(r) r^extra dr`.
    pub fn moment(&self, extra: f64, s0: f64) -> Result<f64> {
        self.validate()?;
        if self.scale == 0.0 {
            return Ok(0.0);
        }
        Ok(self.scale * radial_moment(self.power + extra, self.rate, s0)?)
    }
}

/// `int_{s0}^inf s^m exp(-rate s^2) ds`.
fn radial_moment(m: f64, rate: f64, s0: f64) -> Result<f64> {
    if s0 < 0.0 || s0.is_nan() {
        return Err(invalid(
            "radius",
            format!("lower limit {s0} must be non-negative"),
        ));
    }
    if rate > 0.0 && m + 1.0 > 0.0 {
        let k = 0.5 * (m + 1.0);
        let q = if s0 == 0.0 {
            1.0
        } else {
            gamma_ur(k, rate * s0 * s0)
        };
        return Ok(0.5 * (ln_gamma(k) - k * rate.ln()).exp() * q);
    }
    if s0 == 0.0 {
        return Err(Error::Divergent(format!(
            "integral of s^{m} exp(-{rate} s^2) diverges at 0"
        )));
    }
    if rate == 0.0 {
        if m + 1.0 < 0.0 {
            return Ok(s0.powf(m + 1.0) / -(m + 1.0));
        }
        return Err(Error::Divergent(format!(
            "integral of s^{m} diverges at infinity"
        )));
    }
    let mut spec = IntegrationSpec::new(s0, f64::INFINITY)
        .with_abs_tol(f64::MIN_POSITIVE)
        .with_rel_tol(1e-11);
    spec.max_panels = 20_000;
    let est = integrate(|s| s.powf(m) * (-rate * s * s).exp(), &spec)?;
    Ok(est.value + est.abs_error)
}

/// Surface area of the unit sphere in `R^d`, `2 pi^(d/2) / Gamma(d/2)`.
pub fn unit_sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * (h * std::f64::consts::PI.ln() - ln_gamma(h)).exp()
}

/// Bound on `sum over lattice points with ||theta - center|| > radius of g(||theta - center||)`
/// by comparing each point with the cube of side `eps` centered on it:
/// `(S_d / eps^d) int_{radius - eps sqrt(d)}^inf g(s) (s + eps sqrt(d)/2)^(d-1) ds`.
pub fn lattice_tail_bound(
    envelope: &RadialEnvelope,
    eps: f64,
    d: usize,
    radius: f64,
) -> Result<f64> {
    let h = 0.5 * eps * (d as f64).sqrt();
    let s0 = radius - 2.0 * h;
    if s0 <= 0.0 {
        return Err(invalid(
            "radius",
            format!("cell tail bound needs radius > eps sqrt(d) ({radius} given)"),
        ));
    }
    if !envelope.nonincreasing_from(s0) {
        return Err(invalid(
            "envelope",
            "must be non-increasing beyond the truncation radius",
        ));
    }
    // Binomial expansion of (s + h)^(d-1).
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..d {
        let term = envelope.moment(k as f64, s0)?;
        total += binom * h.powi((d - 1 - k) as i32) * term;
        binom = binom * (d - 1 - k) as f64 / (k + 1) as f64;
    }
    Ok(unit_sphere_area(d) / eps.powi(d as i32) * total)
}

/// Where a lattice sum is taken.
#[derive(Debug, Clone, Copy)]
pub enum SumDomain<'a> {
    Grid(&'a EpsGrid),
    Lattice(&'a Lattice),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedSum {
    pub sum: f64,
    /// Upper bound on the omitted terms beyond the radius.
    pub tail: f64,
}

impl TruncatedSum {
    pub fn upper(&self) -> f64 {
        self.sum + self.tail
    }
}

/// Exact sum of non-negative `f(point, ||point - center||)` over points within `radius`,
/// plus a remainder bound from `envelope`, which must dominate `f` beyond the radius.
///
/// Infinite lattices need an envelope. For bounded grids the envelope is only needed
/// when some grid point lies beyond the radius.
pub fn truncated_grid_sum<F>(
    domain: SumDomain<'_>,
    center: &[f64],
    radius: f64,
    f: F,
    envelope: Option<&RadialEnvelope>,
) -> Result<TruncatedSum>
where
    F: Fn(&[f64], f64) -> f64 + Sync,
{
    if !(radius >= 0.0) {
        return Err(invalid("radius", format!("{radius}")));
    }
    match domain {
        SumDomain::Grid(grid) => {
            if center.len() != grid.dim() {
                return Err(Error::DimensionMismatch {
                    expected: grid.dim(),
                    found: center.len(),
                });
            }
            let points = grid.enumerate_points()?;
            let mut acc = CompensatedSum::new();
            let mut beyond = false;
            for p in points.iter() {
                let r = squared_distance(p, center).sqrt();
                if r <= radius {
                    acc.add(f(p, r));
                } else {
                    beyond = true;
                }
            }
            let tail = if beyond {
                let env = envelope.ok_or(Error::MissingEnvelope)?;
                lattice_tail_bound(env, grid.spacing(), grid.dim(), radius)?
            } else {
                0.0
            };
            Ok(TruncatedSum {
                sum: acc.value(),
                tail,
            })
        }
        SumDomain::Lattice(lattice) => {
            if center.len() != lattice.dim() {
                return Err(Error::DimensionMismatch {
                    expected: lattice.dim(),
                    found: center.len(),
                });
            }
            let env = envelope.ok_or(Error::MissingEnvelope)?;
            let tail = lattice_tail_bound(env, lattice.spacing, lattice.dim(), radius)?;
            let sum = lattice.sum_within(center, radius, f);
            Ok(TruncatedSum { sum, tail })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(v: f64, eps: f64, lo: f64, hi: f64) -> EpsGrid {
        EpsGrid::new(vec![v], eps, ParamBox::new(vec![lo], vec![hi]).unwrap()).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(
            grid1(0.0, 1.0, -1.0, 1.0)
                .enumerate_points()
                .unwrap()
                .coords,
            vec![-1.0, 0.0, 1.0]
        );
        assert_eq!(
            grid1(0.5, 1.0, 0.0, 2.0).enumerate_points().unwrap().coords,
            vec![0.5, 1.5]
        );
        let g = EpsGrid::new(vec![0.0; 2], 0.5, ParamBox::cube(2, 0.0, 1.0).unwrap()).unwrap();
        let pts = g.enumerate_points().unwrap();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts.point(1), &[0.0, 0.5]);
    }

    #[test]
    fn cap_is_enforced() {
        let g =
            EpsGrid::with_cap(vec![0.0], 0.001, ParamBox::cube(1, 0.0, 1.0).unwrap(), 100).unwrap();
        assert!(
            matches!(g.enumerate_points(), Err(Error::GridTooLarge { count, cap: 100 }) if count == 1001.0)
        );
    }

    #[test]
    fn nearest_point_examples() {
        let g = grid1(0.0, 1.0, -3.0, 3.0);
        assert_eq!(g.nearest_point(&[0.4]).unwrap(), vec![0.0]);
        assert_eq!(g.nearest_point(&[0.5]).unwrap(), vec![0.0]);
        assert_eq!(g.nearest_point(&[-0.5]).unwrap(), vec![-1.0]);
        assert!(g.nearest_point(&[3.6]).is_err());
        let g2 = EpsGrid::new(vec![0.0; 2], 0.1, ParamBox::cube(2, -1.0, 1.0).unwrap()).unwrap();
        let p = g2.nearest_point(&[0.26, 0.74]).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.7).abs() < 1e-12);
        let ord = g2.nearest_ordinal(&[0.26, 0.74]).unwrap();
        let pts = g2.enumerate_points().unwrap();
        assert_eq!(pts.point(ord), p.as_slice());
    }

    #[test]
    fn membership() {
        let g = grid1(0.25, 0.5, -1.0, 1.0);
        assert!(g.contains(&[0.75]));
        assert!(!g.contains(&[0.5]));
        assert!(!g.contains(&[1.25]));
    }

    #[test]
    fn gaussian_lattice_sum() {
        let lat = Lattice::new(vec![0.0], 1.0).unwrap();
        let env = RadialEnvelope::gaussian(1.0, 1.0);
        let s = truncated_grid_sum(
            SumDomain::Lattice(&lat),
            &[0.0],
            20.0,
            |_, r| (-r * r).exp(),
            Some(&env),
        )
        .unwrap();
        assert!((s.sum - 1.772_637_204_826_652).abs() < 1e-14);
        assert!(s.tail < 1e-150);
        let z = truncated_grid_sum(
            SumDomain::Lattice(&lat),
            &[0.0],
            20.0,
            |_, _| 0.0,
            Some(&RadialEnvelope::gaussian(0.0, 1.0)),
        )
        .unwrap();
        assert_eq!((z.sum, z.tail), (0.0, 0.0));
        assert!(matches!(
            truncated_grid_sum(SumDomain::Lattice(&lat), &[0.0], 20.0, |_, _| 0.0, None),
            Err(Error::MissingEnvelope)
        ));
    }

    #[test]
    fn cubic_lattice_sum_brackets_zeta() {
        let lat = Lattice::new(vec![0.0], 1.0).unwrap();
        let env = RadialEnvelope::power(1.0, 3.0);
        let s = truncated_grid_sum(
            SumDomain::Lattice(&lat),
            &[0.0],
            2000.0,
            |_, r| if r < 3.0 { 0.0 } else { r.powi(-3) },
            Some(&env),
        )
        .unwrap();
        let exact = 0.154_113_806_319_188_6;
        assert!(s.sum <= exact && exact <= s.upper());
        assert!(s.upper() - s.sum < 1e-6);
    }

    #[test]
    fn moments() {
        // int_0^inf exp(-r^2) dr = sqrt(pi)/2
        let m = radial_moment(0.0, 1.0, 0.0).unwrap();
        assert!((m - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
        let m = radial_moment(-3.0, 0.0, 2.0).unwrap();
        assert!((m - 0.125).abs() < 1e-15);
        let m = radial_moment(-3.0, 0.5, 2.0).unwrap();
        assert!(m < 0.125 && m > 0.0);
        assert!(radial_moment(-1.0, 0.0, 1.0).is_err());
        assert!((unit_sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
    }
}
