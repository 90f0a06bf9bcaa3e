//! Two-point minimax construction: the pair of symbol distributions, the
//! population risks of the two designed losses, the Φ(r) separation
//! certificates and exact TV/KL values for the n-fold products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{LossSpec, PointRef};

/// Largest `n` for which `tv_kl_product` enumerates exactly.
pub const MAX_ENUMERATION_N: u64 = 24;

const STATIONARY_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Convex,
    StronglyConvex,
}

/// A distribution on {−1, +1} described by `P(Z = −1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointDistribution {
    pub p_minus: f64,
    pub n: u64,
    /// 1 or 2.
    pub identity: u8,
}

impl TwoPointDistribution {
    pub fn p_plus(&self) -> f64 {
        1.0 - self.p_minus
    }
}

/// Half the gap between the two distributions, `1/√(24n)`.
pub fn separation(n: u64) -> f64 {
    1.0 / (24.0 * n as f64).sqrt()
}

pub fn lecam_distributions(n: u64) -> Result<(TwoPointDistribution, TwoPointDistribution)> {
    if n < 1 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let d = separation(n);
    Ok((
        TwoPointDistribution { p_minus: 0.5 + d, n, identity: 1 },
        TwoPointDistribution { p_minus: 0.5 - d, n, identity: 2 },
    ))
}

fn spec_for(variant: Variant, beta: f64, r: f64) -> Result<LossSpec> {
    // The domain size plays no role in the loss values.
    match variant {
        Variant::Convex => LossSpec::lecam_convex(beta, r, 2.0 * r),
        Variant::StronglyConvex => LossSpec::lecam_strongly_convex(beta, r, 2.0 * r),
    }
}

fn distribution(v: u8, n: u64) -> Result<TwoPointDistribution> {
    let (p1, p2) = lecam_distributions(n)?;
    match v {
        1 => Ok(p1),
        2 => Ok(p2),
        _ => Err(Error::InvalidParameter(format!("distribution identity must be 1 or 2, got {v}"))),
    }
}

/// `E_{P_v} l(θ; Z)` as a function of `θ[1]`.
pub fn population_risk(variant: Variant, v: u8, theta1: f64, beta: f64, r: f64, n: u64) -> Result<f64> {
    let p = distribution(v, n)?;
    let spec = spec_for(variant, beta, r)?;
    let th = [theta1];
    Ok(p.p_minus * spec.value_at(&th, PointRef::Symbol(-1))? + p.p_plus() * spec.value_at(&th, PointRef::Symbol(1))?)
}

/// First coordinate of the population minimizer under `P_v`.
///
/// Strongly convex: `r (P(+1) − P(−1))`, i.e. `−r/√(6n)` for `v = 1`.
/// Convex: bisection on the derivative over `[−r, −r/2]` (`v = 1`) or `[r/2, r]`
/// (`v = 2`).
pub fn population_minimizer(variant: Variant, v: u8, beta: f64, r: f64, n: u64) -> Result<f64> {
    let p = distribution(v, n)?;
    match variant {
        Variant::StronglyConvex => Ok(r * (p.p_plus() - p.p_minus)),
        Variant::Convex => {
            let (lo, hi) = if v == 1 { (-r, -0.5 * r) } else { (0.5 * r, r) };
            bisect_stationary(|x| population_slope(variant, v, x, beta, r, n), lo, hi)
        }
    }
}

/// `d/dθ1 E_{P_v} l(θ; Z)`.
fn population_slope(variant: Variant, v: u8, theta1: f64, beta: f64, r: f64, n: u64) -> Result<f64> {
    let p = distribution(v, n)?;
    let spec = spec_for(variant, beta, r)?;
    let mut g = [0.0];
    spec.add_grad(&[theta1], PointRef::Symbol(-1), p.p_minus, &mut g)?;
    spec.add_grad(&[theta1], PointRef::Symbol(1), p.p_plus(), &mut g)?;
    Ok(g[0])
}

/// Bisection for the zero of an increasing slope on `[lo, hi]`.
fn bisect_stationary(slope: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    while hi - lo > STATIONARY_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimal population risk under `P_v`.
pub fn population_min_value(variant: Variant, v: u8, beta: f64, r: f64, n: u64) -> Result<f64> {
    match variant {
        Variant::StronglyConvex => {
            distribution(v, n)?;
            Ok(0.5 * beta * (r * r - r * r / (6.0 * n as f64)))
        }
        Variant::Convex => {
            let x = population_minimizer(variant, v, beta, r, n)?;
            population_risk(variant, v, x, beta, r, n)
        }
    }
}

/// `E_{P_v} l(θ; Z) − min_θ E_{P_v} l(θ; Z)`.
pub fn population_excess_risk(variant: Variant, v: u8, theta1: f64, beta: f64, r: f64, n: u64) -> Result<f64> {
    Ok(population_risk(variant, v, theta1, beta, r, n)? - population_min_value(variant, v, beta, r, n)?)
}

/// Separation `Φ(r)`: `βr²/√(96n)` (convex) or `βr²/(12n)` (strongly
/// convex).
pub fn phi(variant: Variant, beta: f64, r: f64, n: u64) -> f64 {
    match variant {
        Variant::Convex => beta * r * r / (96.0 * n as f64).sqrt(),
        Variant::StronglyConvex => beta * r * r / (12.0 * n as f64),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiCertificate {
    pub variant: Variant,
    pub r: f64,
    pub beta: f64,
    pub n: u64,
    pub phi_formula: f64,
    pub grid_min: f64,
    pub pass: bool,
}

/// Relative slack allowed between the grid minimum and `Φ(r)`.
pub const PHI_TOLERANCE: f64 = 1e-6;

/// Minimum excess risk over `{θ1 : |θ1 − θ*_v| ≥ r}` for both `v`, scanned
/// on a grid over `[−3r, 3r]` plus the two boundary points `θ*_v ± r`.
///
/// Outside `|θ1| ≥ 3r/2` both losses are linear in `θ1` and the risk grows
/// outward, so the scan covers the minimum.
pub fn phi_certificate(variant: Variant, n: u64, beta: f64, r: f64, resolution: f64) -> Result<PhiCertificate> {
    if !(beta > 0.0 && r > 0.0) {
        return Err(Error::InvalidParameter("beta and r must be positive".into()));
    }
    if !(resolution > 0.0 && resolution <= r / 200.0) {
        return Err(Error::InvalidParameter(format!(
            "grid resolution {resolution} is coarser than r/200 = {}",
            r / 200.0
        )));
    }
    let steps = (6.0 * r / resolution).ceil() as usize;
    let mut grid_min = f64::INFINITY;
    for v in [1u8, 2] {
        let center = population_minimizer(variant, v, beta, r, n)?;
        let floor = population_min_value(variant, v, beta, r, n)?;
        let mut consider = |x: f64| -> Result<()> {
            if (x - center).abs() >= r {
                grid_min = grid_min.min(population_risk(variant, v, x, beta, r, n)? - floor);
            }
            Ok(())
        };
        consider(center - r)?;
        consider(center + r)?;
        for k in 0..=steps {
            consider(-3.0 * r + 6.0 * r * k as f64 / steps as f64)?;
        }
    }
    let phi_formula = phi(variant, beta, r, n);
    Ok(PhiCertificate {
        variant,
        r,
        beta,
        n,
        phi_formula,
        grid_min,
        pass: grid_min >= phi_formula * (1.0 - PHI_TOLERANCE),
    })
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// Exact total variation between the n-fold products of `P1` and `P2`, and
/// `n · KL(P1 ‖ P2)`.
pub fn tv_kl_product(n: u64) -> Result<(f64, f64)> {
    if !(1..=MAX_ENUMERATION_N).contains(&n) {
        return Err(Error::Range(format!("n = {n} is outside the enumeration range 1..={MAX_ENUMERATION_N}")));
    }
    let (p1, p2) = lecam_distributions(n)?;
    // Outcomes with the same number of +1 symbols share their probability.
    let mut tv = 0.0;
    for k in 0..=n {
        let c = ln_binomial(n, k);
        let a = (c + k as f64 * p1.p_plus().ln() + (n - k) as f64 * p1.p_minus.ln()).exp();
        let b = (c + k as f64 * p2.p_plus().ln() + (n - k) as f64 * p2.p_minus.ln()).exp();
        tv += (a - b).abs();
    }
    tv *= 0.5;
    let two_delta = 1.0 / (6.0 * n as f64).sqrt();
    let kl = n as f64 * two_delta * ((1.0 + two_delta) / (1.0 - two_delta)).ln();
    Ok((tv, kl))
}

/// Minimal worst-case error of a test between `P1ⁿ` and `P2ⁿ`, `(1 − tv)/2`.
pub fn bayes_test_error(n: u64) -> Result<f64> {
    Ok(bayes_error_from_tv(tv_kl_product(n)?.0))
}

pub fn bayes_error_from_tv(tv: f64) -> f64 {
    0.5 * (1.0 - tv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn distributions() {
        let (p1, p2) = lecam_distributions(6).unwrap();
        assert_abs_diff_eq!(p1.p_minus, 7.0 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p1.p_minus, p2.p_plus(), epsilon = 1e-15);
        for n in 1..50 {
            let (p1, _) = lecam_distributions(n).unwrap();
            assert_abs_diff_eq!(p1.p_minus + p1.p_plus(), 1.0, epsilon = 1e-15);
            assert!(p1.p_minus > 0.5 && p1.p_minus <= 0.75);
        }
        assert!(lecam_distributions(1_000_000).unwrap().0.p_minus - 0.5 < 1e-3);
        assert!(lecam_distributions(0).is_err());
    }

    #[test]
    fn strongly_convex_minimizer() {
        for n in [1u64, 3, 10] {
            let x = population_minimizer(Variant::StronglyConvex, 1, 1.0, 1.0, n).unwrap();
            assert_abs_diff_eq!(x, -1.0 / (6.0 * n as f64).sqrt(), epsilon = 1e-15);
            assert_abs_diff_eq!(population_excess_risk(Variant::StronglyConvex, 1, x, 1.0, 1.0, n).unwrap(), 0.0, epsilon = 1e-15);
        }
        let x = population_minimizer(Variant::StronglyConvex, 1, 1.0, 1.0, 1).unwrap();
        assert!(population_excess_risk(Variant::StronglyConvex, 1, x + 1.0, 1.0, 1.0, 1).unwrap() >= 1.0 / 12.0 - 1e-15);
    }

    #[test]
    fn convex_minimizer_matches_stationarity() {
        // On [−r, −r/2] the −1 loss is in its quadratic zone and the +1 loss in
        // its linear zone, so the derivative vanishes at −r + r p₊/(4 p₋).
        for n in [1u64, 4, 16, 64] {
            for (beta, r) in [(1.0, 1.0), (2.5, 0.4)] {
                let (p1, _) = lecam_distributions(n).unwrap();
                let oracle = -r + r * p1.p_plus() / (4.0 * p1.p_minus);
                let x = population_minimizer(Variant::Convex, 1, beta, r, n).unwrap();
                assert_abs_diff_eq!(x, oracle, epsilon = 1e-12);
                let y = population_minimizer(Variant::Convex, 2, beta, r, n).unwrap();
                assert_abs_diff_eq!(y, -oracle, epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(population_minimizer(Variant::Convex, 1, 1.0, 1.0, 1).unwrap(), -0.8949, epsilon = 1e-4);
    }

    #[test]
    fn convex_excess_risk_nonnegative() {
        for n in [1u64, 4, 16, 64] {
            for v in [1u8, 2] {
                for k in 0..=4000 {
                    let x = -4.0 + 8.0 * k as f64 / 4000.0;
                    assert!(population_excess_risk(Variant::Convex, v, x, 1.0, 1.0, n).unwrap() >= -1e-15);
                }
            }
        }
    }

    #[test]
    fn phi_examples() {
        let c = phi_certificate(Variant::Convex, 1, 1.0, 1.0, 1.0 / 400.0).unwrap();
        assert_abs_diff_eq!(c.phi_formula, 0.102062, epsilon = 1e-6);
        assert!(c.pass);
        let s = phi_certificate(Variant::StronglyConvex, 1, 1.0, 1.0, 1.0 / 400.0).unwrap();
        assert_abs_diff_eq!(s.phi_formula, 1.0 / 12.0, epsilon = 1e-15);
        assert!(s.pass);
        for variant in [Variant::Convex, Variant::StronglyConvex] {
            assert_abs_diff_eq!(phi(variant, 1.3, 1.4, 5), 4.0 * phi(variant, 1.3, 0.7, 5), epsilon = 1e-15);
        }
        assert!(phi_certificate(Variant::Convex, 1, 1.0, 1.0, 0.01).is_err());
    }

    #[test]
    fn tv_examples() {
        let (tv, _) = tv_kl_product(1).unwrap();
        assert_abs_diff_eq!(tv, 1.0 / 6f64.sqrt(), epsilon = 1e-15);
        let (_, kl) = tv_kl_product(6).unwrap();
        assert_abs_diff_eq!(kl, 1.4f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(kl, 0.336472, epsilon = 1e-6);
        assert!(tv_kl_product(0).is_err());
        assert!(tv_kl_product(25).is_err());
        assert_eq!(bayes_error_from_tv(0.0), 0.5);
        assert_eq!(bayes_error_from_tv(0.5), 0.25);
    }

    #[test]
    fn tv_matches_brute_force_enumeration() {
        for n in 1..=12u64 {
            let (p1, p2) = lecam_distributions(n).unwrap();
            let mut tv = 0.0;
            for mask in 0u32..(1 << n) {
                let plus = mask.count_ones() as i32;
                let minus = n as i32 - plus;
                let a = p1.p_plus().powi(plus) * p1.p_minus.powi(minus);
                let b = p2.p_plus().powi(plus) * p2.p_minus.powi(minus);
                tv += (a - b).abs();
            }
            assert_abs_diff_eq!(tv_kl_product(n).unwrap().0, 0.5 * tv, epsilon = 1e-13);
        }
    }
}
