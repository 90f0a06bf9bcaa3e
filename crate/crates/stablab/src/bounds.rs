//! Closed-form stability bounds, convergence lower bounds, minimax bounds
//! and the early-stopping horizon.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossConstants;
use crate::optimizers::{step_size, Method, StepSchedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    ConvexSmooth,
    StronglyConvexSmooth,
}

impl Setting {
    pub fn name(&self) -> &'static str {
        match self {
            Setting::ConvexSmooth => "convex smooth",
            Setting::StronglyConvexSmooth => "strongly convex smooth",
        }
    }
}

/// Arguments of a bound evaluation. Momentum, temperature and `κ` travel
/// inside `method`; `η`, `η0` and the power exponent inside `schedule`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub method: Method,
    pub setting: Setting,
    pub constants: LossConstants,
    pub schedule: StepSchedule,
    pub horizon: u64,
    pub n: u64,
}

impl BoundQuery {
    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_n(mut self, n: u64) -> Self {
        self.n = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        self.schedule.validate()?;
        let c = &self.constants;
        if !(c.lipschitz.is_finite() && c.lipschitz > 0.0) {
            return Err(Error::InvalidParameter(format!("Lipschitz constant must be positive, got {}", c.lipschitz)));
        }
        if self.setting == Setting::StronglyConvexSmooth
            && !(c.strong_convexity > 0.0 && c.strong_convexity <= c.smoothness)
        {
            return Err(Error::InvalidParameter(format!(
                "strongly convex setting needs 0 < alpha <= beta, got alpha = {}, beta = {}",
                c.strong_convexity, c.smoothness
            )));
        }
        Ok(())
    }

    fn no_bound(&self) -> Error {
        Error::NoBound { method: self.method.name().into(), setting: self.setting.name() }
    }

    fn fixed_eta(&self) -> Result<f64> {
        match self.schedule {
            StepSchedule::Fixed { eta0 } => Ok(eta0),
            StepSchedule::Power { .. } => Err(self.no_bound()),
        }
    }
}

/// Universal constants of the lower bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for UniversalConstants {
    fn default() -> Self {
        let c1 = 256.0 * 6f64.sqrt();
        UniversalConstants { c1, c2: 16.0 * c1 * c1 / 3.0, c3: 192.0 }
    }
}

impl UniversalConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("C1", self.c1), ("C2", self.c2), ("C3", self.c3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// First `t ≥ 1` with `η_t τ L² < 1`, searched up to `horizon`.
pub fn sgld_burn_in(schedule: &StepSchedule, temperature: f64, lipschitz: f64, horizon: u64) -> Option<u64> {
    (1..=horizon).find(|&t| step_size(schedule, t) * temperature * lipschitz * lipschitz < 1.0)
}

/// Uniform stability bound of `q.method` after `q.horizon` steps.
pub fn stability_bound(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    let t = q.horizon as f64;
    let n = q.n as f64;
    let l = q.constants.lipschitz;
    if q.horizon == 0 {
        // Still reject unsupported combinations.
        stability_formula_exists(q)?;
        return Ok(0.0);
    }
    match q.setting {
        Setting::ConvexSmooth => match (q.method, q.schedule) {
            (Method::Gd | Method::Sgd, StepSchedule::Fixed { eta0 }) => Ok(2.0 * eta0 * l * l * t / n),
            (Method::Sgd, StepSchedule::Power { eta0, exponent }) => Ok(2.0 * eta0 * l * l * t.powf(1.0 - exponent) / n),
            (Method::Gd, StepSchedule::Power { .. }) => {
                let total: f64 = (1..=q.horizon).map(|s| step_size(&q.schedule, s)).sum();
                Ok(2.0 * l * l * total / n)
            }
            (Method::NagConvex, StepSchedule::Fixed { eta0 }) => Ok(4.0 * eta0 * l * l * t * t / n),
            (Method::HeavyBall { momentum }, StepSchedule::Fixed { eta0 }) => {
                Ok(4.0 * eta0 * l * l * t / ((1.0 - momentum.sqrt()) * n))
            }
            (Method::Sgld { temperature }, schedule) => {
                let k0 = sgld_burn_in(&schedule, temperature, l, q.horizon).unwrap_or(q.horizon);
                let tail: f64 = (k0 + 1..=q.horizon).map(|s| step_size(&schedule, s)).sum();
                Ok((l / n) * (k0 as f64 + l * (temperature * tail).sqrt()))
            }
            _ => Err(q.no_bound()),
        },
        Setting::StronglyConvexSmooth => {
            let alpha = q.constants.strong_convexity;
            let beta = q.constants.smoothness;
            let kappa = beta / alpha;
            match q.method {
                Method::Gd => {
                    let eta = q.fixed_eta()?;
                    Ok(4.0 * l * l / (alpha * n) * (1.0 - (1.0 - eta * beta / (1.0 + kappa)).powf(t)))
                }
                Method::Sgd => {
                    let eta = q.fixed_eta()?;
                    Ok(2.0 * l * l / (alpha * n) * (1.0 - (1.0 - eta * alpha / 2.0).powf(t)))
                }
                Method::NagStronglyConvex { kappa: k } => {
                    q.fixed_eta()?;
                    Ok(4.0 * l * l / (alpha * n) * (1.0 - (1.0 - 1.0 / k.sqrt()).powf(t)))
                }
                _ => Err(q.no_bound()),
            }
        }
    }
}

fn stability_formula_exists(q: &BoundQuery) -> Result<()> {
    let ok = match q.setting {
        Setting::ConvexSmooth => matches!(
            (q.method, q.schedule),
            (Method::Gd | Method::Sgd, _)
                | (Method::NagConvex | Method::HeavyBall { .. }, StepSchedule::Fixed { .. })
                | (Method::Sgld { .. }, _)
        ),
        Setting::StronglyConvexSmooth => matches!(
            (q.method, q.schedule),
            (Method::Gd | Method::Sgd | Method::NagStronglyConvex { .. }, StepSchedule::Fixed { .. })
        ),
    };
    if ok {
        Ok(())
    } else {
        Err(q.no_bound())
    }
}

/// `T → ∞` limit of the strongly convex stability bounds.
pub fn stability_limit(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    stability_formula_exists(q)?;
    if q.setting != Setting::StronglyConvexSmooth {
        return Ok(f64::INFINITY);
    }
    let l = q.constants.lipschitz;
    let factor = if q.method == Method::Sgd { 2.0 } else { 4.0 };
    Ok(factor * l * l / (q.constants.strong_convexity * q.n as f64))
}

/// Minimax lower bound: `R²β/(C1 √n)` (convex) or `R²β/(C3 n)` (strongly
/// convex).
pub fn minimax_bound(setting: Setting, n: u64, radius: f64, beta: f64, consts: &UniversalConstants) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    consts.validate()?;
    let n = n as f64;
    Ok(match setting {
        Setting::ConvexSmooth => radius * radius * beta / (consts.c1 * n.sqrt()),
        Setting::StronglyConvexSmooth => radius * radius * beta / (consts.c3 * n),
    })
}

/// Lower bound on the optimization error implied by the stability bound.
///
/// Convex: `R⁴β² / (C2 · n · stab(T))` with the stability bound evaluated at
/// `L = Rβ`; this is `R²/(2C2ηT)` for GD and `R²/(4C2ηT²)` for NAG.
/// Strongly convex: `βR²/(C3 n) − stab(T)` at `L = Rβ`, which may be
/// negative. With `clamp` the result is floored at 0.
pub fn convergence_lower_bound(q: &BoundQuery, consts: &UniversalConstants, clamp: bool) -> Result<f64> {
    if q.horizon == 0 {
        return Err(Error::InvalidParameter("convergence lower bound needs T >= 1".into()));
    }
    consts.validate()?;
    let r = q.constants.domain;
    let beta = q.constants.smoothness;
    if !(r > 0.0 && beta > 0.0) {
        return Err(Error::InvalidParameter("lower bound needs positive R and beta".into()));
    }
    let mut scaled = *q;
    scaled.constants.lipschitz = r * beta;
    let stab = stability_bound(&scaled)?;
    let n = q.n as f64;
    let value = match q.setting {
        Setting::ConvexSmooth => r.powi(4) * beta * beta / (consts.c2 * n * stab),
        Setting::StronglyConvexSmooth => beta * r * r / (consts.c3 * n) - stab,
    };
    Ok(if clamp { value.max(0.0) } else { value })
}

/// True iff `stab + opt ≥ mm`.
pub fn tradeoff_check(stab: f64, opt: f64, mm: f64) -> Result<bool> {
    if stab < 0.0 || opt < 0.0 || mm < 0.0 || [stab, opt, mm].iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("trade-off inputs must be nonnegative".into()));
    }
    Ok(stab + opt >= mm)
}

/// Early-stopping horizon `round(√(n/(η²L²R²)))`, at least 1.
pub fn early_stopping_t(n: u64, eta: f64, lipschitz: f64, radius: f64) -> Result<u64> {
    if n == 0 || [eta, lipschitz, radius].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter("early stopping needs positive n, eta, L, R".into()));
    }
    let t = (n as f64 / (eta * eta * lipschitz * lipschitz * radius * radius)).sqrt().round();
    Ok((t as u64).max(1))
}

/// Horizon exponent listed for each convex method: GD and SGD 1, NAG 2,
/// HB 1, SGD with `t^{−α}` steps `1 − α`, SGLD `1/4`.
pub fn tabulated_exponent(method: Method, schedule: &StepSchedule) -> Option<f64> {
    match (method, schedule) {
        (Method::Gd | Method::Sgd, StepSchedule::Fixed { .. }) => Some(1.0),
        (Method::Sgd, StepSchedule::Power { exponent, .. }) => Some(1.0 - exponent),
        (Method::NagConvex, StepSchedule::Fixed { .. }) => Some(2.0),
        (Method::HeavyBall { .. }, StepSchedule::Fixed { .. }) => Some(1.0),
        (Method::Sgld { .. }, _) => Some(0.25),
        _ => None,
    }
}
