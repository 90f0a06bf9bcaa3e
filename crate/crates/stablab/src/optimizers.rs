//! GD, SGD, Nesterov (convex and strongly convex), heavy ball and SGLD.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{empirical_risk, empirical_risk_grad, loss_constants, Dataset, LossConstants, LossSpec, ParamVector};

/// Name and version of the generator behind every random stream.
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.9)";

/// Stream id used for SGD/SGLD sample indices.
pub const INDEX_STREAM: u64 = 0;
/// Stream id used for SGLD Gaussian noise.
pub const NOISE_STREAM: u64 = 1;

/// Relative slack on the `η ≤ 1/β` checks, so that `η = 1/β` computed in
/// floating point is accepted.
const STEP_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepSchedule {
    Fixed { eta0: f64 },
    /// `η_t = η0 · t^(−exponent)`.
    Power { eta0: f64, exponent: f64 },
}

impl StepSchedule {
    pub fn eta0(&self) -> f64 {
        match *self {
            StepSchedule::Fixed { eta0 } | StepSchedule::Power { eta0, .. } => eta0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eta0 = self.eta0();
        if !(eta0.is_finite() && eta0 > 0.0) {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {eta0}")));
        }
        if let StepSchedule::Power { exponent, .. } = *self {
            if !(exponent > 0.0 && exponent <= 1.0) {
                return Err(Error::InvalidParameter(format!("power exponent must lie in (0, 1], got {exponent}")));
            }
        }
        Ok(())
    }
}

/// Step size for the `t`-th update, `t ≥ 1` (`t = 0` is treated as 1).
pub fn step_size(schedule: &StepSchedule, t: u64) -> f64 {
    match *schedule {
        StepSchedule::Fixed { eta0 } => eta0,
        StepSchedule::Power { eta0, exponent } => eta0 * (t.max(1) as f64).powf(-exponent),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Gd,
    Sgd,
    NagConvex,
    NagStronglyConvex { kappa: f64 },
    HeavyBall { momentum: f64 },
    /// `tau = f64::INFINITY` switches the noise off.
    Sgld { temperature: f64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Sgd => "sgd",
            Method::NagConvex => "nag",
            Method::NagStronglyConvex { .. } => "nag_sc",
            Method::HeavyBall { .. } => "hb",
            Method::Sgld { .. } => "sgld",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Method::Sgd | Method::Sgld { .. })
    }
}

/// Momentum of strongly convex NAG, `(√κ − 1)/(√κ + 1)`.
pub fn nag_sc_momentum(kappa: f64) -> f64 {
    let s = kappa.sqrt();
    (s - 1.0) / (s + 1.0)
}

/// Convex NAG momentum `γ_t = (1 − λ_t)/λ_{t+1}` with `λ_0 = 0` and
/// `λ_t = (1 + √(1 + 4λ_{t−1}²))/2`. Defined for `t ≥ 1`; the first update
/// is a plain gradient step.
pub fn nag_momentum(t: u64) -> Result<f64> {
    if t < 1 {
        return Err(Error::InvalidParameter("NAG momentum is defined for t >= 1".into()));
    }
    let mut lambda = 0.0f64;
    for _ in 0..t {
        lambda = next_lambda(lambda);
    }
    Ok((1.0 - lambda) / next_lambda(lambda))
}

fn next_lambda(prev: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * prev * prev).sqrt()) / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub schedule: StepSchedule,
    pub seed: u64,
    pub horizon: usize,
    /// Smoothness used for step-size validation instead of the loss's own
    /// `β`. Needed for losses with `β = 0`.
    pub smoothness_override: Option<f64>,
    /// Record `R_S(θ_t)` along the trace.
    pub record_risk: bool,
}

impl OptimizerConfig {
    pub fn new(method: Method, schedule: StepSchedule, horizon: usize) -> Self {
        OptimizerConfig { method, schedule, seed: 0, horizon, smoothness_override: None, record_risk: true }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_smoothness(mut self, beta: f64) -> Self {
        self.smoothness_override = Some(beta);
        self
    }

    pub fn without_risk(mut self) -> Self {
        self.record_risk = false;
        self
    }

    /// Check the method's step-size and parameter preconditions.
    pub fn validate(&self, constants: &LossConstants) -> Result<()> {
        self.schedule.validate()?;
        let beta = self.smoothness_override.unwrap_or(constants.smoothness);
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("smoothness must be nonnegative, got {beta}")));
        }
        let eta = self.schedule.eta0();
        let step_err = |detail: String| Error::StepSize { method: self.method.name().into(), detail };
        let check_inverse_beta = || {
            if beta > 0.0 && eta > (1.0 + STEP_SLACK) / beta {
                Err(step_err(format!("eta = {eta} exceeds 1/beta = {}", 1.0 / beta)))
            } else {
                Ok(())
            }
        };
        match self.method {
            Method::Gd | Method::Sgd | Method::NagConvex => check_inverse_beta()?,
            Method::NagStronglyConvex { kappa } => {
                if !(kappa.is_finite() && kappa >= 1.0) {
                    return Err(Error::InvalidParameter(format!("kappa must be at least 1, got {kappa}")));
                }
                check_inverse_beta()?;
            }
            Method::HeavyBall { momentum } => {
                if !(0.0..1.0).contains(&momentum) {
                    return Err(Error::InvalidParameter(format!("momentum must lie in [0, 1), got {momentum}")));
                }
                if beta > 0.0 && eta >= (1.0 - momentum) / beta {
                    return Err(step_err(format!(
                        "eta = {eta} must be below (1 - gamma)/beta = {}",
                        (1.0 - momentum) / beta
                    )));
                }
            }
            Method::Sgld { temperature } => {
                if temperature.is_nan() || temperature <= 0.0 {
                    return Err(Error::InvalidParameter(format!("temperature must be positive, got {temperature}")));
                }
            }
        }
        Ok(())
    }
}

/// Iterates `θ_0 … θ_T` plus per-step diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    pub iterates: Vec<ParamVector>,
    /// `R_S(θ_t)` for `t = 0..=T`, empty when risk recording is off.
    pub risk: Vec<f64>,
    /// Step size used by update `t = 1..=T`.
    pub step_sizes: Vec<f64>,
}

impl IterateTrace {
    pub fn last(&self) -> &ParamVector {
        self.iterates.last().expect("trace holds at least θ_0")
    }
}

/// Seeded generator for one stream of a run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn axpy(w: f64, x: &[f64], out: &mut [f64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += w * v;
    }
}

fn point_grad(spec: &LossSpec, theta: &[f64], sample: &Dataset, i: usize) -> Result<Vec<f64>> {
    let mut g = vec![0.0; theta.len()];
    spec.add_grad(theta, sample.point(i), 1.0, &mut g)?;
    Ok(g)
}

/// Run the configured method for `horizon` steps from `theta0` on `R_S`.
pub fn run(config: &OptimizerConfig, spec: &LossSpec, sample: &Dataset, theta0: &ParamVector) -> Result<IterateTrace> {
    let constants = loss_constants(spec, sample)?;
    config.validate(&constants)?;
    if let Some(d) = sample.dim() {
        if d != theta0.dim() {
            return Err(Error::DimensionMismatch { expected: d, got: theta0.dim() });
        }
    }
    let horizon = config.horizon;
    let n = sample.len();
    let full_grad = |theta: &[f64]| -> Result<Vec<f64>> {
        Ok(empirical_risk_grad(spec, &ParamVector::from_raw(theta.to_vec()), sample)?.into_vec())
    };

    let mut index_rng = stream_rng(config.seed, INDEX_STREAM);
    let mut noise_rng = stream_rng(config.seed, NOISE_STREAM);

    let mut iterates = Vec::with_capacity(horizon + 1);
    iterates.push(theta0.clone());
    let mut step_sizes = Vec::with_capacity(horizon);
    let mut prev = theta0.as_slice().to_vec();
    let mut cur = prev.clone();

    for t in 1..=horizon {
        let eta = step_size(&config.schedule, t as u64);
        step_sizes.push(eta);
        let next = match config.method {
            Method::Gd => {
                let mut next = cur.clone();
                axpy(-eta, &full_grad(&cur)?, &mut next);
                next
            }
            Method::Sgd => {
                let i = index_rng.random_range(0..n);
                let mut next = cur.clone();
                axpy(-eta, &point_grad(spec, &cur, sample, i)?, &mut next);
                next
            }
            Method::Sgld { temperature } => {
                let i = index_rng.random_range(0..n);
                let mut next = cur.clone();
                axpy(-eta, &point_grad(spec, &cur, sample, i)?, &mut next);
                let scale = (2.0 * eta / temperature).sqrt();
                for v in &mut next {
                    let w: f64 = noise_rng.sample(StandardNormal);
                    *v += scale * w;
                }
                next
            }
            Method::NagConvex => {
                // w_t = (1 − γ_t) θ_t + γ_t θ_{t−1}; the step from θ_0 is plain GD.
                let gamma = if t == 1 { 0.0 } else { nag_momentum(t as u64 - 1)? };
                let w: Vec<f64> = cur.iter().zip(&prev).map(|(c, p)| (1.0 - gamma) * c + gamma * p).collect();
                let mut next = w.clone();
                axpy(-eta, &full_grad(&w)?, &mut next);
                next
            }
            Method::NagStronglyConvex { kappa } => {
                // w_t = (1 + γ) θ_t − γ θ_{t−1}, with θ_{−1} = θ_0.
                let gamma = nag_sc_momentum(kappa);
                let w: Vec<f64> = cur.iter().zip(&prev).map(|(c, p)| (1.0 + gamma) * c - gamma * p).collect();
                let mut next = w.clone();
                axpy(-eta, &full_grad(&w)?, &mut next);
                next
            }
            Method::HeavyBall { momentum } => {
                let mut next: Vec<f64> = cur.iter().zip(&prev).map(|(c, p)| c + momentum * (c - p)).collect();
                axpy(-eta, &full_grad(&cur)?, &mut next);
                next
            }
        };
        if let Some(j) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("iterate diverged at step {t}, coordinate {j}")));
        }
        prev = std::mem::replace(&mut cur, next);
        iterates.push(ParamVector::from_raw(cur.clone()));
    }

    let risk = if config.record_risk {
        iterates.iter().map(|th| empirical_risk(spec, th, sample)).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(IterateTrace { iterates, risk, step_sizes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{DataPoint, QuadraticForm};
    use approx::assert_abs_diff_eq;

    #[test]
    fn step_size_examples() {
        assert_eq!(step_size(&StepSchedule::Fixed { eta0: 0.1 }, 7), 0.1);
        assert_eq!(step_size(&StepSchedule::Power { eta0: 1.0, exponent: 0.5 }, 4), 0.5);
        assert_abs_diff_eq!(step_size(&StepSchedule::Power { eta0: 0.5, exponent: 1.0 }, 10), 0.05, epsilon = 1e-17);
    }

    #[test]
    fn nag_momentum_examples() {
        assert_eq!(nag_momentum(1).unwrap(), 0.0);
        // Independent oracle: the closed-form λ values.
        let l2 = (1.0 + 5f64.sqrt()) / 2.0;
        let l3 = (1.0 + (1.0 + 4.0 * l2 * l2).sqrt()) / 2.0;
        assert_abs_diff_eq!(nag_momentum(2).unwrap(), (1.0 - l2) / l3, epsilon = 1e-15);
        assert_abs_diff_eq!(nag_momentum(2).unwrap(), -0.28175, epsilon = 1e-5);
        assert!(nag_momentum(0).is_err());
    }

    #[test]
    fn nag_momentum_stays_in_range() {
        let mut lambda = 0.0;
        for t in 1..=10_000u64 {
            lambda = next_lambda(lambda);
            let gamma = (1.0 - lambda) / next_lambda(lambda);
            assert!(gamma > -1.0 && gamma <= 0.0, "t = {t}: {gamma}");
        }
        assert_eq!(nag_momentum(10).unwrap(), {
            let mut l = 0.0;
            for _ in 0..10 {
                l = next_lambda(l);
            }
            (1.0 - l) / next_lambda(l)
        });
    }

    #[test]
    fn nag_sc_momentum_formula() {
        assert_eq!(nag_sc_momentum(4.0), 1.0 / 3.0);
        assert_eq!(nag_sc_momentum(1.0), 0.0);
    }

    fn scalar_quadratic(beta: f64) -> (LossSpec, Dataset) {
        let spec = LossSpec::quadratic(QuadraticForm::diagonal(&[beta]).unwrap(), 1.0).unwrap();
        let s = Dataset::from_points(&[DataPoint::labeled(vec![0.0], 1).unwrap()]).unwrap();
        (spec, s)
    }

    #[test]
    fn gd_one_step_solves_scalar_quadratic() {
        let beta = 4.0;
        let (spec, s) = scalar_quadratic(beta);
        let cfg = OptimizerConfig::new(Method::Gd, StepSchedule::Fixed { eta0: 1.0 / beta }, 1);
        let tr = run(&cfg, &spec, &s, &ParamVector::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(tr.iterates.len(), 2);
        assert_eq!(tr.iterates[1][0], 0.0);
        assert_eq!(tr.step_sizes, vec![0.25]);
        assert_eq!(tr.risk, vec![2.0, 0.0]);
    }

    #[test]
    fn heavy_ball_without_momentum_is_gd() {
        let (spec, s) = scalar_quadratic(1.0);
        let th0 = ParamVector::new(vec![3.0]).unwrap();
        let gd = run(&OptimizerConfig::new(Method::Gd, StepSchedule::Fixed { eta0: 0.3 }, 20), &spec, &s, &th0).unwrap();
        let hb = run(
            &OptimizerConfig::new(Method::HeavyBall { momentum: 0.0 }, StepSchedule::Fixed { eta0: 0.3 }, 20),
            &spec,
            &s,
            &th0,
        )
        .unwrap();
        assert_eq!(gd, hb);
    }

    #[test]
    fn step_size_preconditions() {
        let c = LossConstants { lipschitz: 1.0, smoothness: 1.0, strong_convexity: 0.0, domain: 1.0 };
        let fixed = |eta0| StepSchedule::Fixed { eta0 };
        assert!(OptimizerConfig::new(Method::Gd, fixed(1.0), 1).validate(&c).is_ok());
        assert!(matches!(
            OptimizerConfig::new(Method::Gd, fixed(1.01), 1).validate(&c),
            Err(Error::StepSize { .. })
        ));
        let hb = OptimizerConfig::new(Method::HeavyBall { momentum: 0.8 }, fixed(0.2), 1);
        assert!(matches!(hb.validate(&c), Err(Error::StepSize { .. })));
        let hb = OptimizerConfig::new(Method::HeavyBall { momentum: 0.8 }, fixed(0.19), 1);
        assert!(hb.validate(&c).is_ok());
        assert!(OptimizerConfig::new(Method::HeavyBall { momentum: 1.0 }, fixed(0.01), 1).validate(&c).is_err());
        assert!(OptimizerConfig::new(Method::Sgld { temperature: 0.0 }, fixed(0.1), 1).validate(&c).is_err());
        assert!(OptimizerConfig::new(Method::NagStronglyConvex { kappa: 0.5 }, fixed(0.1), 1).validate(&c).is_err());
        // β = 0 imposes no step limit unless overridden.
        let flat = LossConstants { smoothness: 0.0, ..c };
        assert!(OptimizerConfig::new(Method::Gd, fixed(50.0), 1).validate(&flat).is_ok());
        assert!(OptimizerConfig::new(Method::Gd, fixed(50.0), 1).with_smoothness(1.0).validate(&flat).is_err());
    }
}
