//! Empirical stability: coupled runs on perturbed samples, repeat averaging,
//! log-log slope fits and risk decompositions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::losses::{empirical_risk, loss_constants, DataPoint, Dataset, LossSpec, ParamVector};
use crate::optimizers::{run, stream_rng, Method, OptimizerConfig, StepSchedule};

/// Two samples that agree everywhere except at `index`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbedPair {
    pub original: Dataset,
    pub perturbed: Dataset,
    /// 0-based position of the replaced point.
    pub index: usize,
    pub replacement: DataPoint,
}

pub fn make_perturbed_pair(sample: &Dataset, index: usize, replacement: DataPoint) -> Result<PerturbedPair> {
    let perturbed = sample.with_replaced(index, &replacement)?;
    Ok(PerturbedPair { original: sample.clone(), perturbed, index, replacement })
}

/// Per-iteration gaps between the two coupled runs, for `t = 0..=T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityTrace {
    pub param_gap: Vec<f64>,
    pub sup_loss_gap: Vec<f64>,
}

/// `max_z |l(θ; z) − l(θ'; z)|` over the holdout points.
pub fn estimate_sup_loss_gap(theta: &ParamVector, other: &ParamVector, spec: &LossSpec, holdout: &Dataset) -> Result<f64> {
    if holdout.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut worst = 0.0f64;
    for z in holdout.iter() {
        let a = spec.value_at(theta.as_slice(), z)?;
        let b = spec.value_at(other.as_slice(), z)?;
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Run `config` on both samples of `pair` with shared initialization and
/// shared random streams, and record the gaps.
pub fn run_pair(
    config: &OptimizerConfig,
    spec: &LossSpec,
    pair: &PerturbedPair,
    holdout: &Dataset,
    theta0: &ParamVector,
) -> Result<StabilityTrace> {
    if holdout.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cfg = OptimizerConfig { record_risk: false, ..config.clone() };
    let a = run(&cfg, spec, &pair.original, theta0)?;
    let b = run(&cfg, spec, &pair.perturbed, theta0)?;
    let mut param_gap = Vec::with_capacity(a.iterates.len());
    let mut sup_loss_gap = Vec::with_capacity(a.iterates.len());
    for (x, y) in a.iterates.iter().zip(&b.iterates) {
        param_gap.push(x.distance(y));
        sup_loss_gap.push(estimate_sup_loss_gap(x, y, spec, holdout)?);
    }
    Ok(StabilityTrace { param_gap, sup_loss_gap })
}

/// Everything needed to repeat a perturbed-pair experiment.
#[derive(Clone, Debug)]
pub struct RepeatSetup<'a> {
    pub config: &'a OptimizerConfig,
    pub spec: &'a LossSpec,
    pub sample: &'a Dataset,
    /// Points used to evaluate the loss-difference supremum.
    pub holdout: &'a Dataset,
    /// Candidates for the replacement point.
    pub pool: &'a Dataset,
    pub theta0: &'a ParamVector,
    pub reps: usize,
    pub seed: u64,
    pub exec: Exec,
}

/// Which point was replaced in one repeat, and by which pool entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub repeat: usize,
    pub seed: u64,
    pub index: usize,
    pub pool_index: usize,
    pub trace: StabilityTrace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedTrace {
    pub mean: StabilityTrace,
    pub stderr: StabilityTrace,
    pub repeats: Vec<RepeatRecord>,
}

/// Seed of repeat `r`.
pub fn repeat_seed(seed: u64, repeat: usize) -> u64 {
    seed ^ repeat as u64
}

/// Perturbation of repeat `r`: a uniform index into the sample and a uniform
/// replacement from the pool, drawn from a stream separate from the
/// optimizer's.
pub fn draw_perturbation(seed: u64, n: usize, pool_len: usize) -> (usize, usize) {
    let mut rng = stream_rng(seed, PERTURBATION_STREAM);
    (rng.random_range(0..n), rng.random_range(0..pool_len))
}

const PERTURBATION_STREAM: u64 = 2;

/// Mean and standard error over `reps` independent perturbed pairs. Repeat
/// `r` uses seed `seed ⊕ r` for both its perturbation and its optimizer
/// streams.
pub fn repeat_and_average(setup: &RepeatSetup<'_>) -> Result<AveragedTrace> {
    if setup.reps < 1 {
        return Err(Error::InvalidParameter("at least one repeat is required".into()));
    }
    if setup.pool.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let records = setup.exec.map(setup.reps, |r| -> Result<RepeatRecord> {
        let seed = repeat_seed(setup.seed, r);
        let (index, pool_index) = draw_perturbation(seed, setup.sample.len(), setup.pool.len());
        let replacement = setup.pool.point(pool_index).to_owned();
        let pair = make_perturbed_pair(setup.sample, index, replacement)?;
        let cfg = setup.config.clone().with_seed(seed);
        let trace = run_pair(&cfg, setup.spec, &pair, setup.holdout, setup.theta0)?;
        Ok(RepeatRecord { repeat: r, seed, index, pool_index, trace })
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    let (pm, ps) = mean_and_stderr(records.iter().map(|r| r.trace.param_gap.as_slice()));
    let (sm, ss) = mean_and_stderr(records.iter().map(|r| r.trace.sup_loss_gap.as_slice()));
    Ok(AveragedTrace {
        mean: StabilityTrace { param_gap: pm, sup_loss_gap: sm },
        stderr: StabilityTrace { param_gap: ps, sup_loss_gap: ss },
        repeats: records,
    })
}

/// Elementwise mean and standard error (sample standard deviation over
/// `√reps`; 0 for a single series). Folds in series order.
pub fn mean_and_stderr<'a>(series: impl Iterator<Item = &'a [f64]> + Clone) -> (Vec<f64>, Vec<f64>) {
    let count = series.clone().count();
    let len = series.clone().map(<[f64]>::len).min().unwrap_or(0);
    let mut mean = vec![0.0; len];
    for s in series.clone() {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= count as f64;
    }
    let mut se = vec![0.0; len];
    if count > 1 {
        for s in series {
            for ((e, m), v) in se.iter_mut().zip(&mean).zip(s) {
                *e += (v - m) * (v - m);
            }
        }
        for e in &mut se {
            *e = (*e / (count as f64 - 1.0)).sqrt() / (count as f64).sqrt();
        }
    }
    (mean, se)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub exponent: f64,
    pub intercept: f64,
    pub t_lo: usize,
    pub t_hi: usize,
    pub residual_rms: f64,
}

/// Least-squares fit of `log v_t` against `log t` over `t_lo..=t_hi`, where
/// `values[t]` is the value at iteration `t`.
pub fn fit_loglog_slope(values: &[f64], t_lo: usize, t_hi: usize) -> Result<SlopeFit> {
    if t_lo < 1 || t_hi <= t_lo || t_hi >= values.len() {
        return Err(Error::InvalidParameter(format!(
            "window [{t_lo}, {t_hi}] is not a valid range within 1..{}",
            values.len()
        )));
    }
    let ts: Vec<usize> = (t_lo..=t_hi).collect();
    fit_points(values, &ts, t_lo, t_hi)
}

fn fit_points(values: &[f64], ts: &[usize], t_lo: usize, t_hi: usize) -> Result<SlopeFit> {
    let mut xs = Vec::with_capacity(ts.len());
    let mut ys = Vec::with_capacity(ts.len());
    for &t in ts {
        let v = values[t];
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositive { t, value: v });
        }
        xs.push((t as f64).ln());
        ys.push(v.ln());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    Ok(SlopeFit { exponent, intercept, t_lo, t_hi, residual_rms: (rss / m).sqrt() })
}

/// Log-spaced integer grid over `[t_lo, t_hi]`, ten points per decade.
pub fn log_grid(t_lo: usize, t_hi: usize) -> Vec<usize> {
    let (a, b) = ((t_lo.max(1) as f64).log10(), (t_hi.max(1) as f64).log10());
    let steps = ((b - a) * 10.0).ceil().max(1.0) as usize;
    let mut grid: Vec<usize> = (0..=steps)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / steps as f64).round() as usize)
        .map(|t| t.clamp(t_lo, t_hi))
        .collect();
    grid.dedup();
    grid
}

/// Ratio of local slope to the early-regime slope below which the curve is
/// treated as saturated.
pub const SATURATION_RATIO: f64 = 0.9;

/// End of the power-law regime in `[t_lo, t_hi]`.
///
/// Local slopes are taken between consecutive points of a log-spaced grid.
/// The reference is the median of the first three local slopes; the curve
/// is saturated from the first of three consecutive local slopes below
/// `SATURATION_RATIO` times that reference. Returns `t_hi` when no such run
/// exists.
pub fn saturation_point(values: &[f64], t_lo: usize, t_hi: usize) -> Result<usize> {
    let grid = log_grid(t_lo, t_hi);
    for &t in &grid {
        if !(values.get(t).is_some_and(|v| *v > 0.0)) {
            return Err(Error::NonPositive { t, value: values.get(t).copied().unwrap_or(f64::NAN) });
        }
    }
    let local: Vec<f64> = grid
        .windows(2)
        .map(|w| (values[w[1]] / values[w[0]]).ln() / (w[1] as f64 / w[0] as f64).ln())
        .collect();
    if local.len() < 6 {
        return Ok(t_hi);
    }
    let mut head = local[..3].to_vec();
    head.sort_by(f64::total_cmp);
    let reference = head[1];
    let threshold = SATURATION_RATIO * reference;
    for i in 3..local.len().saturating_sub(2) {
        if local[i..i + 3].iter().all(|&s| s < threshold) {
            return Ok(grid[i]);
        }
    }
    Ok(t_hi)
}

/// Slope fit over `[t_lo, T_sat]` with `T_sat` from `saturation_point`.
pub fn fit_before_saturation(values: &[f64], t_lo: usize, t_hi: usize) -> Result<SlopeFit> {
    let t_sat = saturation_point(values, t_lo, t_hi)?;
    fit_loglog_slope(values, t_lo, t_sat.max(t_lo + 1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskCurves {
    pub train: Vec<f64>,
    pub test: Vec<f64>,
    pub gen_gap: Vec<f64>,
    pub opt_error: Vec<f64>,
    /// `R_S` at the long-run reference point.
    pub reference_risk: f64,
    pub reference: ParamVector,
}

/// Train/test risk along a run, with the optimization error measured against
/// a GD reference run of `reference_steps` steps at `η = 1/β`.
pub fn risk_curves(
    config: &OptimizerConfig,
    spec: &LossSpec,
    train: &Dataset,
    test: &Dataset,
    theta0: &ParamVector,
    reference_steps: usize,
) -> Result<RiskCurves> {
    let cfg = OptimizerConfig { record_risk: true, ..config.clone() };
    let trace = run(&cfg, spec, train, theta0)?;
    let test_risk = trace.iterates.iter().map(|th| empirical_risk(spec, th, test)).collect::<Result<Vec<_>>>()?;
    let reference = reference_minimizer(spec, train, theta0, reference_steps)?;
    let reference_risk = empirical_risk(spec, &reference, train)?;
    let gen_gap = test_risk.iter().zip(&trace.risk).map(|(a, b)| a - b).collect();
    let opt_error = trace.risk.iter().map(|r| r - reference_risk).collect();
    Ok(RiskCurves { train: trace.risk, test: test_risk, gen_gap, opt_error, reference_risk, reference })
}

/// Long GD run at `η = 1/β` used as a stand-in for the empirical minimizer.
pub fn reference_minimizer(spec: &LossSpec, train: &Dataset, theta0: &ParamVector, steps: usize) -> Result<ParamVector> {
    let beta = loss_constants(spec, train)?.smoothness;
    if beta <= 0.0 {
        return Err(Error::InvalidParameter("reference run needs a positive smoothness".into()));
    }
    let cfg = OptimizerConfig::new(Method::Gd, StepSchedule::Fixed { eta0: 1.0 / beta }, steps).without_risk();
    Ok(run(&cfg, spec, train, theta0)?.last().clone())
}
