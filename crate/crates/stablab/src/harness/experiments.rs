//! Experiment drivers: each turns an `ExperimentConfig` into a `Report`.

use crate::bounds::{
    convergence_lower_bound, minimax_bound, stability_bound, tabulated_exponent, BoundQuery, Setting,
    UniversalConstants,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::harness::config::{DataSource, Experiment, ExperimentConfig, LossKind, MethodName};
use crate::harness::data::{gen_synthetic, load_breast_cancer, subsample};
use crate::harness::report::{ExponentRow, NamedFit, PerturbationRecord, Provenance, Report, Series};
use crate::lecam::{bayes_error_from_tv, phi, phi_certificate, tv_kl_product, Variant};
use crate::losses::{empirical_risk, loss_constants, Dataset, LossConstants, LossSpec, ParamVector, QuadraticForm};
use crate::matrixlemmas::{hb_sweep, nag_sweep, recursion_u_sweep, scnag_sweep, SweepReport};
use crate::optimizers::{run, Method, OptimizerConfig, StepSchedule, GENERATOR};
use crate::stability::{fit_before_saturation, reference_minimizer, repeat_and_average, RepeatSetup};

/// Curvature of the built-in quadratic losses.
///
/// `Quadratic`: eigenvalues spread evenly over `[0.6, 1]` on the first
/// `⌈d/2⌉` coordinates and 0 on the rest, so perturbations that reach the
/// null space are never damped. `Ridge`: eigenvalues spread evenly over
/// `[0.5, 1]` on every coordinate.
pub fn curvature(kind: LossKind, d: usize) -> Vec<f64> {
    let spread = |count: usize, lo: f64| -> Vec<f64> {
        (0..count)
            .map(|i| if count == 1 { 1.0 } else { 1.0 - (1.0 - lo) * i as f64 / (count - 1) as f64 })
            .collect()
    };
    match kind {
        LossKind::Logistic => Vec::new(),
        LossKind::Quadratic => {
            let mut c = spread(d.div_ceil(2), 0.6);
            c.resize(d, 0.0);
            c
        }
        LossKind::Ridge => spread(d, 0.5),
    }
}

pub fn build_loss(kind: LossKind, d: usize, radius: f64) -> Result<LossSpec> {
    match kind {
        LossKind::Logistic => LossSpec::logistic(radius),
        LossKind::Quadratic | LossKind::Ridge => LossSpec::quadratic(QuadraticForm::diagonal(&curvature(kind, d))?, radius),
    }
}

fn setting_for(constants: &LossConstants) -> Setting {
    if constants.strong_convexity > 0.0 {
        Setting::StronglyConvexSmooth
    } else {
        Setting::ConvexSmooth
    }
}

/// Training sample, replacement pool and holdout for a stability run.
struct Workload {
    train: Dataset,
    pool: Dataset,
    holdout: Dataset,
}

fn workload(cfg: &ExperimentConfig, extra: usize) -> Result<Workload> {
    match &cfg.data {
        DataSource::Synthetic => {
            let (train, _) = gen_synthetic(cfg.d, cfg.n, cfg.seed)?;
            let (pool, _) = gen_synthetic(cfg.d, extra, cfg.seed.wrapping_add(1))?;
            Ok(Workload { train, holdout: pool.clone(), pool })
        }
        DataSource::File(path) => {
            let loaded = load_breast_cancer(path)?;
            let (train, rest) = subsample(&loaded.dataset, cfg.n, cfg.seed)?;
            let rest = rest.ok_or_else(|| {
                Error::Config(format!("n = {} leaves no held-out points in {}", cfg.n, path.display()))
            })?;
            Ok(Workload { train, holdout: rest.clone(), pool: rest })
        }
    }
}

fn provenance(cfg: &ExperimentConfig) -> Provenance {
    Provenance {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        generator: GENERATOR.to_string(),
        config: cfg.canonical(),
    }
}

fn record_constants(report: &mut Report, c: &LossConstants) {
    report.constants.insert("lipschitz".into(), c.lipschitz);
    report.constants.insert("smoothness".into(), c.smoothness);
    report.constants.insert("strong_convexity".into(), c.strong_convexity);
    report.constants.insert("domain".into(), c.domain);
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run_experiment_with(cfg, Exec::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Exec) -> Result<Report> {
    cfg.validate()?;
    let mut report = Report {
        experiment: cfg.experiment.name().to_string(),
        provenance: Some(provenance(cfg)),
        ..Report::default()
    };
    match cfg.experiment {
        Experiment::StabilityScaling => stability_scaling(cfg, exec, &mut report)?,
        Experiment::RiskDecomposition => risk_decomposition(cfg, &mut report)?,
        Experiment::LecamAudit => lecam_audit(cfg, &mut report)?,
        Experiment::LemmaAudit => lemma_audit(cfg, exec, &mut report),
        Experiment::BoundsTable => bounds_table(cfg, &mut report)?,
    }
    Ok(report)
}

/// Resolve and validate every configured method before any run starts.
fn optimizer_configs(
    cfg: &ExperimentConfig,
    constants: &LossConstants,
) -> Result<Vec<(MethodName, OptimizerConfig)>> {
    cfg.methods
        .iter()
        .map(|&name| {
            let method = cfg.method(name, constants.condition_number())?;
            let oc = OptimizerConfig::new(method, cfg.step_schedule(), cfg.horizon).with_seed(cfg.seed);
            oc.validate(constants)?;
            Ok((name, oc))
        })
        .collect()
}

fn bound_curve(q: &BoundQuery, horizon: usize) -> Option<Vec<f64>> {
    (0..=horizon as u64).map(|t| stability_bound(&q.with_horizon(t)).ok()).collect()
}

fn stability_scaling(cfg: &ExperimentConfig, exec: Exec, report: &mut Report) -> Result<()> {
    let w = workload(cfg, cfg.holdout)?;
    let d = w.train.dim().unwrap_or(1);
    let spec = build_loss(cfg.loss, d, cfg.radius)?;
    let constants = loss_constants(&spec, &w.train)?;
    let methods = optimizer_configs(cfg, &constants)?;
    record_constants(report, &constants);
    report.constants.insert("n".into(), w.train.len() as f64);
    report.constants.insert("d".into(), d as f64);
    report.loglog = true;
    let hash = cfg.hash();
    let theta0 = ParamVector::zeros(d);
    let lo = cfg.window_lo();

    for (name, oc) in methods {
        let m = name.name();
        let avg = repeat_and_average(&RepeatSetup {
            config: &oc,
            spec: &spec,
            sample: &w.train,
            holdout: &w.holdout,
            pool: &w.pool,
            theta0: &theta0,
            reps: cfg.reps,
            seed: cfg.seed,
            exec,
        })?;
        for (label, mean, se) in [
            ("param_gap", &avg.mean.param_gap, &avg.stderr.param_gap),
            ("sup_loss_gap", &avg.mean.sup_loss_gap, &avg.stderr.sup_loss_gap),
        ] {
            let series = format!("{m}.{label}");
            // Stochastic gaps stay at exactly 0 until the replaced index is
            // first drawn; start the window after the last zero.
            let start = mean.iter().rposition(|v| v.is_nan() || *v <= 0.0).map_or(lo, |i| lo.max(i + 1));
            match fit_before_saturation(mean, start, cfg.horizon) {
                Ok(fit) => report.fits.push(NamedFit { series: series.clone(), fit }),
                Err(e) => report.check(format!("{series}.fit"), false, e.to_string()),
            }
            report.push_series(Series::new(series, &hash, mean, Some(se)));
        }
        let q = BoundQuery {
            method: oc.method,
            setting: setting_for(&constants),
            constants,
            schedule: oc.schedule,
            horizon: 0,
            n: w.train.len() as u64,
        };
        if let Some(curve) = bound_curve(&q, cfg.horizon) {
            if oc.method == Method::Gd && q.setting == Setting::ConvexSmooth {
                let ok = avg
                    .repeats
                    .iter()
                    .all(|r| r.trace.param_gap.iter().zip(&curve).all(|(g, b)| *g <= b / constants.lipschitz + 1e-9));
                report.check("gd.param_gap_within_bound", ok, "param_gap[t] <= 2 eta L t / n + 1e-9 in every repeat");
            }
            report.push_series(Series::new(format!("{m}.bound"), &hash, &curve, None));
        }
        let lipschitz_ok = avg.repeats.iter().all(|r| {
            r.trace.sup_loss_gap.iter().zip(&r.trace.param_gap).all(|(s, p)| *s <= constants.lipschitz * p)
        });
        report.check(format!("{m}.lipschitz_domination"), lipschitz_ok, "sup_loss_gap <= L * param_gap at every t");
        report.perturbations.extend(avg.repeats.iter().map(|r| PerturbationRecord {
            method: m.to_string(),
            repeat: r.repeat,
            index: r.index,
            pool_index: r.pool_index,
        }));
    }
    Ok(())
}

fn risk_decomposition(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let (train, test) = match &cfg.data {
        DataSource::Synthetic => (
            gen_synthetic(cfg.d, cfg.n, cfg.seed)?.0,
            gen_synthetic(cfg.d, cfg.test_n, cfg.seed.wrapping_add(1))?.0,
        ),
        DataSource::File(_) => {
            let w = workload(cfg, 0)?;
            (w.train, w.holdout)
        }
    };
    let d = train.dim().unwrap_or(1);
    let spec = build_loss(cfg.loss, d, cfg.radius)?;
    let constants = loss_constants(&spec, &train)?;
    let methods = optimizer_configs(cfg, &constants)?;
    record_constants(report, &constants);
    let hash = cfg.hash();
    let theta0 = ParamVector::zeros(d);
    let reference = reference_minimizer(&spec, &train, &theta0, cfg.reference_steps())?;
    let reference_risk = empirical_risk(&spec, &reference, &train)?;
    report.constants.insert("reference_risk".into(), reference_risk);

    for (name, oc) in methods {
        let m = name.name();
        let trace = run(&oc, &spec, &train, &theta0)?;
        let test_risk = trace.iterates.iter().map(|th| empirical_risk(&spec, th, &test)).collect::<Result<Vec<_>>>()?;
        let gap: Vec<f64> = test_risk.iter().zip(&trace.risk).map(|(a, b)| a - b).collect();
        let opt: Vec<f64> = trace.risk.iter().map(|r| r - reference_risk).collect();
        let min_opt = opt.iter().copied().fold(f64::INFINITY, f64::min);
        report.check(
            format!("{m}.opt_error_nonnegative"),
            min_opt >= -1e-9,
            format!("smallest optimization error {min_opt:e}"),
        );
        let q = BoundQuery {
            method: oc.method,
            setting: setting_for(&constants),
            constants,
            schedule: oc.schedule,
            horizon: 0,
            n: train.len() as u64,
        };
        report.push_series(Series::new(format!("{m}.train"), &hash, &trace.risk, None));
        report.push_series(Series::new(format!("{m}.test"), &hash, &test_risk, None));
        report.push_series(Series::new(format!("{m}.gen_gap"), &hash, &gap, None));
        report.push_series(Series::new(format!("{m}.opt_error"), &hash, &opt, None));
        if let Some(curve) = bound_curve(&q, cfg.horizon) {
            report.push_series(Series::new(format!("{m}.stability_bound"), &hash, &curve, None));
        }
    }
    Ok(())
}

/// Sample sizes covered by the exact TV enumeration in the audit.
pub const AUDIT_MAX_N: u64 = 12;
/// Sample sizes at which the Φ certificates are checked.
pub const PHI_SAMPLE_SIZES: [u64; 4] = [1, 4, 16, 64];

fn lecam_audit(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let hash = cfg.hash();
    let radius = cfg.radius;
    let beta = 1.0;
    let mut tv_rows = Vec::new();
    let mut kl_rows = Vec::new();
    let mut bayes_rows = Vec::new();
    for n in 1..=AUDIT_MAX_N {
        let (tv, kl) = tv_kl_product(n)?;
        let bayes = bayes_error_from_tv(tv);
        tv_rows.push((n, tv));
        kl_rows.push((n, kl));
        bayes_rows.push((n, bayes));
        report.check(format!("tv_at_most_half.n{n}"), tv <= 0.5, format!("tv = {tv}"));
        report.check(format!("bayes_error_at_least_quarter.n{n}"), bayes >= 0.25, format!("bayes = {bayes}"));
        report.check(format!("pinsker.n{n}"), tv * tv <= kl / 2.0, format!("tv^2 = {}, kl/2 = {}", tv * tv, kl / 2.0));
    }
    for (name, rows) in [("tv", tv_rows), ("kl", kl_rows), ("bayes_error", bayes_rows)] {
        let mut s = Series::new(name, &hash, &[], None);
        s.rows = rows
            .into_iter()
            .map(|(t, value)| crate::harness::report::SeriesRow { t, value, stderr: 0.0 })
            .collect();
        report.push_series(s);
    }
    let r = radius / 2.0;
    for variant in [Variant::Convex, Variant::StronglyConvex] {
        for n in PHI_SAMPLE_SIZES {
            let c = phi_certificate(variant, n, beta, r, r / 400.0)?;
            report.check(
                format!("phi_certificate.{variant:?}.n{n}").to_lowercase(),
                c.pass,
                format!("grid_min = {}, phi = {}", c.grid_min, c.phi_formula),
            );
        }
    }
    let uc = UniversalConstants::default();
    for n in PHI_SAMPLE_SIZES {
        let nf = n as f64;
        let convex = minimax_bound(Setting::ConvexSmooth, n, radius, beta, &uc)?;
        let displayed = radius * radius * beta / (256.0 * (6.0 * nf).sqrt());
        report.check(
            format!("minimax_convex_constant.n{n}"),
            (convex - displayed).abs() <= 1e-12,
            format!("{convex} vs {displayed}"),
        );
        let sc = minimax_bound(Setting::StronglyConvexSmooth, n, radius, beta, &uc)?;
        let displayed = radius * radius * beta / (192.0 * nf);
        report.check(
            format!("minimax_strongly_convex_constant.n{n}"),
            (sc - displayed).abs() <= 1e-12,
            format!("{sc} vs {displayed}"),
        );
        report.constants.insert(format!("phi_quarter_convex.n{n}"), phi(Variant::Convex, beta, r, n) / 4.0);
        report.constants.insert(format!("phi_quarter_strongly_convex.n{n}"), phi(Variant::StronglyConvex, beta, r, n) / 4.0);
    }
    Ok(())
}

/// Grid of heavy-ball momenta in the audit: 0, 0.1, …, 0.9.
pub fn hb_audit_gammas() -> Vec<f64> {
    (0..10).map(|k| k as f64 / 10.0).collect()
}

/// Condition numbers in the strongly convex NAG audit.
pub const SCNAG_AUDIT_KAPPAS: [f64; 5] = [1.0, 2.0, 4.0, 16.0, 100.0];

/// The four lemma sweeps at their audit sizes.
pub fn lemma_sweeps(nag_draws: usize, seed: u64, exec: Exec) -> [SweepReport; 4] {
    [
        nag_sweep(nag_draws, 64, seed, exec),
        hb_sweep(&hb_audit_gammas(), 21, 200, exec),
        scnag_sweep(&SCNAG_AUDIT_KAPPAS, 64, 200, exec),
        recursion_u_sweep(0.01, 128, exec),
    ]
}

fn lemma_audit(cfg: &ExperimentConfig, exec: Exec, report: &mut Report) {
    for sweep in lemma_sweeps(cfg.lemma_draws, cfg.seed, exec) {
        let name = sweep.lemma.name();
        report.constants.insert(format!("{name}.worst_ratio"), sweep.worst_ratio);
        report.check(
            format!("{name}.no_counterexample"),
            sweep.passed(),
            format!("{} checks, {} violations, worst ratio {}", sweep.checks, sweep.violations, sweep.worst_ratio),
        );
        report.counterexamples.extend(sweep.counterexamples);
    }
}

fn bounds_table(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let hash = cfg.hash();
    let constants = LossConstants { lipschitz: 1.0, smoothness: 0.25, strong_convexity: 0.0, domain: cfg.radius };
    record_constants(report, &constants);
    report.loglog = true;
    let uc = UniversalConstants::default();
    let lo = cfg.window_lo();
    for &name in &cfg.methods {
        let method = cfg.method(name, constants.condition_number())?;
        let schedule = if matches!(method, Method::Sgld { .. }) {
            StepSchedule::Power { eta0: cfg.eta, exponent: 1.0 }
        } else {
            cfg.step_schedule()
        };
        let q = BoundQuery { method, setting: Setting::ConvexSmooth, constants, schedule, horizon: 0, n: cfg.n as u64 };
        let Some(curve) = bound_curve(&q, cfg.horizon) else {
            report.check(format!("{}.bound_available", name.name()), false, "no convex bound for this method");
            continue;
        };
        let fit = crate::stability::fit_loglog_slope(&curve, lo, cfg.horizon)?;
        let tabulated = tabulated_exponent(method, &schedule);
        if let Some(tab) = tabulated {
            // The SGLD bound grows like √(log T), so the tabulated rate is
            // only an upper envelope there.
            let ok = if matches!(method, Method::Sgld { .. }) {
                fit.exponent <= tab
            } else {
                (fit.exponent - tab).abs() <= 0.05
            };
            report.check(format!("{}.exponent", name.name()), ok, format!("fitted {} vs tabulated {tab}", fit.exponent));
        }
        report.exponents.push(ExponentRow { method: name.name().into(), tabulated, fitted: fit.exponent });
        report.fits.push(NamedFit { series: format!("{}.bound", name.name()), fit });
        report.push_series(Series::new(format!("{}.bound", name.name()), &hash, &curve, None));
        let lower: Vec<f64> = (0..=cfg.horizon as u64)
            .map(|t| if t == 0 { Ok(f64::NAN) } else { convergence_lower_bound(&q.with_horizon(t), &uc, false) })
            .collect::<Result<_>>()?;
        report.push_series(Series::new(format!("{}.convergence_lower_bound", name.name()), &hash, &lower, None));
    }
    Ok(())
}
