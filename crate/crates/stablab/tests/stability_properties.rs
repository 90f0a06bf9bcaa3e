use proptest::prelude::*;

use stablab::bounds::{stability_bound, BoundQuery, Setting};
use stablab::harness::data::gen_synthetic;
use stablab::losses::{empirical_risk, loss_constants};
use stablab::optimizers::run;
use stablab::stability::{make_perturbed_pair, mean_and_stderr, run_pair};
use stablab::{DataPoint, Dataset, LossSpec, Method, OptimizerConfig, ParamVector, StepSchedule};

fn method(i: usize) -> Method {
    [
        Method::Gd,
        Method::Sgd,
        Method::NagConvex,
        Method::HeavyBall { momentum: 0.6 },
        Method::Sgld { temperature: 100.0 },
    ][i]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn replacing_a_point_by_itself_leaves_no_gap(seed in any::<u64>(), m in 0usize..5, k in 0usize..40) {
        let (data, _) = gen_synthetic(3, 40, seed).unwrap();
        let same = data.get(k).unwrap();
        let pair = make_perturbed_pair(&data, k, same).unwrap();
        let cfg = OptimizerConfig::new(method(m), StepSchedule::Fixed { eta0: 0.1 }, 30).with_seed(seed);
        let trace = run_pair(&cfg, &LossSpec::logistic(1.0).unwrap(), &pair, &data, &ParamVector::zeros(3)).unwrap();
        prop_assert!(trace.param_gap.iter().chain(&trace.sup_loss_gap).all(|&g| g == 0.0));
    }

    #[test]
    fn gaps_respect_lipschitz_and_gd_bound(seed in any::<u64>(), m in 0usize..5, k in 0usize..40, eta in 0.01..2.0f64) {
        let (data, _) = gen_synthetic(3, 40, seed).unwrap();
        let (pool, _) = gen_synthetic(3, 20, seed.wrapping_add(1)).unwrap();
        let pair = make_perturbed_pair(&data, k, pool.get(0).unwrap()).unwrap();
        let spec = LossSpec::logistic(1.0).unwrap();
        let l = loss_constants(&spec, &data).unwrap().lipschitz;
        let method = method(m);
        let eta = if matches!(method, Method::HeavyBall { .. }) { eta.min(1.5) } else { eta };
        let cfg = OptimizerConfig::new(method, StepSchedule::Fixed { eta0: eta }, 50).with_seed(seed);
        let trace = run_pair(&cfg, &spec, &pair, &pool, &ParamVector::zeros(3)).unwrap();
        for (t, (&g, &s)) in trace.param_gap.iter().zip(&trace.sup_loss_gap).enumerate() {
            prop_assert!(s <= l * g);
            if method == Method::Gd {
                prop_assert!(g <= 2.0 * eta * l * t as f64 / 40.0 + 1e-9);
            }
        }
    }

    #[test]
    fn gd_is_exactly_tight_on_the_linear_loss(n in 2usize..200, l in 0.1..10.0f64, eta in 0.001..1.0f64, t in 1usize..100) {
        let spec = LossSpec::linear_worstcase(l, 1.0).unwrap();
        let sample = Dataset::symbols(vec![1; n]).unwrap();
        let pair = make_perturbed_pair(&sample, n / 2, DataPoint::Symbol(-1)).unwrap();
        let cfg = OptimizerConfig::new(Method::Gd, StepSchedule::Fixed { eta0: eta }, t);
        let trace = run_pair(&cfg, &spec, &pair, &sample, &ParamVector::zeros(1)).unwrap();
        let oracle = 2.0 * eta * l * t as f64 / n as f64;
        prop_assert!((trace.param_gap[t] - oracle).abs() <= 1e-12 * oracle);
    }
}

#[test]
fn averaged_generalization_gap_sits_below_the_gd_bound() {
    let (n, t, eta) = (200, 100, 0.1);
    let spec = LossSpec::logistic(1.0).unwrap();
    let cfg = OptimizerConfig::new(Method::Gd, StepSchedule::Fixed { eta0: eta }, t).without_risk();
    let gaps: Vec<Vec<f64>> = (0..30u64)
        .map(|seed| {
            let (train, _) = gen_synthetic(5, n, 2 * seed).unwrap();
            let (test, _) = gen_synthetic(5, 4000, 2 * seed + 1).unwrap();
            let theta = run(&cfg, &spec, &train, &ParamVector::zeros(5)).unwrap().last().clone();
            vec![empirical_risk(&spec, &theta, &test).unwrap() - empirical_risk(&spec, &theta, &train).unwrap()]
        })
        .collect();
    let (mean, se) = mean_and_stderr(gaps.iter().map(Vec::as_slice));
    let q = BoundQuery {
        method: Method::Gd,
        setting: Setting::ConvexSmooth,
        constants: loss_constants(&spec, &gen_synthetic(5, n, 0).unwrap().0).unwrap(),
        schedule: StepSchedule::Fixed { eta0: eta },
        horizon: t as u64,
        n: n as u64,
    };
    let bound = stability_bound(&q).unwrap();
    assert!(mean[0] <= bound + 3.0 * se[0], "gap {} ± {} vs bound {bound}", mean[0], se[0]);
}
