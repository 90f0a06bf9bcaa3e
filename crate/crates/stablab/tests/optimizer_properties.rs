use proptest::prelude::*;

use stablab::harness::data::gen_synthetic;
use stablab::harness::experiments::build_loss;
use stablab::harness::LossKind;
use stablab::losses::loss_constants;
use stablab::optimizers::{nag_sc_momentum, run};
use stablab::{LossSpec, Method, OptimizerConfig, ParamVector, StepSchedule};

fn logistic() -> LossSpec {
    LossSpec::logistic(1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn runs_are_bitwise_deterministic(seed in any::<u64>(), method in 0usize..5) {
        let (data, _) = gen_synthetic(4, 60, seed).unwrap();
        let method = [
            Method::Gd,
            Method::Sgd,
            Method::NagConvex,
            Method::HeavyBall { momentum: 0.5 },
            Method::Sgld { temperature: 50.0 },
        ][method];
        let cfg = OptimizerConfig::new(method, StepSchedule::Fixed { eta0: 0.1 }, 40).with_seed(seed);
        let a = run(&cfg, &logistic(), &data, &ParamVector::zeros(4)).unwrap();
        let b = run(&cfg, &logistic(), &data, &ParamVector::zeros(4)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn gd_descends_on_convex_smooth_losses(seed in any::<u64>(), frac in 0.05..1.0f64, quadratic in any::<bool>()) {
        let (data, _) = gen_synthetic(6, 80, seed).unwrap();
        let spec = if quadratic { build_loss(LossKind::Quadratic, 6, 1.0).unwrap() } else { logistic() };
        let beta = loss_constants(&spec, &data).unwrap().smoothness;
        let cfg = OptimizerConfig::new(Method::Gd, StepSchedule::Fixed { eta0: frac / beta }, 60);
        let trace = run(&cfg, &spec, &data, &ParamVector::zeros(6)).unwrap();
        for w in trace.risk.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn noiseless_sgld_reproduces_sgd(seed in any::<u64>(), power in any::<bool>()) {
        let (data, _) = gen_synthetic(3, 50, seed).unwrap();
        let schedule = if power {
            StepSchedule::Power { eta0: 0.5, exponent: 0.5 }
        } else {
            StepSchedule::Fixed { eta0: 0.2 }
        };
        let theta0 = ParamVector::zeros(3);
        let sgd = run(&OptimizerConfig::new(Method::Sgd, schedule, 50).with_seed(seed), &logistic(), &data, &theta0).unwrap();
        let cfg = OptimizerConfig::new(Method::Sgld { temperature: f64::INFINITY }, schedule, 50).with_seed(seed);
        let sgld = run(&cfg, &logistic(), &data, &theta0).unwrap();
        prop_assert_eq!(sgd.iterates, sgld.iterates);
    }

    #[test]
    fn nag_sc_momentum_is_exact(kappa in 1.0..1e6f64) {
        let s = kappa.sqrt();
        prop_assert_eq!(nag_sc_momentum(kappa), (s - 1.0) / (s + 1.0));
    }
}
