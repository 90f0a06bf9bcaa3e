use nalgebra::DMatrix;
use proptest::prelude::*;

use stablab::losses::{loss_grad, loss_value};
use stablab::{DataPoint, LossSpec, ParamVector, QuadraticForm};

const FD_STEP: f64 = 1e-5;

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < 1e-6 {
        let mut e = vec![0.0; v.len()];
        e[0] = 1.0;
        return e;
    }
    v.into_iter().map(|x| x / n).collect()
}

fn labeled_point(d: usize) -> impl Strategy<Value = DataPoint> {
    (prop::collection::vec(-1.0..1.0f64, d), 0u8..=1).prop_map(|(x, y)| DataPoint::labeled(unit(x), y).unwrap())
}

fn symbol() -> impl Strategy<Value = DataPoint> {
    prop_oneof![Just(DataPoint::Symbol(1)), Just(DataPoint::Symbol(-1))]
}

fn sign(z: &DataPoint) -> f64 {
    match z {
        DataPoint::Symbol(s) => f64::from(*s),
        DataPoint::Labeled { .. } => unreachable!(),
    }
}

fn theta(d: usize, scale: f64) -> impl Strategy<Value = ParamVector> {
    prop::collection::vec(-scale..scale, d).prop_map(|v| ParamVector::new(v).unwrap())
}

fn quadratic(d: usize) -> impl Strategy<Value = LossSpec> {
    (prop::collection::vec(-1.0..1.0f64, d * d), prop::collection::vec(-1.0..1.0f64, d)).prop_map(move |(m, b)| {
        let m = DMatrix::from_vec(d, d, m);
        let a = m.transpose() * m;
        LossSpec::quadratic(QuadraticForm::new(a, b).unwrap(), 2.0).unwrap()
    })
}

fn lambda_max(spec: &LossSpec) -> f64 {
    match spec.family() {
        stablab::LossFamily::Quadratic(q) => q.lambda_max(),
        _ => unreachable!(),
    }
}

fn fd_grad(spec: &LossSpec, th: &ParamVector, z: &DataPoint) -> Vec<f64> {
    (0..th.dim())
        .map(|i| {
            let mut up = th.as_slice().to_vec();
            let mut down = up.clone();
            up[i] += FD_STEP;
            down[i] -= FD_STEP;
            let f = |v: Vec<f64>| loss_value(spec, &ParamVector::new(v).unwrap(), z).unwrap();
            (f(up) - f(down)) / (2.0 * FD_STEP)
        })
        .collect()
}

fn assert_grad_matches(spec: &LossSpec, th: &ParamVector, z: &DataPoint) -> Result<(), TestCaseError> {
    let g = loss_grad(spec, th, z).unwrap();
    let fd = fd_grad(spec, th, z);
    let err: f64 = g.as_slice().iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = g.norm().max(1.0);
    prop_assert!(err / scale <= 1e-5, "gradient {:?} vs finite difference {:?}", g.as_slice(), fd);
    Ok(())
}

fn midpoint(u: &ParamVector, v: &ParamVector) -> ParamVector {
    ParamVector::new(u.as_slice().iter().zip(v.as_slice()).map(|(a, b)| 0.5 * (a + b)).collect()).unwrap()
}

fn assert_midpoint_convex(spec: &LossSpec, u: &ParamVector, v: &ParamVector, z: &DataPoint) -> Result<(), TestCaseError> {
    let f = |p: &ParamVector| loss_value(spec, p, z).unwrap();
    let lhs = f(&midpoint(u, v));
    let rhs = 0.5 * (f(u) + f(v));
    prop_assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0), "{lhs} > {rhs}");
    Ok(())
}

fn assert_smooth(spec: &LossSpec, beta: f64, u: &ParamVector, v: &ParamVector, z: &DataPoint) -> Result<(), TestCaseError> {
    let gu = loss_grad(spec, u, z).unwrap();
    let gv = loss_grad(spec, v, z).unwrap();
    prop_assert!(gu.distance(&gv) <= beta * u.distance(v) * (1.0 + 1e-12) + 1e-15);
    Ok(())
}

proptest! {
    #[test]
    fn logistic_gradient_matches_finite_difference(th in theta(5, 3.0), z in labeled_point(5)) {
        assert_grad_matches(&LossSpec::logistic(1.0).unwrap(), &th, &z)?;
    }

    #[test]
    fn quadratic_gradient_matches_finite_difference(spec in quadratic(4), th in theta(4, 2.0), z in labeled_point(4)) {
        assert_grad_matches(&spec, &th, &z)?;
    }

    #[test]
    fn linear_gradient_matches_finite_difference(l in 0.1..5.0f64, th in theta(3, 5.0), z in symbol()) {
        assert_grad_matches(&LossSpec::linear_worstcase(l, 1.0).unwrap(), &th, &z)?;
    }

    #[test]
    fn lecam_gradients_match_finite_difference(
        beta in 0.1..4.0f64,
        r in 0.1..2.0f64,
        th in theta(2, 6.0),
        z in symbol(),
    ) {
        let s = sign(&z);
        let c = th[0] - s * r;
        prop_assume!((c.abs() - r / 2.0).abs() > 1e-4);
        assert_grad_matches(&LossSpec::lecam_convex(beta, r, 10.0).unwrap(), &th, &z)?;
        assert_grad_matches(&LossSpec::lecam_strongly_convex(beta, r, 10.0).unwrap(), &th, &z)?;
    }

    #[test]
    fn logistic_gradient_and_curvature_are_bounded(th in theta(5, 10.0), z in labeled_point(5)) {
        let spec = LossSpec::logistic(1.0).unwrap();
        prop_assert!(loss_grad(&spec, &th, &z).unwrap().norm() <= 1.0 + 1e-12);
        // Hessian from central differences of the gradient.
        let d = th.dim();
        let mut h = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut up = th.as_slice().to_vec();
            let mut down = up.clone();
            up[j] += FD_STEP;
            down[j] -= FD_STEP;
            let gu = loss_grad(&spec, &ParamVector::new(up).unwrap(), &z).unwrap();
            let gd = loss_grad(&spec, &ParamVector::new(down).unwrap(), &z).unwrap();
            for i in 0..d {
                h[(i, j)] = (gu[i] - gd[i]) / (2.0 * FD_STEP);
            }
        }
        let sym = (&h + h.transpose()) * 0.5;
        let norm = sym.symmetric_eigenvalues().iter().fold(0.0f64, |m, e| m.max(e.abs()));
        prop_assert!(norm <= 0.25 + 1e-6, "Hessian norm {norm}");
    }

    #[test]
    fn convex_families_pass_midpoint_test(
        u in theta(4, 4.0),
        v in theta(4, 4.0),
        z in labeled_point(4),
        spec in quadratic(4),
        s in symbol(),
        beta in 0.1..3.0f64,
        r in 0.1..2.0f64,
    ) {
        assert_midpoint_convex(&LossSpec::logistic(1.0).unwrap(), &u, &v, &z)?;
        assert_midpoint_convex(&spec, &u, &v, &z)?;
        assert_midpoint_convex(&LossSpec::linear_worstcase(2.0, 1.0).unwrap(), &u, &v, &s)?;
        assert_midpoint_convex(&LossSpec::lecam_strongly_convex(beta, r, 10.0).unwrap(), &u, &v, &s)?;
    }

    #[test]
    fn smoothness_holds_on_sampled_pairs(
        u in theta(4, 4.0),
        v in theta(4, 4.0),
        z in labeled_point(4),
        spec in quadratic(4),
        s in symbol(),
        beta in 0.1..3.0f64,
        r in 0.1..2.0f64,
    ) {
        assert_smooth(&LossSpec::logistic(1.0).unwrap(), 0.25, &u, &v, &z)?;
        let b = lambda_max(&spec);
        assert_smooth(&spec, b, &u, &v, &z)?;
        assert_smooth(&LossSpec::linear_worstcase(2.0, 1.0).unwrap(), 0.0, &u, &v, &s)?;
        assert_smooth(&LossSpec::lecam_strongly_convex(beta, r, 10.0).unwrap(), beta, &u, &v, &s)?;
    }

    #[test]
    fn lecam_convex_is_smooth_within_each_piece(
        beta in 0.1..3.0f64,
        r in 0.1..2.0f64,
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        s in symbol(),
    ) {
        // Across the kink the slope drops from βr/2 to βr/4, so only
        // same-piece pairs are smooth.
        let shift = sign(&s) * r;
        let (ca, cb) = (a * r, b * r);
        let quad = |c: f64| c.abs() <= r / 2.0;
        prop_assume!(quad(ca) == quad(cb) && (quad(ca) || ca.signum() == cb.signum()));
        let spec = LossSpec::lecam_convex(beta, r, 10.0).unwrap();
        let u = ParamVector::new(vec![ca + shift]).unwrap();
        let v = ParamVector::new(vec![cb + shift]).unwrap();
        assert_smooth(&spec, beta, &u, &v, &s)?;
    }

    #[test]
    fn lecam_convex_pieces_agree_at_kinks(beta in 0.1..5.0f64, r in 0.05..3.0f64, s in symbol()) {
        let spec = LossSpec::lecam_convex(beta, r, 10.0).unwrap();
        let shift = sign(&s) * r;
        for c in [r / 2.0, -r / 2.0] {
            let v = loss_value(&spec, &ParamVector::new(vec![c + shift]).unwrap(), &s).unwrap();
            let expected = beta * r * r / 8.0;
            prop_assert!((v - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }
}
