use proptest::prelude::*;

use stablab::matrixlemmas::{
    hb_lemma_check, nag_lemma_check, recursion_u, recursion_u_ratio, spectral_norm, TwoByTwo,
};

fn matrix() -> impl Strategy<Value = TwoByTwo> {
    prop::array::uniform4(-10.0..10.0f64).prop_map(|[a, b, c, d]| TwoByTwo::new(a, b, c, d))
}

/// Largest eigenvalue of MᵀM by power iteration, square-rooted.
fn power_iteration_norm(m: &TwoByTwo) -> f64 {
    let g = [
        [m.a11 * m.a11 + m.a21 * m.a21, m.a11 * m.a12 + m.a21 * m.a22],
        [m.a11 * m.a12 + m.a21 * m.a22, m.a12 * m.a12 + m.a22 * m.a22],
    ];
    let (mut x, mut y) = (1.0f64, 0.618f64);
    let mut lambda = 0.0;
    for _ in 0..200 {
        let (nx, ny) = (g[0][0] * x + g[0][1] * y, g[1][0] * x + g[1][1] * y);
        let norm = nx.hypot(ny);
        if norm == 0.0 {
            return 0.0;
        }
        (x, y) = (nx / norm, ny / norm);
        lambda = x * (g[0][0] * x + g[0][1] * y) + y * (g[1][0] * x + g[1][1] * y);
    }
    lambda.max(0.0).sqrt()
}

proptest! {
    #[test]
    fn spectral_norm_matches_power_iteration(m in matrix()) {
        let exact = spectral_norm(&m);
        // Power iteration converges at rate (σ2/σ1)^2 per step, so skip
        // nearly degenerate singular values.
        let sigma_min = (m.det().abs() / exact.max(1e-300)).min(exact);
        prop_assume!(sigma_min / exact < 0.9);
        prop_assert!((exact - power_iteration_norm(&m)).abs() <= 1e-10 * exact.max(1.0));
    }

    #[test]
    fn spectral_norm_is_submultiplicative(a in matrix(), b in matrix()) {
        let lhs = spectral_norm(&a.mul(&b));
        let rhs = spectral_norm(&a) * spectral_norm(&b);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn nag_products_stay_within_the_linear_bound(h in 0.0..=1.0f64, gammas in prop::collection::vec(-1.0..0.999f64, 1..64)) {
        let c = nag_lemma_check(h, &gammas).unwrap();
        prop_assert!(c.ok, "norm {} bound {}", c.norm, c.bound);
    }

    #[test]
    fn hb_powers_stay_bounded(gamma in 0.0..0.99f64, frac in 0.0..=1.0f64, t in 0usize..200) {
        let c = hb_lemma_check(gamma, frac * (1.0 - gamma), t).unwrap();
        prop_assert!(c.ok, "norm {} bound {}", c.norm, c.bound);
    }

    #[test]
    fn recursion_stays_below_index_plus_one(h in 0.0..=1.0f64) {
        let (ratio, i) = recursion_u_ratio(&recursion_u(h, 128).unwrap());
        prop_assert!(ratio <= 1.0 + 1e-9, "ratio {ratio} at i = {i}");
    }
}

#[test]
fn recursion_grid_sweep() {
    for k in 0..=100 {
        let h = k as f64 / 100.0;
        let seq = recursion_u(h, 128).unwrap();
        for (i, a) in seq.iter().enumerate() {
            assert!(a.abs() <= i as f64 + 1.0 + 1e-9, "h = {h}, i = {i}: {a}");
        }
    }
}
