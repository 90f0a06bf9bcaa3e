use stablab::bounds::{minimax_bound, Setting, UniversalConstants};
use stablab::lecam::{bayes_error_from_tv, phi, phi_certificate, tv_kl_product, Variant};

#[test]
fn two_point_construction_stays_hard_to_test() {
    for n in 1..=24 {
        let (tv, kl) = tv_kl_product(n).unwrap();
        assert!(tv * tv <= kl / 2.0, "Pinsker fails at n = {n}");
        assert!(tv <= 0.5, "n = {n}: tv = {tv}");
        assert!(bayes_error_from_tv(tv) >= 0.25);
    }
}

#[test]
fn phi_certificates_and_minimax_constants() {
    let uc = UniversalConstants::default();
    for (radius, beta) in [(1.0, 1.0), (2.0, 0.3), (0.5, 4.0)] {
        let r = radius / 2.0;
        for n in [1u64, 4, 16, 64] {
            for variant in [Variant::Convex, Variant::StronglyConvex] {
                let c = phi_certificate(variant, n, beta, r, r / 400.0).unwrap();
                assert!(c.pass, "{variant:?} n = {n}: grid {} < phi {}", c.grid_min, c.phi_formula);
            }
            let convex = minimax_bound(Setting::ConvexSmooth, n, radius, beta, &uc).unwrap();
            let sc = minimax_bound(Setting::StronglyConvexSmooth, n, radius, beta, &uc).unwrap();
            let nf = n as f64;
            assert!((convex - radius * radius * beta / (256.0 * (6.0 * nf).sqrt())).abs() <= 1e-12);
            assert!((sc - radius * radius * beta / (192.0 * nf)).abs() <= 1e-12);
            // The convex chain gives four times the displayed constant.
            assert!((phi(Variant::Convex, beta, r, n) / 4.0 - 4.0 * convex).abs() <= 1e-12);
            assert!((phi(Variant::StronglyConvex, beta, r, n) / 4.0 - sc).abs() <= 1e-12);
        }
    }
}
