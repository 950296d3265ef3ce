mod common;

use proptest::prelude::*;

use preqmc::estimators::{ks_test, loglog_slope, mean_and_rmse};
use preqmc::fem::{assemble, Mesh};
use preqmc::fields::FieldExpansion;
use preqmc::oracle::brute_worst_case_error_sq;
use preqmc::parametric::QoiComponents;
use preqmc::preintegration::{g_cdf, g_pdf, PreintPoint};
use preqmc::qmc::{cbc_construct, gcd, ln_worst_case_error_sq, LatticeRule};
use preqmc::special::{normal_cdf, normal_quantile};
use preqmc::weights::WeightScheme;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lattice_points_stay_in_unit_cube(n in 2usize..400, seed in any::<u64>(), raw in prop::collection::vec(1u64..10_000, 1..6)) {
        let z: Vec<u64> = raw.into_iter().map(|v| {
            let mut z = v % n as u64;
            while gcd(z, n as u64) != 1 { z = (z + 1) % n as u64; }
            z
        }).collect();
        let rule = LatticeRule::new(n, z.clone(), 2, seed).unwrap();
        let mut p = vec![0.0; z.len()];
        for i in (0..n).step_by(1 + n / 37) {
            for sh in 0..2 {
                rule.point_into(i, sh, &mut p);
                prop_assert!(p.iter().all(|v| (0.0..1.0).contains(v)));
            }
        }
    }

    #[test]
    fn pod_recursion_matches_subset_sum(
        gamma in prop::collection::vec(0.01f64..2.0, 1..5),
        order in prop::collection::vec(-3.0f64..6.0, 5),
        zs in prop::collection::vec(1u64..37, 4),
    ) {
        let d = gamma.len();
        let mut ln_order = vec![0.0];
        ln_order.extend_from_slice(&order[..d]);
        let w = WeightScheme::new(gamma.iter().map(|g| g.ln()).collect(), ln_order).unwrap();
        let z = &zs[..d];
        let fast = ln_worst_case_error_sq(37, z, &w).unwrap().exp();
        let brute = brute_worst_case_error_sq(37, z, &w);
        prop_assert!((fast - brute).abs() <= 1e-11 * brute.abs().max(1e-300));
    }

    #[test]
    fn cbc_components_are_units(n in prop::sample::select(vec![31usize, 64, 97, 100, 127]), d in 1usize..5) {
        let w = WeightScheme::product(&(0..d).map(|j| 1.0 / (1.0 + j as f64).powi(2)).collect::<Vec<_>>()).unwrap();
        let r = cbc_construct(n, &w).unwrap();
        prop_assert_eq!(r.z_gen[0], 1);
        for &z in &r.z_gen {
            prop_assert!(z >= 1 && z <= n as u64 / 2 && gcd(z, n as u64) == 1);
        }
        prop_assert!(r.ln_error_sq.windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn quantile_round_trip(u in 1e-12f64..(1.0 - 1e-12)) {
        prop_assert!((normal_cdf(normal_quantile(u)) - u).abs() <= 1e-12_f64.max(1e-10 * u.min(1.0 - u)));
    }

    #[test]
    fn ks_statistic_bounds(xs in prop::collection::vec(-1.0f64..2.0, 1..200)) {
        let r = ks_test(&[0.0, 1.0], &[0.0, 1.0], &xs).unwrap();
        prop_assert!(r.d >= 0.5 / xs.len() as f64 - 1e-15 && r.d <= 1.0);
    }

    #[test]
    fn preintegrated_integrands_are_distribution_like(
        phibar in -0.2f64..0.2, phi0 in 0.001f64..0.5,
        phi in prop::collection::vec(-0.1f64..0.1, 0..4),
        w in prop::collection::vec(-3.0f64..3.0, 4),
        t0 in -1.0f64..1.0, dt in 0.0f64..0.5,
    ) {
        let s = phi.len();
        let mut all = vec![phi0];
        all.extend_from_slice(&phi);
        let q = QoiComponents { z: vec![0.0; s], phibar, phi: all, a_min_lb: 1.0, a_max_ub: 1.0 };
        let p = PreintPoint::new(w[..s].to_vec(), q).unwrap();
        let (a, b) = (g_cdf(t0, &p), g_cdf(t0 + dt, &p));
        prop_assert!((0.0..=1.0).contains(&a) && b >= a);
        prop_assert!(g_pdf(t0, &p) >= 0.0);
    }

    #[test]
    fn replicate_rmse_is_shift_invariant(v in prop::collection::vec(-5.0f64..5.0, 2..20), c in -100.0f64..100.0) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let (m0, r0) = mean_and_rmse(&v);
        let (m1, r1) = mean_and_rmse(&shifted);
        prop_assert!((m1 - m0 - c).abs() < 1e-9);
        prop_assert!((r1 - r0).abs() < 1e-9);
    }

    #[test]
    fn slope_recovers_power_law(a in 0.1f64..10.0, p in -2.0f64..0.0) {
        let x = [251.0, 503.0, 1009.0, 2003.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| a * v.powf(p)).collect();
        prop_assert!((loglog_slope(&x, &y) - p).abs() < 1e-10);
    }

    #[test]
    fn stiffness_is_symmetric_with_positive_diagonal(z in prop::collection::vec(-4.0f64..4.0, 3)) {
        let fe = FieldExpansion::paper_family(2, 3, 1.0, 2.0).unwrap();
        let mesh = Mesh::uniform(2, 3).unwrap();
        let sys = assemble(&mesh, &fe, &z).unwrap();
        prop_assert!(sys.matrix.asymmetry() < 1e-12);
        prop_assert!(sys.matrix.diagonal().iter().all(|&d| d > 0.0));
    }
}
