use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rodsim_core::da::da_viscous_stress;
use rodsim_core::moments::{mass_density, moment_bound_excess, moment_tensor, viscous_stress};
use rodsim_core::ops::*;
use rodsim_core::random::*;
use rodsim_core::{Grid, ScalarField, TensorField2x2, VectorField};

fn grid() -> Grid {
    Grid::new(16, 12).unwrap()
}

fn arb_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 16 * 12)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval(v in arb_values()) {
        let g = grid();
        let f = ScalarField::from_values(&g, &v);
        let direct: f64 = v.iter().map(|x| x * x).sum::<f64>() * g.cell_area();
        prop_assert!((f.l2_norm_sq() - direct).abs() <= 1e-12 * direct.max(1.0));
        let back = f.values();
        prop_assert!(back.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    #[test]
    fn galerkin_projection_is_an_orthogonal_projector(a in arb_values(), b in arb_values(), ell in 1usize..40) {
        let g = grid();
        let (f, h) = (ScalarField::from_values(&g, &a), ScalarField::from_values(&g, &b));
        let (pf, _) = galerkin_project(&f, ell).unwrap();
        let (ph, _) = galerkin_project(&h, ell).unwrap();
        let (ppf, _) = galerkin_project(&pf, ell).unwrap();
        prop_assert_eq!(ppf.coeffs(), pf.coeffs());
        let (l, r) = (pf.inner(&h), f.inner(&ph));
        prop_assert!((l - r).abs() <= 1e-12 * (1.0 + l.abs()));
    }

    #[test]
    fn leray_projection_properties(a in arb_values(), b in arb_values(), seed in 0u64..1000) {
        let g = grid();
        let v = VectorField::new(ScalarField::from_values(&g, &a), ScalarField::from_values(&g, &b));
        let pv = leray_project(&v);
        prop_assert!(max_divergence(&pv) < 1e-12);
        let ppv = leray_project(&pv);
        let mut d = ppv.clone();
        d.axpy(-1.0, &pv);
        prop_assert!(d.l2_norm_sq() < 1e-24);
        // The discarded part is orthogonal to divergence-free fields.
        let w = random_velocity(&g, &mut rng(seed), 1.0, 4);
        let mut rest = v.clone();
        rest.axpy(-1.0, &pv);
        prop_assert!(rest.inner(&w).abs() < 1e-11);
    }

    #[test]
    fn da_stress_is_symmetric_and_homogeneous(seed in 0u64..1000, s in -3.0f64..3.0) {
        let g = grid();
        let mut r = rng(seed);
        let u = random_velocity(&g, &mut r, 1.0, 3);
        let a = random_conformation(&g, &mut r, 0.3, 3);
        let sigma = da_viscous_stress(&u, &a, 1.5);
        prop_assert!(sigma.is_symmetric());
        let scaled = da_viscous_stress(&u.map(|f| f.scaled(s)), &a, 1.5);
        let diff = scaled.add(&sigma.scaled(-s));
        prop_assert!(diff.l2_norm_sq().sqrt() <= 1e-12 * (1.0 + sigma.l2_norm_sq().sqrt()));
    }

    #[test]
    fn kinetic_viscous_stress_is_linear_in_the_gradient(seed in 0u64..1000, s in -2.0f64..2.0) {
        let g = grid();
        let mut r = rng(seed);
        let f = random_distribution(&g, &mut r, 6, 0.3, 3);
        let g1 = velocity_gradient(&random_velocity(&g, &mut r, 1.0, 3));
        let g2 = velocity_gradient(&random_velocity(&g, &mut r, 1.0, 3));
        let combo = g1.add(&g2.scaled(s));
        let lhs = viscous_stress(&f, &combo, 0.7).unwrap();
        let rhs = viscous_stress(&f, &g1, 0.7).unwrap().add(&viscous_stress(&f, &g2, 0.7).unwrap().scaled(s));
        let diff = lhs.add(&rhs.scaled(-1.0));
        prop_assert!(diff.l2_norm_sq().sqrt() <= 1e-12 * (1.0 + lhs.l2_norm_sq().sqrt()));
    }

    #[test]
    fn moments_of_positive_distributions_are_bounded(seed in 0u64..1000, ratio in 0.0f64..0.3) {
        let g = grid();
        let f = random_distribution(&g, &mut rng(seed), 8, ratio, 3);
        let m0 = mass_density(&f);
        for n in [2usize, 4, 6] {
            let m = moment_tensor(&f, n).unwrap();
            prop_assert!(moment_bound_excess(&m, &m0) <= 1e-12);
        }
    }

    #[test]
    fn unit_trace_tensors_satisfy_the_frobenius_identity(seed in 0u64..1000) {
        let g = grid();
        let a: TensorField2x2 = random_conformation(&g, &mut rng(seed), 0.3, 3);
        let report = rodsim_core::da::structural_report(&a);
        prop_assert!(report.frobenius_identity_err < 1e-12);
        prop_assert!(report.max_det <= 0.25 + 1e-15);
    }
}
