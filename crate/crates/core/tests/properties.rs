use proptest::prelude::*;

use qudit::algebra::{commutes, compose, pauli_matrix, PauliLabel};
use qudit::bipartite::{numeric_schmidt_rank, schmidt_forms};
use qudit::crypto::{feed_forward_plan, fourier_distribution, total_variation};
use qudit::eigensolver::{analytic_eigensystem, eigencondition_check};
use qudit::optics::{reck_decompose, transfer_matrix, OpticalCircuit, OpticalElement};
use qudit::random::{random_density_matrix, random_unitary, rng_from_seed};
use qudit::tomography::{
    coefficients_from_state, exact_frequencies, reconstruct, sample_with, state_from_coefficients,
    trace_distance, DensityMatrix,
};

fn label(max_d: usize) -> impl Strategy<Value = PauliLabel> {
    (2..=max_d)
        .prop_flat_map(|d| (Just(d), 0..d, 0..d))
        .prop_map(|(d, k, l)| PauliLabel::new(d, k, l).unwrap())
}

fn label_pair(max_d: usize) -> impl Strategy<Value = (PauliLabel, PauliLabel)> {
    (2..=max_d)
        .prop_flat_map(|d| (Just(d), 0..d, 0..d, 0..d, 0..d))
        .prop_map(|(d, a, b, c, e)| {
            (
                PauliLabel::new(d, a, b).unwrap(),
                PauliLabel::new(d, c, e).unwrap(),
            )
        })
}

fn composite() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=4, 2usize..=4).prop_filter("d ≤ 12", |(a, b)| a * b <= 12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compose_matches_matrix_product((a, b) in label_pair(9)) {
        let prod = compose(a, b).unwrap();
        let lhs = &pauli_matrix(a) * &pauli_matrix(b);
        let rhs = pauli_matrix(prod.label).scale(prod.phase_root().value());
        prop_assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn commutation_matches_commutator((a, b) in label_pair(9)) {
        let (ma, mb) = (pauli_matrix(a), pauli_matrix(b));
        let comm = (&ma * &mb).sub(&(&mb * &ma)).unwrap();
        prop_assert_eq!(commutes(a, b).unwrap(), comm.max_abs() < 1e-12);
        prop_assert_eq!(commutes(a, b).unwrap(), commutes(b, a).unwrap());
    }

    #[test]
    fn analytic_eigensystem_is_exact(lbl in label(16)) {
        let sys = analytic_eigensystem(lbl);
        prop_assert!(sys.orthonormality_deviation() < 1e-10);
        prop_assert!(sys.max_residual(&pauli_matrix(lbl)).unwrap() < 1e-10);
        prop_assert!(eigencondition_check(lbl, &sys).unwrap() < 1e-10);
    }

    #[test]
    fn schmidt_rank_matches_svd((d1, d0) in composite(), k in 0usize..12, l in 0usize..12) {
        let d = d1 * d0;
        let lbl = PauliLabel::new(d, k % d, l % d).unwrap();
        for form in schmidt_forms(d1, d0, lbl).unwrap() {
            let v = form.reassemble();
            prop_assert_eq!(form.rank, numeric_schmidt_rank(&v, d1, d0, 1e-9).unwrap());
        }
    }

    #[test]
    fn coefficient_round_trip(d in 2usize..=8, seed in any::<u64>()) {
        let rho = DensityMatrix::new(random_density_matrix(d, &mut rng_from_seed(seed))).unwrap();
        let back = state_from_coefficients(&coefficients_from_state(&rho)).unwrap();
        prop_assert!(back.matrix().approx_eq(rho.matrix(), 1e-12));
    }

    #[test]
    fn exact_reconstruction(d in 2usize..=6, seed in any::<u64>()) {
        let rho = DensityMatrix::new(random_density_matrix(d, &mut rng_from_seed(seed))).unwrap();
        let est = reconstruct(&exact_frequencies(&rho)).unwrap();
        prop_assert!(trace_distance(est.matrix(), rho.matrix()).unwrap() < 1e-9);
    }

    #[test]
    fn multinomial_total(n in 0u64..10_000, seed in any::<u64>(), w in prop::collection::vec(0.0f64..1.0, 1..8)) {
        let total: f64 = w.iter().sum();
        prop_assume!(total > 0.0);
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let counts = sample_with(&p, n, &mut rng_from_seed(seed));
        prop_assert_eq!(counts.iter().sum::<u64>(), n);
        for (c, q) in counts.iter().zip(&p) {
            if *q == 0.0 {
                prop_assert_eq!(*c, 0);
            }
        }
    }

    #[test]
    fn feed_forward_equals_global((d1, d0) in composite(), seed in any::<u64>()) {
        let plan = feed_forward_plan(d1, d0).unwrap();
        let rho = random_density_matrix(d1 * d0, &mut rng_from_seed(seed));
        let tv = total_variation(&plan.exact_distribution(&rho).unwrap(), &fourier_distribution(&rho).unwrap());
        prop_assert!(tv < 1e-10);
    }

    #[test]
    fn reck_reassembles(n in 1usize..=10, seed in any::<u64>()) {
        let u = random_unitary(n, &mut rng_from_seed(seed));
        let r = reck_decompose(&u).unwrap();
        prop_assert!(r.mixers.len() <= n * (n - 1) / 2);
        prop_assert!(r.reassemble().max_abs_diff(&u) < 1e-9);
    }

    #[test]
    fn circuits_are_unitary(ops in prop::collection::vec((0usize..6, 0usize..3, 0usize..3, -3.0f64..3.0), 0..12)) {
        let elements: Vec<OpticalElement> = ops
            .into_iter()
            .map(|(kind, a, b, theta)| {
                let b2 = if a == b { (a + 1) % 3 } else { b };
                match kind {
                    0 => OpticalElement::BeamSplitter { a, b: b2 },
                    1 => OpticalElement::PolarizingBs { a, b: Some(b2) },
                    2 => OpticalElement::Pbs45 { a, b: None },
                    3 => OpticalElement::PathPhase { path: a, theta },
                    4 => OpticalElement::PolPhase { path: a, theta },
                    _ => OpticalElement::PolRotator { path: a, theta },
                }
            })
            .collect();
        let circ = OpticalCircuit::new(3, elements, vec![]).unwrap();
        prop_assert!(transfer_matrix(&circ).unitarity_deviation() < 1e-10);
    }

    #[test]
    fn eigenvalues_unit_modulus(lbl in label(16)) {
        for z in analytic_eigensystem(lbl).eigenvalues() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }
}
