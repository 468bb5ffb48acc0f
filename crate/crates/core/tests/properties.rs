use proptest::prelude::*;

use qdamp::channels::{extract_kraus, rho_out_two, thetas_two, u_ad_two_circuit, ENV_INITIAL_TWO};
use qdamp::experiment::{run_collective, ExperimentConfig, ExperimentKind};
use qdamp::gates::{controlled_unitary, decompose_c2ry, verify_decomposition, Circuit, Gate};
use qdamp::lindblad::analytic_two;
use qdamp::tensor::{c, is_unitary, ComplexMatrix, StateVector};

fn density_from(entries: &[(f64, f64)]) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(4, 4, |r, col| {
        let (a, b) = entries[4 * r + col];
        c(a, b)
    });
    let w = g.matmul(&g.adjoint()).unwrap();
    let tr = w.trace().re;
    w.scale(c(1.0 / tr, 0.0)).hermitize()
}

fn entries() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16)
        .prop_filter("non-degenerate", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channel_output_is_a_state(e in entries(), t in 0.0..0.25f64) {
        let rho = density_from(&e);
        let out = rho_out_two(&rho, &thetas_two(t, 1.0).unwrap()).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() <= 1e-10);
        prop_assert!(out.is_density_matrix(1e-10));
    }

    #[test]
    fn analytic_evolution_stays_physical(e in entries(), t in 0.0..3.0f64) {
        let rho = density_from(&e);
        let out = analytic_two(&rho, t, 1.0).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() <= 1e-10);
        prop_assert!(out.is_hermitian(1e-12));
    }

    #[test]
    fn circuit_is_unitary_and_kraus_complete(t in 0.0..0.25f64) {
        let u = u_ad_two_circuit(&thetas_two(t, 1.0).unwrap()).unwrap().unitary().unwrap();
        prop_assert!(is_unitary(&u, 1e-12));
        let k = extract_kraus(&u, 4, ENV_INITIAL_TWO).unwrap();
        prop_assert!(k.completeness_deviation().unwrap() <= 1e-12);
    }

    #[test]
    fn subradiant_state_is_fixed(t in 0.0..10.0f64) {
        let dark = ComplexMatrix::outer(&StateVector::basis(4, 0).unwrap());
        prop_assert!(analytic_two(&dark, t, 1.0).unwrap().approx_eq(&dark, 1e-15));
    }
}

#[test]
fn verifier_catches_a_flipped_rotation() {
    let a = 1.1f64;
    let direct = controlled_unitary(4, &[1, 2], &[0], &Gate::Ry(a).matrix()).unwrap();
    let mut broken = Circuit::new(4);
    for g in decompose_c2ry(a, (1, 2), 0, 4).unwrap().gates() {
        let g = if g.name == "Ry" { g.adjoint() } else { g.clone() };
        broken.push(g).unwrap();
    }
    let rep = verify_decomposition(&broken, &direct, 1e-10).unwrap();
    assert!(!rep.pass);
    assert!(rep.worst_entry.is_some());
    assert!((rep.max_abs_diff - 2.0 * (a / 2.0).sin()).abs() < 1e-12, "{}", rep.max_abs_diff);
    let ok = verify_decomposition(&decompose_c2ry(a, (1, 2), 0, 4).unwrap(), &direct, 1e-10).unwrap();
    assert!(ok.pass);
}

#[test]
fn sampled_rows_sit_in_the_statistical_band() {
    for l in 1..=6u8 {
        let cfg = ExperimentConfig {
            experiment: ExperimentKind::Collective,
            initial: l,
            n_shots: 1 << 12,
            n_ave: 20,
            seed: 99,
            ..Default::default()
        };
        for row in run_collective(&cfg).unwrap().rows {
            assert!((row.jz_mean - row.jz_exact_me).abs() <= 5.0 * row.jz_var.sqrt() + 5e-4, "l={l} t={}", row.t);
            assert!(row.jz_var >= 0.0);
            assert_eq!(row.pooled_counts.iter().sum::<u64>(), cfg.n_shots * cfg.n_ave);
            assert!((row.weights.iter().sum::<f64>() - 1.0).abs() <= 4.0 * f64::EPSILON);
        }
    }
}
