mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fsl_qnlp::circuit::{CircuitIR, Gate, ParamMode, ParamStore};
use fsl_qnlp::simulator::{born_probabilities, run, simulate, StateVector};

fn assert_close(a: &[C], b: &[C], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).norm() < tol, "{x} vs {y}");
    }
}

#[test]
fn crz_only_phases_the_controlled_half() {
    let mut circuit = CircuitIR::new(2);
    circuit
        .push(Gate::H { qubit: 0 })
        .push(Gate::H { qubit: 1 })
        .push(Gate::CRz { control: 0, target: 1, angle: 1.3.into() });
    circuit.sentence_qubits = vec![0, 1];
    let store = ParamStore::new(ParamMode::Traditional);
    let s = simulate(&circuit, &store).unwrap();
    let h = 0.5;
    let want = [
        c(h, 0.0),
        c(h, 0.0),
        C::from_polar(h, -0.65),
        C::from_polar(h, 0.65),
    ];
    assert_close(s.amplitudes(), &want, 1e-14);
}

#[test]
fn post_selection_outcome_and_reorder() {
    // |0⟩ ⊗ Ry(θ)|0⟩ ⊗ |1⟩, keep qubits 2 then 1
    let mut circuit = CircuitIR::new(3);
    circuit
        .push(Gate::Ry { qubit: 1, angle: 0.8.into() })
        .push(Gate::Rx { qubit: 2, angle: std::f64::consts::PI.into() });
    circuit.postselect = vec![(0, 0)];
    circuit.sentence_qubits = vec![2, 1];
    let store = ParamStore::new(ParamMode::Traditional);
    let out = run(&circuit, &store).unwrap();
    let (dense, p) = dense_run(&circuit, &store);
    assert!((out.success_probability - p).abs() < 1e-14);
    assert_close(out.sentence_state.amplitudes(), &dense, 1e-14);
    let probs = born_probabilities(&out.sentence_state);
    assert!((probs[2] - (0.4f64).cos().powi(2)).abs() < 1e-14);
}

#[test]
fn zero_success_is_reported_unnormalised() {
    let mut circuit = CircuitIR::new(2);
    circuit.postselect = vec![(0, 1)];
    circuit.sentence_qubits = vec![1];
    let out = run(&circuit, &ParamStore::new(ParamMode::Traditional)).unwrap();
    assert!(out.is_zero_probability());
    assert_eq!(out.success_probability, 0.0);
}

#[test]
fn uncovered_qubits_rejected() {
    let mut circuit = CircuitIR::new(2);
    circuit.sentence_qubits = vec![1];
    assert!(run(&circuit, &ParamStore::new(ParamMode::Traditional)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_dense_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (circuit, store) = random_circuit(&mut rng, 4);
        let out = run(&circuit, &store).unwrap();
        let (dense, p) = dense_run(&circuit, &store);
        prop_assert!((out.success_probability - p).abs() < 1e-10);
        for (x, y) in out.sentence_state.amplitudes().iter().zip(&dense) {
            prop_assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn gates_preserve_norm(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (circuit, store) = random_circuit(&mut rng, 5);
        let s = simulate(&circuit, &store).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slices_partition_the_norm(seed in any::<u64>(), q in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps: Vec<C> = (0..8).map(|_| c(gaussian(&mut rng), gaussian(&mut rng))).collect();
        let mut s = StateVector::from_amplitudes(amps).unwrap();
        s.normalize();
        let total = s.slice(q, 0).unwrap().norm_sqr() + s.slice(q, 1).unwrap().norm_sqr();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}
