//! Approximate amplitude encoding of signed real vectors.
//!
//! The positive and negative parts sit on the two branches of an ancilla
//! (the last, least significant qubit). A Hadamard on the ancilla puts
//! `(D⁺ − D⁻)/√2` on its `|1⟩` branch, which post-selection keeps.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::circuit::{Angle, Gate};
use crate::error::{Error, Result};
use crate::simulator::{simulate_with, StateVector, ZERO_SUCCESS};
use crate::spsa::{spsa_step, SpsaConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignSplit {
    pub plus: Vec<f64>,
    /// Magnitudes of the negative entries.
    pub minus: Vec<f64>,
    /// Data qubits `n`, with `plus.len() == 2^n`.
    pub qubits: usize,
}

pub fn sign_split(data: &[f64]) -> Result<SignSplit> {
    if !data.len().is_power_of_two() {
        return Err(Error::NotPowerOfTwo(data.len()));
    }
    if data.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(SignSplit {
        plus: data.iter().map(|v| v.max(0.0)).collect(),
        minus: data.iter().map(|v| (-v).max(0.0)).collect(),
        qubits: data.len().trailing_zeros() as usize,
    })
}

/// Keeps the ancilla-`1` branch after a Hadamard on the ancilla.
fn interfere(mut state: StateVector) -> Result<(StateVector, f64)> {
    let ancilla = state.qubits() - 1;
    state.apply_gate(&Gate::H { qubit: ancilla }, 0.0)?;
    let mut kept = state.project(&[(ancilla, 1)])?;
    let success = kept.norm_sqr();
    if success >= ZERO_SUCCESS {
        kept.normalize();
    }
    Ok((kept, success))
}

/// Normalised recovered data state and the post-selection probability.
pub fn aae_recover(split: &SignSplit) -> Result<(StateVector, f64)> {
    let mut amps = vec![Complex64::new(0.0, 0.0); split.plus.len() * 2];
    for (i, (p, m)) in split.plus.iter().zip(&split.minus).enumerate() {
        amps[2 * i] = Complex64::new(*p, 0.0);
        amps[2 * i + 1] = Complex64::new(*m, 0.0);
    }
    interfere(StateVector::from_amplitudes(amps)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AaeFit {
    pub params: Vec<f64>,
    pub initial_fidelity: f64,
    pub fidelity: f64,
    pub steps: usize,
}

/// SPSA defaults for [`aae_variational_fit`]: the classifier schedule with a
/// tenfold step gain.
pub fn fit_config(steps: usize) -> SpsaConfig {
    SpsaConfig {
        a: 0.5,
        ..SpsaConfig::for_epochs(steps)
    }
}

/// Fidelity between `target` and the recovered state of the ansatz at `theta`.
pub fn aae_fidelity(target: &[f64], spec: &AnsatzSpec, theta: &[f64]) -> Result<f64> {
    let width = target.len().trailing_zeros() as usize + 1;
    let gates = spec.gates(width, |i| Angle::Const(theta[i]))?;
    let state = simulate_with(width, &gates, |a| match a {
        Angle::Const(v) => Ok(*v),
        Angle::Param(r) => Err(Error::UnresolvedParam(r.to_string())),
    })?;
    let (kept, success) = interfere(state)?;
    if success < ZERO_SUCCESS {
        return Ok(0.0);
    }
    let overlap: Complex64 = kept
        .amplitudes()
        .iter()
        .zip(target)
        .map(|(a, t)| a * t)
        .sum();
    Ok(overlap.norm_sqr())
}

/// SPSA on `1 − fidelity` from all-zero parameters. The ansatz spans the
/// data qubits plus the ancilla.
pub fn aae_variational_fit(
    target: &[f64],
    spec: &AnsatzSpec,
    config: &SpsaConfig,
    steps: usize,
    seed: u64,
) -> Result<AaeFit> {
    config.validate()?;
    let split = sign_split(target)?;
    let norm = target.iter().map(|v| v * v).sum::<f64>().sqrt();
    let target: Vec<f64> = target.iter().map(|v| v / norm).collect();
    let width = split.qubits + 1;
    let mut theta = vec![0.0; spec.param_count(width)];
    let initial_fidelity = aae_fidelity(&target, spec, &theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..steps {
        spsa_step(
            &mut theta,
            |p| aae_fidelity(&target, spec, p).map_or(f64::NAN, |f| 1.0 - f),
            config,
            k,
            &mut rng,
        );
    }
    let fidelity = aae_fidelity(&target, spec, &theta)?;
    if !fidelity.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok(AaeFit {
        params: theta,
        initial_fidelity,
        fidelity,
        steps,
    })
}
