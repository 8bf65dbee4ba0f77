//! Exact dense statevector simulation.
//!
//! Amplitude layout: qubit 0 is the most significant bit of the basis
//! index, so `|q0 q1 … q(n-1)⟩` sits at index `Σ q_i 2^(n-1-i)`.

use num_complex::Complex64;

use crate::circuit::{Angle, CircuitIR, Gate, ParamStore};
use crate::error::{Error, Result};

/// Success probabilities below this are treated as a failed post-selection.
pub const ZERO_SUCCESS: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    qubits: usize,
}

impl StateVector {
    /// `|0…0⟩` on `qubits` qubits. Zero qubits gives the scalar 1.
    pub fn zero(qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { amplitudes, qubits }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        Ok(Self {
            qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.qubits - 1 - qubit)
    }

    fn check(&self, qubit: usize) -> Result<()> {
        if qubit >= self.qubits {
            Err(Error::QubitOutOfRange {
                qubit,
                count: self.qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Applies a 2×2 matrix `[[a, b], [c, d]]` to `target`, optionally only
    /// where `control` is 1.
    pub fn apply_single(
        &mut self,
        target: usize,
        control: Option<usize>,
        m: [[Complex64; 2]; 2],
    ) -> Result<()> {
        self.check(target)?;
        if let Some(c) = control {
            self.check(c)?;
            if c == target {
                return Err(Error::Config(format!(
                    "control and target are both qubit {c}"
                )));
            }
        }
        let t = self.mask(target);
        let cmask = control.map_or(0, |c| self.mask(c));
        for i in 0..self.amplitudes.len() {
            if i & t != 0 || i & cmask != cmask {
                continue;
            }
            let j = i | t;
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }

    /// Applies a gate whose angle (if any) has already been resolved.
    pub fn apply_gate(&mut self, gate: &Gate, angle: f64) -> Result<()> {
        match *gate {
            Gate::H { qubit } => self.apply_single(qubit, None, hadamard()),
            Gate::Rx { qubit, .. } => self.apply_single(qubit, None, rx(angle)),
            Gate::Ry { qubit, .. } => self.apply_single(qubit, None, ry(angle)),
            Gate::Rz { qubit, .. } => self.apply_single(qubit, None, rz(angle)),
            Gate::CRz { control, target, .. } => self.apply_single(target, Some(control), rz(angle)),
            Gate::CRx { control, target, .. } => self.apply_single(target, Some(control), rx(angle)),
            Gate::Cnot { control, target } => self.apply_single(target, Some(control), pauli_x()),
        }
    }

    /// Applies a gate resolving its angle against `params`.
    pub fn apply(&mut self, gate: &Gate, params: &ParamStore) -> Result<()> {
        let angle = match gate.angle() {
            Some(a) => params.resolve(a)?,
            None => 0.0,
        };
        self.apply_gate(gate, angle)
    }

    /// Projects `(qubit, outcome)` pairs and drops those qubits.
    ///
    /// The returned vector is not renormalised; its squared norm is the
    /// probability of the selected outcomes.
    pub fn project(&self, selections: &[(usize, u8)]) -> Result<StateVector> {
        for &(q, _) in selections {
            self.check(q)?;
        }
        let keep: Vec<usize> = (0..self.qubits)
            .filter(|q| !selections.iter().any(|&(s, _)| s == *q))
            .collect();
        let fixed: usize = selections
            .iter()
            .filter(|&&(_, b)| b != 0)
            .map(|&(q, _)| self.mask(q))
            .sum();
        let mut out = StateVector::zero(keep.len());
        for (k, slot) in out.amplitudes.iter_mut().enumerate() {
            let mut idx = fixed;
            for (pos, &q) in keep.iter().enumerate() {
                if k & (1 << (keep.len() - 1 - pos)) != 0 {
                    idx |= self.mask(q);
                }
            }
            *slot = self.amplitudes[idx];
        }
        Ok(out)
    }

    /// Sub-normalised vector with `qubit` fixed to `bit` and removed.
    pub fn slice(&self, qubit: usize, bit: u8) -> Result<StateVector> {
        self.project(&[(qubit, bit)])
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.qubits != other.qubits {
            return Err(Error::DimensionMismatch {
                left: self.qubits,
                right: other.qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

pub fn hadamard() -> [[Complex64; 2]; 2] {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

pub fn pauli_x() -> [[Complex64; 2]; 2] {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    [[z, o], [o, z]]
}

pub fn rx(theta: f64) -> [[Complex64; 2]; 2] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [[c.into(), -I * s], [-I * s, c.into()]]
}

pub fn ry(theta: f64) -> [[Complex64; 2]; 2] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [[c.into(), (-s).into()], [s.into(), c.into()]]
}

pub fn rz(theta: f64) -> [[Complex64; 2]; 2] {
    let z = Complex64::new(0.0, 0.0);
    [[(-I * theta / 2.0).exp(), z], [z, (I * theta / 2.0).exp()]]
}

/// Post-selected sentence state.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub sentence_state: StateVector,
    pub success_probability: f64,
}

impl RunOutcome {
    pub fn is_zero_probability(&self) -> bool {
        self.success_probability < ZERO_SUCCESS
    }
}

/// Prepares the full pre-measurement state of a circuit.
pub fn simulate(circuit: &CircuitIR, params: &ParamStore) -> Result<StateVector> {
    let mut state = StateVector::zero(circuit.qubit_count);
    for g in &circuit.gates {
        state.apply(g, params)?;
    }
    Ok(state)
}

/// Runs a circuit, post-selects and returns the normalised sentence state.
///
/// Every qubit must be either post-selected or a sentence qubit.
pub fn run(circuit: &CircuitIR, params: &ParamStore) -> Result<RunOutcome> {
    let state = simulate(circuit, params)?;
    let covered = circuit.postselect.len() + circuit.sentence_qubits.len();
    if covered != circuit.qubit_count {
        return Err(Error::Config(format!(
            "{covered} of {} qubits are post-selected or sentence qubits",
            circuit.qubit_count
        )));
    }
    let mut projected = state.project(&circuit.postselect)?;
    // `project` keeps qubits in index order; reorder to `sentence_qubits` order.
    let kept: Vec<usize> = (0..circuit.qubit_count)
        .filter(|q| !circuit.postselect.iter().any(|&(p, _)| p == *q))
        .collect();
    if kept != circuit.sentence_qubits {
        let n = kept.len();
        let mut reordered = StateVector::zero(n);
        for (k, slot) in reordered.amplitudes.iter_mut().enumerate() {
            let mut src = 0;
            for (pos, q) in circuit.sentence_qubits.iter().enumerate() {
                if k & (1 << (n - 1 - pos)) != 0 {
                    let at = kept.iter().position(|x| x == q).expect("sentence qubit kept");
                    src |= 1 << (n - 1 - at);
                }
            }
            *slot = projected.amplitudes[src];
        }
        projected = reordered;
    }
    let success_probability = projected.norm_sqr();
    if success_probability >= ZERO_SUCCESS {
        projected.normalize();
    }
    Ok(RunOutcome {
        sentence_state: projected,
        success_probability,
    })
}

pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

pub fn born_probabilities(state: &StateVector) -> Vec<f64> {
    state.amplitudes.iter().map(Complex64::norm_sqr).collect()
}

/// Resolves every angle up front; handy when one circuit is evaluated with
/// many parameter vectors.
pub fn resolved_angles(circuit: &CircuitIR, params: &ParamStore) -> Result<Vec<f64>> {
    circuit
        .gates
        .iter()
        .map(|g| match g.angle() {
            Some(a) => params.resolve(a),
            None => Ok(0.0),
        })
        .collect()
}

/// Simulates `gates` from `|0…0⟩` with angles supplied by `angle_of`.
pub fn simulate_with<F>(qubits: usize, gates: &[Gate], mut angle_of: F) -> Result<StateVector>
where
    F: FnMut(&Angle) -> Result<f64>,
{
    let mut state = StateVector::zero(qubits);
    for g in gates {
        let angle = match g.angle() {
            Some(a) => angle_of(a)?,
            None => 0.0,
        };
        state.apply_gate(g, angle)?;
    }
    Ok(state)
}
