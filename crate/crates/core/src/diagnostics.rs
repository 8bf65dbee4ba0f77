//! Expressibility against Haar-random states and the Meyer-Wallach measure.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::circuit::{Angle, Gate, ParamRef, ParamScope};
use crate::error::{Error, Result};
use crate::simulator::{simulate_with, StateVector};

pub const DEFAULT_BINS: usize = 75;
pub const DEFAULT_SAMPLES: usize = 5000;

/// A parameterised state preparation from `|0…0⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub name: String,
    pub qubits: usize,
    pub layers: usize,
    pub params: usize,
    pub gates: Vec<Gate>,
}

fn slot(i: usize) -> Angle {
    Angle::Param(ParamRef::new(ParamScope::Word, "theta", i))
}

impl Template {
    pub fn from_ansatz(spec: &AnsatzSpec, width: usize) -> Result<Self> {
        Ok(Self {
            name: spec.kind.to_string(),
            qubits: width,
            layers: spec.layers,
            params: spec.param_count(width),
            gates: spec.gates(width, slot)?,
        })
    }

    /// H then Rz(θ) on one qubit: states confined to the equator.
    pub fn single_rz() -> Self {
        Self {
            name: "rz".into(),
            qubits: 1,
            layers: 1,
            params: 1,
            gates: vec![Gate::H { qubit: 0 }, Gate::Rz { qubit: 0, angle: slot(0) }],
        }
    }

    /// No parameters; always `|0…0⟩`.
    pub fn fixed(qubits: usize) -> Self {
        Self {
            name: "fixed".into(),
            qubits,
            layers: 0,
            params: 0,
            gates: Vec::new(),
        }
    }

    pub fn state(&self, theta: &[f64]) -> Result<StateVector> {
        simulate_with(self.qubits, &self.gates, |a| match a {
            Angle::Const(v) => Ok(*v),
            Angle::Param(r) => theta
                .get(r.index)
                .copied()
                .ok_or_else(|| Error::UnresolvedParam(r.to_string())),
        })
    }
}

/// `samples` fidelities `|⟨ψ(θ)|ψ(φ)⟩|²` with θ, φ uniform on [0, 2π)^dim.
pub fn sample_fidelities<R: Rng + ?Sized>(
    template: &Template,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::Config("need at least two fidelity samples".into()));
    }
    let draw = |rng: &mut R| -> Vec<f64> {
        (0..template.params).map(|_| rng.random_range(0.0..TAU)).collect()
    };
    (0..samples)
        .map(|_| {
            let a = template.state(&draw(rng))?;
            let b = template.state(&draw(rng))?;
            Ok(a.inner(&b)?.norm_sqr())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityHistogram {
    pub counts: Vec<usize>,
    pub samples: usize,
}

impl FidelityHistogram {
    /// Uniform bins on [0, 1]; F = 1 lands in the last bin.
    pub fn from_samples(fidelities: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        let mut counts = vec![0; bins];
        for &f in fidelities {
            let i = ((f.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Ok(Self {
            counts,
            samples: fidelities.len(),
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn edges(&self) -> Vec<f64> {
        let b = self.bins() as f64;
        (0..=self.bins()).map(|i| i as f64 / b).collect()
    }

    pub fn to_csv(&self) -> String {
        let edges = self.edges();
        let mut s = String::from("bin_low,bin_high,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(s, "{},{},{c}", edges[i], edges[i + 1]);
        }
        s
    }
}

/// Haar probability of each uniform bin for states of dimension `d`:
/// `(1 − a)^{d−1} − (1 − b)^{d−1}` on `[a, b]`.
pub fn haar_bin_mass(bins: usize, d: usize) -> Vec<f64> {
    let cdf_tail = |f: f64| (1.0 - f).powi(d as i32 - 1);
    (0..bins)
        .map(|i| {
            let a = i as f64 / bins as f64;
            let b = (i + 1) as f64 / bins as f64;
            cdf_tail(a) - cdf_tail(b)
        })
        .collect()
}

/// `D_KL(P̂ ‖ P_Haar)`, skipping empty bins.
pub fn kl_vs_haar(hist: &FidelityHistogram, d: usize) -> Result<f64> {
    if hist.samples == 0 {
        return Err(Error::Empty("fidelity histogram"));
    }
    if d < 2 {
        return Err(Error::Config(format!("Hilbert space dimension {d} is below 2")));
    }
    let haar = haar_bin_mass(hist.bins(), d);
    let n = hist.samples as f64;
    Ok(hist
        .counts
        .iter()
        .zip(&haar)
        .filter(|(c, _)| **c > 0)
        .map(|(c, q)| {
            let p = *c as f64 / n;
            p * (p / q).ln()
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressibilityReport {
    pub ansatz: String,
    pub qubits: usize,
    pub layers: usize,
    pub samples: usize,
    pub bins: usize,
    pub seed: u64,
    pub kl_divergence: f64,
    pub histogram: FidelityHistogram,
}

pub fn expressibility(template: &Template, samples: usize, bins: usize, seed: u64) -> Result<ExpressibilityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fids = sample_fidelities(template, samples, &mut rng)?;
    let histogram = FidelityHistogram::from_samples(&fids, bins)?;
    let kl_divergence = kl_vs_haar(&histogram, 1 << template.qubits)?;
    Ok(ExpressibilityReport {
        ansatz: template.name.clone(),
        qubits: template.qubits,
        layers: template.layers,
        samples,
        bins,
        seed,
        kl_divergence,
        histogram,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeyerWallach {
    pub q: f64,
    /// False for a single qubit, where Q is reported as 0.
    pub defined: bool,
}

/// `Q = (4/N) Σ_j D(ι_j(0)ψ, ι_j(1)ψ)` with raw (sub-normalised) slices and
/// `D(u, v) = ½ Σ_{i,k} |u_i v_k − u_k v_i|²`.
pub fn meyer_wallach(state: &StateVector) -> Result<MeyerWallach> {
    let n = state.qubits();
    if n < 2 {
        return Ok(MeyerWallach { q: 0.0, defined: false });
    }
    let mut total = 0.0;
    for j in 0..n {
        let u = state.slice(j, 0)?;
        let v = state.slice(j, 1)?;
        let (u, v) = (u.amplitudes(), v.amplitudes());
        let mut d = 0.0;
        for i in 0..u.len() {
            for k in i + 1..u.len() {
                d += (u[i] * v[k] - u[k] * v[i]).norm_sqr();
            }
        }
        // the ordered double sum counts each unordered pair twice, cancelling the ½
        total += d;
    }
    Ok(MeyerWallach {
        q: 4.0 / n as f64 * total,
        defined: true,
    })
}
