//! Pre-quantum embeddings: frozen word → angle maps.
//!
//! [`BasePqe`] turns a reduced 3-vector into one Euler triplet repeated on
//! every qubit. [`NnPqe`] runs a small network whose outputs drive a single
//! Circuit4 layer.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzKind, AnsatzSpec, PqeEncoder};
use crate::circuit::{Angle, Gate, ParamRef, ParamScope};
use crate::embedding::{EmbeddingVector, Vocabulary};
use crate::error::{Error, Result};
use crate::simulator::{simulate_with, StateVector};
use crate::spsa::{spsa_step, SpsaConfig};

/// Per-axis min-max map onto [0, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseScaling {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BaseScaling {
    pub fn fit<'a>(points: impl IntoIterator<Item = &'a [f64; 3]>) -> Result<Self> {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        let mut any = false;
        for p in points {
            any = true;
            for i in 0..3 {
                min[i] = min[i].min(p[i]);
                max[i] = max[i].max(p[i]);
            }
        }
        if !any {
            return Err(Error::Empty("scaling vocabulary"));
        }
        Ok(Self { min, max })
    }

    /// Values outside the fitted range are clamped. A flat axis maps to 0.
    pub fn apply(&self, p: &[f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..3 {
            let span = self.max[i] - self.min[i];
            if span > 0.0 {
                out[i] = ((p[i] - self.min[i]) / span * PI).clamp(0.0, PI);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("axis,min,max\n");
        for (i, axis) in ["x", "y", "z"].iter().enumerate() {
            let _ = writeln!(s, "{axis},{},{}", self.min[i], self.max[i]);
        }
        s
    }
}

/// Euler triplets for every word with a reduced vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePqe {
    pub scaling: BaseScaling,
    triplets: BTreeMap<String, [f64; 3]>,
}

impl BasePqe {
    /// Fits the scaling on `training_tokens` and maps every reduced vector.
    pub fn fit<'a>(
        reduced: &BTreeMap<String, [f64; 3]>,
        training_tokens: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self> {
        let train = training_tokens
            .into_iter()
            .map(|t| reduced.get(t).ok_or_else(|| Error::UnknownWord(t.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let scaling = BaseScaling::fit(train)?;
        Ok(Self::with_scaling(reduced, scaling))
    }

    pub fn with_scaling(reduced: &BTreeMap<String, [f64; 3]>, scaling: BaseScaling) -> Self {
        let triplets = reduced
            .iter()
            .map(|(t, p)| (t.clone(), scaling.apply(p)))
            .collect();
        Self { scaling, triplets }
    }

    /// `(θx, θy, θz)` for `token`.
    pub fn triplet(&self, token: &str) -> Result<[f64; 3]> {
        self.triplets
            .get(token)
            .copied()
            .ok_or_else(|| Error::UnknownWord(token.to_string()))
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.triplets.keys().map(String::as_str)
    }

    pub fn state(&self, token: &str, width: usize) -> Result<StateVector> {
        let gates = base_pqe(self, token, width)?;
        simulate_with(width, &gates, |a| match a {
            Angle::Const(v) => Ok(*v),
            Angle::Param(r) => Err(Error::UnresolvedParam(r.to_string())),
        })
    }
}

fn euler_row(width: usize, angles: [Angle; 3]) -> Vec<Gate> {
    let mut gates = Vec::with_capacity(3 * width);
    for q in 0..width {
        gates.push(Gate::Rx { qubit: q, angle: angles[0].clone() });
        gates.push(Gate::Ry { qubit: q, angle: angles[1].clone() });
        gates.push(Gate::Rz { qubit: q, angle: angles[2].clone() });
    }
    gates
}

/// Rx, Ry, Rz with the word's triplet on each of `width` qubits.
pub fn base_pqe(pqe: &BasePqe, token: &str, width: usize) -> Result<Vec<Gate>> {
    let [x, y, z] = pqe.triplet(token)?;
    Ok(euler_row(width, [x.into(), y.into(), z.into()]))
}

impl PqeEncoder for BasePqe {
    fn encode(&self, token: &str, width: usize) -> Result<(Vec<Gate>, BTreeMap<ParamRef, f64>)> {
        let t = self.triplet(token)?;
        let r = |i| ParamRef::new(ParamScope::FrozenPqe, token, i);
        let gates = euler_row(width, [r(0).into(), r(1).into(), r(2).into()]);
        let frozen = (0..3).map(|i| (r(i), t[i])).collect();
        Ok((gates, frozen))
    }
}

/// Overlap of two `width`-qubit Base PQE registers next to the single-qubit
/// overlap raised to `width`.
pub fn inner_product_law_check(
    pqe: &BasePqe,
    a: &str,
    b: &str,
    width: usize,
) -> Result<(Complex64, Complex64)> {
    let lhs = pqe.state(a, width)?.inner(&pqe.state(b, width)?)?;
    let single = pqe.state(a, 1)?.inner(&pqe.state(b, 1)?)?;
    Ok((lhs, single.powu(width as u32)))
}

/// One hidden tanh layer; outputs squashed by `π(1 + tanh x)` into [0, 2π].
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardNet {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    /// `hidden × input`, row major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `output × hidden`, row major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

pub const DEFAULT_HIDDEN: usize = 64;

/// Output head size covering Circuit4 on every width in `widths`.
pub fn head_size(widths: &[usize]) -> usize {
    widths
        .iter()
        .map(|&w| AnsatzKind::Circuit4.params_per_layer(w))
        .max()
        .unwrap_or(0)
}

impl FeedForwardNet {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            input,
            hidden,
            output,
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; output * hidden],
            b2: vec![0.0; output],
        }
    }

    /// Uniform weights giving unit pre-activation variance for unit-norm
    /// inputs; zero biases.
    pub fn random<R: Rng + ?Sized>(input: usize, hidden: usize, output: usize, rng: &mut R) -> Self {
        let mut net = Self::zeros(input, hidden, output);
        let s1 = 3f64.sqrt();
        let s2 = (3.0 / hidden.max(1) as f64).sqrt();
        net.w1.iter_mut().for_each(|w| *w = rng.random_range(-s1..s1));
        net.w2.iter_mut().for_each(|w| *w = rng.random_range(-s2..s2));
        net
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// w1, b1, w2, b2 concatenated.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.extend(&self.b2);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat weight length");
        let mut rest = flat;
        for part in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            let (head, tail) = rest.split_at(part.len());
            part.copy_from_slice(head);
            rest = tail;
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input {
            return Err(Error::DimensionMismatch {
                left: self.input,
                right: x.len(),
            });
        }
        let h: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * self.input..(j + 1) * self.input];
                (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[j]).tanh()
            })
            .collect();
        Ok((0..self.output)
            .map(|k| {
                let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
                let z = row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + self.b2[k];
                PI * (1.0 + z.tanh())
            })
            .collect())
    }

    /// Text dump: a `# shape input hidden output` header then one tensor
    /// per section, rows comma separated.
    pub fn to_text(&self) -> String {
        let mut s = format!("# shape {} {} {}\n", self.input, self.hidden, self.output);
        let mut section = |name: &str, data: &[f64], cols: usize| {
            let _ = writeln!(s, "{name}");
            for row in data.chunks(cols.max(1)) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "{}", line.join(","));
            }
        };
        section("w1", &self.w1, self.input);
        section("b1", &self.b1, self.hidden);
        section("w2", &self.w2, self.hidden);
        section("b2", &self.b2, self.output);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, message: &str| Error::Format {
            path: "<weights>".into(),
            line,
            message: message.into(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty weight file"))?;
        let dims: Vec<usize> = header
            .strip_prefix("# shape ")
            .ok_or_else(|| bad(1, "missing shape header"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(1, "bad shape")))
            .collect::<Result<_>>()?;
        let [input, hidden, output] = dims[..] else {
            return Err(bad(1, "shape needs three sizes"));
        };
        let mut net = Self::zeros(input, hidden, output);
        let mut sections: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut current = None;
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if matches!(line, "w1" | "b1" | "w2" | "b2") {
                current = Some(line.to_string());
                sections.entry(line.to_string()).or_default();
                continue;
            }
            let name = current.clone().ok_or_else(|| bad(i + 1, "value before section"))?;
            for tok in line.split(',') {
                let v: f64 = tok.trim().parse().map_err(|_| bad(i + 1, "bad number"))?;
                sections.get_mut(&name).expect("section exists").push(v);
            }
        }
        for (name, part) in [
            ("w1", &mut net.w1),
            ("b1", &mut net.b1),
            ("w2", &mut net.w2),
            ("b2", &mut net.b2),
        ] {
            let data = sections.remove(name).unwrap_or_default();
            if data.len() != part.len() {
                return Err(bad(0, &format!("section {name} has {} values, expected {}", data.len(), part.len())));
            }
            part.copy_from_slice(&data);
        }
        Ok(net)
    }
}

/// The first `3·width − 1` network outputs for `embedding`.
pub fn nn_forward(net: &FeedForwardNet, embedding: &EmbeddingVector, width: usize) -> Result<Vec<f64>> {
    let need = AnsatzKind::Circuit4.params_per_layer(width);
    if need > net.output {
        return Err(Error::Config(format!(
            "network head has {} outputs, width {width} needs {need}",
            net.output
        )));
    }
    let mut out = net.forward(&embedding.values)?;
    out.truncate(need);
    Ok(out)
}

fn unit(values: &[f64]) -> Result<Vec<f64>> {
    let n = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(values.iter().map(|v| v / n).collect())
}

fn circuit4_state(angles: &[f64], width: usize) -> Result<StateVector> {
    let gates = AnsatzSpec {
        kind: AnsatzKind::Circuit4,
        layers: 1,
    }
    .gates(width, |i| Angle::Const(angles[i]))?;
    simulate_with(width, &gates, |a| match a {
        Angle::Const(v) => Ok(*v),
        Angle::Param(r) => Err(Error::UnresolvedParam(r.to_string())),
    })
}

/// Network PQE over unit-normalised embeddings.
#[derive(Debug, Clone)]
pub struct NnPqe {
    pub net: FeedForwardNet,
    inputs: BTreeMap<String, EmbeddingVector>,
}

impl NnPqe {
    pub fn new(net: FeedForwardNet, vocab: &Vocabulary) -> Result<Self> {
        if vocab.dimension() != net.input {
            return Err(Error::DimensionMismatch {
                left: net.input,
                right: vocab.dimension(),
            });
        }
        let inputs = vocab
            .vectors()
            .map(|v| Ok((v.word.clone(), EmbeddingVector::new(v.word.clone(), unit(&v.values)?))))
            .collect::<Result<_>>()?;
        Ok(Self { net, inputs })
    }

    pub fn angles(&self, token: &str, width: usize) -> Result<Vec<f64>> {
        let e = self
            .inputs
            .get(token)
            .ok_or_else(|| Error::UnknownWord(token.to_string()))?;
        nn_forward(&self.net, e, width)
    }

    pub fn state(&self, token: &str, width: usize) -> Result<StateVector> {
        circuit4_state(&self.angles(token, width)?, width)
    }
}

impl PqeEncoder for NnPqe {
    fn encode(&self, token: &str, width: usize) -> Result<(Vec<Gate>, BTreeMap<ParamRef, f64>)> {
        let angles = self.angles(token, width)?;
        let r = |i| ParamRef::new(ParamScope::FrozenPqe, token, i);
        let gates = AnsatzSpec {
            kind: AnsatzKind::Circuit4,
            layers: 1,
        }
        .gates(width, |i| r(i).into())?;
        let frozen = angles.iter().enumerate().map(|(i, v)| (r(i), *v)).collect();
        Ok((gates, frozen))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnTrainReport {
    pub steps: usize,
    pub initial_mse: f64,
    pub final_mse: f64,
    pub skipped_steps: usize,
    pub seed: u64,
}

/// Mean over widths and word pairs `i < j` of
/// `(fidelity(PQE_i, PQE_j) − (v̂_i·v̂_j)²)²`.
pub fn nn_pair_loss(net: &FeedForwardNet, vocab: &Vocabulary, widths: &[usize]) -> Result<f64> {
    let inputs: Vec<Vec<f64>> = vocab.vectors().map(|v| unit(&v.values)).collect::<Result<_>>()?;
    pair_loss(net, &inputs, &targets(&inputs), widths)
}

fn targets(inputs: &[Vec<f64>]) -> Vec<f64> {
    let mut t = Vec::new();
    for i in 0..inputs.len() {
        for j in i + 1..inputs.len() {
            let d: f64 = inputs[i].iter().zip(&inputs[j]).map(|(a, b)| a * b).sum();
            t.push(d * d);
        }
    }
    t
}

fn pair_loss(net: &FeedForwardNet, inputs: &[Vec<f64>], targets: &[f64], widths: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for &w in widths {
        let need = AnsatzKind::Circuit4.params_per_layer(w);
        let states = inputs
            .iter()
            .map(|x| {
                let out = net.forward(x)?;
                circuit4_state(&out[..need], w)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut t = targets.iter();
        for i in 0..states.len() {
            for j in i + 1..states.len() {
                let f = states[i].inner(&states[j])?.norm_sqr();
                let target = t.next().expect("one target per pair");
                total += (f - target).powi(2);
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

/// Fits the network with SPSA over its flattened weights.
pub fn train_nn_pqe(
    net: &mut FeedForwardNet,
    vocab: &Vocabulary,
    widths: &[usize],
    config: &SpsaConfig,
    steps: usize,
    seed: u64,
) -> Result<NnTrainReport> {
    config.validate()?;
    if vocab.len() < 2 {
        return Err(Error::VocabularyTooSmall {
            needed: 2,
            found: vocab.len(),
        });
    }
    if widths.is_empty() || head_size(widths) > net.output {
        return Err(Error::Config(format!(
            "network head of {} cannot cover widths {widths:?}",
            net.output
        )));
    }
    if vocab.dimension() != net.input {
        return Err(Error::DimensionMismatch {
            left: net.input,
            right: vocab.dimension(),
        });
    }
    let inputs: Vec<Vec<f64>> = vocab.vectors().map(|v| unit(&v.values)).collect::<Result<_>>()?;
    let targets = targets(&inputs);
    let initial_mse = pair_loss(net, &inputs, &targets, widths)?;
    if !initial_mse.is_finite() {
        return Err(Error::NonFiniteLoss);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = net.flat();
    let mut scratch = net.clone();
    let mut skipped = 0;
    for k in 0..steps {
        let report = spsa_step(
            &mut theta,
            |p| {
                scratch.set_flat(p);
                pair_loss(&scratch, &inputs, &targets, widths).unwrap_or(f64::NAN)
            },
            config,
            k,
            &mut rng,
        );
        if report.skipped {
            skipped += 1;
        }
    }
    net.set_flat(&theta);
    let final_mse = pair_loss(net, &inputs, &targets, widths)?;
    if !final_mse.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok(NnTrainReport {
        steps,
        initial_mse,
        final_mse,
        skipped_steps: skipped,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reduced(points: &[(&str, [f64; 3])]) -> BTreeMap<String, [f64; 3]> {
        points.iter().map(|(t, p)| (t.to_string(), *p)).collect()
    }

    #[test]
    fn minimum_maps_to_zero_state() {
        let r = reduced(&[("a", [-1.0, 2.0, 0.0]), ("b", [3.0, 4.0, 1.0])]);
        let pqe = BasePqe::fit(&r, ["a", "b"]).unwrap();
        assert_eq!(pqe.triplet("a").unwrap(), [0.0, 0.0, 0.0]);
        assert_eq!(pqe.triplet("b").unwrap(), [PI, PI, PI]);
        let s = pqe.state("a", 2).unwrap();
        assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unseen_tokens_are_clamped_with_frozen_scaling() {
        let r = reduced(&[
            ("a", [0.0, 0.0, 0.0]),
            ("b", [2.0, 2.0, 2.0]),
            ("far", [5.0, -1.0, 1.0]),
        ]);
        let pqe = BasePqe::fit(&r, ["a", "b"]).unwrap();
        assert_eq!(pqe.triplet("far").unwrap(), [PI, 0.0, PI / 2.0]);
        assert!(matches!(pqe.triplet("zzz"), Err(Error::UnknownWord(_))));
    }

    #[test]
    fn overlap_power_law_half() {
        // Ry(θ)|0⟩ overlaps |0⟩ by cos(θ/2); θ = 2π/3 gives 1/2.
        let r = reduced(&[("a", [0.0, 0.0, 0.0]), ("b", [0.0, 2.0, 0.0]), ("c", [0.0, 3.0, 0.0])]);
        let pqe = BasePqe::fit(&r, ["a", "c"]).unwrap();
        let (lhs, rhs) = inner_product_law_check(&pqe, "a", "b", 3).unwrap();
        assert!((lhs.norm() - 0.125).abs() < 1e-12);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn encoder_refs_resolve_to_triplet() {
        let r = reduced(&[("a", [0.0, 0.0, 0.0]), ("b", [1.0, 1.0, 1.0])]);
        let pqe = BasePqe::fit(&r, ["a", "b"]).unwrap();
        let (gates, frozen) = pqe.encode("b", 2).unwrap();
        assert_eq!(gates.len(), 6);
        assert_eq!(frozen.len(), 3);
        assert!(frozen.values().all(|v| (*v - PI).abs() < 1e-15));
    }

    #[test]
    fn zero_net_outputs_pi() {
        let net = FeedForwardNet::zeros(4, 3, 5);
        let out = nn_forward(&net, &EmbeddingVector::new("x", vec![1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(out, vec![PI; 5]);
        assert!(nn_forward(&net, &EmbeddingVector::new("x", vec![1.0]), 1).is_err());
        assert!(nn_forward(&net, &EmbeddingVector::new("x", vec![0.0; 4]), 3).is_err());
    }

    #[test]
    fn weight_dump_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = FeedForwardNet::random(5, 4, 3, &mut rng);
        let back = FeedForwardNet::from_text(&net.to_text()).unwrap();
        assert_eq!(net, back);
        assert!(FeedForwardNet::from_text("# shape 1 1\n").is_err());
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = FeedForwardNet::random(3, 2, 2, &mut rng);
        let mut other = FeedForwardNet::zeros(3, 2, 2);
        other.set_flat(&net.flat());
        assert_eq!(net, other);
    }

    #[test]
    fn head_covers_widths() {
        assert_eq!(head_size(&[1, 2, 3]), 8);
        assert_eq!(head_size(&[2, 5]), 14);
    }
}
