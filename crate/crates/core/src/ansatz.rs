//! Ansatz templates and compilation of sentence diagrams into circuits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{Angle, CircuitIR, Gate, ParamRef, ParamScope, ParamStore, Register};
use crate::error::{Error, Result};
use crate::pregroup::{AtomicType, Base, DiagramWord, PregroupType, SentenceDiagram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnsatzKind {
    /// Hadamard row followed by a nearest-neighbour CRz chain.
    Iqp,
    /// Ry row followed by a CNOT ring closing last → first.
    Sim15,
    /// Rx, Ry, Rz on a single qubit.
    Euler,
    /// Rx row, Ry row, CRx chain.
    Circuit4,
}

impl AnsatzKind {
    /// Trainable angles in one layer on `width` qubits.
    pub fn params_per_layer(self, width: usize) -> usize {
        match self {
            AnsatzKind::Iqp => width.saturating_sub(1),
            AnsatzKind::Sim15 => width,
            AnsatzKind::Euler => 3,
            AnsatzKind::Circuit4 => (3 * width).saturating_sub(1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AnsatzKind::Iqp => "iqp",
            AnsatzKind::Sim15 => "sim15",
            AnsatzKind::Euler => "euler",
            AnsatzKind::Circuit4 => "circuit4",
        }
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iqp" => Ok(AnsatzKind::Iqp),
            "sim15" => Ok(AnsatzKind::Sim15),
            "euler" => Ok(AnsatzKind::Euler),
            "circuit4" | "c4" => Ok(AnsatzKind::Circuit4),
            other => Err(Error::Config(format!("unknown ansatz {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub kind: AnsatzKind,
    pub layers: usize,
}

impl AnsatzSpec {
    pub fn new(kind: AnsatzKind, layers: usize) -> Result<Self> {
        if layers == 0 {
            return Err(Error::Config("ansatz needs at least one layer".into()));
        }
        Ok(Self { kind, layers })
    }

    pub fn param_count(&self, width: usize) -> usize {
        self.kind.params_per_layer(width) * self.layers
    }

    /// Gates on local qubits `0..width`; `angle` is called once per
    /// parameter slot with its running index.
    pub fn gates<F>(&self, width: usize, mut angle: F) -> Result<Vec<Gate>>
    where
        F: FnMut(usize) -> Angle,
    {
        if width == 0 {
            return Ok(Vec::new());
        }
        if self.kind == AnsatzKind::Euler && width != 1 {
            return Err(Error::EulerWidth(width));
        }
        let mut gates = Vec::new();
        let mut slot = 0;
        let mut next = || {
            let a = angle(slot);
            slot += 1;
            a
        };
        for _ in 0..self.layers {
            match self.kind {
                AnsatzKind::Iqp => {
                    gates.extend((0..width).map(|q| Gate::H { qubit: q }));
                    for q in 0..width - 1 {
                        gates.push(Gate::CRz {
                            control: q,
                            target: q + 1,
                            angle: next(),
                        });
                    }
                }
                AnsatzKind::Sim15 => {
                    for q in 0..width {
                        gates.push(Gate::Ry { qubit: q, angle: next() });
                    }
                    if width > 1 {
                        gates.push(Gate::Cnot {
                            control: width - 1,
                            target: 0,
                        });
                        for q in 0..width - 1 {
                            gates.push(Gate::Cnot {
                                control: q,
                                target: q + 1,
                            });
                        }
                    }
                }
                AnsatzKind::Euler => {
                    gates.push(Gate::Rx { qubit: 0, angle: next() });
                    gates.push(Gate::Ry { qubit: 0, angle: next() });
                    gates.push(Gate::Rz { qubit: 0, angle: next() });
                }
                AnsatzKind::Circuit4 => {
                    for q in 0..width {
                        gates.push(Gate::Rx { qubit: q, angle: next() });
                    }
                    for q in 0..width {
                        gates.push(Gate::Ry { qubit: q, angle: next() });
                    }
                    for q in 0..width - 1 {
                        gates.push(Gate::CRx {
                            control: q,
                            target: q + 1,
                            angle: next(),
                        });
                    }
                }
            }
        }
        Ok(gates)
    }
}

/// Qubits assigned to each basic type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDimensionMap {
    pub qubits_per_n: usize,
    pub qubits_per_s: usize,
}

impl TypeDimensionMap {
    pub fn new(qubits_per_n: usize) -> Result<Self> {
        if qubits_per_n == 0 {
            return Err(Error::Config("qubits per noun must be at least 1".into()));
        }
        Ok(Self {
            qubits_per_n,
            qubits_per_s: 1,
        })
    }

    pub fn atom_width(&self, atom: AtomicType) -> usize {
        match atom.base {
            Base::N => self.qubits_per_n,
            Base::S => self.qubits_per_s,
        }
    }

    pub fn type_width(&self, ty: &PregroupType) -> usize {
        ty.atoms().iter().map(|a| self.atom_width(*a)).sum()
    }
}

/// A deterministic word → frozen-angle map feeding the PQE layer.
pub trait PqeEncoder {
    /// Frozen PQE gates on local qubits `0..width` together with the values
    /// of the `FrozenPqe` references they use.
    fn encode(&self, token: &str, width: usize) -> Result<(Vec<Gate>, BTreeMap<ParamRef, f64>)>;
}

/// How word registers get their parameters.
#[derive(Clone, Copy)]
pub enum Encoding<'a> {
    /// Each word owns its ansatz parameters.
    Traditional,
    /// Frozen PQE from the encoder followed by a W layer shared per pregroup type.
    Fsl(&'a dyn PqeEncoder),
}

impl fmt::Debug for Encoding<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Encoding::Traditional => f.write_str("Traditional"),
            Encoding::Fsl(_) => f.write_str("Fsl(..)"),
        }
    }
}

/// Gates for one word on local qubits, plus any frozen constants.
#[derive(Debug, Clone, PartialEq)]
pub struct WordRegister {
    pub width: usize,
    pub gates: Vec<Gate>,
    pub frozen: BTreeMap<ParamRef, f64>,
}

pub fn build_word_register(
    word: &DiagramWord,
    ansatz: &AnsatzSpec,
    dims: &TypeDimensionMap,
    encoding: Encoding<'_>,
) -> Result<WordRegister> {
    let width = dims.type_width(&word.ty);
    match encoding {
        Encoding::Traditional => {
            let gates = ansatz.gates(width, |i| {
                ParamRef::new(ParamScope::Word, word.token.clone(), i).into()
            })?;
            Ok(WordRegister {
                width,
                gates,
                frozen: BTreeMap::new(),
            })
        }
        Encoding::Fsl(encoder) => {
            let type_key = word.ty.to_string();
            let w_layer = ansatz.gates(width, |i| {
                ParamRef::new(ParamScope::PregroupType, type_key.clone(), i).into()
            })?;
            let (mut gates, frozen) = encoder.encode(&word.token, width)?;
            gates.extend(w_layer);
            Ok(WordRegister {
                width,
                gates,
                frozen,
            })
        }
    }
}

/// Bell effect `(⟨00| + ⟨11|)/√2` on each `(left[k], right[k])` pair:
/// CNOT left → right, H on left, both post-selected on 0.
pub fn realize_cup(left: &[usize], right: &[usize]) -> Result<(Vec<Gate>, Vec<(usize, u8)>)> {
    if left.len() != right.len() {
        return Err(Error::CupWidthMismatch(left.len(), right.len()));
    }
    let mut gates = Vec::with_capacity(2 * left.len());
    let mut post = Vec::with_capacity(2 * left.len());
    for (&a, &b) in left.iter().zip(right) {
        gates.push(Gate::Cnot { control: a, target: b });
        gates.push(Gate::H { qubit: a });
        post.push((a, 0));
        post.push((b, 0));
    }
    Ok((gates, post))
}

/// Lays registers out in word order, realises every cup and post-selects
/// everything except the sentence wire.
pub fn compile(
    diagram: &SentenceDiagram,
    ansatz: &AnsatzSpec,
    dims: &TypeDimensionMap,
    encoding: Encoding<'_>,
) -> Result<CircuitIR> {
    let mut atom_qubits: Vec<std::ops::Range<usize>> = Vec::new();
    let mut circuit = CircuitIR::new(0);
    let mut offset = 0;
    for (position, word) in diagram.words.iter().enumerate() {
        let reg = build_word_register(word, ansatz, dims, encoding)?;
        let mut q = offset;
        for atom in word.ty.atoms() {
            let w = dims.atom_width(*atom);
            atom_qubits.push(q..q + w);
            q += w;
        }
        circuit
            .gates
            .extend(reg.gates.iter().map(|g| g.shifted(offset)));
        circuit.frozen.extend(reg.frozen);
        circuit.registers.push(Register {
            token: word.token.clone(),
            position,
            start: offset,
            width: reg.width,
        });
        offset += reg.width;
    }
    circuit.qubit_count = offset;

    for &(i, j) in &diagram.cups {
        let left: Vec<usize> = atom_qubits[i].clone().collect();
        let right: Vec<usize> = atom_qubits[j].clone().collect();
        let (gates, post) = realize_cup(&left, &right)?;
        circuit.gates.extend(gates);
        circuit.postselect.extend(post);
    }
    circuit.postselect.sort_unstable();
    circuit.sentence_qubits = atom_qubits[diagram.sentence_wire].clone().collect();
    circuit.validate()?;
    Ok(circuit)
}

/// Distinct trainable parameters the circuits use that the store holds.
pub fn count_trainable<'a>(
    store: &ParamStore,
    circuits: impl IntoIterator<Item = &'a CircuitIR>,
) -> usize {
    trainable_breakdown(store, circuits).values().sum()
}

/// Trainable parameter counts grouped by owning key (word or pregroup type).
pub fn trainable_breakdown<'a>(
    store: &ParamStore,
    circuits: impl IntoIterator<Item = &'a CircuitIR>,
) -> BTreeMap<String, usize> {
    let used: BTreeSet<ParamRef> = circuits
        .into_iter()
        .flat_map(|c| c.trainable_params().into_iter().cloned())
        .filter(|r| store.get(r).is_some())
        .collect();
    let mut out = BTreeMap::new();
    for r in used {
        *out.entry(r.key).or_insert(0) += 1;
    }
    out
}
