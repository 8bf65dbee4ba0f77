//! Circuit intermediate representation and parameter storage.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamScope {
    /// Owned by one token (traditional ansätze).
    Word,
    /// Shared by every word with the same pregroup type (the W layer).
    PregroupType,
    /// Pre-quantum embedding constants; never trained.
    FrozenPqe,
}

impl ParamScope {
    fn as_str(self) -> &'static str {
        match self {
            ParamScope::Word => "word",
            ParamScope::PregroupType => "type",
            ParamScope::FrozenPqe => "pqe",
        }
    }
}

/// A symbolic parameter, written as `scope:key:index`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamRef {
    pub scope: ParamScope,
    pub key: String,
    pub index: usize,
}

impl ParamRef {
    pub fn new(scope: ParamScope, key: impl Into<String>, index: usize) -> Self {
        Self {
            scope,
            key: key.into(),
            index,
        }
    }

    pub fn is_trainable(&self) -> bool {
        self.scope != ParamScope::FrozenPqe
    }
}

impl fmt::Display for ParamRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.scope.as_str(), self.key, self.index)
    }
}

impl FromStr for ParamRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadParamRef(s.to_string());
        let (scope, rest) = s.split_once(':').ok_or_else(bad)?;
        let (key, index) = rest.rsplit_once(':').ok_or_else(bad)?;
        let scope = match scope {
            "word" => ParamScope::Word,
            "type" => ParamScope::PregroupType,
            "pqe" => ParamScope::FrozenPqe,
            _ => return Err(bad()),
        };
        Ok(ParamRef::new(scope, key, index.parse().map_err(|_| bad())?))
    }
}

impl Serialize for ParamRef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParamRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Angle {
    Const(f64),
    Param(ParamRef),
}

impl From<f64> for Angle {
    fn from(v: f64) -> Self {
        Angle::Const(v)
    }
}

impl From<ParamRef> for Angle {
    fn from(r: ParamRef) -> Self {
        Angle::Param(r)
    }
}

/// Gate set of the simulator. Rotations follow `R_P(θ) = exp(−iθP/2)`;
/// controlled rotations act on `target` when `control` is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate")]
pub enum Gate {
    H {
        qubit: usize,
    },
    Rx {
        qubit: usize,
        angle: Angle,
    },
    Ry {
        qubit: usize,
        angle: Angle,
    },
    Rz {
        qubit: usize,
        angle: Angle,
    },
    #[serde(rename = "CRz")]
    CRz {
        control: usize,
        target: usize,
        angle: Angle,
    },
    #[serde(rename = "CRx")]
    CRx {
        control: usize,
        target: usize,
        angle: Angle,
    },
    #[serde(rename = "CNOT")]
    Cnot {
        control: usize,
        target: usize,
    },
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::H { .. } => "H",
            Gate::Rx { .. } => "Rx",
            Gate::Ry { .. } => "Ry",
            Gate::Rz { .. } => "Rz",
            Gate::CRz { .. } => "CRz",
            Gate::CRx { .. } => "CRx",
            Gate::Cnot { .. } => "CNOT",
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H { qubit } | Gate::Rx { qubit, .. } | Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => {
                vec![qubit]
            }
            Gate::CRz { control, target, .. }
            | Gate::CRx { control, target, .. }
            | Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn angle(&self) -> Option<&Angle> {
        match self {
            Gate::Rx { angle, .. }
            | Gate::Ry { angle, .. }
            | Gate::Rz { angle, .. }
            | Gate::CRz { angle, .. }
            | Gate::CRx { angle, .. } => Some(angle),
            Gate::H { .. } | Gate::Cnot { .. } => None,
        }
    }

    pub fn param(&self) -> Option<&ParamRef> {
        match self.angle() {
            Some(Angle::Param(r)) => Some(r),
            _ => None,
        }
    }

    /// Same gate with every qubit index shifted by `offset`.
    pub fn shifted(&self, offset: usize) -> Gate {
        let mut g = self.clone();
        match &mut g {
            Gate::H { qubit } | Gate::Rx { qubit, .. } | Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => {
                *qubit += offset
            }
            Gate::CRz { control, target, .. }
            | Gate::CRx { control, target, .. }
            | Gate::Cnot { control, target } => {
                *control += offset;
                *target += offset;
            }
        }
        g
    }
}

/// One word occurrence's qubit range in a compiled circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub token: String,
    pub position: usize,
    pub start: usize,
    pub width: usize,
}

impl Register {
    pub fn qubits(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitIR {
    pub qubit_count: usize,
    pub registers: Vec<Register>,
    pub gates: Vec<Gate>,
    /// `(qubit, required outcome)`; compiled sentences always require 0.
    pub postselect: Vec<(usize, u8)>,
    pub sentence_qubits: Vec<usize>,
    /// Values for every `FrozenPqe` reference used by the gates.
    #[serde(default)]
    pub frozen: BTreeMap<ParamRef, f64>,
}

impl CircuitIR {
    pub fn new(qubit_count: usize) -> Self {
        Self {
            qubit_count,
            registers: Vec::new(),
            gates: Vec::new(),
            postselect: Vec::new(),
            sentence_qubits: Vec::new(),
            frozen: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn params(&self) -> BTreeSet<&ParamRef> {
        self.gates.iter().filter_map(Gate::param).collect()
    }

    pub fn trainable_params(&self) -> BTreeSet<&ParamRef> {
        self.params().into_iter().filter(|r| r.is_trainable()).collect()
    }

    /// Checks qubit bounds and that sentence and post-selected qubits are disjoint.
    pub fn validate(&self) -> Result<()> {
        let check = |q: usize| {
            if q >= self.qubit_count {
                Err(Error::QubitOutOfRange {
                    qubit: q,
                    count: self.qubit_count,
                })
            } else {
                Ok(())
            }
        };
        for g in &self.gates {
            g.qubits().into_iter().try_for_each(check)?;
        }
        for &(q, _) in &self.postselect {
            check(q)?;
        }
        for &q in &self.sentence_qubits {
            check(q)?;
            if self.postselect.iter().any(|&(p, _)| p == q) {
                return Err(Error::Config(format!(
                    "qubit {q} is both a sentence qubit and post-selected"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    Traditional,
    Fsl,
}

/// Angle values for symbolic parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    pub mode: ParamMode,
    trainable: BTreeMap<ParamRef, f64>,
    frozen: BTreeMap<ParamRef, f64>,
}

impl ParamStore {
    pub fn new(mode: ParamMode) -> Self {
        Self {
            mode,
            trainable: BTreeMap::new(),
            frozen: BTreeMap::new(),
        }
    }

    /// Registers every parameter the circuits use. New trainable entries are
    /// drawn uniformly from [0, 2π) in key order; frozen values are copied.
    pub fn populate<'a, R: Rng>(
        &mut self,
        circuits: impl IntoIterator<Item = &'a CircuitIR>,
        rng: &mut R,
    ) -> Result<()> {
        let mut fresh = BTreeSet::new();
        for c in circuits {
            for r in c.trainable_params() {
                if !self.trainable.contains_key(r) {
                    fresh.insert(r.clone());
                }
            }
            for (r, v) in &c.frozen {
                self.frozen.insert(r.clone(), *v);
            }
        }
        for r in fresh {
            self.insert(r, rng.random_range(0.0..std::f64::consts::TAU))?;
        }
        Ok(())
    }

    pub fn insert(&mut self, r: ParamRef, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss);
        }
        if r.is_trainable() {
            self.trainable.insert(r, value);
        } else {
            self.frozen.insert(r, value);
        }
        Ok(())
    }

    pub fn get(&self, r: &ParamRef) -> Option<f64> {
        if r.is_trainable() {
            self.trainable.get(r).copied()
        } else {
            self.frozen.get(r).copied()
        }
    }

    pub fn resolve(&self, angle: &Angle) -> Result<f64> {
        match angle {
            Angle::Const(v) => Ok(*v),
            Angle::Param(r) => self
                .get(r)
                .ok_or_else(|| Error::UnresolvedParam(r.to_string())),
        }
    }

    pub fn trainable(&self) -> &BTreeMap<ParamRef, f64> {
        &self.trainable
    }

    pub fn frozen(&self) -> &BTreeMap<ParamRef, f64> {
        &self.frozen
    }

    /// Values for `keys`, in the order given.
    pub fn values_of(&self, keys: &[ParamRef]) -> Result<Vec<f64>> {
        keys.iter()
            .map(|k| self.get(k).ok_or_else(|| Error::UnresolvedParam(k.to_string())))
            .collect()
    }

    /// Overwrites trainable `keys` with `values`.
    pub fn set_values(&mut self, keys: &[ParamRef], values: &[f64]) {
        for (k, v) in keys.iter().zip(values) {
            if k.is_trainable() {
                self.trainable.insert(k.clone(), *v);
            }
        }
    }

    /// `scope:key:index<TAB>value` lines, trainable entries first.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# mode {}\n", self.mode_name()));
        for (k, v) in self.trainable.iter().chain(&self.frozen) {
            out.push_str(&format!("{k}\t{v}\n"));
        }
        out
    }

    fn mode_name(&self) -> &'static str {
        match self.mode {
            ParamMode::Traditional => "traditional",
            ParamMode::Fsl => "fsl",
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut store = ParamStore::new(ParamMode::Traditional);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(mode) = line.strip_prefix("# mode ") {
                store.mode = match mode.trim() {
                    "fsl" => ParamMode::Fsl,
                    _ => ParamMode::Traditional,
                };
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fmt_err = |message: String| Error::Format {
                path: "<params>".into(),
                line: i + 1,
                message,
            };
            let (k, v) = line
                .split_once('\t')
                .ok_or_else(|| fmt_err("expected `ref<TAB>value`".into()))?;
            let value: f64 = v.trim().parse().map_err(|_| fmt_err(format!("bad value {v:?}")))?;
            store.insert(k.parse()?, value)?;
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn param_ref_text_form() {
        let r = ParamRef::new(ParamScope::PregroupType, "n.r s n.l", 4);
        assert_eq!(r.to_string(), "type:n.r s n.l:4");
        assert_eq!(r.to_string().parse::<ParamRef>().unwrap(), r);
        assert!("nope".parse::<ParamRef>().is_err());
        assert!("word:x:y".parse::<ParamRef>().is_err());
    }

    #[test]
    fn validate_catches_bad_qubits() {
        let mut c = CircuitIR::new(2);
        c.push(Gate::Cnot { control: 0, target: 2 });
        assert!(matches!(c.validate(), Err(Error::QubitOutOfRange { qubit: 2, .. })));

        let mut c = CircuitIR::new(2);
        c.postselect.push((1, 0));
        c.sentence_qubits.push(1);
        assert!(c.validate().is_err());
    }

    #[test]
    fn populate_is_seeded_and_skips_existing() {
        let mut c = CircuitIR::new(1);
        c.push(Gate::Rx {
            qubit: 0,
            angle: ParamRef::new(ParamScope::Word, "a", 0).into(),
        });
        c.push(Gate::Ry {
            qubit: 0,
            angle: ParamRef::new(ParamScope::FrozenPqe, "a", 0).into(),
        });
        c.frozen.insert(ParamRef::new(ParamScope::FrozenPqe, "a", 0), 0.25);

        let mut s1 = ParamStore::new(ParamMode::Traditional);
        s1.populate([&c], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let mut s2 = ParamStore::new(ParamMode::Traditional);
        s2.populate([&c], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.trainable().len(), 1);
        assert_eq!(s1.frozen().len(), 1);
        let v = s1.trainable().values().next().copied().unwrap();
        assert!((0.0..std::f64::consts::TAU).contains(&v));

        let before = s1.clone();
        s1.populate([&c], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(before, s1);
    }

    #[test]
    fn store_text_round_trip() {
        let mut s = ParamStore::new(ParamMode::Fsl);
        s.insert(ParamRef::new(ParamScope::PregroupType, "n", 0), 0.1 + 0.2).unwrap();
        s.insert(ParamRef::new(ParamScope::FrozenPqe, "man", 2), -1.5e-7).unwrap();
        let back = ParamStore::from_text(&s.to_text()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn circuit_json_round_trip() {
        let mut c = CircuitIR::new(2);
        c.push(Gate::H { qubit: 0 });
        c.push(Gate::CRz {
            control: 0,
            target: 1,
            angle: ParamRef::new(ParamScope::Word, "man", 0).into(),
        });
        c.push(Gate::Rx { qubit: 1, angle: Angle::Const(0.5) });
        c.postselect.push((0, 0));
        c.sentence_qubits.push(1);
        let text = c.to_json().unwrap();
        assert!(text.contains("\"gate\": \"CRz\""));
        assert!(text.contains("word:man:0"));
        assert_eq!(CircuitIR::from_json(&text).unwrap(), c);
    }
}
