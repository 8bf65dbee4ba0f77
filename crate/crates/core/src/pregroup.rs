//! Pregroup types, a lexicon for the restricted noun/adjective/transitive
//! verb grammar, and reduction of type sequences into cup-wired diagrams.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Base {
    #[serde(rename = "n")]
    N,
    #[serde(rename = "s")]
    S,
}

/// A basic type with an adjoint order: −1 is `x.l`, 0 plain, +1 `x.r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomicType {
    pub base: Base,
    pub adjoint: i32,
}

impl AtomicType {
    pub const fn new(base: Base, adjoint: i32) -> Self {
        Self { base, adjoint }
    }

    pub const fn n() -> Self {
        Self::new(Base::N, 0)
    }

    pub const fn s() -> Self {
        Self::new(Base::S, 0)
    }

    pub const fn left(self) -> Self {
        Self::new(self.base, self.adjoint - 1)
    }

    pub const fn right(self) -> Self {
        Self::new(self.base, self.adjoint + 1)
    }

    /// `self · next` contracts to the unit (`a^z a^{z+1} ≤ 1`).
    pub fn cancels_with(self, next: AtomicType) -> bool {
        self.base == next.base && self.adjoint + 1 == next.adjoint
    }
}

impl fmt::Display for AtomicType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.base {
            Base::N => "n",
            Base::S => "s",
        };
        f.write_str(base)?;
        if self.adjoint != 0 {
            let mark = if self.adjoint > 0 { "r" } else { "l" };
            write!(f, ".{}", mark.repeat(self.adjoint.unsigned_abs() as usize))?;
        }
        Ok(())
    }
}

/// An ordered product of atomic types. The empty product is the unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PregroupType(pub Vec<AtomicType>);

impl PregroupType {
    pub fn atoms(&self) -> &[AtomicType] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for PregroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartOfSpeech {
    Noun,
    TransitiveVerb,
    Adjective,
}

impl PartOfSpeech {
    pub fn pregroup_type(self) -> PregroupType {
        let n = AtomicType::n();
        PregroupType(match self {
            PartOfSpeech::Noun => vec![n],
            PartOfSpeech::TransitiveVerb => vec![n.right(), AtomicType::s(), n.left()],
            PartOfSpeech::Adjective => vec![n, n.left()],
        })
    }

    pub fn short_name(self) -> &'static str {
        match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::TransitiveVerb => "tverb",
            PartOfSpeech::Adjective => "adj",
        }
    }
}

impl FromStr for PartOfSpeech {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "noun" | "n" => Ok(PartOfSpeech::Noun),
            "tverb" | "transitive_verb" => Ok(PartOfSpeech::TransitiveVerb),
            "adj" | "adjective" => Ok(PartOfSpeech::Adjective),
            other => Err(format!("unknown part of speech {other:?}")),
        }
    }
}

impl fmt::Display for PartOfSpeech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub token: String,
    pub part_of_speech: PartOfSpeech,
    pub ty: PregroupType,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, LexiconEntry>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, token: impl Into<String>, pos: PartOfSpeech) {
        let token = token.into().to_lowercase();
        self.entries.insert(
            token.clone(),
            LexiconEntry {
                token,
                part_of_speech: pos,
                ty: pos.pregroup_type(),
            },
        );
    }

    pub fn get(&self, token: &str) -> Option<&LexiconEntry> {
        self.entries.get(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    /// Parses `token<TAB>pos` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lex = Lexicon::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(token), Some(pos), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Format {
                    path: origin.to_string(),
                    line: i + 1,
                    message: "expected `token<TAB>pos`".into(),
                });
            };
            let pos = pos.parse().map_err(|message| Error::Format {
                path: origin.to_string(),
                line: i + 1,
                message,
            })?;
            lex.insert(token.trim(), pos);
        }
        Ok(lex)
    }
}

/// Lowercases, strips non-alphabetic characters and splits on whitespace.
pub fn tokenize(sentence: &str) -> Result<Vec<String>> {
    let tokens: Vec<String> = sentence
        .split_whitespace()
        .map(|t| {
            t.chars()
                .filter(|c| c.is_alphabetic())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptySentence);
    }
    Ok(tokens)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramWord {
    pub token: String,
    pub part_of_speech: PartOfSpeech,
    pub ty: PregroupType,
}

/// Words plus the cups produced by reducing their concatenated types.
///
/// Atom indices run over the concatenation of every word's type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceDiagram {
    pub words: Vec<DiagramWord>,
    pub cups: Vec<(usize, usize)>,
    pub open_wires: Vec<usize>,
    pub sentence_wire: usize,
}

impl SentenceDiagram {
    pub fn atoms(&self) -> Vec<AtomicType> {
        self.words
            .iter()
            .flat_map(|w| w.ty.atoms().iter().copied())
            .collect()
    }

    /// `(word index, atom offset within the word)` for a global atom index.
    pub fn locate_atom(&self, mut atom: usize) -> Option<(usize, usize)> {
        for (w, word) in self.words.iter().enumerate() {
            if atom < word.ty.len() {
                return Some((w, atom));
            }
            atom -= word.ty.len();
        }
        None
    }

    pub fn tokens(&self) -> Vec<&str> {
        self.words.iter().map(|w| w.token.as_str()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Reduces a type sequence by repeated leftmost cancellation.
///
/// Returns the cups and the indices of the atoms that survive.
pub fn reduce(atoms: &[AtomicType]) -> (Vec<(usize, usize)>, Vec<usize>) {
    // The stack always holds an irreducible prefix, so the first cancellable
    // adjacent pair of the current sequence is always (top, next).
    let mut stack: Vec<usize> = Vec::with_capacity(atoms.len());
    let mut cups = Vec::new();
    for (i, atom) in atoms.iter().enumerate() {
        match stack.last() {
            Some(&top) if atoms[top].cancels_with(*atom) => {
                stack.pop();
                cups.push((top, i));
            }
            _ => stack.push(i),
        }
    }
    cups.sort_unstable();
    (cups, stack)
}

fn shape_is_supported(pos: &[PartOfSpeech]) -> bool {
    // [adj]* noun tverb [adj]* noun
    let mut it = pos.iter().peekable();
    let eat_adjs = |it: &mut std::iter::Peekable<std::slice::Iter<PartOfSpeech>>| {
        while it.peek() == Some(&&PartOfSpeech::Adjective) {
            it.next();
        }
    };
    eat_adjs(&mut it);
    if it.next() != Some(&PartOfSpeech::Noun) {
        return false;
    }
    if it.next() != Some(&PartOfSpeech::TransitiveVerb) {
        return false;
    }
    eat_adjs(&mut it);
    it.next() == Some(&PartOfSpeech::Noun) && it.next().is_none()
}

pub fn parse(tokens: &[String], lexicon: &Lexicon) -> Result<SentenceDiagram> {
    let words = tokens
        .iter()
        .map(|t| {
            lexicon
                .get(t)
                .map(|e| DiagramWord {
                    token: e.token.clone(),
                    part_of_speech: e.part_of_speech,
                    ty: e.ty.clone(),
                })
                .ok_or_else(|| Error::UnknownWord(t.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let atoms: Vec<AtomicType> = words
        .iter()
        .flat_map(|w| w.ty.atoms().iter().copied())
        .collect();
    let (cups, open_wires) = reduce(&atoms);
    if open_wires.len() != 1 || atoms[open_wires[0]] != AtomicType::s() {
        let residue = PregroupType(open_wires.iter().map(|&i| atoms[i]).collect());
        return Err(Error::Irreducible {
            residue: if residue.is_empty() {
                "1".into()
            } else {
                residue.to_string()
            },
        });
    }
    let pos: Vec<PartOfSpeech> = words.iter().map(|w| w.part_of_speech).collect();
    if !shape_is_supported(&pos) {
        let shape: Vec<&str> = pos.iter().map(|p| p.short_name()).collect();
        return Err(Error::UnsupportedShape(shape.join(" ")));
    }
    let sentence_wire = open_wires[0];
    Ok(SentenceDiagram {
        words,
        cups,
        open_wires,
        sentence_wire,
    })
}

/// Tokenises and parses in one step.
pub fn parse_sentence(sentence: &str, lexicon: &Lexicon) -> Result<SentenceDiagram> {
    parse(&tokenize(sentence)?, lexicon)
}
