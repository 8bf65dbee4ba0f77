//! Labelled sentence files: one `label<TAB>sentence` per line.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pregroup::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
    Redundancy,
    Oov,
}

impl Split {
    pub const ALL: [Split; 5] = [Split::Train, Split::Dev, Split::Test, Split::Redundancy, Split::Oov];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Redundancy => "redundancy",
            Split::Oov => "oov",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|sp| sp.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown split {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub text: String,
    pub label: u8,
    /// 1-based line in the source file.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCorpus {
    pub split: Split,
    pub examples: Vec<Example>,
}

impl LabeledCorpus {
    /// Blank lines and `#` comments are skipped; labels must be 0 or 1.
    pub fn parse(text: &str, split: Split, origin: &str) -> Result<Self> {
        let mut examples = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| Error::Format {
                path: origin.to_string(),
                line: i + 1,
                message: message.to_string(),
            };
            let (label, sentence) = line
                .split_once('\t')
                .ok_or_else(|| err("expected `label<TAB>sentence`"))?;
            let label = match label.trim() {
                "0" => 0,
                "1" => 1,
                _ => return Err(err("label must be 0 or 1")),
            };
            if sentence.trim().is_empty() {
                return Err(err("empty sentence"));
            }
            examples.push(Example {
                text: sentence.trim().to_string(),
                label,
                line: i + 1,
            });
        }
        Ok(Self { split, examples })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Every token appearing in the split.
    pub fn vocabulary(&self) -> Result<BTreeSet<String>> {
        let mut out = BTreeSet::new();
        for e in &self.examples {
            out.extend(tokenize(&e.text)?);
        }
        Ok(out)
    }
}
