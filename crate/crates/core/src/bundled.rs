//! The desk-scale corpus shipped with the crate.
//!
//! Labels: 1 is food, 0 is technology. The embeddings are synthetic 300-d
//! vectors for 50 words, clustered by topic.

use crate::corpus::Split;

pub const LEXICON: &str = include_str!("../data/lexicon.tsv");
pub const EMBEDDINGS: &str = include_str!("../data/embeddings_synthetic_300d.txt");

pub const TRAIN: &str = include_str!("../data/train.tsv");
pub const DEV: &str = include_str!("../data/dev.tsv");
pub const TEST: &str = include_str!("../data/test.tsv");
pub const REDUNDANCY: &str = include_str!("../data/redundancy.tsv");
pub const OOV: &str = include_str!("../data/oov.tsv");

pub fn split(split: Split) -> &'static str {
    match split {
        Split::Train => TRAIN,
        Split::Dev => DEV,
        Split::Test => TEST,
        Split::Redundancy => REDUNDANCY,
        Split::Oov => OOV,
    }
}
