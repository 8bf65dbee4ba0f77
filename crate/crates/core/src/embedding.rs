//! Classical word vectors: GloVe-style text ingestion, similarity queries
//! and the deterministic three-dimensional projection used by the base
//! pre-quantum embedding.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A single word vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    pub word: String,
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(word: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            word: word.into(),
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Word vectors sharing one dimension, keyed by token.
///
/// Entries are kept in a `BTreeMap` so every iteration (and therefore the
/// projection below) is independent of file order.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    dimension: usize,
    entries: BTreeMap<String, EmbeddingVector>,
    reduced: Option<BTreeMap<String, [f64; 3]>>,
}

/// Result of [`load_embeddings`].
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub vocabulary: Vocabulary,
    /// Tokens requested through the filter that the stream did not contain.
    pub missing: Vec<String>,
}

impl Vocabulary {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            entries: BTreeMap::new(),
            reduced: None,
        }
    }

    /// Builds a vocabulary from in-memory vectors. Later duplicates are ignored.
    pub fn from_vectors(vectors: impl IntoIterator<Item = EmbeddingVector>) -> Result<Self> {
        let mut vocab: Option<Vocabulary> = None;
        for v in vectors {
            let voc = vocab.get_or_insert_with(|| Vocabulary::new(v.dim()));
            voc.insert(v)?;
        }
        vocab.ok_or(Error::Empty("vocabulary"))
    }

    pub fn insert(&mut self, vector: EmbeddingVector) -> Result<()> {
        if vector.dim() != self.dimension {
            return Err(Error::DimensionMismatch {
                left: self.dimension,
                right: vector.dim(),
            });
        }
        if vector.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                line: 0,
                token: vector.word,
            });
        }
        self.reduced = None;
        self.entries.entry(vector.word.clone()).or_insert(vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&EmbeddingVector> {
        self.entries.get(token)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn vectors(&self) -> impl Iterator<Item = &EmbeddingVector> {
        self.entries.values()
    }

    pub fn reduced(&self) -> Option<&BTreeMap<String, [f64; 3]>> {
        self.reduced.as_ref()
    }

    /// Restricts the vocabulary to `keep`, dropping any stored reduction.
    pub fn retain(&self, keep: &BTreeSet<String>) -> Vocabulary {
        Vocabulary {
            dimension: self.dimension,
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| keep.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            reduced: None,
        }
    }

    /// Writes the reduced map as `token,x,y,z` lines with a header.
    pub fn write_reduced_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "token,x,y,z")?;
        if let Some(reduced) = &self.reduced {
            for (token, [x, y, z]) in reduced {
                writeln!(out, "{token},{x},{y},{z}")?;
            }
        }
        Ok(())
    }
}

/// Reads whitespace separated `token v1 ... vD` lines.
///
/// With a filter only the listed tokens are kept; filter tokens that never
/// appear come back in [`LoadReport::missing`] rather than as an error.
pub fn load_embeddings<R: BufRead>(
    source: R,
    filter: Option<&BTreeSet<String>>,
) -> Result<LoadReport> {
    let mut vocab: Option<Vocabulary> = None;
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<embedding stream>", e))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let rest: Vec<&str> = fields.collect();
        let voc = vocab.get_or_insert_with(|| Vocabulary::new(rest.len()));
        if rest.len() != voc.dimension || rest.is_empty() {
            return Err(Error::InconsistentDimension {
                line: line_no,
                expected: voc.dimension,
                found: rest.len(),
            });
        }
        if filter.is_some_and(|f| !f.contains(token)) || voc.contains(token) {
            continue;
        }
        let values = rest
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::NonNumeric {
                    line: line_no,
                    field: (*f).to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                line: line_no,
                token: token.to_string(),
            });
        }
        voc.entries
            .insert(token.to_string(), EmbeddingVector::new(token, values));
    }
    let vocabulary = vocab.ok_or(Error::EmptyStream)?;
    let missing = filter
        .map(|f| {
            f.iter()
                .filter(|t| !vocabulary.contains(t))
                .cloned()
                .collect()
        })
        .unwrap_or_default();
    Ok(LoadReport {
        vocabulary,
        missing,
    })
}

pub fn inner_product(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum())
}

pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    let dot = inner_product(a, b)?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// The `k` most cosine-similar tokens to `word`, excluding `word` itself.
/// Equal similarities are ordered lexicographically.
pub fn nearest_neighbors(vocab: &Vocabulary, word: &str, k: usize) -> Result<Vec<String>> {
    let query = vocab
        .get(word)
        .ok_or_else(|| Error::UnknownWord(word.to_string()))?;
    if k == 0 || k >= vocab.len() {
        return Err(Error::TooManyNeighbours {
            k,
            size: vocab.len(),
        });
    }
    let mut scored = vocab
        .vectors()
        .filter(|v| v.word != word)
        .map(|v| cosine(query, v).map(|c| (c, v.word.clone())))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    Ok(scored.into_iter().take(k).map(|(_, w)| w).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReduceOptions {
    /// Scale every vector to unit length before centring.
    pub normalize: bool,
}

/// A fitted projection onto the top three principal axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    /// Unit loading vectors; a zero vector marks a padded component.
    pub components: [Vec<f64>; 3],
    pub normalize: bool,
    /// Number of components that had no variance behind them and were zero padded.
    pub degenerate: usize,
}

impl PcaProjection {
    pub fn project(&self, values: &[f64]) -> [f64; 3] {
        let scale = if self.normalize {
            let n = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                1.0 / n
            } else {
                1.0
            }
        } else {
            1.0
        };
        let mut out = [0.0; 3];
        for (o, comp) in out.iter_mut().zip(&self.components) {
            *o = values
                .iter()
                .zip(&self.mean)
                .zip(comp)
                .map(|((v, m), c)| (v * scale - m) * c)
                .sum();
        }
        out
    }
}

const DEGENERATE_RATIO: f64 = 1e-9;

/// Fits sign-fixed PCA on the vocabulary and returns the projection.
///
/// Rows are taken in token order. Each axis is flipped so its
/// largest-magnitude loading is positive (first index wins a tie).
pub fn fit_projection(vocab: &Vocabulary, options: ReduceOptions) -> Result<PcaProjection> {
    if vocab.is_empty() {
        return Err(Error::Empty("vocabulary"));
    }
    let d = vocab.dimension();
    if d < 3 {
        return Err(Error::DimensionMismatch { left: 3, right: d });
    }
    let n = vocab.len();
    let rows: Vec<Vec<f64>> = vocab
        .vectors()
        .map(|v| {
            if options.normalize {
                let norm = v.norm();
                if norm > 0.0 {
                    return v.values.iter().map(|x| x / norm).collect();
                }
            }
            v.values.clone()
        })
        .collect();
    let mut mean = vec![0.0; d];
    for row in &rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centred = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let svd = centred.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let top = order.first().map_or(0.0, |&i| svd.singular_values[i]);

    let mut components: [Vec<f64>; 3] = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut degenerate = 0;
    for (slot, comp) in components.iter_mut().enumerate() {
        let Some(&idx) = order.get(slot) else {
            degenerate += 1;
            continue;
        };
        let sigma = svd.singular_values[idx];
        if top == 0.0 || sigma <= DEGENERATE_RATIO * top {
            degenerate += 1;
            continue;
        }
        let mut axis: Vec<f64> = v_t.row(idx).iter().copied().collect();
        let pivot = axis
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > axis[best].abs() { i } else { best });
        if axis[pivot] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        *comp = axis;
    }
    Ok(PcaProjection {
        mean,
        components,
        normalize: options.normalize,
        degenerate,
    })
}

/// Summary of a [`reduce_dimensions`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub projection: PcaProjection,
    /// True when fewer than three independent directions existed.
    pub rank_deficient: bool,
}

/// Projects every vector onto its top three principal components and stores
/// the result in the vocabulary.
pub fn reduce_dimensions(vocab: &mut Vocabulary, options: ReduceOptions) -> Result<Reduction> {
    let projection = fit_projection(vocab, options)?;
    let reduced = vocab
        .vectors()
        .map(|v| (v.word.clone(), projection.project(&v.values)))
        .collect();
    vocab.reduced = Some(reduced);
    Ok(Reduction {
        rank_deficient: projection.degenerate > 0,
        projection,
    })
}
