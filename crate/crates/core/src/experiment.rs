//! End-to-end experiment: configuration, data loading, PQE preparation,
//! per-seed training and the output directory layout.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{compile, count_trainable, AnsatzKind, AnsatzSpec, Encoding, TypeDimensionMap};
use crate::bundled;
use crate::circuit::{ParamMode, ParamStore};
use crate::corpus::{LabeledCorpus, Split};
use crate::embedding::{load_embeddings, reduce_dimensions, ReduceOptions, Vocabulary};
use crate::error::{Error, Result};
use crate::pqe::{head_size, train_nn_pqe, BasePqe, FeedForwardNet, NnPqe, NnTrainReport};
use crate::pregroup::{parse_sentence, Lexicon, SentenceDiagram};
use crate::spsa::SpsaConfig;
use crate::trainer::{loss_and_accuracy, metrics_csv, train, EpochMetrics, LabeledCircuit, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Traditional,
    FslBase,
    FslNn,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Traditional => "traditional",
            Mode::FslBase => "fsl_base",
            Mode::FslNn => "fsl_nn",
        }
    }

    pub fn is_fsl(self) -> bool {
        self != Mode::Traditional
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "traditional" => Ok(Mode::Traditional),
            "fsl_base" => Ok(Mode::FslBase),
            "fsl_nn" => Ok(Mode::FslNn),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// Input files. A missing entry falls back to the bundled corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataPaths {
    pub splits: BTreeMap<Split, PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
}

/// One experiment, read from flat `key = value` text.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Ansatz for traditional mode. FSL modes always use Circuit4 for W.
    pub ansatz: AnsatzKind,
    pub layers: usize,
    pub qubits_per_noun: usize,
    pub mode: Mode,
    pub spsa_a: f64,
    pub spsa_c: f64,
    /// `A`; defaults to 0.01 × epochs.
    pub spsa_big_a: Option<f64>,
    pub spsa_alpha: f64,
    pub spsa_gamma: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    pub normalize_embeddings: bool,
    pub nn_hidden: usize,
    pub nn_steps: usize,
    /// SPSA gain `a` for the network fit.
    pub nn_spsa_a: f64,
    pub nn_seed: u64,
    pub paths: DataPaths,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let spsa = SpsaConfig::for_epochs(0);
        Self {
            ansatz: AnsatzKind::Sim15,
            layers: 1,
            qubits_per_noun: 1,
            mode: Mode::FslBase,
            spsa_a: spsa.a,
            spsa_c: spsa.c,
            spsa_big_a: None,
            spsa_alpha: spsa.alpha,
            spsa_gamma: spsa.gamma,
            epochs: 500,
            batch_size: 700,
            seeds: vec![0],
            normalize_embeddings: false,
            nn_hidden: crate::pqe::DEFAULT_HIDDEN,
            nn_steps: 1000,
            nn_spsa_a: 0.5,
            nn_seed: 0,
            paths: DataPaths::default(),
            output: None,
        }
    }
}

fn split_key(split: Split) -> String {
    format!("{split}_path")
}

impl ExperimentConfig {
    pub fn spsa(&self) -> SpsaConfig {
        SpsaConfig {
            a: self.spsa_a,
            c: self.spsa_c,
            big_a: self.spsa_big_a.unwrap_or(0.01 * self.epochs as f64),
            alpha: self.spsa_alpha,
            gamma: self.spsa_gamma,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            spsa: self.spsa(),
            epochs: self.epochs,
            batch_size: self.batch_size,
        }
    }

    /// The ansatz actually compiled for this mode.
    pub fn word_ansatz(&self) -> Result<AnsatzSpec> {
        let kind = if self.mode.is_fsl() {
            AnsatzKind::Circuit4
        } else {
            self.ansatz
        };
        AnsatzSpec::new(kind, self.layers)
    }

    pub fn dims(&self) -> Result<TypeDimensionMap> {
        TypeDimensionMap::new(self.qubits_per_noun)
    }

    /// Checks values and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        self.word_ansatz()?;
        self.dims()?;
        self.spsa().validate()?;
        SpsaConfig {
            a: self.nn_spsa_a,
            ..self.spsa()
        }
        .validate()?;
        let files = self
            .paths
            .splits
            .values()
            .chain(&self.paths.lexicon)
            .chain(&self.paths.embeddings);
        let missing: Vec<String> = files
            .filter(|p| !p.is_file())
            .map(|p| format!("missing file {}", p.display()))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Config(missing.join("; ")));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mode", &self.mode);
        kv("ansatz", &self.ansatz);
        kv("layers", &self.layers);
        kv("qubits_per_noun", &self.qubits_per_noun);
        kv("spsa_a", &self.spsa_a);
        kv("spsa_c", &self.spsa_c);
        if let Some(a) = self.spsa_big_a {
            kv("spsa_A", &a);
        }
        kv("spsa_alpha", &self.spsa_alpha);
        kv("spsa_gamma", &self.spsa_gamma);
        kv("epochs", &self.epochs);
        kv("batch_size", &self.batch_size);
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        kv("seeds", &seeds.join(","));
        kv("normalize_embeddings", &self.normalize_embeddings);
        kv("nn_hidden", &self.nn_hidden);
        kv("nn_steps", &self.nn_steps);
        kv("nn_spsa_a", &self.nn_spsa_a);
        kv("nn_seed", &self.nn_seed);
        for (split, p) in &self.paths.splits {
            kv(&split_key(*split), &p.display());
        }
        if let Some(p) = &self.paths.lexicon {
            kv("lexicon_path", &p.display());
        }
        if let Some(p) = &self.paths.embeddings {
            kv("embeddings_path", &p.display());
        }
        if let Some(p) = &self.output {
            kv("output", &p.display());
        }
        s
    }

    /// Relative paths are resolved against `base` when given.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        let resolve = |v: &str| -> PathBuf {
            let p = PathBuf::from(v);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Format {
                path: "<config>".into(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
                v.parse().map_err(|_| format!("bad value {v:?}"))
            }
            let r: std::result::Result<(), String> = (|| {
                match key {
                    "mode" => cfg.mode = value.parse().map_err(|e: Error| e.to_string())?,
                    "ansatz" => cfg.ansatz = value.parse().map_err(|e: Error| e.to_string())?,
                    "layers" => cfg.layers = num(value)?,
                    "qubits_per_noun" => cfg.qubits_per_noun = num(value)?,
                    "spsa_a" => cfg.spsa_a = num(value)?,
                    "spsa_c" => cfg.spsa_c = num(value)?,
                    "spsa_A" => cfg.spsa_big_a = Some(num(value)?),
                    "spsa_alpha" => cfg.spsa_alpha = num(value)?,
                    "spsa_gamma" => cfg.spsa_gamma = num(value)?,
                    "epochs" => cfg.epochs = num(value)?,
                    "batch_size" => cfg.batch_size = num(value)?,
                    "seeds" => {
                        cfg.seeds = value
                            .split(',')
                            .map(|s| num(s.trim()))
                            .collect::<std::result::Result<_, _>>()?
                    }
                    "normalize_embeddings" => cfg.normalize_embeddings = num(value)?,
                    "nn_hidden" => cfg.nn_hidden = num(value)?,
                    "nn_steps" => cfg.nn_steps = num(value)?,
                    "nn_spsa_a" => cfg.nn_spsa_a = num(value)?,
                    "nn_seed" => cfg.nn_seed = num(value)?,
                    "lexicon_path" => cfg.paths.lexicon = Some(resolve(value)),
                    "embeddings_path" => cfg.paths.embeddings = Some(resolve(value)),
                    "output" => cfg.output = Some(resolve(value)),
                    other => {
                        let split = other
                            .strip_suffix("_path")
                            .and_then(|s| s.parse::<Split>().ok())
                            .ok_or_else(|| format!("unknown key {other:?}"))?;
                        cfg.paths.splits.insert(split, resolve(value));
                    }
                }
                Ok(())
            })();
            r.map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent())
    }
}

/// Corpus, lexicon and (for FSL modes) the embeddings of every corpus word.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub lexicon: Lexicon,
    pub splits: BTreeMap<Split, (LabeledCorpus, String)>,
    pub embeddings: Option<Vocabulary>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl ExperimentData {
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let lexicon = match &config.paths.lexicon {
            Some(p) => Lexicon::parse(&read(p)?, &p.display().to_string())?,
            None => Lexicon::parse(bundled::LEXICON, "lexicon.tsv")?,
        };
        let mut splits = BTreeMap::new();
        for split in Split::ALL {
            let (text, origin) = match config.paths.splits.get(&split) {
                Some(p) => (read(p)?, p.display().to_string()),
                None => (bundled::split(split).to_string(), format!("{split}.tsv")),
            };
            splits.insert(split, (LabeledCorpus::parse(&text, split, &origin)?, origin));
        }
        let mut data = Self {
            lexicon,
            splits,
            embeddings: None,
        };
        if config.mode.is_fsl() {
            let words = data.corpus_words()?;
            let report = match &config.paths.embeddings {
                Some(p) => {
                    let f = fs::File::open(p).map_err(|e| Error::io(p, e))?;
                    load_embeddings(BufReader::new(f), Some(&words))?
                }
                None => load_embeddings(bundled::EMBEDDINGS.as_bytes(), Some(&words))?,
            };
            if !report.missing.is_empty() {
                return Err(Error::Corpus(
                    report
                        .missing
                        .iter()
                        .map(|w| format!("no embedding for {w:?}"))
                        .collect(),
                ));
            }
            data.embeddings = Some(report.vocabulary);
        }
        Ok(data)
    }

    /// Every token in every split.
    pub fn corpus_words(&self) -> Result<BTreeSet<String>> {
        let mut out = BTreeSet::new();
        for (c, _) in self.splits.values() {
            out.extend(c.vocabulary()?);
        }
        Ok(out)
    }

    pub fn split_words(&self, split: Split) -> Result<BTreeSet<String>> {
        self.splits[&split].0.vocabulary()
    }

    /// Parses every sentence, reporting all failures at once.
    pub fn diagrams(&self) -> Result<BTreeMap<Split, Vec<(SentenceDiagram, u8)>>> {
        let mut out = BTreeMap::new();
        let mut problems = Vec::new();
        for (split, (corpus, origin)) in &self.splits {
            let mut parsed = Vec::new();
            for e in &corpus.examples {
                match parse_sentence(&e.text, &self.lexicon) {
                    Ok(d) => parsed.push((d, e.label)),
                    Err(err) => problems.push(format!("{origin}:{}: {err}", e.line)),
                }
            }
            out.insert(*split, parsed);
        }
        if problems.is_empty() {
            Ok(out)
        } else {
            Err(Error::Corpus(problems))
        }
    }
}

pub enum Encoder {
    Base(BasePqe),
    Nn(NnPqe),
}

impl Encoder {
    fn encoding(&self) -> Encoding<'_> {
        match self {
            Encoder::Base(b) => Encoding::Fsl(b),
            Encoder::Nn(n) => Encoding::Fsl(n),
        }
    }
}

/// Everything that does not depend on the seed.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub circuits: BTreeMap<Split, Vec<LabeledCircuit>>,
    pub encoder: Option<Encoder>,
    /// Embeddings with their 3-d reduction (FSL Base).
    pub reduced: Option<Vocabulary>,
    pub nn_report: Option<NnTrainReport>,
}

pub fn prepare(config: &ExperimentConfig, data: &ExperimentData) -> Result<Prepared> {
    config.validate()?;
    let diagrams = data.diagrams()?;
    let ansatz = config.word_ansatz()?;
    let dims = config.dims()?;

    let mut reduced = None;
    let mut nn_report = None;
    let encoder = match config.mode {
        Mode::Traditional => None,
        Mode::FslBase => {
            let mut vocab = data.embeddings.clone().ok_or(Error::Empty("embeddings"))?;
            reduce_dimensions(
                &mut vocab,
                ReduceOptions {
                    normalize: config.normalize_embeddings,
                },
            )?;
            let train_words = data.split_words(Split::Train)?;
            let base = BasePqe::fit(
                vocab.reduced().expect("reduction stored"),
                train_words.iter().map(String::as_str),
            )?;
            reduced = Some(vocab);
            Some(Encoder::Base(base))
        }
        Mode::FslNn => {
            let vocab = data.embeddings.as_ref().ok_or(Error::Empty("embeddings"))?;
            let widths: BTreeSet<usize> = diagrams
                .values()
                .flatten()
                .flat_map(|(d, _)| d.words.iter().map(|w| dims.type_width(&w.ty)))
                .collect();
            let widths: Vec<usize> = widths.into_iter().collect();
            let mut rng = ChaCha8Rng::seed_from_u64(config.nn_seed);
            let mut net = FeedForwardNet::random(vocab.dimension(), config.nn_hidden, head_size(&widths), &mut rng);
            let spsa = SpsaConfig {
                a: config.nn_spsa_a,
                big_a: 0.01 * config.nn_steps as f64,
                ..config.spsa()
            };
            nn_report = Some(train_nn_pqe(&mut net, vocab, &widths, &spsa, config.nn_steps, config.nn_seed)?);
            Some(Encoder::Nn(NnPqe::new(net, vocab)?))
        }
    };

    let encoding = encoder.as_ref().map_or(Encoding::Traditional, Encoder::encoding);
    let mut circuits = BTreeMap::new();
    for (split, items) in &diagrams {
        let compiled = items
            .iter()
            .map(|(d, label)| {
                Ok(LabeledCircuit {
                    circuit: compile(d, &ansatz, &dims, encoding)?,
                    label: *label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        circuits.insert(*split, compiled);
    }
    Ok(Prepared {
        config: config.clone(),
        circuits,
        encoder,
        reduced,
        nn_report,
    })
}

#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub metrics: Vec<EpochMetrics>,
    pub accuracy: BTreeMap<Split, f64>,
    pub trainable_params: usize,
    pub params: ParamStore,
}

impl Prepared {
    pub fn param_mode(&self) -> ParamMode {
        if self.config.mode.is_fsl() {
            ParamMode::Fsl
        } else {
            ParamMode::Traditional
        }
    }

    /// Fresh store seeded over every split's circuits.
    pub fn initial_params(&self, seed: u64) -> Result<ParamStore> {
        let mut store = ParamStore::new(self.param_mode());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        store.populate(self.circuits.values().flatten().map(|s| &s.circuit), &mut rng)?;
        Ok(store)
    }

    pub fn trainable_count(&self, store: &ParamStore) -> usize {
        count_trainable(store, self.circuits[&Split::Train].iter().map(|s| &s.circuit))
    }

    /// Accuracy on every non-empty split.
    pub fn evaluate_all(&self, store: &ParamStore) -> Result<BTreeMap<Split, f64>> {
        let mut out = BTreeMap::new();
        for (split, data) in &self.circuits {
            if !data.is_empty() {
                out.insert(*split, loss_and_accuracy(data, store)?.1);
            }
        }
        Ok(out)
    }

    pub fn run_seed(&self, seed: u64) -> Result<SeedResult> {
        let mut params = self.initial_params(seed)?;
        let metrics = train(
            &self.circuits[&Split::Train],
            Some(&self.circuits[&Split::Dev]),
            &mut params,
            &self.config.train_config(),
            seed,
        )?;
        Ok(SeedResult {
            seed,
            accuracy: self.evaluate_all(&params)?,
            trainable_params: self.trainable_count(&params),
            metrics,
            params,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub trainable_params: usize,
    pub final_train_loss: Option<f64>,
    pub accuracy: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub ansatz: String,
    pub layers: usize,
    pub qubits_per_noun: usize,
    pub epochs: usize,
    pub trainable_params: Option<usize>,
    pub mean_accuracy: BTreeMap<String, f64>,
    pub seeds: Vec<SeedSummary>,
    pub failed_seeds: Vec<(u64, String)>,
    pub nn_training: Option<NnTrainReport>,
}

pub fn summarize(prepared: &Prepared, results: &[SeedResult], failures: &[(u64, String)]) -> Result<Summary> {
    let cfg = &prepared.config;
    let seeds: Vec<SeedSummary> = results
        .iter()
        .map(|r| SeedSummary {
            seed: r.seed,
            trainable_params: r.trainable_params,
            final_train_loss: r.metrics.last().map(|m| m.train_loss),
            accuracy: r.accuracy.iter().map(|(s, a)| (s.to_string(), *a)).collect(),
        })
        .collect();
    let mut mean_accuracy = BTreeMap::new();
    for split in Split::ALL {
        let vals: Vec<f64> = results.iter().filter_map(|r| r.accuracy.get(&split)).copied().collect();
        if !vals.is_empty() {
            mean_accuracy.insert(split.to_string(), vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    Ok(Summary {
        mode: cfg.mode,
        ansatz: cfg.word_ansatz()?.kind.to_string(),
        layers: cfg.layers,
        qubits_per_noun: cfg.qubits_per_noun,
        epochs: cfg.epochs,
        trainable_params: results.first().map(|r| r.trainable_params),
        mean_accuracy,
        seeds,
        failed_seeds: failures.to_vec(),
        nn_training: prepared.nn_report.clone(),
    })
}

pub fn metrics_file(seed: u64) -> String {
    format!("metrics_seed{seed}.csv")
}

pub fn params_file(seed: u64) -> String {
    format!("params_seed{seed}.dat")
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const REDUCED_FILE: &str = "reduced_embeddings.csv";
pub const SCALING_FILE: &str = "base_scaling.csv";
pub const NN_WEIGHTS_FILE: &str = "nn_weights.txt";
pub const CONFIG_FILE: &str = "config.ini";

fn write(path: PathBuf, contents: &[u8]) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

/// Per-seed metrics and parameters.
pub fn write_seed(dir: &Path, result: &SeedResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir.join(metrics_file(result.seed)), metrics_csv(&result.metrics).as_bytes())?;
    write(dir.join(params_file(result.seed)), result.params.to_text().as_bytes())
}

/// Config copy, PQE artifacts and the summary.
pub fn write_shared(dir: &Path, prepared: &Prepared, summary: &Summary) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir.join(CONFIG_FILE), prepared.config.to_text().as_bytes())?;
    if let Some(vocab) = &prepared.reduced {
        let mut buf = Vec::new();
        vocab
            .write_reduced_csv(&mut buf)
            .map_err(|e| Error::io(dir.join(REDUCED_FILE), e))?;
        write(dir.join(REDUCED_FILE), &buf)?;
    }
    match &prepared.encoder {
        Some(Encoder::Base(b)) => write(dir.join(SCALING_FILE), b.scaling.to_csv().as_bytes())?,
        Some(Encoder::Nn(n)) => write(dir.join(NN_WEIGHTS_FILE), n.net.to_text().as_bytes())?,
        None => {}
    }
    let json = serde_json::to_string_pretty(summary)?;
    write(dir.join(SUMMARY_FILE), json.as_bytes())
}
