use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use fsl_qnlp::aae::{aae_recover, aae_variational_fit, fit_config, sign_split};
use fsl_qnlp::ansatz::{compile, trainable_breakdown, AnsatzKind, AnsatzSpec, Encoding, PqeEncoder};
use fsl_qnlp::circuit::{CircuitIR, Gate, ParamRef, ParamStore};
use fsl_qnlp::corpus::Split;
use fsl_qnlp::diagnostics::{expressibility, Template, DEFAULT_BINS, DEFAULT_SAMPLES};
use fsl_qnlp::embedding::{load_embeddings, reduce_dimensions, ReduceOptions};
use fsl_qnlp::experiment::{
    prepare, summarize, write_seed, write_shared, ExperimentConfig, ExperimentData, Mode,
};
use fsl_qnlp::pregroup::parse_sentence;

#[derive(Parser)]
#[command(name = "qnlp", version, about = "Few-shot quantum NLP experiments on an exact simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of an experiment and write metrics, parameters and a summary.
    Train(TrainArgs),
    /// Accuracy on every split for a saved parameter file.
    Eval(EvalArgs),
    /// KL divergence of an ansatz's fidelity distribution from Haar.
    Expressibility(ExprArgs),
    /// Sign-split amplitude encoding of a real vector.
    AaeDemo(AaeArgs),
    /// Trainable parameter counts per word or pregroup type.
    Counts(CountArgs),
    /// Project embeddings to three dimensions and write them as CSV.
    ReduceEmbeddings(ReduceArgs),
    /// Parse the corpus (or given sentences) and report every failure.
    ParseCheck(ParseArgs),
}

#[derive(Args)]
struct TrainArgs {
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the seed sweep (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct EvalArgs {
    config: PathBuf,
    params: PathBuf,
}

#[derive(Args)]
struct ExprArgs {
    /// iqp, sim15, euler, circuit4, rz (H then Rz) or fixed (no gates).
    #[arg(long, default_value = "euler")]
    ansatz: String,
    #[arg(long, default_value_t = 1)]
    qubits: usize,
    #[arg(long, default_value_t = 1)]
    layers: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the histogram as CSV.
    #[arg(long)]
    histogram: Option<PathBuf>,
}

#[derive(Args)]
struct AaeArgs {
    /// Comma-separated data; length must be a power of two.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    /// Run a variational fit with this many SPSA steps.
    #[arg(long)]
    fit_steps: Option<usize>,
    #[arg(long, default_value = "circuit4")]
    ansatz: AnsatzKind,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CountArgs {
    /// Base config; the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    ansatz: Option<AnsatzKind>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    qubits_per_noun: Option<usize>,
    /// Count over these sentences instead of the training split.
    #[arg(long = "sentence")]
    sentences: Vec<String>,
}

#[derive(Args)]
struct ReduceArgs {
    embeddings: PathBuf,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep only the words of this experiment's corpus.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Unit-normalise vectors before the projection.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sentences to parse instead of the corpus splits.
    sentences: Vec<String>,
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("reading config {}", path.display()))
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn train(args: TrainArgs) -> Result<ExitCode> {
    let config = load_config(&args.config)?;
    let out = args
        .out
        .or_else(|| config.output.clone())
        .or_else(|| std::env::var_os("QNLP_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qnlp-out"));
    let data = ExperimentData::load(&config)?;
    let prepared = prepare(&config, &data)?;
    if let Some(r) = &prepared.nn_report {
        eprintln!("network PQE: mse {:.5} -> {:.5} over {} steps", r.initial_mse, r.final_mse, r.steps);
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build()?;
    let outcomes: Vec<_> = pool.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| {
                let result = prepared.run_seed(seed)?;
                write_seed(&out, &result)?;
                Ok::<_, fsl_qnlp::Error>(result)
            })
            .collect()
    });
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (seed, outcome) in config.seeds.iter().zip(outcomes) {
        match outcome {
            Ok(r) => {
                eprintln!(
                    "seed {seed}: train {:.3} test {:.3} oov {:.3}",
                    r.accuracy.get(&Split::Train).copied().unwrap_or(f64::NAN),
                    r.accuracy.get(&Split::Test).copied().unwrap_or(f64::NAN),
                    r.accuracy.get(&Split::Oov).copied().unwrap_or(f64::NAN),
                );
                results.push(r);
            }
            Err(e) => {
                eprintln!("seed {seed}: {e}");
                failures.push((*seed, e.to_string()));
            }
        }
    }
    let summary = summarize(&prepared, &results, &failures)?;
    write_shared(&out, &prepared, &summary)?;
    println!("{}", out.display());
    Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn eval(args: EvalArgs) -> Result<ExitCode> {
    let config = load_config(&args.config)?;
    let text = fs::read_to_string(&args.params).with_context(|| format!("reading {}", args.params.display()))?;
    let store = ParamStore::from_text(&text)?;
    let prepared = prepare(&config, &ExperimentData::load(&config)?)?;
    let acc = prepared.evaluate_all(&store)?;
    let map: BTreeMap<String, f64> = acc.iter().map(|(s, a)| (s.to_string(), *a)).collect();
    print_json(&json!({ "accuracy": map, "trainable_params": prepared.trainable_count(&store) }))?;
    Ok(ExitCode::SUCCESS)
}

fn template(args: &ExprArgs) -> Result<Template> {
    Ok(match args.ansatz.to_ascii_lowercase().as_str() {
        "rz" => Template::single_rz(),
        "fixed" => Template::fixed(args.qubits),
        other => Template::from_ansatz(&AnsatzSpec::new(other.parse()?, args.layers)?, args.qubits)?,
    })
}

fn expressibility_cmd(args: ExprArgs) -> Result<ExitCode> {
    let report = expressibility(&template(&args)?, args.samples, args.bins, args.seed)?;
    if let Some(path) = &args.histogram {
        fs::write(path, report.histogram.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    print_json(&json!({
        "ansatz": report.ansatz,
        "qubits": report.qubits,
        "layers": report.layers,
        "samples": report.samples,
        "bins": report.bins,
        "seed": report.seed,
        "kl_divergence": report.kl_divergence,
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn aae_demo(args: AaeArgs) -> Result<ExitCode> {
    let data = args.values.unwrap_or_else(|| {
        let s = 1.0 / 3f64.sqrt();
        vec![s, 0.0, s, -s]
    });
    let norm = data.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        bail!("the data vector is zero");
    }
    let data: Vec<f64> = data.iter().map(|v| v / norm).collect();
    let (state, success) = aae_recover(&sign_split(&data)?)?;
    let recovered: Vec<f64> = state.amplitudes().iter().map(|a| a.re).collect();
    let max_error = recovered.iter().zip(&data).map(|(r, d)| (r - d).abs()).fold(0.0, f64::max);
    let mut report = json!({
        "input": data,
        "recovered": recovered,
        "success_probability": success,
        "max_error": max_error,
    });
    if let Some(steps) = args.fit_steps {
        let spec = AnsatzSpec::new(args.ansatz, args.layers)?;
        let fit = aae_variational_fit(&data, &spec, &fit_config(steps), steps, args.seed)?;
        report["fit"] = serde_json::to_value(&fit)?;
    }
    print_json(&report)?;
    Ok(ExitCode::SUCCESS)
}

/// Counting only needs the W layer, so the PQE contributes nothing.
struct NoPqe;

impl PqeEncoder for NoPqe {
    fn encode(&self, _: &str, _: usize) -> fsl_qnlp::Result<(Vec<Gate>, BTreeMap<ParamRef, f64>)> {
        Ok((Vec::new(), BTreeMap::new()))
    }
}

fn counts(args: CountArgs) -> Result<ExitCode> {
    let mut config = match &args.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    config.mode = args.mode.unwrap_or(config.mode);
    config.ansatz = args.ansatz.unwrap_or(config.ansatz);
    config.layers = args.layers.unwrap_or(config.layers);
    config.qubits_per_noun = args.qubits_per_noun.unwrap_or(config.qubits_per_noun);
    config.validate()?;
    // the lexicon and corpus are all that is needed
    let data = ExperimentData::load(&ExperimentConfig {
        mode: Mode::Traditional,
        ..config.clone()
    })?;
    let diagrams = if args.sentences.is_empty() {
        data.diagrams()?.remove(&Split::Train).unwrap_or_default().into_iter().map(|(d, _)| d).collect()
    } else {
        args.sentences
            .iter()
            .map(|s| parse_sentence(s, &data.lexicon).with_context(|| format!("parsing {s:?}")))
            .collect::<Result<Vec<_>>>()?
    };
    let encoding = if config.mode.is_fsl() { Encoding::Fsl(&NoPqe) } else { Encoding::Traditional };
    let (ansatz, dims) = (config.word_ansatz()?, config.dims()?);
    let circuits = diagrams
        .iter()
        .map(|d| compile(d, &ansatz, &dims, encoding))
        .collect::<fsl_qnlp::Result<Vec<CircuitIR>>>()?;
    let mut store = ParamStore::new(if config.mode.is_fsl() {
        fsl_qnlp::circuit::ParamMode::Fsl
    } else {
        fsl_qnlp::circuit::ParamMode::Traditional
    });
    for c in &circuits {
        for r in c.trainable_params() {
            store.insert(r.clone(), 0.0)?;
        }
    }
    let per_key = trainable_breakdown(&store, &circuits);
    let total: usize = per_key.values().sum();
    print_json(&json!({
        "mode": config.mode.name(),
        "ansatz": ansatz.kind.name(),
        "layers": ansatz.layers,
        "qubits_per_noun": config.qubits_per_noun,
        "sentences": circuits.len(),
        "per_key": per_key,
        "total": total,
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn reduce_embeddings(args: ReduceArgs) -> Result<ExitCode> {
    let filter: Option<BTreeSet<String>> = match &args.config {
        Some(p) => {
            let config = load_config(p)?;
            let data = ExperimentData::load(&ExperimentConfig {
                mode: Mode::Traditional,
                ..config
            })?;
            Some(data.corpus_words()?)
        }
        None => None,
    };
    let file = fs::File::open(&args.embeddings).with_context(|| format!("opening {}", args.embeddings.display()))?;
    let report = load_embeddings(BufReader::new(file), filter.as_ref())?;
    for w in &report.missing {
        eprintln!("no embedding for {w}");
    }
    let mut vocab = report.vocabulary;
    let reduction = reduce_dimensions(&mut vocab, ReduceOptions { normalize: args.normalize })?;
    if reduction.rank_deficient {
        eprintln!("fewer than three independent directions; trailing coordinates are zero");
    }
    match &args.out {
        Some(p) => {
            let f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            vocab.write_reduced_csv(io::BufWriter::new(f))?;
        }
        None => vocab.write_reduced_csv(io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_check(args: ParseArgs) -> Result<ExitCode> {
    let config = match &args.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    let data = ExperimentData::load(&ExperimentConfig {
        mode: Mode::Traditional,
        ..config
    })?;
    let mut out = io::stdout().lock();
    if args.sentences.is_empty() {
        match data.diagrams() {
            Ok(all) => {
                for (split, items) in all {
                    writeln!(out, "{split}: {} sentences parsed", items.len())?;
                }
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                eprintln!("{e}");
                Ok(ExitCode::FAILURE)
            }
        }
    } else {
        let mut ok = true;
        for s in &args.sentences {
            match parse_sentence(s, &data.lexicon) {
                Ok(d) => {
                    let types: Vec<String> = d.words.iter().map(|w| format!("{}:{}", w.token, w.ty)).collect();
                    writeln!(out, "{s}\t{}\tcups {:?}", types.join(" "), d.cups)?;
                }
                Err(e) => {
                    ok = false;
                    eprintln!("{s}: {e}");
                }
            }
        }
        Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Expressibility(a) => expressibility_cmd(a),
        Command::AaeDemo(a) => aae_demo(a),
        Command::Counts(a) => counts(a),
        Command::ReduceEmbeddings(a) => reduce_embeddings(a),
        Command::ParseCheck(a) => parse_check(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
