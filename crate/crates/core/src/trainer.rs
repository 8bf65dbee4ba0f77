//! Binary classification of sentence circuits trained with SPSA.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitIR, ParamRef, ParamStore};
use crate::error::{Error, Result};
use crate::simulator::{born_probabilities, run};
use crate::spsa::{spsa_step, SpsaConfig};

pub const BCE_EPSILON: f64 = 1e-9;

/// Loss charged to a sample whose post-selection never succeeds.
pub fn zero_success_loss() -> f64 {
    -BCE_EPSILON.ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// `None` when post-selection has zero success probability.
    pub class: Option<u8>,
    pub probabilities: [f64; 2],
    pub success_probability: f64,
}

/// Argmax over `[p0, p1]`; a tie goes to class 0.
pub fn classify(probabilities: [f64; 2]) -> u8 {
    if probabilities[1] > probabilities[0] {
        1
    } else {
        0
    }
}

pub fn predict(circuit: &CircuitIR, params: &ParamStore) -> Result<Prediction> {
    if circuit.sentence_qubits.len() != 1 {
        return Err(Error::Config(format!(
            "sentence register has {} qubits, expected 1",
            circuit.sentence_qubits.len()
        )));
    }
    let outcome = run(circuit, params)?;
    if outcome.is_zero_probability() {
        return Ok(Prediction {
            class: None,
            probabilities: [0.0, 0.0],
            success_probability: outcome.success_probability,
        });
    }
    let p = born_probabilities(&outcome.sentence_state);
    let probabilities = [p[0], p[1]];
    Ok(Prediction {
        class: Some(classify(probabilities)),
        probabilities,
        success_probability: outcome.success_probability,
    })
}

pub fn bce_loss(probabilities: [f64; 2], label: u8) -> f64 {
    let l = f64::from(label);
    -(l * (probabilities[1] + BCE_EPSILON).ln() + (1.0 - l) * (probabilities[0] + BCE_EPSILON).ln())
}

fn sample_loss(p: &Prediction, label: u8) -> f64 {
    match p.class {
        Some(_) => bce_loss(p.probabilities, label),
        None => zero_success_loss(),
    }
}

#[derive(Debug, Clone)]
pub struct LabeledCircuit {
    pub circuit: CircuitIR,
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub spsa: SpsaConfig,
    pub epochs: usize,
    pub batch_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub seed: u64,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub dev_accuracy: Option<f64>,
}

pub const METRICS_HEADER: &str = "epoch,seed,train_loss,train_acc,dev_acc";

pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for m in metrics {
        let dev = m.dev_accuracy.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            m.epoch, m.seed, m.train_loss, m.train_accuracy, dev
        );
    }
    s
}

/// Mean loss and accuracy over `data`.
pub fn loss_and_accuracy(data: &[LabeledCircuit], params: &ParamStore) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Empty("split"));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for s in data {
        let p = predict(&s.circuit, params)?;
        loss += sample_loss(&p, s.label);
        if p.class == Some(s.label) {
            correct += 1;
        }
    }
    let n = data.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Fraction of correct predictions; zero-success samples count as wrong.
pub fn evaluate(data: &[LabeledCircuit], params: &ParamStore) -> Result<f64> {
    loss_and_accuracy(data, params).map(|(_, acc)| acc)
}

/// Trainable keys used by `data`, in sorted order.
pub fn training_keys(data: &[LabeledCircuit], params: &ParamStore) -> Vec<ParamRef> {
    let mut keys: Vec<ParamRef> = data
        .iter()
        .flat_map(|s| s.circuit.trainable_params().into_iter().cloned())
        .filter(|r| params.get(r).is_some())
        .collect();
    keys.sort();
    keys.dedup();
    keys
}

/// Runs `config.epochs` epochs: seeded shuffle, one SPSA step per batch on
/// the batch-mean loss, then metrics on the full training set and `dev`.
///
/// Only keys used by the training circuits are perturbed, so parameters of
/// words that appear only in other splits keep their initial values.
pub fn train(
    data: &[LabeledCircuit],
    dev: Option<&[LabeledCircuit]>,
    params: &mut ParamStore,
    config: &TrainConfig,
    seed: u64,
) -> Result<Vec<EpochMetrics>> {
    if data.is_empty() {
        return Err(Error::Empty("training corpus"));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    config.spsa.validate()?;
    let keys = training_keys(data, params);
    let mut theta = params.values_of(&keys)?;
    let mut scratch = params.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // keep the training stream apart from the initialisation stream
    rng.set_stream(1);

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut k = 0;
    let mut batches = 0usize;
    let mut failed = 0usize;
    let mut metrics = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let report = spsa_step(
                &mut theta,
                |p| {
                    scratch.set_values(&keys, p);
                    batch_loss(data, batch, &scratch).unwrap_or(f64::NAN)
                },
                &config.spsa,
                k,
                &mut rng,
            );
            k += 1;
            batches += 1;
            if report.skipped {
                failed += 1;
            }
        }
        if 2 * failed > batches {
            return Err(Error::LossEpidemic {
                failed,
                total: batches,
            });
        }
        params.set_values(&keys, &theta);
        let (train_loss, train_accuracy) = loss_and_accuracy(data, params)?;
        let dev_accuracy = match dev {
            Some(d) if !d.is_empty() => Some(evaluate(d, params)?),
            _ => None,
        };
        metrics.push(EpochMetrics {
            epoch,
            seed,
            train_loss,
            train_accuracy,
            dev_accuracy,
        });
    }
    Ok(metrics)
}

fn batch_loss(data: &[LabeledCircuit], batch: &[usize], params: &ParamStore) -> Result<f64> {
    let mut total = 0.0;
    for &i in batch {
        let s = &data[i];
        total += sample_loss(&predict(&s.circuit, params)?, s.label);
    }
    Ok(total / batch.len() as f64)
}
