//! Simultaneous-perturbation stochastic approximation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    /// Stability constant `A`.
    pub big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl SpsaConfig {
    /// a = 0.05, c = 0.06, A = 0.01·epochs, Spall's exponents.
    pub fn for_epochs(epochs: usize) -> Self {
        Self {
            a: 0.05,
            c: 0.06,
            big_a: 0.01 * epochs as f64,
            alpha: 0.602,
            gamma: 0.101,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a > 0.0
            && self.c > 0.0
            && self.big_a >= 0.0
            && [self.a, self.c, self.big_a, self.alpha, self.gamma]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid SPSA settings {self:?}")))
        }
    }

    pub fn step_size(&self, k: usize) -> f64 {
        self.a / (self.big_a + k as f64 + 1.0).powf(self.alpha)
    }

    pub fn perturbation(&self, k: usize) -> f64 {
        self.c / (k as f64 + 1.0).powf(self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub loss_plus: f64,
    pub loss_minus: f64,
    /// True when a perturbed loss was not finite and θ was left alone.
    pub skipped: bool,
}

impl StepReport {
    pub fn mean_loss(&self) -> f64 {
        0.5 * (self.loss_plus + self.loss_minus)
    }
}

/// One SPSA update of `theta` in place at iteration `k`.
pub fn spsa_step<F, R>(
    theta: &mut [f64],
    mut loss: F,
    config: &SpsaConfig,
    k: usize,
    rng: &mut R,
) -> StepReport
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let ck = config.perturbation(k);
    let delta: Vec<f64> = (0..theta.len())
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let probe = |sign: f64| -> Vec<f64> {
        theta
            .iter()
            .zip(&delta)
            .map(|(t, d)| t + sign * ck * d)
            .collect()
    };
    let loss_plus = loss(&probe(1.0));
    let loss_minus = loss(&probe(-1.0));
    if !loss_plus.is_finite() || !loss_minus.is_finite() {
        return StepReport {
            loss_plus,
            loss_minus,
            skipped: true,
        };
    }
    let scale = config.step_size(k) * (loss_plus - loss_minus) / (2.0 * ck);
    // Δ_i ∈ {±1}, so Δ_i⁻¹ = Δ_i
    for (t, d) in theta.iter_mut().zip(&delta) {
        *t -= scale * d;
    }
    StepReport {
        loss_plus,
        loss_minus,
        skipped: false,
    }
}

/// Runs `steps` updates from `k = 0`; fails if every step was skipped.
pub fn minimize<F, R>(
    theta: &mut [f64],
    mut loss: F,
    config: &SpsaConfig,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<StepReport>>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    config.validate()?;
    let reports: Vec<StepReport> = (0..steps)
        .map(|k| spsa_step(theta, &mut loss, config, k, rng))
        .collect();
    if steps > 0 && reports.iter().all(|r| r.skipped) {
        return Err(Error::NonFiniteLoss);
    }
    Ok(reports)
}
