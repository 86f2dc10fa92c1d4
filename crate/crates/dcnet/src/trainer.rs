//! Seeded training loop with checkpoint-based model selection.
//!
//! Every `checkpoint_every` mini-batches the model is scored on the
//! validation split; the parameters with the best validation macro-F1 are
//! what training returns. Training stops at `max_epochs` or after
//! `patience` checkpoints without improvement. Two runs with the same
//! configuration and seed produce bit-identical parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{make_batches, PreparedExample, PAD_INDEX};
use crate::error::{Error, Result};
use crate::metrics::{self, Metrics};
use crate::model::{self, DCNetModel, LossWeights};
use crate::numerics::{adam_step, AdamState, GroupRates, ParameterStore};

/// Numeric mode: `Single` keeps parameters exactly representable as
/// 32-bit floats (checkpoints round-trip bit-exactly); `Double` leaves
/// them at full double precision for verification work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

fn default_batch_size() -> usize {
    32
}
fn default_checkpoint_every() -> usize {
    16
}
fn default_max_epochs() -> usize {
    30
}
fn default_patience() -> usize {
    10
}
fn default_lr_other() -> f64 {
    1e-3
}
fn default_lr_embedding() -> f64 {
    1e-4
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_lambda1() -> f64 {
    1.0
}
fn default_precision() -> Precision {
    Precision::Single
}
fn default_valid_frac() -> f64 {
    0.05
}
fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// Validation checkpoint cadence, in mini-batches.
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    /// Checkpoints without improvement before stopping.
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_lr_other")]
    pub lr_other: f64,
    #[serde(default = "default_lr_embedding")]
    pub lr_embedding: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_lambda1")]
    pub lambda1: f64,
    #[serde(default)]
    pub lambda2: f64,
    #[serde(default)]
    pub lambda3: f64,
    /// Optional global-norm gradient clip; off by default.
    #[serde(default)]
    pub grad_clip: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_precision")]
    pub precision: Precision,
    #[serde(default = "default_valid_frac")]
    pub valid_frac: f64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            batch_size: default_batch_size(),
            checkpoint_every: default_checkpoint_every(),
            max_epochs: default_max_epochs(),
            patience: default_patience(),
            lr_other: default_lr_other(),
            lr_embedding: default_lr_embedding(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
            lambda1: default_lambda1(),
            lambda2: 0.0,
            lambda3: 0.0,
            grad_clip: None,
            seed: default_seed(),
            precision: default_precision(),
            valid_frac: default_valid_frac(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.checkpoint_every == 0 || self.max_epochs == 0 {
            return Err(Error::Config(
                "batch size, cadence, and epochs must be >= 1".into(),
            ));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        if self.lr_other <= 0.0 || self.lr_embedding <= 0.0 || self.epsilon <= 0.0 {
            return Err(Error::Config(
                "learning rates and epsilon must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must be in [0,1)".into()));
        }
        if let Some(c) = self.grad_clip {
            if c <= 0.0 {
                return Err(Error::Config("gradient clip must be positive".into()));
            }
        }
        self.loss_weights().map(|_| ())
    }

    pub fn loss_weights(&self) -> Result<LossWeights> {
        LossWeights::new(self.lambda1, self.lambda2, self.lambda3)
    }

    pub fn group_rates(&self) -> GroupRates {
        GroupRates {
            embedding: self.lr_embedding,
            other: self.lr_other,
        }
    }
}

/// One validation checkpoint: training-loss averages since the previous
/// checkpoint plus validation metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub step: u64,
    pub epoch: usize,
    pub train_loss: f64,
    pub loss_sarcasm: f64,
    pub loss_literal: f64,
    pub loss_implied: f64,
    pub valid: Metrics,
    pub is_best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<CheckpointRecord>,
    pub best_step: u64,
    pub best_valid_macro_f1: f64,
    pub total_steps: u64,
    pub stopped_early: bool,
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct LossAccumulator {
    examples: usize,
    total: f64,
    sarcasm: f64,
    literal: f64,
    implied: f64,
}

impl LossAccumulator {
    fn new() -> LossAccumulator {
        LossAccumulator {
            examples: 0,
            total: 0.0,
            sarcasm: 0.0,
            literal: 0.0,
            implied: 0.0,
        }
    }

    fn add(&mut self, b: &model::LossBreakdown) {
        self.examples += 1;
        self.total += b.total;
        self.sarcasm += b.sarcasm;
        self.literal += b.literal;
        self.implied += b.implied;
    }

    fn mean(&self) -> (f64, f64, f64, f64) {
        let n = self.examples.max(1) as f64;
        (
            self.total / n,
            self.sarcasm / n,
            self.literal / n,
            self.implied / n,
        )
    }
}

fn clip_gradients(store: &mut ParameterStore, max_norm: f64) {
    let mut sum_sq = 0.0;
    for (_, _, tensor) in store.iter() {
        if let Some(grad) = tensor.grad() {
            for g in grad {
                sum_sq += g * g;
            }
        }
    }
    let norm = sum_sq.sqrt();
    if norm > max_norm {
        let factor = max_norm / norm;
        for id in store.ids().collect::<Vec<_>>() {
            for g in store.get_mut(id).grad_mut() {
                *g *= factor;
            }
        }
    }
}

/// Train in place. On return the store holds the parameters of the best
/// validation checkpoint, not the last step.
pub fn train(
    model: &DCNetModel,
    store: &mut ParameterStore,
    config: &TrainConfig,
    train_set: &[PreparedExample],
    valid_set: &[PreparedExample],
) -> Result<TrainHistory> {
    config.validate()?;
    if train_set.is_empty() || valid_set.is_empty() {
        return Err(Error::Config(
            "training and validation sets must be nonempty".into(),
        ));
    }
    let weights = config.loss_weights()?;
    let rates = config.group_rates();

    if config.precision == Precision::Single {
        store.quantize_f32();
    }
    store.ensure_grads();
    store.zero_grads();

    let mut adam = AdamState::new(store, config.beta1, config.beta2, config.epsilon);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut history = TrainHistory {
        records: Vec::new(),
        best_step: 0,
        best_valid_macro_f1: f64::NEG_INFINITY,
        total_steps: 0,
        stopped_early: false,
    };
    let mut best_snapshot: Option<Vec<Vec<f64>>> = None;
    let mut checkpoints_since_best = 0usize;
    let mut accumulator = LossAccumulator::new();
    let mut step: u64 = 0;
    let input_dim = model.config().input_dim;

    'epochs: for epoch in 0..config.max_epochs {
        let batches = make_batches(train_set, config.batch_size, epoch_seed(config.seed, epoch));
        for batch in &batches {
            step += 1;
            let scale = 1.0 / batch.len() as f64;
            store.zero_grads();

            for i in 0..batch.len() {
                let example = &train_set[batch.positions[i]];
                let (_, breakdown) = model::loss_and_grads(
                    model,
                    store,
                    batch.channels(i),
                    &example.labels,
                    &weights,
                    scale,
                    true,
                    &mut dropout_rng,
                )?;
                if !breakdown.total.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "loss diverged at step {step} on example `{}`: {} \
                         (sarcasm {}, literal {}, implied {})",
                        example.id,
                        breakdown.total,
                        breakdown.sarcasm,
                        breakdown.literal,
                        breakdown.implied
                    )));
                }
                accumulator.add(&breakdown);
            }

            if let Some(max_norm) = config.grad_clip {
                clip_gradients(store, max_norm);
            }

            // The PAD embedding row is frozen.
            {
                let grad = store.get_mut(model.embedding_id()).grad_mut();
                grad[PAD_INDEX * input_dim..(PAD_INDEX + 1) * input_dim].fill(0.0);
            }

            adam_step(store, &mut adam, rates)?;
            if config.precision == Precision::Single {
                store.quantize_f32();
            }

            if step.is_multiple_of(config.checkpoint_every as u64) {
                let stop = run_checkpoint(
                    model,
                    store,
                    config,
                    valid_set,
                    step,
                    epoch,
                    &mut accumulator,
                    &mut history,
                    &mut best_snapshot,
                    &mut checkpoints_since_best,
                )?;
                if stop {
                    history.stopped_early = true;
                    break 'epochs;
                }
            }
        }
    }

    // Tiny runs may finish between checkpoints; score what remains.
    if accumulator.examples > 0 || history.records.is_empty() {
        let last_epoch = config.max_epochs.saturating_sub(1);
        run_checkpoint(
            model,
            store,
            config,
            valid_set,
            step,
            last_epoch,
            &mut accumulator,
            &mut history,
            &mut best_snapshot,
            &mut checkpoints_since_best,
        )?;
    }

    history.total_steps = step;
    if let Some(snapshot) = &best_snapshot {
        store.restore(snapshot)?;
    }
    Ok(history)
}

#[allow(clippy::too_many_arguments)]
fn run_checkpoint(
    model: &DCNetModel,
    store: &mut ParameterStore,
    config: &TrainConfig,
    valid_set: &[PreparedExample],
    step: u64,
    epoch: usize,
    accumulator: &mut LossAccumulator,
    history: &mut TrainHistory,
    best_snapshot: &mut Option<Vec<Vec<f64>>>,
    checkpoints_since_best: &mut usize,
) -> Result<bool> {
    let valid = evaluate(model, store, valid_set)?;
    let (train_loss, loss_sarcasm, loss_literal, loss_implied) = accumulator.mean();
    *accumulator = LossAccumulator::new();

    let is_best = valid.macro_f1 > history.best_valid_macro_f1;
    if is_best {
        history.best_valid_macro_f1 = valid.macro_f1;
        history.best_step = step;
        *best_snapshot = Some(store.snapshot());
        *checkpoints_since_best = 0;
    } else {
        *checkpoints_since_best += 1;
    }

    history.records.push(CheckpointRecord {
        step,
        epoch,
        train_loss,
        loss_sarcasm,
        loss_literal,
        loss_implied,
        valid,
        is_best,
    });

    Ok(*checkpoints_since_best >= config.patience)
}

/// Score a frozen model: dropout off, no randomness.
pub fn evaluate(
    model: &DCNetModel,
    store: &ParameterStore,
    examples: &[PreparedExample],
) -> Result<Metrics> {
    if examples.is_empty() {
        return Err(Error::Config(
            "cannot evaluate on an empty example set".into(),
        ));
    }
    // Inference draws nothing from this.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut preds = Vec::with_capacity(examples.len());
    let mut golds = Vec::with_capacity(examples.len());
    for example in examples {
        let (output, _) = model.forward(store, example.channels(), false, &mut rng)?;
        preds.push(model::predict(&output));
        golds.push(example.labels.y_s);
    }
    metrics::compute(&preds, &golds)
}

/// Forward every example and write the projected channel representations
/// as TSV rows (two per example).
pub fn export_representations_file(
    model: &DCNetModel,
    store: &ParameterStore,
    examples: &[PreparedExample],
    path: impl AsRef<std::path::Path>,
) -> Result<usize> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rows = model::export_representations(
        model,
        store,
        examples
            .iter()
            .map(|e| (e.id.as_str(), e.labels.y_s, e.channels())),
        &mut rng,
        &mut writer,
    )?;
    use std::io::Write;
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(rows)
}
