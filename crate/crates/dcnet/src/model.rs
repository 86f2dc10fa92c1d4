//! The dual-channel sarcasm model.
//!
//! Token indices for the full text and the two channels are embedded
//! (with optional embedding dropout at train time), run through three
//! independent Bi-LSTM encoders, and combined:
//!
//! - literal channel: `p_l = softmax(W v_l + b)` over the sentiment words,
//!   and a projected state `v_l' = relu(W [v_l; v_t] + b)`;
//! - implied channel: the mirror image over the remaining words;
//! - analyzer: `p_s = softmax(W a + b)` where `a` is either `[v_l'; v_d']`
//!   (concat) or `v_l' - v_d'` (subtract).
//!
//! Training minimizes `l1*xent(y_s, p_s)` plus, where weak labels exist,
//! `l2*xent(y_l, p_l) + l3*xent(y_d, p_d)`, averaged over the batch.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{EncodeTrace, Encoder, EncoderConfig, Pooling};
use crate::error::{Error, Result};
use crate::labels::WeakLabels;
use crate::numerics::ops;
use crate::numerics::{ParamGroup, ParamId, ParameterStore, Tensor};

/// How the analyzer fuses the two channel representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyzerMode {
    Concat,
    Subtract,
    /// Reserved; construction fails with `Error::Unsupported`.
    Cosine,
}

impl std::str::FromStr for AnalyzerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<AnalyzerMode> {
        match s {
            "concat" => Ok(AnalyzerMode::Concat),
            "subtract" => Ok(AnalyzerMode::Subtract),
            "cosine" => Ok(AnalyzerMode::Cosine),
            other => Err(Error::Config(format!("unknown analyzer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    /// Embedding width.
    pub input_dim: usize,
    /// Per-direction LSTM width H; encoders emit 2H.
    pub hidden_dim: usize,
    /// Channel projection width d'.
    pub proj_dim: usize,
    pub analyzer: AnalyzerMode,
    pub pooling: Pooling,
    /// Embedding dropout rate, applied at train time only.
    pub dropout_embedding: f64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 {
            return Err(Error::Config("vocab must include PAD and UNK".into()));
        }
        if self.input_dim == 0 || self.hidden_dim == 0 || self.proj_dim == 0 {
            return Err(Error::Config("model dimensions must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_embedding) {
            return Err(Error::Config(format!(
                "dropout_embedding must be in [0,1), got {}",
                self.dropout_embedding
            )));
        }
        if self.analyzer == AnalyzerMode::Cosine {
            return Err(Error::Unsupported(
                "cosine analyzer is not implemented".into(),
            ));
        }
        Ok(())
    }
}

/// Loss term weights; the sarcasm weight must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub sarcasm: f64,
    pub literal: f64,
    pub implied: f64,
}

impl LossWeights {
    pub fn new(sarcasm: f64, literal: f64, implied: f64) -> Result<LossWeights> {
        if sarcasm <= 0.0 {
            return Err(Error::Config(format!(
                "sarcasm loss weight must be > 0, got {sarcasm}"
            )));
        }
        if literal < 0.0 || implied < 0.0 {
            return Err(Error::Config("loss weights must be nonnegative".into()));
        }
        Ok(LossWeights {
            sarcasm,
            literal,
            implied,
        })
    }
}

/// Token indices for one example's three encoder inputs.
#[derive(Debug, Clone, Copy)]
pub struct ChannelIndices<'a> {
    pub w_t: &'a [usize],
    pub w_l: &'a [usize],
    pub w_d: &'a [usize],
}

/// Representations and distributions from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub v_l: Vec<f64>,
    pub v_d: Vec<f64>,
    pub v_t: Vec<f64>,
    pub v_l_prime: Vec<f64>,
    pub v_d_prime: Vec<f64>,
    pub p_l: Vec<f64>,
    pub p_d: Vec<f64>,
    pub p_s: Vec<f64>,
}

/// Per-term loss values for one example.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub sarcasm: f64,
    pub literal: f64,
    pub implied: f64,
}

/// Embedded token vectors plus the dropout masks drawn for them.
type EmbeddedChannel = (Vec<Vec<f64>>, Vec<Option<Vec<f64>>>);

struct ChannelTrace {
    indices: Vec<usize>,
    dropout_masks: Vec<Option<Vec<f64>>>,
    encode: EncodeTrace,
}

/// Intermediate state needed by the backward pass.
pub struct ForwardTrace {
    literal: ChannelTrace,
    text: ChannelTrace,
    implied: ChannelTrace,
    pre_literal_proj: Vec<f64>,
    pre_implied_proj: Vec<f64>,
    analyzer_input: Vec<f64>,
}

/// Parameter handles and structure of the dual-channel network. Values
/// live in the [`ParameterStore`] created alongside the model.
#[derive(Debug)]
pub struct DCNetModel {
    config: ModelConfig,
    embedding: ParamId,
    enc_literal: Encoder,
    enc_text: Encoder,
    enc_implied: Encoder,
    literal_cls_w: ParamId,
    literal_cls_b: ParamId,
    implied_cls_w: ParamId,
    implied_cls_b: ParamId,
    literal_proj_w: ParamId,
    literal_proj_b: ParamId,
    implied_proj_w: ParamId,
    implied_proj_b: ParamId,
    analyzer_w: ParamId,
    analyzer_b: ParamId,
}

fn uniform_weight<R: Rng>(shape: Vec<usize>, rng: &mut R) -> Tensor {
    let numel = shape.iter().product();
    let values = (0..numel).map(|_| rng.gen_range(-0.1..0.1)).collect();
    Tensor::new(shape, values).expect("consistent shape")
}

impl DCNetModel {
    /// Build the model and its parameter store.
    ///
    /// `embeddings`, when given, seeds the embedding matrix (shape
    /// `[vocab_size, input_dim]`); otherwise the matrix starts at zero,
    /// which is the right starting point for checkpoint loading. All other
    /// weights draw uniform(-0.1, 0.1) from `seed`; biases start at zero.
    /// The analyzer head is registered last so that concat/subtract
    /// variants share every other initial value for the same seed.
    pub fn init(
        config: ModelConfig,
        embeddings: Option<&Tensor>,
        seed: u64,
    ) -> Result<(DCNetModel, ParameterStore)> {
        config.validate()?;
        let mut store = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let emb_tensor = match embeddings {
            Some(t) => {
                if t.shape() != [config.vocab_size, config.input_dim] {
                    return Err(Error::Shape(format!(
                        "embedding matrix {:?} does not match vocab {} x dim {}",
                        t.shape(),
                        config.vocab_size,
                        config.input_dim
                    )));
                }
                t.clone()
            }
            None => Tensor::zeros(vec![config.vocab_size, config.input_dim]),
        };
        let embedding = store.register("embedding", ParamGroup::Embedding, emb_tensor)?;

        let enc_cfg = EncoderConfig {
            input_dim: config.input_dim,
            hidden_dim: config.hidden_dim,
            pooling: config.pooling,
        };
        let enc_literal = Encoder::new(&mut store, "encoder_literal", enc_cfg, &mut rng)?;
        let enc_text = Encoder::new(&mut store, "encoder_text", enc_cfg, &mut rng)?;
        let enc_implied = Encoder::new(&mut store, "encoder_implied", enc_cfg, &mut rng)?;

        let state_dim = 2 * config.hidden_dim;
        let literal_cls_w = store.register(
            "literal_classifier.weight",
            ParamGroup::Other,
            uniform_weight(vec![2, state_dim], &mut rng),
        )?;
        let literal_cls_b = store.register(
            "literal_classifier.bias",
            ParamGroup::Other,
            Tensor::zeros(vec![2]),
        )?;
        let implied_cls_w = store.register(
            "implied_classifier.weight",
            ParamGroup::Other,
            uniform_weight(vec![2, state_dim], &mut rng),
        )?;
        let implied_cls_b = store.register(
            "implied_classifier.bias",
            ParamGroup::Other,
            Tensor::zeros(vec![2]),
        )?;

        let literal_proj_w = store.register(
            "literal_projection.weight",
            ParamGroup::Other,
            uniform_weight(vec![config.proj_dim, 2 * state_dim], &mut rng),
        )?;
        let literal_proj_b = store.register(
            "literal_projection.bias",
            ParamGroup::Other,
            Tensor::zeros(vec![config.proj_dim]),
        )?;
        let implied_proj_w = store.register(
            "implied_projection.weight",
            ParamGroup::Other,
            uniform_weight(vec![config.proj_dim, 2 * state_dim], &mut rng),
        )?;
        let implied_proj_b = store.register(
            "implied_projection.bias",
            ParamGroup::Other,
            Tensor::zeros(vec![config.proj_dim]),
        )?;

        let analyzer_in = match config.analyzer {
            AnalyzerMode::Concat => 2 * config.proj_dim,
            AnalyzerMode::Subtract => config.proj_dim,
            AnalyzerMode::Cosine => unreachable!("rejected by validate"),
        };
        let analyzer_w = store.register(
            "analyzer.weight",
            ParamGroup::Other,
            uniform_weight(vec![2, analyzer_in], &mut rng),
        )?;
        let analyzer_b =
            store.register("analyzer.bias", ParamGroup::Other, Tensor::zeros(vec![2]))?;

        Ok((
            DCNetModel {
                config,
                embedding,
                enc_literal,
                enc_text,
                enc_implied,
                literal_cls_w,
                literal_cls_b,
                implied_cls_w,
                implied_cls_b,
                literal_proj_w,
                literal_proj_b,
                implied_proj_w,
                implied_proj_b,
                analyzer_w,
                analyzer_b,
            },
            store,
        ))
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn embedding_id(&self) -> ParamId {
        self.embedding
    }

    pub fn encoder_param_names(&self) -> [Vec<String>; 3] {
        [
            self.enc_literal.param_names(),
            self.enc_implied.param_names(),
            self.enc_text.param_names(),
        ]
    }

    fn embed_channel<R: Rng>(
        &self,
        store: &ParameterStore,
        indices: &[usize],
        training: bool,
        rng: &mut R,
    ) -> Result<EmbeddedChannel> {
        let emb = store.get(self.embedding);
        let mut vectors = Vec::with_capacity(indices.len());
        let mut masks = Vec::with_capacity(indices.len());
        for &idx in indices {
            if idx >= self.config.vocab_size {
                return Err(Error::Vocab(format!(
                    "token index {idx} out of range for vocab of {}",
                    self.config.vocab_size
                )));
            }
            let row = emb.row(idx);
            let (dropped, mask) = ops::dropout(row, self.config.dropout_embedding, training, rng)?;
            vectors.push(dropped);
            masks.push(mask);
        }
        Ok((vectors, masks))
    }

    /// Run the network on one example.
    pub fn forward<R: Rng>(
        &self,
        store: &ParameterStore,
        example: ChannelIndices<'_>,
        training: bool,
        rng: &mut R,
    ) -> Result<(ForwardOutput, ForwardTrace)> {
        // Embedding + dropout, channel order fixed: literal, text, implied.
        let (emb_l, masks_l) = self.embed_channel(store, example.w_l, training, rng)?;
        let (emb_t, masks_t) = self.embed_channel(store, example.w_t, training, rng)?;
        let (emb_d, masks_d) = self.embed_channel(store, example.w_d, training, rng)?;

        let (v_l, trace_l) = self.enc_literal.encode(store, &emb_l)?;
        let (v_t, trace_t) = self.enc_text.encode(store, &emb_t)?;
        let (v_d, trace_d) = self.enc_implied.encode(store, &emb_d)?;

        let logits_l = ops::affine(
            &v_l,
            store.get(self.literal_cls_w),
            store.get(self.literal_cls_b),
        )?;
        let p_l = ops::softmax(&logits_l);
        let logits_d = ops::affine(
            &v_d,
            store.get(self.implied_cls_w),
            store.get(self.implied_cls_b),
        )?;
        let p_d = ops::softmax(&logits_d);

        let cat_l = ops::concat(&v_l, &v_t);
        let pre_literal_proj = ops::affine(
            &cat_l,
            store.get(self.literal_proj_w),
            store.get(self.literal_proj_b),
        )?;
        let v_l_prime = ops::relu(&pre_literal_proj);

        let cat_d = ops::concat(&v_d, &v_t);
        let pre_implied_proj = ops::affine(
            &cat_d,
            store.get(self.implied_proj_w),
            store.get(self.implied_proj_b),
        )?;
        let v_d_prime = ops::relu(&pre_implied_proj);

        let analyzer_input = match self.config.analyzer {
            AnalyzerMode::Concat => ops::concat(&v_l_prime, &v_d_prime),
            AnalyzerMode::Subtract => v_l_prime
                .iter()
                .zip(&v_d_prime)
                .map(|(a, b)| a - b)
                .collect(),
            AnalyzerMode::Cosine => {
                return Err(Error::Unsupported(
                    "cosine analyzer is not implemented".into(),
                ))
            }
        };
        let logits_s = ops::affine(
            &analyzer_input,
            store.get(self.analyzer_w),
            store.get(self.analyzer_b),
        )?;
        let p_s = ops::softmax(&logits_s);

        Ok((
            ForwardOutput {
                v_l,
                v_d,
                v_t,
                v_l_prime,
                v_d_prime,
                p_l,
                p_d,
                p_s,
            },
            ForwardTrace {
                literal: ChannelTrace {
                    indices: example.w_l.to_vec(),
                    dropout_masks: masks_l,
                    encode: trace_l,
                },
                text: ChannelTrace {
                    indices: example.w_t.to_vec(),
                    dropout_masks: masks_t,
                    encode: trace_t,
                },
                implied: ChannelTrace {
                    indices: example.w_d.to_vec(),
                    dropout_masks: masks_d,
                    encode: trace_d,
                },
                pre_literal_proj,
                pre_implied_proj,
                analyzer_input,
            },
        ))
    }

    /// Accumulate gradients for one example, scaled by `scale` (use the
    /// reciprocal batch size to realize a mean-reduced batch loss).
    pub fn backward(
        &self,
        store: &mut ParameterStore,
        output: &ForwardOutput,
        trace: &ForwardTrace,
        labels: &WeakLabels,
        weights: &LossWeights,
        scale: f64,
    ) -> Result<()> {
        let state_dim = 2 * self.config.hidden_dim;
        let proj_dim = self.config.proj_dim;

        // Gradients w.r.t. the three encoder outputs accumulate here.
        let mut d_v_l = vec![0.0; state_dim];
        let mut d_v_t = vec![0.0; state_dim];
        let mut d_v_d = vec![0.0; state_dim];

        // Sarcasm head.
        let mut d_logits_s = vec![0.0; 2];
        ops::softmax_xent_backward(
            &output.p_s,
            labels.sarcasm_class(),
            scale * weights.sarcasm,
            &mut d_logits_s,
        );
        let mut d_analyzer_in = vec![0.0; trace.analyzer_input.len()];
        {
            let w_values = store.get(self.analyzer_w).values().to_vec();
            let (_, dw) = store.get_mut(self.analyzer_w).values_and_grad_mut();
            let mut db = vec![0.0; 2];
            ops::affine_backward(
                &trace.analyzer_input,
                &w_values,
                &d_logits_s,
                dw,
                &mut db,
                &mut d_analyzer_in,
            );
            let b_grad = store.get_mut(self.analyzer_b).grad_mut();
            for (g, d) in b_grad.iter_mut().zip(&db) {
                *g += d;
            }
        }

        let mut d_v_l_prime = vec![0.0; proj_dim];
        let mut d_v_d_prime = vec![0.0; proj_dim];
        match self.config.analyzer {
            AnalyzerMode::Concat => {
                ops::concat_backward(&d_analyzer_in, &mut d_v_l_prime, &mut d_v_d_prime);
            }
            AnalyzerMode::Subtract => {
                for i in 0..proj_dim {
                    d_v_l_prime[i] += d_analyzer_in[i];
                    d_v_d_prime[i] -= d_analyzer_in[i];
                }
            }
            AnalyzerMode::Cosine => {
                return Err(Error::Unsupported(
                    "cosine analyzer is not implemented".into(),
                ))
            }
        }

        // Channel projections: relu then affine back onto [v_channel; v_t].
        for (d_prime, pre, w_id, b_id, d_channel) in [
            (
                &d_v_l_prime,
                &trace.pre_literal_proj,
                self.literal_proj_w,
                self.literal_proj_b,
                &mut d_v_l,
            ),
            (
                &d_v_d_prime,
                &trace.pre_implied_proj,
                self.implied_proj_w,
                self.implied_proj_b,
                &mut d_v_d,
            ),
        ] {
            let mut d_pre = vec![0.0; proj_dim];
            ops::relu_backward(pre, d_prime, &mut d_pre);

            let v_channel = if w_id == self.literal_proj_w {
                &output.v_l
            } else {
                &output.v_d
            };
            let cat = ops::concat(v_channel, &output.v_t);
            let mut d_cat = vec![0.0; 2 * state_dim];
            {
                let w_values = store.get(w_id).values().to_vec();
                let (_, dw) = store.get_mut(w_id).values_and_grad_mut();
                let mut db = vec![0.0; proj_dim];
                ops::affine_backward(&cat, &w_values, &d_pre, dw, &mut db, &mut d_cat);
                let b_grad = store.get_mut(b_id).grad_mut();
                for (g, d) in b_grad.iter_mut().zip(&db) {
                    *g += d;
                }
            }
            for k in 0..state_dim {
                d_channel[k] += d_cat[k];
                d_v_t[k] += d_cat[state_dim + k];
            }
        }

        // Auxiliary sentiment heads, active only when weak labels exist.
        if labels.aux_mask {
            let aux = [
                (
                    labels.y_l,
                    weights.literal,
                    &output.p_l,
                    &output.v_l,
                    self.literal_cls_w,
                    self.literal_cls_b,
                    0usize,
                ),
                (
                    labels.y_d,
                    weights.implied,
                    &output.p_d,
                    &output.v_d,
                    self.implied_cls_w,
                    self.implied_cls_b,
                    1usize,
                ),
            ];
            for (label, weight, probs, v_channel, w_id, b_id, which) in aux {
                let effective = scale * weight;
                if effective == 0.0 {
                    continue;
                }
                let gold = label
                    .ok_or_else(|| Error::Config("aux_mask set without labels".into()))?
                    .class_index();
                let mut d_logits = vec![0.0; 2];
                ops::softmax_xent_backward(probs, gold, effective, &mut d_logits);

                let mut d_v = vec![0.0; state_dim];
                {
                    let w_values = store.get(w_id).values().to_vec();
                    let (_, dw) = store.get_mut(w_id).values_and_grad_mut();
                    let mut db = vec![0.0; 2];
                    ops::affine_backward(v_channel, &w_values, &d_logits, dw, &mut db, &mut d_v);
                    let b_grad = store.get_mut(b_id).grad_mut();
                    for (g, d) in b_grad.iter_mut().zip(&db) {
                        *g += d;
                    }
                }
                let target = if which == 0 { &mut d_v_l } else { &mut d_v_d };
                for k in 0..state_dim {
                    target[k] += d_v[k];
                }
            }
        }

        // Encoders, then dropout, then scatter into the embedding matrix.
        for (encoder, channel, d_v) in [
            (&self.enc_literal, &trace.literal, &d_v_l),
            (&self.enc_text, &trace.text, &d_v_t),
            (&self.enc_implied, &trace.implied, &d_v_d),
        ] {
            let n = channel.indices.len();
            let mut d_embedded: Vec<Vec<f64>> = vec![vec![0.0; self.config.input_dim]; n];
            encoder.encode_backward(store, &channel.encode, d_v, &mut d_embedded);

            let emb_grad = store.get_mut(self.embedding).grad_mut();
            for (pos, &idx) in channel.indices.iter().enumerate() {
                let mut d_row = vec![0.0; self.config.input_dim];
                ops::dropout_backward(
                    channel.dropout_masks[pos].as_deref(),
                    &d_embedded[pos],
                    &mut d_row,
                );
                let row =
                    &mut emb_grad[idx * self.config.input_dim..(idx + 1) * self.config.input_dim];
                for (g, d) in row.iter_mut().zip(&d_row) {
                    *g += d;
                }
            }
        }

        Ok(())
    }
}

/// Cross-entropy of a probability vector against a gold class.
fn xent(probs: &[f64], gold: usize) -> f64 {
    -probs[gold].max(f64::MIN_POSITIVE).ln()
}

/// The three-part training loss for one example.
pub fn loss(output: &ForwardOutput, labels: &WeakLabels, weights: &LossWeights) -> f64 {
    loss_breakdown(output, labels, weights).total
}

/// As [`loss`], with the per-term values exposed.
pub fn loss_breakdown(
    output: &ForwardOutput,
    labels: &WeakLabels,
    weights: &LossWeights,
) -> LossBreakdown {
    let sarcasm = xent(&output.p_s, labels.sarcasm_class());
    let (literal, implied) = if labels.aux_mask {
        let y_l = labels.y_l.expect("aux_mask implies labels").class_index();
        let y_d = labels.y_d.expect("aux_mask implies labels").class_index();
        (xent(&output.p_l, y_l), xent(&output.p_d, y_d))
    } else {
        (0.0, 0.0)
    };
    let mask = if labels.aux_mask { 1.0 } else { 0.0 };
    LossBreakdown {
        total: weights.sarcasm * sarcasm
            + mask * (weights.literal * literal + weights.implied * implied),
        sarcasm,
        literal,
        implied,
    }
}

/// Sarcasm decision: argmax of `p_s`, ties resolved to class 0.
pub fn predict(output: &ForwardOutput) -> u8 {
    u8::from(output.p_s[1] > output.p_s[0])
}

/// Run loss and backward for one example; the usual training-step body.
#[allow(clippy::too_many_arguments)]
pub fn loss_and_grads<R: Rng>(
    model: &DCNetModel,
    store: &mut ParameterStore,
    example: ChannelIndices<'_>,
    labels: &WeakLabels,
    weights: &LossWeights,
    scale: f64,
    training: bool,
    rng: &mut R,
) -> Result<(ForwardOutput, LossBreakdown)> {
    let (output, trace) = model.forward(store, example, training, rng)?;
    let breakdown = loss_breakdown(&output, labels, weights);
    model.backward(store, &output, &trace, labels, weights, scale)?;
    Ok((output, breakdown))
}

/// Write one literal and one implied representation row per example:
/// `id <TAB> y_s <TAB> channel <TAB> component...`, no header.
pub fn export_representations<'a, I, R>(
    model: &DCNetModel,
    store: &ParameterStore,
    examples: I,
    rng: &mut R,
    out: &mut dyn Write,
) -> Result<usize>
where
    I: IntoIterator<Item = (&'a str, u8, ChannelIndices<'a>)>,
    R: Rng,
{
    let mut rows = 0;
    for (id, y_s, channels) in examples {
        let (output, _) = model.forward(store, channels, false, rng)?;
        for (channel, values) in [
            ("literal", &output.v_l_prime),
            ("implied", &output.v_d_prime),
        ] {
            let mut line = format!("{id}\t{y_s}\t{channel}");
            for v in values {
                line.push('\t');
                line.push_str(&format!("{v:.8e}"));
            }
            line.push('\n');
            out.write_all(line.as_bytes())
                .map_err(|e| Error::io(Path::new("<writer>"), e))?;
            rows += 1;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::weak_labels;

    fn small_config(analyzer: AnalyzerMode) -> ModelConfig {
        ModelConfig {
            vocab_size: 8,
            input_dim: 6,
            hidden_dim: 4,
            proj_dim: 8,
            analyzer,
            pooling: Pooling::FinalState,
            dropout_embedding: 0.0,
        }
    }

    fn random_embeddings(vocab: usize, dim: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..vocab * dim).map(|_| rng.gen_range(-0.1..0.1)).collect();
        Tensor::new(vec![vocab, dim], values).unwrap()
    }

    fn example() -> ChannelIndices<'static> {
        ChannelIndices {
            w_t: &[2, 3, 4, 5, 6],
            w_l: &[3, 5],
            w_d: &[2, 4, 6],
        }
    }

    #[test]
    fn zero_weights_give_uniform_distributions() {
        let cfg = small_config(AnalyzerMode::Concat);
        let emb = random_embeddings(8, 6, 1);
        let (model, mut store) = DCNetModel::init(cfg, Some(&emb), 7).unwrap();
        for id in store.ids().collect::<Vec<_>>() {
            store.get_mut(id).values_mut().fill(0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, _) = model.forward(&store, example(), false, &mut rng).unwrap();
        for p in [&out.p_l, &out.p_d, &out.p_s] {
            assert!((p[0] - 0.5).abs() < 1e-12);
            assert!((p[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn tied_encoders_on_fallback_input_agree() {
        let cfg = small_config(AnalyzerMode::Concat);
        let emb = random_embeddings(8, 6, 2);
        let (model, mut store) = DCNetModel::init(cfg, Some(&emb), 9).unwrap();
        // copy literal encoder weights onto the implied encoder
        for p in ["w_input", "w_hidden", "bias"] {
            for dir in ["forward", "backward"] {
                let src = store.id(&format!("encoder_literal.{dir}.{p}")).unwrap();
                let dst = store.id(&format!("encoder_implied.{dir}.{p}")).unwrap();
                let values = store.get(src).values().to_vec();
                store.get_mut(dst).values_mut().copy_from_slice(&values);
            }
        }
        let tokens = [2usize, 3, 4];
        let fallback = ChannelIndices {
            w_t: &tokens,
            w_l: &tokens,
            w_d: &tokens,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, _) = model.forward(&store, fallback, false, &mut rng).unwrap();
        for (a, b) in out.v_l.iter().zip(&out.v_d) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_audit_at_reference_dimensions() {
        let cfg = ModelConfig {
            vocab_size: 10,
            input_dim: 300,
            hidden_dim: 150,
            proj_dim: 300,
            analyzer: AnalyzerMode::Concat,
            pooling: Pooling::FinalState,
            dropout_embedding: 0.0,
        };
        let emb = random_embeddings(10, 300, 3);
        let (model, store) = DCNetModel::init(cfg, Some(&emb), 1).unwrap();
        let ex = ChannelIndices {
            w_t: &[2, 3, 4, 5, 6],
            w_l: &[3, 5],
            w_d: &[2, 4, 6],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, _) = model.forward(&store, ex, false, &mut rng).unwrap();
        assert_eq!(out.v_l.len(), 300);
        assert_eq!(out.v_t.len(), 300);
        assert_eq!(out.v_d.len(), 300);
        assert_eq!(out.v_l_prime.len(), 300);
        assert_eq!(out.v_d_prime.len(), 300);
        assert_eq!(
            store
                .get(store.id("literal_projection.weight").unwrap())
                .shape(),
            &[300, 600]
        );
        assert_eq!(
            store.get(store.id("analyzer.weight").unwrap()).shape(),
            &[2, 600]
        );
    }

    #[test]
    fn outputs_are_probability_distributions() {
        let cfg = small_config(AnalyzerMode::Concat);
        let emb = random_embeddings(8, 6, 4);
        let (model, store) = DCNetModel::init(cfg, Some(&emb), 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, _) = model.forward(&store, example(), false, &mut rng).unwrap();
        for p in [&out.p_l, &out.p_d, &out.p_s] {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn loss_reduces_to_sarcasm_term() {
        let out = ForwardOutput {
            v_l: vec![],
            v_d: vec![],
            v_t: vec![],
            v_l_prime: vec![],
            v_d_prime: vec![],
            p_l: vec![0.3, 0.7],
            p_d: vec![0.6, 0.4],
            p_s: vec![0.2, 0.8],
        };
        let labels = weak_labels((2, 0), 1);
        let only_sarcasm = LossWeights::new(1.0, 0.0, 0.0).unwrap();
        let expected = -(0.8f64).ln();
        assert!((loss(&out, &labels, &only_sarcasm) - expected).abs() < 1e-12);

        // masked-out labels give the identical value even with aux weights on
        let masked = weak_labels((1, 1), 1);
        let full = LossWeights::new(1.0, 1.0, 1.0).unwrap();
        assert!((loss(&out, &masked, &full) - expected).abs() < 1e-12);
    }

    #[test]
    fn uniform_distributions_cost_three_ln2() {
        let out = ForwardOutput {
            v_l: vec![],
            v_d: vec![],
            v_t: vec![],
            v_l_prime: vec![],
            v_d_prime: vec![],
            p_l: vec![0.5, 0.5],
            p_d: vec![0.5, 0.5],
            p_s: vec![0.5, 0.5],
        };
        let labels = weak_labels((3, 1), 1);
        let weights = LossWeights::new(1.0, 1.0, 1.0).unwrap();
        let expected = 3.0 * std::f64::consts::LN_2;
        assert!((loss(&out, &labels, &weights) - expected).abs() < 1e-12);
    }

    #[test]
    fn predict_argmax_with_tie_to_zero() {
        let mut out = ForwardOutput {
            v_l: vec![],
            v_d: vec![],
            v_t: vec![],
            v_l_prime: vec![],
            v_d_prime: vec![],
            p_l: vec![0.5, 0.5],
            p_d: vec![0.5, 0.5],
            p_s: vec![0.9, 0.1],
        };
        assert_eq!(predict(&out), 0);
        out.p_s = vec![0.2, 0.8];
        assert_eq!(predict(&out), 1);
        out.p_s = vec![0.5, 0.5];
        assert_eq!(predict(&out), 0);
    }

    #[test]
    fn lambda_one_must_be_positive() {
        assert!(LossWeights::new(0.0, 1.0, 1.0).is_err());
        assert!(LossWeights::new(1.0, -0.1, 0.0).is_err());
        assert!(LossWeights::new(0.5, 0.0, 0.3).is_ok());
    }

    #[test]
    fn cosine_analyzer_is_rejected() {
        let cfg = small_config(AnalyzerMode::Cosine);
        assert!(matches!(
            DCNetModel::init(cfg, None, 0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn out_of_vocab_index_is_reported() {
        let cfg = small_config(AnalyzerMode::Concat);
        let emb = random_embeddings(8, 6, 5);
        let (model, store) = DCNetModel::init(cfg, Some(&emb), 1).unwrap();
        let bad = ChannelIndices {
            w_t: &[99],
            w_l: &[99],
            w_d: &[99],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            model.forward(&store, bad, false, &mut rng),
            Err(Error::Vocab(_))
        ));
    }

    #[test]
    fn analyzer_modes_share_everything_but_the_head() {
        let emb = random_embeddings(8, 6, 6);
        let (model_c, store_c) =
            DCNetModel::init(small_config(AnalyzerMode::Concat), Some(&emb), 5).unwrap();
        let (model_s, store_s) =
            DCNetModel::init(small_config(AnalyzerMode::Subtract), Some(&emb), 5).unwrap();

        for (name, _, tensor) in store_c.iter() {
            if name.starts_with("analyzer.") {
                continue;
            }
            let other = store_s.get(store_s.id(name).unwrap());
            assert_eq!(
                tensor.values(),
                other.values(),
                "{name} differs between modes"
            );
        }
        assert_eq!(
            store_c.get(store_c.id("analyzer.weight").unwrap()).shape(),
            &[2, 16]
        );
        assert_eq!(
            store_s.get(store_s.id("analyzer.weight").unwrap()).shape(),
            &[2, 8]
        );

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out_c, _) = model_c
            .forward(&store_c, example(), false, &mut rng)
            .unwrap();
        let (out_s, _) = model_s
            .forward(&store_s, example(), false, &mut rng)
            .unwrap();
        assert_eq!(out_c.v_l_prime, out_s.v_l_prime);
        assert_eq!(out_c.v_d_prime, out_s.v_d_prime);
        assert_eq!(out_c.p_l, out_s.p_l);
        assert_eq!(out_c.p_d, out_s.p_d);
    }

    #[test]
    fn export_writes_two_rows_per_example() {
        let cfg = small_config(AnalyzerMode::Concat);
        let emb = random_embeddings(8, 6, 8);
        let (model, store) = DCNetModel::init(cfg, Some(&emb), 3).unwrap();
        let w_t = [2usize, 3, 4];
        let items = [
            (
                "a",
                1u8,
                ChannelIndices {
                    w_t: &w_t,
                    w_l: &w_t[..1],
                    w_d: &w_t[1..],
                },
            ),
            (
                "b",
                0u8,
                ChannelIndices {
                    w_t: &w_t,
                    w_l: &w_t,
                    w_d: &w_t,
                },
            ),
        ];
        let mut buf = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rows = export_representations(
            &model,
            &store,
            items.iter().map(|(i, y, c)| (*i, *y, *c)),
            &mut rng,
            &mut buf,
        )
        .unwrap();
        assert_eq!(rows, 4);
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        for line in &lines {
            let fields: Vec<&str> = line.split('\t').collect();
            assert_eq!(fields.len(), 3 + 8); // id, y_s, channel, d' components
        }
        assert!(lines[0].starts_with("a\t1\tliteral\t"));
        assert!(lines[1].starts_with("a\t1\timplied\t"));
    }
}
