//! Bi-LSTM sequence encoder.
//!
//! One forward LSTM reads the sequence left to right, one backward LSTM
//! reads it right to left, and the sequence representation is either the
//! concatenation of the two final hidden states (default) or the mean of
//! the per-position concatenated states. A zero-length input encodes to
//! the zero vector. Channel encoders are created with distinct name
//! prefixes and therefore share no parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{lstm_cell, lstm_cell_backward, LstmCellTrace, LstmParams, ParameterStore};

/// How the per-position states collapse into one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    FinalState,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub pooling: Pooling,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("encoder dimensions must be >= 1".into()));
        }
        Ok(())
    }
}

/// A Bi-LSTM encoder owning its parameter subset under a unique prefix.
#[derive(Debug, Clone)]
pub struct Encoder {
    config: EncoderConfig,
    prefix: String,
    forward: LstmParams,
    backward: LstmParams,
}

/// Saved forward state for one encoded sequence.
pub struct EncodeTrace {
    fwd_steps: Vec<LstmCellTrace>,
    bwd_steps: Vec<LstmCellTrace>,
    fwd_hidden: Vec<Vec<f64>>,
    bwd_hidden: Vec<Vec<f64>>,
    len: usize,
}

impl Encoder {
    pub fn new<R: Rng>(
        store: &mut ParameterStore,
        prefix: &str,
        config: EncoderConfig,
        rng: &mut R,
    ) -> Result<Encoder> {
        config.validate()?;
        let forward = LstmParams::register(
            store,
            &format!("{prefix}.forward"),
            config.input_dim,
            config.hidden_dim,
            rng,
        )?;
        let backward = LstmParams::register(
            store,
            &format!("{prefix}.backward"),
            config.input_dim,
            config.hidden_dim,
            rng,
        )?;
        Ok(Encoder {
            config,
            prefix: prefix.to_string(),
            forward,
            backward,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    /// Output width: both directions concatenated.
    pub fn output_dim(&self) -> usize {
        2 * self.config.hidden_dim
    }

    pub fn param_names(&self) -> Vec<String> {
        ["forward", "backward"]
            .iter()
            .flat_map(|dir| {
                ["w_input", "w_hidden", "bias"]
                    .iter()
                    .map(move |p| format!("{}.{dir}.{p}", self.prefix))
            })
            .collect()
    }

    /// Encode a sequence of embedded token vectors.
    pub fn encode(
        &self,
        store: &ParameterStore,
        inputs: &[Vec<f64>],
    ) -> Result<(Vec<f64>, EncodeTrace)> {
        let h_dim = self.config.hidden_dim;
        let n = inputs.len();
        for x in inputs {
            if x.len() != self.config.input_dim {
                return Err(Error::Shape(format!(
                    "encoder `{}` expects width {}, got {}",
                    self.prefix,
                    self.config.input_dim,
                    x.len()
                )));
            }
        }

        if n == 0 {
            return Ok((
                vec![0.0; 2 * h_dim],
                EncodeTrace {
                    fwd_steps: Vec::new(),
                    bwd_steps: Vec::new(),
                    fwd_hidden: Vec::new(),
                    bwd_hidden: Vec::new(),
                    len: 0,
                },
            ));
        }

        let mut fwd_steps = Vec::with_capacity(n);
        let mut fwd_hidden = Vec::with_capacity(n);
        let mut h = vec![0.0; h_dim];
        let mut c = vec![0.0; h_dim];
        for x in inputs {
            let (h_new, c_new, trace) = lstm_cell(store, &self.forward, x, &h, &c)?;
            fwd_steps.push(trace);
            fwd_hidden.push(h_new.clone());
            h = h_new;
            c = c_new;
        }

        // Backward direction processes the reversed sequence; bwd_hidden[k]
        // is its state after consuming inputs[n-1-k].
        let mut bwd_steps = Vec::with_capacity(n);
        let mut bwd_hidden = Vec::with_capacity(n);
        let mut h = vec![0.0; h_dim];
        let mut c = vec![0.0; h_dim];
        for x in inputs.iter().rev() {
            let (h_new, c_new, trace) = lstm_cell(store, &self.backward, x, &h, &c)?;
            bwd_steps.push(trace);
            bwd_hidden.push(h_new.clone());
            h = h_new;
            c = c_new;
        }

        let output = match self.config.pooling {
            Pooling::FinalState => {
                let mut v = fwd_hidden[n - 1].clone();
                v.extend_from_slice(&bwd_hidden[n - 1]);
                v
            }
            Pooling::Mean => {
                let mut v = vec![0.0; 2 * h_dim];
                for t in 0..n {
                    for k in 0..h_dim {
                        v[k] += fwd_hidden[t][k];
                        // state aligned with position t comes from reverse step n-1-t
                        v[h_dim + k] += bwd_hidden[n - 1 - t][k];
                    }
                }
                for value in &mut v {
                    *value /= n as f64;
                }
                v
            }
        };

        Ok((
            output,
            EncodeTrace {
                fwd_steps,
                bwd_steps,
                fwd_hidden,
                bwd_hidden,
                len: n,
            },
        ))
    }

    /// Backpropagate `d_output` (gradient w.r.t. the encoded vector)
    /// through both directions, accumulating parameter gradients into the
    /// store and input gradients into `d_inputs`.
    pub fn encode_backward(
        &self,
        store: &mut ParameterStore,
        trace: &EncodeTrace,
        d_output: &[f64],
        d_inputs: &mut [Vec<f64>],
    ) {
        let h_dim = self.config.hidden_dim;
        let n = trace.len;
        debug_assert_eq!(d_output.len(), 2 * h_dim);
        debug_assert_eq!(d_inputs.len(), n);
        if n == 0 {
            return;
        }

        // External gradient injected into each step's hidden state.
        let inject_fwd = |t: usize, buf: &mut [f64]| match self.config.pooling {
            Pooling::FinalState => {
                if t == n - 1 {
                    for k in 0..h_dim {
                        buf[k] += d_output[k];
                    }
                }
            }
            Pooling::Mean => {
                for k in 0..h_dim {
                    buf[k] += d_output[k] / n as f64;
                }
            }
        };
        let inject_bwd = |step: usize, buf: &mut [f64]| match self.config.pooling {
            Pooling::FinalState => {
                if step == n - 1 {
                    for k in 0..h_dim {
                        buf[k] += d_output[h_dim + k];
                    }
                }
            }
            Pooling::Mean => {
                for k in 0..h_dim {
                    buf[k] += d_output[h_dim + k] / n as f64;
                }
            }
        };

        // Forward chain, iterated from the last step back.
        let mut dh_next = vec![0.0; h_dim];
        let mut dc_next = vec![0.0; h_dim];
        for t in (0..n).rev() {
            let mut dh = dh_next;
            inject_fwd(t, &mut dh);
            let dc = dc_next;
            let mut dh_prev = vec![0.0; h_dim];
            let mut dc_prev = vec![0.0; h_dim];
            lstm_cell_backward(
                store,
                &self.forward,
                &trace.fwd_steps[t],
                &dh,
                &dc,
                &mut d_inputs[t],
                &mut dh_prev,
                &mut dc_prev,
            );
            dh_next = dh_prev;
            dc_next = dc_prev;
        }

        // Backward chain: step k consumed inputs[n-1-k].
        let mut dh_next = vec![0.0; h_dim];
        let mut dc_next = vec![0.0; h_dim];
        for step in (0..n).rev() {
            let mut dh = dh_next;
            inject_bwd(step, &mut dh);
            let dc = dc_next;
            let mut dh_prev = vec![0.0; h_dim];
            let mut dc_prev = vec![0.0; h_dim];
            lstm_cell_backward(
                store,
                &self.backward,
                &trace.bwd_steps[step],
                &dh,
                &dc,
                &mut d_inputs[n - 1 - step],
                &mut dh_prev,
                &mut dc_prev,
            );
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
    }

    /// Hidden states by position, `[h_fwd[t]; h_bwd aligned to t]`.
    pub fn states_by_position(&self, trace: &EncodeTrace) -> Vec<Vec<f64>> {
        let n = trace.len;
        (0..n)
            .map(|t| {
                let mut v = trace.fwd_hidden[t].clone();
                v.extend_from_slice(&trace.bwd_hidden[n - 1 - t]);
                v
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn make_encoder(
        h: usize,
        input: usize,
        pooling: Pooling,
        seed: u64,
    ) -> (ParameterStore, Encoder) {
        let mut store = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let enc = Encoder::new(
            &mut store,
            "enc",
            EncoderConfig {
                input_dim: input,
                hidden_dim: h,
                pooling,
            },
            &mut rng,
        )
        .unwrap();
        (store, enc)
    }

    #[test]
    fn empty_sequence_encodes_to_zero() {
        let (store, enc) = make_encoder(5, 3, Pooling::FinalState, 0);
        let (v, _) = enc.encode(&store, &[]).unwrap();
        assert_eq!(v, vec![0.0; 10]);
    }

    #[test]
    fn zero_weights_encode_to_zero() {
        let (mut store, enc) = make_encoder(4, 3, Pooling::FinalState, 0);
        for id in store.ids().collect::<Vec<_>>() {
            store.get_mut(id).values_mut().fill(0.0);
        }
        let inputs = vec![vec![1.0, -1.0, 0.5], vec![0.2, 0.3, 0.4]];
        let (v, _) = enc.encode(&store, &inputs).unwrap();
        assert_eq!(v, vec![0.0; 8]);
    }

    #[test]
    fn output_width_is_2h_for_any_length() {
        let (store, enc) = make_encoder(3, 2, Pooling::Mean, 1);
        for len in 0..5 {
            let inputs: Vec<Vec<f64>> = (0..len).map(|i| vec![i as f64, 1.0]).collect();
            let (v, _) = enc.encode(&store, &inputs).unwrap();
            assert_eq!(v.len(), 6);
        }
    }

    #[test]
    fn width_mismatch_is_error() {
        let (store, enc) = make_encoder(3, 2, Pooling::FinalState, 1);
        assert!(enc.encode(&store, &[vec![1.0, 2.0, 3.0]]).is_err());
    }

    #[test]
    fn prefixes_are_disjoint() {
        let mut store = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = EncoderConfig {
            input_dim: 2,
            hidden_dim: 2,
            pooling: Pooling::FinalState,
        };
        let a = Encoder::new(&mut store, "literal", cfg, &mut rng).unwrap();
        let b = Encoder::new(&mut store, "implied", cfg, &mut rng).unwrap();
        let c = Encoder::new(&mut store, "text", cfg, &mut rng).unwrap();
        let names = |e: &Encoder| {
            e.param_names()
                .into_iter()
                .collect::<std::collections::HashSet<_>>()
        };
        let (na, nb, nc) = (names(&a), names(&b), names(&c));
        assert!(na.is_disjoint(&nb) && na.is_disjoint(&nc) && nb.is_disjoint(&nc));
        // and every advertised name is actually registered
        for n in na.iter().chain(&nb).chain(&nc) {
            assert!(store.id(n).is_some(), "missing {n}");
        }
    }

    #[test]
    fn encode_gradients_match_finite_differences_for_both_poolings() {
        use crate::numerics::{grad_check, ParamGroup, Tensor};

        for pooling in [Pooling::FinalState, Pooling::Mean] {
            let mut store = ParameterStore::new();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let enc = Encoder::new(
                &mut store,
                "enc",
                EncoderConfig {
                    input_dim: 2,
                    hidden_dim: 3,
                    pooling,
                },
                &mut rng,
            )
            .unwrap();
            // inputs as parameters so their gradients are checked too
            use rand::Rng;
            let mut input_ids = Vec::new();
            for t in 0..4 {
                let x = Tensor::new(vec![2], (0..2).map(|_| rng.gen_range(-0.6..0.6)).collect())
                    .unwrap();
                input_ids.push(
                    store
                        .register(&format!("x{t}"), ParamGroup::Other, x)
                        .unwrap(),
                );
            }
            let head: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();

            let head2 = head.clone();
            let ids = input_ids.clone();
            let enc2 = enc.clone();
            let loss = move |store: &mut ParameterStore| {
                store.ensure_grads();
                store.zero_grads();
                let xs: Vec<Vec<f64>> = ids
                    .iter()
                    .map(|&id| store.get(id).values().to_vec())
                    .collect();
                let (v, trace) = enc2.encode(store, &xs)?;
                let value: f64 = v.iter().zip(&head2).map(|(a, b)| a * b).sum();
                let mut d_inputs = vec![vec![0.0; 2]; xs.len()];
                enc2.encode_backward(store, &trace, &head2, &mut d_inputs);
                for (id, dx) in ids.iter().zip(&d_inputs) {
                    for (g, d) in store.get_mut(*id).grad_mut().iter_mut().zip(dx) {
                        *g += d;
                    }
                }
                Ok(value)
            };
            let report = grad_check(&mut store, loss, 1e-5, 12, 5).unwrap();
            assert!(
                report.max_rel_err < 1e-6,
                "{pooling:?}: max rel err {} at {}[{}]",
                report.max_rel_err,
                report.worst_param,
                report.worst_index
            );
        }
    }

    /// Swapping direction weights while reversing the input swaps the two
    /// halves of the final-state output.
    #[test]
    fn reversal_swaps_direction_roles() {
        let (store_a, enc_a) = make_encoder(3, 2, Pooling::FinalState, 7);
        // Build a second encoder whose forward params equal enc_a's backward
        // params and vice versa.
        let mut store_b = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let enc_b = Encoder::new(
            &mut store_b,
            "enc",
            EncoderConfig {
                input_dim: 2,
                hidden_dim: 3,
                pooling: Pooling::FinalState,
            },
            &mut rng,
        )
        .unwrap();
        for (dir_src, dir_dst) in [("forward", "backward"), ("backward", "forward")] {
            for p in ["w_input", "w_hidden", "bias"] {
                let src = store_a.id(&format!("enc.{dir_src}.{p}")).unwrap();
                let dst = store_b.id(&format!("enc.{dir_dst}.{p}")).unwrap();
                let values = store_a.get(src).values().to_vec();
                store_b.get_mut(dst).values_mut().copy_from_slice(&values);
            }
        }

        let inputs = vec![vec![0.5, -0.3], vec![0.1, 0.9], vec![-0.7, 0.2]];
        let reversed: Vec<Vec<f64>> = inputs.iter().rev().cloned().collect();
        let (va, _) = enc_a.encode(&store_a, &inputs).unwrap();
        let (vb, _) = enc_b.encode(&store_b, &reversed).unwrap();

        let h = 3;
        for k in 0..h {
            assert!((va[k] - vb[h + k]).abs() < 1e-12);
            assert!((va[h + k] - vb[k]).abs() < 1e-12);
        }
    }
}
