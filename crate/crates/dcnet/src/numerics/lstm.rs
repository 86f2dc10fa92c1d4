//! Single LSTM cell step with backpropagation.
//!
//! Standard gated recurrence with input/forget/output gates and a tanh
//! candidate, one bias vector, and gates stacked in i, f, g, o order:
//!
//! ```text
//! pre = W_x x_t + W_h h_{t-1} + b          pre in R^{4H}
//! i = sigmoid(pre[0..H])    f = sigmoid(pre[H..2H])
//! g = tanh(pre[2H..3H])     o = sigmoid(pre[3H..4H])
//! c_t = f * c_{t-1} + i * g
//! h_t = o * tanh(c_t)
//! ```

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::tensor::{ParamGroup, ParamId, ParameterStore, Tensor};

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Handles to one direction's recurrence parameters.
#[derive(Debug, Clone)]
pub struct LstmParams {
    pub w_input: ParamId,  // [4H x input_dim]
    pub w_hidden: ParamId, // [4H x H]
    pub bias: ParamId,     // [4H]
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl LstmParams {
    /// Register freshly initialized parameters under `prefix`: weights
    /// uniform in (-0.1, 0.1), bias zero.
    pub fn register<R: Rng>(
        store: &mut ParameterStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<LstmParams> {
        let gates = 4 * hidden_dim;
        let w_input = store.register(
            &format!("{prefix}.w_input"),
            ParamGroup::Other,
            uniform_tensor(vec![gates, input_dim], rng),
        )?;
        let w_hidden = store.register(
            &format!("{prefix}.w_hidden"),
            ParamGroup::Other,
            uniform_tensor(vec![gates, hidden_dim], rng),
        )?;
        let bias = store.register(
            &format!("{prefix}.bias"),
            ParamGroup::Other,
            Tensor::zeros(vec![gates]),
        )?;
        Ok(LstmParams {
            w_input,
            w_hidden,
            bias,
            input_dim,
            hidden_dim,
        })
    }
}

fn uniform_tensor<R: Rng>(shape: Vec<usize>, rng: &mut R) -> Tensor {
    let numel = shape.iter().product();
    let values = (0..numel).map(|_| rng.gen_range(-0.1..0.1)).collect();
    Tensor::new(shape, values).expect("shape/product consistency")
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub struct LstmCellTrace {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    gate_i: Vec<f64>,
    gate_f: Vec<f64>,
    gate_g: Vec<f64>,
    gate_o: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// One forward step. Returns the new hidden state, cell state, and trace.
pub fn lstm_cell(
    store: &ParameterStore,
    params: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, LstmCellTrace)> {
    let h_dim = params.hidden_dim;
    if x.len() != params.input_dim || h_prev.len() != h_dim || c_prev.len() != h_dim {
        return Err(Error::Shape(format!(
            "lstm_cell: x {}, h {}, c {} vs dims ({}, {})",
            x.len(),
            h_prev.len(),
            c_prev.len(),
            params.input_dim,
            h_dim
        )));
    }

    let w_x = store.get(params.w_input).values();
    let w_h = store.get(params.w_hidden).values();
    let b = store.get(params.bias).values();

    let gates = 4 * h_dim;
    let mut pre = b.to_vec();
    for (j, pre_j) in pre.iter_mut().enumerate() {
        let mut acc = 0.0;
        let x_row = &w_x[j * params.input_dim..(j + 1) * params.input_dim];
        for (w, v) in x_row.iter().zip(x) {
            acc += w * v;
        }
        let h_row = &w_h[j * h_dim..(j + 1) * h_dim];
        for (w, v) in h_row.iter().zip(h_prev) {
            acc += w * v;
        }
        *pre_j += acc;
    }
    debug_assert_eq!(pre.len(), gates);

    let gate_i: Vec<f64> = pre[..h_dim].iter().map(|&z| sigmoid(z)).collect();
    let gate_f: Vec<f64> = pre[h_dim..2 * h_dim].iter().map(|&z| sigmoid(z)).collect();
    let gate_g: Vec<f64> = pre[2 * h_dim..3 * h_dim]
        .iter()
        .map(|&z| z.tanh())
        .collect();
    let gate_o: Vec<f64> = pre[3 * h_dim..].iter().map(|&z| sigmoid(z)).collect();

    let mut c = vec![0.0; h_dim];
    let mut tanh_c = vec![0.0; h_dim];
    let mut h = vec![0.0; h_dim];
    for k in 0..h_dim {
        c[k] = gate_f[k] * c_prev[k] + gate_i[k] * gate_g[k];
        tanh_c[k] = c[k].tanh();
        h[k] = gate_o[k] * tanh_c[k];
    }

    let trace = LstmCellTrace {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gate_i,
        gate_f,
        gate_g,
        gate_o,
        tanh_c,
    };
    Ok((h, c, trace))
}

/// Backward through one step. `dh`/`dc` are the gradients flowing into
/// h_t and c_t; weight gradients accumulate into the store, and the
/// gradients w.r.t. x, h_{t-1}, c_{t-1} accumulate into the out buffers.
#[allow(clippy::too_many_arguments)]
pub fn lstm_cell_backward(
    store: &mut ParameterStore,
    params: &LstmParams,
    trace: &LstmCellTrace,
    dh: &[f64],
    dc: &[f64],
    dx: &mut [f64],
    dh_prev: &mut [f64],
    dc_prev: &mut [f64],
) {
    let h_dim = params.hidden_dim;
    let in_dim = params.input_dim;

    // Pre-activation gate gradients, stacked i|f|g|o.
    let mut d_pre = vec![0.0; 4 * h_dim];
    for k in 0..h_dim {
        let i = trace.gate_i[k];
        let f = trace.gate_f[k];
        let g = trace.gate_g[k];
        let o = trace.gate_o[k];
        let tc = trace.tanh_c[k];

        let dc_total = dc[k] + dh[k] * o * (1.0 - tc * tc);
        d_pre[k] = dc_total * g * i * (1.0 - i);
        d_pre[h_dim + k] = dc_total * trace.c_prev[k] * f * (1.0 - f);
        d_pre[2 * h_dim + k] = dc_total * i * (1.0 - g * g);
        d_pre[3 * h_dim + k] = dh[k] * tc * o * (1.0 - o);
        dc_prev[k] += dc_total * f;
    }

    {
        let tensor = store.get_mut(params.w_input);
        let (w_x, grad) = tensor.values_and_grad_mut();
        for (j, &d) in d_pre.iter().enumerate() {
            let row = &w_x[j * in_dim..(j + 1) * in_dim];
            let grad_row = &mut grad[j * in_dim..(j + 1) * in_dim];
            for i in 0..in_dim {
                grad_row[i] += d * trace.x[i];
                dx[i] += d * row[i];
            }
        }
    }
    {
        let tensor = store.get_mut(params.w_hidden);
        let (w_h, grad) = tensor.values_and_grad_mut();
        for (j, &d) in d_pre.iter().enumerate() {
            let row = &w_h[j * h_dim..(j + 1) * h_dim];
            let grad_row = &mut grad[j * h_dim..(j + 1) * h_dim];
            for k in 0..h_dim {
                grad_row[k] += d * trace.h_prev[k];
                dh_prev[k] += d * row[k];
            }
        }
    }
    {
        let grad = store.get_mut(params.bias).grad_mut();
        for (g, &d) in grad.iter_mut().zip(&d_pre) {
            *g += d;
        }
    }
}
