//! Differentiable primitives: affine map, ReLU, concatenation, softmax
//! cross-entropy, and inverted dropout.
//!
//! Each forward function has a `_backward` companion that accumulates
//! (`+=`) into the supplied gradient buffers, so one buffer can collect
//! contributions from several uses of the same value.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;

/// y = Wx + b for a row-major `W` of shape `[out, in]`.
pub fn affine(x: &[f64], w: &Tensor, b: &Tensor) -> Result<Vec<f64>> {
    let (out_dim, in_dim) = match w.shape() {
        [o, i] => (*o, *i),
        other => {
            return Err(Error::Shape(format!(
                "affine weight must be 2-d, got {other:?}"
            )))
        }
    };
    if x.len() != in_dim || b.numel() != out_dim {
        return Err(Error::Shape(format!(
            "affine: x has {}, W is [{out_dim}x{in_dim}], b has {}",
            x.len(),
            b.numel()
        )));
    }
    let wv = w.values();
    let mut y = b.values().to_vec();
    for (o, y_o) in y.iter_mut().enumerate() {
        let row = &wv[o * in_dim..(o + 1) * in_dim];
        let mut acc = 0.0;
        for (w_oi, x_i) in row.iter().zip(x) {
            acc += w_oi * x_i;
        }
        *y_o += acc;
    }
    Ok(y)
}

/// Accumulate dL/dW, dL/db, dL/dx for y = Wx + b given dL/dy.
pub fn affine_backward(
    x: &[f64],
    w_values: &[f64],
    dy: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    dx: &mut [f64],
) {
    let in_dim = x.len();
    for (o, &dy_o) in dy.iter().enumerate() {
        db[o] += dy_o;
        let w_row = &w_values[o * in_dim..(o + 1) * in_dim];
        let dw_row = &mut dw[o * in_dim..(o + 1) * in_dim];
        for i in 0..in_dim {
            dw_row[i] += dy_o * x[i];
            dx[i] += dy_o * w_row[i];
        }
    }
}

/// Elementwise max(0, x). The subgradient at 0 is 0.
pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// Accumulate dL/dx given the pre-activation input and dL/dy.
pub fn relu_backward(x_pre: &[f64], dy: &[f64], dx: &mut [f64]) {
    for i in 0..x_pre.len() {
        if x_pre[i] > 0.0 {
            dx[i] += dy[i];
        }
    }
}

pub fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

/// Route the gradient of a concatenation back to its two halves.
pub fn concat_backward(dy: &[f64], da: &mut [f64], db: &mut [f64]) {
    for (da_i, dy_i) in da.iter_mut().zip(dy) {
        *da_i += dy_i;
    }
    for (db_i, dy_i) in db.iter_mut().zip(&dy[da.len()..]) {
        *db_i += dy_i;
    }
}

/// Numerically stabilized softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut probs: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    probs
}

/// Softmax followed by cross-entropy against a gold class index.
///
/// Returns the probability vector and `-ln p[gold]`.
pub fn softmax_xent(logits: &[f64], gold: usize) -> Result<(Vec<f64>, f64)> {
    if logits.len() < 2 {
        return Err(Error::Shape(format!(
            "softmax needs >= 2 logits, got {}",
            logits.len()
        )));
    }
    if gold >= logits.len() {
        return Err(Error::Config(format!(
            "gold class {gold} out of range for {} logits",
            logits.len()
        )));
    }
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let shifted: Vec<f64> = logits.iter().map(|&z| z - max).collect();
    let sum_exp: f64 = shifted.iter().map(|&z| z.exp()).sum();
    let log_sum = sum_exp.ln();
    let probs: Vec<f64> = shifted.iter().map(|&z| (z - log_sum).exp()).collect();
    let loss = log_sum - shifted[gold];
    Ok((probs, loss))
}

/// Accumulate `scale * (probs - onehot(gold))` into dL/dlogits.
pub fn softmax_xent_backward(probs: &[f64], gold: usize, scale: f64, dlogits: &mut [f64]) {
    for (i, (&p, d)) in probs.iter().zip(dlogits.iter_mut()).enumerate() {
        let target = if i == gold { 1.0 } else { 0.0 };
        *d += scale * (p - target);
    }
}

/// Inverted dropout: at train time each element is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate); at inference the input
/// passes through untouched. Returns the output and, when a mask was
/// drawn, the per-element scale factors needed for the backward pass.
pub fn dropout<R: Rng>(
    x: &[f64],
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!(
            "dropout rate must be in [0,1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((x.to_vec(), None));
    }
    let keep_scale = 1.0 / (1.0 - rate);
    let mut mask = Vec::with_capacity(x.len());
    let mut out = Vec::with_capacity(x.len());
    for &v in x {
        let factor = if rng.gen::<f64>() < rate {
            0.0
        } else {
            keep_scale
        };
        mask.push(factor);
        out.push(v * factor);
    }
    Ok((out, Some(mask)))
}

/// dL/dx for dropout given the mask returned by [`dropout`].
pub fn dropout_backward(mask: Option<&[f64]>, dy: &[f64], dx: &mut [f64]) {
    match mask {
        None => {
            for (dx_i, dy_i) in dx.iter_mut().zip(dy) {
                *dx_i += dy_i;
            }
        }
        Some(mask) => {
            for i in 0..dy.len() {
                dx[i] += dy[i] * mask[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tensor(shape: Vec<usize>, values: Vec<f64>) -> Tensor {
        Tensor::new(shape, values).unwrap()
    }

    #[test]
    fn affine_identity() {
        let w = tensor(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        let b = tensor(vec![2], vec![0.0, 0.0]);
        assert_eq!(affine(&[3.0, 4.0], &w, &b).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn affine_zero_weights_returns_bias() {
        let w = tensor(vec![2, 3], vec![0.0; 6]);
        let b = tensor(vec![2], vec![1.0, 2.0]);
        assert_eq!(affine(&[5.0, -1.0, 7.0], &w, &b).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn affine_shape_mismatch() {
        let w = tensor(vec![2, 3], vec![0.0; 6]);
        let b = tensor(vec![2], vec![0.0; 2]);
        assert!(affine(&[1.0, 2.0], &w, &b).is_err());
    }

    #[test]
    fn relu_clamps_negatives() {
        assert_eq!(relu(&[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
        assert_eq!(relu(&[-3.0, -0.5]), vec![0.0, 0.0]);
    }

    #[test]
    fn concat_orders_and_routes_back() {
        assert_eq!(concat(&[1.0], &[2.0, 3.0]), vec![1.0, 2.0, 3.0]);
        let mut da = vec![0.0];
        let mut db = vec![0.0, 0.0];
        concat_backward(&[0.1, 0.2, 0.3], &mut da, &mut db);
        assert_eq!(da, vec![0.1]);
        assert_eq!(db, vec![0.2, 0.3]);
    }

    #[test]
    fn softmax_uniform_on_equal_logits() {
        let (probs, loss) = softmax_xent(&[0.0, 0.0], 0).unwrap();
        assert!((probs[0] - 0.5).abs() < 1e-12);
        assert!((probs[1] - 0.5).abs() < 1e-12);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn softmax_saturated_correct_prediction() {
        let (_, loss) = softmax_xent(&[100.0, -100.0], 0).unwrap();
        assert!(loss < 1e-12);
    }

    #[test]
    fn softmax_rejects_bad_gold() {
        assert!(softmax_xent(&[0.0, 0.0], 2).is_err());
        assert!(softmax_xent(&[0.0], 0).is_err());
    }

    #[test]
    fn softmax_is_a_distribution() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let k = rng.gen_range(2..6);
            let logits: Vec<f64> = (0..k).map(|_| rng.gen_range(-30.0..30.0)).collect();
            let probs = softmax(&logits);
            let sum: f64 = probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(probs.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn dropout_identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = [1.0, -2.0, 3.0];
        let (y, mask) = dropout(&x, 0.0, true, &mut rng).unwrap();
        assert_eq!(y, x.to_vec());
        assert!(mask.is_none());
        let (y, mask) = dropout(&x, 0.7, false, &mut rng).unwrap();
        assert_eq!(y, x.to_vec());
        assert!(mask.is_none());
        assert!(dropout(&x, 1.0, true, &mut rng).is_err());
    }

    #[test]
    fn dropout_zero_fraction_matches_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = vec![1.0; 100_000];
        let rate = 0.3;
        let (y, mask) = dropout(&x, rate, true, &mut rng).unwrap();
        let zeros = y.iter().filter(|&&v| v == 0.0).count();
        let frac = zeros as f64 / x.len() as f64;
        assert!((frac - rate).abs() < 0.01, "observed zero fraction {frac}");
        let scale = 1.0 / (1.0 - rate);
        for (v, m) in y.iter().zip(mask.unwrap()) {
            assert!(*v == 0.0 || (*v - scale).abs() < 1e-12);
            assert!(m == 0.0 || (m - scale).abs() < 1e-12);
        }
    }

    // Gradient checks for the primitives live in `numerics::gradcheck`
    // tests, where the finite-difference harness is available.
}
