//! Finite-difference verification of analytic gradients.
//!
//! The harness never looks at how a gradient was produced: it calls the
//! supplied closure once to collect the analytic gradients, then probes
//! randomly chosen coordinates with central differences over the loss
//! value alone. The closure must be deterministic (fixed inputs, dropout
//! disabled) and must zero the store's gradients before accumulating.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::tensor::ParameterStore;

/// Outcome of a gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Parameter and flat index where the worst error occurred.
    pub worst_param: String,
    pub worst_index: usize,
    /// Analytic and numeric gradient at the worst coordinate.
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    /// Number of coordinates probed.
    pub probes: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

/// Compare analytic gradients against central differences.
///
/// `loss` computes the scalar loss at the store's current values and
/// leaves the matching gradients in the store. Up to `samples_per_param`
/// coordinates of every parameter are probed with step `epsilon`;
/// coordinate choice is driven by `seed`.
pub fn grad_check<F>(
    store: &mut ParameterStore,
    mut loss: F,
    epsilon: f64,
    samples_per_param: usize,
    seed: u64,
) -> Result<GradCheckReport>
where
    F: FnMut(&mut ParameterStore) -> Result<f64>,
{
    let base_loss = loss(store)?;
    if !base_loss.is_finite() {
        return Err(Error::NonFinite(format!("loss at base point: {base_loss}")));
    }

    // Snapshot the analytic gradients before perturbing anything.
    let analytic: Vec<Vec<f64>> = store
        .iter()
        .map(|(name, _, t)| {
            t.grad()
                .map(|g| g.to_vec())
                .ok_or_else(|| Error::Config(format!("no gradient for `{name}`")))
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        probes: 0,
    };

    let ids: Vec<_> = store.ids().collect();
    for (pi, id) in ids.iter().enumerate() {
        let numel = store.get(*id).numel();
        if numel == 0 {
            continue;
        }
        let coords: Vec<usize> = if numel <= samples_per_param {
            (0..numel).collect()
        } else {
            (0..samples_per_param)
                .map(|_| rng.gen_range(0..numel))
                .collect()
        };

        for coord in coords {
            let original = store.get(*id).values()[coord];

            store.get_mut(*id).values_mut()[coord] = original + epsilon;
            let loss_plus = loss(store)?;
            store.get_mut(*id).values_mut()[coord] = original - epsilon;
            let loss_minus = loss(store)?;
            store.get_mut(*id).values_mut()[coord] = original;

            if !loss_plus.is_finite() || !loss_minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "perturbed loss at `{}`[{}]",
                    store.name(*id),
                    coord
                )));
            }

            let numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
            let exact = analytic[pi][coord];
            let rel = (exact - numeric).abs() / (exact.abs() + numeric.abs()).max(1e-8);
            report.probes += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_param = store.name(*id).to_string();
                report.worst_index = coord;
                report.worst_analytic = exact;
                report.worst_numeric = numeric;
            }
        }
    }

    // Leave the store's gradients consistent with its (restored) values.
    loss(store)?;
    Ok(report)
}
