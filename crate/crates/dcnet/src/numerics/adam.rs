//! Adam optimizer with bias correction and per-group learning rates.
//!
//! Word vectors train with their own (typically smaller) learning rate;
//! everything else shares one rate. Gradients are cleared after each step.

use crate::error::{Error, Result};
use crate::numerics::tensor::{ParamGroup, ParameterStore};

/// First/second moment estimates, parallel to the store's registration order.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

/// Learning rates keyed by parameter group.
#[derive(Debug, Clone, Copy)]
pub struct GroupRates {
    pub embedding: f64,
    pub other: f64,
}

impl GroupRates {
    fn for_group(&self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::Embedding => self.embedding,
            ParamGroup::Other => self.other,
        }
    }
}

impl AdamState {
    pub fn new(store: &ParameterStore, beta1: f64, beta2: f64, epsilon: f64) -> AdamState {
        let m = store.iter().map(|(_, _, t)| vec![0.0; t.numel()]).collect();
        let v = store.iter().map(|(_, _, t)| vec![0.0; t.numel()]).collect();
        AdamState {
            m,
            v,
            step: 0,
            beta1,
            beta2,
            epsilon,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// Apply one Adam update to every parameter in the store and zero the
/// gradients. Fails if any parameter has no gradient buffer.
pub fn adam_step(
    store: &mut ParameterStore,
    state: &mut AdamState,
    rates: GroupRates,
) -> Result<()> {
    if state.m.len() != store.len() {
        return Err(Error::Shape(format!(
            "optimizer state covers {} parameters, store has {}",
            state.m.len(),
            store.len()
        )));
    }

    state.step += 1;
    let t = state.step;
    let bias1 = 1.0 - state.beta1.powi(t as i32);
    let bias2 = 1.0 - state.beta2.powi(t as i32);

    for (idx, id) in store.ids().collect::<Vec<_>>().into_iter().enumerate() {
        let group = store.group(id);
        let lr = rates.for_group(group);
        if store.get(id).grad().is_none() {
            return Err(Error::Config(format!(
                "parameter `{}` has no gradient; run backward before stepping",
                store.name(id)
            )));
        }

        let m = &mut state.m[idx];
        let v = &mut state.v[idx];
        let (beta1, beta2, eps) = (state.beta1, state.beta2, state.epsilon);

        let (values, grad) = store.get_mut(id).values_mut_and_grad_mut();
        let numel = values.len();

        for i in 0..numel {
            let g = grad[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            values[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            grad[i] = 0.0;
        }
    }
    Ok(())
}
