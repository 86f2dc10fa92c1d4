//! Dense tensors and the named parameter store.
//!
//! Values are held as `f64` throughout; single-precision training instead
//! snaps parameter values onto the `f32` grid after initialization and
//! after every optimizer step (see [`ParameterStore::quantize_f32`]), so
//! checkpoints written as 32-bit floats round-trip bit-exactly while
//! gradient checking can run at full double precision.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense array of reals with an optional gradient buffer of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Tensor> {
        let numel: usize = shape.iter().product();
        if values.len() != numel {
            return Err(Error::Shape(format!(
                "{} values do not fill shape {:?} ({} elements)",
                values.len(),
                shape,
                numel
            )));
        }
        Ok(Tensor {
            shape,
            values,
            grad: None,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Tensor {
        let numel = shape.iter().product();
        Tensor {
            shape,
            values: vec![0.0; numel],
            grad: None,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Row `r` of a 2-d tensor laid out row-major.
    pub fn row(&self, r: usize) -> &[f64] {
        debug_assert_eq!(self.shape.len(), 2);
        let cols = self.shape[1];
        &self.values[r * cols..(r + 1) * cols]
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    /// Gradient buffer, allocated zeroed on first use.
    pub fn grad_mut(&mut self) -> &mut [f64] {
        let n = self.values.len();
        self.grad.get_or_insert_with(|| vec![0.0; n])
    }

    /// Simultaneous read access to values and write access to the gradient.
    pub fn values_and_grad_mut(&mut self) -> (&[f64], &mut [f64]) {
        let n = self.values.len();
        let grad = self.grad.get_or_insert_with(|| vec![0.0; n]);
        (&self.values, grad)
    }

    /// Mutable access to values and gradient at once.
    pub fn values_mut_and_grad_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let n = self.values.len();
        let grad = self.grad.get_or_insert_with(|| vec![0.0; n]);
        (&mut self.values, grad)
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.fill(0.0);
        }
    }
}

/// Which learning-rate group a parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamGroup {
    Embedding,
    Other,
}

/// Stable handle to a parameter inside a [`ParameterStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(usize);

#[derive(Debug)]
struct ParamEntry {
    name: String,
    group: ParamGroup,
    tensor: Tensor,
}

/// All model parameters, addressed by name or by [`ParamId`].
///
/// Iteration follows registration order, which is fixed by model
/// construction and therefore deterministic.
#[derive(Debug, Default)]
pub struct ParameterStore {
    entries: Vec<ParamEntry>,
    by_name: HashMap<String, usize>,
}

impl ParameterStore {
    pub fn new() -> ParameterStore {
        ParameterStore::default()
    }

    pub fn register(&mut self, name: &str, group: ParamGroup, tensor: Tensor) -> Result<ParamId> {
        if self.by_name.contains_key(name) {
            return Err(Error::Config(format!("duplicate parameter name `{name}`")));
        }
        let idx = self.entries.len();
        self.by_name.insert(name.to_string(), idx);
        self.entries.push(ParamEntry {
            name: name.to_string(),
            group,
            tensor,
        });
        Ok(ParamId(idx))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn group(&self, id: ParamId) -> ParamGroup {
        self.entries[id.0].group
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].tensor
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].tensor
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, ParamGroup, &Tensor)> {
        self.entries
            .iter()
            .map(|e| (e.name.as_str(), e.group, &e.tensor))
    }

    pub fn zero_grads(&mut self) {
        for entry in &mut self.entries {
            entry.tensor.zero_grad();
        }
    }

    /// Allocate gradient buffers for every parameter.
    pub fn ensure_grads(&mut self) {
        for entry in &mut self.entries {
            entry.tensor.grad_mut();
        }
    }

    pub fn total_params(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.numel()).sum()
    }

    /// Snap every parameter value onto the nearest `f32`.
    pub fn quantize_f32(&mut self) {
        for entry in &mut self.entries {
            for v in entry.tensor.values_mut() {
                *v = *v as f32 as f64;
            }
        }
    }

    /// Copy parameter values out, in registration order.
    pub fn snapshot(&self) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|e| e.tensor.values().to_vec())
            .collect()
    }

    /// Restore values captured by [`ParameterStore::snapshot`].
    pub fn restore(&mut self, snapshot: &[Vec<f64>]) -> Result<()> {
        if snapshot.len() != self.entries.len() {
            return Err(Error::Shape(format!(
                "snapshot has {} parameters, store has {}",
                snapshot.len(),
                self.entries.len()
            )));
        }
        for (entry, values) in self.entries.iter_mut().zip(snapshot) {
            if values.len() != entry.tensor.numel() {
                return Err(Error::Shape(format!(
                    "snapshot size {} does not match `{}` ({})",
                    values.len(),
                    entry.name,
                    entry.tensor.numel()
                )));
            }
            entry.tensor.values_mut().copy_from_slice(values);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_shape_checked() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn grad_allocates_lazily_and_zeroes() {
        let mut t = Tensor::zeros(vec![3]);
        assert!(t.grad().is_none());
        t.grad_mut()[1] = 2.0;
        assert_eq!(t.grad().unwrap(), &[0.0, 2.0, 0.0]);
        t.zero_grad();
        assert_eq!(t.grad().unwrap(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn store_rejects_duplicate_names() {
        let mut store = ParameterStore::new();
        store
            .register("w", ParamGroup::Other, Tensor::zeros(vec![2]))
            .unwrap();
        assert!(store
            .register("w", ParamGroup::Other, Tensor::zeros(vec![2]))
            .is_err());
    }

    #[test]
    fn snapshot_restore_roundtrip() {
        let mut store = ParameterStore::new();
        let id = store
            .register(
                "w",
                ParamGroup::Other,
                Tensor::new(vec![2], vec![1.5, -2.5]).unwrap(),
            )
            .unwrap();
        let snap = store.snapshot();
        store.get_mut(id).values_mut()[0] = 9.0;
        store.restore(&snap).unwrap();
        assert_eq!(store.get(id).values(), &[1.5, -2.5]);
    }

    #[test]
    fn quantize_snaps_to_f32_grid() {
        let mut store = ParameterStore::new();
        let id = store
            .register(
                "w",
                ParamGroup::Other,
                Tensor::new(vec![1], vec![0.1f64]).unwrap(),
            )
            .unwrap();
        store.quantize_f32();
        let v = store.get(id).values()[0];
        assert_eq!(v, 0.1f32 as f64);
        assert_eq!(v as f32 as f64, v);
    }
}
