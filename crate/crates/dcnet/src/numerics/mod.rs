//! Dense numerics for the model: tensors with gradient slots, the
//! differentiable primitives, the LSTM cell, Adam, and a finite-difference
//! gradient checker.

pub mod adam;
pub mod gradcheck;
pub mod lstm;
pub mod ops;
pub mod tensor;

pub use adam::{adam_step, AdamState, GroupRates};
pub use gradcheck::{grad_check, GradCheckReport};
pub use lstm::{lstm_cell, lstm_cell_backward, LstmCellTrace, LstmParams};
pub use tensor::{ParamGroup, ParamId, ParameterStore, Tensor};
