//! Partially adaptive momentum estimation (Padam) alongside Adam, Amsgrad and
//! heavy-ball SGD, with the small models, datasets and experiment harness used
//! to compare them.

pub mod data;
pub mod error;
pub mod harness;
pub mod model;
pub mod optim;
pub mod schedule;
pub mod tensor;

pub use error::{Error, Result};
pub use optim::{
    adam_step, amsgrad_step, make_optimizer, padam_step, sgd_momentum_step, HyperParamOverrides,
    HyperParams, MomentState, Optimizer, OptimizerKind, OptimizerState, SgdState,
};
pub use schedule::{PSchedule, StepDecaySchedule};
pub use tensor::{Rng, Tensor};
