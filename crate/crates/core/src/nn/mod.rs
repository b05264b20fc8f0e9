//! Minimal differentiable tensor core: tape, parameters, Adam, gradient check.

mod adam;
mod gradcheck;
mod params;
mod tape;

pub use adam::{AdamConfig, AdamState, DecayMode};
pub use gradcheck::{
    grad_check, grad_check_store, GradCheckReport, FULL_CHECK_LIMIT, REL_ERROR_FLOOR,
};
pub use params::{Param, ParamId, ParamStore};
pub use tape::{Gradients, Tape, Var};
