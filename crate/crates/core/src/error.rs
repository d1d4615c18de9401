use thiserror::Error;

use crate::classes::ClassReport;
use crate::engine::SigmaResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown function id `{0}`")]
    UnknownFunction(String),

    #[error("invalid parameter for `{id}`: {reason}")]
    InvalidParameter { id: String, reason: String },

    #[error("argument {x} outside the domain of {what}")]
    Domain { what: &'static str, x: f64 },

    #[error("evaluation produced a non-finite value at x = {x}")]
    NonFinite { x: f64 },

    #[error("duplicated node {0} in divided difference")]
    DuplicatePoint(f64),

    #[error("divided difference needs at least one node")]
    EmptyPoints,

    #[error("difference order {order} exceeds the cap {cap}")]
    OrderTooLarge { order: usize, cap: usize },

    #[error("invalid control: {0}")]
    InvalidControl(String),

    #[error("limit did not converge: n = {}, remainder estimate {:.3e}", .0.n_used, .0.remainder_estimate)]
    NotConverged(Box<SigmaResult>),

    #[error("{id}: Σ^{order} refused, {reason}")]
    Inadmissible {
        id: String,
        order: usize,
        reason: String,
        evidence: Option<Box<ClassReport>>,
    },

    #[error("invalid sampling window: {0}")]
    Window(String),
}
