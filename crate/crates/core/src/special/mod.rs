//! Special functions: digamma family, closed-form iterated sums and the
//! multiple gamma functions.

pub mod closed;
pub mod multiple;
pub mod psi;

pub use closed::*;
pub use multiple::*;
pub use psi::*;
