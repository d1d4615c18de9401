//! Principal indefinite sums Σ^{m+1}g of functions on the positive reals,
//! evaluated by limit formulas, closed forms and integral representations.
//!
//! ```
//! use sigma_core::{catalog_get, sigma_eval, SigmaControl};
//!
//! let log = catalog_get("log", &Default::default()).unwrap();
//! // Σ ln = ln Γ
//! let r = sigma_eval(&log, 0, 0.5, &SigmaControl::default()).unwrap();
//! assert!((r.value - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-10);
//! ```

pub mod catalog;
pub mod classes;
pub mod diff;
pub mod engine;
pub mod error;
pub mod malmsten;
pub mod par;
pub mod special;
pub mod sum;

pub use catalog::{catalog_get, eval_delta, CatalogFunction, Convexity, Params, Sign};
pub use classes::{check_d, check_k, class_report, ClassReport, TailMode, TailSign};
pub use diff::{binom_real, divided_diff, forward_diff, GridWindow, Probe, RealFn};
pub use engine::{
    delta_sigma_roundtrip, sigma_eval, sigma_eval_iterated, sigma_integer, sigma_integer_alt,
    sigma_route, sigma_via_cauchy, verify_taylor_sigma, Route, SigmaControl, SigmaResult,
};
pub use error::{Error, Result};
pub use malmsten::{malmsten_integrand, malmsten_ln, malmsten_ln_gm, QuadratureSpec};
pub use par::Execution;
