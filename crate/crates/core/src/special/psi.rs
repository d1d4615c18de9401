//! Digamma and trigamma on the positive half-line.
//!
//! Both are evaluated from their defining series after shifting the argument
//! up to `x ≥ 10` with the recurrences `ψ(x+1) = ψ(x) + 1/x` and
//! `ψ'(x+1) = ψ'(x) - 1/x²`. The series tail is replaced by its midpoint
//! Euler–Maclaurin integral plus three derivative corrections.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::Neumaier;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
pub const PI_SQUARED_OVER_SIX: f64 = 1.644_934_066_848_226_4;

const SHIFT_TO: f64 = 10.0;
const SERIES_TERMS: usize = 48;

// Midpoint Euler–Maclaurin weights B_{2j}(1/2)/(2j)! (sign folded in below).
const EM1: f64 = 1.0 / 24.0;
const EM3: f64 = 7.0 / 5760.0;
const EM5: f64 = 31.0 / 967_680.0;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EulerConstants {
    /// Euler's constant γ = -ψ(1).
    pub gamma: f64,
    /// ψ'(1) = π²/6.
    pub psi1_at_1: f64,
}

impl EulerConstants {
    pub const fn get() -> Self {
        Self {
            gamma: EULER_GAMMA,
            psi1_at_1: PI_SQUARED_OVER_SIX,
        }
    }
}

/// `Σ_{k≥a} f(k)` from the integral over `[a-1/2, ∞)` and the odd
/// derivatives of `f` at `u = a - 1/2`.
fn midpoint_tail(integral: f64, d1: f64, d3: f64, d5: f64) -> f64 {
    integral + EM1 * d1 - EM3 * d3 + EM5 * d5
}

/// Digamma ψ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain { what: "digamma", x });
    }
    let mut shift = Neumaier::new();
    let mut y = x;
    while y < SHIFT_TO {
        shift.add(1.0 / y);
        y += 1.0;
    }
    // ψ(y) = -γ + Σ_{k≥1} (1/k - 1/(y+k-1))
    let mut acc = Neumaier::new();
    acc.add(-EULER_GAMMA);
    for k in 1..=SERIES_TERMS {
        let k = k as f64;
        acc.add(1.0 / k - 1.0 / (y + k - 1.0));
    }
    let u = SERIES_TERMS as f64 + 0.5;
    let v = y + u - 1.0;
    let tail = midpoint_tail(
        ((y - 1.0) / u).ln_1p(),
        -1.0 / (u * u) + 1.0 / (v * v),
        -6.0 / u.powi(4) + 6.0 / v.powi(4),
        -120.0 / u.powi(6) + 120.0 / v.powi(6),
    );
    acc.add(tail);
    acc.add(-shift.value());
    Ok(acc.value())
}

/// Trigamma ψ'(x) = Σ_{k≥0} 1/(x+k)² for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain { what: "trigamma", x });
    }
    let mut acc = Neumaier::new();
    let mut y = x;
    while y < SHIFT_TO {
        acc.add(1.0 / (y * y));
        y += 1.0;
    }
    const TERMS: usize = 32;
    for k in 0..TERMS {
        let z = y + k as f64;
        acc.add(1.0 / (z * z));
    }
    let v = y + TERMS as f64 - 0.5;
    acc.add(midpoint_tail(
        1.0 / v,
        -2.0 / v.powi(3),
        -24.0 / v.powi(5),
        -720.0 / v.powi(7),
    ));
    Ok(acc.value())
}

/// Harmonic number `H_n = ψ(n+1) + γ`, summed exactly term by term.
pub fn harmonic(n: usize) -> f64 {
    let mut acc = Neumaier::new();
    for k in 1..=n {
        acc.add(1.0 / k as f64);
    }
    acc.value()
}

/// `ln Γ(x)` for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain { what: "ln_gamma", x });
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}
