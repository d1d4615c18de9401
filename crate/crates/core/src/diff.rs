//! Exact finite-difference primitives: generalized binomials, forward and
//! divided differences, Newton remainders and the discrete Taylor identity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::Neumaier;

/// Largest forward-difference order accepted by [`forward_diff`]. Rounding in
/// `Δ^k` grows roughly like `2^k`.
pub const DEFAULT_ORDER_CAP: usize = 30;

/// A real function on the positive half-line.
pub trait RealFn: Sync {
    fn eval(&self, x: f64) -> f64;
}

impl<F> RealFn for F
where
    F: Fn(f64) -> f64 + Sync,
{
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}

/// A function that may know its forward differences in closed form.
pub trait Probe: RealFn {
    /// `Δ^order f(x)`; falls back to the alternating binomial sum.
    fn delta(&self, order: usize, x: f64) -> Result<f64> {
        forward_diff(self, order, x)
    }
}

/// Adapter giving any closure the default [`Probe`] behaviour.
pub struct Plain<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> RealFn for Plain<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

impl<F: Fn(f64) -> f64 + Sync> Probe for Plain<F> {}

/// Evenly spaced sample points `start + i·step`, `i < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridWindow {
    pub start: f64,
    pub count: usize,
    pub step: f64,
}

impl GridWindow {
    pub fn new(start: f64, count: usize, step: f64) -> Result<Self> {
        if !(start > 0.0 && start.is_finite()) {
            return Err(Error::Window(format!("start {start} must be positive")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Window(format!("step {step} must be positive")));
        }
        if count == 0 {
            return Err(Error::Window("count must be positive".into()));
        }
        Ok(Self { start, count, step })
    }

    pub fn unit(start: f64, count: usize) -> Result<Self> {
        Self::new(start, count, 1.0)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.point(self.count - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.point(i))
    }
}

/// Generalized binomial coefficient `x(x-1)…(x-k+1)/k!` for real `x`.
///
/// Computed as a running product so that it vanishes exactly when `x` is a
/// nonnegative integer below `k`, and is exact for integer results that fit
/// in 53 bits.
pub fn binom_real(x: f64, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (x - i as f64) / (i as f64 + 1.0);
    }
    r
}

/// Integer binomial coefficients `C(k, 0..=k)` as floats.
pub(crate) fn binom_row(k: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(k + 1);
    let mut c = 1.0;
    for j in 0..=k {
        row.push(c);
        c = c * (k - j) as f64 / (j + 1) as f64;
    }
    row
}

fn checked<F: RealFn + ?Sized>(f: &F, x: f64) -> Result<f64> {
    let v = f.eval(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { x })
    }
}

/// `Δ^k f(x) = Σ_j C(k,j) (-1)^{k-j} f(x+j)`, summed with compensation.
pub fn forward_diff<F: RealFn + ?Sized>(f: &F, k: usize, x: f64) -> Result<f64> {
    forward_diff_capped(f, k, x, DEFAULT_ORDER_CAP)
}

pub fn forward_diff_capped<F: RealFn + ?Sized>(f: &F, k: usize, x: f64, cap: usize) -> Result<f64> {
    if k > cap {
        return Err(Error::OrderTooLarge { order: k, cap });
    }
    if k == 0 {
        return checked(f, x);
    }
    let row = binom_row(k);
    let mut acc = Neumaier::new();
    for (j, c) in row.iter().enumerate() {
        let v = checked(f, x + j as f64)?;
        let term = c * v;
        if (k - j).is_multiple_of(2) {
            acc.add(term);
        } else {
            acc.add(-term);
        }
    }
    Ok(acc.value())
}

/// Classical divided difference `f[x_0, …, x_q]`.
///
/// Evaluated bottom-up over the triangular table; each entry is produced by
/// the same recurrence the recursive definition uses.
pub fn divided_diff<F: RealFn + ?Sized>(f: &F, points: &[f64]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyPoints);
    }
    for (i, &p) in points.iter().enumerate() {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Domain { what: "divided_diff node", x: p });
        }
        if points[..i].contains(&p) {
            return Err(Error::DuplicatePoint(p));
        }
    }
    let mut table = points
        .iter()
        .map(|&p| checked(f, p))
        .collect::<Result<Vec<_>>>()?;
    let q = points.len();
    for level in 1..q {
        for i in 0..q - level {
            table[i] = (table[i + 1] - table[i]) / (points[i + level] - points[i]);
        }
    }
    Ok(table[0])
}

/// `ρ_a^p[f](x) = f(x+a) - Σ_{j<p} C(x,j) Δ^j f(a)`, defined for `x > -a`.
pub fn rho_remainder<F: RealFn + ?Sized>(f: &F, a: f64, p: usize, x: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain { what: "rho_remainder base point", x: a });
    }
    if !(x > -a) {
        return Err(Error::Domain { what: "rho_remainder", x });
    }
    let mut acc = Neumaier::new();
    acc.add(checked(f, x + a)?);
    for j in 0..p {
        acc.add(-binom_real(x, j) * forward_diff(f, j, a)?);
    }
    Ok(acc.value())
}

/// The two sides of the discrete Taylor identity
/// `f(x+n) = Σ_{j≤m} C(n,j) Δ^j f(x) + Σ_{k<n} C(n-k-1,m) Δ^{m+1} f(x+k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorSplit {
    pub expansion: f64,
    pub remainder: f64,
}

impl TaylorSplit {
    pub fn total(&self) -> f64 {
        self.expansion + self.remainder
    }
}

pub fn discrete_taylor<F: RealFn + ?Sized>(f: &F, m: usize, x: f64, n: usize) -> Result<TaylorSplit> {
    if !(x > 0.0) {
        return Err(Error::Domain { what: "discrete_taylor", x });
    }
    let nf = n as f64;
    let mut expansion = Neumaier::new();
    for j in 0..=m {
        let c = binom_real(nf, j);
        if c != 0.0 {
            expansion.add(c * forward_diff(f, j, x)?);
        }
    }
    let mut remainder = Neumaier::new();
    for k in 0..n {
        let c = binom_real((n - k - 1) as f64, m);
        if c != 0.0 {
            remainder.add(c * forward_diff(f, m + 1, x + k as f64)?);
        }
    }
    Ok(TaylorSplit {
        expansion: expansion.value(),
        remainder: remainder.value(),
    })
}
