//! Multiple gamma functions `G_m`, Barnes limit products, the K-function and
//! related derived quantities.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::catalog::{catalog_get, CatalogFunction, Kind};
use crate::diff::{binom_real, forward_diff_capped};
use crate::engine::{sigma_eval, SigmaControl};
use crate::error::{Error, Result};
use crate::malmsten::{malmsten_ln_gm, QuadratureSpec};
use crate::special::psi::{digamma, ln_gamma, EULER_GAMMA};
use crate::sum::Neumaier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaRoute {
    Sigma,
    Recurrence,
    LimitProduct,
    Malmsten,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultipleGammaValue {
    pub m: usize,
    pub x: f64,
    pub ln_value: f64,
    pub route: GammaRoute,
}

fn log_fn() -> CatalogFunction {
    CatalogFunction { kind: Kind::Log }
}

fn order_at_least_one(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter {
            id: "ln_multiple_gamma".into(),
            reason: "order m must be at least 1".into(),
        });
    }
    Ok(())
}

/// `ln G_m(x) = Σ^m ln(x)`.
pub fn ln_multiple_gamma(m: usize, x: f64, ctrl: &SigmaControl) -> Result<MultipleGammaValue> {
    order_at_least_one(m)?;
    let r = sigma_eval(&log_fn(), m - 1, x, ctrl)?;
    Ok(MultipleGammaValue { m, x, ln_value: r.value, route: GammaRoute::Sigma })
}

/// `ln G_m(x)` from the Malmstén-type integral.
pub fn ln_multiple_gamma_malmsten(m: usize, x: f64, spec: &QuadratureSpec) -> Result<MultipleGammaValue> {
    order_at_least_one(m)?;
    let q = malmsten_ln_gm(m - 1, x, spec)?;
    Ok(MultipleGammaValue { m, x, ln_value: q.value, route: GammaRoute::Malmsten })
}

/// `ln G_m(n)` at a positive integer from `G_0(k) = k`, `G_m(1) = 1` and
/// `G_m(k+1) = G_{m-1}(k) G_m(k)`.
pub fn ln_multiple_gamma_recurrence(m: usize, n: usize) -> Result<MultipleGammaValue> {
    if n == 0 {
        return Err(Error::Domain { what: "ln_multiple_gamma_recurrence", x: 0.0 });
    }
    // row[k-1] = ln G_level(k)
    let mut row: Vec<f64> = (1..=n).map(|k| (k as f64).ln()).collect();
    for _ in 0..m {
        let mut next = Vec::with_capacity(n);
        let mut acc = Neumaier::new();
        for prev in row.iter().take(n) {
            next.push(acc.value());
            acc.add(*prev);
        }
        row = next;
    }
    Ok(MultipleGammaValue { m, x: n as f64, ln_value: row[n - 1], route: GammaRoute::Recurrence })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarnesVariant {
    /// `n!^x n^{C(x,2)} / (x^n Γ(x)^{n+1}) · Π_k (1+x/k)^{k-n}`.
    OutsideGamma,
    /// `n!^x n^{C(x,2)} / Γ(x) · Π_k Γ(k)/Γ(x+k)`.
    Classic,
}

/// Logarithm of the `n`-th partial Barnes product for `G(x) = G_2(x)`.
pub fn barnes_limit_product(x: f64, n: usize, variant: BarnesVariant) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain { what: "barnes_limit_product", x });
    }
    if n == 0 {
        return Err(Error::InvalidParameter {
            id: "barnes_limit_product".into(),
            reason: "n must be positive".into(),
        });
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let ln_nfact = ln_gamma(nf + 1.0)?;
    let ln_gx = ln_gamma(x)?;
    let mut acc = Neumaier::new();
    acc.add(x * ln_nfact);
    acc.add(binom_real(x, 2) * ln_n);
    match variant {
        BarnesVariant::OutsideGamma => {
            acc.add(-nf * x.ln());
            acc.add(-(nf + 1.0) * ln_gx);
            for k in 1..n {
                let kf = k as f64;
                acc.add((kf - nf) * (x / kf).ln_1p());
            }
        }
        BarnesVariant::Classic => {
            acc.add(-ln_gx);
            // D_k = ln Γ(x+k) - ln Γ(k), D_{k+1} = D_k + ln(1 + x/k)
            let mut d = Neumaier::new();
            d.add(ln_gamma(x + 1.0)?);
            for k in 1..=n {
                acc.add(-d.value());
                d.add((x / k as f64).ln_1p());
            }
        }
    }
    Ok(acc.value())
}

/// Two Richardson steps on the partial products, `(8F(4n) - 6F(2n) + F(n))/3`,
/// removing the `1/n` and `1/n²` error terms; returns the value and
/// `|F(4n) - F(2n)|`. Rounding in the products sets a floor near `1e-9`
/// once `4n` passes about `2^16`, so `n = 2^12` is the sweet spot.
pub fn barnes_limit_extrapolated(x: f64, n: usize, variant: BarnesVariant) -> Result<(f64, f64)> {
    let a = barnes_limit_product(x, n, variant)?;
    let b = barnes_limit_product(x, 2 * n, variant)?;
    let c = barnes_limit_product(x, 4 * n, variant)?;
    Ok(((8.0 * c - 6.0 * b + a) / 3.0, (c - b).abs()))
}

/// `ln K(x) = Σ(x ln x)`.
pub fn ln_k(x: f64, ctrl: &SigmaControl) -> Result<f64> {
    let g = CatalogFunction { kind: Kind::Xlogx };
    Ok(sigma_eval(&g, 0, x, ctrl)?.value)
}

/// `Σ² g` for `g(x) = -1 + (x+1)ln(x+1) - x ln x`, vanishing at 1 and 2.
pub fn psi_minus2_shifted(x: f64, ctrl: &SigmaControl) -> Result<f64> {
    let g = CatalogFunction { kind: Kind::DeltaXlogx };
    Ok(sigma_eval(&g, 1, x, ctrl)?.value)
}

const BASE_CACHE: usize = 8;
static BASE: [OnceLock<f64>; BASE_CACHE] = [const { OnceLock::new() }; BASE_CACHE];

fn estimate_base(k: usize, ctrl: &SigmaControl) -> Result<f64> {
    let f = |x: f64| ln_multiple_gamma(k, x, ctrl).map(|v| v.ln_value);
    let central = |h: f64| -> Result<f64> { Ok((f(1.0 + h)? - f(1.0 - h)?) / (2.0 * h)) };
    let (d1, d2) = (central(1e-2)?, central(5e-3)?);
    Ok((4.0 * d2 - d1) / 3.0)
}

/// `D ln G_k(1)`: `-γ` for `k = 1`, otherwise a Richardson-extrapolated
/// central difference of the sigma route (about 1e-6 accurate). Values for
/// small `k` are computed once with the default control and cached.
pub fn ln_gm_derivative_at_one(k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    if k == 1 {
        return Ok(-EULER_GAMMA);
    }
    let ctrl = SigmaControl::default();
    if k < BASE_CACHE {
        if let Some(v) = BASE[k].get() {
            return Ok(*v);
        }
        let v = estimate_base(k, &ctrl)?;
        return Ok(*BASE[k].get_or_init(|| v));
    }
    estimate_base(k, &ctrl)
}

/// `D ln G_{m+1}(x) = C(x-1,m)(ψ(x) - ψ(m+1)) + Σ_{j=0}^m C(x-1,j) D ln G_{m+1-j}(1)`.
pub fn multiple_gamma_log_derivative(m: usize, x: f64, _ctrl: &SigmaControl) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain { what: "multiple_gamma_log_derivative", x });
    }
    let mut acc = Neumaier::new();
    let c = binom_real(x - 1.0, m);
    if c != 0.0 {
        acc.add(c * (digamma(x)? - digamma(m as f64 + 1.0)?));
    }
    for j in 0..=m {
        acc.add(binom_real(x - 1.0, j) * ln_gm_derivative_at_one(m + 1 - j)?);
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonSeries {
    pub value: f64,
    pub terms: usize,
    /// Set when `terms > 30`: `Δ^k ln(1)` then loses most of its digits.
    pub cancellation_warning: bool,
}

/// Partial sum `Σ_{k=1}^{terms} C(x-1, k+m) Δ^k ln(1)` of the Newton series
/// of `ln G_m`.
pub fn newton_series_ln_gm(m: usize, x: f64, terms: usize) -> Result<NewtonSeries> {
    order_at_least_one(m)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain { what: "newton_series_ln_gm", x });
    }
    let ln = |t: f64| t.ln();
    let cap = terms.max(crate::diff::DEFAULT_ORDER_CAP);
    let mut acc = Neumaier::new();
    for k in 1..=terms {
        let c = binom_real(x - 1.0, k + m);
        if c != 0.0 {
            acc.add(c * forward_diff_capped(&ln, k, 1.0, cap)?);
        }
    }
    Ok(NewtonSeries { value: acc.value(), terms, cancellation_warning: terms > 30 })
}

/// The log function as a catalog entry, for callers outside the crate.
pub fn log_entry() -> CatalogFunction {
    catalog_get("log", &Default::default()).expect("log is in the catalog")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{LN_2, PI};

    fn ctrl() -> SigmaControl {
        SigmaControl::default()
    }

    #[test]
    fn lattice_values() {
        let half = ln_multiple_gamma(1, 0.5, &ctrl()).unwrap();
        assert_abs_diff_eq!(half.ln_value, 0.5 * PI.ln(), epsilon = 1e-10);
        assert_abs_diff_eq!(ln_multiple_gamma(2, 4.0, &ctrl()).unwrap().ln_value, LN_2, epsilon = 1e-12);
        assert_eq!(ln_multiple_gamma(3, 4.0, &ctrl()).unwrap().ln_value, 0.0);
        assert!(ln_multiple_gamma(0, 2.0, &ctrl()).is_err());
    }

    #[test]
    fn recurrence_table() {
        let g2: Vec<f64> = (1..=5).map(|n| ln_multiple_gamma_recurrence(2, n).unwrap().ln_value).collect();
        let want = [0.0, 0.0, 0.0, LN_2, 12f64.ln()];
        for (a, b) in g2.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        for n in 1..=12 {
            let r = ln_multiple_gamma_recurrence(1, n).unwrap().ln_value;
            assert_abs_diff_eq!(r, ln_gamma(n as f64).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn shift_recurrence_between_orders() {
        for m in 1..=3 {
            for x in [0.5, 1.5, 2.5] {
                let up = ln_multiple_gamma(m + 1, x + 1.0, &ctrl()).unwrap().ln_value;
                let here = ln_multiple_gamma(m + 1, x, &ctrl()).unwrap().ln_value;
                let lower = ln_multiple_gamma(m, x, &ctrl()).unwrap().ln_value;
                assert!((up - here - lower).abs() < 1e-8, "m={m} x={x}: {}", up - here - lower);
            }
        }
    }

    #[test]
    fn barnes_products() {
        for v in [BarnesVariant::OutsideGamma, BarnesVariant::Classic] {
            for n in [1, 7, 1 << 12] {
                assert!(barnes_limit_product(1.0, n, v).unwrap().abs() < 1e-9, "{v:?} n={n}");
            }
        }
        let mut prev = f64::INFINITY;
        for k in 8..=16 {
            let e = (barnes_limit_product(4.0, 1 << k, BarnesVariant::OutsideGamma).unwrap() - LN_2).abs();
            assert!(e < prev);
            prev = e;
        }
        let (ext, _) = barnes_limit_extrapolated(4.0, 1 << 12, BarnesVariant::OutsideGamma).unwrap();
        assert_abs_diff_eq!(ext, LN_2, epsilon = 1e-9);
        let a = barnes_limit_product(0.5, 100_000, BarnesVariant::OutsideGamma).unwrap();
        let b = barnes_limit_product(0.5, 100_000, BarnesVariant::Classic).unwrap();
        assert!((a - b).abs() < 1e-4);
    }

    #[test]
    fn barnes_variants_are_the_same_partial_product() {
        // Γ(x+k) = Γ(x) x(x+1)…(x+k-1) turns one product into the other at every n
        for x in [0.5, 1.5, 3.25] {
            for k in [4, 10, 16] {
                let n = 1usize << k;
                let a = barnes_limit_product(x, n, BarnesVariant::OutsideGamma).unwrap();
                let b = barnes_limit_product(x, n, BarnesVariant::Classic).unwrap();
                assert!((a - b).abs() < 1e-9, "x={x} n={n}: {}", a - b);
            }
        }
    }

    #[test]
    fn k_function() {
        assert_eq!(ln_k(1.0, &ctrl()).unwrap(), 0.0);
        assert_abs_diff_eq!(ln_k(3.0, &ctrl()).unwrap(), 4f64.ln(), epsilon = 1e-12);
        let g4 = 3.0 * ln_gamma(4.0).unwrap() - ln_k(4.0, &ctrl()).unwrap();
        assert_abs_diff_eq!(g4, LN_2, epsilon = 1e-12);
        for x in [2.5, 6.0, 0.75] {
            let lhs = ln_multiple_gamma(2, x, &ctrl()).unwrap().ln_value;
            let rhs = (x - 1.0) * ln_gamma(x).unwrap() - ln_k(x, &ctrl()).unwrap();
            assert!((lhs - rhs).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn psi_minus2_lattice() {
        assert_eq!(psi_minus2_shifted(1.0, &ctrl()).unwrap(), 0.0);
        assert_eq!(psi_minus2_shifted(2.0, &ctrl()).unwrap(), 0.0);
        assert_abs_diff_eq!(psi_minus2_shifted(3.0, &ctrl()).unwrap(), -1.0 + 2.0 * LN_2, epsilon = 1e-12);
    }

    #[test]
    fn log_derivative() {
        for x in [0.5, 1.0, 2.3, 9.0] {
            assert_abs_diff_eq!(
                multiple_gamma_log_derivative(0, x, &ctrl()).unwrap(),
                digamma(x).unwrap(),
                epsilon = 1e-13
            );
        }
        assert_abs_diff_eq!(multiple_gamma_log_derivative(0, 1.0, &ctrl()).unwrap(), -EULER_GAMMA, epsilon = 1e-15);
        let h = 1e-4;
        let f = |x: f64| ln_multiple_gamma(2, x, &ctrl()).unwrap().ln_value;
        let fd = (f(2.0 + h) - f(2.0 - h)) / (2.0 * h);
        assert_abs_diff_eq!(multiple_gamma_log_derivative(1, 2.0, &ctrl()).unwrap(), fd, epsilon = 1e-6);
    }

    #[test]
    fn barnes_base_constant() {
        let want = ((2.0 * PI).ln() - 1.0) / 2.0;
        assert_abs_diff_eq!(ln_gm_derivative_at_one(2).unwrap(), want, epsilon = 1e-6);
    }

    #[test]
    fn newton_series() {
        for m in 1..=3 {
            for terms in [1, 5, 25] {
                assert_eq!(newton_series_ln_gm(m, 1.0, terms).unwrap().value, 0.0);
            }
        }
        assert_abs_diff_eq!(newton_series_ln_gm(1, 3.0, 40).unwrap().value, LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(newton_series_ln_gm(2, 2.0, 40).unwrap().value, 0.0, epsilon = 1e-12);
        assert!(newton_series_ln_gm(1, 2.5, 31).unwrap().cancellation_warning);
        assert!(!newton_series_ln_gm(1, 2.5, 30).unwrap().cancellation_warning);
    }
}
