//! Closed forms for Σ^{m+1} of polynomials, reciprocal powers, the negative
//! falling factorial and digamma.

use crate::diff::binom_real;
use crate::error::{Error, Result};
use crate::special::psi::{digamma, harmonic, trigamma, PI_SQUARED_OVER_SIX};
use crate::sum::Neumaier;

fn positive(what: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, x })
    }
}

/// Whether `x` is one of the points `1, …, m+1` where every Σ^{m+1}g vanishes.
pub fn on_vanishing_lattice(m: usize, x: f64) -> bool {
    x.fract() == 0.0 && x >= 1.0 && x <= (m + 1) as f64
}

/// Σ^{m+1} C(x,k): `C(x-1, m+1)` for `k = 0`, otherwise `C(x, k+m+1)`.
pub fn sigma_binom_closed(k: usize, m: usize, x: f64) -> f64 {
    if k == 0 {
        binom_real(x - 1.0, m + 1)
    } else {
        binom_real(x, k + m + 1)
    }
}

/// Σ^{m+1} of the polynomial `Σ_k a_k C(x,k)` given by its Newton
/// coefficients `a_k = Δ^k P(0)`.
pub fn sigma_newton_poly(coeffs: &[f64], m: usize, x: f64) -> f64 {
    let mut acc = Neumaier::new();
    for (k, a) in coeffs.iter().enumerate() {
        if *a != 0.0 {
            acc.add(a * sigma_binom_closed(k, m, x));
        }
    }
    acc.value()
}

/// Σ^{m+1}(1/x) = C(x-1, m)(ψ(x) - ψ(m+1)).
pub fn sigma_reciprocal_closed(m: usize, x: f64) -> Result<f64> {
    positive("sigma_reciprocal_closed", x)?;
    let c = binom_real(x - 1.0, m);
    if c == 0.0 {
        return Ok(0.0);
    }
    Ok(c * (digamma(x)? - digamma(m as f64 + 1.0)?))
}

/// Σ^{m+1}ψ(x) = C(x-1, m+1)(ψ(x) - ψ(m+2) + ψ(1)).
pub fn sigma_digamma_closed(m: usize, x: f64) -> Result<f64> {
    positive("sigma_digamma_closed", x)?;
    let c = binom_real(x - 1.0, m + 1);
    if c == 0.0 {
        return Ok(0.0);
    }
    Ok(c * (digamma(x)? - digamma(m as f64 + 2.0)? + digamma(1.0)?))
}

/// d/dx C(x-1, m) = (1/m!) Σ_i Π_{l≠i} (x-l), with `i, l` in `1..=m`.
fn binom_shift_derivative(m: usize, x: f64) -> f64 {
    let mut acc = Neumaier::new();
    for i in 1..=m {
        let mut prod = 1.0;
        for l in 1..=m {
            if l != i {
                prod *= (x - l as f64) / l as f64;
            }
        }
        acc.add(prod / i as f64);
    }
    acc.value()
}

/// Σ^{m+1}(1/x²).
///
/// The factor `C(x-1,m)(ψ(x) - ψ(x-m))` equals `Σ_{i≤m} C(x-1,m)/(x-i)`,
/// the derivative of `C(x-1,m)`, which is used directly so that the value is
/// finite and exact at `x ∈ {1, …, m}`.
pub fn sigma_inv_square_closed(m: usize, x: f64) -> Result<f64> {
    positive("sigma_inv_square_closed", x)?;
    if on_vanishing_lattice(m, x) {
        return Ok(0.0);
    }
    let c = binom_real(x - 1.0, m);
    let dc = binom_shift_derivative(m, x);
    let mut acc = Neumaier::new();
    if dc != 0.0 {
        acc.add(-dc * (digamma(x)? - digamma(m as f64 + 1.0)?));
    }
    if c != 0.0 {
        acc.add(-c * (trigamma(x)? - PI_SQUARED_OVER_SIX));
    }
    for j in 1..=m {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        // ψ(1) - ψ(j+1) = -H_j
        acc.add(binom_real(x - 1.0, m - j) * sign / j as f64 * -harmonic(j));
    }
    Ok(acc.value())
}

/// Σ^{m+1} of `g_n(x) = n!/(x(x+1)…(x+n))` via its partial fractions
/// `g_n = Σ_k C(n,k)(-1)^k/(x+k)`.
pub fn sigma_neg_falling_closed(n: usize, m: usize, x: f64) -> Result<f64> {
    positive("sigma_neg_falling_closed", x)?;
    if on_vanishing_lattice(m, x) {
        return Ok(0.0);
    }
    let mut acc = Neumaier::new();
    let mut cnk = 1.0;
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let term = if m == 0 {
            digamma(x + k as f64)? - digamma(k as f64 + 1.0)?
        } else {
            shifted_reciprocal_sigma(k, m, x)?
        };
        acc.add(sign * cnk * term);
        cnk = cnk * (n - k) as f64 / (k + 1) as f64;
    }
    Ok(acc.value())
}

/// Σ^{m+1}_x of `1/(x+k)`, normalised to vanish at `x = 1..=m+1`:
/// `C(x+k-1,m)(ψ(x+k) - ψ(m+1)) - Σ_j C(x-1,j) C(k,m-j)(ψ(k+1) - ψ(m+1-j))`.
fn shifted_reciprocal_sigma(k: usize, m: usize, x: f64) -> Result<f64> {
    let kf = k as f64;
    let mut acc = Neumaier::new();
    let c = binom_real(x + kf - 1.0, m);
    if c != 0.0 {
        acc.add(c * (digamma(x + kf)? - digamma(m as f64 + 1.0)?));
    }
    for j in 0..=m {
        let ckj = binom_real(kf, m - j);
        if ckj == 0.0 {
            continue;
        }
        // ψ(k+1) - ψ(m+1-j) = H_k - H_{m-j}
        acc.add(-binom_real(x - 1.0, j) * ckj * (harmonic(k) - harmonic(m - j)));
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::psi::EULER_GAMMA;

    /// Brute lattice value Σ_{k=1}^{n-1} C(n-k-1, m) g(k).
    fn lattice(g: impl Fn(f64) -> f64, m: usize, n: usize) -> f64 {
        (1..n)
            .map(|k| binom_real((n - k - 1) as f64, m) * g(k as f64))
            .sum()
    }

    fn neg_falling(n: usize, x: f64) -> f64 {
        (1..=n).fold(1.0 / x, |acc, i| acc * i as f64 / (x + i as f64))
    }

    #[test]
    fn binomial_examples() {
        for x in [0.5, 2.0, 3.7] {
            assert_eq!(sigma_binom_closed(0, 2, x), binom_real(x - 1.0, 3));
            assert_eq!(sigma_binom_closed(1, 0, x), binom_real(x, 2));
        }
        assert_eq!(sigma_binom_closed(2, 1, 5.0), 5.0);
        assert_eq!(lattice(|k| binom_real(k, 2), 1, 5), 5.0);
    }

    #[test]
    fn newton_poly_examples() {
        for x in [0.25, 3.0, 7.5] {
            assert!((sigma_newton_poly(&[1.0], 0, x) - (x - 1.0)).abs() < 1e-15);
            for m in 0..3 {
                assert_eq!(sigma_newton_poly(&[0.0, 1.0], m, x), binom_real(x, m + 2));
            }
        }
        // x² = C(x,1) + 2C(x,2)
        assert_eq!(sigma_newton_poly(&[0.0, 1.0, 2.0], 0, 4.0), 14.0);
    }

    #[test]
    fn newton_poly_degree() {
        // degree q+m+1 ⇒ the (q+m+2)-th difference vanishes, the previous does not
        let coeffs = [1.0, -2.0, 0.5];
        let (q, m) = (2usize, 1usize);
        let f = |x: f64| sigma_newton_poly(&coeffs, m, x);
        let top = crate::diff::forward_diff(&f, q + m + 1, 0.3).unwrap();
        let next = crate::diff::forward_diff(&f, q + m + 2, 0.3).unwrap();
        assert!((top - 0.5).abs() < 1e-10);
        assert!(next.abs() < 1e-10);
    }

    #[test]
    fn reciprocal_examples() {
        assert!((sigma_reciprocal_closed(0, 3.0).unwrap() - 1.5).abs() < 1e-14);
        assert_eq!(sigma_reciprocal_closed(1, 2.0).unwrap(), 0.0);
        assert!((sigma_reciprocal_closed(1, 3.0).unwrap() - 1.0).abs() < 1e-14);
        for m in 0..4 {
            for n in 1..=10 {
                let want = lattice(|k| 1.0 / k, m, n);
                let got = sigma_reciprocal_closed(m, n as f64).unwrap();
                assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn digamma_examples() {
        assert_eq!(sigma_digamma_closed(2, 1.0).unwrap(), 0.0);
        assert!((sigma_digamma_closed(0, 2.0).unwrap() + EULER_GAMMA).abs() < 1e-14);
        assert!((sigma_digamma_closed(1, 3.0).unwrap() + EULER_GAMMA).abs() < 1e-14);
        for m in 0..4 {
            for n in 1..=10 {
                let want = lattice(|k| digamma(k).unwrap(), m, n);
                let got = sigma_digamma_closed(m, n as f64).unwrap();
                assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn inv_square_examples() {
        for x in [0.5, 1.0, 2.25, 9.0] {
            let want = PI_SQUARED_OVER_SIX - trigamma(x).unwrap();
            assert!((sigma_inv_square_closed(0, x).unwrap() - want).abs() < 1e-14);
        }
        assert!((sigma_inv_square_closed(0, 2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((sigma_inv_square_closed(1, 3.0).unwrap() - 1.0).abs() < 1e-14);
        for m in 0..4 {
            for n in 1..=10 {
                let want = lattice(|k| 1.0 / (k * k), m, n);
                let got = sigma_inv_square_closed(m, n as f64).unwrap();
                assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn inv_square_matches_digamma_difference_form_off_the_lattice() {
        // direct form with ψ(x) - ψ(x-m), valid where x - m is not a pole
        for m in 1..4usize {
            for x in [0.5, 1.5, 2.75, 6.5] {
                let c = binom_real(x - 1.0, m);
                let pdiff: f64 = (1..=m).map(|i| 1.0 / (x - i as f64)).sum();
                let psi = digamma(x).unwrap() - digamma(m as f64 + 1.0).unwrap();
                let mut direct = -c * (pdiff * psi + trigamma(x).unwrap() - PI_SQUARED_OVER_SIX);
                for j in 1..=m {
                    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                    direct += binom_real(x - 1.0, m - j) * sign / j as f64
                        * (digamma(1.0).unwrap() - digamma(j as f64 + 1.0).unwrap());
                }
                let got = sigma_inv_square_closed(m, x).unwrap();
                assert!((got - direct).abs() < 1e-12 * direct.abs().max(1.0), "m={m} x={x}");
            }
        }
    }

    #[test]
    fn neg_falling_examples() {
        for m in 0..3 {
            for x in [0.5, 2.0, 3.75] {
                let a = sigma_neg_falling_closed(0, m, x).unwrap();
                let b = sigma_reciprocal_closed(m, x).unwrap();
                assert!((a - b).abs() < 1e-13, "m={m} x={x}");
            }
        }
        assert!((sigma_neg_falling_closed(1, 0, 2.0).unwrap() - 0.5).abs() < 1e-14);
        for n in 0..4 {
            for m in 0..4 {
                assert_eq!(sigma_neg_falling_closed(n, m, (m + 1) as f64).unwrap().abs(), 0.0);
                for q in 1..=10 {
                    let want = lattice(|k| neg_falling(n, k), m, q);
                    let got = sigma_neg_falling_closed(n, m, q as f64).unwrap();
                    assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "n={n} m={m} q={q}");
                }
            }
        }
    }

    #[test]
    fn neg_falling_general_branch_reduces_at_m0() {
        for n in 0..5 {
            for x in [0.3, 1.7, 5.0] {
                let simplified = sigma_neg_falling_closed(n, 0, x).unwrap();
                let mut general = Neumaier::new();
                let mut c = 1.0;
                for k in 0..=n {
                    let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                    general.add(s * c * shifted_reciprocal_sigma(k, 0, x).unwrap());
                    c = c * (n - k) as f64 / (k + 1) as f64;
                }
                assert!((simplified - general.value()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(sigma_reciprocal_closed(0, 0.0).is_err());
        assert!(sigma_inv_square_closed(1, -2.0).is_err());
        assert!(sigma_neg_falling_closed(1, 1, f64::NAN).is_err());
    }
}
