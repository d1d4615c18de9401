//! Malmstén-type integrals for `ln x` and `ln G_{m+1}(x)`, and the Cauchy
//! repeated-integration formula, evaluated with panelled Gauss–Legendre
//! quadrature.

use serde::{Deserialize, Serialize};

use crate::diff::{binom_real, RealFn};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::sum::{csum, Neumaier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Below this `t` the integrand bracket is summed as a power series in
    /// `e^{-t} - 1`.
    pub small_t_threshold: f64,
    pub split_points: Vec<f64>,
    pub nodes_per_panel: usize,
    /// Upper cut for integrands decaying like `e^{-t}`; slower decay
    /// `e^{-xt}` (x < 1) stretches the cut to `tail_cut / x`.
    pub tail_cut: f64,
    pub target_tol: f64,
    pub execution: Execution,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            small_t_threshold: 0.5,
            split_points: vec![1e-3, 1.0, 10.0],
            nodes_per_panel: 64,
            tail_cut: 45.0,
            target_tol: 1e-10,
            execution: Execution::default(),
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidControl(msg));
        if !(self.small_t_threshold > 0.0) {
            return bad("small_t_threshold must be positive".into());
        }
        if self.nodes_per_panel == 0 {
            return bad("nodes_per_panel must be positive".into());
        }
        if !(self.target_tol > 0.0) {
            return bad("target_tol must be positive".into());
        }
        if self.split_points.iter().any(|s| !(*s > 0.0)) {
            return bad("split points must be positive".into());
        }
        if self.split_points.windows(2).any(|w| w[0] >= w[1]) {
            return bad("split points must be strictly increasing".into());
        }
        if let Some(last) = self.split_points.last() {
            if !(self.tail_cut > *last) {
                return bad(format!("tail_cut {} must exceed the last split {last}", self.tail_cut));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: f64,
    /// Sum over panels of |single panel − two half panels|.
    pub error_estimate: f64,
    pub tolerance_met: bool,
    pub panels: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    fn apply<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Neumaier::new();
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * z));
        }
        half * acc.value()
    }

    /// Halved panels as the value, the coarse/fine gap as its error.
    fn panel<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> (f64, f64) {
        let coarse = self.apply(f, a, b);
        let m = 0.5 * (a + b);
        let fine = self.apply(f, a, m) + self.apply(f, m, b);
        (fine, (fine - coarse).abs())
    }
}

fn integrate_panels<F>(f: &F, edges: &[f64], spec: &QuadratureSpec) -> Result<Quadrature>
where
    F: Fn(f64) -> f64 + Sync,
{
    let rule = Rule::new(spec.nodes_per_panel);
    let parts = par::map_range(edges.len() - 1, spec.execution, |i| {
        rule.panel(f, edges[i], edges[i + 1])
    });
    let value = csum(parts.iter().map(|p| p.0));
    let error_estimate = csum(parts.iter().map(|p| p.1));
    if !value.is_finite() {
        return Err(Error::NonFinite { x: f64::NAN });
    }
    Ok(Quadrature {
        value,
        error_estimate,
        tolerance_met: error_estimate <= spec.target_tol,
        panels: edges.len() - 1,
    })
}

/// Panel edges on `(0, T]`: the split points, then doubling steps to `T`.
fn half_line_edges(spec: &QuadratureSpec, decay: f64) -> Vec<f64> {
    let cut = spec.tail_cut / decay.min(1.0);
    let mut edges = vec![0.0];
    edges.extend(spec.split_points.iter().copied().filter(|s| *s < cut));
    let mut last = *edges.last().unwrap();
    let mut width = if last > 0.0 { last } else { cut };
    while last < cut {
        let next = (last + width).min(cut);
        edges.push(next);
        width *= 2.0;
        last = next;
    }
    edges
}

fn positive_x(what: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, x })
    }
}

/// Closed form of `Σ^{m+1}_x (1 - e^{(1-x)t})`:
/// `C(x-1,m+1) - (e^{(1-x)t}-1)/(e^{-t}-1)^{m+1} + Σ_{j=1}^m C(x-1,j)/(e^{-t}-1)^{m+1-j}`.
///
/// For `t·max(1, |x-1|) < threshold` the equivalent series
/// `-Σ_{i≥1} C(x-1,m+1+i) d^i` with `d = e^{-t} - 1` is summed instead.
pub fn malmsten_bracket(m: usize, x: f64, t: f64, threshold: f64) -> f64 {
    let y = x - 1.0;
    if y >= 0.0 && y <= (m + 1) as f64 && y.fract() == 0.0 {
        return 0.0;
    }
    let d = (-t).exp_m1();
    if t * y.abs().max(1.0) < threshold {
        bracket_series(m, y, d)
    } else {
        bracket_direct(m, y, t, d)
    }
}

fn bracket_direct(m: usize, y: f64, t: f64, d: f64) -> f64 {
    let mut acc = Neumaier::new();
    acc.add(binom_real(y, m + 1));
    acc.add(-(-y * t).exp_m1() / d.powi(m as i32 + 1));
    for j in 1..=m {
        acc.add(binom_real(y, j) / d.powi((m + 1 - j) as i32));
    }
    acc.value()
}

fn bracket_series(m: usize, y: f64, d: f64) -> f64 {
    let mut acc = Neumaier::new();
    let mut c = binom_real(y, m + 2);
    let mut dp = d;
    for i in 1..4000 {
        let term = c * dp;
        acc.add(-term);
        if term.abs() <= 1e-18 * acc.value().abs() && i > 2 {
            break;
        }
        let top = (m + 1 + i) as f64;
        c = c * (y - top) / (top + 1.0);
        dp *= d;
        if c == 0.0 {
            break;
        }
    }
    acc.value()
}

/// The bracket times `e^{-t}/t`, using the default series threshold.
pub fn malmsten_integrand(m: usize, x: f64, t: f64) -> f64 {
    malmsten_integrand_with(m, x, t, QuadratureSpec::default().small_t_threshold)
}

pub fn malmsten_integrand_with(m: usize, x: f64, t: f64, threshold: f64) -> f64 {
    malmsten_bracket(m, x, t, threshold) * (-t).exp() / t
}

/// `ln x = ∫_0^∞ (1 - e^{(1-x)t}) e^{-t}/t dt`.
pub fn malmsten_ln(x: f64, spec: &QuadratureSpec) -> Result<Quadrature> {
    spec.validate()?;
    positive_x("malmsten_ln", x)?;
    let edges = half_line_edges(spec, x);
    integrate_panels(&|t: f64| -(-(x - 1.0) * t).exp_m1() * (-t).exp() / t, &edges, spec)
}

/// `ln G_{m+1}(x) = ∫_0^∞ Σ^{m+1}_x(1 - e^{(1-x)t}) e^{-t}/t dt`; `m = 0`
/// is Malmstén's formula for `ln Γ(x)`.
pub fn malmsten_ln_gm(m: usize, x: f64, spec: &QuadratureSpec) -> Result<Quadrature> {
    spec.validate()?;
    positive_x("malmsten_ln_gm", x)?;
    let threshold = spec.small_t_threshold;
    let edges = half_line_edges(spec, x);
    integrate_panels(&|t: f64| malmsten_integrand_with(m, x, t, threshold), &edges, spec)
}

/// `D^{-(m+1)} g(x) = ∫_1^x (x-t)^m/m! g(t) dt`.
pub fn cauchy_repeated_integral<F: RealFn + ?Sized>(
    g: &F,
    m: usize,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<Quadrature> {
    spec.validate()?;
    positive_x("cauchy_repeated_integral", x)?;
    if x == 1.0 {
        return Ok(Quadrature { value: 0.0, error_estimate: 0.0, tolerance_met: true, panels: 0 });
    }
    let fact: f64 = (1..=m).map(|i| i as f64).product();
    let (lo, hi) = if x < 1.0 { (x, 1.0) } else { (1.0, x) };
    let sign = if x < 1.0 { -1.0 } else { 1.0 };
    let pieces = 8usize;
    let edges: Vec<f64> = (0..=pieces)
        .map(|i| lo + (hi - lo) * i as f64 / pieces as f64)
        .collect();
    let kernel = |t: f64| (x - t).powi(m as i32) / fact * g.eval(t);
    let mut q = integrate_panels(&kernel, &edges, spec)?;
    q.value *= sign;
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::Plain;
    use crate::special::psi::ln_gamma;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (z, w) = gauss_legendre(8);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        // ∫ t^14 = 2/15 on [-1, 1]
        let v: f64 = z.iter().zip(&w).map(|(t, w)| w * t.powi(14)).sum();
        assert_abs_diff_eq!(v, 2.0 / 15.0, epsilon = 1e-14);
    }

    #[test]
    fn bracket_vanishes_at_two_for_m0() {
        for t in [1e-6, 1e-3, 0.3, 0.5, 2.0, 30.0] {
            assert_eq!(malmsten_integrand(0, 2.0, t), 0.0);
        }
    }

    #[test]
    fn bracket_m0_matches_malmsten_display() {
        for (x, t) in [(0.5f64, 0.7f64), (3.5, 1.2), (1.7, 5.0)] {
            let direct = ((x - 1.0) - ((1.0 - x) * t).exp_m1() / (-t).exp_m1()) * (-t).exp() / t;
            assert_abs_diff_eq!(malmsten_integrand(0, x, t), direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn series_and_direct_paths_meet() {
        let t = QuadratureSpec::default().small_t_threshold;
        for m in 0..=3 {
            for x in [0.5, 2.5, 4.0] {
                let y: f64 = x - 1.0;
                let d = (-t).exp_m1();
                let s = bracket_series(m, y, d);
                let r = bracket_direct(m, y, t, d);
                assert!((s - r).abs() < 1e-11, "m={m} x={x}: {s} vs {r}");
            }
        }
    }

    #[test]
    fn small_t_integrand_is_bounded() {
        for i in 1..=100 {
            let t = 1e-3 * i as f64 / 100.0;
            let v = malmsten_integrand(1, 4.0, t);
            assert!(v.is_finite() && v.abs() <= 10.0, "t={t}: {v}");
        }
        let lim = malmsten_integrand(1, 4.0, 1e-9);
        // Σ²_x(1 - e^{(1-x)t}) ≈ t Σ²_x(x-1) = t C(x-1, 3) at leading order
        assert_abs_diff_eq!(lim, binom_real(3.0, 3), epsilon = 1e-6);
    }

    #[test]
    fn ln_examples() {
        let spec = QuadratureSpec::default();
        assert_eq!(malmsten_ln(1.0, &spec).unwrap().value, 0.0);
        assert_abs_diff_eq!(malmsten_ln(2.0, &spec).unwrap().value, 2f64.ln(), epsilon = 1e-10);
        assert_abs_diff_eq!(malmsten_ln(0.5, &spec).unwrap().value, -2f64.ln(), epsilon = 1e-10);
        for x in [0.1, 0.37, 3.0, 17.0, 100.0] {
            let q = malmsten_ln(x, &spec).unwrap();
            assert!((q.value - x.ln()).abs() <= spec.target_tol, "x={x}: {}", q.value - x.ln());
        }
    }

    #[test]
    fn ln_gm_examples() {
        let spec = QuadratureSpec::default();
        let half = malmsten_ln_gm(0, 0.5, &spec).unwrap();
        assert_abs_diff_eq!(half.value, 0.5 * std::f64::consts::PI.ln(), epsilon = 1e-8);
        assert_abs_diff_eq!(malmsten_ln_gm(1, 4.0, &spec).unwrap().value, 2f64.ln(), epsilon = 1e-8);
        for x in [0.3, 1.5, 7.25] {
            assert_abs_diff_eq!(malmsten_ln_gm(0, x, &spec).unwrap().value, ln_gamma(x).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn barnes_integrand_shows_binomial_term() {
        let (x, t): (f64, f64) = (2.75, 0.9);
        let d = (-t).exp_m1();
        let want = (binom_real(x - 1.0, 2) - ((1.0 - x) * t).exp_m1() / (d * d) + (x - 1.0) / d) * (-t).exp() / t;
        assert_abs_diff_eq!(malmsten_integrand(1, x, t), want, epsilon = 1e-13);
    }

    #[test]
    fn node_doubling_is_stable() {
        let spec = QuadratureSpec::default();
        let fine = QuadratureSpec { nodes_per_panel: 128, ..spec.clone() };
        for m in 0..=2 {
            for x in [0.5, 1.5, std::f64::consts::PI, 4.25] {
                let a = malmsten_ln_gm(m, x, &spec).unwrap().value;
                let b = malmsten_ln_gm(m, x, &fine).unwrap().value;
                assert!((a - b).abs() < spec.target_tol, "m={m} x={x}: {}", a - b);
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let seq = QuadratureSpec { execution: Execution::Sequential, ..Default::default() };
        let par = QuadratureSpec { execution: Execution::Parallel, ..Default::default() };
        let a = malmsten_ln_gm(2, 3.3, &seq).unwrap();
        let b = malmsten_ln_gm(2, 3.3, &par).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn cauchy_integral_examples() {
        let spec = QuadratureSpec::default();
        let one = Plain(|_: f64| 1.0);
        assert_eq!(cauchy_repeated_integral(&one, 3, 1.0, &spec).unwrap().value, 0.0);
        for x in [0.25, 2.0, 9.5] {
            assert_abs_diff_eq!(cauchy_repeated_integral(&one, 0, x, &spec).unwrap().value, x - 1.0, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(cauchy_repeated_integral(&one, 1, 3.0, &spec).unwrap().value, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn spec_validation() {
        let bad = QuadratureSpec { split_points: vec![1.0, 0.5], ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec { tail_cut: 5.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(QuadratureSpec::default().validate().is_ok());
    }
}
