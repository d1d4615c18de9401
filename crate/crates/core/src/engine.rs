//! Evaluation of the principal iterated sum Σ^{m+1}g.
//!
//! Three independent routes are provided:
//!
//! * `limit`: the four-sum approximant `f_n^{p+m}[Σ^m g](x)` with the lower
//!   iterates computed bottom-up;
//! * `iterated`: the same limit after collapsing the correction terms with
//!   the Chu–Vandermonde identity, which leaves two weighted sums, one
//!   Newton tail and the lower iterates;
//! * `cauchy`: a single principal sum of the kernel `t ↦ C(x-t-1, m) g(t)`
//!   evaluated at `t = x`.
//!
//! Every route uses the doubling stop `|f_{2n} - f_n| ≤ tolerance`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogFunction, Kind};
use crate::classes::{self, TailMode, TailSign};
use crate::diff::{binom_real, Probe, RealFn};
use crate::error::{Error, Result};
use crate::sum::Neumaier;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SigmaControl {
    pub tolerance: f64,
    /// Newton-tail terms used beyond `p_min`.
    pub p_boost: usize,
    pub n_start: usize,
    pub n_growth: usize,
    pub n_max: usize,
    /// Above this point, the limit routes evaluate at `x - s ∈ (1, 2)` and
    /// shift back with the recurrence.
    pub reduce_above: f64,
}

impl Default for SigmaControl {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            p_boost: 12,
            n_start: 16,
            n_growth: 2,
            n_max: 1 << 22,
            reduce_above: 4.0,
        }
    }
}

impl SigmaControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidControl("tolerance must be positive".into()));
        }
        if self.n_growth < 2 {
            return Err(Error::InvalidControl("n_growth must be at least 2".into()));
        }
        if self.n_start == 0 || self.n_max < self.n_start {
            return Err(Error::InvalidControl(format!(
                "need 0 < n_start ≤ n_max, got {} and {}",
                self.n_start, self.n_max
            )));
        }
        if !(self.reduce_above >= 2.0) {
            return Err(Error::InvalidControl("reduce_above must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Limit,
    Iterated,
    Cauchy,
    ClosedForm,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Limit => "limit",
            Route::Iterated => "iterated",
            Route::Cauchy => "cauchy",
            Route::ClosedForm => "closed-form",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Route {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "limit" => Ok(Route::Limit),
            "iterated" => Ok(Route::Iterated),
            "cauchy" => Ok(Route::Cauchy),
            "closed" | "closed-form" => Ok(Route::ClosedForm),
            other => Err(format!("unknown route `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaResult {
    pub value: f64,
    pub n_used: usize,
    /// `|f_{2n} - f_n|` at the last doubling (0 for exact lattice values).
    pub remainder_estimate: f64,
    pub converged: bool,
    pub route: Route,
    /// Number of Newton-tail terms in the approximant.
    pub p_used: usize,
    /// Last (at most three) `(n, f_n)` pairs.
    pub history: Vec<(usize, f64)>,
    pub warnings: Vec<String>,
}

impl SigmaResult {
    fn exact(value: f64, route: Route) -> Self {
        Self {
            value,
            n_used: 0,
            remainder_estimate: 0.0,
            converged: true,
            route,
            p_used: 0,
            history: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

fn checked(v: f64, x: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { x })
    }
}

/// `Σ^{m+1} g(n) = Σ_{k=1}^{n-1} C(n-k-1, m) g(k)`; zero for `n ≤ m+1`.
pub fn sigma_integer<F: RealFn + ?Sized>(g: &F, m: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain { what: "sigma_integer", x: 0.0 });
    }
    let mut acc = Neumaier::new();
    for k in 1..n.saturating_sub(m) {
        let w = binom_real((n - k - 1) as f64, m);
        acc.add(w * checked(g.eval(k as f64), k as f64)?);
    }
    Ok(acc.value())
}

/// `Σ^{m+1} g(m+1+q) = Σ_{k=1}^q C(m+q, m+k) Δ^{k-1} g(1)`.
pub fn sigma_integer_alt<F: Probe + ?Sized>(g: &F, m: usize, q: usize) -> Result<f64> {
    let mut acc = Neumaier::new();
    for k in 1..=q {
        acc.add(binom_real((m + q) as f64, m + k) * g.delta(k - 1, 1.0)?);
    }
    Ok(acc.value())
}

fn validate_point(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what: "sigma", x })
    }
}

fn integer_point(x: f64) -> Option<usize> {
    (x.fract() == 0.0 && x <= 1e15).then_some(x as usize)
}

/// Refuses `Σ^{m+1} g` when the declared class data exclude it, attaching
/// the empirical convexity check of `Σ^m g` as evidence.
pub fn check_admissible(g: &CatalogFunction, m: usize) -> Result<()> {
    if g.admits(m) {
        return Ok(());
    }
    let evidence = classes::admissibility_evidence(g, m);
    let bound = g.convexity().max_order().unwrap_or(0);
    let mut reason = format!(
        "declared class data {} with p_min = {} admit Σ^{{m+1}} only for m ≤ {}",
        g.convexity().tag(),
        g.p_min(),
        bound - g.p_min() as i32
    );
    if let Some(rep) = &evidence {
        if let Some(k) = rep.k_evidence.first() {
            reason.push_str(&format!(
                "; K-check of {} at order {}: {}",
                rep.subject, k.order, k.sign
            ));
        }
    }
    Err(Error::Inadmissible {
        id: g.to_string(),
        order: m + 1,
        reason,
        evidence: evidence.map(Box::new),
    })
}

/// Newton-tail length at iteration level `level`.
fn tail_terms(g: &CatalogFunction, level: usize, ctrl: &SigmaControl) -> usize {
    if g.terminating_tail() {
        return g.p_min();
    }
    let p = g.p_min() + ctrl.p_boost;
    match g.convexity().max_order() {
        Some(q) => p.min((q - level as i32).max(g.p_min() as i32) as usize),
        None => p,
    }
}

/// `g(k) - g(x+k)` with the cancellation removed where a closed form exists.
fn pair_gap(g: &CatalogFunction, k: f64, x: f64) -> f64 {
    match g.kind {
        Kind::Log => -(x / k).ln_1p(),
        Kind::Xlogx => -((x + k) * (x / k).ln_1p() + x * k.ln()),
        _ => g.eval(k) - g.eval(x + k),
    }
}

/// Drives an approximant `f(n)` through the doubling schedule. Two
/// consecutive increases of `|f_{2n} - f_n|` mean rounding has taken over,
/// and the schedule stops early.
///
/// With a terminating Newton tail the remainder `ρ_n` vanishes identically
/// and `f_{n_min}` is returned as is; larger `n` would only add rounding.
fn drive<F>(ctrl: &SigmaControl, n_min: usize, exact_tail: bool, route: Route, p: usize, mut f: F) -> Result<SigmaResult>
where
    F: FnMut(usize) -> Result<f64>,
{
    if exact_tail {
        let value = f(n_min)?;
        return Ok(SigmaResult {
            value,
            n_used: n_min,
            remainder_estimate: 0.0,
            converged: true,
            route,
            p_used: p,
            history: vec![(n_min, value)],
            warnings: Vec::new(),
        });
    }
    let mut n = ctrl.n_start.max(n_min);
    let mut history = vec![(n, f(n)?)];
    let mut last_est = f64::INFINITY;
    let mut rises = 0;
    loop {
        let next = n * ctrl.n_growth;
        let prev = history.last().unwrap().1;
        let stalled = rises >= 2;
        if stalled || next > ctrl.n_max.max(n_min) {
            let mut res = SigmaResult {
                value: prev,
                n_used: n,
                remainder_estimate: last_est,
                converged: false,
                route,
                p_used: p,
                history,
                warnings: vec![if stalled {
                    "doubling estimate grew twice in a row; rounding noise floor reached".into()
                } else {
                    "n_max reached before the doubling stop".into()
                }],
            };
            trim(&mut res.history);
            return Err(Error::NotConverged(Box::new(res)));
        }
        let cur = f(next)?;
        history.push((next, cur));
        let est = (cur - prev).abs();
        if est <= ctrl.tolerance {
            trim(&mut history);
            return Ok(SigmaResult {
                value: cur,
                n_used: next,
                remainder_estimate: est,
                converged: true,
                route,
                p_used: p,
                history,
                warnings: Vec::new(),
            });
        }
        rises = if est > last_est { rises + 1 } else { 0 };
        last_est = est;
        n = next;
    }
}

fn trim(history: &mut Vec<(usize, f64)>) {
    let len = history.len();
    if len > 3 {
        history.drain(..len - 3);
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Form {
    FourSum,
    Collapsed,
}

/// `f_n` of the four-sum approximant at level `i`, given
/// `lower[l] = Σ^{l+1} g(x)` for `l < i`.
fn four_sum(g: &CatalogFunction, i: usize, x: f64, n: usize, p: usize, lower: &[f64]) -> Result<f64> {
    let mut acc = Neumaier::new();
    // S1 - S2
    acc.add(-binom_real((n - 1) as f64, i) * g.eval(x));
    for k in 1..n {
        let w = binom_real((n - k - 1) as f64, i);
        if w != 0.0 {
            acc.add(w * pair_gap(g, k as f64, x));
        }
    }
    // S3: Δ^j Σ^{i+1} g(n)
    for j in 1..=p + i {
        let c = binom_real(x, j);
        let d = if j <= i {
            sigma_integer(g, i - j, n)?
        } else if j == i + 1 {
            g.eval(n as f64)
        } else {
            g.delta(j - i - 1, n as f64)?
        };
        acc.add(c * d);
    }
    // S4
    for j in 1..=i {
        acc.add(-binom_real(n as f64, j) * lower[i - j]);
    }
    checked(acc.value(), x)
}

/// `f_n` of the collapsed form at level `i`.
fn collapsed(g: &CatalogFunction, i: usize, x: f64, n: usize, p: usize, lower: &[f64]) -> Result<f64> {
    let mut acc = Neumaier::new();
    for k in 1..n {
        let kf = k as f64;
        acc.add(binom_real(x + (n - k - 1) as f64, i) * g.eval(kf));
    }
    for k in 0..n {
        let w = binom_real((n - k - 1) as f64, i);
        if w != 0.0 {
            acc.add(-w * g.eval(x + k as f64));
        }
    }
    for j in 1..=p {
        acc.add(binom_real(x, i + j) * g.delta(j - 1, n as f64)?);
    }
    for j in 1..=i {
        acc.add(-binom_real(n as f64, j) * lower[i - j]);
    }
    checked(acc.value(), x)
}

struct Levels {
    values: Vec<f64>,
    results: Vec<SigmaResult>,
}

/// `Σ^{i+1} g(x)` for `i = 0..=m`, bottom-up.
fn levels(g: &CatalogFunction, m: usize, x: f64, ctrl: &SigmaControl, form: Form) -> Result<Levels> {
    let route = if form == Form::FourSum { Route::Limit } else { Route::Iterated };
    let mut values = Vec::with_capacity(m + 1);
    let mut results = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let p = tail_terms(g, i, ctrl);
        let lower = values.clone();
        let res = drive(ctrl, i + p + 2, g.terminating_tail(), route, p, |n| match form {
            Form::FourSum => four_sum(g, i, x, n, p, &lower),
            Form::Collapsed => collapsed(g, i, x, n, p, &lower),
        })?;
        values.push(res.value);
        results.push(res);
    }
    Ok(Levels { values, results })
}

/// Evaluates `Σ^{i+1} g(x0)` for `i = 0..=m` with `values`, at `x` itself
/// when `x ≤ reduce_above` and otherwise at `x0 = x - s ∈ [1, 2)`, then
/// shifts back with
/// `Σ^{m+1}g(x0+s) = Σ_j C(s,j) Σ^{m-j+1}g(x0) + Σ_{k<s} C(s-k-1,m) g(x0+k)`.
fn with_reduction<V>(g: &CatalogFunction, m: usize, x: f64, ctrl: &SigmaControl, values: V) -> Result<SigmaResult>
where
    V: Fn(f64) -> Result<Levels>,
{
    if x <= ctrl.reduce_above {
        return Ok(values(x)?.results.pop().unwrap());
    }
    let s = x.floor() - 1.0;
    let x0 = x - s;
    let lv = values(x0)?;
    let su = s as usize;
    let mut acc = Neumaier::new();
    let mut est = 0.0;
    for j in 0..=m {
        let c = binom_real(s, j);
        acc.add(c * lv.values[m - j]);
        est += c.abs() * lv.results[m - j].remainder_estimate;
    }
    for k in 0..su {
        let w = binom_real((su - k - 1) as f64, m);
        if w != 0.0 {
            acc.add(w * g.eval(x0 + k as f64));
        }
    }
    let top = &lv.results[m];
    let mut warnings = top.warnings.clone();
    if est > ctrl.tolerance {
        warnings.push(format!(
            "shifted back from x0 = {x0}; propagated remainder {est:.3e} exceeds tolerance"
        ));
    }
    Ok(SigmaResult {
        value: checked(acc.value(), x)?,
        n_used: top.n_used,
        remainder_estimate: est,
        converged: true,
        route: top.route,
        p_used: top.p_used,
        history: top.history.clone(),
        warnings,
    })
}

fn eval_limit(g: &CatalogFunction, m: usize, x: f64, ctrl: &SigmaControl, form: Form) -> Result<SigmaResult> {
    ctrl.validate()?;
    validate_point(x)?;
    check_admissible(g, m)?;
    let route = if form == Form::FourSum { Route::Limit } else { Route::Iterated };
    if let Some(n) = integer_point(x) {
        return Ok(SigmaResult::exact(sigma_integer(g, m, n)?, route));
    }
    with_reduction(g, m, x, ctrl, |at| levels(g, m, at, ctrl, form))
}

/// Σ^{m+1} g(x) by the four-sum limit.
pub fn sigma_eval(g: &CatalogFunction, m: usize, x: f64, ctrl: &SigmaControl) -> Result<SigmaResult> {
    eval_limit(g, m, x, ctrl, Form::FourSum)
}

/// Σ^{m+1} g(x) by the collapsed (Chu–Vandermonde) limit.
pub fn sigma_eval_iterated(g: &CatalogFunction, m: usize, x: f64, ctrl: &SigmaControl) -> Result<SigmaResult> {
    eval_limit(g, m, x, ctrl, Form::Collapsed)
}

/// `t ↦ C(c - t, m) g(t + shift)` with its differences in `t` from the
/// Leibniz rule `Δ^r(uv)(t) = Σ_i C(r,i) Δ^i u(t) Δ^{r-i} v(t+i)`.
struct Kernel<'a> {
    g: &'a CatalogFunction,
    c: f64,
    m: usize,
    shift: f64,
}

impl RealFn for Kernel<'_> {
    fn eval(&self, t: f64) -> f64 {
        binom_real(self.c - t, self.m) * self.g.eval(t + self.shift)
    }
}

impl Probe for Kernel<'_> {
    fn delta(&self, order: usize, t: f64) -> Result<f64> {
        let mut acc = Neumaier::new();
        let mut cr = 1.0;
        for i in 0..=order.min(self.m) {
            // Δ^i_t C(c - t, m) = (-1)^i C(c - t - i, m - i)
            let u = binom_real(self.c - t - i as f64, self.m - i);
            let v = self.g.delta(order - i, t + i as f64 + self.shift)?;
            let term = cr * u * v;
            acc.add(if i % 2 == 0 { term } else { -term });
            cr = cr * (order - i) as f64 / (i + 1) as f64;
        }
        Ok(acc.value())
    }
}

/// The principal sum `Σ_t h(t)` of a kernel at the point `at`.
fn kernel_sum(h: &Kernel<'_>, at: f64, p: usize, ctrl: &SigmaControl, route: Route) -> Result<SigmaResult> {
    if let Some(n) = integer_point(at) {
        return Ok(SigmaResult::exact(sigma_integer(h, 0, n)?, route));
    }
    drive(ctrl, p + 2, h.g.terminating_tail(), route, p, |n| {
        let mut acc = Neumaier::new();
        for k in 1..n {
            acc.add(h.eval(k as f64));
        }
        for k in 0..n {
            acc.add(-h.eval(at + k as f64));
        }
        for j in 1..=p {
            acc.add(binom_real(at, j) * h.delta(j - 1, n as f64)?);
        }
        checked(acc.value(), at)
    })
}

/// Sign of `Δ^{q+1}` of the kernel over a short window past `n_start`,
/// where `q = p_min + m` is the convexity order the kernel needs.
fn kernel_admissibility(h: &Kernel<'_>, q: usize, ctrl: &SigmaControl) -> Option<String> {
    let start = (ctrl.n_start as f64).max(h.c + 2.0);
    let values: Vec<f64> = (0..200)
        .map(|i| h.delta(q + 1, start + i as f64).unwrap_or(f64::NAN))
        .collect();
    match classes::tail_sign(&values, TailMode::Tail75) {
        TailSign::Positive | TailSign::Negative | TailSign::Zero => None,
        other => Some(format!(
            "kernel admissibility inconclusive: Δ^{} of the kernel is {other} on [{start}, {}]",
            q + 1,
            start + 199.0
        )),
    }
}

fn cauchy_level(g: &CatalogFunction, i: usize, x: f64, ctrl: &SigmaControl) -> Result<SigmaResult> {
    let h = Kernel { g, c: x - 1.0, m: i, shift: 0.0 };
    let p = tail_terms(g, 0, ctrl) + i;
    let mut res = kernel_sum(&h, x, p, ctrl, Route::Cauchy)?;
    if let Some(w) = kernel_admissibility(&h, g.p_min() + i, ctrl) {
        res.warnings.push(w);
    }
    Ok(res)
}

/// Σ^{m+1} g(x) as the single principal sum `[Σ_t C(x-t-1, m) g(t)]_{t=x}`.
/// Large `x` is reduced as in the limit routes, with every level taken from
/// its own kernel sum.
pub fn sigma_via_cauchy(g: &CatalogFunction, m: usize, x: f64, ctrl: &SigmaControl) -> Result<SigmaResult> {
    ctrl.validate()?;
    validate_point(x)?;
    check_admissible(g, m)?;
    if let Some(n) = integer_point(x) {
        return Ok(SigmaResult::exact(sigma_integer(g, m, n)?, Route::Cauchy));
    }
    if x <= ctrl.reduce_above {
        return cauchy_level(g, m, x, ctrl);
    }
    with_reduction(g, m, x, ctrl, |at| {
        let results = (0..=m).map(|i| cauchy_level(g, i, at, ctrl)).collect::<Result<Vec<_>>>()?;
        Ok(Levels { values: results.iter().map(|r| r.value).collect(), results })
    })
}

/// The catalog's closed form, when it has one.
pub fn sigma_closed(g: &CatalogFunction, m: usize, x: f64) -> Result<Option<SigmaResult>> {
    validate_point(x)?;
    check_admissible(g, m)?;
    match g.known_sigma(m, x) {
        None => Ok(None),
        Some(v) => Ok(Some(SigmaResult::exact(v?, Route::ClosedForm))),
    }
}

/// Dispatch by route. `ClosedForm` fails with an invalid-parameter error
/// when the entry has no closed form.
pub fn sigma_route(g: &CatalogFunction, m: usize, x: f64, route: Route, ctrl: &SigmaControl) -> Result<SigmaResult> {
    match route {
        Route::Limit => sigma_eval(g, m, x, ctrl),
        Route::Iterated => sigma_eval_iterated(g, m, x, ctrl),
        Route::Cauchy => sigma_via_cauchy(g, m, x, ctrl),
        Route::ClosedForm => sigma_closed(g, m, x)?.ok_or_else(|| Error::InvalidParameter {
            id: g.to_string(),
            reason: format!("no closed form for Σ^{}", m + 1),
        }),
    }
}

/// Both sides of `f(x+a) = Σ_{j≤m} C(x,j) Δ^j f(a) + [Σ_t C(x-t, m) g(t+a-1)]_{t=x+1}`
/// for `f = Σ^{m+1} g`.
pub fn verify_taylor_sigma(
    g: &CatalogFunction,
    m: usize,
    a: f64,
    x: f64,
    ctrl: &SigmaControl,
) -> Result<(f64, f64)> {
    if !(a > 0.0) {
        return Err(Error::Domain { what: "verify_taylor_sigma base point", x: a });
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain { what: "verify_taylor_sigma", x });
    }
    let f = |y: f64| sigma_eval(g, m, y, ctrl).map(|r| r.value);
    let lhs = f(x + a)?;
    let fa: Vec<f64> = (0..=m).map(|j| f(a + j as f64)).collect::<Result<_>>()?;
    let mut rhs = Neumaier::new();
    for j in 0..=m {
        // Δ^j f(a) from the values f(a), …, f(a+j)
        let row = crate::diff::binom_row(j);
        let mut d = Neumaier::new();
        for (i, c) in row.iter().enumerate() {
            let v = c * fa[i];
            d.add(if (j - i) % 2 == 0 { v } else { -v });
        }
        rhs.add(binom_real(x, j) * d.value());
    }
    let h = Kernel { g, c: x, m, shift: a - 1.0 };
    let p = tail_terms(g, 0, ctrl) + m;
    rhs.add(kernel_sum(&h, x + 1.0, p, ctrl, Route::Cauchy)?.value);
    Ok((lhs, rhs.value()))
}

/// `Σ_k C(m+1,k)(-1)^{m+1-k} Σ^{m+1}g(x+k)`, which should return `g(x)`.
pub fn delta_sigma_roundtrip(g: &CatalogFunction, m: usize, x: f64, ctrl: &SigmaControl) -> Result<f64> {
    let row = crate::diff::binom_row(m + 1);
    let mut acc = Neumaier::new();
    for (k, c) in row.iter().enumerate() {
        let v = c * sigma_eval(g, m, x + k as f64, ctrl)?.value;
        acc.add(if (m + 1 - k).is_multiple_of(2) { v } else { -v });
    }
    Ok(acc.value())
}

/// `Σ^s g` as a function, for difference and class checks. Differences use
/// `Δ^j Σ^s g = Σ^{s-j} g` for `j ≤ s` and `Δ^{j-s} g` beyond.
pub struct SigmaView<'a> {
    pub g: &'a CatalogFunction,
    pub s: usize,
    pub ctrl: SigmaControl,
}

impl SigmaView<'_> {
    fn value_at(&self, s: usize, x: f64) -> Result<f64> {
        if s == 0 {
            return Ok(self.g.eval(x));
        }
        if let Some(v) = self.g.known_sigma(s - 1, x) {
            return v;
        }
        Ok(sigma_eval(self.g, s - 1, x, &self.ctrl)?.value)
    }
}

impl RealFn for SigmaView<'_> {
    fn eval(&self, x: f64) -> f64 {
        self.value_at(self.s, x).unwrap_or(f64::NAN)
    }
}

impl Probe for SigmaView<'_> {
    fn delta(&self, order: usize, x: f64) -> Result<f64> {
        if order >= self.s {
            self.g.delta(order - self.s, x)
        } else {
            self.value_at(self.s - order, x)
        }
    }
}
