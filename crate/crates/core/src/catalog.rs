//! The registry of admissible input functions, with declared class data,
//! exact differences and known iterated sums.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diff::{binom_real, forward_diff, Probe, RealFn};
use crate::error::{Error, Result};
use crate::malmsten::malmsten_bracket;
use crate::special::closed::{
    sigma_binom_closed, sigma_digamma_closed, sigma_inv_square_closed, sigma_neg_falling_closed,
    sigma_newton_poly, sigma_reciprocal_closed,
};
use crate::special::psi::digamma;
use crate::sum::Neumaier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Declared convexity profile: the eventual sign of `Δ^{q+1} g` by order `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Convexity {
    /// `Δ^{q+1} g` has eventual sign `lead·(-1)^{q-start}` for every `q ≥ start`.
    AllOrdersAlternating { start: i32, lead: Sign },
    /// Every difference of order above `start` has eventual sign `sign`
    /// (or vanishes identically, as for polynomials).
    AllOrders { sign: Sign },
    /// Only `K^q` for `q ≤ order` holds; the declared sign is the one at `order`.
    OrderBounded { order: i32, sign: Sign },
}

impl Convexity {
    /// Declared eventual sign of `Δ^{q+1} g`, if the profile makes a claim.
    pub fn declared_sign(&self, q: i32) -> Option<Sign> {
        match *self {
            Convexity::AllOrdersAlternating { start, lead } => {
                if q < start {
                    None
                } else if (q - start) % 2 == 0 {
                    Some(lead)
                } else {
                    Some(lead.flip())
                }
            }
            Convexity::AllOrders { sign } => Some(sign),
            Convexity::OrderBounded { order, sign } => (q == order).then_some(sign),
        }
    }

    /// Largest `q` with `g ∈ K^q`, `None` for `K^∞`.
    pub fn max_order(&self) -> Option<i32> {
        match *self {
            Convexity::OrderBounded { order, .. } => Some(order),
            _ => None,
        }
    }

    pub fn tag(&self) -> String {
        match *self {
            Convexity::AllOrdersAlternating { start, lead } => {
                format!("all-orders-alternating(from {start}, {})", lead.symbol())
            }
            Convexity::AllOrders { sign: Sign::Plus } => "all-orders-convex".into(),
            Convexity::AllOrders { sign: Sign::Minus } => "all-orders-concave".into(),
            Convexity::OrderBounded { order, sign } => {
                format!("order-bounded({order}, {})", sign.symbol())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum Kind {
    Log,
    Reciprocal,
    InvSquare,
    Xlogx,
    BinomialK { k: usize },
    NewtonPoly { coeffs: Vec<f64> },
    NegFallingN { n: usize },
    Digamma,
    ExpDecayT { t: f64 },
    PiecewiseCounterexample,
    DeltaXlogx,
}

/// Parameters as given on a command line: `k=2,t=1.5,coeffs=0;1;2`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub t: Option<f64>,
    pub coeffs: Option<Vec<f64>>,
}

impl FromStr for Params {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Params::default();
        let bad = |reason: String| Error::InvalidParameter { id: "params".into(), reason };
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("`{item}` is not key=value")))?;
            let value = value.trim();
            match key.trim() {
                "k" => out.k = Some(value.parse().map_err(|_| bad(format!("k = `{value}`")))?),
                "n" => out.n = Some(value.parse().map_err(|_| bad(format!("n = `{value}`")))?),
                "t" => out.t = Some(value.parse().map_err(|_| bad(format!("t = `{value}`")))?),
                "coeffs" => {
                    let cs = value
                        .split(';')
                        .map(|c| c.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad(format!("coeffs = `{value}`")))?;
                    out.coeffs = Some(cs);
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        Ok(out)
    }
}

/// Name and parameter schema of every entry, in listing order.
pub const ENTRIES: &[(&str, &str)] = &[
    ("log", ""),
    ("reciprocal", ""),
    ("inv_square", ""),
    ("xlogx", ""),
    ("binomial_k", "k: integer >= 0"),
    ("newton_poly", "coeffs: list of reals a_0;a_1;... (Newton form)"),
    ("neg_falling_n", "n: integer >= 0"),
    ("digamma", ""),
    ("exp_decay_t", "t: real > 0"),
    ("piecewise_counterexample", ""),
    ("delta_xlogx", ""),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogFunction {
    #[serde(flatten)]
    pub kind: Kind,
}

impl fmt::Display for CatalogFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::BinomialK { k } => write!(f, "binomial_k(k={k})"),
            Kind::NegFallingN { n } => write!(f, "neg_falling_n(n={n})"),
            Kind::ExpDecayT { t } => write!(f, "exp_decay_t(t={t})"),
            Kind::NewtonPoly { coeffs } => write!(f, "newton_poly(coeffs={coeffs:?})"),
            _ => f.write_str(self.id()),
        }
    }
}

/// Looks up a catalog entry. `piecewise` is accepted for the counterexample.
pub fn catalog_get(id: &str, params: &Params) -> Result<CatalogFunction> {
    let invalid = |reason: &str| Error::InvalidParameter { id: id.into(), reason: reason.into() };
    let kind = match id {
        "log" => Kind::Log,
        "reciprocal" => Kind::Reciprocal,
        "inv_square" => Kind::InvSquare,
        "xlogx" => Kind::Xlogx,
        "binomial_k" => Kind::BinomialK { k: params.k.ok_or_else(|| invalid("missing k"))? },
        "newton_poly" => {
            let coeffs = params.coeffs.clone().ok_or_else(|| invalid("missing coeffs"))?;
            if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(invalid("coeffs must be a non-empty list of finite reals"));
            }
            Kind::NewtonPoly { coeffs }
        }
        "neg_falling_n" => Kind::NegFallingN { n: params.n.ok_or_else(|| invalid("missing n"))? },
        "digamma" => Kind::Digamma,
        "exp_decay_t" => {
            let t = params.t.ok_or_else(|| invalid("missing t"))?;
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("t must be positive"));
            }
            Kind::ExpDecayT { t }
        }
        "piecewise_counterexample" | "piecewise" => Kind::PiecewiseCounterexample,
        "delta_xlogx" => Kind::DeltaXlogx,
        other => return Err(Error::UnknownFunction(other.into())),
    };
    Ok(CatalogFunction { kind })
}

/// `ln(1 + 1/x)`, i.e. `Δ ln x`.
fn log_step(x: f64) -> f64 {
    (1.0 / x).ln_1p()
}

/// `Δ(x ln x) = x ln(1 + 1/x) + ln(x + 1)`.
fn xlogx_step(x: f64) -> f64 {
    x * (1.0 / x).ln_1p() + x.ln_1p()
}

fn x_log1p_inv(x: f64) -> f64 {
    x * (1.0 / x).ln_1p()
}

/// `(-1)^j j! / (x(x+1)…(x+j))`, the `j`-th difference of `1/x`.
fn reciprocal_delta(j: usize, x: f64) -> f64 {
    let mag = (1..=j).fold(1.0 / x, |acc, i| acc * i as f64 / (x + i as f64));
    if j.is_multiple_of(2) {
        mag
    } else {
        -mag
    }
}

fn log_delta(j: usize, x: f64) -> Result<f64> {
    match j {
        0 => Ok(x.ln()),
        1 => Ok(log_step(x)),
        _ => forward_diff(&log_step, j - 1, x),
    }
}

fn xlogx_delta(j: usize, x: f64) -> Result<f64> {
    match j {
        0 => Ok(x * x.ln()),
        1 => Ok(xlogx_step(x)),
        _ => Ok(forward_diff(&x_log1p_inv, j - 1, x)? + log_delta(j - 1, x + 1.0)?),
    }
}

impl CatalogFunction {
    pub fn id(&self) -> &'static str {
        match self.kind {
            Kind::Log => "log",
            Kind::Reciprocal => "reciprocal",
            Kind::InvSquare => "inv_square",
            Kind::Xlogx => "xlogx",
            Kind::BinomialK { .. } => "binomial_k",
            Kind::NewtonPoly { .. } => "newton_poly",
            Kind::NegFallingN { .. } => "neg_falling_n",
            Kind::Digamma => "digamma",
            Kind::ExpDecayT { .. } => "exp_decay_t",
            Kind::PiecewiseCounterexample => "piecewise_counterexample",
            Kind::DeltaXlogx => "delta_xlogx",
        }
    }

    /// Smallest `p` with `g ∈ D^p`.
    pub fn p_min(&self) -> usize {
        match &self.kind {
            Kind::Log => 1,
            Kind::Reciprocal | Kind::InvSquare | Kind::NegFallingN { .. } => 0,
            Kind::Xlogx => 2,
            Kind::BinomialK { k } => k + 1,
            Kind::NewtonPoly { coeffs } => newton_degree(coeffs).map_or(0, |d| d + 1),
            Kind::Digamma | Kind::ExpDecayT { .. } | Kind::DeltaXlogx => 1,
            Kind::PiecewiseCounterexample => 0,
        }
    }

    pub fn convexity(&self) -> Convexity {
        use Convexity::*;
        match &self.kind {
            Kind::Log | Kind::Digamma | Kind::ExpDecayT { .. } | Kind::DeltaXlogx => {
                AllOrdersAlternating { start: 0, lead: Sign::Plus }
            }
            Kind::Reciprocal | Kind::InvSquare | Kind::NegFallingN { .. } => {
                AllOrdersAlternating { start: -1, lead: Sign::Plus }
            }
            Kind::Xlogx => AllOrdersAlternating { start: 1, lead: Sign::Plus },
            Kind::BinomialK { .. } => AllOrders { sign: Sign::Plus },
            Kind::NewtonPoly { coeffs } => {
                let lead = newton_degree(coeffs).map_or(0.0, |d| coeffs[d]);
                AllOrders { sign: if lead < 0.0 { Sign::Minus } else { Sign::Plus } }
            }
            Kind::PiecewiseCounterexample => OrderBounded { order: 0, sign: Sign::Minus },
        }
    }

    /// Whether `Σ^{m+1} g` is admitted by the declared class data.
    pub fn admits(&self, m: usize) -> bool {
        match self.convexity().max_order() {
            None => true,
            Some(q) => (self.p_min() + m) as i32 <= q,
        }
    }

    /// Whether `Δ^j g` vanishes identically for large `j` (polynomials).
    pub fn terminating_tail(&self) -> bool {
        matches!(self.kind, Kind::BinomialK { .. } | Kind::NewtonPoly { .. })
    }

    pub fn has_exact_delta(&self) -> bool {
        !matches!(self.kind, Kind::InvSquare | Kind::PiecewiseCounterexample)
    }

    /// `Δ^j g(x)` in closed form, when one is known.
    pub fn exact_delta(&self, j: usize, x: f64) -> Option<Result<f64>> {
        if j == 0 {
            return Some(Ok(self.eval(x)));
        }
        let v = match &self.kind {
            Kind::Log => return Some(log_delta(j, x)),
            Kind::Xlogx => return Some(xlogx_delta(j, x)),
            Kind::DeltaXlogx => return Some(xlogx_delta(j + 1, x)),
            Kind::Reciprocal => reciprocal_delta(j, x),
            Kind::NegFallingN { n } => {
                let mag = (1..=n + j).fold(1.0 / x, |acc, i| acc * i as f64 / (x + i as f64));
                if j.is_multiple_of(2) {
                    mag
                } else {
                    -mag
                }
            }
            Kind::BinomialK { k } => {
                if j <= *k {
                    binom_real(x, k - j)
                } else {
                    0.0
                }
            }
            Kind::NewtonPoly { coeffs } => {
                let mut acc = Neumaier::new();
                for (k, a) in coeffs.iter().enumerate().skip(j) {
                    acc.add(a * binom_real(x, k - j));
                }
                acc.value()
            }
            Kind::Digamma => reciprocal_delta(j - 1, x),
            Kind::ExpDecayT { t } => {
                let d = (-t).exp_m1();
                -((1.0 - x) * t).exp() * d.powi(j as i32)
            }
            Kind::InvSquare | Kind::PiecewiseCounterexample => return None,
        };
        Some(Ok(v))
    }

    /// `Σ^{m+1} g(x)` in closed form, when one is known.
    pub fn known_sigma(&self, m: usize, x: f64) -> Option<Result<f64>> {
        if !(x > 0.0 && x.is_finite()) {
            return Some(Err(Error::Domain { what: "known_sigma", x }));
        }
        Some(match &self.kind {
            Kind::Reciprocal => sigma_reciprocal_closed(m, x),
            Kind::InvSquare => sigma_inv_square_closed(m, x),
            Kind::BinomialK { k } => Ok(sigma_binom_closed(*k, m, x)),
            Kind::NewtonPoly { coeffs } => Ok(sigma_newton_poly(coeffs, m, x)),
            Kind::NegFallingN { n } => sigma_neg_falling_closed(*n, m, x),
            Kind::Digamma => sigma_digamma_closed(m, x),
            Kind::ExpDecayT { t } => Ok(exp_decay_sigma(m, x, *t)),
            Kind::PiecewiseCounterexample if m == 0 => Ok(2.0 - 2.0 * self.eval(x)),
            _ => return None,
        })
    }

    /// Parameter values as `key=value` text, empty when there are none.
    pub fn params_text(&self) -> String {
        match &self.kind {
            Kind::BinomialK { k } => format!("k={k}"),
            Kind::NegFallingN { n } => format!("n={n}"),
            Kind::ExpDecayT { t } => format!("t={t}"),
            Kind::NewtonPoly { coeffs } => {
                let cs: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                format!("coeffs={}", cs.join(";"))
            }
            _ => String::new(),
        }
    }
}

/// Σ^{m+1}_x(1 - e^{(1-x)t}) through the closed bracket, always on its
/// direct branch unless the series is needed for accuracy.
fn exp_decay_sigma(m: usize, x: f64, t: f64) -> f64 {
    malmsten_bracket(m, x, t, crate::malmsten::QuadratureSpec::default().small_t_threshold)
}

fn newton_degree(coeffs: &[f64]) -> Option<usize> {
    coeffs.iter().rposition(|c| *c != 0.0)
}

impl RealFn for CatalogFunction {
    fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Log => x.ln(),
            Kind::Reciprocal => 1.0 / x,
            Kind::InvSquare => 1.0 / (x * x),
            Kind::Xlogx => x * x.ln(),
            Kind::BinomialK { k } => binom_real(x, *k),
            Kind::NewtonPoly { coeffs } => {
                let mut acc = Neumaier::new();
                for (k, a) in coeffs.iter().enumerate() {
                    acc.add(a * binom_real(x, k));
                }
                acc.value()
            }
            Kind::NegFallingN { .. } => reciprocal_delta(0, x) * self.neg_falling_scale(x),
            Kind::Digamma => digamma(x).unwrap_or(f64::NAN),
            Kind::ExpDecayT { t } => -((1.0 - x) * t).exp_m1(),
            Kind::PiecewiseCounterexample => {
                let fl = x.floor();
                let u = x - fl;
                (-fl).exp2() * (2.0 - 2.0 * u + u * u)
            }
            Kind::DeltaXlogx => -1.0 + xlogx_step(x),
        }
    }
}

impl CatalogFunction {
    /// `n!/((x+1)…(x+n))`, so that `g_n(x) = scale/x`.
    fn neg_falling_scale(&self, x: f64) -> f64 {
        match self.kind {
            Kind::NegFallingN { n } => (1..=n).fold(1.0, |acc, i| acc * i as f64 / (x + i as f64)),
            _ => 1.0,
        }
    }
}

/// Exact differences where known, forward differences otherwise.
pub fn eval_delta(cf: &CatalogFunction, j: usize, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain { what: "eval_delta", x });
    }
    let v = match cf.exact_delta(j, x) {
        Some(v) => v?,
        None => forward_diff(cf, j, x)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { x })
    }
}

impl Probe for CatalogFunction {
    fn delta(&self, order: usize, x: f64) -> Result<f64> {
        eval_delta(self, order, x)
    }
}

/// All entries with representative parameters.
pub fn sample_entries() -> Vec<CatalogFunction> {
    let p = |s: &str| s.parse::<Params>().unwrap();
    ENTRIES
        .iter()
        .map(|(id, _)| {
            let params = match *id {
                "binomial_k" => p("k=2"),
                "newton_poly" => p("coeffs=1;-2;3"),
                "neg_falling_n" => p("n=2"),
                "exp_decay_t" => p("t=1"),
                _ => Params::default(),
            };
            catalog_get(id, &params).unwrap()
        })
        .collect()
}
