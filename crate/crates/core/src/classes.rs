//! Sampled evidence for the classes `D^p` (differences vanish at infinity)
//! and `K^q` (eventual sign of the `(q+1)`-th differences).
//!
//! Everything here is evidence on a finite window, never a proof.

use std::fmt;

use serde::Serialize;

use crate::catalog::{CatalogFunction, Sign};
use crate::diff::{divided_diff, GridWindow, Probe};
use crate::engine::{SigmaControl, SigmaView};
use crate::par::{self, Execution};

/// `|Δ^p g|` must fall below this at the end of the window.
pub const D_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailSign {
    #[serde(rename = "eventually +")]
    Positive,
    #[serde(rename = "eventually -")]
    Negative,
    /// Identically zero on the tail; consistent with either sign.
    #[serde(rename = "vanishing")]
    Zero,
    #[serde(rename = "mixed")]
    Mixed,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl fmt::Display for TailSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailSign::Positive => "eventually +",
            TailSign::Negative => "eventually -",
            TailSign::Zero => "vanishing",
            TailSign::Mixed => "mixed",
            TailSign::Inconclusive => "inconclusive",
        })
    }
}

impl TailSign {
    pub fn consistent_with(self, sign: Sign) -> bool {
        matches!(
            (self, sign),
            (TailSign::Zero, _) | (TailSign::Positive, Sign::Plus) | (TailSign::Negative, Sign::Minus)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    /// Constant sign over the last 75% of the samples.
    Tail75,
    /// Constant sign over the last 50 samples.
    Strict50,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    /// `Δ^{q+1} g(x)` on the unit lattice.
    Unit,
    /// Divided difference over `x, x+h, …, x+(q+1)h`.
    Spacing(f64),
}

/// Classifies the sign of the tail of `values`.
pub fn tail_sign(values: &[f64], mode: TailMode) -> TailSign {
    if values.is_empty() {
        return TailSign::Inconclusive;
    }
    let tail = match mode {
        TailMode::Tail75 => &values[values.len() / 4..],
        TailMode::Strict50 => &values[values.len().saturating_sub(50)..],
    };
    if tail.iter().any(|v| !v.is_finite()) {
        return TailSign::Inconclusive;
    }
    let pos = tail.iter().any(|v| *v > 0.0);
    let neg = tail.iter().any(|v| *v < 0.0);
    match (pos, neg) {
        (false, false) => TailSign::Zero,
        (true, false) => TailSign::Positive,
        (false, true) => TailSign::Negative,
        (true, true) => TailSign::Mixed,
    }
}

/// Smallest `p ≤ p_max` with `|Δ^p g|` below [`D_THRESHOLD`] at the end of
/// the window and non-increasing over its last decade.
pub fn check_d<P: Probe + ?Sized>(g: &P, p_max: usize, window: &GridWindow) -> Option<usize> {
    let end = window.end();
    let decade: Vec<f64> = window.points().filter(|x| *x >= end / 10.0).collect();
    (0..=p_max).find(|&p| {
        let small = matches!(g.delta(p, end), Ok(v) if v.abs() < D_THRESHOLD);
        if !small {
            return false;
        }
        let mags: Option<Vec<f64>> = decade.iter().map(|x| g.delta(p, *x).ok().map(f64::abs)).collect();
        match mags {
            Some(m) => m.windows(2).all(|w| w[1] <= w[0]),
            None => false,
        }
    })
}

/// Sampled `(q+1)`-th differences over the window.
pub fn k_samples<P: Probe + ?Sized>(
    g: &P,
    q: i32,
    window: &GridWindow,
    stencil: Stencil,
    exec: Execution,
) -> Vec<f64> {
    let order = (q + 1).max(0) as usize;
    let points: Vec<f64> = window.points().collect();
    par::map(&points, exec, |&x| {
        let v = match stencil {
            Stencil::Unit => g.delta(order, x),
            Stencil::Spacing(h) => {
                let nodes: Vec<f64> = (0..=order).map(|i| x + i as f64 * h).collect();
                divided_diff(g, &nodes)
            }
        };
        v.unwrap_or(f64::NAN)
    })
}

/// Eventual sign of the `(q+1)`-th differences; windows shorter than 50
/// samples are inconclusive.
pub fn check_k<P: Probe + ?Sized>(
    g: &P,
    q: i32,
    window: &GridWindow,
    stencil: Stencil,
    mode: TailMode,
) -> TailSign {
    if window.count < 50 || q < -1 {
        return TailSign::Inconclusive;
    }
    tail_sign(&k_samples(g, q, window, stencil, Execution::default()), mode)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KEvidence {
    pub order: i32,
    pub sign: TailSign,
    pub declared: Option<Sign>,
    pub consistent: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub subject: String,
    pub p_d_estimate: Option<usize>,
    pub p_max: usize,
    pub d_window: GridWindow,
    pub k_evidence: Vec<KEvidence>,
    pub window: GridWindow,
    pub stencil: Stencil,
    pub mode: TailMode,
    pub declared_p_min: Option<usize>,
    pub declared_convexity: Option<String>,
    pub matches_declared: Option<bool>,
    pub mismatches: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckOptions {
    pub p_max: usize,
    pub d_window: GridWindow,
    pub k_window: GridWindow,
    pub q_max: i32,
    pub stencil: Stencil,
    pub mode: TailMode,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            p_max: 8,
            d_window: GridWindow { start: 10.0, count: 201, step: 50_000.0 },
            k_window: GridWindow { start: 20.0, count: 200, step: 1.0 },
            q_max: 6,
            stencil: Stencil::Unit,
            mode: TailMode::Tail75,
        }
    }
}

fn gather<P: Probe + ?Sized>(subject: String, g: &P, opts: &CheckOptions) -> ClassReport {
    let p_d_estimate = check_d(g, opts.p_max, &opts.d_window);
    let k_evidence = (-1..=opts.q_max)
        .map(|q| KEvidence {
            order: q,
            sign: check_k(g, q, &opts.k_window, opts.stencil, opts.mode),
            declared: None,
            consistent: None,
        })
        .collect();
    ClassReport {
        subject,
        p_d_estimate,
        p_max: opts.p_max,
        d_window: opts.d_window,
        k_evidence,
        window: opts.k_window,
        stencil: opts.stencil,
        mode: opts.mode,
        declared_p_min: None,
        declared_convexity: None,
        matches_declared: None,
        mismatches: Vec::new(),
    }
}

/// Evidence for a catalog entry, compared with its declared class data.
pub fn class_report(cf: &CatalogFunction, opts: &CheckOptions) -> ClassReport {
    let mut rep = gather(cf.to_string(), cf, opts);
    let conv = cf.convexity();
    rep.declared_p_min = Some(cf.p_min());
    rep.declared_convexity = Some(conv.tag());
    if rep.p_d_estimate != Some(cf.p_min()) {
        rep.mismatches.push(format!(
            "p_D estimate {:?} differs from declared p_min {}",
            rep.p_d_estimate,
            cf.p_min()
        ));
    }
    for ev in &mut rep.k_evidence {
        ev.declared = conv.declared_sign(ev.order);
        if let Some(s) = ev.declared {
            let ok = ev.sign.consistent_with(s);
            ev.consistent = Some(ok);
            if !ok {
                rep.mismatches.push(format!(
                    "order {}: declared {:?}, observed {}",
                    ev.order, s, ev.sign
                ));
            }
        }
    }
    rep.matches_declared = Some(rep.mismatches.is_empty());
    rep
}

/// Evidence for `Σ^s g` (no declared data to compare against).
pub fn sigma_class_report(cf: &CatalogFunction, s: usize, opts: &CheckOptions, ctrl: &SigmaControl) -> ClassReport {
    let view = SigmaView { g: cf, s, ctrl: *ctrl };
    gather(format!("Σ^{s} {cf}"), &view, opts)
}

/// Window and stencil used to probe convexity of iterated sums near the
/// origin, where piecewise structure at the integers is still resolved.
pub fn near_origin_options() -> CheckOptions {
    CheckOptions {
        k_window: GridWindow { start: 1.05, count: 200, step: 0.1 },
        stencil: Stencil::Spacing(0.3),
        mode: TailMode::Strict50,
        ..CheckOptions::default()
    }
}

/// K-check of `Σ^m g` at the order `p_min + m` needed for `Σ^{m+1} g`,
/// taken at the first refused level.
pub fn admissibility_evidence(cf: &CatalogFunction, m: usize) -> Option<ClassReport> {
    let m = (0..=m).find(|l| !cf.admits(*l))?;
    let opts = near_origin_options();
    let q = (cf.p_min() + m) as i32;
    let view = SigmaView { g: cf, s: m, ctrl: SigmaControl::default() };
    let sign = check_k(&view, q, &opts.k_window, opts.stencil, opts.mode);
    Some(ClassReport {
        subject: if m == 0 { cf.to_string() } else { format!("Σ^{m} {cf}") },
        p_d_estimate: None,
        p_max: 0,
        d_window: opts.d_window,
        k_evidence: vec![KEvidence { order: q, sign, declared: None, consistent: None }],
        window: opts.k_window,
        stencil: opts.stencil,
        mode: opts.mode,
        declared_p_min: Some(cf.p_min()),
        declared_convexity: Some(cf.convexity().tag()),
        matches_declared: None,
        mismatches: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_get, sample_entries, Params};

    fn get(id: &str, params: &str) -> CatalogFunction {
        catalog_get(id, &params.parse::<Params>().unwrap()).unwrap()
    }

    #[test]
    fn tail_classification() {
        let mut v = vec![1.0; 10];
        v.extend([-1.0; 30]);
        assert_eq!(tail_sign(&v, TailMode::Tail75), TailSign::Negative);
        v[20] = 0.5;
        assert_eq!(tail_sign(&v, TailMode::Tail75), TailSign::Mixed);
        assert_eq!(tail_sign(&[0.0; 60], TailMode::Strict50), TailSign::Zero);
        assert_eq!(tail_sign(&[1.0, f64::NAN], TailMode::Tail75), TailSign::Inconclusive);
        assert_eq!(tail_sign(&[], TailMode::Tail75), TailSign::Inconclusive);
        assert!(TailSign::Zero.consistent_with(Sign::Minus));
        assert!(!TailSign::Mixed.consistent_with(Sign::Plus));
    }

    #[test]
    fn d_estimates() {
        let opts = CheckOptions::default();
        for (id, params, want) in [("log", "", 1), ("reciprocal", "", 0), ("xlogx", "", 2), ("binomial_k", "k=2", 3)] {
            assert_eq!(check_d(&get(id, params), opts.p_max, &opts.d_window), Some(want), "{id}");
        }
    }

    #[test]
    fn every_entry_matches_its_declared_class() {
        for g in sample_entries() {
            let rep = class_report(&g, &CheckOptions::default());
            assert_eq!(rep.p_d_estimate, Some(g.p_min()), "{g}");
            assert_eq!(rep.matches_declared, Some(true), "{g}: {:?}", rep.mismatches);
        }
    }

    #[test]
    fn log_signs_alternate() {
        let log = get("log", "");
        let opts = CheckOptions::default();
        let signs: Vec<TailSign> = (0..=6).map(|q| check_k(&log, q, &opts.k_window, Stencil::Unit, TailMode::Tail75)).collect();
        for (q, s) in signs.iter().enumerate() {
            let want = if q % 2 == 0 { TailSign::Positive } else { TailSign::Negative };
            assert_eq!(*s, want, "q={q}");
        }
    }

    #[test]
    fn exp_decay_signs() {
        let g = get("exp_decay_t", "t=1");
        let opts = CheckOptions::default();
        for q in 0..=6 {
            let want = if q % 2 == 0 { TailSign::Positive } else { TailSign::Negative };
            assert_eq!(check_k(&g, q, &opts.k_window, Stencil::Unit, TailMode::Tail75), want, "q={q}");
        }
    }

    #[test]
    fn counterexample_sum_is_not_convex_of_order_one() {
        let pw = get("piecewise", "");
        let ctrl = SigmaControl::default();
        let opts = near_origin_options();
        let rep = sigma_class_report(&pw, 1, &opts, &ctrl);
        let k1 = rep.k_evidence.iter().find(|e| e.order == 1).unwrap();
        assert_eq!(k1.sign, TailSign::Mixed);
        assert_eq!(rep.p_d_estimate, Some(1));
        // on the unit lattice the piecewise structure is invisible
        let view = SigmaView { g: &pw, s: 1, ctrl };
        let lattice = GridWindow { start: 1.0, count: 60, step: 1.0 };
        assert_ne!(check_k(&view, 1, &lattice, Stencil::Unit, TailMode::Strict50), TailSign::Mixed);
    }

    #[test]
    fn short_windows_are_inconclusive() {
        let log = get("log", "");
        let w = GridWindow { start: 10.0, count: 49, step: 1.0 };
        assert_eq!(check_k(&log, 1, &w, Stencil::Unit, TailMode::Tail75), TailSign::Inconclusive);
    }

    #[test]
    fn parallel_sampling_matches_sequential() {
        let g = get("xlogx", "");
        let w = GridWindow { start: 3.5, count: 300, step: 0.7 };
        let a = k_samples(&g, 3, &w, Stencil::Spacing(0.4), Execution::Sequential);
        let b = k_samples(&g, 3, &w, Stencil::Spacing(0.4), Execution::Parallel);
        assert_eq!(a, b);
    }

    #[test]
    fn admissibility_evidence_targets_first_refused_level() {
        let pw = get("piecewise", "");
        assert!(admissibility_evidence(&pw, 0).is_none());
        let rep = admissibility_evidence(&pw, 3).unwrap();
        assert_eq!(rep.subject, "Σ^1 piecewise_counterexample");
        assert!(admissibility_evidence(&get("log", ""), 3).is_none());
    }
}
