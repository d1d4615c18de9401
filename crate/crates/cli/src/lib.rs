//! Command-line front end for `sigma-core`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 non-convergence or
//! mismatch, 3 admissibility refusal.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::Parser;
use sigma_core::catalog::{sample_entries, ENTRIES};
use sigma_core::classes::{class_report, near_origin_options, sigma_class_report, CheckOptions};
use sigma_core::{catalog_get, malmsten_ln_gm, par, sigma_route, CatalogFunction, Error, Params, Route};

use config::{Cli, Command, RouteSel, RunConfig, CONFIG_ENV};
use output::{Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_INADMISSIBLE: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::config(format!("output: {e}"))
    }
}

/// Runs the tool and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let env_path = std::env::var_os(CONFIG_ENV).filter(|p| !p.is_empty()).map(PathBuf::from);
    let outcome = RunConfig::resolve(cli.command, cli.opts, env_path)
        .map_err(Failure::config)
        .and_then(|cfg| execute(&cfg));
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("sigma-calc: {}", f.message);
            f.code
        }
    }
}

fn execute(cfg: &RunConfig) -> Result<i32, Failure> {
    let (table, code) = match cfg.command {
        Command::ListFunctions => (list_functions(), EXIT_OK),
        Command::Eval => eval(cfg)?,
        Command::Compare => compare(cfg)?,
        Command::GammaTable => gamma_table(cfg)?,
        Command::Check => return check(cfg),
    };
    let mut out = sink(cfg)?;
    table.write(cfg.format, &mut out)?;
    out.flush()?;
    Ok(code)
}

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>, Failure> {
    Ok(match &cfg.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::config(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn function(cfg: &RunConfig) -> Result<CatalogFunction, Failure> {
    let id = cfg.function.as_deref().ok_or_else(|| Failure::config("missing --fn"))?;
    let params: Params = cfg.params.parse().map_err(|e: Error| Failure::config(e.to_string()))?;
    catalog_get(id, &params).map_err(|e| Failure::config(e.to_string()))
}

fn order(cfg: &RunConfig) -> Result<usize, Failure> {
    cfg.m.ok_or_else(|| Failure::config("missing --m"))
}

fn points(cfg: &RunConfig) -> Result<&[f64], Failure> {
    if cfg.points.is_empty() {
        return Err(Failure::config("missing --x or --grid"));
    }
    if let Some(x) = cfg.points.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Failure::config(format!("x = {x} is not a positive real")));
    }
    Ok(&cfg.points)
}

struct Point {
    value: f64,
    n_used: usize,
    remainder: f64,
    converged: bool,
}

fn classify(e: Error) -> Failure {
    let code = match &e {
        Error::Inadmissible { .. } => EXIT_INADMISSIBLE,
        Error::InvalidParameter { .. } | Error::Domain { .. } | Error::InvalidControl(_) | Error::UnknownFunction(_) => {
            EXIT_CONFIG
        }
        _ => EXIT_NUMERIC,
    };
    Failure { code, message: e.to_string() }
}

fn check_route(g: &CatalogFunction, m: usize, route: RouteSel) -> Result<(), Failure> {
    if !g.admits(m) {
        // let the engine produce the refusal with its class-check evidence
        return Ok(());
    }
    match route {
        RouteSel::Malmsten if g.id() != "log" => {
            Err(Failure::config(format!("the malmsten route is available for log only, not {g}")))
        }
        RouteSel::Engine(Route::ClosedForm) if g.known_sigma(m, 1.5).is_none() => {
            Err(Failure::config(format!("{g} has no closed form for Σ^{}", m + 1)))
        }
        _ => Ok(()),
    }
}

fn evaluate(cfg: &RunConfig, g: &CatalogFunction, m: usize, x: f64, route: RouteSel) -> Result<Point, Failure> {
    match route {
        RouteSel::Engine(r) => match sigma_route(g, m, x, r, &cfg.ctrl) {
            Ok(s) => Ok(Point { value: s.value, n_used: s.n_used, remainder: s.remainder_estimate, converged: true }),
            Err(Error::NotConverged(s)) => {
                Ok(Point { value: s.value, n_used: s.n_used, remainder: s.remainder_estimate, converged: false })
            }
            Err(e) => Err(classify(e)),
        },
        RouteSel::Malmsten => {
            let q = malmsten_ln_gm(m, x, &cfg.quad).map_err(classify)?;
            Ok(Point { value: q.value, n_used: q.panels, remainder: q.error_estimate, converged: q.tolerance_met })
        }
    }
}

/// Evaluates every route at every point, in parallel over points when
/// enabled; rows come back in input order.
fn sweep(
    cfg: &RunConfig,
    g: &CatalogFunction,
    m: usize,
    xs: &[f64],
    routes: &[RouteSel],
) -> Result<Vec<Vec<Point>>, Failure> {
    for r in routes {
        check_route(g, m, *r)?;
    }
    if !g.admits(m) {
        // one evaluation is enough to obtain the refusal
        return Err(evaluate(cfg, g, m, xs[0], routes[0]).err().unwrap_or_else(|| Failure {
            code: EXIT_INADMISSIBLE,
            message: format!("{g}: Σ^{} refused", m + 1),
        }));
    }
    let rows = par::map(xs, cfg.quad.execution, |&x| {
        routes.iter().map(|r| evaluate(cfg, g, m, x, *r)).collect::<Result<Vec<_>, _>>()
    });
    rows.into_iter().collect()
}

fn tolerance(cfg: &RunConfig, r: RouteSel) -> f64 {
    match r {
        RouteSel::Malmsten => cfg.quad.target_tol,
        RouteSel::Engine(_) => cfg.ctrl.tolerance,
    }
}

/// Largest pairwise deviation and whether every pair stays within
/// `DEVIATION_FACTOR (tol_a + tol_b) max(1, |v|)`.
fn deviation(cfg: &RunConfig, routes: &[RouteSel], row: &[Point]) -> (f64, bool) {
    let mut worst = 0.0f64;
    let mut ok = true;
    for i in 0..row.len() {
        for j in i + 1..row.len() {
            let d = (row[i].value - row[j].value).abs();
            let allowed =
                DEVIATION_FACTOR * (tolerance(cfg, routes[i]) + tolerance(cfg, routes[j])) * row[i].value.abs().max(1.0);
            worst = worst.max(d);
            ok &= d <= allowed;
        }
    }
    (worst, ok)
}

/// Each route meets its own tolerance; rounding in the weighted sums adds
/// up to two orders of magnitude on top of that.
pub const DEVIATION_FACTOR: f64 = 100.0;

fn eval(cfg: &RunConfig) -> Result<(Table, i32), Failure> {
    let g = function(cfg)?;
    let m = order(cfg)?;
    let xs = points(cfg)?;
    let route = cfg.routes[0];
    let rows = sweep(cfg, &g, m, xs, &[route])?;
    let mut t = Table::new(["x", "value", "route", "n_used", "remainder_estimate", "converged"]);
    let mut code = EXIT_OK;
    for (x, row) in xs.iter().zip(rows) {
        let p = &row[0];
        if !p.converged {
            code = EXIT_NUMERIC;
        }
        t.rows.push(vec![
            Cell::Num(*x),
            Cell::Num(p.value),
            Cell::Text(route.name().into()),
            Cell::Int(p.n_used),
            Cell::Num(p.remainder),
            Cell::Flag(p.converged),
        ]);
    }
    Ok((t, code))
}

fn compare(cfg: &RunConfig) -> Result<(Table, i32), Failure> {
    let g = function(cfg)?;
    let m = order(cfg)?;
    let xs = points(cfg)?;
    let rows = sweep(cfg, &g, m, xs, &cfg.routes)?;
    let mut header = vec!["x".to_string()];
    header.extend(cfg.routes.iter().map(|r| r.name().to_string()));
    header.extend(["max_deviation".into(), "converged".into(), "ok".into()]);
    let mut t = Table::new(header);
    let mut code = EXIT_OK;
    for (x, row) in xs.iter().zip(rows) {
        let (dev, within) = deviation(cfg, &cfg.routes, &row);
        let converged = row.iter().all(|p| p.converged);
        if !(within && converged) {
            code = EXIT_NUMERIC;
        }
        let mut cells = vec![Cell::Num(*x)];
        cells.extend(row.iter().map(|p| Cell::Num(p.value)));
        cells.extend([Cell::Num(dev), Cell::Flag(converged), Cell::Flag(within)]);
        t.rows.push(cells);
    }
    Ok((t, code))
}

fn gamma_table(cfg: &RunConfig) -> Result<(Table, i32), Failure> {
    let m = order(cfg)?;
    if m == 0 {
        return Err(Failure::config("gamma-table needs --m ≥ 1"));
    }
    if cfg.routes.is_empty() {
        return Err(Failure::config("gamma-table needs at least one route"));
    }
    let log = catalog_get("log", &Params::default()).expect("log is in the catalog");
    let xs = points(cfg)?;
    let rows = sweep(cfg, &log, m - 1, xs, &cfg.routes)?;
    let mut header = vec!["x".to_string()];
    header.extend(cfg.routes.iter().map(|r| format!("lnG{m}_{}", r.name())));
    header.push("max_deviation".into());
    let mut t = Table::new(header);
    let mut code = EXIT_OK;
    for (x, row) in xs.iter().zip(rows) {
        if row.iter().any(|p| !p.converged) {
            code = EXIT_NUMERIC;
        }
        let (dev, _) = deviation(cfg, &cfg.routes, &row);
        let mut cells = vec![Cell::Num(*x)];
        cells.extend(row.iter().map(|p| Cell::Num(p.value)));
        cells.push(Cell::Num(dev));
        t.rows.push(cells);
    }
    Ok((t, code))
}

fn check(cfg: &RunConfig) -> Result<i32, Failure> {
    let g = function(cfg)?;
    let (report, code) = match cfg.sigma {
        Some(s) if s > 0 => (sigma_class_report(&g, s, &near_origin_options(), &cfg.ctrl), EXIT_OK),
        _ => {
            let r = class_report(&g, &CheckOptions::default());
            let code = if r.matches_declared == Some(true) { EXIT_OK } else { EXIT_NUMERIC };
            (r, code)
        }
    };
    let mut out = sink(cfg)?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Failure::config(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(code)
}

fn list_functions() -> Table {
    let mut t = Table::new(["id", "params", "p_min", "convexity"]);
    for ((id, schema), g) in ENTRIES.iter().zip(sample_entries()) {
        let p_min = if g.terminating_tail() { "degree+1".to_string() } else { g.p_min().to_string() };
        t.rows.push(vec![
            Cell::Text((*id).into()),
            Cell::Text((*schema).into()),
            Cell::Text(p_min),
            Cell::Text(g.convexity().tag()),
        ]);
    }
    t
}
