//! Run configuration: command-line flags over a flat `key=value` file over
//! defaults.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sigma_core::{Execution, QuadratureSpec, Route, SigmaControl};

pub const CONFIG_ENV: &str = "SIGMA_CALC_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "sigma-calc", version, about = "Principal indefinite sums and multiple gamma functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Flags,
}

#[derive(Debug, Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// List catalog functions with parameters and class data.
    ListFunctions,
    /// Evaluate Σ^{m+1} g on a point or grid.
    Eval,
    /// Evaluate on several routes and report the largest pairwise deviation.
    Compare,
    /// Class-membership evidence for g, or for Σ^s g with --sigma.
    Check,
    /// Tabulate ln G_m over a grid on several routes.
    GammaTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Plain,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// Catalog function id.
    #[arg(long = "fn", global = true)]
    pub function: Option<String>,
    /// Function parameters, e.g. `k=2` or `coeffs=1;0;2`.
    #[arg(long, global = true)]
    pub params: Option<String>,
    /// Order: eval and compare compute Σ^{m+1} g, gamma-table ln G_m.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x: Option<f64>,
    /// Grid `start:stop:step`, both ends included.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Route for eval: limit, iterated, cauchy, closed or malmsten.
    #[arg(long, global = true)]
    pub route: Option<String>,
    /// Comma-separated routes for compare and gamma-table.
    #[arg(long, global = true)]
    pub routes: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long = "p-boost", global = true)]
    pub p_boost: Option<usize>,
    #[arg(long = "n-max", global = true)]
    pub n_max: Option<usize>,
    /// Order s of Σ^s g examined by check.
    #[arg(long, global = true)]
    pub sigma: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Config file; defaults to $SIGMA_CALC_CONFIG.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteSel {
    Engine(Route),
    Malmsten,
}

impl RouteSel {
    pub fn name(self) -> &'static str {
        match self {
            RouteSel::Engine(Route::ClosedForm) => "closed",
            RouteSel::Engine(r) => r.as_str(),
            RouteSel::Malmsten => "malmsten",
        }
    }
}

impl FromStr for RouteSel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "malmsten" => Ok(RouteSel::Malmsten),
            other => other.parse().map(RouteSel::Engine),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("grid `{s}` is not start:stop:step"));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("grid value `{v}` is not a number"));
        let grid = Grid { start: num(a)?, stop: num(b)?, step: num(c)? };
        if !(grid.step > 0.0 && grid.step.is_finite()) {
            return Err("grid step must be positive".into());
        }
        if !(grid.stop >= grid.start) || !grid.start.is_finite() || !grid.stop.is_finite() {
            return Err("grid stop must not be below start".into());
        }
        Ok(grid)
    }
}

/// Fully resolved configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub function: Option<String>,
    pub params: String,
    pub m: Option<usize>,
    pub points: Vec<f64>,
    pub routes: Vec<RouteSel>,
    pub ctrl: SigmaControl,
    pub quad: QuadratureSpec,
    pub sigma: Option<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

/// Values read from a config file, all optional.
#[derive(Debug, Default)]
struct FileValues {
    flags: Flags,
    quad_nodes: Option<usize>,
    quad_tol: Option<f64>,
    small_t_threshold: Option<f64>,
    n_start: Option<usize>,
    execution: Option<Execution>,
}

fn parse_file(path: &Path) -> Result<FileValues, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut v = FileValues::default();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), no + 1))?;
        let (key, value) = (key.trim(), value.trim().to_string());
        let err = |what: &str| format!("{}:{}: invalid {what} `{value}`", path.display(), no + 1);
        let f = &mut v.flags;
        match key {
            "fn" => f.function = Some(value),
            "params" => f.params = Some(value),
            "m" => f.m = Some(value.parse().map_err(|_| err("m"))?),
            "x" => f.x = Some(value.parse().map_err(|_| err("x"))?),
            "grid" => f.grid = Some(value),
            "route" => f.route = Some(value),
            "routes" => f.routes = Some(value),
            "tol" => f.tol = Some(value.parse().map_err(|_| err("tol"))?),
            "p_boost" | "p-boost" => f.p_boost = Some(value.parse().map_err(|_| err("p_boost"))?),
            "n_max" | "n-max" => f.n_max = Some(value.parse().map_err(|_| err("n_max"))?),
            "sigma" => f.sigma = Some(value.parse().map_err(|_| err("sigma"))?),
            "format" => f.format = Some(value.parse().map_err(|_| err("format"))?),
            "out" => f.out = Some(PathBuf::from(value)),
            "n_start" => v.n_start = Some(value.parse().map_err(|_| err("n_start"))?),
            "quad_nodes" => v.quad_nodes = Some(value.parse().map_err(|_| err("quad_nodes"))?),
            "quad_tol" => v.quad_tol = Some(value.parse().map_err(|_| err("quad_tol"))?),
            "small_t_threshold" => v.small_t_threshold = Some(value.parse().map_err(|_| err("small_t_threshold"))?),
            "execution" => {
                v.execution = Some(match value.as_str() {
                    "sequential" => Execution::Sequential,
                    "parallel" => Execution::Parallel,
                    _ => return Err(err("execution")),
                })
            }
            other => return Err(format!("{}:{}: unknown key `{other}`", path.display(), no + 1)),
        }
    }
    Ok(v)
}

fn parse_routes(s: &str) -> Result<Vec<RouteSel>, String> {
    s.split(',').filter(|r| !r.trim().is_empty()).map(str::parse).collect()
}

impl RunConfig {
    /// Merges flags over the config file (explicit `--config`, else the
    /// environment variable) over defaults.
    pub fn resolve(command: Command, flags: Flags, env_path: Option<PathBuf>) -> Result<Self, String> {
        let file = match flags.config.clone().or(env_path) {
            Some(p) => parse_file(&p)?,
            None => FileValues::default(),
        };
        let d = file.flags;
        let pick = |a: Option<String>, b: Option<String>| a.or(b);

        let mut ctrl = SigmaControl::default();
        if let Some(t) = flags.tol.or(d.tol) {
            ctrl.tolerance = t;
        }
        if let Some(p) = flags.p_boost.or(d.p_boost) {
            ctrl.p_boost = p;
        }
        if let Some(n) = flags.n_max.or(d.n_max) {
            ctrl.n_max = n;
        }
        if let Some(n) = file.n_start {
            ctrl.n_start = n;
        }
        ctrl.validate().map_err(|e| e.to_string())?;

        let mut quad = QuadratureSpec::default();
        if let Some(n) = file.quad_nodes {
            quad.nodes_per_panel = n;
        }
        if let Some(t) = file.quad_tol {
            quad.target_tol = t;
        }
        if let Some(t) = file.small_t_threshold {
            quad.small_t_threshold = t;
        }
        if let Some(e) = file.execution {
            quad.execution = e;
        }
        quad.validate().map_err(|e| e.to_string())?;

        // a flag for one of x/grid hides the file's value for the other
        let (x, grid) = if flags.x.is_some() || flags.grid.is_some() {
            (flags.x, flags.grid.clone())
        } else {
            (d.x, d.grid)
        };
        let points = match (x, grid) {
            (Some(_), Some(_)) => return Err("give either --x or --grid, not both".into()),
            (Some(x), None) => vec![x],
            (None, Some(g)) => g.parse::<Grid>()?.points(),
            (None, None) => Vec::new(),
        };

        let route = pick(flags.route.clone(), d.route);
        let routes = pick(flags.routes.clone(), d.routes);
        let routes = match command {
            Command::Eval => {
                if routes.is_some() {
                    return Err("eval takes a single --route".into());
                }
                vec![route.as_deref().unwrap_or("limit").parse()?]
            }
            Command::Compare => {
                let rs = parse_routes(routes.or(route).as_deref().unwrap_or("limit,iterated,cauchy"))?;
                if rs.len() < 2 {
                    return Err("compare needs at least two routes".into());
                }
                rs
            }
            Command::GammaTable => parse_routes(routes.or(route).as_deref().unwrap_or("limit,cauchy,malmsten"))?,
            _ => Vec::new(),
        };
        let mut seen = Vec::new();
        for r in &routes {
            if seen.contains(r) {
                return Err(format!("route `{}` given twice", r.name()));
            }
            seen.push(*r);
        }

        Ok(RunConfig {
            command,
            function: pick(flags.function, d.function),
            params: pick(flags.params, d.params).unwrap_or_default(),
            m: flags.m.or(d.m),
            points,
            routes,
            ctrl,
            quad,
            sigma: flags.sigma.or(d.sigma),
            format: flags.format.or(d.format).unwrap_or(Format::Csv),
            out: flags.out.or(d.out),
        })
    }
}
