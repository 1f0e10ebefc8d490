//! Config to experiment dispatch, artifact writing and exit statuses.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use frade_core::fade::{Coefficient, FadeProblem};
use frade_core::geometry::{build_d, Domain, Face, Pseudoconvexity, DEFAULT_DILATION};
use frade_core::{Axis, FradeError, GridFunction, SpaceGrid, SpaceTimeGrid, TimeGrid};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::expr::{Expr, Var};
use crate::kinds;

/// Smallest node count accepted along any axis.
pub const MIN_NODES: usize = 16;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] FradeError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// 1 for bad input, 2 for a violated hypothesis, 3 for a numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(e) if e.is_hypothesis_violation() => 2,
            RunError::Core(e) if e.is_numerical() => 3,
            _ => 1,
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// Kinds understood by [`run_config`].
pub const KINDS: [&str; 9] = [
    "forward",
    "caputo-check",
    "carleman-thm11",
    "carleman-lemma21",
    "carleman-parabolic",
    "carleman-thm13",
    "cauchy",
    "isp",
    "holder-fit",
];

/// Result of a run: printed summary lines, written files and the summary object.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub kind: String,
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// Collects artifacts for one run; every file goes through a temp file and a rename.
pub struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
    lines: Vec<String>,
    summary: Map<String, Value>,
}

impl Output {
    fn new(dir: PathBuf) -> RunResult<Self> {
        fs::create_dir_all(&dir).map_err(|source| RunError::Io { path: dir.clone(), source })?;
        Ok(Self { dir, files: Vec::new(), lines: Vec::new(), summary: Map::new() })
    }

    pub fn file(&mut self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> frade_core::Result<()>) -> RunResult<()> {
        let mut buf = Vec::new();
        body(&mut buf)?;
        let path = self.dir.join(name);
        write_atomic(&path, &buf)?;
        self.files.push(path);
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &Value) -> RunResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
        text.push('\n');
        self.file(name, |w| Ok(w.write_all(text.as_bytes())?))
    }

    /// One summary line, printed by the front end.
    pub fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> RunResult<()> {
    let io = |source| RunError::Io { path: path.to_path_buf(), source };
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

/// Reads and runs a config file; `out` and `seed` override the file.
pub fn run_file(path: &Path, out: Option<&Path>, seed: Option<u64>) -> RunResult<Outcome> {
    let text = fs::read_to_string(path).map_err(|source| RunError::Read { path: path.to_path_buf(), source })?;
    let mut cfg = Config::parse(&text)?;
    apply_overrides(&mut cfg, out, seed);
    run_config(&cfg)
}

pub fn apply_overrides(cfg: &mut Config, out: Option<&Path>, seed: Option<u64>) {
    if let Some(dir) = out {
        cfg.set("output", "dir", dir.to_string_lossy());
    }
    if let Some(s) = seed {
        cfg.set("", "seed", s.to_string());
    }
}

pub fn run_config(cfg: &Config) -> RunResult<Outcome> {
    let kind = cfg.str("", "kind")?.to_string();
    if !KINDS.contains(&kind.as_str()) {
        return Err(cfg.error("", "kind", format!("unknown kind '{kind}'; expected one of {}", KINDS.join(", "))).into());
    }
    let dir = PathBuf::from(cfg.str("output", "dir")?);
    let seed: u64 = cfg.value_or("", "seed", 0)?;
    let mut out = Output::new(dir)?;
    out.put("kind", kind.as_str());
    out.put("seed", seed);
    match kind.as_str() {
        "forward" => kinds::forward(cfg, &mut out)?,
        "caputo-check" => kinds::caputo_check(cfg, &mut out)?,
        "carleman-thm11" => kinds::carleman_sub(cfg, &mut out)?,
        "carleman-lemma21" => kinds::carleman_fractional_bound(cfg, &mut out)?,
        "carleman-parabolic" => kinds::carleman_parabolic(cfg, &mut out)?,
        "carleman-thm13" => kinds::carleman_rational(cfg, &mut out)?,
        "cauchy" => kinds::cauchy(cfg, seed, &mut out)?,
        "isp" => kinds::isp(cfg, seed, &mut out)?,
        _ => kinds::holder_fit(cfg, &mut out)?,
    }
    // a misspelled key would otherwise silently fall back to its default
    cfg.finish()?;
    let summary = Value::Object(std::mem::take(&mut out.summary));
    out.json("summary.json", &summary)?;
    Ok(Outcome { kind, lines: out.lines, files: out.files, summary })
}

/// Noise seed for sample `k` of a run with base seed `base`.
pub fn sample_seed(base: u64, k: u64) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(k)
}

fn extent(cfg: &Config, section: &str, key: &str) -> RunResult<(f64, f64)> {
    match cfg.list_opt::<f64>(section, key)? {
        None => Ok((0.0, 1.0)),
        Some(v) if v.len() == 2 && v[0] < v[1] => Ok((v[0], v[1])),
        Some(_) => Err(cfg.error(section, key, "expected 'lo, hi' with lo < hi").into()),
    }
}

fn nodes(cfg: &Config, section: &str, key: &str) -> RunResult<usize> {
    let n: usize = cfg.value(section, key)?;
    if n < MIN_NODES {
        return Err(cfg.error(section, key, format!("needs at least {MIN_NODES} nodes, got {n}")).into());
    }
    Ok(n)
}

/// `[grid]`: `nx`, optional `ny`, `nt`, `horizon`, `x`, `y`.
pub fn grid(cfg: &Config) -> RunResult<SpaceTimeGrid> {
    let nx = nodes(cfg, "grid", "nx")?;
    let nt = nodes(cfg, "grid", "nt")?;
    let horizon: f64 = cfg.value_or("grid", "horizon", 1.0)?;
    let (x0, x1) = extent(cfg, "grid", "x")?;
    let x = Axis::new(x0, x1, nx)?;
    let space = if cfg.has("grid", "ny") {
        let (y0, y1) = extent(cfg, "grid", "y")?;
        SpaceGrid::rect(x, Axis::new(y0, y1, nodes(cfg, "grid", "ny")?)?)
    } else {
        SpaceGrid::line(x)
    };
    Ok(SpaceTimeGrid::new(space, TimeGrid::new(horizon, nt)?))
}

/// `[domain]`: `gamma` (observed faces) and `dilation`, on the grid's extents.
pub fn domain(cfg: &Config, grid: SpaceTimeGrid) -> RunResult<Domain> {
    let faces: Vec<String> = cfg.list_opt("domain", "gamma")?.unwrap_or_else(|| vec!["x_hi".into()]);
    let gamma = faces.iter().map(|f| Face::parse(f)).collect::<frade_core::Result<Vec<_>>>()?;
    let sg = grid.space();
    let x = (sg.x().lo(), sg.x().hi());
    let dom = match sg.y() {
        Some(y) => Domain::rectangle(x, (y.lo(), y.hi()), &gamma)?,
        None => Domain::interval(x.0, x.1, &gamma)?,
    };
    Ok(dom.with_dilation(cfg.value_or("domain", "dilation", DEFAULT_DILATION)?)?)
}

pub fn pseudoconvexity(cfg: &Config, grid: SpaceTimeGrid) -> RunResult<(Domain, Pseudoconvexity)> {
    let dom = domain(cfg, grid)?;
    let d = build_d(&dom)?;
    Ok((dom, d))
}

pub fn coefficient(grid: SpaceTimeGrid, e: &Expr) -> Coefficient {
    if let Some(v) = e.as_constant() {
        Coefficient::Const(v)
    } else if !e.uses(Var::T) {
        Coefficient::space(grid.space(), |[x, y]| e.eval(x, y, 0.0))
    } else {
        Coefficient::space_time(grid, |[x, y], t| e.eval(x, y, t))
    }
}

pub fn field(grid: SpaceTimeGrid, e: &Expr) -> GridFunction {
    GridFunction::from_fn(grid, |[x, y], t| e.eval(x, y, t))
}

/// What the `[equation]` section may contribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquationParts {
    pub orders_from_config: bool,
    pub data: bool,
}

/// `[equation]`: `diffusion`, `advection_x`, `advection_y`, `reaction`,
/// `orders`, `q`, and when `parts.data` is set `source`, `initial`, `boundary`.
pub fn problem(cfg: &Config, grid: SpaceTimeGrid, fixed_orders: &[f64], parts: EquationParts) -> RunResult<FadeProblem> {
    let s = "equation";
    let coeff = |key: &str, default: f64| -> RunResult<Coefficient> { Ok(coefficient(grid, &cfg.expr_or(s, key, default)?)) };
    let mut b = FadeProblem::builder(grid)
        .isotropic(coeff("diffusion", 1.0)?)
        .advection(coeff("advection_x", 0.0)?, coeff("advection_y", 0.0)?)
        .reaction(coeff("reaction", 0.0)?);
    let orders: Vec<f64> = if parts.orders_from_config { cfg.list_opt(s, "orders")?.unwrap_or_default() } else { fixed_orders.to_vec() };
    let qs = cfg.expr_list_opt(s, "q")?.unwrap_or_else(|| vec![Expr::constant(1.0); orders.len()]);
    if qs.len() != orders.len() {
        return Err(cfg.error(s, "q", format!("needs one entry per fractional order ({})", orders.len())).into());
    }
    for (&a, q) in orders.iter().zip(&qs) {
        b = b.fractional(a, coefficient(grid, q));
    }
    if parts.data {
        let u0 = cfg.expr_or(s, "initial", 0.0)?;
        b = b.source(coeff("source", 0.0)?).boundary(coeff("boundary", 0.0)?).initial_fn(|[x, y]| u0.eval(x, y, 0.0));
    }
    Ok(b.build()?)
}

pub fn summary_f64(v: Option<f64>) -> Value {
    match v {
        Some(x) if x.is_finite() => json!(x),
        _ => Value::Null,
    }
}
