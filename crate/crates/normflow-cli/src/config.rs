//! INI-style run configuration.
//!
//! ```text
//! [problem]
//! family = two_q     # two_q | born_infeld
//! N = 3
//! p = 3
//! q = 3
//! rho = 1
//! [grid]
//! n = 4096
//! rmax = 30
//! [solver]
//! tol = 1e-6
//! init = gaussian:1
//! seed = 1
//! [output]
//! dir = out
//! format = json
//! plot = false
//! [sweep]
//! rhos = 0.5, 1, 2
//! ```
//!
//! Values are bare words; `#` starts a comment anywhere on a line.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: unknown section `[{section}]`")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: malformed value for `{key}`: {msg}")]
    Value { line: usize, key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    TwoQ,
    BornInfeld,
}

impl FamilyName {
    fn as_str(self) -> &'static str {
        match self {
            FamilyName::TwoQ => "two_q",
            FamilyName::BornInfeld => "born_infeld",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricName {
    H1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSpec {
    Gaussian(f64),
    Plateau(f64),
}

impl InitSpec {
    fn render(self) -> String {
        match self {
            InitSpec::Gaussian(w) => format!("gaussian:{}", num(w)),
            InitSpec::Plateau(r) => format!("plateau:{}", num(r)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Problem {
    pub family: Option<FamilyName>,
    pub dim: usize,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub rmax: f64,
}

/// Unset keys fall back to the defaults of the solver being run.
#[derive(Debug, Clone, PartialEq)]
pub struct Solver {
    pub tol: f64,
    /// `false` while `tol` holds the default, so solvers with their own
    /// relative tolerance can keep it.
    pub tol_set: bool,
    pub max_iter: Option<usize>,
    pub step: Option<f64>,
    pub metric: Option<MetricName>,
    pub init: Option<InitSpec>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub dir: Option<String>,
    pub format: Format,
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sweep {
    pub rhos: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub problem: Problem,
    pub grid: Grid,
    pub solver: Solver,
    pub output: Output,
    pub sweep: Sweep,
}

pub const DEFAULT_SEED: u64 = 1;

impl Default for Config {
    fn default() -> Self {
        Self {
            problem: Problem {
                dim: 3,
                ..Default::default()
            },
            grid: Grid { n: 4096, rmax: 30.0 },
            solver: Solver {
                tol: 1e-6,
                tol_set: false,
                max_iter: None,
                step: None,
                metric: None,
                init: None,
                seed: DEFAULT_SEED,
            },
            output: Output {
                dir: None,
                format: Format::Json,
                plot: false,
            },
            sweep: Sweep::default(),
        }
    }
}

const SECTIONS: [&str; 5] = ["problem", "grid", "solver", "output", "sweep"];

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| ConfigError::Value {
        line,
        key: key.into(),
        msg: format!("`{v}` is not a number"),
    })?;
    if !x.is_finite() {
        return Err(ConfigError::Value {
            line,
            key: key.into(),
            msg: format!("`{v}` is not finite"),
        });
    }
    Ok(x)
}

fn parse_uint(line: usize, key: &str, v: &str) -> Result<u64, ConfigError> {
    v.parse().map_err(|_| ConfigError::Value {
        line,
        key: key.into(),
        msg: format!("`{v}` is not a nonnegative integer"),
    })
}

fn bad(line: usize, key: &str, msg: String) -> ConfigError {
    ConfigError::Value {
        line,
        key: key.into(),
        msg,
    }
}

impl Config {
    /// Sets one key. `line` is 0 for command-line overrides.
    pub fn set(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let v = value.trim();
        let unknown = || ConfigError::UnknownKey {
            line,
            key: format!("{section}.{key}"),
        };
        match section {
            "problem" => match key {
                "family" => {
                    self.problem.family = Some(match v {
                        "two_q" => FamilyName::TwoQ,
                        "born_infeld" => FamilyName::BornInfeld,
                        _ => return Err(bad(line, key, format!("unknown family `{v}`"))),
                    })
                }
                "N" => {
                    let n = parse_uint(line, key, v)?;
                    self.problem.dim = usize::try_from(n).map_err(|_| bad(line, key, "too large".into()))?;
                }
                "p" => self.problem.p = Some(parse_f64(line, key, v)?),
                "q" => self.problem.q = Some(parse_f64(line, key, v)?),
                "rho" => self.problem.rho = Some(parse_f64(line, key, v)?),
                _ => return Err(unknown()),
            },
            "grid" => match key {
                "n" => {
                    let n = parse_uint(line, key, v)?;
                    self.grid.n = usize::try_from(n).map_err(|_| bad(line, key, "too large".into()))?;
                }
                "rmax" => self.grid.rmax = parse_f64(line, key, v)?,
                _ => return Err(unknown()),
            },
            "solver" => match key {
                "tol" => {
                    self.solver.tol = parse_f64(line, key, v)?;
                    self.solver.tol_set = true;
                }
                "max_iter" => {
                    let n = parse_uint(line, key, v)?;
                    self.solver.max_iter = Some(usize::try_from(n).map_err(|_| bad(line, key, "too large".into()))?);
                }
                "step" => self.solver.step = Some(parse_f64(line, key, v)?),
                "metric" => {
                    self.solver.metric = Some(match v {
                        "h1" => MetricName::H1,
                        "l2" => MetricName::L2,
                        _ => return Err(bad(line, key, format!("unknown metric `{v}`"))),
                    })
                }
                "init" => {
                    let (kind, arg) = v.split_once(':').unwrap_or((v, "1"));
                    let x = parse_f64(line, key, arg.trim())?;
                    self.solver.init = Some(match kind.trim() {
                        "gaussian" => InitSpec::Gaussian(x),
                        "plateau" => InitSpec::Plateau(x),
                        other => return Err(bad(line, key, format!("unknown init `{other}`"))),
                    });
                }
                "seed" => self.solver.seed = parse_uint(line, key, v)?,
                _ => return Err(unknown()),
            },
            "output" => match key {
                "dir" => {
                    if v.is_empty() {
                        return Err(bad(line, key, "empty path".into()));
                    }
                    self.output.dir = Some(v.to_string());
                }
                "format" => {
                    self.output.format = match v {
                        "csv" => Format::Csv,
                        "json" => Format::Json,
                        _ => return Err(bad(line, key, format!("unknown format `{v}`"))),
                    }
                }
                "plot" => {
                    self.output.plot = match v {
                        "true" => true,
                        "false" => false,
                        _ => return Err(bad(line, key, format!("`{v}` is not a boolean"))),
                    }
                }
                _ => return Err(unknown()),
            },
            "sweep" => match key {
                "rhos" => {
                    let xs = v
                        .split(',')
                        .map(|s| parse_f64(line, key, s.trim()))
                        .collect::<Result<Vec<_>, _>>()?;
                    if xs.is_empty() {
                        return Err(bad(line, key, "empty list".into()));
                    }
                    self.sweep.rhos = Some(xs);
                }
                _ => return Err(unknown()),
            },
            _ => {
                return Err(ConfigError::UnknownSection {
                    line,
                    section: section.into(),
                })
            }
        }
        Ok(())
    }

    /// Applies `section.key=value`.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (path, value) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("override `{spec}` is not section.key=value")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| ConfigError::Invalid(format!("override `{spec}` is not section.key=value")))?;
        self.set(section.trim(), key.trim(), value, 0)
    }

    /// Range checks independent of the subcommand.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |m: String| Err(ConfigError::Invalid(m));
        if self.problem.dim < 3 {
            return inv(format!("N must be at least 3, got {}", self.problem.dim));
        }
        if let Some(rho) = self.problem.rho {
            if !(rho > 0.0) {
                return inv("rho must be positive".into());
            }
        }
        if let Some(p) = self.problem.p {
            if !(p > 2.0) {
                return inv(format!("p must exceed 2, got {p}"));
            }
        }
        if let Some(q) = self.problem.q {
            if !(q > 1.0) {
                return inv(format!("q must exceed 1, got {q}"));
            }
        }
        if self.grid.n < normflow::radial::MIN_NODES {
            return inv(format!("grid.n must be at least {}", normflow::radial::MIN_NODES));
        }
        if !(self.grid.rmax > 0.0) {
            return inv("grid.rmax must be positive".into());
        }
        if !(self.solver.tol > 0.0) {
            return inv("solver.tol must be positive".into());
        }
        if let Some(s) = self.solver.step {
            if !(s > 0.0) {
                return inv("solver.step must be positive".into());
            }
        }
        match self.solver.init {
            Some(InitSpec::Gaussian(x)) | Some(InitSpec::Plateau(x)) if !(x > 0.0) => {
                return inv("solver.init parameter must be positive".into())
            }
            _ => {}
        }
        if let Some(rs) = &self.sweep.rhos {
            if rs.iter().any(|r| !(*r > 0.0)) {
                return inv("rho must be positive".into());
            }
        }
        Ok(())
    }

    pub fn require_p(&self) -> Result<f64, ConfigError> {
        self.problem.p.ok_or(ConfigError::Missing("problem.p"))
    }

    pub fn require_rho(&self) -> Result<f64, ConfigError> {
        self.problem.rho.ok_or(ConfigError::Missing("problem.rho"))
    }

    pub fn require_family(&self) -> Result<FamilyName, ConfigError> {
        self.problem.family.ok_or(ConfigError::Missing("problem.family"))
    }

    /// The coefficient family; `two_q` needs `q`.
    pub fn family(&self) -> Result<normflow::Family, ConfigError> {
        match self.require_family()? {
            FamilyName::TwoQ => {
                let q = self.problem.q.ok_or(ConfigError::Missing("problem.q"))?;
                normflow::Family::two_q(q).map_err(|e| ConfigError::Invalid(e.to_string()))
            }
            FamilyName::BornInfeld => Ok(normflow::Family::born_infeld()),
        }
    }

    /// Canonical text form; parses back to an equal `Config`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let pr = &self.problem;
        s.push_str("[problem]\n");
        if let Some(f) = pr.family {
            let _ = writeln!(s, "family = {}", f.as_str());
        }
        let _ = writeln!(s, "N = {}", pr.dim);
        for (k, v) in [("p", pr.p), ("q", pr.q), ("rho", pr.rho)] {
            if let Some(v) = v {
                let _ = writeln!(s, "{k} = {}", num(v));
            }
        }
        let _ = writeln!(s, "\n[grid]\nn = {}\nrmax = {}", self.grid.n, num(self.grid.rmax));
        let sv = &self.solver;
        s.push_str("\n[solver]\n");
        if sv.tol_set {
            let _ = writeln!(s, "tol = {}", num(sv.tol));
        }
        if let Some(m) = sv.max_iter {
            let _ = writeln!(s, "max_iter = {m}");
        }
        if let Some(x) = sv.step {
            let _ = writeln!(s, "step = {}", num(x));
        }
        if let Some(m) = sv.metric {
            let _ = writeln!(s, "metric = {}", if m == MetricName::H1 { "h1" } else { "l2" });
        }
        if let Some(i) = sv.init {
            let _ = writeln!(s, "init = {}", i.render());
        }
        let _ = writeln!(s, "seed = {}", sv.seed);
        s.push_str("\n[output]\n");
        if let Some(d) = &self.output.dir {
            let _ = writeln!(s, "dir = {d}");
        }
        let _ = writeln!(s, "format = {}\nplot = {}", self.output.format.as_str(), self.output.plot);
        if let Some(rs) = &self.sweep.rhos {
            let list: Vec<String> = rs.iter().map(|r| num(*r)).collect();
            let _ = writeln!(s, "\n[sweep]\nrhos = {}", list.join(", "));
        }
        s
    }

    /// `(key, value)` pairs of every set parameter, for output headers. The
    /// output directory is left out so that runs into different directories
    /// produce identical files.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut section = String::new();
        for line in self.serialize().lines() {
            let line = line.trim();
            if let Some(sec) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = sec.to_string();
            } else if let Some((k, v)) = line.split_once('=') {
                if section == "output" && k.trim() == "dir" {
                    continue;
                }
                out.push((format!("{section}.{}", k.trim()), v.trim().to_string()));
            }
        }
        out
    }
}

/// Round-trip decimal form of a float.
fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Parses configuration text; defaults fill absent keys.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut cfg = Config::default();
    let mut section: Option<String> = None;
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("unterminated section header `{body}`"),
            })?;
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection {
                    line,
                    section: name.into(),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            msg: format!("expected `key = value`, got `{body}`"),
        })?;
        let key = key.trim();
        let sec = section.clone().ok_or_else(|| ConfigError::Syntax {
            line,
            msg: format!("key `{key}` outside any section"),
        })?;
        if !seen.insert((sec.clone(), key.to_string())) {
            return Err(ConfigError::Duplicate {
                line,
                key: format!("{sec}.{key}"),
            });
        }
        cfg.set(&sec, key, value, line)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
