//! Subcommand bodies. Each returns the summary printed to stdout, the files
//! to write and an exit status; nothing here touches the filesystem.

use std::sync::Arc;

use normflow::bipipeline::{solve_born_infeld, BiError, Schedule};
use normflow::energy::{EnergyError, ProblemSpec};
use normflow::groundstate::{mass_curve, solve_normalized, FlowError, FlowOptions, Init, MassCurve, Metric, SolveReport};
use normflow::mountainpass::{mp_solve, MpError, MpOptions};
use normflow::radial::{gradient_mid, RadialError};
use normflow::reference::{critical_thresholds, gn_constant, kwong_profile, q_gn_constant, GNConstants, ReferenceError};
use normflow::RadialGrid;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::config::{Config, ConfigError, Format, InitSpec, MetricName};
use crate::output::{self, Artifact, Cell, Series};
use crate::suite::{run_suite, SuiteError};

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_SUITE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Parameters rejected by a solver before any iteration.
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("numerical failure: {0}")]
    Numerics(String),
    #[error(transparent)]
    Suite(#[from] SuiteError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Problem(_) => EXIT_CONFIG,
            CliError::Numerics(_) | CliError::Suite(_) => EXIT_NONCONVERGENCE,
        }
    }
}

impl From<EnergyError> for CliError {
    fn from(e: EnergyError) -> Self {
        CliError::Problem(e.to_string())
    }
}

impl From<RadialError> for CliError {
    fn from(e: RadialError) -> Self {
        CliError::Problem(e.to_string())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Energy(e) => e.into(),
            FlowError::Options(m) => CliError::Problem(m),
            other => CliError::Numerics(other.to_string()),
        }
    }
}

impl From<ReferenceError> for CliError {
    fn from(e: ReferenceError) -> Self {
        match e {
            ReferenceError::Invalid(m) => CliError::Problem(m),
            ReferenceError::Radial(e) => e.into(),
            other => CliError::Numerics(other.to_string()),
        }
    }
}

impl From<MpError> for CliError {
    fn from(e: MpError) -> Self {
        match e {
            MpError::NotApplicable(m) => CliError::Problem(m),
            MpError::Energy(e) => e.into(),
            MpError::Radial(e) => e.into(),
            MpError::Flow(e) => e.into(),
            MpError::Reference(e) => e.into(),
            other => CliError::Numerics(other.to_string()),
        }
    }
}

impl From<BiError> for CliError {
    fn from(e: BiError) -> Self {
        match e {
            BiError::Invalid(m) => CliError::Problem(m),
            BiError::Coef(e) => CliError::Problem(e.to_string()),
            BiError::Energy(e) => e.into(),
            BiError::Flow(e) => e.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: String,
    pub artifacts: Vec<Artifact>,
    pub exit: i32,
}

fn grid_of(cfg: &Config) -> Result<Arc<RadialGrid>, CliError> {
    Ok(Arc::new(RadialGrid::new(cfg.problem.dim, cfg.grid.rmax, cfg.grid.n)?))
}

fn flow_options(cfg: &Config) -> FlowOptions {
    let d = FlowOptions::default();
    let s = &cfg.solver;
    FlowOptions {
        step: s.step.unwrap_or(d.step),
        tol: s.tol,
        max_iter: s.max_iter.unwrap_or(d.max_iter),
        init: s.init.map_or(d.init.clone(), init_of),
        metric: match s.metric {
            Some(MetricName::L2) => Metric::L2,
            Some(MetricName::H1) => Metric::H1,
            None => d.metric,
        },
        ..d
    }
}

fn init_of(i: InitSpec) -> Init {
    match i {
        InitSpec::Gaussian(width) => Init::Gaussian { width },
        InitSpec::Plateau(radius) => Init::Plateau { radius },
    }
}

fn spec_of(cfg: &Config) -> Result<ProblemSpec, CliError> {
    let fam = cfg.family()?;
    Ok(ProblemSpec::new(fam, cfg.require_p()?, cfg.require_rho()?, cfg.problem.dim)?)
}

/// Summary object with the parameter echo under `params`.
fn with_params(cfg: &Config, body: Value) -> Value {
    let mut m = Map::new();
    m.insert("params".into(), Value::Object(output::echo_object(&cfg.echo())));
    if let Value::Object(b) = body {
        m.extend(b);
    }
    Value::Object(m)
}

/// One-row CSV of the scalar entries of a summary object.
fn summary_csv(cfg: &Config, v: &Value) -> String {
    let mut header = Vec::new();
    let mut row = Vec::new();
    if let Value::Object(m) = v {
        for (k, x) in m {
            let cell = match x {
                Value::Number(n) if n.is_u64() => Cell::I(n.as_u64().unwrap()),
                Value::Number(n) => Cell::F(n.as_f64().unwrap_or(f64::NAN)),
                Value::Bool(b) => Cell::B(*b),
                Value::String(s) => Cell::S(s.replace(',', ";")),
                Value::Null => Cell::S(String::new()),
                _ => continue,
            };
            header.push(k.as_str());
            row.push(cell);
        }
    }
    output::csv(&cfg.echo(), &header, &[row])
}

/// Summary in the configured format plus its file.
fn emit(cfg: &Config, stem: &str, v: &Value, artifacts: &mut Vec<Artifact>) -> String {
    let text = match cfg.output.format {
        Format::Json => output::json(v),
        Format::Csv => summary_csv(cfg, v),
    };
    artifacts.push(Artifact::new(format!("{stem}.{}", cfg.output.format.as_str()), text.clone()));
    text
}

pub const MASS_CURVE_HEADER: [&str; 10] = [
    "rho", "m", "lambda", "grad2sq", "gradqq", "grad_linf", "pohozaev", "grad_res", "iters", "converged",
];

pub fn mass_curve_csv(echo: &[(String, String)], mc: &MassCurve) -> String {
    let rows: Vec<Vec<Cell>> = mc
        .rows
        .iter()
        .map(|r| {
            vec![
                Cell::F(r.rho),
                Cell::F(r.m),
                Cell::F(r.lambda),
                Cell::F(r.grad2sq),
                Cell::F(r.gradqq),
                Cell::F(r.grad_linf),
                Cell::F(r.pohozaev),
                Cell::F(r.grad_res),
                Cell::I(r.iters as u64),
                Cell::B(r.converged),
            ]
        })
        .collect();
    output::csv(echo, &MASS_CURVE_HEADER, &rows)
}

fn profile_csv(cfg: &Config, grid: &RadialGrid, u: &[f64], name: &str) -> Artifact {
    let rows: Vec<Vec<Cell>> = grid.nodes().iter().zip(u).map(|(r, v)| vec![Cell::F(*r), Cell::F(*v)]).collect();
    Artifact::new(format!("{name}.csv"), output::csv(&cfg.echo(), &["r", "u"], &rows))
}

fn profile_svg(grid: &RadialGrid, u: &[f64], title: &str, name: &str) -> Artifact {
    let pts = grid.nodes().iter().zip(u).map(|(r, v)| (*r, *v)).collect();
    Artifact::new(
        format!("{name}.svg"),
        output::svg_plot(title, "r", "u", &[Series { name: "u", points: pts }]),
    )
}

fn solve_json(r: &SolveReport, spec: &ProblemSpec) -> Value {
    json!({
        "regime": format!("{:?}", spec.regime()),
        "m": r.m,
        "lambda": r.lambda,
        "grad_res": r.grad_res,
        "pohozaev": r.pohozaev,
        "pohozaev_scale": r.pohozaev_scale,
        "multiplier_defect": r.multiplier_defect(spec.rho),
        "grad_linf": r.grad_linf,
        "grad2sq": r.grad2sq,
        "gradqq": r.gradqq,
        "iters": r.iters,
        "converged": r.converged,
        "stop": r.stop,
        "energy_monotone": r.energy_monotone,
        "mass_error": r.mass_error,
    })
}

pub fn solve(cfg: &Config) -> Result<Outcome, CliError> {
    let spec = spec_of(cfg)?;
    if spec.family.is_singular() {
        return Err(CliError::Problem("singular families are solved by the borninfeld subcommand".into()));
    }
    let grid = grid_of(cfg)?;
    let r = solve_normalized(&spec, &grid, &flow_options(cfg))?;
    let mut artifacts = Vec::new();
    let summary = emit(cfg, "solve", &with_params(cfg, solve_json(&r, &spec)), &mut artifacts);
    artifacts.push(profile_csv(cfg, &grid, r.u.values(), "profile"));
    if cfg.output.plot {
        artifacts.push(profile_svg(&grid, r.u.values(), "normalized solution", "profile"));
    }
    Ok(Outcome {
        summary,
        artifacts,
        exit: if r.converged { EXIT_OK } else { EXIT_NONCONVERGENCE },
    })
}

pub fn sweep(cfg: &Config) -> Result<Outcome, CliError> {
    let rhos = cfg.sweep.rhos.clone().ok_or(ConfigError::Missing("sweep.rhos"))?;
    let spec = ProblemSpec::new(cfg.family()?, cfg.require_p()?, rhos[0], cfg.problem.dim)?;
    if spec.family.is_singular() {
        return Err(CliError::Problem("singular families are solved by the borninfeld subcommand".into()));
    }
    let grid = grid_of(cfg)?;
    let mc = mass_curve(&spec, &grid, &rhos, &flow_options(cfg))?;
    let echo = cfg.echo();
    let mut artifacts = Vec::new();
    let summary = match cfg.output.format {
        Format::Csv => {
            let text = mass_curve_csv(&echo, &mc);
            let rows: Vec<Vec<Cell>> = mc
                .splits
                .iter()
                .map(|s| {
                    vec![
                        Cell::F(s.rho),
                        Cell::F(s.rho1),
                        Cell::F(s.rho2),
                        Cell::F(s.m),
                        Cell::F(s.m1),
                        Cell::F(s.m2),
                        Cell::F(s.margin),
                        Cell::B(s.strict),
                    ]
                })
                .collect();
            artifacts.push(Artifact::new("mass_curve.csv", text.clone()));
            artifacts.push(Artifact::new(
                "splits.csv",
                output::csv(&echo, &["rho", "rho1", "rho2", "m", "m1", "m2", "margin", "strict"], &rows),
            ));
            text
        }
        Format::Json => {
            let v = with_params(cfg, serde_json::to_value(&mc).expect("serializable"));
            let text = output::json(&v);
            artifacts.push(Artifact::new("mass_curve.json", text.clone()));
            text
        }
    };
    if cfg.output.plot {
        let m = mc.rows.iter().map(|r| (r.rho, r.m)).collect();
        let ratio = mc.rows.iter().map(|r| (r.rho, r.m / (r.rho * r.rho))).collect();
        artifacts.push(Artifact::new(
            "mass_curve.svg",
            output::svg_plot(
                "energy along the mass sweep",
                "rho",
                "value",
                &[Series { name: "m", points: m }, Series { name: "m/rho^2", points: ratio }],
            ),
        ));
    }
    let ok = mc.rows.iter().all(|r| r.converged);
    Ok(Outcome {
        summary,
        artifacts,
        exit: if ok { EXIT_OK } else { EXIT_NONCONVERGENCE },
    })
}

fn constants_json(k: &GNConstants) -> Value {
    let mut v = serde_json::to_value(k).expect("serializable");
    if let Some(err) = k.kwong_identity_error() {
        v["kwong_identity_error"] = json!(err);
        v["kwong_identity_ok"] = json!(err < 5e-3);
    }
    v
}

pub fn kwong(cfg: &Config) -> Result<Outcome, CliError> {
    let p = cfg.require_p()?;
    let grid = grid_of(cfg)?;
    let k = gn_constant(cfg.problem.dim, p, &grid)?;
    let prof = kwong_profile(cfg.problem.dim, p, &grid)?;
    let mut v = constants_json(&k);
    v["alpha"] = json!(prof.alpha);
    v["kappa"] = json!(prof.kappa);
    v["r_match"] = json!(prof.r_match);
    let mut artifacts = Vec::new();
    let summary = emit(cfg, "kwong", &with_params(cfg, v), &mut artifacts);
    artifacts.push(profile_csv(cfg, &grid, &prof.values, "kwong_profile"));
    if cfg.output.plot {
        artifacts.push(profile_svg(&grid, &prof.values, "Kwong profile", "kwong_profile"));
    }
    Ok(Outcome {
        summary,
        artifacts,
        exit: EXIT_OK,
    })
}

pub fn gn(cfg: &Config) -> Result<Outcome, CliError> {
    let p = cfg.require_p()?;
    let dim = cfg.problem.dim;
    let grid = grid_of(cfg)?;
    let mut k = gn_constant(dim, p, &grid)?;
    if let Some(q) = cfg.problem.q.filter(|q| *q != 2.0) {
        let lq = q_gn_constant(dim, q, p, &grid)?;
        k.q = q;
        k.nu_pq = lq.nu_pq;
        k.k_np = lq.k_np;
        k.k_np_closed_form = lq.k_np_closed_form;
    }
    let mut artifacts = Vec::new();
    let summary = emit(cfg, "gn", &with_params(cfg, constants_json(&k)), &mut artifacts);
    Ok(Outcome {
        summary,
        artifacts,
        exit: EXIT_OK,
    })
}

pub fn thresholds(cfg: &Config) -> Result<Outcome, CliError> {
    let fam = cfg.family()?;
    if fam.is_singular() {
        return Err(CliError::Problem("thresholds need a (2,q) family with finite growth constants".into()));
    }
    let grid = grid_of(cfg)?;
    let k = critical_thresholds(&fam, cfg.problem.dim, &grid)?;
    let mut artifacts = Vec::new();
    let summary = emit(cfg, "thresholds", &with_params(cfg, constants_json(&k)), &mut artifacts);
    Ok(Outcome {
        summary,
        artifacts,
        exit: EXIT_OK,
    })
}

pub fn mpass(cfg: &Config) -> Result<Outcome, CliError> {
    let spec = spec_of(cfg)?;
    let grid = grid_of(cfg)?;
    let d = MpOptions::default();
    let s = &cfg.solver;
    let opts = MpOptions {
        step: s.step.unwrap_or(d.step),
        tol: if s.tol_set { s.tol } else { d.tol },
        max_iter: s.max_iter.unwrap_or(d.max_iter),
        init: s.init.map_or(d.init.clone(), init_of),
        ..d
    };
    let r = mp_solve(&spec, &grid, &opts)?;
    let g = &r.geometry;
    let v = json!({
        "m_upper": r.m_upper,
        "lambda": r.lambda,
        "pohozaev": r.pohozaev,
        "eta": g.eta,
        "I_u0": g.i_u0,
        "I_u1": g.i_u1,
        "Q_u0": g.q_u0,
        "Q_u1": g.q_u1,
        "sigma_star": r.sigma_star,
        "converged": r.converged,
        "eta_bar": g.eta_bar,
        "inf_lower": g.inf_lower,
        "pohozaev_scale": r.pohozaev_scale,
        "grad_res": r.grad_res,
        "multiplier_defect": r.multiplier_defect,
        "iters": r.iters,
        "stop": r.stop,
        "lambda_positive": r.lambda_positive,
        "level_ordering": r.level_ordering(),
        "levels_monotone": r.levels_monotone,
        "multi_lobe": r.multi_lobe,
    });
    let mut artifacts = Vec::new();
    let summary = emit(cfg, "mpass", &with_params(cfg, v), &mut artifacts);
    let ug = r.u.grid();
    artifacts.push(profile_csv(cfg, ug, r.u.values(), "mpass_profile"));
    if cfg.output.plot {
        artifacts.push(profile_svg(ug, r.u.values(), "mountain-pass solution", "mpass_profile"));
    }
    let ok = r.converged && r.lambda_positive;
    Ok(Outcome {
        summary,
        artifacts,
        exit: if ok { EXIT_OK } else { EXIT_NONCONVERGENCE },
    })
}

pub fn borninfeld(cfg: &Config) -> Result<Outcome, CliError> {
    let p = cfg.require_p()?;
    let rho = cfg.require_rho()?;
    let grid = grid_of(cfg)?;
    let schedule = Schedule {
        q: cfg.problem.q,
        ..Default::default()
    };
    let r = solve_born_infeld(p, rho, &grid, &schedule, &flow_options(cfg))?;
    let v = json!({
        "theta_final": r.theta_final,
        "promoted": r.promoted,
        "m": r.solve.m,
        "lambda": r.solve.lambda,
        "grad_res": r.solve.grad_res,
        "converged": r.solve.converged,
        "grad_linf": r.grad_linf,
        "claim3_gate": r.claim3_gate,
        "flux_sup": r.flux_sup,
        "field_sup": r.field_sup,
        "claim2_stable": r.claim2_stable,
        "origin_flux_limit": r.origin_flux_limit,
        "decay_constant": r.decay_constant,
        "untruncated_residual": r.untruncated_residual,
        "residual_scale": r.residual_scale,
        "groundstate_flag": r.groundstate_flag,
        "uniform_bounds": r.uniform_bounds,
        "steps": r.steps,
    });
    let mut artifacts = Vec::new();
    let summary = emit(cfg, "borninfeld", &with_params(cfg, v), &mut artifacts);
    let u = r.solve.u.values();
    let slopes = gradient_mid(&grid, u);
    let rows: Vec<Vec<Cell>> = r
        .flux_profile
        .iter()
        .zip(&slopes)
        .enumerate()
        .map(|(i, ((rm, flux), du))| vec![Cell::F(*rm), Cell::F(0.5 * (u[i] + u[i + 1])), Cell::F(*du), Cell::F(*flux)])
        .collect();
    artifacts.push(Artifact::new(
        "borninfeld_profile.csv",
        output::csv(&cfg.echo(), &["r", "u", "du", "flux"], &rows),
    ));
    if cfg.output.plot {
        artifacts.push(profile_svg(&grid, u, "Born-Infeld solution", "borninfeld_profile"));
    }
    Ok(Outcome {
        summary,
        artifacts,
        exit: if r.promoted { EXIT_OK } else { EXIT_NONCONVERGENCE },
    })
}

/// Runs the invariant battery with the configured seed; progress lines go to
/// `progress` as criteria finish.
pub fn check(cfg: &Config, progress: impl FnMut(&crate::suite::Criterion)) -> Result<Outcome, CliError> {
    let rep = run_suite(cfg.solver.seed, progress)?;
    let artifacts = rep.artifacts(&cfg.echo());
    let summary = rep.criteria.iter().map(|c| c.line() + "\n").collect();
    Ok(Outcome {
        summary,
        artifacts,
        exit: if rep.all_pass() { EXIT_OK } else { EXIT_SUITE },
    })
}
