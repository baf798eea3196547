//! Normalized gradient flow on the mass sphere `S_ρ` and mass-curve sweeps.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::energy::{
    self, energy_gradient, multiplier_from_terms, normalize, pohozaev_from_terms, pohozaev_scale,
    projected_residual, terms, EnergyError, ProblemSpec, Terms,
};
use crate::radial::{dot, grad_linf, RadialFunction, RadialGrid, Tridiagonal};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("non-finite iterate at step {0}")]
    NonFinite(usize),
    #[error("invalid options: {0}")]
    Options(String),
}

/// Preconditioner of the descent step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Plain quadrature inner product.
    L2,
    /// Tangent stiffness of the operator plus a multiplier shift.
    H1,
}

/// Initial profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `e^{−(r/width)²}`.
    Gaussian { width: f64 },
    /// Smoothed indicator of `[0, radius]` with unit edge width.
    Plateau { radius: f64 },
    /// Explicit nodal values.
    Profile(Vec<f64>),
}

impl Init {
    pub fn sample(&self, grid: &RadialGrid) -> Result<Vec<f64>, FlowError> {
        let mut u = match self {
            Init::Gaussian { width } => grid.sample(|r| (-(r / width).powi(2)).exp()),
            Init::Plateau { radius } => grid.sample(|r| 0.5 * (1.0 - ((r - radius) / 1.0).tanh())),
            Init::Profile(v) => {
                if v.len() != grid.len() {
                    return Err(FlowError::Options(format!(
                        "initial profile has {} values, grid has {}",
                        v.len(),
                        grid.len()
                    )));
                }
                v.clone()
            }
        };
        *u.last_mut().unwrap() = 0.0;
        Ok(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowOptions {
    /// Initial step `τ₀`.
    pub step: f64,
    /// Tolerance on the projected-gradient norm.
    pub tol: f64,
    /// Tolerance on the projected-gradient norm relative to `|λ|ρ`; both
    /// tolerances must be met. Small masses have small multipliers, where the
    /// absolute tolerance alone is met by the initial guess.
    pub rel_tol: f64,
    pub max_iter: usize,
    pub init: Init,
    pub metric: Metric,
    /// Replace the result by its nonincreasing rearrangement of `|u|`.
    pub radial_decreasing: bool,
    /// GN constant for the per-iterate coercivity check.
    pub gn_constant: Option<f64>,
    /// Stop once `Q(u) = ‖∇u‖₂² + ‖∇u‖_q^q` drops below this value.
    pub vanishing_q: Option<f64>,
    /// Energies below this are reported as divergence.
    pub divergence_energy: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            tol: 1e-6,
            rel_tol: 1e-8,
            max_iter: 5000,
            init: Init::Gaussian { width: 1.0 },
            metric: Metric::H1,
            radial_decreasing: true,
            gn_constant: None,
            vanishing_q: None,
            divergence_energy: -1e6,
        }
    }
}

impl FlowOptions {
    fn validate(&self) -> Result<(), FlowError> {
        if !(self.step > 0.0) {
            return Err(FlowError::Options(format!("step must be positive, got {}", self.step)));
        }
        if !(self.tol > 0.0) {
            return Err(FlowError::Options(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(FlowError::Options(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    /// `Q(u)` fell below the vanishing threshold.
    Vanishing,
    /// Energy fell below the divergence floor.
    Divergent,
    /// No admissible step could be found.
    Stalled,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub u: RadialFunction,
    pub lambda: f64,
    pub m: f64,
    pub grad_res: f64,
    pub pohozaev: f64,
    /// Sum of the magnitudes of the Pohozaev terms.
    pub pohozaev_scale: f64,
    pub grad_linf: f64,
    pub grad2sq: f64,
    pub gradqq: f64,
    /// `‖u‖_p^p`.
    pub lp: f64,
    /// `∫b(|∇u|²)|∇u|²`.
    pub bs: f64,
    pub iters: usize,
    pub converged: bool,
    pub stop: StopReason,
    /// Energy never increased beyond round-off between accepted iterates.
    pub energy_monotone: bool,
    /// `Q(u)` never increased between accepted iterates.
    pub q_monotone: bool,
    /// Iterates violating the GN lower bound, when a constant was supplied.
    pub coercivity_violations: usize,
    /// Largest relative mass error over accepted iterates.
    pub mass_error: f64,
}

impl SolveReport {
    /// `|∫b s + λ‖u‖₂² − ‖u‖_p^p|`.
    pub fn multiplier_defect(&self, rho: f64) -> f64 {
        (self.bs + self.lambda * rho * rho - self.lp).abs()
    }

    pub fn q_functional(&self) -> f64 {
        self.grad2sq + self.gradqq
    }
}

/// Descent direction `M⁻¹G − μ M⁻¹Wu`, tangent to the sphere in the metric `M`.
pub(crate) fn sphere_direction(
    grid: &RadialGrid,
    metric: Option<&Tridiagonal>,
    grad: &[f64],
    u: &[f64],
) -> Vec<f64> {
    let n = grid.len();
    let m = n - 1;
    let w = grid.weights();
    let wu: Vec<f64> = (0..m).map(|i| w[i] * u[i]).collect();
    let (a, b) = match metric {
        Some(t) => (t.solve(&grad[..m]), t.solve(&wu)),
        None => (
            (0..m).map(|i| grad[i] / w[i]).collect(),
            u[..m].to_vec(),
        ),
    };
    let mu = dot(&a, &wu) / dot(&b, &wu);
    let mut d = vec![0.0; n];
    for i in 0..m {
        d[i] = a[i] - mu * b[i];
    }
    d
}

/// Midpoint tangent stiffness `b + 2sb′`, clipped to a finite positive range.
pub(crate) fn tangent_kappa(spec: &ProblemSpec, grid: &RadialGrid, u: &[f64]) -> Vec<f64> {
    let inv = 1.0 / grid.h();
    u.windows(2)
        .map(|w| {
            let g = (w[1] - w[0]) * inv;
            let k = spec.family.flux_derivative(g * g);
            if k.is_finite() {
                k.clamp(1e-12, 1e12)
            } else {
                1e12
            }
        })
        .collect()
}

/// Builds the metric operator; `None` stands for the L2 metric.
pub(crate) fn build_metric(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    u: &[f64],
    metric: Metric,
    alpha: f64,
) -> Option<Tridiagonal> {
    match metric {
        Metric::L2 => None,
        Metric::H1 => Some(Tridiagonal::metric(grid, &tangent_kappa(spec, grid, u), alpha)),
    }
}

fn rearrange(u: &mut [f64]) {
    for v in u.iter_mut() {
        *v = v.abs();
    }
    u.sort_by(|a, b| b.total_cmp(a));
}

fn finish(
    spec: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    u: Vec<f64>,
    state: FlowState,
) -> Result<SolveReport, FlowError> {
    let t = terms(spec, grid, &u)?;
    let g = energy_gradient(spec, grid, &u)?;
    let lambda = multiplier_from_terms(&t)?;
    let grad_res = projected_residual(grid, &g, &u, lambda);
    let converged = state.met(grad_res, lambda, spec.rho);
    Ok(SolveReport {
        lambda,
        m: t.energy(spec.p),
        grad_res,
        pohozaev: pohozaev_from_terms(spec, &t),
        pohozaev_scale: pohozaev_scale(spec, &t),
        grad_linf: grad_linf(grid, &u),
        grad2sq: t.grad2sq,
        gradqq: t.gradqq,
        lp: t.lp,
        bs: t.bs,
        iters: state.iters,
        converged,
        stop: match state.stop {
            StopReason::MaxIter | StopReason::Stalled if converged => StopReason::Converged,
            s => s,
        },
        energy_monotone: state.monotone,
        q_monotone: state.q_monotone,
        coercivity_violations: state.coercivity_violations,
        mass_error: state.mass_error,
        u: RadialFunction::new(grid.clone(), u).expect("length checked"),
    })
}

struct FlowState {
    iters: usize,
    stop: StopReason,
    monotone: bool,
    q_monotone: bool,
    coercivity_violations: usize,
    mass_error: f64,
    tol: f64,
    rel_tol: f64,
}

impl FlowState {
    fn met(&self, res: f64, lambda: f64, rho: f64) -> bool {
        res < self.tol && res < self.rel_tol * lambda.abs() * rho
    }
}

/// Energy round-off scale: magnitudes of the energy terms times a few ulps.
fn roundoff(t: &Terms, p: f64) -> f64 {
    1e-14 * (0.5 * t.big_b.abs() + t.lp.abs() / p)
}

/// Lower bound `(c₁/2)‖∇u‖₂² − (𝒞^p/p) ρ^{p(1−δ)} ‖∇u‖₂^{pδ}`.
pub fn coercivity_bound(spec: &ProblemSpec, gn: f64, grad2sq: f64) -> f64 {
    let p = spec.p;
    let d = spec.delta_p();
    0.5 * spec.family.c1 * grad2sq - gn.powf(p) / p * spec.rho.powf(p * (1.0 - d)) * grad2sq.powf(0.5 * p * d)
}

/// Projected descent `u ← Π_ρ(u − τ M⁻¹ ∇I(u))` with Armijo backtracking.
///
/// `M` is the identity for the L2 metric. For H1 it is the tangent stiffness
/// `K_{b+2sb′}` plus `|λ| W`, rebuilt when either drifts; it acts on the free
/// nodes, the last node being held at zero.
pub fn solve_normalized(spec: &ProblemSpec, grid: &Arc<RadialGrid>, opts: &FlowOptions) -> Result<SolveReport, FlowError> {
    opts.validate()?;
    let rho = spec.rho;
    let mut u = opts.init.sample(grid)?;
    normalize(grid, &mut u, rho)?;
    let mut state = FlowState {
        iters: 0,
        stop: StopReason::MaxIter,
        monotone: true,
        q_monotone: true,
        coercivity_violations: 0,
        mass_error: 0.0,
        tol: opts.tol,
        rel_tol: opts.rel_tol,
    };
    let mut t = terms(spec, grid, &u)?;
    let mut e = t.energy(spec.p);
    let mut tau = opts.step;
    let mut metric: Option<Tridiagonal> = None;
    let mut metric_alpha = f64::NAN;
    let mut metric_age = usize::MAX;

    for it in 0..opts.max_iter {
        state.iters = it;
        let g = energy_gradient(spec, grid, &u)?;
        let lambda = multiplier_from_terms(&t)?;
        let res = projected_residual(grid, &g, &u, lambda);
        if !res.is_finite() {
            return Err(FlowError::NonFinite(it));
        }
        if let Some(c) = opts.gn_constant {
            let bound = coercivity_bound(spec, c, t.grad2sq);
            if e < bound - 1e-9 * (e.abs() + bound.abs()) - roundoff(&t, spec.p) {
                state.coercivity_violations += 1;
            }
        }
        if state.met(res, lambda, rho) {
            state.stop = StopReason::Converged;
            break;
        }
        if let Some(qmin) = opts.vanishing_q {
            if t.q_functional() < qmin {
                state.stop = StopReason::Vanishing;
                break;
            }
        }
        if e < opts.divergence_energy {
            state.stop = StopReason::Divergent;
            break;
        }

        let alpha = lambda.abs();
        let rebuild = opts.metric == Metric::H1
            && (metric.is_none()
                || metric_age >= 10
                || !((alpha - metric_alpha).abs() <= 0.3 * metric_alpha.max(1e-300)));
        if rebuild {
            metric = build_metric(spec, grid, &u, opts.metric, alpha);
            metric_alpha = alpha;
            metric_age = 0;
        }
        metric_age = metric_age.saturating_add(1);
        let d = sphere_direction(grid, metric.as_ref(), &g, &u);
        let slope = dot(&g, &d);
        if !slope.is_finite() {
            return Err(FlowError::NonFinite(it));
        }

        let slack = roundoff(&t, spec.p);
        let mut accepted = false;
        while tau > 1e-14 {
            let mut trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a - tau * b).collect();
            if normalize(grid, &mut trial, rho).is_err() {
                tau *= 0.5;
                continue;
            }
            let tt = match terms(spec, grid, &trial) {
                Ok(v) => v,
                Err(EnergyError::GradientConstraint { .. }) => {
                    tau *= 0.5;
                    continue;
                }
                Err(err) => return Err(err.into()),
            };
            let et = tt.energy(spec.p);
            if !et.is_finite() {
                tau *= 0.5;
                continue;
            }
            let armijo = et <= e - 1e-4 * tau * slope + slack;
            // near the round-off floor, accept steps that shrink the residual
            let polish = !armijo && et <= e + slack && {
                let gt = energy_gradient(spec, grid, &trial)?;
                let lt = multiplier_from_terms(&tt)?;
                projected_residual(grid, &gt, &trial, lt) < res
            };
            if armijo || polish {
                if et > e + slack {
                    state.monotone = false;
                }
                if tt.q_functional() > t.q_functional() {
                    state.q_monotone = false;
                }
                let mass = tt.mass2.sqrt();
                state.mass_error = state.mass_error.max((mass / rho - 1.0).abs());
                u = trial;
                t = tt;
                e = et;
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if !accepted {
            state.stop = StopReason::Stalled;
            break;
        }
        tau = (tau * 1.5).min(opts.step);
        state.iters = it + 1;
    }
    if opts.radial_decreasing {
        rearrange(&mut u);
    }
    finish(spec, grid, u, state)
}

/// One row of a mass sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassRow {
    pub rho: f64,
    pub m: f64,
    pub lambda: f64,
    pub grad2sq: f64,
    pub gradqq: f64,
    pub grad_linf: f64,
    pub pohozaev: f64,
    pub grad_res: f64,
    pub iters: usize,
    pub converged: bool,
    /// `|∫b s + λρ² − ‖u‖_p^p|`.
    pub multiplier_defect: f64,
}

impl MassRow {
    fn from_report(rho: f64, r: &SolveReport) -> Self {
        Self {
            rho,
            m: r.m,
            lambda: r.lambda,
            grad2sq: r.grad2sq,
            gradqq: r.gradqq,
            grad_linf: r.grad_linf,
            pohozaev: r.pohozaev,
            grad_res: r.grad_res,
            iters: r.iters,
            converged: r.converged,
            multiplier_defect: r.multiplier_defect(rho),
        }
    }
}

/// Subadditivity check `m(ρ) < m(ρ₁) + m(ρ₂)` with `ρ₁² + ρ₂² = ρ²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitCheck {
    pub rho: f64,
    pub fraction: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub m: f64,
    pub m1: f64,
    pub m2: f64,
    /// `m(ρ₁) + m(ρ₂) − m(ρ)`.
    pub margin: f64,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassCurve {
    /// Rows of the requested masses, in input order.
    pub rows: Vec<MassRow>,
    /// Largest `|m(ρ_{k+1}) − m(ρ_k)|` between adjacent requested masses.
    pub max_jump: f64,
    pub splits: Vec<SplitCheck>,
    /// `m(ρ)/ρ²` strictly decreasing along increasing `ρ`.
    pub ratio_decreasing: bool,
    pub all_converged: bool,
}

/// Split fractions `ρ₁/ρ`.
pub const SPLIT_FRACTIONS: [f64; 3] = [0.3, 0.5, 0.7];

/// Margins above this count as strict.
pub const STRICT_MARGIN: f64 = 1e-8;

/// Solves at every `ρ` in the list and at the split masses, in parallel.
pub fn mass_curve(
    template: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    rhos: &[f64],
    opts: &FlowOptions,
) -> Result<MassCurve, FlowError> {
    let mut all: Vec<f64> = rhos.to_vec();
    for &rho in rhos {
        for f in SPLIT_FRACTIONS {
            all.push(f * rho);
            all.push((1.0 - f * f).sqrt() * rho);
        }
    }
    let reports: Vec<SolveReport> = all
        .par_iter()
        .map(|&rho| solve_normalized(&template.with_rho(rho)?, grid, opts))
        .collect::<Result<_, _>>()?;
    let rows: Vec<MassRow> = rhos
        .iter()
        .zip(&reports)
        .map(|(&rho, r)| MassRow::from_report(rho, r))
        .collect();
    let mut splits = Vec::new();
    let mut k = rhos.len();
    for (i, &rho) in rhos.iter().enumerate() {
        for f in SPLIT_FRACTIONS {
            let (a, b) = (&reports[k], &reports[k + 1]);
            k += 2;
            let margin = a.m + b.m - reports[i].m;
            splits.push(SplitCheck {
                rho,
                fraction: f,
                rho1: all[k - 2],
                rho2: all[k - 1],
                m: reports[i].m,
                m1: a.m,
                m2: b.m,
                margin,
                strict: margin > STRICT_MARGIN,
            });
        }
    }
    let max_jump = rows
        .windows(2)
        .map(|w| (w[1].m - w[0].m).abs())
        .fold(0.0, f64::max);
    let mut sorted: Vec<&MassRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.rho.total_cmp(&b.rho));
    let ratio_decreasing = sorted
        .windows(2)
        .all(|w| w[1].m / (w[1].rho * w[1].rho) < w[0].m / (w[0].rho * w[0].rho));
    Ok(MassCurve {
        all_converged: reports.iter().all(|r| r.converged),
        rows,
        max_jump,
        splits,
        ratio_decreasing,
    })
}

/// Result of the small-dilation probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    /// Largest `t ∈ {2⁻¹, …, 2⁻²⁰}` with `I(u_t) < 0`.
    pub t: Option<f64>,
    pub energy_at_t: Option<f64>,
    /// Log–log slope of `|I(u_t)|` over the two smallest `t`.
    pub small_t_exponent: f64,
    /// `p δ_p`, the expected exponent.
    pub expected_exponent: f64,
}

/// Sweeps `t = 2⁻ᵏ` and evaluates `I(u_t)` through the exact fiber expansion
/// `I(u_t) = J(ln t, u)`, which avoids resampling `u` on a stretched grid.
pub fn small_t_probe(spec: &ProblemSpec, grid: &RadialGrid, u: &[f64]) -> Result<ProbeResult, FlowError> {
    let mut found = None;
    let mut vals = Vec::with_capacity(20);
    for k in 1..=20 {
        let t = 0.5f64.powi(k);
        let e = energy::fiber_energy(spec, grid, u, t.ln())?;
        vals.push((t, e));
        if found.is_none() && e < 0.0 {
            found = Some((t, e));
        }
    }
    let (t1, e1) = vals[18];
    let (t2, e2) = vals[19];
    let slope = (e1.abs().ln() - e2.abs().ln()) / (t1.ln() - t2.ln());
    Ok(ProbeResult {
        t: found.map(|f| f.0),
        energy_at_t: found.map(|f| f.1),
        small_t_exponent: slope,
        expected_exponent: spec.p * spec.delta_p(),
    })
}
