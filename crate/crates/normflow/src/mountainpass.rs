//! Mountain-pass solutions in the supercritical regime.
//!
//! The level is estimated by minimizing `u ↦ max_σ J(σ,u)` over the mass
//! sphere. After each step the iterate is replaced by its fiber maximizer
//! `σ*∗u = e^{σ*N/2}u(e^{σ*}·)`, realized exactly by shrinking the grid by
//! `e^{σ*}`; at the replaced iterate `σ* = 0` and `P(u) = −∂_σJ(0,u) = 0`.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::coefficients::{certify_assumptions, default_samples};
use crate::energy::{
    energy_gradient, fiber_energy, multiplier_from_terms, normalize, pohozaev_from_terms,
    pohozaev_scale, projected_residual, terms, EnergyError, ProblemSpec, Regime,
};
use crate::groundstate::{build_metric, sphere_direction, FlowError, Init, Metric};
use crate::radial::{dot, grad_norm_s, gradient_mid, lp_norm_p, RadialError, RadialFunction, RadialGrid};
use crate::reference::{gn_constant, ReferenceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("no sigma in [-40, 40] realizes the {0} end of the geometry")]
    Geometry(&'static str),
    #[error("fiber map has no interior maximum in [-40, 40]")]
    NoFiberMaximum,
    #[error("non-finite iterate at step {0}")]
    NonFinite(usize),
}

/// Endpoints of the mountain-pass geometry along the fiber of a seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Geometry {
    pub eta: f64,
    /// `η̄_ρ = [2𝒞^p ρ^{p(1−δ)}/(pc₁)]^{2/(2−pδ)}`.
    pub eta_bar: f64,
    /// Lower estimate of `inf_{V_η} I`.
    pub inf_lower: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    #[serde(rename = "I_u0")]
    pub i_u0: f64,
    #[serde(rename = "I_u1")]
    pub i_u1: f64,
    #[serde(rename = "Q_u0")]
    pub q_u0: f64,
    #[serde(rename = "Q_u1")]
    pub q_u1: f64,
}

impl Geometry {
    /// `Q(u₀) < η < Q(u₁)`, `I(u₀) < inf_{V_η}I` estimate, `I(u₁) < 0`.
    pub fn holds(&self) -> bool {
        self.q_u0 < self.eta && self.eta < self.q_u1 && self.i_u0 < self.inf_lower && self.i_u1 < 0.0
    }
}

fn check_applicable(spec: &ProblemSpec) -> Result<(), MpError> {
    if let Some(t) = spec.family.truncation() {
        if t.base.is_singular() {
            return Err(MpError::NotApplicable(
                "truncated singular operators violate (b3) for small theta; the supercritical case is open".into(),
            ));
        }
    }
    if spec.family.is_singular() {
        return Err(MpError::NotApplicable("singular operators need a truncation".into()));
    }
    if spec.regime() != Regime::Supercritical {
        return Err(MpError::NotApplicable(format!("regime is {:?}, not supercritical", spec.regime())));
    }
    let rep = certify_assumptions(&spec.family, &default_samples(&spec.family), spec.dim, spec.p);
    if !rep.b3.pass {
        return Err(MpError::NotApplicable(format!(
            "(b3) fails: alpha = {} <= {}",
            rep.alpha, rep.alpha_required
        )));
    }
    Ok(())
}

/// `Q(σ∗u) = e^{2σ}‖∇u‖₂² + e^{σ(q(N+2)/2−N)}‖∇u‖_q^q`.
fn fiber_q(spec: &ProblemSpec, g2: f64, gq: f64, sigma: f64) -> f64 {
    let n = spec.dim as f64;
    let q = spec.family.q;
    (2.0 * sigma).exp() * g2 + (sigma * (q * (n + 2.0) / 2.0 - n)).exp() * gq
}

/// Locates `u₀ = σ₀∗u` and `u₁ = σ₁∗u` with `η = η̄_ρ/2`.
pub fn mp_geometry(spec: &ProblemSpec, grid: &RadialGrid, u_seed: &[f64]) -> Result<Geometry, MpError> {
    check_applicable(spec)?;
    let n = spec.dim as f64;
    let q = spec.family.q;
    if !(q * (n + 2.0) / 2.0 - n > 0.0) {
        return Err(MpError::NotApplicable(format!("q = {q} must exceed 2N/(N+2)")));
    }
    let ref_grid = Arc::new(RadialGrid::new(spec.dim, 40.0, 8192)?);
    let c = gn_constant(spec.dim, spec.p, &ref_grid)?.c_np.expect("filled by gn_constant");
    let p = spec.p;
    let d = spec.delta_p();
    let rho = spec.rho;
    let c1 = spec.family.c1;
    let k = c.powf(p) / p * rho.powf(p * (1.0 - d));
    let eta_bar = (2.0 * k / c1).powf(2.0 / (2.0 - p * d));
    let eta = 0.5 * eta_bar;
    let inf_lower = 0.5 * c1 * eta - k * eta.powf(0.5 * p * d);

    let mut u = u_seed.to_vec();
    normalize(grid, &mut u, rho)?;
    let g2 = grad_norm_s(grid, &u, 2.0);
    let gq = grad_norm_s(grid, &u, q);
    let steps = 160;
    let ds = 40.0 / steps as f64;
    let mut lower = None;
    for j in 1..=steps {
        let s = -(j as f64) * ds;
        let qv = fiber_q(spec, g2, gq, s);
        let iv = fiber_energy(spec, grid, &u, s)?;
        if qv < eta && iv < inf_lower {
            lower = Some((s, iv, qv));
            break;
        }
    }
    let (sigma0, i_u0, q_u0) = lower.ok_or(MpError::Geometry("lower"))?;
    let mut upper = None;
    for j in 1..=steps {
        let s = j as f64 * ds;
        let qv = fiber_q(spec, g2, gq, s);
        let iv = match fiber_energy(spec, grid, &u, s) {
            Ok(v) => v,
            Err(EnergyError::GradientConstraint { .. }) => break,
            Err(e) => return Err(e.into()),
        };
        if qv > eta && iv < 0.0 {
            upper = Some((s, iv, qv));
            break;
        }
    }
    let (sigma1, i_u1, q_u1) = upper.ok_or(MpError::Geometry("upper"))?;
    Ok(Geometry {
        eta,
        eta_bar,
        inf_lower,
        sigma0,
        sigma1,
        i_u0,
        i_u1,
        q_u0,
        q_u1,
    })
}

/// Maximizer of `σ ↦ J(σ,u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberMax {
    pub sigma: f64,
    pub value: f64,
    /// Local maxima seen by the coarse scan.
    pub lobes: usize,
}

/// `J(·,u)` and `∂_σJ(·,u)` with the slopes and `‖u‖_p^p` of `u` precomputed.
struct Fiber<'a> {
    spec: &'a ProblemSpec,
    s: Vec<f64>,
    w: &'a [f64],
    lp: f64,
}

impl<'a> Fiber<'a> {
    fn new(spec: &'a ProblemSpec, grid: &'a RadialGrid, u: &[f64]) -> Self {
        Self {
            spec,
            s: gradient_mid(grid, u).iter().map(|g| g * g).collect(),
            w: grid.mid_weights(),
            lp: lp_norm_p(grid, u, spec.p),
        }
    }

    fn exps(&self, sigma: f64) -> (f64, f64, f64) {
        let n = self.spec.dim as f64;
        let gp = n * (0.5 * self.spec.p - 1.0);
        ((sigma * (n + 2.0)).exp(), (-n * sigma).exp(), (sigma * gp).exp())
    }

    fn value(&self, sigma: f64) -> f64 {
        let fam = &self.spec.family;
        let (e, en, ep) = self.exps(sigma);
        let big_b: f64 = self.s.iter().zip(self.w).map(|(s, w)| w * fam.big_b(e * s)).sum();
        let v = 0.5 * en * big_b - ep * self.lp / self.spec.p;
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    fn derivative(&self, sigma: f64) -> f64 {
        let fam = &self.spec.family;
        let n = self.spec.dim as f64;
        let gp = n * (0.5 * self.spec.p - 1.0);
        let (e, en, ep) = self.exps(sigma);
        let (mut big_b, mut bs) = (0.0, 0.0);
        for (s, w) in self.s.iter().zip(self.w) {
            let x = e * s;
            big_b += w * fam.big_b(x);
            bs += w * fam.b(x) * x;
        }
        -0.5 * n * en * big_b + 0.5 * (n + 2.0) * en * bs - gp * ep * self.lp / self.spec.p
    }
}

/// Coarse scan of `J(·,u)` on `[−40, 40]` with step 1/4, then golden-section
/// search on the best lobe, finished by bisection on the sign of `∂_σJ` so
/// that `σ*` is resolved to round-off.
pub fn fiber_maximize(spec: &ProblemSpec, grid: &RadialGrid, u: &[f64]) -> Result<FiberMax, MpError> {
    if u.len() != grid.len() {
        return Err(EnergyError::Length {
            expected: grid.len(),
            got: u.len(),
        }
        .into());
    }
    let fib = Fiber::new(spec, grid, u);
    let steps = 320;
    let ds = 80.0 / steps as f64;
    let sig = |j: usize| -40.0 + j as f64 * ds;
    let vals: Vec<f64> = (0..=steps).map(|j| fib.value(sig(j))).collect();
    let mut best = None;
    let mut lobes = 0;
    for j in 1..steps {
        if vals[j] > vals[j - 1] && vals[j] >= vals[j + 1] && vals[j].is_finite() {
            lobes += 1;
            if best.map_or(true, |b: usize| vals[j] > vals[b]) {
                best = Some(j);
            }
        }
    }
    let j = best.ok_or(MpError::NoFiberMaximum)?;
    let f = |s: f64| fib.value(s);
    let (mut a, mut b) = (sig(j - 1), sig(j + 1));
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - gr * (b - a);
    let mut x2 = a + gr * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..40 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    let mut s = 0.5 * (a + b);
    // bracket a sign change of ∂σJ around the golden estimate, then bisect
    let (mut lo, mut hi) = (s - 1e-6, s + 1e-6);
    if fib.derivative(lo) > 0.0 && fib.derivative(hi) < 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            let d = fib.derivative(mid);
            if d > 0.0 {
                lo = mid;
            } else if d < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                hi = mid;
            }
        }
        s = 0.5 * (lo + hi);
    }
    let value = fiber_energy(spec, grid, u, s)?;
    Ok(FiberMax { sigma: s, value, lobes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpOptions {
    pub step: f64,
    /// Tolerance on the projected residual relative to `|λ|ρ`.
    pub tol: f64,
    pub max_iter: usize,
    pub init: Init,
    /// Iterations without a 1% residual improvement before declaring a stall.
    pub patience: usize,
}

impl Default for MpOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            tol: 1e-4,
            max_iter: 3000,
            init: Init::Gaussian { width: 1.0 },
            patience: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MpStop {
    Converged,
    /// No admissible step could be found.
    Stalled,
    /// Residual stopped improving: the energy resolution floor was reached.
    Plateau,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MPReport {
    /// Final iterate on its own (rescaled) grid.
    pub u: RadialFunction,
    /// Fiber maximizer of the final iterate before its last replacement.
    pub sigma_star: f64,
    /// Fiber-minimax value; an upper bound for the mountain-pass level.
    pub m_upper: f64,
    pub lambda: f64,
    pub pohozaev: f64,
    pub pohozaev_scale: f64,
    /// Projected residual divided by `|λ|ρ`.
    pub grad_res: f64,
    /// `|∫b s + λρ² − ‖u‖_p^p|`.
    pub multiplier_defect: f64,
    /// `|I(u) − m_upper|` at the final iterate.
    pub level_defect: f64,
    pub geometry: Geometry,
    pub iters: usize,
    pub converged: bool,
    pub stop: MpStop,
    /// Fiber-minimax values never increased beyond round-off.
    pub levels_monotone: bool,
    /// More than one fiber lobe was seen at some iterate.
    pub multi_lobe: bool,
    /// `λ > 0` at the final iterate.
    pub lambda_positive: bool,
}

impl MPReport {
    /// `m_upper ≥ max{I(u₀), I(u₁)}` and `m_upper ≥ inf_{V_η} I` estimate.
    pub fn level_ordering(&self) -> bool {
        let g = &self.geometry;
        self.m_upper >= g.i_u0.max(g.i_u1) && self.m_upper >= g.inf_lower
    }
}

/// Replaces `(grid, u)` by `σ∗u`: same nodal values scaled by `e^{σN/2}` on
/// the grid shrunk by `e^{σ}`.
fn rescale(grid: &RadialGrid, u: &[f64], sigma: f64) -> Result<(Arc<RadialGrid>, Vec<f64>), MpError> {
    let g = Arc::new(grid.scaled((-sigma).exp())?);
    let amp = (0.5 * sigma * grid.dim() as f64).exp();
    Ok((g, u.iter().map(|v| amp * v).collect()))
}

/// Fiber-minimax descent for the mountain-pass solution.
pub fn mp_solve(spec: &ProblemSpec, grid: &Arc<RadialGrid>, opts: &MpOptions) -> Result<MPReport, MpError> {
    check_applicable(spec)?;
    let rho = spec.rho;
    let mut u = opts.init.sample(grid)?;
    normalize(grid, &mut u, rho)?;
    let geometry = mp_geometry(spec, grid, &u)?;

    let fm = fiber_maximize(spec, grid, &u)?;
    let mut multi_lobe = fm.lobes > 1;
    let mut sigma_star = fm.sigma;
    let (mut g, mut u) = rescale(grid, &u, fm.sigma)?;
    let mut level = fm.value;
    let mut tau = opts.step;
    let mut monotone = true;
    let mut stop = MpStop::MaxIter;
    let mut iters = 0;
    let mut best_res = f64::INFINITY;
    let mut since_best = 0;

    for it in 0..opts.max_iter {
        iters = it;
        let t = terms(spec, &g, &u)?;
        let grad = energy_gradient(spec, &g, &u)?;
        let lambda = multiplier_from_terms(&t)?;
        let res = projected_residual(&g, &grad, &u, lambda) / (lambda.abs() * rho);
        if !res.is_finite() {
            return Err(MpError::NonFinite(it));
        }
        if res < opts.tol {
            stop = MpStop::Converged;
            break;
        }
        if res < 0.99 * best_res {
            best_res = res;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > opts.patience {
                stop = MpStop::Plateau;
                break;
            }
        }
        let metric = build_metric(spec, &g, &u, Metric::H1, lambda.abs().max(1e-3));
        let d = sphere_direction(&g, metric.as_ref(), &grad, &u);
        let slope = dot(&grad, &d);
        let slack = 1e-14 * (0.5 * t.big_b.abs() + t.lp.abs() / spec.p);
        let mut accepted = false;
        while tau > 1e-12 {
            let mut trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a - tau * b).collect();
            if normalize(&g, &mut trial, rho).is_err() {
                tau *= 0.5;
                continue;
            }
            let fm = match fiber_maximize(spec, &g, &trial) {
                Ok(v) => v,
                Err(MpError::NoFiberMaximum) => {
                    tau *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let armijo = fm.value <= level - 1e-4 * tau * slope + slack;
            let polish = !armijo && fm.value <= level + slack && {
                let (g3, u3) = rescale(&g, &trial, fm.sigma)?;
                let t3 = terms(spec, &g3, &u3)?;
                let gr3 = energy_gradient(spec, &g3, &u3)?;
                let l3 = multiplier_from_terms(&t3)?;
                projected_residual(&g3, &gr3, &u3, l3) / (l3.abs() * rho) < res
            };
            if armijo || polish {
                if fm.value > level + slack {
                    monotone = false;
                }
                multi_lobe |= fm.lobes > 1;
                sigma_star = fm.sigma;
                let (g2, u2) = rescale(&g, &trial, fm.sigma)?;
                g = g2;
                u = u2;
                level = fm.value;
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if !accepted {
            stop = MpStop::Stalled;
            break;
        }
        tau = (tau * 1.5).min(opts.step);
        iters = it + 1;
    }

    let t = terms(spec, &g, &u)?;
    let grad = energy_gradient(spec, &g, &u)?;
    let lambda = multiplier_from_terms(&t)?;
    let grad_res = projected_residual(&g, &grad, &u, lambda) / (lambda.abs() * rho);
    let converged = grad_res < opts.tol;
    Ok(MPReport {
        sigma_star,
        m_upper: level,
        lambda,
        pohozaev: pohozaev_from_terms(spec, &t),
        pohozaev_scale: pohozaev_scale(spec, &t),
        grad_res,
        multiplier_defect: (t.bs + lambda * t.mass2 - t.lp).abs(),
        level_defect: (t.energy(spec.p) - level).abs(),
        geometry,
        iters,
        converged,
        stop: if converged { MpStop::Converged } else { stop },
        levels_monotone: monotone,
        multi_lobe,
        lambda_positive: lambda > 0.0,
        u: RadialFunction::new(g, u)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{truncate, Family, TruncationParams};
    use crate::energy::{dilate, fiber_derivative};

    fn spec(q: f64) -> ProblemSpec {
        ProblemSpec::new(Family::two_q(q).unwrap(), 5.0, 1.0, 3).unwrap()
    }

    fn seed(g: &RadialGrid) -> Vec<f64> {
        let mut u = g.sample(|r| (-r * r).exp());
        normalize(g, &mut u, 1.0).unwrap();
        u
    }

    #[test]
    fn geometry_on_gaussian_seed() {
        let g = RadialGrid::new(3, 30.0, 4096).unwrap();
        let geo = mp_geometry(&spec(2.5), &g, &seed(&g)).unwrap();
        assert!(geo.holds(), "{geo:?}");
        assert!(geo.inf_lower > 0.0);
        assert!(geo.sigma0 < 0.0 && geo.sigma1 > 0.0, "{geo:?}");
    }

    #[test]
    fn fiber_maximum_dominates_and_shifts() {
        let s = spec(2.5);
        let g = RadialGrid::new(3, 30.0, 4096).unwrap();
        let u = seed(&g);
        let fm = fiber_maximize(&s, &g, &u).unwrap();
        assert!(fm.value >= fiber_energy(&s, &g, &u, 0.0).unwrap());
        assert!(fiber_derivative(&s, &g, &u, fm.sigma).unwrap().abs() < 1e-8 * fm.value.abs());
        // J(σ, e^{sN/2}u(e^s·)) = J(σ+s, u)
        let shift: f64 = 0.3;
        let v = dilate(&g, &u, shift.exp()).unwrap();
        let fv = fiber_maximize(&s, &g, &v).unwrap();
        assert!((fv.sigma - (fm.sigma - shift)).abs() < 1e-3, "{} {}", fv.sigma, fm.sigma);
    }

    #[test]
    fn refuses_outside_scope() {
        let g = RadialGrid::new(3, 10.0, 200).unwrap();
        let u = seed(&g);
        let sub = ProblemSpec::new(Family::two_q(3.0).unwrap(), 3.0, 1.0, 3).unwrap();
        assert!(matches!(mp_geometry(&sub, &g, &u), Err(MpError::NotApplicable(_))));
        let bi = truncate(&Family::born_infeld(), TruncationParams::for_dim(0.25, 4.0, 3).unwrap()).unwrap();
        let s = ProblemSpec::new(bi, 5.5, 1.0, 3).unwrap();
        assert!(matches!(mp_geometry(&s, &g, &u), Err(MpError::NotApplicable(_))));
    }

    #[test]
    fn rescale_is_exact_dilation() {
        let s = spec(2.5);
        let g = RadialGrid::new(3, 30.0, 4096).unwrap();
        let u = seed(&g);
        let sigma = 0.4;
        let (g2, u2) = rescale(&g, &u, sigma).unwrap();
        let j = fiber_energy(&s, &g, &u, sigma).unwrap();
        let i = crate::energy::energy(&s, &g2, &u2).unwrap();
        assert!((i - j).abs() < 1e-12 * j.abs());
        assert!((crate::radial::lp_norm_p(&g2, &u2, 2.0) - 1.0).abs() < 1e-12);
    }
}
