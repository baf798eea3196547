//! Reference ground states and Gagliardo–Nirenberg constants.
//!
//! The Kwong profile `W_p` is the positive radial solution of
//! `−ΔW + (1/δ_p − 1)W = (2/(pδ_p))W^{p−1}`, computed by shooting on `W(0)`.
//! The q-Laplacian profile `W_{p,q}` is computed variationally.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::Serialize;
use thiserror::Error;

use crate::coefficients::Family;
use crate::energy::{delta, sobolev_exponent};
use crate::radial::{dot, grad_norm_s, gradient_mid, lp_norm_p, RadialError, RadialFunction, RadialGrid, Tridiagonal};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReferenceError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("no shooting bracket for W(0) in [1e-3, 1e3]")]
    Bracket,
    #[error("{0}")]
    NoConvergence(String),
    #[error(transparent)]
    Radial(#[from] RadialError),
}

/// Coefficients `(1/δ_p − 1, 2/(pδ_p))` of the Kwong equation.
pub fn kwong_coefficients(dim: usize, p: f64) -> (f64, f64) {
    let d = delta(dim, p);
    (1.0 / d - 1.0, 2.0 / (p * d))
}

/// `ν_{p,q} = Nq(p−2)/(p[Nq − 2(N−q)])`.
pub fn nu_pq(dim: usize, p: f64, q: f64) -> f64 {
    let n = dim as f64;
    n * q * (p - 2.0) / (p * (n * q - 2.0 * (n - q)))
}

/// `q* = Nq/(N−q)`.
pub fn q_sobolev(dim: usize, q: f64) -> f64 {
    let n = dim as f64;
    n * q / (n - q)
}

fn check_kwong_params(dim: usize, p: f64) -> Result<(), ReferenceError> {
    if dim < 3 {
        return Err(ReferenceError::Invalid(format!("N must be at least 3, got {dim}")));
    }
    let crit = sobolev_exponent(dim);
    if !(p > 2.0 && p < crit) {
        return Err(ReferenceError::Invalid(format!("p must lie in (2, {crit}), got {p}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// Crossed zero: `W(0)` too large.
    Over,
    /// Turned upward while positive: `W(0)` too small.
    Under,
    Undecided,
}

struct Shooter {
    dim: usize,
    p: f64,
    a: f64,
    b: f64,
    /// RK4 steps per grid cell.
    sub: usize,
    ds: f64,
    r_cap: f64,
}

impl Shooter {
    fn rhs(&self, r: f64, w: f64, v: f64) -> (f64, f64) {
        let f = self.a * w - self.b * w.abs().powf(self.p - 2.0) * w;
        (v, f - (self.dim as f64 - 1.0) / r * v)
    }

    /// Integrates from `W(0) = alpha` until the trajectory is classified,
    /// recording `(W, W′)` at the grid nodes it passes when `record` is set.
    fn shoot(&self, alpha: f64, record: bool) -> (Shot, Vec<(f64, f64)>) {
        let n = self.dim as f64;
        let ds = self.ds;
        let mut out = Vec::new();
        if record {
            out.push((alpha, 0.0));
        }
        // first step from the series W = α + r²f(α)/(2N), W′ = r f(α)/N
        let f0 = self.a * alpha - self.b * alpha.powf(self.p - 1.0);
        let mut w = alpha + ds * ds * f0 / (2.0 * n);
        let mut v = ds * f0 / n;
        let mut j = 1usize;
        loop {
            let r = j as f64 * ds;
            if record && j % self.sub == 0 {
                out.push((w, v));
            }
            if w < 0.0 {
                return (Shot::Over, out);
            }
            if v > 0.0 {
                return (Shot::Under, out);
            }
            if r > self.r_cap {
                return (Shot::Undecided, out);
            }
            let (k1w, k1v) = self.rhs(r, w, v);
            let (k2w, k2v) = self.rhs(r + 0.5 * ds, w + 0.5 * ds * k1w, v + 0.5 * ds * k1v);
            let (k3w, k3v) = self.rhs(r + 0.5 * ds, w + 0.5 * ds * k2w, v + 0.5 * ds * k2v);
            let (k4w, k4v) = self.rhs(r + ds, w + ds * k3w, v + ds * k3v);
            w += ds / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            v += ds / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            j += 1;
        }
    }
}

/// Shooting result on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KwongProfile {
    pub dim: usize,
    pub p: f64,
    /// `W(0)`.
    pub alpha: f64,
    /// Final bisection bracket width.
    pub bracket_width: f64,
    pub bisections: usize,
    /// Decay rate `√(1/δ_p − 1)` of the linearization.
    pub kappa: f64,
    /// Radius beyond which the asymptotic tail replaces the trajectory.
    pub r_match: f64,
    /// Nodal values, zero at `r_max`.
    pub values: Vec<f64>,
    /// Nodal `W′`.
    pub slopes: Vec<f64>,
}

/// Shoots for `W_p` and samples it on `grid`.
///
/// The trajectory is trusted while the two bracketing shots agree to `10⁻⁶`
/// relative; past that radius it is continued by the decaying solution
/// `r^{−(N−2)/2}K_{(N−2)/2}(κr)` of the linearized equation.
pub fn shoot_kwong(dim: usize, p: f64, grid: &RadialGrid) -> Result<KwongProfile, ReferenceError> {
    check_kwong_params(dim, p)?;
    if grid.dim() != dim {
        return Err(ReferenceError::Invalid(format!("grid dimension {} differs from N = {dim}", grid.dim())));
    }
    let (a, b) = kwong_coefficients(dim, p);
    let kappa = a.sqrt();
    let h = grid.h();
    let sub = (h / 0.004).ceil().max(1.0) as usize;
    let sh = Shooter {
        dim,
        p,
        a,
        b,
        sub,
        ds: h / sub as f64,
        r_cap: 40.0 + 80.0 / kappa,
    };

    let mut lo = 1e-3;
    let mut hi = f64::NAN;
    while lo < 1e3 {
        let next = 2.0 * lo;
        match sh.shoot(next, false).0 {
            Shot::Over => {
                hi = next;
                break;
            }
            _ => lo = next,
        }
    }
    if hi.is_nan() || sh.shoot(lo, false).0 != Shot::Under {
        return Err(ReferenceError::Bracket);
    }
    let mut bisections = 0;
    while bisections < 200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        match sh.shoot(mid, false).0 {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
            Shot::Undecided => {
                lo = mid;
                hi = mid;
            }
        }
        bisections += 1;
    }

    let (_, tr_lo) = sh.shoot(lo, true);
    let (_, tr_hi) = sh.shoot(hi, true);
    let n = grid.len();
    let mut good = 0;
    for i in 1..tr_lo.len().min(tr_hi.len()).min(n) {
        let (wl, vl) = tr_lo[i];
        let (wh, _) = tr_hi[i];
        if wl <= 0.0 || vl >= 0.0 || (wl - wh).abs() > 1e-6 * wl {
            break;
        }
        good = i;
    }
    if good == 0 {
        return Err(ReferenceError::NoConvergence("shooting trajectory unusable".into()));
    }
    let nodes = grid.nodes();
    let r_m = nodes[good];
    let nu = 0.5 * (dim as f64 - 2.0);
    let corr = (4.0 * nu * nu - 1.0) / (8.0 * kappa);
    let tail = |r: f64| r.powf(-0.5 * (dim as f64 - 1.0)) * (-kappa * r).exp() * (1.0 + corr / r);
    let dtail = |r: f64| {
        let base = r.powf(-0.5 * (dim as f64 - 1.0)) * (-kappa * r).exp();
        let g = 1.0 + corr / r;
        base * (-(0.5 * (dim as f64 - 1.0)) / r - kappa) * g - base * corr / (r * r)
    };
    let w_m = tr_lo[good].0;
    let t_m = tail(r_m);
    let mut values = Vec::with_capacity(n);
    let mut slopes = Vec::with_capacity(n);
    for (i, &r) in nodes.iter().enumerate() {
        if i <= good {
            values.push(tr_lo[i].0);
            slopes.push(tr_lo[i].1);
        } else {
            values.push(w_m * tail(r) / t_m);
            slopes.push(w_m * dtail(r) / t_m);
        }
    }
    values[n - 1] = 0.0;
    Ok(KwongProfile {
        dim,
        p,
        alpha: lo,
        bracket_width: hi - lo,
        bisections,
        kappa,
        r_match: r_m,
        values,
        slopes,
    })
}

type CacheKey = (usize, u64, u64, usize);

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<KwongProfile>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<KwongProfile>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Cached [`shoot_kwong`], keyed by `(N, p, r_max, n)`.
pub fn kwong_profile(dim: usize, p: f64, grid: &RadialGrid) -> Result<Arc<KwongProfile>, ReferenceError> {
    let key = (dim, p.to_bits(), grid.r_max().to_bits(), grid.len());
    if let Some(hit) = cache().read().expect("cache poisoned").get(&key) {
        return Ok(hit.clone());
    }
    let prof = Arc::new(shoot_kwong(dim, p, grid)?);
    let mut w = cache().write().expect("cache poisoned");
    Ok(w.entry(key).or_insert(prof).clone())
}

/// `W_p` on `grid`.
pub fn solve_kwong(dim: usize, p: f64, grid: &Arc<RadialGrid>) -> Result<RadialFunction, ReferenceError> {
    let prof = kwong_profile(dim, p, grid)?;
    Ok(RadialFunction::new(grid.clone(), prof.values.clone())?)
}

/// Solution of `−b₀Δu = |u|^{p−2}u − λu` with mass `ρ`, as `αW_p(γ·)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledKwong {
    pub u: RadialFunction,
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
}

/// Rescales `W_p` onto the constant-coefficient problem `b ≡ b₀`.
///
/// With `W` solving `−ΔW + aW = bW^{p−1}`, `u = αW(γr)` solves the problem when
/// `b₀γ²b = α^{p−2}` and `λ = b₀aγ²`; the mass fixes `α` through
/// `α²γ^{−N}‖W‖₂² = ρ²`. `W` is sampled at `γr_i` by shooting on the grid
/// stretched by `γ`.
pub fn rescaled_kwong(dim: usize, p: f64, rho: f64, b0: f64, grid: &Arc<RadialGrid>) -> Result<RescaledKwong, ReferenceError> {
    if !(b0 > 0.0 && rho > 0.0) {
        return Err(ReferenceError::Invalid(format!("need b0 > 0 and rho > 0, got {b0}, {rho}")));
    }
    let n = dim as f64;
    let (a, b) = kwong_coefficients(dim, p);
    let w_ref = Arc::new(RadialGrid::new(dim, 40.0, 8192)?);
    let wm2 = lp_norm_p(&w_ref, &kwong_profile(dim, p, &w_ref)?.values, 2.0);
    // γ² = α^{p−2}/(b₀b) turns the mass condition into a power of α
    let e = 2.0 - 0.5 * n * (p - 2.0);
    let alpha = (rho * rho / (wm2 * (b0 * b).powf(0.5 * n))).powf(1.0 / e);
    let gamma = (alpha.powf(p - 2.0) / (b0 * b)).sqrt();
    let stretched = grid.scaled(gamma)?;
    let prof = shoot_kwong(dim, p, &stretched)?;
    let values = prof.values.iter().map(|v| alpha * v).collect();
    Ok(RescaledKwong {
        u: RadialFunction::new(grid.clone(), values)?,
        alpha,
        gamma,
        lambda: b0 * a * gamma * gamma,
    })
}

/// Gagliardo–Nirenberg data and the critical mass thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GNConstants {
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub delta_p: f64,
    pub nu_pq: Option<f64>,
    #[serde(rename = "C_Np")]
    pub c_np: Option<f64>,
    /// Sharp constant of the `L^q` inequality, `‖W_{p,q}‖_p/(‖∇W_{p,q}‖_q^ν‖W_{p,q}‖₂^{1−ν})`.
    #[serde(rename = "K_Np")]
    pub k_np: Option<f64>,
    /// `K/(q⁻¹‖∇W_{p,q}‖_q^q + ½‖W_{p,q}‖₂²)`, the closed-form expression, for comparison.
    #[serde(rename = "K_Np_closed_form")]
    pub k_np_closed_form: Option<f64>,
    /// `‖W_p‖₂`.
    #[serde(rename = "W_mass")]
    pub w_mass: Option<f64>,
    /// `‖∇W_p‖₂²`, `‖W_p‖₂²` and `(2/p)‖W_p‖_p^p`.
    pub kwong_identity: Option<[f64; 3]>,
    pub rho_star: Option<f64>,
    pub rho_star_upper: Option<f64>,
    pub rho_hat_star: Option<f64>,
    pub rho_hat_star_upper: Option<f64>,
    /// Reasons for absent values and applicability notes.
    pub notes: Vec<String>,
}

impl GNConstants {
    fn empty(dim: usize, p: f64, q: f64) -> Self {
        Self {
            dim,
            p,
            q,
            delta_p: delta(dim, p),
            nu_pq: None,
            c_np: None,
            k_np: None,
            k_np_closed_form: None,
            w_mass: None,
            kwong_identity: None,
            rho_star: None,
            rho_star_upper: None,
            rho_hat_star: None,
            rho_hat_star_upper: None,
            notes: Vec::new(),
        }
    }

    /// Largest relative spread among the three Kwong identity values.
    pub fn kwong_identity_error(&self) -> Option<f64> {
        self.kwong_identity.map(|[a, b, c]| {
            let lo = a.min(b).min(c);
            let hi = a.max(b).max(c);
            (hi - lo) / lo
        })
    }
}

/// `‖u‖_p/(‖∇u‖₂^{δ_p}‖u‖₂^{1−δ_p})`.
pub fn gn_quotient(grid: &RadialGrid, u: &[f64], p: f64) -> f64 {
    let d = delta(grid.dim(), p);
    let lp = lp_norm_p(grid, u, p).powf(1.0 / p);
    let g = grad_norm_s(grid, u, 2.0).sqrt();
    let m = lp_norm_p(grid, u, 2.0).sqrt();
    lp / (g.powf(d) * m.powf(1.0 - d))
}

/// `‖u‖_p/(‖∇u‖_q^{ν}‖u‖₂^{1−ν})`.
pub fn lq_gn_quotient(grid: &RadialGrid, u: &[f64], p: f64, q: f64) -> f64 {
    let nu = nu_pq(grid.dim(), p, q);
    let lp = lp_norm_p(grid, u, p).powf(1.0 / p);
    let g = grad_norm_s(grid, u, q).powf(1.0 / q);
    let m = lp_norm_p(grid, u, 2.0).sqrt();
    lp / (g.powf(nu) * m.powf(1.0 - nu))
}

/// `δ_p`, `‖W_p‖₂`, the Kwong identities and `𝒞_{N,p} = (p/(2‖W_p‖₂^{p−2}))^{1/p}`.
pub fn gn_constant(dim: usize, p: f64, grid: &Arc<RadialGrid>) -> Result<GNConstants, ReferenceError> {
    let w = solve_kwong(dim, p, grid)?;
    let mass2 = lp_norm_p(grid, w.values(), 2.0);
    let grad2 = grad_norm_s(grid, w.values(), 2.0);
    let lp = lp_norm_p(grid, w.values(), p);
    let mut out = GNConstants::empty(dim, p, 2.0);
    out.w_mass = Some(mass2.sqrt());
    out.kwong_identity = Some([grad2, mass2, 2.0 / p * lp]);
    out.c_np = Some((p / (2.0 * mass2.sqrt().powf(p - 2.0))).powf(1.0 / p));
    Ok(out)
}

/// The closed-form `K` accompanying the `L^q` inequality.
pub fn k_closed_form(dim: usize, p: f64, q: f64) -> f64 {
    let n = dim as f64;
    let e = n * q + p * q - 2.0 * n;
    let num = (2.0 * (n * q - p * (n - q))).powf(p * (n - q) - n * q);
    let den = (q * n * (p - 2.0)).powf(n * (p - 2.0));
    e * (num / den).powf(1.0 / e)
}

/// Options of the `W_{p,q}` minimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QGroundOptions {
    /// Tolerance on the residual relative to `ζ`.
    pub tol: f64,
    pub max_iter: usize,
    /// Width of the Gaussian start.
    pub width: f64,
}

impl Default for QGroundOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 20_000,
            width: 1.0,
        }
    }
}

/// Nonnegative radial `W_{p,q}` with its multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct QGround {
    pub w: RadialFunction,
    /// `ζ = ‖∇W‖_q^q + ‖W‖₂²`.
    pub zeta: f64,
    /// `‖∇W‖_q^q`.
    pub grad_qq: f64,
    /// `‖W‖₂²`.
    pub mass2: f64,
    /// Quadrature norm of `−Δ_qW + W − ζW^{p−1}` divided by `ζ`.
    pub residual: f64,
    pub iters: usize,
    pub converged: bool,
}

struct QTerms {
    e: f64,
    grad_qq: f64,
    mass2: f64,
}

fn q_terms(grid: &RadialGrid, v: &[f64], q: f64) -> QTerms {
    let grad_qq = grad_norm_s(grid, v, q);
    let mass2 = lp_norm_p(grid, v, 2.0);
    QTerms {
        e: grad_qq / q + 0.5 * mass2,
        grad_qq,
        mass2,
    }
}

fn q_gradient(grid: &RadialGrid, v: &[f64], q: f64) -> Vec<f64> {
    let mut out: Vec<f64> = grid.weights().iter().zip(v).map(|(w, x)| w * x).collect();
    for (i, (g, k)) in gradient_mid(grid, v).iter().zip(grid.stiffness()).enumerate() {
        let f = k * grid.h() * g.signum() * g.abs().powf(q - 1.0);
        out[i] -= f;
        out[i + 1] += f;
    }
    out
}

fn lp_normalize(grid: &RadialGrid, v: &mut [f64], p: f64) -> bool {
    let s = lp_norm_p(grid, v, p).powf(1.0 / p);
    if !(s > 0.0 && s.is_finite()) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= s);
    true
}

/// Minimizes `(1/q)‖∇v‖_q^q + ½‖v‖₂²` over `‖v‖_p = 1`.
///
/// A minimizer solves `−Δ_q v + v = ζ|v|^{p−2}v`; testing with `v` gives
/// `ζ = ‖∇v‖_q^q + ‖v‖₂²`, so the multiplier is self-consistent without rescaling. Descent uses the metric
/// `K_{(q−1)|v′|^{q−2}} + W` and retracts to the constraint by scaling.
pub fn solve_qlaplace_ground(
    dim: usize,
    q: f64,
    p: f64,
    grid: &Arc<RadialGrid>,
    opts: &QGroundOptions,
) -> Result<QGround, ReferenceError> {
    let n = dim as f64;
    if !(q > 2.0 * n / (n + 2.0) && q < n) {
        return Err(ReferenceError::Invalid(format!("q must lie in (2N/(N+2), N), got {q}")));
    }
    if !(p > 2.0 && p < q_sobolev(dim, q)) {
        return Err(ReferenceError::Invalid(format!("p must lie in (2, q*), got {p}")));
    }
    let len = grid.len();
    let m = len - 1;
    let w = grid.weights();
    let mut v = grid.sample(|r| (-(r / opts.width).powi(2)).exp());
    v[m] = 0.0;
    lp_normalize(grid, &mut v, p);
    let mut t = q_terms(grid, &v, q);
    let mut tau = 1.0;
    let mut residual = f64::INFINITY;
    let mut iters = 0;
    for it in 0..opts.max_iter {
        iters = it;
        let ge = q_gradient(grid, &v, q);
        let zeta = t.grad_qq + t.mass2;
        let gc: Vec<f64> = (0..len).map(|i| w[i] * v[i].abs().powf(p - 2.0) * v[i]).collect();
        residual = (0..m)
            .map(|i| {
                let r = ge[i] - zeta * gc[i];
                r * r / w[i]
            })
            .sum::<f64>()
            .sqrt()
            / zeta;
        if residual < opts.tol {
            break;
        }
        let kappa: Vec<f64> = gradient_mid(grid, &v)
            .iter()
            .map(|g| ((q - 1.0) * g.abs().powf(q - 2.0)).clamp(1e-10, 1e10))
            .collect();
        let metric = Tridiagonal::metric(grid, &kappa, 1.0);
        let a = metric.solve(&ge[..m]);
        let b = metric.solve(&gc[..m]);
        let mu = dot(&a, &gc[..m]) / dot(&b, &gc[..m]);
        let d: Vec<f64> = (0..m).map(|i| a[i] - mu * b[i]).collect();
        let slope = dot(&ge[..m], &d);
        let slack = 1e-14 * t.e;
        let mut accepted = false;
        while tau > 1e-14 {
            let mut trial = v.clone();
            for i in 0..m {
                trial[i] -= tau * d[i];
            }
            if !lp_normalize(grid, &mut trial, p) {
                tau *= 0.5;
                continue;
            }
            let tt = q_terms(grid, &trial, q);
            if tt.e <= t.e - 1e-4 * tau * slope + slack {
                v = trial;
                t = tt;
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if !accepted {
            break;
        }
        tau = (tau * 1.5).min(1.0);
        iters = it + 1;
    }
    for x in v.iter_mut() {
        *x = x.abs();
    }
    let zeta = t.grad_qq + t.mass2;
    Ok(QGround {
        w: RadialFunction::new(grid.clone(), v)?,
        zeta,
        grad_qq: t.grad_qq,
        mass2: t.mass2,
        residual,
        iters,
        converged: residual < opts.tol,
    })
}

/// `ν_{p,q}`, the sharp `𝒦_{N,p}` from `W_{p,q}` and the closed-form value.
pub fn q_gn_constant(dim: usize, q: f64, p: f64, grid: &Arc<RadialGrid>) -> Result<GNConstants, ReferenceError> {
    let g = solve_qlaplace_ground(dim, q, p, grid, &QGroundOptions::default())?;
    if !g.converged {
        return Err(ReferenceError::NoConvergence(format!(
            "W_pq minimization stopped at residual {:e}",
            g.residual
        )));
    }
    let mut out = GNConstants::empty(dim, p, q);
    out.nu_pq = Some(nu_pq(dim, p, q));
    out.k_np = Some(lq_gn_quotient(grid, g.w.values(), p, q));
    out.k_np_closed_form = Some(k_closed_form(dim, p, q) / (g.grad_qq / q + 0.5 * g.mass2));
    Ok(out)
}

/// The four critical masses for `family` in dimension `dim`.
///
/// `ρ_* = c₁^{N/4}‖W_p‖₂` and `ρ^* = c₂^{N/4}‖W_p‖₂` at `p = 2 + 4/N`;
/// `ρ̂_*` and `ρ̂^*` at `p = q + 2q/N`. A value is absent when its hypotheses
/// fail, with the reason in `notes`.
pub fn critical_thresholds(family: &Family, dim: usize, grid: &Arc<RadialGrid>) -> Result<GNConstants, ReferenceError> {
    let n = dim as f64;
    let q = family.q;
    let p2 = 2.0 + 4.0 / n;
    let base = gn_constant(dim, p2, grid)?;
    let mut out = GNConstants { q, ..base };
    let wm = out.w_mass.expect("filled by gn_constant");
    let (c1, c2) = (family.c1, family.c2);
    out.rho_star = Some(c1.powf(n / 4.0) * wm);
    if c2.is_finite() {
        out.rho_star_upper = Some(c2.powf(n / 4.0) * wm);
        if !(q > 1.0 && q < 2.0) {
            out.notes.push("rho_star_upper: m = -inf above it is asserted only for 1 < q < 2".into());
        }
    } else {
        out.notes.push("rho_star_upper: c2 is infinite".into());
    }

    let ph = q + 2.0 * q / n;
    if !(q > 2.0 * n / (n + 2.0) && q < n) {
        out.notes.push(format!("rho_hat: q = {q} outside (2N/(N+2), N)"));
        return Ok(out);
    }
    if ph >= sobolev_exponent(dim) {
        out.notes.push(format!("rho_hat: p = q + 2q/N = {ph} is not below 2*"));
        return Ok(out);
    }
    let lq = q_gn_constant(dim, q, ph, grid)?;
    out.nu_pq = lq.nu_pq;
    out.k_np = lq.k_np;
    out.k_np_closed_form = lq.k_np_closed_form;
    let k = lq.k_np.expect("filled by q_gn_constant");
    out.rho_hat_star = Some((c1 * q * (n + 2.0) / (2.0 * n * k.powf(q * (n + 2.0) / n))).powf(n / (2.0 * q)));
    if q > 2.0 && c2.is_finite() {
        let wp = solve_kwong(dim, ph, grid)?;
        let gq = grad_norm_s(grid, wp.values(), q);
        let m = lp_norm_p(grid, wp.values(), 2.0).sqrt();
        out.rho_hat_star_upper = Some((c2 * gq / m.powf(2.0 * (n - q) / n)).powf(n / (2.0 * q)));
    } else {
        out.notes.push("rho_hat_star_upper: requires 2 < q < N".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(r: f64, n: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(3, r, n).unwrap())
    }

    #[test]
    fn coefficients_and_exponents() {
        let (a, b) = kwong_coefficients(3, 4.0);
        assert!((a - 1.0 / 3.0).abs() < 1e-15);
        assert!((b - 2.0 / 3.0).abs() < 1e-15);
        assert!((delta(3, 4.0) - 0.75).abs() < 1e-15);
        assert!((nu_pq(3, 4.0, 3.0) - 0.5).abs() < 1e-15);
        // p = q + 2q/N gives pν = q
        for q in [1.5, 2.0, 2.5] {
            let p = q + 2.0 * q / 3.0;
            assert!((p * nu_pq(3, p, q) - q).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_kwong_matches_known_amplitude() {
        // W = Q(r/√3)/√2 with Q the cubic ground state, Q(0) = 4.3373876...
        let g = grid(30.0, 4096);
        let prof = shoot_kwong(3, 4.0, &g).unwrap();
        assert!((prof.alpha * 2f64.sqrt() - 4.337_387_679_5).abs() < 1e-6, "{}", prof.alpha);
        assert!(prof.bracket_width <= 4.0 * f64::EPSILON * prof.alpha);
        assert!(prof.values.windows(2).all(|w| w[1] <= w[0]));
        assert!(prof.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = grid(10.0, 100);
        assert!(shoot_kwong(3, 6.0, &g).is_err());
        assert!(shoot_kwong(3, 2.0, &g).is_err());
        assert!(shoot_kwong(4, 3.0, &g).is_err());
        assert!(solve_qlaplace_ground(3, 3.5, 3.0, &g, &QGroundOptions::default()).is_err());
    }

    #[test]
    fn cache_returns_same_profile() {
        let g = grid(20.0, 1000);
        let a = kwong_profile(3, 3.0, &g).unwrap();
        let b = kwong_profile(3, 3.0, &g).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}
