//! Energy `I(u) = ½∫B(|∇u|²) − (1/p)‖u‖_p^p`, its discrete gradient, the
//! multiplier, dilations, the fiber map and the Pohozaev functional.

use serde::Serialize;
use thiserror::Error;

use crate::coefficients::Family;
use crate::radial::{gradient_mid, lp_norm_p, RadialGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("gradient constraint violated: max |u'|^2 = {max_s} >= {sup}")]
    GradientConstraint { max_s: f64, sup: f64 },
    #[error("profile has {got} values, grid has {expected}")]
    Length { expected: usize, got: usize },
    #[error("zero mass")]
    ZeroMass,
}

/// Position of `p` relative to the critical exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `2 < p < (1 + 2/N) min{2, q}`.
    Subcritical,
    /// `p = 2 + 4/N`.
    L2Critical,
    /// `p = q + 2q/N`.
    LqCritical,
    /// `(1 + 2/N) max{2, q} < p < 2*` with `q > 2N/(N+2)`.
    Supercritical,
    /// None of the above.
    Intermediate,
}

/// Family, exponent and target mass in dimension `dim`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub family: Family,
    pub p: f64,
    pub rho: f64,
    pub dim: usize,
}

/// `N(r−2)/(2r)`.
pub fn delta(dim: usize, r: f64) -> f64 {
    dim as f64 * (r - 2.0) / (2.0 * r)
}

/// Critical Sobolev exponent `2N/(N−2)`.
pub fn sobolev_exponent(dim: usize) -> f64 {
    2.0 * dim as f64 / (dim as f64 - 2.0)
}

impl ProblemSpec {
    pub fn new(family: Family, p: f64, rho: f64, dim: usize) -> Result<Self, EnergyError> {
        if dim < 3 {
            return Err(EnergyError::Invalid(format!("N must be at least 3, got {dim}")));
        }
        let crit = sobolev_exponent(dim);
        if !(p > 2.0 && p < crit) {
            return Err(EnergyError::Invalid(format!(
                "p must lie in (2, {crit}), got {p}"
            )));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(EnergyError::Invalid(format!("rho must be positive, got {rho}")));
        }
        Ok(Self { family, p, rho, dim })
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self, EnergyError> {
        Self::new(self.family.clone(), self.p, rho, self.dim)
    }

    pub fn delta_p(&self) -> f64 {
        delta(self.dim, self.p)
    }

    pub fn regime(&self) -> Regime {
        let n = self.dim as f64;
        let q = self.family.q;
        let eps = 1e-12;
        if (self.p - (2.0 + 4.0 / n)).abs() < eps {
            return Regime::L2Critical;
        }
        if q != 2.0 && (self.p - (q + 2.0 * q / n)).abs() < eps {
            return Regime::LqCritical;
        }
        if self.p < (1.0 + 2.0 / n) * q.min(2.0) {
            Regime::Subcritical
        } else if self.p > (1.0 + 2.0 / n) * q.max(2.0) && q > 2.0 * n / (n + 2.0) {
            Regime::Supercritical
        } else {
            Regime::Intermediate
        }
    }
}

/// Integrals entering the energy identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Terms {
    /// `∫B(|∇u|²)`.
    pub big_b: f64,
    /// `∫b(|∇u|²)|∇u|²`.
    pub bs: f64,
    /// `‖∇u‖₂²`.
    pub grad2sq: f64,
    /// `‖∇u‖_q^q` with the family exponent.
    pub gradqq: f64,
    /// `‖u‖_p^p`.
    pub lp: f64,
    /// `‖u‖₂²`.
    pub mass2: f64,
    /// `max |u′|²`.
    pub max_s: f64,
}

impl Terms {
    pub fn energy(&self, p: f64) -> f64 {
        0.5 * self.big_b - self.lp / p
    }

    /// `Q(u) = ‖∇u‖₂² + ‖∇u‖_q^q`.
    pub fn q_functional(&self) -> f64 {
        self.grad2sq + self.gradqq
    }
}

fn check_len(grid: &RadialGrid, u: &[f64]) -> Result<(), EnergyError> {
    if u.len() != grid.len() {
        return Err(EnergyError::Length {
            expected: grid.len(),
            got: u.len(),
        });
    }
    Ok(())
}

fn check_domain(fam: &Family, max_s: f64) -> Result<(), EnergyError> {
    let sup = fam.domain_sup();
    if max_s >= sup || max_s.is_nan() {
        return Err(EnergyError::GradientConstraint { max_s, sup });
    }
    Ok(())
}

/// All integral terms at once.
pub fn terms(spec: &ProblemSpec, grid: &RadialGrid, u: &[f64]) -> Result<Terms, EnergyError> {
    check_len(grid, u)?;
    let fam = &spec.family;
    let slopes = gradient_mid(grid, u);
    let max_s = slopes.iter().fold(0.0f64, |m, g| m.max(g * g));
    check_domain(fam, max_s)?;
    let q = fam.q;
    let mut t = Terms {
        big_b: 0.0,
        bs: 0.0,
        grad2sq: 0.0,
        gradqq: 0.0,
        lp: lp_norm_p(grid, u, spec.p),
        mass2: lp_norm_p(grid, u, 2.0),
        max_s,
    };
    for (g, w) in slopes.iter().zip(grid.mid_weights()) {
        let s = g * g;
        t.big_b += w * fam.big_b(s);
        t.bs += w * fam.b(s) * s;
        t.grad2sq += w * s;
        t.gradqq += w * g.abs().powf(q);
    }
    Ok(t)
}

/// `I(u)`.
pub fn energy(spec: &ProblemSpec, grid: &RadialGrid, u: &[f64]) -> Result<f64, EnergyError> {
    Ok(terms(spec, grid, u)?.energy(spec.p))
}

/// Euclidean gradient `∂I/∂u_i` of the discrete energy.
pub fn energy_gradient(spec: &ProblemSpec, grid: &RadialGrid, u: &[f64]) -> Result<Vec<f64>, EnergyError> {
    check_len(grid, u)?;
    let fam = &spec.family;
    let slopes = gradient_mid(grid, u);
    let max_s = slopes.iter().fold(0.0f64, |m, g| m.max(g * g));
    check_domain(fam, max_s)?;
    let mut out = vec![0.0; u.len()];
    for (i, (g, k)) in slopes.iter().zip(grid.stiffness()).enumerate() {
        // k·h = ω r^{N−1}, the flux through the sphere at r_{i+1/2}
        let f = k * grid.h() * fam.b(g * g) * g;
        out[i] -= f;
        out[i + 1] += f;
    }
    let p = spec.p;
    for ((o, w), v) in out.iter_mut().zip(grid.weights()).zip(u) {
        *o -= w * v.abs().powf(p - 2.0) * v;
    }
    Ok(out)
}

/// Nodal representative of `−div(b(|∇u|²)∇u) − |u|^{p−2}u` in the quadrature
/// inner product: `⟨EL(u), v⟩_w = dI(u)[v]` for every `v` vanishing at `r_max`.
/// The Dirichlet node carries 0.
pub fn euler_lagrange(spec: &ProblemSpec, grid: &RadialGrid, u: &[f64]) -> Result<Vec<f64>, EnergyError> {
    let mut g = energy_gradient(spec, grid, u)?;
    let n = g.len();
    for (v, w) in g.iter_mut().zip(grid.weights()).take(n - 1) {
        *v /= w;
    }
    g[n - 1] = 0.0;
    Ok(g)
}

/// `λ = (‖u‖_p^p − ∫b(|∇u|²)|∇u|²)/‖u‖₂²`.
pub fn lagrange_multiplier(spec: &ProblemSpec, grid: &RadialGrid, u: &[f64]) -> Result<f64, EnergyError> {
    let t = terms(spec, grid, u)?;
    multiplier_from_terms(&t)
}

pub(crate) fn multiplier_from_terms(t: &Terms) -> Result<f64, EnergyError> {
    if t.mass2 <= 0.0 {
        return Err(EnergyError::ZeroMass);
    }
    Ok((t.lp - t.bs) / t.mass2)
}

/// `‖(G + λ W u)/w‖` in the quadrature norm over the free nodes, `G` the
/// Euclidean gradient.
pub fn projected_residual(grid: &RadialGrid, grad: &[f64], u: &[f64], lambda: f64) -> f64 {
    let w = grid.weights();
    let m = grid.len() - 1;
    (0..m)
        .map(|i| {
            let r = grad[i] + lambda * w[i] * u[i];
            r * r / w[i]
        })
        .sum::<f64>()
        .sqrt()
}

/// `u_t(r) = t^{N/2} u(t r)` by linear interpolation, zero beyond `r_max`.
pub fn dilate(grid: &RadialGrid, u: &[f64], t: f64) -> Result<Vec<f64>, EnergyError> {
    check_len(grid, u)?;
    if !(t.is_finite() && t > 0.0) {
        return Err(EnergyError::Invalid(format!("dilation factor must be positive, got {t}")));
    }
    let amp = t.powf(0.5 * grid.dim() as f64);
    Ok(grid
        .nodes()
        .iter()
        .map(|&r| amp * grid.interpolate(u, t * r))
        .collect())
}

fn guard(v: f64) -> f64 {
    if v > 1e300 {
        f64::INFINITY
    } else if v < -1e300 {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// `J(σ,u) = e^{−Nσ}/2 ∫B(e^{σ(N+2)}|∇u|²) − e^{σN(p/2−1)}/p ‖u‖_p^p`,
/// the energy of `e^{σN/2}u(e^σ·)` evaluated on the slopes of `u`.
pub fn fiber_energy(spec: &ProblemSpec, grid: &RadialGrid, u: &[f64], sigma: f64) -> Result<f64, EnergyError> {
    check_len(grid, u)?;
    let n = grid.dim() as f64;
    let fam = &spec.family;
    let e = (sigma * (n + 2.0)).exp();
    let slopes = gradient_mid(grid, u);
    let max_s = slopes.iter().fold(0.0f64, |m, g| m.max(e * g * g));
    check_domain(fam, max_s)?;
    let big_b: f64 = slopes
        .iter()
        .zip(grid.mid_weights())
        .map(|(g, w)| w * fam.big_b(e * g * g))
        .sum();
    let lp = lp_norm_p(grid, u, spec.p);
    let first = if big_b == 0.0 { 0.0 } else { 0.5 * (-n * sigma).exp() * big_b };
    let second = if lp == 0.0 {
        0.0
    } else {
        (sigma * n * (0.5 * spec.p - 1.0)).exp() * lp / spec.p
    };
    Ok(guard(first - second))
}

/// `∂_σ J(σ,u)` in closed form.
pub fn fiber_derivative(spec: &ProblemSpec, grid: &RadialGrid, u: &[f64], sigma: f64) -> Result<f64, EnergyError> {
    check_len(grid, u)?;
    let n = grid.dim() as f64;
    let fam = &spec.family;
    let e = (sigma * (n + 2.0)).exp();
    let slopes = gradient_mid(grid, u);
    let max_s = slopes.iter().fold(0.0f64, |m, g| m.max(e * g * g));
    check_domain(fam, max_s)?;
    let mut big_b = 0.0;
    let mut bs = 0.0;
    for (g, w) in slopes.iter().zip(grid.mid_weights()) {
        let s = e * g * g;
        big_b += w * fam.big_b(s);
        bs += w * fam.b(s) * s;
    }
    let lp = lp_norm_p(grid, u, spec.p);
    let en = (-n * sigma).exp();
    let gp = n * (0.5 * spec.p - 1.0);
    let d = -0.5 * n * en * big_b + 0.5 * (n + 2.0) * en * bs - gp * (sigma * gp).exp() * lp / spec.p;
    Ok(guard(d))
}

/// `P(u) = (N/2)∫B − ((N+2)/2)∫b s + (N(p−2)/(2p))‖u‖_p^p`, equal to `−∂_σJ(0,u)`.
pub fn pohozaev_residual(spec: &ProblemSpec, grid: &RadialGrid, u: &[f64]) -> Result<f64, EnergyError> {
    let t = terms(spec, grid, u)?;
    Ok(pohozaev_from_terms(spec, &t))
}

pub(crate) fn pohozaev_from_terms(spec: &ProblemSpec, t: &Terms) -> f64 {
    let n = spec.dim as f64;
    0.5 * n * t.big_b - 0.5 * (n + 2.0) * t.bs + n * (spec.p - 2.0) / (2.0 * spec.p) * t.lp
}

/// Magnitude of the terms of `P`, used to scale its tolerance.
pub(crate) fn pohozaev_scale(spec: &ProblemSpec, t: &Terms) -> f64 {
    let n = spec.dim as f64;
    (0.5 * n * t.big_b).abs() + (0.5 * (n + 2.0) * t.bs).abs() + (n * (spec.p - 2.0) / (2.0 * spec.p) * t.lp).abs()
}

/// Rescales `u` to mass `rho` in place.
pub fn normalize(grid: &RadialGrid, u: &mut [f64], rho: f64) -> Result<(), EnergyError> {
    let m = lp_norm_p(grid, u, 2.0).sqrt();
    if !(m > 0.0) {
        return Err(EnergyError::ZeroMass);
    }
    let k = rho / m;
    u.iter_mut().for_each(|v| *v *= k);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::grad_norm_s;

    fn spec(q: f64, p: f64) -> ProblemSpec {
        ProblemSpec::new(Family::two_q(q).unwrap(), p, 1.0, 3).unwrap()
    }

    #[test]
    fn zero_profile() {
        let g = RadialGrid::new(3, 10.0, 200).unwrap();
        let s = spec(3.0, 3.0);
        let z = vec![0.0; g.len()];
        assert_eq!(energy(&s, &g, &z).unwrap(), 0.0);
        assert!(euler_lagrange(&s, &g, &z).unwrap().iter().all(|v| *v == 0.0));
        assert_eq!(pohozaev_residual(&s, &g, &z).unwrap(), 0.0);
        assert_eq!(lagrange_multiplier(&s, &g, &z), Err(EnergyError::ZeroMass));
    }

    #[test]
    fn linear_family_reduces_to_norms() {
        let g = RadialGrid::new(3, 20.0, 2000).unwrap();
        let s = spec(2.0, 3.5);
        let u = g.sample(|r| (-(r * r) / 3.0).exp() * (1.0 + 0.2 * r));
        let e = energy(&s, &g, &u).unwrap();
        let expect = grad_norm_s(&g, &u, 2.0) - lp_norm_p(&g, &u, 3.5) / 3.5;
        assert!((e - expect).abs() < 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn laplacian_reduction() {
        let g = RadialGrid::new(3, 12.0, 800).unwrap();
        let s = spec(2.0, 3.0);
        let mut u = g.sample(|r| (-(r * r) / 2.0).exp());
        *u.last_mut().unwrap() = 0.0;
        let el = euler_lagrange(&s, &g, &u).unwrap();
        // independent Laplacian: L u_i = [a_{i+1/2}(u_{i+1}−u_i) − a_{i−1/2}(u_i−u_{i−1})]/w_i
        let h = g.h();
        let omega = g.sphere_area();
        let n = g.len();
        for i in 0..n - 1 {
            let right = omega * ((i as f64 + 0.5) * h).powi(2) * (u[i + 1] - u[i]) / h;
            let left = if i == 0 {
                0.0
            } else {
                omega * ((i as f64 - 0.5) * h).powi(2) * (u[i] - u[i - 1]) / h
            };
            let lap = (right - left) / g.weights()[i];
            let expect = -2.0 * lap - u[i].abs() * u[i];
            assert!((el[i] - expect).abs() < 1e-12 * expect.abs().max(1.0), "node {i}");
        }
    }

    #[test]
    fn regimes() {
        assert_eq!(spec(3.0, 3.0).regime(), Regime::Subcritical);
        assert_eq!(spec(3.0, 10.0 / 3.0).regime(), Regime::L2Critical);
        assert_eq!(spec(2.5, 5.0).regime(), Regime::Supercritical);
        assert_eq!(spec(2.5, 2.5 + 5.0 / 3.0).regime(), Regime::LqCritical);
        assert!(ProblemSpec::new(Family::two_q(3.0).unwrap(), 6.0, 1.0, 3).is_err());
        assert!(ProblemSpec::new(Family::two_q(3.0).unwrap(), 3.0, -1.0, 3).is_err());
    }

    #[test]
    fn fiber_identity_at_zero() {
        let g = RadialGrid::new(3, 15.0, 1500).unwrap();
        let s = spec(2.5, 5.0);
        let u = g.sample(|r| (-r * r).exp());
        assert_eq!(fiber_energy(&s, &g, &u, 0.0).unwrap(), energy(&s, &g, &u).unwrap());
        let d = fiber_derivative(&s, &g, &u, 0.0).unwrap();
        assert!((d + pohozaev_residual(&s, &g, &u).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn born_infeld_rejects_steep_profiles() {
        let g = RadialGrid::new(3, 5.0, 500).unwrap();
        let s = ProblemSpec::new(Family::born_infeld(), 3.0, 1.0, 3).unwrap();
        let u = g.sample(|r| 2.0 * (-r * r).exp());
        assert!(matches!(energy(&s, &g, &u), Err(EnergyError::GradientConstraint { .. })));
        let v = g.sample(|r| 0.3 * (-r * r).exp());
        assert!(energy(&s, &g, &v).is_ok());
    }

    #[test]
    fn dilation_identity() {
        let g = RadialGrid::new(3, 20.0, 1000).unwrap();
        let u = g.sample(|r| (-r * r).exp());
        let v = dilate(&g, &u, 1.0).unwrap();
        assert!(u.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(dilate(&g, &u, 0.0).is_err());
    }
}
