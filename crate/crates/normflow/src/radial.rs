//! Discrete radial calculus on `[0, r_max]`.
//!
//! Nodes are uniform, `r_i = i h`. Gradients live on the staggered midpoints
//! `r_{i+1/2}`, so the divergence-form operator assembled from midpoint fluxes is
//! a symmetric tridiagonal form and the energy gradient is exact at the discrete level.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

/// Errors raised by grid construction and quadrature.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadialError {
    #[error("dimension must be at least 3, got {0}")]
    Dimension(usize),
    #[error("r_max must be positive and finite, got {0}")]
    Radius(f64),
    #[error("grid needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("expected {expected} samples, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
}

/// Right-end Gregory correction coefficients, orders 1 through 6.
const GREGORY: [f64; 6] = [
    1.0 / 12.0,
    1.0 / 24.0,
    19.0 / 720.0,
    3.0 / 160.0,
    863.0 / 60480.0,
    275.0 / 24192.0,
];

/// Smallest admissible node count.
pub const MIN_NODES: usize = 16;

/// Surface area of the unit sphere in ℝᴺ, `2π^{N/2}/Γ(N/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    // Γ(N/2) for integer N by the half-integer recursion.
    let mut gamma = if dim % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if dim % 2 == 0 { 1.0 } else { 0.5 };
    let target = dim as f64 / 2.0;
    while x < target - 0.25 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / gamma
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Uniform radial grid with quadrature against `ω_{N−1} r^{N−1} dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    r_max: f64,
    h: f64,
    sphere_area: f64,
    nodes: Vec<f64>,
    mids: Vec<f64>,
    weights: Vec<f64>,
    mid_weights: Vec<f64>,
    stiffness: Vec<f64>,
}

impl RadialGrid {
    /// Builds a grid with `n` nodes on `[0, r_max]` in dimension `dim`.
    ///
    /// Node weights are the trapezoid rule for `ω r^{N−1}` with a sixth-order
    /// Gregory end correction at `r_max`. At the origin, radial integrands
    /// `r^{N−1}g(r²)` have vanishing odd derivatives for odd `N`, so the plain
    /// trapezoid end is already high order; for `N = 4` the third derivative
    /// survives and the same correction is applied there. Constants integrate
    /// over the ball to round-off.
    pub fn new(dim: usize, r_max: f64, n: usize) -> Result<Self, RadialError> {
        if dim < 3 {
            return Err(RadialError::Dimension(dim));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(RadialError::Radius(r_max));
        }
        if n < MIN_NODES {
            return Err(RadialError::TooFewNodes { min: MIN_NODES, got: n });
        }
        let h = r_max / (n - 1) as f64;
        let omega = sphere_area(dim);
        let pw = (dim - 1) as i32;
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let mids: Vec<f64> = (0..n - 1).map(|i| (i as f64 + 0.5) * h).collect();

        let mut c = vec![1.0; n];
        c[0] = 0.5;
        c[n - 1] = 0.5;
        for (j, g) in GREGORY.iter().enumerate() {
            let j = j + 1;
            for k in 0..=j {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                c[n - 1 - k] -= g * sign * binomial(j, k);
                if dim == 4 {
                    c[k] -= g * sign * binomial(j, k);
                }
            }
        }
        let mut weights: Vec<f64> = nodes
            .iter()
            .zip(&c)
            .map(|(r, ci)| omega * h * r.powi(pw) * ci)
            .collect();
        // The trapezoid weight of the origin vanishes. Moving the volume of the
        // ball of radius h/2 from node 1 to node 0 keeps every weight positive,
        // so nodal values have a quadrature (Riesz) representative everywhere;
        // the cost is an O(h^{N+2}) perturbation.
        let w0 = omega * (0.5 * h).powi(dim as i32) / dim as f64;
        weights[0] += w0;
        weights[1] -= w0;

        let mid_weights = mids.iter().map(|r| omega * h * r.powi(pw)).collect();
        let stiffness = mids.iter().map(|r| omega * r.powi(pw) / h).collect();
        Ok(Self {
            dim,
            r_max,
            h,
            sphere_area: omega,
            nodes,
            mids,
            weights,
            mid_weights,
            stiffness,
        })
    }

    /// Same node count and dimension, radius multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, RadialError> {
        Self::new(self.dim, self.r_max * factor, self.len())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.mids
    }

    /// Node quadrature weights `w_i`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Midpoint-rule weights `ω h r_{i+1/2}^{N−1}` used for gradient integrals.
    pub fn mid_weights(&self) -> &[f64] {
        &self.mid_weights
    }

    /// `ω r_{i+1/2}^{N−1} / h`, the Dirichlet-form coupling between nodes `i` and `i+1`.
    pub fn stiffness(&self) -> &[f64] {
        &self.stiffness
    }

    /// Volume of the ball of radius `r_max`.
    pub fn ball_volume(&self) -> f64 {
        self.sphere_area * self.r_max.powi(self.dim as i32) / self.dim as f64
    }

    fn check(&self, samples: &[f64], expected: usize) -> Result<(), RadialError> {
        if samples.len() != expected {
            return Err(RadialError::Length {
                expected,
                got: samples.len(),
            });
        }
        match samples.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(RadialError::NonFinite(i)),
            None => Ok(()),
        }
    }

    /// `Σ w_i f_i`, the radial form of `∫_{ℝᴺ} f dx` over the ball.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64, RadialError> {
        self.check(samples, self.len())?;
        Ok(dot(&self.weights, samples))
    }

    /// Midpoint rule over the `n − 1` cells.
    pub fn integrate_mid(&self, samples: &[f64]) -> Result<f64, RadialError> {
        self.check(samples, self.len() - 1)?;
        Ok(dot(&self.mid_weights, samples))
    }

    /// Samples `f` at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// Linear interpolation of nodal values at radius `r`, zero beyond `r_max`.
    pub fn interpolate(&self, u: &[f64], r: f64) -> f64 {
        if r >= self.r_max || r < 0.0 {
            return 0.0;
        }
        let x = r / self.h;
        let i = (x.floor() as usize).min(self.len() - 2);
        let t = x - i as f64;
        u[i] * (1.0 - t) + u[i + 1] * t
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sampled radial profile bound to a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self, RadialError> {
        if values.len() != grid.len() {
            return Err(RadialError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `‖u‖₂`.
    pub fn mass(&self) -> f64 {
        lp_norm_p(&self.grid, &self.values, 2.0).sqrt()
    }
}

/// Midpoint slopes `(u_{i+1} − u_i)/h`.
pub fn gradient_mid(grid: &RadialGrid, u: &[f64]) -> Vec<f64> {
    assert_eq!(u.len(), grid.len(), "profile length does not match grid");
    let inv = 1.0 / grid.h();
    u.windows(2).map(|w| (w[1] - w[0]) * inv).collect()
}

/// `‖u‖_p^p`.
pub fn lp_norm_p(grid: &RadialGrid, u: &[f64], p: f64) -> f64 {
    grid.weights()
        .iter()
        .zip(u)
        .map(|(w, v)| w * v.abs().powf(p))
        .sum()
}

/// `‖∇u‖_s^s`, slopes at midpoints with midpoint weights.
pub fn grad_norm_s(grid: &RadialGrid, u: &[f64], s: f64) -> f64 {
    gradient_mid(grid, u)
        .iter()
        .zip(grid.mid_weights())
        .map(|(g, w)| w * g.abs().powf(s))
        .sum()
}

/// `max |u′|` over midpoints.
pub fn grad_linf(grid: &RadialGrid, u: &[f64]) -> f64 {
    gradient_mid(grid, u).iter().fold(0.0, |m, g| m.max(g.abs()))
}

/// Applies the divergence-form operator with midpoint coefficients `kappa`:
/// returns the Euclidean vector `A u` with `uᵀ A u = Σ kappa_m ω r_m^{N−1} h slope_m²`.
pub fn stiffness_apply(grid: &RadialGrid, kappa: &[f64], u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for (i, (k, km)) in kappa.iter().zip(grid.stiffness()).enumerate() {
        let f = k * km * (u[i + 1] - u[i]);
        out[i] -= f;
        out[i + 1] += f;
    }
    out
}

/// Symmetric tridiagonal system, solved by the Thomas algorithm.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    /// `diag` has length m, `off` length m − 1 (entries (i, i+1)).
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len());
        Self { diag, off }
    }

    /// Assembles `K_kappa + alpha·W` restricted to the free nodes `0..n−1`
    /// (the last node carries the Dirichlet condition).
    pub fn metric(grid: &RadialGrid, kappa: &[f64], alpha: f64) -> Self {
        let m = grid.len() - 1;
        let mut diag: Vec<f64> = grid.weights()[..m].iter().map(|w| alpha * w).collect();
        let mut off = vec![0.0; m - 1];
        for i in 0..m {
            let k = kappa[i] * grid.stiffness()[i];
            diag[i] += k;
            if i + 1 < m {
                diag[i + 1] += k;
                off[i] = -k;
            }
        }
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.diag.len();
        assert_eq!(rhs.len(), m);
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut beta = self.diag[0];
        d[0] = rhs[0] / beta;
        for i in 1..m {
            c[i - 1] = self.off[i - 1] / beta;
            beta = self.diag[i] - self.off[i - 1] * c[i - 1];
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / beta;
        }
        for i in (0..m - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.diag.len();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(a, b)| a * b).collect();
        for i in 0..m - 1 {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_grad2sq(dim: usize) -> f64 {
        // ∫|∇e^{−r²}|² = ω ∫ 4r² e^{−2r²} r^{N−1} dr = ω·2·Γ((N+2)/2)/2^{(N+2)/2}
        let a = (dim as f64 + 2.0) / 2.0;
        let gamma = if dim % 2 == 0 {
            (1..(a as usize)).map(|k| k as f64).product::<f64>()
        } else {
            let mut g = PI.sqrt();
            let mut x = 0.5;
            while x < a - 0.25 {
                g *= x;
                x += 1.0;
            }
            g
        };
        sphere_area(dim) * 2.0 * gamma / 2f64.powf(a)
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ball_volumes() {
        let g = RadialGrid::new(3, 2.0, 4096).unwrap();
        let ones = vec![1.0; g.len()];
        assert!((g.integrate(&ones).unwrap() - 32.0 * PI / 3.0).abs() < 1e-10);
        let g = RadialGrid::new(4, 1.0, 1000).unwrap();
        let ones = vec![1.0; g.len()];
        assert!((g.integrate(&ones).unwrap() - PI * PI / 2.0).abs() < 1e-12);
        for dim in 3..=8 {
            let g = RadialGrid::new(dim, 1.7, 1000).unwrap();
            let s = g.integrate(&vec![1.0; g.len()]).unwrap();
            assert!((s / g.ball_volume() - 1.0).abs() < 1e-12, "dim {dim}");
        }
    }

    #[test]
    fn weights_positive_and_origin_finite() {
        for dim in 3..=6 {
            let g = RadialGrid::new(dim, 30.0, 4096).unwrap();
            assert!(g.weights().iter().all(|w| *w > 0.0 && w.is_finite()));
            assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
            assert_eq!(g.nodes()[0], 0.0);
        }
    }

    #[test]
    fn gaussian_mass() {
        let g = RadialGrid::new(3, 30.0, 4096).unwrap();
        let u = g.sample(|r| (-r * r).exp());
        let exact = (PI / 2.0).powf(1.5);
        assert!((lp_norm_p(&g, &u, 2.0) / exact - 1.0).abs() < 1e-6);
        assert!((exact - 1.968_701_243_215_302).abs() < 1e-12);
    }

    #[test]
    fn gaussian_gradient_norm() {
        let g = RadialGrid::new(3, 30.0, 4096).unwrap();
        let u = g.sample(|r| (-r * r).exp());
        let exact = gaussian_grad2sq(3);
        // 3 (π/2)^{3/2}, locked as a regression constant
        assert!((exact - 5.906_103_729_645_906).abs() < 1e-12);
        let got = grad_norm_s(&g, &u, 2.0);
        assert!((got / exact - 1.0).abs() < 1e-4, "{got} vs {exact}");
    }

    #[test]
    fn slopes() {
        let g = RadialGrid::new(3, 2.0, 101).unwrap();
        let lin = g.sample(|r| r);
        assert!(gradient_mid(&g, &lin).iter().all(|s| (s - 1.0).abs() < 1e-12));
        let c = vec![3.5; g.len()];
        assert!(gradient_mid(&g, &c).iter().all(|s| *s == 0.0));
        let g = RadialGrid::new(3, 2.0, 2001).unwrap();
        let u = g.sample(|r| (-r * r).exp());
        let s = gradient_mid(&g, &u);
        // r_max = 2 with 2000 cells puts the midpoint 999.5 h exactly at r = 0.9995;
        // compare with the exact derivative there
        let k = 999;
        let r = g.midpoints()[k];
        assert!((s[k] + 2.0 * r * (-r * r).exp()).abs() < 1e-6);
        assert!((s[k] + 2.0 * (-1.0f64).exp()).abs() < 1e-3);
        assert_eq!(lp_norm_p(&g, &vec![0.0; g.len()], 3.0), 0.0);
    }

    #[test]
    fn quadrature_orders() {
        // bump supported in [0, 1): both rules gain at least the
        // second-order factor 4 per halving
        let bump = |r: f64| if r < 1.0 { (1.0 - r * r).powi(4) } else { 0.0 };
        let exact = {
            let g = RadialGrid::new(3, 1.5, 1 << 16).unwrap();
            g.integrate(&g.sample(bump)).unwrap()
        };
        let errs: Vec<(f64, f64)> = [201, 401, 801]
            .iter()
            .map(|&n| {
                let g = RadialGrid::new(3, 1.5, n).unwrap();
                let node = g.integrate(&g.sample(bump)).unwrap() - exact;
                let mid: Vec<f64> = g.midpoints().iter().map(|&r| bump(r)).collect();
                (node.abs(), (g.integrate_mid(&mid).unwrap() - exact).abs())
            })
            .collect();
        for w in errs.windows(2) {
            let mid_ratio = w[0].1 / w[1].1;
            assert!(mid_ratio > 3.8, "midpoint ratio {mid_ratio}");
            assert!(w[0].0 / w[1].0 > 3.8 || w[1].0 < 1e-13);
        }
    }

    #[test]
    fn summation_by_parts() {
        let g = RadialGrid::new(3, 5.0, 500).unwrap();
        let mut u = g.sample(|r| (-(r * r)).exp() * (1.0 + r));
        let mut v = g.sample(|r| (r * 0.7).cos() / (1.0 + r * r));
        *u.last_mut().unwrap() = 0.0;
        *v.last_mut().unwrap() = 0.0;
        let du = gradient_mid(&g, &u);
        let dv = gradient_mid(&g, &v);
        let lhs: f64 = (0..du.len()).map(|i| g.mid_weights()[i] * du[i] * dv[i]).sum();
        let kappa = vec![1.0; du.len()];
        let au = stiffness_apply(&g, &kappa, &u);
        // Lu = −(Au)/w is the discrete Laplacian, so −∫(Lu)v = Σ (Au)_i v_i
        let rhs: f64 = au.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn tridiagonal_roundtrip() {
        let g = RadialGrid::new(3, 4.0, 64).unwrap();
        let kappa = vec![1.3; g.len() - 1];
        let t = Tridiagonal::metric(&g, &kappa, 0.7);
        let x: Vec<f64> = (0..t.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = t.apply(&x);
        let z = t.solve(&y);
        for (a, b) in x.iter().zip(&z) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RadialGrid::new(2, 1.0, 100).is_err());
        assert!(RadialGrid::new(3, -1.0, 100).is_err());
        let g = RadialGrid::new(3, 1.0, 100).unwrap();
        let mut u = vec![0.0; 100];
        u[5] = f64::NAN;
        assert_eq!(g.integrate(&u), Err(RadialError::NonFinite(5)));
        assert!(g.integrate(&[1.0]).is_err());
    }
}
