//! Coefficient families `b(s)`, `B(s) = ∫₀^s b`, with `s = |∇u|²`.
//!
//! Every family in this module is evaluated at the squared gradient. The
//! two-q family `b(s) = 1 + s^{(q−2)/2}` therefore corresponds to
//! `1 + |∇u|^{q−2}`.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoefError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("s = {s} lies outside the coefficient domain [0, {sup})")]
    Domain { s: f64, sup: f64 },
}

/// Concrete coefficient laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kind {
    /// `b(s) = 1 + s^{(q−2)/2}`; for `q = 2` the degenerate `b ≡ 2`.
    TwoQ { q: f64 },
    /// `a(s) = (1 − s)^{−1/2}`.
    BornInfeld,
    /// `a(s) = β(1 − s)^{−1/2} − γ(1 + s)^{−1/2}`.
    MeanCurvature { beta: f64, gamma: f64 },
    /// `a(s) = a₀ + a₁ s` restricted to `[0, 1)`; a boundary case for the
    /// comparison test of truncations.
    Affine { a0: f64, a1: f64 },
    /// C¹ power-law continuation of a singular family beyond `1 − θ`.
    Truncated(Box<Truncation>),
}

/// Data of a truncation `a_θ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truncation {
    pub base: Family,
    pub theta: f64,
    pub q: f64,
    /// Junction point `1 − θ`.
    pub s0: f64,
    pub k1: f64,
    pub k0: f64,
    /// `A(1 − θ)`.
    pub big_a_s0: f64,
}

/// A coefficient family with its growth metadata.
///
/// `c1`, `c2` bound both `b(s)s` and `B(s)` between multiples of `s + s^{q/2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Family {
    pub kind: Kind,
    pub q: f64,
    pub c1: f64,
    pub c2: f64,
    /// Largest `α` with `α b(s) s ≤ B(s)`, when known in closed form.
    pub alpha_b3: Option<f64>,
}

/// `count` points geometrically spaced on `[lo, hi]`.
pub fn log_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

impl Family {
    /// `b(s) = 1 + s^{(q−2)/2}`, `B(s) = s + (2/q) s^{q/2}`.
    pub fn two_q(q: f64) -> Result<Self, CoefError> {
        if !(q.is_finite() && q > 1.0) {
            return Err(CoefError::InvalidParameter(format!("q must exceed 1, got {q}")));
        }
        let (c1, c2, alpha) = if q > 2.0 {
            (2.0 / q, 1.0, 2.0 / q)
        } else if q < 2.0 {
            (1.0, 2.0 / q, 1.0)
        } else {
            (1.0, 1.0, 1.0)
        };
        Ok(Self {
            kind: Kind::TwoQ { q },
            q,
            c1,
            c2,
            alpha_b3: Some(alpha),
        })
    }

    /// Born–Infeld `a(s) = (1 − s)^{−1/2}`, `A(s) = 2(1 − √(1 − s))`.
    pub fn born_infeld() -> Self {
        Self {
            kind: Kind::BornInfeld,
            q: 2.0,
            c1: 0.5,
            c2: f64::INFINITY,
            alpha_b3: None,
        }
    }

    /// Mean-curvature `a(s) = β(1 − s)^{−1/2} − γ(1 + s)^{−1/2}`; needs `β > γ ≥ 0`
    /// so that `a(0) > 0`.
    pub fn mean_curvature(beta: f64, gamma: f64) -> Result<Self, CoefError> {
        if !(beta > 0.0 && gamma >= 0.0 && beta > gamma) {
            return Err(CoefError::InvalidParameter(format!(
                "mean curvature needs beta > gamma >= 0, got beta={beta}, gamma={gamma}"
            )));
        }
        Ok(Self {
            kind: Kind::MeanCurvature { beta, gamma },
            q: 2.0,
            c1: 0.5 * (beta - gamma),
            c2: f64::INFINITY,
            alpha_b3: None,
        })
    }

    /// Affine `a(s) = a₀ + a₁ s` on `[0, 1)`.
    pub fn affine(a0: f64, a1: f64) -> Result<Self, CoefError> {
        if !(a0 > 0.0 && a1 >= 0.0) {
            return Err(CoefError::InvalidParameter(format!(
                "affine family needs a0 > 0, a1 >= 0, got {a0}, {a1}"
            )));
        }
        Ok(Self {
            kind: Kind::Affine { a0, a1 },
            q: 2.0,
            c1: 0.5 * a0,
            c2: f64::INFINITY,
            alpha_b3: None,
        })
    }

    /// Config identifier.
    pub fn name(&self) -> &'static str {
        match &self.kind {
            Kind::TwoQ { .. } => "two_q",
            Kind::BornInfeld => "born_infeld",
            Kind::MeanCurvature { .. } => "mean_curvature",
            Kind::Affine { .. } => "affine",
            Kind::Truncated(t) if t.base.kind == Kind::BornInfeld => "truncated_bi",
            Kind::Truncated(_) => "truncated",
        }
    }

    /// Supremum of the admissible `s`: 1 for untruncated singular families.
    pub fn domain_sup(&self) -> f64 {
        match &self.kind {
            Kind::BornInfeld | Kind::MeanCurvature { .. } | Kind::Affine { .. } => 1.0,
            _ => f64::INFINITY,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.domain_sup().is_finite()
    }

    pub fn truncation(&self) -> Option<&Truncation> {
        match &self.kind {
            Kind::Truncated(t) => Some(t),
            _ => None,
        }
    }

    /// `b(s)` with a domain check.
    pub fn b_checked(&self, s: f64) -> Result<f64, CoefError> {
        if !(s >= 0.0 && s < self.domain_sup()) {
            return Err(CoefError::Domain {
                s,
                sup: self.domain_sup(),
            });
        }
        Ok(self.b(s))
    }

    /// `b(s)`. Outside the domain of a singular family the result is not finite.
    pub fn b(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::TwoQ { q } => {
                if *q == 2.0 {
                    2.0
                } else {
                    1.0 + s.powf(0.5 * (q - 2.0))
                }
            }
            Kind::BornInfeld => 1.0 / (1.0 - s).sqrt(),
            Kind::MeanCurvature { beta, gamma } => {
                beta / (1.0 - s).sqrt() - gamma / (1.0 + s).sqrt()
            }
            Kind::Affine { a0, a1 } => {
                if s < 1.0 {
                    a0 + a1 * s
                } else {
                    f64::NAN
                }
            }
            Kind::Truncated(t) => {
                if s <= t.s0 {
                    t.base.b(s)
                } else {
                    t.k1 * s.powf(0.5 * (t.q - 2.0)) + t.k0
                }
            }
        }
    }

    /// `b′(s)`.
    pub fn db(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::TwoQ { q } => {
                if *q == 2.0 {
                    0.0
                } else {
                    0.5 * (q - 2.0) * s.powf(0.5 * (q - 4.0))
                }
            }
            Kind::BornInfeld => 0.5 * (1.0 - s).powf(-1.5),
            Kind::MeanCurvature { beta, gamma } => {
                0.5 * beta * (1.0 - s).powf(-1.5) + 0.5 * gamma * (1.0 + s).powf(-1.5)
            }
            Kind::Affine { a1, .. } => {
                if s < 1.0 {
                    *a1
                } else {
                    f64::NAN
                }
            }
            Kind::Truncated(t) => {
                if s <= t.s0 {
                    t.base.db(s)
                } else {
                    t.k1 * 0.5 * (t.q - 2.0) * s.powf(0.5 * (t.q - 4.0))
                }
            }
        }
    }

    /// `b″(s)`.
    pub fn d2b(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::TwoQ { q } => {
                if *q == 2.0 {
                    0.0
                } else {
                    0.25 * (q - 2.0) * (q - 4.0) * s.powf(0.5 * (q - 6.0))
                }
            }
            Kind::BornInfeld => 0.75 * (1.0 - s).powf(-2.5),
            Kind::MeanCurvature { beta, gamma } => {
                0.75 * beta * (1.0 - s).powf(-2.5) - 0.75 * gamma * (1.0 + s).powf(-2.5)
            }
            Kind::Affine { .. } => {
                if s < 1.0 {
                    0.0
                } else {
                    f64::NAN
                }
            }
            Kind::Truncated(t) => {
                if s <= t.s0 {
                    t.base.d2b(s)
                } else {
                    t.k1 * 0.25 * (t.q - 2.0) * (t.q - 4.0) * s.powf(0.5 * (t.q - 6.0))
                }
            }
        }
    }

    /// `B(s) = ∫₀^s b(t) dt`, closed form.
    pub fn big_b(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::TwoQ { q } => {
                if *q == 2.0 {
                    2.0 * s
                } else {
                    s + 2.0 / q * s.powf(0.5 * q)
                }
            }
            // 1 − √(1−s) = s/(1 + √(1−s)) and √(1+s) − 1 = s/(√(1+s) + 1) avoid cancellation
            Kind::BornInfeld => 2.0 * s / (1.0 + (1.0 - s).sqrt()),
            Kind::MeanCurvature { beta, gamma } => {
                2.0 * beta * s / (1.0 + (1.0 - s).sqrt()) - 2.0 * gamma * s / ((1.0 + s).sqrt() + 1.0)
            }
            Kind::Affine { a0, a1 } => {
                if s < 1.0 {
                    a0 * s + 0.5 * a1 * s * s
                } else {
                    f64::NAN
                }
            }
            Kind::Truncated(t) => {
                if s <= t.s0 {
                    t.base.big_b(s)
                } else {
                    t.big_a_s0
                        + t.k1 * (2.0 / t.q) * (s.powf(0.5 * t.q) - t.s0.powf(0.5 * t.q))
                        + t.k0 * (s - t.s0)
                }
            }
        }
    }

    /// Tangent stiffness `d/dg [b(g²) g] = b(s) + 2 s b′(s)` at `s = g²`.
    ///
    /// Written in closed form for the power laws so that `s = 0` stays finite
    /// whenever the limit is.
    pub fn flux_derivative(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::TwoQ { q } => {
                if *q == 2.0 {
                    2.0
                } else {
                    1.0 + (q - 1.0) * s.powf(0.5 * (q - 2.0))
                }
            }
            Kind::Truncated(t) if s > t.s0 => {
                t.k1 * (t.q - 1.0) * s.powf(0.5 * (t.q - 2.0)) + t.k0
            }
            _ => self.b(s) + 2.0 * s * self.db(s),
        }
    }
}

/// Parameters of a truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationParams {
    pub theta: f64,
    pub q: f64,
}

impl TruncationParams {
    pub fn new(theta: f64, q: f64) -> Result<Self, CoefError> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(CoefError::InvalidParameter(format!(
                "theta must lie in (0, 1), got {theta}"
            )));
        }
        if !(q.is_finite() && q > 2.0) {
            return Err(CoefError::InvalidParameter(format!("q must exceed 2, got {q}")));
        }
        Ok(Self { theta, q })
    }

    /// Default exponent `q(θ) = max(N + 1, 4)`.
    pub fn default_q(dim: usize) -> f64 {
        ((dim + 1) as f64).max(4.0)
    }

    /// Rejects `q(θ) ≤ N`.
    pub fn for_dim(theta: f64, q: f64, dim: usize) -> Result<Self, CoefError> {
        if q <= dim as f64 {
            return Err(CoefError::InvalidParameter(format!(
                "q(theta) must exceed N = {dim}, got {q}"
            )));
        }
        Self::new(theta, q)
    }
}

/// Largest `θ` of the continuation; the θ-independent lower growth constant
/// of a truncation is sampled at this level.
pub const THETA_ONE: f64 = 0.5;

fn growth_ratios(f: &Family, q: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for s in log_samples(1e-6, 1e6, 400) {
        let base = s + s.powf(0.5 * q);
        for r in [f.b(s) * s / base, f.big_b(s) / base] {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}

fn truncate_raw(a: &Family, params: TruncationParams) -> Family {
    let TruncationParams { theta, q } = params;
    let s0 = 1.0 - theta;
    let k1 = s0.powf(-0.5 * (q - 4.0)) * (2.0 / (q - 2.0)) * a.db(s0);
    let k0 = a.b(s0) - k1 * s0.powf(0.5 * (q - 2.0));
    Family {
        kind: Kind::Truncated(Box::new(Truncation {
            base: a.clone(),
            theta,
            q,
            s0,
            k1,
            k0,
            big_a_s0: a.big_b(s0),
        })),
        q,
        c1: 0.0,
        c2: 0.0,
        alpha_b3: None,
    }
}

/// Truncation `a_θ`: equal to `a` on `[0, 1−θ]` and to `k₁ s^{(q−2)/2} + k₀`
/// beyond, matched in value and slope at `1 − θ`.
///
/// `c1` is sampled from the `θ₁ = 0.5` truncation with a 1% margin and does
/// not depend on `θ`; `c2` is sampled from this truncation with a 1% margin.
pub fn truncate(a: &Family, params: TruncationParams) -> Result<Family, CoefError> {
    if !a.is_singular() {
        return Err(CoefError::InvalidParameter(format!(
            "truncation needs a singular family, got {}",
            a.name()
        )));
    }
    let mut out = truncate_raw(a, params);
    let reference = truncate_raw(a, TruncationParams { theta: THETA_ONE, ..params });
    let (lo, _) = growth_ratios(&reference, params.q);
    let (_, hi) = growth_ratios(&out, params.q);
    out.c1 = 0.99 * lo;
    out.c2 = 1.01 * hi;
    Ok(out)
}

/// Outcome of one sampled assumption.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub pass: bool,
    pub violations: usize,
    /// Smallest slack over the samples (negative when violated).
    pub worst_margin: f64,
    /// Sample at which the smallest slack occurred.
    pub worst_s: f64,
}

impl Check {
    fn from_margins(samples: &[f64], margins: impl Iterator<Item = f64>, strict: bool) -> Self {
        let mut worst = f64::INFINITY;
        let mut worst_s = f64::NAN;
        let mut violations = 0;
        for (s, m) in samples.iter().zip(margins) {
            let bad = if strict { m <= 0.0 } else { m < 0.0 } || m.is_nan();
            if bad {
                violations += 1;
            }
            if m < worst || m.is_nan() {
                worst = m;
                worst_s = *s;
            }
        }
        Self {
            pass: violations == 0,
            violations,
            worst_margin: worst,
            worst_s,
        }
    }
}

/// Sampled certification of positivity, growth, monotonicity and the
/// Ambrosetti–Rabinowitz-type bound `α b(s)s ≤ B(s) < (2(N+p)/(Np)) b(s)s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub b0_positive: Check,
    pub b1_growth: Check,
    pub b2_increasing: Check,
    /// Lower bound `α b s ≤ B` with the sampled `α`, required `α > 2(N+2)/(Np)`.
    pub b3: Check,
    pub b3_upper: Check,
    pub alpha_sampled: f64,
    /// Closed-form `α` when the family carries one, else the sampled value.
    pub alpha: f64,
    pub alpha_required: f64,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.b0_positive.pass
            && self.b1_growth.pass
            && self.b2_increasing.pass
            && self.b3.pass
            && self.b3_upper.pass
    }
}

/// Default samples: 241 log-spaced points on `[10⁻⁶, 10⁶]`, clipped to the domain.
pub fn default_samples(fam: &Family) -> Vec<f64> {
    let sup = fam.domain_sup();
    let mut s: Vec<f64> = log_samples(1e-6, 1e6, 241)
        .into_iter()
        .filter(|&x| x < sup)
        .collect();
    if sup.is_finite() {
        s.extend((1..=6).map(|k| sup - 10f64.powi(-k)));
        s.sort_by(f64::total_cmp);
        s.dedup();
    }
    s
}

/// Samples each assumption on `samples` for exponents `dim`, `p`.
pub fn certify_assumptions(fam: &Family, samples: &[f64], dim: usize, p: f64) -> AssumptionReport {
    let n = dim as f64;
    let q = fam.q;
    let b0 = Check::from_margins(samples, samples.iter().map(|&s| fam.b(s)), true);
    let b1 = Check::from_margins(
        samples,
        samples.iter().map(|&s| {
            let base = s + s.powf(0.5 * q);
            let lo = (fam.b(s) * s).min(fam.big_b(s)) / base;
            let hi = (fam.b(s) * s).max(fam.big_b(s)) / base;
            let tol = 1e-12;
            (lo - fam.c1 + tol).min(fam.c2 - hi + tol)
        }),
        false,
    );
    let b2 = Check::from_margins(
        &samples[..samples.len().saturating_sub(1)],
        samples
            .windows(2)
            .map(|w| fam.b(w[1]) - fam.b(w[0]) + 1e-14 * fam.b(w[0]).abs()),
        false,
    );
    let ratios: Vec<f64> = samples.iter().map(|&s| fam.big_b(s) / (fam.b(s) * s)).collect();
    let alpha_sampled = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let alpha = fam.alpha_b3.unwrap_or(alpha_sampled);
    let alpha_required = 2.0 * (n + 2.0) / (n * p);
    let b3 = Check::from_margins(samples, ratios.iter().map(|r| r - alpha_required), true);
    let upper = 2.0 * (n + p) / (n * p);
    let b3_upper = Check::from_margins(samples, ratios.iter().map(|r| upper - r), true);
    AssumptionReport {
        b0_positive: b0,
        b1_growth: b1,
        b2_increasing: b2,
        b3,
        b3_upper,
        alpha_sampled,
        alpha,
        alpha_required,
    }
}

/// `⟨b(|x|²)x − b(|y|²)y, x−y⟩ − b(|x−y|²/16)|x−y|²`.
pub fn monotone_gap(fam: &Family, x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let nx: f64 = x.iter().map(|v| v * v).sum();
    let ny: f64 = y.iter().map(|v| v * v).sum();
    let (bx, by) = (fam.b(nx), fam.b(ny));
    let mut inner = 0.0;
    let mut d2 = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = a - b;
        inner += (bx * a - by * b) * d;
        d2 += d * d;
    }
    if d2 == 0.0 {
        return 0.0;
    }
    inner - fam.b(d2 / 16.0) * d2
}

/// Comparison `a_θ ≤ a` on `(1−θ, 1)` and its sufficient condition
/// `a″(s)s − (q−4)/2·a′(s) > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemarkReport {
    pub theta: f64,
    pub q: f64,
    pub direct: Check,
    pub sufficient: Check,
    /// Convexity of `a` on the samples, reported when `q = 4`.
    pub convex: Option<bool>,
}

/// Samples the comparison between a singular family and its truncation.
pub fn certify_groundstate_remark(a: &Family, theta: f64, q: f64) -> Result<RemarkReport, CoefError> {
    let params = TruncationParams::new(theta, q)?;
    let at = truncate(a, params)?;
    let s0 = 1.0 - theta;
    let mut samples: Vec<f64> = (1..400).map(|k| s0 + theta * k as f64 / 400.0).collect();
    samples.extend((3..=8).map(|k| 1.0 - theta * 10f64.powi(-k)));
    samples.sort_by(f64::total_cmp);
    let direct = Check::from_margins(
        &samples,
        samples.iter().map(|&s| {
            let av = a.b(s);
            av - at.b(s) + 1e-12 * av
        }),
        false,
    );
    let sufficient = Check::from_margins(
        &samples,
        samples
            .iter()
            .map(|&s| a.d2b(s) * s - 0.5 * (q - 4.0) * a.db(s)),
        true,
    );
    let convex = (q == 4.0).then(|| samples.iter().all(|&s| a.d2b(s) >= 0.0));
    Ok(RemarkReport {
        theta,
        q,
        direct,
        sufficient,
        convex,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn two_q_values() {
        let f = Family::two_q(3.0).unwrap();
        assert!(close(f.b(4.0), 3.0, 1e-15));
        assert!(close(f.big_b(4.0), 28.0 / 3.0, 1e-15));
        assert_eq!((f.c1, f.c2), (2.0 / 3.0, 1.0));
        let g = Family::two_q(2.0).unwrap();
        assert_eq!(g.b(0.3), 2.0);
        assert_eq!(g.big_b(0.3), 0.6);
        assert_eq!((g.c1, g.c2), (1.0, 1.0));
        let h = Family::two_q(1.5).unwrap();
        assert_eq!((h.c1, h.c2), (1.0, 2.0 / 1.5));
        assert!(Family::two_q(1.0).is_err());
    }

    #[test]
    fn two_q_ratio_inside_growth_band() {
        let f = Family::two_q(3.0).unwrap();
        for t in log_samples(1e-3, 1e3, 2000) {
            let s = t * t;
            let r = f.big_b(s) / (s + t.powi(3));
            assert!(r > 2.0 / 3.0 && r <= 1.0 + 1e-15, "{t} {r}");
        }
    }

    #[test]
    fn born_infeld_values() {
        let f = Family::born_infeld();
        assert_eq!(f.b(0.0), 1.0);
        assert_eq!(f.big_b(0.0), 0.0);
        assert!(close(f.b(0.75), 2.0, 1e-15));
        assert!(close(f.big_b(0.75), 1.0, 1e-15));
        assert!(close(f.db(0.75), 4.0, 1e-14));
        assert!(f.b_checked(1.0).is_err());
        assert!(f.b_checked(0.99).is_ok());
        let m = Family::mean_curvature(1.0, 0.0).unwrap();
        for s in log_samples(1e-4, 0.999, 20) {
            assert!((m.b(s) - f.b(s)).abs() <= 1e-15 * f.b(s));
            assert!((m.big_b(s) - f.big_b(s)).abs() <= 1e-15 * f.big_b(s).max(1.0));
        }
    }

    #[test]
    fn truncation_matches_at_junction() {
        let bi = Family::born_infeld();
        let t = truncate(&bi, TruncationParams::new(0.25, 4.0).unwrap()).unwrap();
        for s in [0.8, 1.0, 2.0, 10.0] {
            assert!(close(t.b(s), 4.0 * s - 1.0, 1e-14), "{s}");
        }
        assert!(close(t.b(0.75), 2.0, 1e-15));
        assert!(close(t.db(0.75 + 1e-12), 4.0, 1e-9));
        for s in log_samples(1e-6, 0.75, 50) {
            assert_eq!(t.b(s), bi.b(s));
        }
    }

    #[test]
    fn truncation_is_c1() {
        let bi = Family::born_infeld();
        let t = truncate(&bi, TruncationParams::new(0.1, 5.0).unwrap()).unwrap();
        let s0 = 0.9;
        assert!(close(t.b(s0 + 1e-12), t.b(s0 - 1e-12), 1e-10));
        let e = 1e-6;
        let left = (t.b(s0) - t.b(s0 - e)) / e;
        let right = (t.b(s0 + e) - t.b(s0)) / e;
        let exact = bi.db(s0);
        assert!((left / exact - 1.0).abs() < 1e-4);
        assert!((right / exact - 1.0).abs() < 1e-4);
        let central = (t.b(s0 + 2.0 * e) - t.b(s0)) / (2.0 * e);
        assert!((central / t.db(s0 + e) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn primitives_differentiate_to_b() {
        let bi = Family::born_infeld();
        let fams = vec![
            Family::two_q(3.0).unwrap(),
            Family::two_q(2.5).unwrap(),
            Family::two_q(1.5).unwrap(),
            Family::two_q(2.0).unwrap(),
            truncate(&bi, TruncationParams::new(0.25, 4.0).unwrap()).unwrap(),
            truncate(&bi, TruncationParams::new(0.1, 5.0).unwrap()).unwrap(),
        ];
        for f in &fams {
            for s in log_samples(1e-3, 1e3, 64) {
                let e = 1e-6 * s;
                let d = (f.big_b(s + e) - f.big_b(s - e)) / (2.0 * e);
                assert!((d / f.b(s) - 1.0).abs() < 1e-6, "{} at {s}", f.name());
            }
        }
        for f in [bi, Family::mean_curvature(2.0, 0.5).unwrap()] {
            for s in log_samples(1e-3, 0.99, 64) {
                let e = 1e-7 * s;
                let d = (f.big_b(s + e) - f.big_b(s - e)) / (2.0 * e);
                assert!((d / f.b(s) - 1.0).abs() < 1e-6, "{} at {s}", f.name());
            }
        }
    }

    #[test]
    fn flux_derivative_matches_definition() {
        let bi = Family::born_infeld();
        let fams = vec![
            Family::two_q(3.0).unwrap(),
            truncate(&bi, TruncationParams::new(0.25, 4.0).unwrap()).unwrap(),
            Family::mean_curvature(2.0, 0.5).unwrap(),
        ];
        for f in &fams {
            for s in log_samples(1e-3, 0.7, 20) {
                let g = s.sqrt();
                let e = 1e-6 * g;
                let flux = |g: f64| f.b(g * g) * g;
                let d = (flux(g + e) - flux(g - e)) / (2.0 * e);
                assert!((d / f.flux_derivative(s) - 1.0).abs() < 1e-7);
            }
        }
        assert_eq!(Family::two_q(2.5).unwrap().flux_derivative(0.0), 1.0);
    }

    #[test]
    fn certify_two_q() {
        let f = Family::two_q(3.0).unwrap();
        let r = certify_assumptions(&f, &default_samples(&f), 3, 3.0);
        assert!(r.b0_positive.pass && r.b1_growth.pass && r.b2_increasing.pass);
        assert_eq!(r.b0_positive.violations + r.b1_growth.violations + r.b2_increasing.violations, 0);

        let f = Family::two_q(2.5).unwrap();
        let r = certify_assumptions(&f, &default_samples(&f), 3, 5.0);
        assert_eq!(r.alpha, 0.8);
        assert!((r.alpha_required - 2.0 / 3.0).abs() < 1e-15);
        // sampled minimum approaches 2/q from above
        assert!(r.alpha_sampled > 0.8 && r.alpha_sampled < 0.81);
        assert!(r.b3.pass && r.b3_upper.pass);
    }

    #[test]
    fn truncated_bi_fails_b3() {
        let t = truncate(&Family::born_infeld(), TruncationParams::new(0.1, 4.0).unwrap()).unwrap();
        let r = certify_assumptions(&t, &default_samples(&t), 3, 5.0);
        assert!(r.b0_positive.pass && r.b1_growth.pass && r.b2_increasing.pass);
        assert!(!r.b3.pass);
        // the bound already fails at the junction s = 1 − θ
        let ratio = t.big_b(0.9) / (t.b(0.9) * 0.9);
        assert!(ratio < r.alpha_required);
        assert!(r.b3.worst_s > 0.9 - 1e-12);
    }

    #[test]
    fn truncation_growth_constants() {
        let bi = Family::born_infeld();
        let mut c1 = None;
        for theta in [0.5, 0.25, 0.125, 0.0625] {
            let t = truncate(&bi, TruncationParams::new(theta, 4.0).unwrap()).unwrap();
            if let Some(c) = c1 {
                assert_eq!(t.c1, c);
            }
            c1 = Some(t.c1);
            let r = certify_assumptions(&t, &default_samples(&t), 3, 3.0);
            assert!(r.b1_growth.pass, "theta {theta}: {:?}", r.b1_growth);
        }
    }

    #[test]
    fn monotone_gap_examples() {
        let f = Family::two_q(3.0).unwrap();
        assert_eq!(monotone_gap(&f, &[1.0, -2.0], &[1.0, -2.0]), 0.0);
        assert!(close(monotone_gap(&f, &[1.0, 0.0], &[0.0, 0.0]), 0.75, 1e-15));
    }

    #[test]
    fn remark_on_born_infeld() {
        let bi = Family::born_infeld();
        for theta in [0.5, 0.25, 0.1, 0.01] {
            let r = certify_groundstate_remark(&bi, theta, 4.0).unwrap();
            assert!(r.direct.pass && r.sufficient.pass);
            assert_eq!(r.convex, Some(true));
        }
        let lin = Family::affine(1.0, 2.0).unwrap();
        let r = certify_groundstate_remark(&lin, 0.25, 4.0).unwrap();
        assert!(!r.sufficient.pass);
        assert_eq!(r.sufficient.worst_margin, 0.0);
        assert!(r.direct.pass);
        let r = certify_groundstate_remark(&bi, 0.1, 5.0).unwrap();
        // a″s − a′/2 > 0 on (0.9, 1) for Born–Infeld
        assert!(r.sufficient.pass && r.direct.pass);
        assert_eq!(r.convex, None);
    }
}
