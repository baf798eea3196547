//! The invariant battery run by `check`.
//!
//! Each criterion fixes its own grid and problem; only the seed comes from the
//! configuration. Outcomes carry no timings, so repeated runs with one seed
//! serialize to identical bytes.

use std::sync::Arc;

use normflow::bipipeline::{solve_born_infeld, BIReport, Schedule};
use normflow::coefficients::{monotone_gap, truncate, Family, TruncationParams};
use normflow::energy::{dilate, energy, euler_lagrange, fiber_energy, ProblemSpec};
use normflow::groundstate::{mass_curve, solve_normalized, FlowOptions, Init, MassCurve, StopReason};
use normflow::mountainpass::{mp_geometry, mp_solve, MpOptions};
use normflow::radial::{grad_norm_s, lp_norm_p};
use normflow::reference::{critical_thresholds, gn_constant, gn_quotient, rescaled_kwong, solve_kwong};
use normflow::RadialGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::output::{self, Artifact, Cell};

#[derive(Debug, Error)]
#[error("criterion {id}: {msg}")]
pub struct SuiteError {
    pub id: u8,
    pub msg: String,
}

fn fail<E: std::fmt::Display>(id: u8) -> impl Fn(E) -> SuiteError {
    move |e| SuiteError { id, msg: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub metrics: Vec<Metric>,
    pub note: String,
}

impl Criterion {
    fn new(id: u8, name: &'static str) -> Self {
        Self {
            id,
            name,
            pass: true,
            metrics: Vec::new(),
            note: String::new(),
        }
    }

    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push(Metric {
            name: name.into(),
            value,
        });
    }

    /// Records a gate; the criterion passes only if every gate holds.
    fn gate(&mut self, ok: bool, what: &str) {
        if !ok {
            self.pass = false;
            if !self.note.is_empty() {
                self.note.push_str("; ");
            }
            self.note.push_str("failed: ");
            self.note.push_str(what);
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }

    /// One line: id, verdict, name and the metrics.
    pub fn line(&self) -> String {
        let ms: Vec<String> = self.metrics.iter().map(|m| format!("{}={:.4e}", m.name, m.value)).collect();
        let mut s = format!(
            "[{}] criterion {:>2} {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            ms.join(" ")
        );
        if !self.note.is_empty() {
            s.push_str(" (");
            s.push_str(&self.note);
            s.push(')');
        }
        s
    }
}

fn grid(r: f64, n: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(3, r, n).expect("fixed grid parameters are valid"))
}

/// Desk-scale grid shared by the cheap criteria.
fn desk_grid() -> Arc<RadialGrid> {
    grid(30.0, 4096)
}

/// Random radial profile: a sum of three Gaussian rings, zero at `r_max`.
fn random_profile(rng: &mut ChaCha8Rng, g: &RadialGrid, signed: bool) -> Vec<f64> {
    let lo = if signed { -1.0 } else { 0.2 };
    let terms: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(lo..2.0), rng.gen_range(0.0..8.0), rng.gen_range(0.3..3.0)))
        .collect();
    let mut u = g.sample(|r| terms.iter().map(|(a, c, s)| a * (-((r - c) / s).powi(2)).exp()).sum());
    *u.last_mut().unwrap() = 0.0;
    u
}

/// Directional derivatives of the energy against the Euler–Lagrange map.
pub fn c1_discrete_gradient(seed: u64) -> Result<Criterion, SuiteError> {
    let mut c = Criterion::new(1, "discrete-gradient exactness");
    let g = desk_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x01);
    let tr = truncate(&Family::born_infeld(), TruncationParams::for_dim(0.25, 4.0, 3).map_err(fail(1))?).map_err(fail(1))?;
    let families = [Family::two_q(2.5).map_err(fail(1))?, Family::two_q(3.0).map_err(fail(1))?, tr];
    let mut worst = 0.0f64;
    for k in 0..20 {
        let fam = families[k % families.len()].clone();
        let p = rng.gen_range(2.5..5.0);
        let spec = ProblemSpec::new(fam, p, 1.0, 3).map_err(fail(1))?;
        let u = random_profile(&mut rng, &g, true);
        let v = random_profile(&mut rng, &g, true);
        let scale = (lp_norm_p(&g, &u, 2.0) / lp_norm_p(&g, &v, 2.0)).sqrt();
        let h = 1e-6 * scale;
        let el = euler_lagrange(&spec, &g, &u).map_err(fail(1))?;
        let lin: f64 = el.iter().zip(&v).zip(g.weights()).map(|((e, x), w)| e * x * w).sum();
        let shift = |s: f64| -> Vec<f64> { u.iter().zip(&v).map(|(a, b)| a + s * b).collect() };
        let fd = (energy(&spec, &g, &shift(h)).map_err(fail(1))? - energy(&spec, &g, &shift(-h)).map_err(fail(1))?) / (2.0 * h);
        worst = worst.max((fd - lin).abs() / lin.abs());
    }
    c.metric("pairs", 20.0);
    c.metric("max_rel_err", worst);
    c.gate(worst < 1e-5, "relative error below 1e-5");
    Ok(c)
}

/// `‖∇W_p‖₂² = ‖W_p‖₂² = (2/p)‖W_p‖_p^p` for `p ∈ {3, 4, 10/3}`.
pub fn c2_kwong_identities() -> Result<Criterion, SuiteError> {
    let mut c = Criterion::new(2, "Kwong identities");
    let g = desk_grid();
    for (label, p) in [("3", 3.0), ("4", 4.0), ("10/3", 10.0 / 3.0)] {
        let k = gn_constant(3, p, &g).map_err(fail(2))?;
        let [grad, mass, lp] = k.kwong_identity.expect("filled by gn_constant");
        let e1 = (grad / mass - 1.0).abs();
        let e2 = (lp / mass - 1.0).abs();
        c.metric(format!("p={label}:grad_vs_mass"), e1);
        c.metric(format!("p={label}:lp_vs_mass"), e2);
        c.metric(format!("p={label}:W_mass"), k.w_mass.unwrap_or(f64::NAN));
        c.gate(e1 < 5e-3 && e2 < 5e-3, &format!("identities at p={label} within 0.5%"));
    }
    Ok(c)
}

/// GN inequality on random profiles and equality at `W_p`.
pub fn c3_gn_certification(seed: u64) -> Result<Criterion, SuiteError> {
    let mut c = Criterion::new(3, "GN certification");
    let g = desk_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x03);
    let ps = [3.0, 10.0 / 3.0, 4.0];
    let consts: Vec<f64> = ps
        .iter()
        .map(|&p| gn_constant(3, p, &g).map(|k| k.c_np.expect("filled by gn_constant")))
        .collect::<Result<_, _>>()
        .map_err(fail(3))?;
    let mut min_margin = f64::INFINITY;
    for k in 0..100 {
        let i = k % ps.len();
        let u = random_profile(&mut rng, &g, true);
        min_margin = min_margin.min(consts[i] - gn_quotient(&g, &u, ps[i]));
    }
    let mut worst_eq = 0.0f64;
    for (p, cn) in ps.iter().zip(&consts) {
        let w = solve_kwong(3, *p, &g).map_err(fail(3))?;
        worst_eq = worst_eq.max((gn_quotient(&g, w.values(), *p) / cn - 1.0).abs());
    }
    c.metric("profiles", 100.0);
    c.metric("min_margin", min_margin);
    c.metric("equality_rel_err", worst_eq);
    c.gate(min_margin >= -1e-10, "margin at least -1e-10");
    c.gate(worst_eq < 5e-3, "equality at W_p within 0.5%");
    Ok(c)
}

/// Masses of the subcritical battery.
pub const SUBCRITICAL_RHOS: [f64; 3] = [0.5, 1.0, 2.0];

/// Ground states for two initial widths on a domain wide enough for the
/// small-mass profiles, whose decay length `λ^{−1/2}` reaches several hundred.
pub fn subcritical_curves() -> Result<(MassCurve, MassCurve), SuiteError> {
    let g = grid(6000.0, 8192);
    let spec = ProblemSpec::new(Family::two_q(3.0).map_err(fail(4))?, 3.0, 1.0, 3).map_err(fail(4))?;
    let run = |width: f64| {
        let opts = FlowOptions {
            init: Init::Gaussian { width },
            max_iter: 20_000,
            ..Default::default()
        };
        mass_curve(&spec, &g, &SUBCRITICAL_RHOS, &opts).map_err(fail(4))
    };
    Ok((run(50.0)?, run(200.0)?))
}

pub fn c4_subcritical(a: &MassCurve, b: &MassCurve) -> Criterion {
    let mut c = Criterion::new(4, "subcritical ground states");
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let tag = format!("rho={}", ra.rho);
        let agree = (ra.m - rb.m).abs() / ra.m.abs();
        c.metric(format!("{tag}:m"), ra.m);
        c.metric(format!("{tag}:lambda"), ra.lambda);
        c.metric(format!("{tag}:grad_res"), ra.grad_res.max(rb.grad_res));
        c.metric(format!("{tag}:multiplier_defect"), ra.multiplier_defect.max(rb.multiplier_defect));
        c.metric(format!("{tag}:init_agreement"), agree);
        c.gate(ra.converged && rb.converged, &format!("{tag} converged"));
        c.gate(ra.grad_res < 1e-6 && rb.grad_res < 1e-6, &format!("{tag} grad_res below 1e-6"));
        c.gate(ra.m < -1e-8 && rb.m < -1e-8, &format!("{tag} m below -1e-8"));
        c.gate(
            ra.multiplier_defect.max(rb.multiplier_defect) < 1e-6 * ra.rho,
            &format!("{tag} multiplier defect below 1e-6 rho"),
        );
        c.gate(agree < 1e-4, &format!("{tag} initializations agree to 1e-4"));
    }
    c
}

pub fn c5_subadditivity(a: &MassCurve) -> Criterion {
    let mut c = Criterion::new(5, "strict subadditivity");
    let min = a.splits.iter().map(|s| s.margin).fold(f64::INFINITY, f64::min);
    let strict = a.splits.iter().filter(|s| s.margin > 1e-8).count();
    c.metric("splits", a.splits.len() as f64);
    c.metric("strict", strict as f64);
    c.metric("min_margin", min);
    c.gate(a.splits.len() == 9 && strict == 9, "all 9 splits strict with margin above 1e-8");
    c
}

/// Least-squares slope of `ln y` against `ln t`.
fn log_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Dilation exponents of `‖∇u_t‖₂²`, `‖∇u_t‖_q^q` and `‖u_t‖_p^p`.
pub fn c6_scaling() -> Result<Criterion, SuiteError> {
    let mut c = Criterion::new(6, "scaling-law battery");
    let g = desk_grid();
    let n = 3.0;
    let u = g.sample(|r| (-(r / 2.0).powi(2)).exp());
    let ts: Vec<f64> = (0..9).map(|k| 2f64.powf(-1.0 + 0.25 * k as f64)).collect();
    for (q, p) in [(3.0, 3.0), (2.5, 5.0)] {
        let mut g2 = Vec::new();
        let mut gq = Vec::new();
        let mut lp = Vec::new();
        for &t in &ts {
            let v = dilate(&g, &u, t).map_err(fail(6))?;
            g2.push(grad_norm_s(&g, &v, 2.0));
            gq.push(grad_norm_s(&g, &v, q));
            lp.push(lp_norm_p(&g, &v, p));
        }
        let expected = [2.0, q + n * (q - 2.0) / 2.0, n * (p - 2.0) / 2.0];
        let fitted = [log_slope(&ts, &g2), log_slope(&ts, &gq), log_slope(&ts, &lp)];
        for ((label, e), f) in ["grad2", "gradq", "lp"].iter().zip(expected).zip(fitted) {
            let err = (f / e - 1.0).abs();
            c.metric(format!("q={q},p={p}:{label}_exponent"), f);
            c.gate(err < 1e-2, &format!("{label} exponent within 1% of {e}"));
        }
    }
    Ok(c)
}

/// `⟨b(|x|²)x − b(|y|²)y, x − y⟩ ≥ b(|x−y|²/16)|x−y|²` on random pairs.
pub fn c7_monotone(seed: u64) -> Result<Criterion, SuiteError> {
    let mut c = Criterion::new(7, "monotone-operator inequality");
    let tr = truncate(&Family::born_infeld(), TruncationParams::for_dim(0.25, 4.0, 3).map_err(fail(7))?).map_err(fail(7))?;
    let fams = [
        ("q=2.5", Family::two_q(2.5).map_err(fail(7))?),
        ("q=3", Family::two_q(3.0).map_err(fail(7))?),
        ("q=4", Family::two_q(4.0).map_err(fail(7))?),
        ("bi_theta=0.25", tr),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x07);
    let vec3 = |rng: &mut ChaCha8Rng| -> [f64; 3] {
        let scale = 10f64.powf(rng.gen_range(-2.0..1.0));
        [0, 1, 2].map(|_| scale * rng.gen_range(-1.0..1.0))
    };
    for (label, fam) in &fams {
        let mut violations = 0usize;
        let mut min_rel = f64::INFINITY;
        for _ in 0..100_000 {
            let x = vec3(&mut rng);
            let y = vec3(&mut rng);
            let gap = monotone_gap(fam, &x, &y);
            if gap < 0.0 {
                violations += 1;
            }
            let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 > 0.0 {
                min_rel = min_rel.min(gap / d2);
            }
        }
        c.metric(format!("{label}:violations"), violations as f64);
        c.metric(format!("{label}:min_gap_over_d2"), min_rel);
        c.gate(violations == 0, &format!("{label} has no violations"));
    }
    Ok(c)
}

/// Vanishing below `ρ_*` and unbounded energy above `ρ^*`.
pub fn c8_thresholds() -> Result<Criterion, SuiteError> {
    let mut c = Criterion::new(8, "L2-critical thresholds");
    let ref_grid = grid(40.0, 8192);
    let p = 10.0 / 3.0;

    let fam = Family::two_q(3.0).map_err(fail(8))?;
    let th = critical_thresholds(&fam, 3, &ref_grid).map_err(fail(8))?;
    let rho_star = th.rho_star.expect("always filled");
    let rho = 0.9 * rho_star;
    let spec = ProblemSpec::new(fam, p, rho, 3).map_err(fail(8))?;
    let opts = FlowOptions {
        vanishing_q: Some(1e-4),
        max_iter: 20_000,
        ..Default::default()
    };
    let r = solve_normalized(&spec, &grid(3000.0, 8192), &opts).map_err(fail(8))?;
    c.metric("rho_star", rho_star);
    c.metric("vanishing:Q", r.q_functional());
    c.metric("vanishing:m", r.m);
    c.metric("vanishing:iters", r.iters as f64);
    c.gate(r.stop == StopReason::Vanishing && r.q_functional() < 1e-4, "Q driven below 1e-4");
    c.gate(r.m >= -1e-8, "energy at least -1e-8");
    c.gate(r.energy_monotone, "energy nonincreasing along the flow");

    let fam = Family::two_q(1.5).map_err(fail(8))?;
    let th = critical_thresholds(&fam, 3, &ref_grid).map_err(fail(8))?;
    let upper = th.rho_star_upper.expect("c2 is finite for two_q");
    let rho = 1.1 * upper;
    let g = desk_grid();
    let w = solve_kwong(3, p, &g).map_err(fail(8))?;
    let wm = lp_norm_p(&g, w.values(), 2.0).sqrt();
    let u: Vec<f64> = w.values().iter().map(|v| rho / wm * v).collect();
    let spec = ProblemSpec::new(fam, p, rho, 3).map_err(fail(8))?;
    let mut hit = None;
    for k in 0..=80 {
        let sigma = 0.25 * k as f64;
        let e = fiber_energy(&spec, &g, &u, sigma).map_err(fail(8))?;
        if e < -1e6 {
            hit = Some((sigma.exp(), e));
            break;
        }
    }
    c.metric("rho_star_upper", upper);
    c.metric("unbounded:t", hit.map_or(f64::NAN, |h| h.0));
    c.metric("unbounded:energy", hit.map_or(f64::NAN, |h| h.1));
    c.gate(hit.is_some(), "I(u_t) below -1e6 for some t");
    Ok(c)
}

/// Mountain-pass geometry and solution for `q = 5/2`, `p = 5`, `ρ = 1`, and
/// the degenerate `q = 2` run against the rescaled Kwong profile.
pub fn c9_mountain_pass() -> Result<Criterion, SuiteError> {
    let mut c = Criterion::new(9, "supercritical mountain pass");
    let g = desk_grid();
    let spec = ProblemSpec::new(Family::two_q(2.5).map_err(fail(9))?, 5.0, 1.0, 3).map_err(fail(9))?;
    let seed = Init::Gaussian { width: 1.0 }.sample(&g).map_err(fail(9))?;
    let geo = mp_geometry(&spec, &g, &seed).map_err(fail(9))?;
    c.metric("eta", geo.eta);
    c.metric("inf_lower", geo.inf_lower);
    c.metric("I_u0", geo.i_u0);
    c.metric("I_u1", geo.i_u1);
    c.gate(geo.holds(), "geometry inequalities");

    let mut levels = Vec::new();
    for width in [1.0, 2.0] {
        let opts = MpOptions {
            init: Init::Gaussian { width },
            ..Default::default()
        };
        let r = mp_solve(&spec, &g, &opts).map_err(fail(9))?;
        let tag = format!("width={width}");
        c.metric(format!("{tag}:m_upper"), r.m_upper);
        c.metric(format!("{tag}:lambda"), r.lambda);
        c.metric(format!("{tag}:pohozaev_rel"), r.pohozaev.abs() / r.pohozaev_scale);
        c.metric(format!("{tag}:multiplier_defect_rel"), r.multiplier_defect / r.pohozaev_scale);
        c.gate(r.converged, &format!("{tag} converged"));
        c.gate(r.pohozaev.abs() < 1e-4 * r.pohozaev_scale, &format!("{tag} |P| below 1e-4 scale"));
        c.gate(r.lambda > 0.0, &format!("{tag} lambda positive"));
        c.gate(r.multiplier_defect < 1e-6 * r.pohozaev_scale, &format!("{tag} multiplier defect below 1e-6 scale"));
        c.gate(r.level_ordering() && r.m_upper > 0.0 && r.geometry.i_u1 < 0.0, &format!("{tag} level ordering"));
        levels.push(r.m_upper);
    }
    let agree = (levels[0] - levels[1]).abs() / levels[0].abs();
    c.metric("seed_agreement", agree);
    c.gate(agree < 1e-3, "seeds agree to 1e-3");

    let spec = ProblemSpec::new(Family::two_q(2.0).map_err(fail(9))?, 5.0, 1.0, 3).map_err(fail(9))?;
    let r = mp_solve(&spec, &g, &MpOptions::default()).map_err(fail(9))?;
    let k = rescaled_kwong(3, 5.0, 1.0, 2.0, r.u.grid()).map_err(fail(9))?;
    let d: Vec<f64> = r.u.values().iter().zip(k.u.values()).map(|(x, y)| x - y).collect();
    let l2 = lp_norm_p(r.u.grid(), &d, 2.0).sqrt();
    c.metric("q=2:kwong_l2_diff", l2);
    c.metric("q=2:lambda_rel_diff", (r.lambda / k.lambda - 1.0).abs());
    c.gate(r.converged && l2 < 1e-3, "q=2 run matches the rescaled Kwong profile to 1e-3");
    Ok(c)
}

/// Born–Infeld runs on the base grid and on the grid with twice the nodes.
pub fn born_infeld_runs() -> Result<(BIReport, BIReport), SuiteError> {
    let run = |n: usize| {
        solve_born_infeld(3.0, 1.0, &grid(3000.0, n), &Schedule::default(), &FlowOptions::default()).map_err(fail(10))
    };
    Ok((run(8192)?, run(16384)?))
}

pub fn c10_born_infeld(a: &BIReport, b: &BIReport) -> Criterion {
    let mut c = Criterion::new(10, "Born-Infeld promotion");
    let drift = (a.decay_constant - b.decay_constant).abs() / a.decay_constant;
    c.metric("theta_bar", a.theta_final);
    c.metric("grad_linf", a.grad_linf);
    c.metric("lambda", a.solve.lambda);
    c.metric("untruncated_residual_rel", a.untruncated_residual / a.residual_scale);
    c.metric("origin_flux_rel", a.origin_flux_limit.abs() / a.flux_sup);
    c.metric("decay_constant", a.decay_constant);
    c.metric("decay_grid_drift", drift);
    c.gate(a.promoted && a.theta_final >= 2f64.powi(-10), "promoted at some theta >= 2^-10");
    c.gate(a.grad_linf * a.grad_linf <= 1.0 - a.theta_final, "grad_linf^2 <= 1 - theta");
    c.gate(a.untruncated_residual < 1e-5 * a.residual_scale, "untruncated residual below 1e-5 scale");
    c.gate(a.origin_flux_limit.abs() < 1e-4 * a.flux_sup, "origin flux below 1e-4 flux_sup");
    c.gate(a.decay_constant.is_finite() && drift < 0.05, "decay constant grid-stable to 5%");
    c.gate(b.promoted, "promotion on the refined grid");
    c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub criteria: Vec<Criterion>,
    #[serde(skip)]
    pub mass_curve: Option<MassCurve>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    /// `check.json`, `check.csv` and the mass curve of the subcritical battery.
    pub fn artifacts(&self, echo: &[(String, String)]) -> Vec<Artifact> {
        let mut obj = output::echo_object(echo);
        let body = serde_json::to_value(self).expect("report is serializable");
        if let serde_json::Value::Object(m) = body {
            obj.extend(m);
        }
        obj.insert("all_pass".into(), serde_json::Value::Bool(self.all_pass()));
        let mut rows = Vec::new();
        for c in &self.criteria {
            for m in &c.metrics {
                rows.push(vec![
                    Cell::I(c.id.into()),
                    Cell::S(c.name.replace(',', ";")),
                    Cell::B(c.pass),
                    Cell::S(m.name.replace(',', ";")),
                    Cell::F(m.value),
                ]);
            }
        }
        let mut out = vec![
            Artifact::new("check.json", output::json(&obj)),
            Artifact::new("check.csv", output::csv(echo, &["id", "criterion", "pass", "metric", "value"], &rows)),
        ];
        if let Some(mc) = &self.mass_curve {
            out.push(Artifact::new("mass_curve.csv", crate::commands::mass_curve_csv(echo, mc)));
        }
        out
    }
}

/// Runs criteria 1–10, reporting each outcome to `progress` as it completes.
pub fn run_suite(seed: u64, mut progress: impl FnMut(&Criterion)) -> Result<SuiteReport, SuiteError> {
    let mut criteria = Vec::new();
    let mut push = |c: Criterion, criteria: &mut Vec<Criterion>| {
        progress(&c);
        criteria.push(c);
    };
    push(c1_discrete_gradient(seed)?, &mut criteria);
    push(c2_kwong_identities()?, &mut criteria);
    push(c3_gn_certification(seed)?, &mut criteria);
    let (a, b) = subcritical_curves()?;
    push(c4_subcritical(&a, &b), &mut criteria);
    push(c5_subadditivity(&a), &mut criteria);
    push(c6_scaling()?, &mut criteria);
    push(c7_monotone(seed)?, &mut criteria);
    push(c8_thresholds()?, &mut criteria);
    push(c9_mountain_pass()?, &mut criteria);
    let (x, y) = born_infeld_runs()?;
    push(c10_born_infeld(&x, &y), &mut criteria);
    Ok(SuiteReport {
        seed,
        criteria,
        mass_curve: Some(a),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_fit_recovers_powers() {
        let ts = [0.5, 1.0, 2.0, 4.0];
        let ys: Vec<f64> = ts.iter().map(|t: &f64| 3.0 * t.powf(2.5)).collect();
        assert!((log_slope(&ts, &ys) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn gates_accumulate() {
        let mut c = Criterion::new(0, "x");
        c.gate(true, "a");
        c.gate(false, "b");
        c.gate(false, "c");
        assert!(!c.pass);
        assert_eq!(c.note, "failed: b; failed: c");
        assert!(c.line().starts_with("[FAIL] criterion  0 x"));
    }

    #[test]
    fn cheap_criteria_are_seed_deterministic() {
        let a = c7_monotone(5).unwrap();
        let b = c7_monotone(5).unwrap();
        assert_eq!(a, b);
        assert!(a.pass);
    }
}
