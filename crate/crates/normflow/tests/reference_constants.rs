use std::sync::Arc;

use normflow::reference::{critical_thresholds, gn_constant, gn_quotient, kwong_profile, solve_kwong};
use normflow::{Family, RadialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(3, 30.0, 4096).unwrap())
}

#[test]
fn kwong_identities_hold() {
    let g = grid();
    for p in [3.0, 4.0, 10.0 / 3.0] {
        let c = gn_constant(3, p, &g).unwrap();
        let err = c.kwong_identity_error().unwrap();
        assert!(err < 1e-4, "p={p}: {:?}", c.kwong_identity);
    }
}

#[test]
fn cubic_profile_mass_is_frozen() {
    // ‖W_3‖₂² on a finer reference grid
    let g = Arc::new(RadialGrid::new(3, 40.0, 8192).unwrap());
    let c = gn_constant(3, 3.0, &g).unwrap();
    let m2 = c.w_mass.unwrap().powi(2);
    assert!((m2 - 73.68).abs() < 0.01, "{m2}");
    assert!((kwong_profile(3, 3.0, &g).unwrap().alpha - 3.1438).abs() < 1e-3);
}

#[test]
fn gn_inequality_on_random_profiles() {
    let g = grid();
    let p = 3.0;
    let c = gn_constant(3, p, &g).unwrap().c_np.unwrap();
    let w = solve_kwong(3, p, &g).unwrap();
    assert!((gn_quotient(&g, w.values(), p) / c - 1.0).abs() < 5e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let terms: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.gen_range(0.1..2.0), rng.gen_range(0.0..4.0), rng.gen_range(0.4..2.5)))
            .collect();
        let mut u = g.sample(|r| terms.iter().map(|(a, c, s)| a * (-((r - c) / s).powi(2)).exp()).sum());
        *u.last_mut().unwrap() = 0.0;
        assert!(c - gn_quotient(&g, &u, p) >= -1e-10);
    }
}

#[test]
fn thresholds_are_ordered() {
    let g = grid();
    let t = critical_thresholds(&Family::two_q(3.0).unwrap(), 3, &g).unwrap();
    let (lo, hi) = (t.rho_star.unwrap(), t.rho_star_upper.unwrap());
    assert!(lo < hi);
    assert!((lo - 5.892).abs() < 5e-3 && (hi - 7.986).abs() < 5e-3, "{lo} {hi}");
    assert!(t.rho_hat_star.is_none());
}
