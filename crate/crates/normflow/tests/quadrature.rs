use std::f64::consts::PI;

use normflow::energy::{dilate, normalize};
use normflow::radial::{grad_norm_s, gradient_mid, lp_norm_p, sphere_area};
use normflow::RadialGrid;
use proptest::prelude::*;

fn gaussian_mass2(a: f64, dim: usize) -> f64 {
    // ∫ e^{−2a r²} dx over ℝᴺ
    (PI / (2.0 * a)).powf(dim as f64 / 2.0)
}

#[test]
fn sphere_areas() {
    assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
}

#[test]
fn gaussian_moments_in_three_and_four_dimensions() {
    for dim in [3, 4] {
        let g = RadialGrid::new(dim, 12.0, 3000).unwrap();
        let u = g.sample(|r| (-r * r).exp());
        let m2 = lp_norm_p(&g, &u, 2.0);
        assert!((m2 / gaussian_mass2(1.0, dim) - 1.0).abs() < 1e-9, "N={dim}: {m2}");
        // ∫|∇e^{−r²}|² = N (π/2)^{N/2}
        let g2 = grad_norm_s(&g, &u, 2.0);
        let exact = dim as f64 * (PI / 2.0).powf(dim as f64 / 2.0);
        assert!((g2 / exact - 1.0).abs() < 1e-4, "N={dim}: {g2} vs {exact}");
    }
}

#[test]
fn ball_volume_is_exact() {
    let g = RadialGrid::new(3, 2.0, 101).unwrap();
    let ones = vec![1.0; g.len()];
    let v = g.integrate(&ones).unwrap();
    assert!((v - 4.0 / 3.0 * PI * 8.0).abs() < 1e-10 * v);
}

#[test]
fn slopes_are_centered_differences() {
    let g = RadialGrid::new(3, 1.0, 21).unwrap();
    let u = g.sample(|r| r * r);
    let d = gradient_mid(&g, &u);
    for (m, s) in g.midpoints().iter().zip(&d) {
        assert!((s - 2.0 * m).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalization_hits_the_mass(width in 0.3f64..4.0, amp in 1e-3f64..1e3, rho in 1e-2f64..1e2) {
        let g = RadialGrid::new(3, 30.0, 1024).unwrap();
        let mut u: Vec<f64> = g.sample(|r| amp * (-(r / width).powi(2)).exp());
        normalize(&g, &mut u, rho).unwrap();
        let m = lp_norm_p(&g, &u, 2.0).sqrt();
        prop_assert!((m / rho - 1.0).abs() < 1e-13);
    }

    #[test]
    fn dilation_preserves_mass_and_scales_gradient(t in 0.6f64..1.6, width in 0.8f64..1.5) {
        let g = RadialGrid::new(3, 20.0, 4001).unwrap();
        let u = g.sample(|r| (-(r / width).powi(2)).exp());
        let v = dilate(&g, &u, t).unwrap();
        let (m0, m1) = (lp_norm_p(&g, &u, 2.0), lp_norm_p(&g, &v, 2.0));
        prop_assert!((m1 / m0 - 1.0).abs() < 1e-4, "{} {}", m0, m1);
        let (d0, d1) = (grad_norm_s(&g, &u, 2.0), grad_norm_s(&g, &v, 2.0));
        prop_assert!((d1 / (t * t * d0) - 1.0).abs() < 1e-3);
    }
}
