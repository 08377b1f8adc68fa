use kuramoto_core::freqdist::FrequencyMarginal;
use kuramoto_core::pls::*;
use kuramoto_core::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn cauchy() -> FrequencyMarginal {
    FrequencyMarginal::cauchy(1.0, 0.0).unwrap()
}

fn classify(g: &FrequencyMarginal, k: f64) -> Vec<PlsBranchPoint> {
    solve_pls(g, k, &[])
        .unwrap()
        .iter()
        .map(|p| pls_stability(g, k, p).unwrap())
        .collect()
}

#[test]
fn lorentzian_pls_value_and_stability() {
    let g = cauchy();
    let v = classify(&g, 4.0);
    assert_eq!(v.len(), 1, "{v:?}");
    assert!((v[0].r - 0.5f64.sqrt()).abs() < 1e-6);
    assert!(v[0].omega.abs() < 1e-12);
    assert!(v[0].residual < 1e-8);
    assert_eq!(v[0].stability, PlsStability::Stable);
    // Independent check of the root through the quadrature route.
    let q = self_consistency_quadrature(&g, 4.0, v[0].r, 0.0).unwrap();
    assert!((q - 1.0).norm() < 1e-8);
}

#[test]
fn no_pls_below_threshold_for_unimodal() {
    assert!(solve_pls(&cauchy(), 1.5, &[]).unwrap().is_empty());
}

#[test]
fn tri_cauchy_rotating_pair() {
    let g = FrequencyMarginal::tri_cauchy(0.1, 0.55, 0.17).unwrap();
    let v = solve_pls(&g, 1.8, &[]).unwrap();
    let rot: Vec<_> = v.iter().filter(|p| p.omega.abs() > 1e-3).collect();
    assert!(rot.len() >= 2, "{v:?}");
    for p in &rot {
        assert!(rot.iter().any(|q| (q.omega + p.omega).abs() < 1e-6 && (q.r - p.r).abs() < 1e-6));
    }
}

#[test]
fn j0_matches_brute_force_trapezoid() {
    // Cauchy Δ=1, Kr = 1, z = 1. With ω = tan θ, g(ω)dω = dθ/π.
    let g = cauchy();
    let z = Complex64::new(1.0, 0.0);
    let n = 1_000_000;
    let h = PI / n as f64;
    let mut s = Complex64::new(0.0, 0.0);
    for i in 1..n {
        let w = (-PI / 2.0 + i as f64 * h).tan();
        let b = beta(w);
        s += 1.0 / (z + Complex64::new(0.0, w) + b);
    }
    s *= h / PI;
    let j = j_integral(&g, 1.0, 0, z, 1.0).unwrap();
    assert!((j - s).norm() < 1e-7, "{j} vs {s}");
    let jq = j_integral_quadrature(&g, 1.0, 0, z, 1.0, 0.0).unwrap();
    assert!((jq - s).norm() < 1e-7, "{jq} vs {s}");
}

#[test]
fn j0_large_coupling_asymptote() {
    let g = cauchy();
    let z = Complex64::new(1.0, 0.0);
    let j = j_integral_quadrature(&g, 1000.0, 0, z, 1.0, 0.0).unwrap();
    assert!((j - 1.0 / (z + 1000.0)).norm() < 1e-4);
}

#[test]
fn closed_form_matches_quadrature_off_axis() {
    let g = FrequencyMarginal::tri_cauchy(0.1, 0.55, 0.17).unwrap();
    for (k, r, om) in [(1.8, 0.2, 0.0), (2.3, 0.5, 0.1), (1.7, 0.05, -0.43)] {
        for zz in [Complex64::new(0.3, 0.0), Complex64::new(0.05, 0.7), Complex64::new(1.0, -2.0)] {
            for kk in [0, 2] {
                let a = j_integral_at(&g, k, kk, zz, r, om).unwrap();
                let b = j_integral_quadrature(&g, k, kk, zz, r, om).unwrap();
                assert!((a - b).norm() < 1e-8, "{k} {r} {om} {zz} {kk}: {a} vs {b}");
            }
        }
        let a = self_consistency(&g, k, r, om).unwrap();
        let b = self_consistency_quadrature(&g, k, r, om).unwrap();
        assert!((a - b).norm() < 1e-9);
    }
}

#[test]
fn boundary_values_by_continuity() {
    let g = FrequencyMarginal::bi_cauchy(0.3, 0.4).unwrap();
    for y in [0.0, 0.2, -0.9] {
        let z = Complex64::new(0.0, y);
        let a = j_integral_at(&g, 2.0, 0, z, 0.4, 0.0).unwrap();
        let b = j_integral_quadrature(&g, 2.0, 0, z, 0.4, 0.0).unwrap();
        assert!((a - b).norm() < 1e-5, "{y}: {a} vs {b}");
    }
}

#[test]
fn symmetric_determinant_real_on_real_axis() {
    let g = FrequencyMarginal::bi_cauchy(0.1, 0.55).unwrap();
    for x in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let d = pls_dispersion(&g, 3.0, Complex64::new(x, 0.0), 0.6, 0.0).unwrap();
        assert!(d.im.abs() < 1e-10, "{x}: {d}");
    }
}

#[test]
fn f1_real_part_below_one_and_decay() {
    let g = FrequencyMarginal::tri_cauchy(0.1, 0.55, 0.17).unwrap();
    for i in -40..=40 {
        let om = i as f64 * 0.1;
        assert!(self_consistency(&g, 2.0, 1.0, om).unwrap().re < 1.0);
    }
    for r in [0.01, 0.1, 0.5, 1.0] {
        assert!(self_consistency(&g, 2.0, r, 1e4).unwrap().norm() < 1e-3);
        assert!(self_consistency(&g, 2.0, r, -1e4).unwrap().norm() < 1e-3);
    }
}

#[test]
fn bi_cauchy_branches_at_k5() {
    let g = FrequencyMarginal::bi_cauchy(0.1, 0.55).unwrap();
    let v = classify(&g, 5.0);
    let st: Vec<_> = v.iter().filter(|p| p.omega.abs() < 1e-9).collect();
    assert_eq!(st.len(), 2, "{v:?}");
    assert!((st[0].r - 0.0587).abs() < 1e-3);
    assert_eq!(st[0].stability, PlsStability::Unstable);
    let lr = st[0].leading_root.unwrap();
    assert!(lr.re > 0.0 && lr.im.abs() < 1e-8);
    assert!((st[1].r - 0.9733).abs() < 1e-3);
    assert_eq!(st[1].stability, PlsStability::Stable);
}

#[test]
fn small_r_limit_near_kc() {
    let v = solve_pls(&cauchy(), 2.0 + 1e-3, &[]).unwrap();
    assert_eq!(v.len(), 1);
    assert!(v[0].r < 0.1);
}

#[test]
fn rotation_mode_for_every_solution() {
    for (g, k) in [
        (FrequencyMarginal::tri_cauchy(0.1, 0.55, 0.17).unwrap(), 1.8),
        (FrequencyMarginal::tri_cauchy(0.1, 0.55, 0.17).unwrap(), 2.23),
        (FrequencyMarginal::bi_cauchy(0.1, 0.55).unwrap(), 3.0),
        (cauchy(), 3.0),
    ] {
        for p in solve_pls(&g, k, &[]).unwrap() {
            let d0 = pls_dispersion(&g, k, Complex64::new(0.0, 0.0), p.r, p.omega).unwrap();
            assert!(d0.norm() < 1e-6, "K={k} {p:?}: {d0}");
        }
    }
}

#[test]
fn gaussian_pls_through_quadrature() {
    let g = FrequencyMarginal::gaussian(1.0).unwrap();
    let kc = 2.0 / (PI / (2.0 * PI).sqrt());
    let v = solve_pls_from(&g, kc + 0.5, &[]).unwrap();
    assert_eq!(v.len(), 1);
    let p = pls_stability(&g, kc + 0.5, &v[0]).unwrap();
    assert_eq!(p.stability, PlsStability::Stable);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lorentzian_branch_is_stable_and_exact(k in 2.05f64..8.0) {
        let g = cauchy();
        let v = classify(&g, k);
        prop_assert_eq!(v.len(), 1);
        prop_assert!((v[0].r - (1.0 - 2.0 / k).sqrt()).abs() < 1e-8);
        prop_assert_eq!(v[0].stability, PlsStability::Stable);
    }

    #[test]
    fn beta_modulus_bounded(x in -1e3f64..1e3) {
        prop_assert!(beta(x).norm() <= 1.0 + 1e-15);
        prop_assert!(beta(x).re <= 1.0);
    }
}
