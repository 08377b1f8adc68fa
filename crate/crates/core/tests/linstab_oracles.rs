use kuramoto_core::freqdist::FrequencyMarginal;
use kuramoto_core::linstab::*;
use kuramoto_core::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn tri() -> FrequencyMarginal {
    FrequencyMarginal::tri_cauchy(0.1, 0.55, 0.17).unwrap()
}

fn bi() -> FrequencyMarginal {
    FrequencyMarginal::bi_cauchy(0.1, 0.55).unwrap()
}

#[test]
fn cauchy_bisection_agrees_with_formula() {
    let g = FrequencyMarginal::cauchy(1.0, 0.0).unwrap();
    let kc = critical_coupling_bisection(&g).unwrap();
    assert!((kc - 2.0).abs() < 1e-6, "{kc}");
}

#[test]
fn tri_cauchy_first_destabilisation() {
    let kc = critical_coupling(&tri()).unwrap();
    assert!((kc - 1.61).abs() < 0.05, "{kc}");
    // The onset is a complex pair of roots crossing the axis.
    let r = check_homog_stability(&tri(), kc + 0.02).unwrap();
    assert_eq!(r.winding_number, 2);
    assert_eq!(r.unstable_roots.len(), 2);
    assert!(r.unstable_roots.iter().all(|z| z.im.abs() > 0.3));
    for z in &r.unstable_roots {
        assert!(dispersion(&tri(), kc + 0.02, *z).unwrap().norm() < 1e-8);
    }
}

/// D(z) = 0 for the bi-Cauchy mixture reduces to w² − (K/2)w + Ω² = 0 with
/// w = z + Δ, so a complex pair crosses the axis at K = 4Δ whenever Ω > Δ,
/// well before the real crossing at 2(Δ² + Ω²)/Δ.
#[test]
fn bi_cauchy_roots_match_quadratic() {
    let (d, o) = (0.1f64, 0.55f64);
    let g = bi();
    let kc = critical_coupling(&g).unwrap();
    assert!((kc - 4.0 * d).abs() < 1e-6, "{kc}");
    assert!(check_homog_stability(&g, 0.39).unwrap().stable);
    for k in [0.5, 1.0, 2.0] {
        let r = check_homog_stability(&g, k).unwrap();
        assert_eq!(r.unstable_roots.len(), 2);
        let disc = (o * o - k * k / 16.0).sqrt();
        for z in &r.unstable_roots {
            assert!((z.re - (k / 4.0 - d)).abs() < 1e-9);
            assert!((z.im.abs() - disc).abs() < 1e-9);
        }
    }
    let real_crossing = 2.0 * (d * d + o * o) / d;
    let r = check_homog_stability(&g, real_crossing + 0.1).unwrap();
    assert_eq!(r.winding_number, 1);
}

/// With Ω ≤ Δ the bimodal mixture keeps f_hom stable all the way to 2/(πg(0)).
#[test]
fn weakly_bimodal_stable_up_to_kc() {
    let (d, o) = (0.4f64, 0.35f64);
    let g = FrequencyMarginal::bi_cauchy(d, o).unwrap();
    let expect = 2.0 * (d * d + o * o) / d;
    let kc = critical_coupling(&g).unwrap();
    assert!((kc - expect).abs() < 1e-6, "{kc} vs {expect}");
    for k in [0.5, 1.0, expect - 1e-3] {
        assert!(check_homog_stability(&g, k).unwrap().stable, "K = {k}");
    }
    assert!(!check_homog_stability(&g, expect + 1e-3).unwrap().stable);
}

#[test]
fn bi_cauchy_penrose_points() {
    let crit = penrose_critical_frequencies(&bi()).unwrap();
    assert_eq!(crit.len(), 3, "{crit:?}");
    assert!(crit[1].abs() < 1e-9);
    assert!((crit[0] + crit[2]).abs() < 1e-7);
    assert!((crit[2] - 0.55).abs() < 0.05);
}

#[test]
fn tri_cauchy_penrose_is_not_necessary() {
    let g = tri();
    // f_hom has restabilised here, but K exceeds 2/(πg(Ω)) at the Ω ≈ ±0.477 crossing.
    let k = 2.2;
    assert!(check_homog_stability(&g, k).unwrap().stable);
    assert!(!penrose_criterion(&g, k).unwrap());
}

#[test]
fn f0_limit_matches_shifted_laplace() {
    let k = 1.7;
    // Symmetric marginals: F_{0+0}(Ω) = (K/2) L(−iΩ + 0).
    for g in [bi(), tri(), FrequencyMarginal::cauchy(1.0, 0.0).unwrap()] {
        for om in [-0.8, -0.3, 0.0, 0.2, 0.55, 1.3] {
            let f0 = f0_limit(&g, k, om).unwrap();
            let l = g.laplace(Complex64::new(1e-6, -om)).unwrap() * (0.5 * k);
            assert!((f0 - l).norm() < 1e-5 * (1.0 + l.norm()) + 2e-5, "{om}: {f0} vs {l}");
        }
    }
    // General g: F_{0+0}(Ω) = (K/2) conj(L(iΩ + 0)).
    let g = FrequencyMarginal::cauchy_mixture(vec![
        kuramoto_core::freqdist::CauchyComponent { weight: 0.7, center: 0.4, width: 0.5 },
        kuramoto_core::freqdist::CauchyComponent { weight: 0.3, center: -1.0, width: 0.2 },
    ])
    .unwrap();
    for om in [-1.0, -0.2, 0.5] {
        let f0 = f0_limit(&g, k, om).unwrap();
        let l = g.laplace(Complex64::new(1e-6, om)).unwrap().conj() * (0.5 * k);
        assert!((f0 - l).norm() < 2e-5, "{om}: {f0} vs {l}");
    }
}

#[test]
fn penrose_integral_is_imaginary_part_on_axis() {
    let g = tri();
    for om in [-0.6, 0.1, 0.45] {
        let p = penrose_integral(&g, om).unwrap();
        let l = g.laplace(Complex64::new(0.0, -om)).unwrap();
        assert!((p - l.im).abs() < 1e-9);
        assert!((PI * g.density(om).unwrap() - l.re).abs() < 1e-9);
    }
}

#[test]
fn symmetric_f0_is_real_at_zero() {
    let g = bi();
    let v = f0_limit(&g, 2.0, 0.0).unwrap();
    assert!(v.im.abs() < 1e-12);
    assert!((v.re - PI * g.density(0.0).unwrap()).abs() < 1e-12);
}

#[test]
fn single_cauchy_optimality_scan() {
    let g = FrequencyMarginal::cauchy(1.0, 0.0).unwrap();
    for i in 0..50 {
        let k = 0.5 + 3.0 * i as f64 / 49.0;
        if (k - 2.0).abs() <= 1e-6 {
            continue;
        }
        let r = check_homog_stability(&g, k).unwrap();
        assert_eq!(r.stable, k < 2.0, "K = {k}");
        for z in &r.unstable_roots {
            assert!(dispersion(&g, k, *z).unwrap().norm() < 1e-8);
        }
    }
}

#[test]
fn gaussian_matches_formula() {
    let g = FrequencyMarginal::gaussian(1.0).unwrap();
    let kc = critical_coupling(&g).unwrap();
    let expect = 2.0 / (PI / (2.0 * PI).sqrt());
    assert!((kc - expect).abs() < 1e-12);
    assert!(check_homog_stability(&g, expect - 0.05).unwrap().stable);
    let r = check_homog_stability(&g, expect + 0.05).unwrap();
    assert!(!r.stable && r.unstable_roots.len() == 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn winding_is_robust_to_resolution(k in 0.3f64..5.0, which in 0usize..3) {
        let g = [FrequencyMarginal::cauchy(1.0, 0.0).unwrap(), bi(), tri()][which].clone();
        let base = check_homog_stability(&g, k);
        let fine = check_homog_stability_with(&g, k, ContourOptions { extent_factor: 2.0, samples: 4096 });
        match (base, fine) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.winding_number, b.winding_number);
                prop_assert_eq!(a.stable, a.winding_number == 0 && a.unstable_roots.is_empty());
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }
}
