use kuramoto_core::freqdist::{FrequencyMarginal, WeightSpec};
use kuramoto_core::spectral::{self, init_state, GridSpec, Perturbation, Profile, RunOptions, SpectralState};
use kuramoto_core::Complex64;
use proptest::prelude::*;

fn cauchy() -> FrequencyMarginal {
    FrequencyMarginal::cauchy(1.0, 0.0).unwrap()
}

fn fit_rate(rec: &spectral::TrajectoryRecord, t0: f64, t1: f64) -> f64 {
    let pts: Vec<(f64, f64)> = rec
        .times
        .iter()
        .zip(&rec.r_values)
        .filter(|(t, _)| **t >= t0 && **t <= t1)
        .map(|(t, r)| (*t, r.norm().ln()))
        .collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    -sxy / sxx
}

#[test]
fn unperturbed_state_is_stationary() {
    let mut s = SpectralState::homogeneous(&cauchy(), 3.0, GridSpec { nodes: 256, ..GridSpec::default() }).unwrap();
    let dt = s.dtau() / 2.0;
    let rec = spectral::run(&mut s, &RunOptions::new(2.0, dt, 10)).unwrap();
    assert!(rec.r_values.iter().all(|r| *r == Complex64::new(0.0, 0.0)));
    let g: Vec<Complex64> = (0..256).map(|k| cauchy().fourier(s.grid().tau(k))).collect();
    assert_eq!(s.mode(0), &g[..]);
}

#[test]
fn zero_coupling_is_free_transport() {
    let spec = GridSpec { nodes: 2048, ..GridSpec::default() };
    let pert = [Perturbation::bump(1, 0.1), Perturbation::bump(3, 0.05)];
    let mut s = init_state(&cauchy(), 0.0, spec, &pert).unwrap();
    let dt = s.dtau() / 2.0;
    spectral::run(&mut s, &RunOptions::new(1.0, dt, 1000)).unwrap();
    for (l, eps) in [(1usize, 0.1), (3, 0.05)] {
        for k in 0..1500 {
            let tau = spec.tau(k) + l as f64;
            let exact = eps * (-tau).exp() * (-tau).exp();
            assert!((s.mode(l)[k].re - exact).abs() < 1e-6, "l={l} k={k}");
        }
    }
}

#[test]
fn landau_damping_rate_matches_dispersion_root() {
    let mut s = init_state(&cauchy(), 1.0, GridSpec::default(), &[Perturbation::bump(1, 1e-4)]).unwrap();
    let dt = s.dtau() / 2.0;
    let rec = spectral::run(&mut s, &RunOptions::new(12.0, dt, 20)).unwrap();
    let rate = fit_rate(&rec, 2.0, 10.0);
    assert!((rate - 0.5).abs() < 0.025, "rate {rate}");
}

#[test]
fn supercritical_run_saturates_at_pls_value() {
    let spec = GridSpec::default();
    let mut s = init_state(&cauchy(), 4.0, spec, &[Perturbation::bump(1, 1e-3)]).unwrap();
    let dt = s.dtau() / 2.0;
    let rec = spectral::run(&mut s, &RunOptions::new(40.0, dt, 100)).unwrap();
    let r_end = rec.r_values.last().unwrap().norm();
    assert!((r_end - 0.5f64.sqrt()).abs() < 0.01, "r(T) = {r_end}");
    assert!(rec.r_values.iter().all(|r| r.norm() <= 1.0 + 1e-6));
}

#[test]
fn halving_dt_barely_moves_the_result() {
    let spec = GridSpec { nodes: 1024, modes: 16, ..GridSpec::default() };
    let end = |dt_div: f64| {
        let mut s = init_state(&cauchy(), 3.0, spec, &[Perturbation::bump(1, 1e-2)]).unwrap();
        let dt = s.dtau() / dt_div;
        spectral::run(&mut s, &RunOptions::new(8.0, dt, 1000)).unwrap().r_values.last().unwrap().norm()
    };
    let (a, b) = (end(2.0), end(4.0));
    assert!((a - b).abs() < 1e-4, "{a} vs {b}");
}

#[test]
fn bump_norm_matches_closed_form() {
    // u_1 = ε e^{−2τ}: ∫(1+τ)^4 · 5ε² e^{−4τ} dτ = 5ε² · 0.8046875.
    let eps = 0.01;
    let spec = GridSpec { nodes: 1024, ..GridSpec::default() };
    let s = init_state(&cauchy(), 1.0, spec, &[Perturbation::bump(1, eps)]).unwrap();
    let got = spectral::weighted_state_norm(&s, WeightSpec::Polynomial(2.0), None);
    let want = (5.0 * eps * eps * 0.8046875f64).sqrt();
    assert!((got / want - 1.0).abs() < 0.02, "{got} vs {want}");
    let hom = SpectralState::homogeneous(&cauchy(), 1.0, spec).unwrap();
    assert_eq!(spectral::weighted_state_norm(&hom, WeightSpec::Polynomial(2.0), None), 0.0);
}

#[test]
fn norm_decays_along_stable_run() {
    let spec = GridSpec { nodes: 1024, modes: 16, ..GridSpec::default() };
    let mut s = init_state(&cauchy(), 1.0, spec, &[Perturbation::bump(1, 1e-2), Perturbation::bump(2, 1e-2)]).unwrap();
    let dt = s.dtau() / 2.0;
    let mut opts = RunOptions::new(20.0, dt, 50);
    opts.norm = Some(WeightSpec::Exponential(0.5));
    let rec = spectral::run(&mut s, &opts).unwrap();
    let norms = rec.norms.unwrap();
    for i in 1..norms.len() {
        if rec.times[i] >= 5.0 {
            assert!(norms[i] <= norms[i - 1] * (1.0 + 1e-9), "t={}", rec.times[i]);
        }
    }
}

#[test]
fn harmonic_profile_gives_half_epsilon() {
    let s = init_state(
        &cauchy(),
        1.0,
        GridSpec { nodes: 128, ..GridSpec::default() },
        &[Perturbation { mode: 1, profile: Profile::Harmonic(0.1) }],
    )
    .unwrap();
    assert!((s.order_parameter().re - 0.05).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transport_is_contractive(eps in 0.01f64..0.9, s in 0.0f64..3.0, l in 1usize..5, w in 0.2f64..3.0) {
        let spec = GridSpec { nodes: 512, modes: 5, ..GridSpec::default() };
        let g = FrequencyMarginal::bi_cauchy(w, 1.0).unwrap();
        let mut st = init_state(&g, 0.0, spec, &[Perturbation::bump(l, eps)]).unwrap();
        let before = st.mode(l).iter().map(|v| v.norm()).fold(0.0, f64::max);
        st.transport(s);
        let after = st.mode(l).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(after <= before + 1e-9);
    }

    #[test]
    fn marginal_conserved_and_r_bounded(k in 0.0f64..6.0, eps in 0.0f64..0.3) {
        let spec = GridSpec { nodes: 256, modes: 8, ..GridSpec::default() };
        let g = cauchy();
        let mut st = init_state(&g, k, spec, &[Perturbation::bump(1, eps)]).unwrap();
        let w0 = st.mode(0).to_vec();
        let dt = st.dtau() / 2.0;
        let rec = spectral::run(&mut st, &RunOptions::new(3.0, dt, 5)).unwrap();
        prop_assert_eq!(st.mode(0), &w0[..]);
        prop_assert!(rec.r_values.iter().all(|r| r.norm() <= 1.0 + 1e-6));
    }
}
