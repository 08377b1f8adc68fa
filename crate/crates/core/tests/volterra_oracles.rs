use kuramoto_core::freqdist::FrequencyMarginal;
use kuramoto_core::volterra::{self, DecayModel, VolterraSystem};
use kuramoto_core::Complex64;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cauchy_system(k: f64, h: f64, t: f64) -> VolterraSystem {
    let g = FrequencyMarginal::cauchy(1.0, 0.0).unwrap();
    let n = (t / h).round() as usize + 1;
    let kern: Vec<Complex64> = (0..n).map(|i| volterra::kernel_hom(&g, k, i as f64 * h)).collect();
    let f: Vec<Complex64> = (0..n).map(|i| c((-(i as f64) * h).exp())).collect();
    VolterraSystem::scalar(h, &kern, &f).unwrap()
}

#[test]
fn scalar_cauchy_solution_is_exponential() {
    let sys = volterra::solve_volterra(cauchy_system(1.0, 1e-3, 20.0)).unwrap();
    let err = sys.solution.as_ref().unwrap().iter().enumerate()
        .map(|(i, x)| (x[0] - c((-0.5 * i as f64 * 1e-3).exp())).norm()).fold(0.0, f64::max);
    assert!(err < 1e-4, "{err}");
    assert!(sys.residual().unwrap() < 1e-10);
}

#[test]
fn resolvent_closed_form_and_order() {
    let err = |h: f64| {
        let sys = volterra::resolvent(cauchy_system(1.0, h, 20.0)).unwrap();
        assert!(sys.resolvent_residual().unwrap() < 1e-8);
        sys.resolvent.unwrap().iter().enumerate()
            .map(|(i, r)| (r[0][0] - c(0.5 * (-0.5 * i as f64 * h).exp())).norm()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(2e-3), err(1e-3));
    assert!(e2 < 1e-4, "{e2}");
    let ratio = e1 / e2;
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn resolvent_identity() {
    let sys = volterra::solve_volterra(volterra::resolvent(cauchy_system(1.0, 1e-3, 20.0)).unwrap()).unwrap();
    let a = sys.solution.as_ref().unwrap();
    let b = sys.solve_with_resolvent().unwrap();
    let d = a.iter().zip(&b).map(|(x, y)| (x[0] - y[0]).norm()).fold(0.0, f64::max);
    println!("identity gap {d:e}");
    assert!(d < 1e-8, "{d:e}");
}

#[test]
fn zero_coupling_has_zero_resolvent() {
    let sys = volterra::resolvent(cauchy_system(0.0, 1e-2, 5.0)).unwrap();
    assert!(sys.resolvent.unwrap().iter().all(|r| r[0][0] == c(0.0)));
}

#[test]
fn resolvent_l1_norm_is_stable_under_horizon_doubling() {
    let l1 = |t: f64| {
        let sys = volterra::resolvent(cauchy_system(1.5, 1e-2, t)).unwrap();
        let r = sys.resolvent.unwrap();
        r.windows(2).map(|w| 0.5 * 1e-2 * (w[0][0][0].norm() + w[1][0][0].norm())).sum::<f64>()
    };
    let (a, b) = (l1(100.0), l1(200.0));
    assert!((a / b - 1.0).abs() < 0.01, "{a} {b}");
}

#[test]
fn kernel_hom_values() {
    let g = FrequencyMarginal::cauchy(1.0, 0.0).unwrap();
    assert_eq!(volterra::kernel_hom(&g, 2.0, 0.0), c(1.0));
    assert_eq!(volterra::kernel_hom(&g, 0.0, 3.0), c(0.0));
    let b = FrequencyMarginal::bi_cauchy(0.3, 0.7).unwrap();
    let t: f64 = 1.7;
    let want = 0.5 * 1.3 * (-0.3 * t).exp() * (0.7 * t).cos();
    assert!((volterra::kernel_hom(&b, 1.3, t) - c(want)).norm() < 1e-15);
}

#[test]
fn damping_fits() {
    let t: Vec<f64> = (0..100).map(|i| 1.0 + i as f64 * 0.1).collect();
    let e: Vec<f64> = t.iter().map(|t| 3.0 * (-0.5 * t).exp()).collect();
    let f = volterra::damping_rate(&t, &e, 0.0, 100.0).unwrap();
    assert_eq!(f.model, DecayModel::Exponential);
    assert!((f.rate - 0.5).abs() < 1e-6);
    let a: Vec<f64> = t.iter().map(|t| t.powi(-2)).collect();
    let f = volterra::damping_rate(&t, &a, 0.0, 100.0).unwrap();
    assert_eq!(f.model, DecayModel::Algebraic);
    assert!((f.rate - 2.0).abs() < 1e-6);
    let mut bad = e.clone();
    bad[60] = bad[30] * 20.0;
    assert!(volterra::damping_rate(&t, &bad, 0.0, 100.0).is_err());
    assert!(volterra::damping_rate(&t[..10], &e[..10], 0.0, 100.0).is_err());
}

#[test]
fn linearized_cauchy_trajectory_decays_at_half() {
    let sys = volterra::solve_volterra(cauchy_system(1.0, 1e-2, 20.0)).unwrap();
    let x = sys.solution.unwrap();
    let t = sys_times(x.len(), 1e-2);
    let v: Vec<f64> = x.iter().map(|x| x[0].norm()).collect();
    let f = volterra::damping_rate(&t, &v, 2.0, 15.0).unwrap();
    assert_eq!(f.model, DecayModel::Exponential);
    assert!((f.rate - 0.5).abs() < 0.025);
}

fn sys_times(n: usize, h: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 * h).collect()
}
