use kuramoto_core::bifurcation::{self, EventKind, SweepMode, SweepOptions};
use kuramoto_core::freqdist::FrequencyMarginal;
use kuramoto_core::pls::{self, PlsStability};
use kuramoto_core::linstab;

fn tri() -> FrequencyMarginal {
    FrequencyMarginal::tri_cauchy(0.1, 0.55, 0.17).unwrap()
}

fn near(d: &bifurcation::BifurcationDiagram, kind: EventKind, k: f64, tol: f64) -> bool {
    d.events_of(kind).any(|e| (e.coupling - k).abs() <= tol)
}

#[test]
fn cauchy_sweep_has_one_supercritical_branch() {
    let g = FrequencyMarginal::cauchy(1.0, 0.0).unwrap();
    let d = bifurcation::sweep(&g, 1.0, 3.0, 0.02).unwrap();
    assert!(near(&d, EventKind::HomDestab, 2.0, 0.02), "{:?}", d.events);
    assert!(near(&d, EventKind::Pitchfork, 2.0, 0.02), "{:?}", d.events);
    assert!(d.events_of(EventKind::SaddleNode).next().is_none());
    let branch: Vec<_> = d.rows.iter().filter(|r| r.branch != 0).collect();
    assert!(branch.iter().all(|r| r.branch == 1 && r.coupling > 2.0 && r.stability == PlsStability::Stable));
    assert!(branch.windows(2).all(|w| w[1].r > w[0].r));
    for r in &branch {
        assert!((r.r - (1.0 - 2.0 / r.coupling).sqrt()).abs() < 1e-8);
    }
    for r in d.rows.iter().filter(|r| r.branch == 0) {
        assert_eq!(r.stability == PlsStability::Stable, r.coupling < 2.0, "K={}", r.coupling);
    }
}

#[test]
fn tri_cauchy_diagram() {
    let g = tri();
    let d = bifurcation::sweep(&g, 1.4, 2.5, 0.01).unwrap();
    assert!(near(&d, EventKind::HomDestab, 1.61, 0.05), "{:?}", d.events);
    assert!(near(&d, EventKind::HomRestab, 2.12, 0.05), "{:?}", d.events);
    assert!(near(&d, EventKind::Pitchfork, 2.27, 0.05), "{:?}", d.events);
    assert!(d.events.iter().all(|e| e.bracket <= d.step));

    // sorted by (K, branch)
    assert!(d.rows.windows(2).all(|w| (w[0].coupling, w[0].branch) < (w[1].coupling, w[1].branch)));
    // ±Ω pairs
    for r in d.rows.iter().filter(|r| r.omega > 1e-6) {
        assert!(
            d.rows.iter().any(|q| q.coupling == r.coupling && (q.omega + r.omega).abs() < 1e-6 && (q.r - r.r).abs() < 1e-6),
            "{r:?}"
        );
    }
    // rows re-solve
    for r in d.rows.iter().filter(|r| r.branch != 0) {
        let res = pls::self_consistency(&g, r.coupling, r.r, r.omega).unwrap();
        assert!((res - 1.0).norm() < 1e-8, "{r:?}");
    }
    // f_hom rows agree with linstab
    for r in d.rows.iter().filter(|r| r.branch == 0).step_by(7) {
        let rep = linstab::check_homog_stability(&g, r.coupling).unwrap();
        assert_eq!(rep.stable, r.stability == PlsStability::Stable);
    }
}

#[test]
fn events_are_reproducible_under_step_halving() {
    let g = tri();
    let coarse = bifurcation::sweep(&g, 1.5, 2.4, 0.02).unwrap();
    let fine = bifurcation::sweep(&g, 1.5, 2.4, 0.01).unwrap();
    for e in &coarse.events {
        assert!(
            fine.events_of(e.kind).any(|f| (f.coupling - e.coupling).abs() < coarse.step),
            "{e:?} vs {:?}",
            fine.events
        );
    }
}

#[test]
fn multistart_mode_finds_the_same_events() {
    let g = tri();
    let opts = SweepOptions { mode: SweepMode::Multistart, ..SweepOptions::default() };
    let a = bifurcation::sweep_with(&g, 1.5, 2.4, 0.02, &opts).unwrap();
    let b = bifurcation::sweep(&g, 1.5, 2.4, 0.02).unwrap();
    let kinds = |d: &bifurcation::BifurcationDiagram| d.events.iter().map(|e| e.kind).collect::<Vec<_>>();
    assert_eq!(kinds(&a), kinds(&b));
}

#[test]
fn bi_cauchy_fold_below_critical_coupling() {
    // K_c = 2(Δ² + Ω²)/Δ = 6.25; the Hopf onset of f_hom is at 4Δ = 0.4.
    let g = FrequencyMarginal::bi_cauchy(0.1, 0.55).unwrap();
    let d = bifurcation::sweep(&g, 0.2, 6.6, 0.05).unwrap();
    assert!(d.events_of(EventKind::SaddleNode).any(|e| e.coupling < 6.25));
    assert!(near(&d, EventKind::HomDestab, 0.4, 0.05), "{:?}", d.events);
    assert!(near(&d, EventKind::Pitchfork, 6.25, 0.05), "{:?}", d.events);
    assert!(d.rows.iter().any(|r| r.branch != 0 && r.stability == PlsStability::Stable && r.coupling < 6.25));
}

#[test]
fn sweep_rejects_bad_range() {
    let g = tri();
    assert!(bifurcation::sweep(&g, 2.0, 1.0, 0.1).is_err());
    assert!(bifurcation::sweep(&g, 1.0, 2.0, -0.1).is_err());
}

#[test]
fn weakly_bimodal_cauchy_has_coexistence_below_critical_coupling() {
    // Δ/√3 < Ω ≤ Δ: subcritical onset at K_c = 2(Δ² + Ω²)/Δ = 1.4125 with f_hom stable below it.
    let g = FrequencyMarginal::bi_cauchy(0.4, 0.35).unwrap();
    let d = bifurcation::sweep(&g, 1.0, 1.6, 0.01).unwrap();
    let iv = d.coexistence_intervals();
    assert!(!iv.is_empty() && iv.iter().all(|&(_, b)| b < 1.4125), "{iv:?} {:?}", d.events);
    assert!(d.events_of(EventKind::SaddleNode).any(|e| e.coupling < 1.4125));
    assert!(near(&d, EventKind::HomDestab, 1.4125, 0.01), "{:?}", d.events);
}
