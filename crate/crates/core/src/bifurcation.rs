//! K-sweeps: f_hom stability plus every PLS branch with its stability,
//! branch tracking and event detection.
//!
//! Branch 0 is always f_hom (r = 0). PLS branches get ids 1, 2, … in order of
//! first appearance; a solution continues a branch from the previous K when
//! it is the nearest unclaimed match in (r, Ω) within the match threshold.

#[allow(unused_imports)]
use crate::prelude::*;
use crate::freqdist::FrequencyMarginal;
use crate::linstab;
use crate::pls::{self, PlsBranchPoint, PlsStability};
use crate::{Complex64, Error, Result};
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Previous solutions seed the next K (sequential in K).
    Continuation,
    /// Default multi-start seeds only; K points are independent.
    Multistart,
}

impl SweepMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepMode::Continuation => "continuation",
            SweepMode::Multistart => "multistart",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "continuation" => Some(SweepMode::Continuation),
            "multistart" => Some(SweepMode::Multistart),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub mode: SweepMode,
    /// Branch identity threshold in (r, Ω).
    pub match_threshold: f64,
    /// Bisection stops once the bracket is below step / refine_factor.
    pub refine_factor: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { mode: SweepMode::Continuation, match_threshold: 0.1, refine_factor: 16.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Pitchfork,
    SaddleNode,
    HomDestab,
    HomRestab,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Pitchfork => "pitchfork",
            EventKind::SaddleNode => "saddle-node",
            EventKind::HomDestab => "hom-destab",
            EventKind::HomRestab => "hom-restab",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [EventKind::Pitchfork, EventKind::SaddleNode, EventKind::HomDestab, EventKind::HomRestab]
            .into_iter()
            .find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BifurcationEvent {
    pub kind: EventKind,
    /// Midpoint of the final bracket.
    pub coupling: f64,
    pub bracket: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramRow {
    pub coupling: f64,
    pub branch: usize,
    pub r: f64,
    pub omega: f64,
    pub stability: PlsStability,
    pub leading_root: Option<Complex64>,
}

/// Everything computed at one K: the f_hom verdict and the classified PLS.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub coupling: f64,
    pub hom: PlsStability,
    pub hom_root: Option<Complex64>,
    pub pls: Vec<PlsBranchPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationDiagram {
    pub marginal: FrequencyMarginal,
    pub k_min: f64,
    pub k_max: f64,
    pub step: f64,
    pub rows: Vec<DiagramRow>,
    pub events: Vec<BifurcationEvent>,
}

impl BifurcationDiagram {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &BifurcationEvent> + '_ {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Maximal runs of grid K values where f_hom and some PLS are both stable.
    pub fn coexistence_intervals(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut open: Option<(f64, f64)> = None;
        let mut i = 0;
        while i < self.rows.len() {
            let k = self.rows[i].coupling;
            let mut j = i;
            let (mut hom, mut pls) = (false, false);
            while j < self.rows.len() && self.rows[j].coupling == k {
                let row = &self.rows[j];
                let stable = row.stability == PlsStability::Stable;
                if row.branch == 0 {
                    hom = stable;
                } else {
                    pls |= stable;
                }
                j += 1;
            }
            if hom && pls {
                open = Some(open.map_or((k, k), |(a, _)| (a, k)));
            } else if let Some(iv) = open.take() {
                out.push(iv);
            }
            i = j;
        }
        out.extend(open);
        out
    }
}

/// Grid K_i = k_min + i·step up to k_max (inclusive within step/1000).
pub fn k_grid(k_min: f64, k_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step", "K step must be positive"));
    }
    if !(k_min > 0.0 && k_max >= k_min && k_max.is_finite()) {
        return Err(Error::invalid("K range", "need 0 < K_min ≤ K_max"));
    }
    let n = ((k_max - k_min) / step + 1e-3).floor() as usize;
    Ok((0..=n).map(|i| k_min + i as f64 * step).collect())
}

fn hom_verdict(g: &FrequencyMarginal, k: f64) -> (PlsStability, Option<Complex64>) {
    match linstab::check_homog_stability(g, k) {
        Ok(rep) if rep.stable => (PlsStability::Stable, None),
        Ok(rep) => {
            let lead = rep.unstable_roots.iter().copied().fold(None, |acc: Option<Complex64>, z| match acc {
                Some(a) if a.re >= z.re => Some(a),
                _ => Some(z),
            });
            (PlsStability::Unstable, lead)
        }
        Err(_) => (PlsStability::Marginal, None),
    }
}

/// Solves and classifies everything at a single K. Failures of the PLS
/// solver yield an empty list; failed classifications are recorded as marginal.
pub fn solve_point(g: &FrequencyMarginal, k: f64, seeds: &[(f64, f64)]) -> SweepPoint {
    let (hom, hom_root) = hom_verdict(g, k);
    let pls = pls::solve_pls(g, k, seeds)
        .unwrap_or_default()
        .into_iter()
        .map(|p| {
            pls::pls_stability(g, k, &p).unwrap_or(PlsBranchPoint { stability: PlsStability::Marginal, ..p })
        })
        .collect();
    SweepPoint { coupling: k, hom, hom_root, pls }
}

/// Sequential sweep over [k_min, k_max] with the default options.
pub fn sweep(g: &FrequencyMarginal, k_min: f64, k_max: f64, step: f64) -> Result<BifurcationDiagram> {
    sweep_with(g, k_min, k_max, step, &SweepOptions::default())
}

pub fn sweep_with(
    g: &FrequencyMarginal,
    k_min: f64,
    k_max: f64,
    step: f64,
    opts: &SweepOptions,
) -> Result<BifurcationDiagram> {
    let ks = k_grid(k_min, k_max, step)?;
    let mut points: Vec<SweepPoint> = Vec::with_capacity(ks.len());
    for &k in &ks {
        let seeds: Vec<(f64, f64)> = match (opts.mode, points.last()) {
            (SweepMode::Continuation, Some(prev)) => prev.pls.iter().map(|p| (p.r, p.omega)).collect(),
            _ => Vec::new(),
        };
        points.push(solve_point(g, k, &seeds));
    }
    assemble(g, k_min, k_max, step, points, opts)
}

fn dist(a: &PlsBranchPoint, b: &PlsBranchPoint) -> f64 {
    ((a.r - b.r).powi(2) + (a.omega - b.omega).powi(2)).sqrt()
}

/// Assigns branch ids to precomputed points (sorted by K), detects and
/// refines events. Callers computing points in parallel finish here.
pub fn assemble(
    g: &FrequencyMarginal,
    k_min: f64,
    k_max: f64,
    step: f64,
    mut points: Vec<SweepPoint>,
    opts: &SweepOptions,
) -> Result<BifurcationDiagram> {
    points.sort_by(|a, b| a.coupling.total_cmp(&b.coupling));
    // ids[i][j]: branch id of points[i].pls[j]
    let mut ids: Vec<Vec<usize>> = Vec::with_capacity(points.len());
    let mut next_id = 1;
    for i in 0..points.len() {
        let cur = &points[i].pls;
        let mut assigned = alloc::vec![0usize; cur.len()];
        if i > 0 {
            let prev = &points[i - 1].pls;
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for (a, p) in prev.iter().enumerate() {
                for (b, q) in cur.iter().enumerate() {
                    let d = dist(p, q);
                    if d < opts.match_threshold {
                        pairs.push((d, a, b));
                    }
                }
            }
            pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut used_prev = alloc::vec![false; prev.len()];
            for (_, a, b) in pairs {
                if !used_prev[a] && assigned[b] == 0 {
                    used_prev[a] = true;
                    assigned[b] = ids[i - 1][a];
                }
            }
        }
        for id in assigned.iter_mut().filter(|id| **id == 0) {
            *id = next_id;
            next_id += 1;
        }
        ids.push(assigned);
    }

    let mut rows = Vec::new();
    for (pt, pid) in points.iter().zip(&ids) {
        rows.push(DiagramRow {
            coupling: pt.coupling,
            branch: 0,
            r: 0.0,
            omega: 0.0,
            stability: pt.hom,
            leading_root: pt.hom_root,
        });
        let mut these: Vec<DiagramRow> = pt
            .pls
            .iter()
            .zip(pid)
            .map(|(p, &id)| DiagramRow {
                coupling: pt.coupling,
                branch: id,
                r: p.r,
                omega: p.omega,
                stability: p.stability,
                leading_root: p.leading_root,
            })
            .collect();
        these.sort_by_key(|r| r.branch);
        rows.extend(these);
    }

    let mut events = Vec::new();
    let tol = step / opts.refine_factor;
    // f_hom events bridge grid points whose verdict was marginal (e.g. K
    // exactly at threshold).
    let mut last_definite: Option<usize> = None;
    for (i, pt) in points.iter().enumerate() {
        if pt.hom == PlsStability::Marginal {
            continue;
        }
        if let Some(j) = last_definite {
            let a = &points[j];
            let kind = match (a.hom, pt.hom) {
                (PlsStability::Stable, PlsStability::Unstable) => Some(EventKind::HomDestab),
                (PlsStability::Unstable, PlsStability::Stable) => Some(EventKind::HomRestab),
                _ => None,
            };
            if let Some(kind) = kind {
                let left_stable = a.hom == PlsStability::Stable;
                let (lo, hi) = bisect(a.coupling, pt.coupling, tol, |k| match hom_verdict(g, k).0 {
                    PlsStability::Stable => left_stable,
                    PlsStability::Unstable => !left_stable,
                    // threshold itself: the bracket should close onto it from either side
                    _ => k < 0.5 * (a.coupling + pt.coupling),
                });
                events.push(BifurcationEvent { kind, coupling: 0.5 * (lo + hi), bracket: hi - lo });
            }
        }
        last_definite = Some(i);
    }
    for i in 1..points.len() {
        events.extend(branch_events(g, &points[i - 1], &ids[i - 1], &points[i], &ids[i], tol));
    }
    events.sort_by(|x, y| x.coupling.total_cmp(&y.coupling).then(x.kind.cmp(&y.kind)));
    Ok(BifurcationDiagram { marginal: g.clone(), k_min, k_max, step, rows, events })
}

/// Shrinks [lo, hi] while `left(k)` tells whether k lies on the lo side.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, mut left: impl FnMut(f64) -> bool) -> (f64, f64) {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if left(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Births and deaths between two consecutive grid points. Two same-signed
/// branches appearing (or vanishing) together are a fold; a lone
/// stationary branch appearing or vanishing is a pitchfork off f_hom.
/// Rotating ±Ω pairs leaving f_hom are reported through the f_hom events.
fn branch_events(
    g: &FrequencyMarginal,
    a: &SweepPoint,
    ida: &[usize],
    b: &SweepPoint,
    idb: &[usize],
    tol: f64,
) -> Vec<BifurcationEvent> {
    let born: Vec<&PlsBranchPoint> = b.pls.iter().zip(idb).filter(|(_, id)| !ida.contains(id)).map(|x| x.0).collect();
    let died: Vec<&PlsBranchPoint> = a.pls.iter().zip(ida).filter(|(_, id)| !idb.contains(id)).map(|x| x.0).collect();
    let mut out = Vec::new();
    for (set, count_side) in [(born, b), (died, a)] {
        let mut used = alloc::vec![false; set.len()];
        for i in 0..set.len() {
            if used[i] {
                continue;
            }
            let partner = (i + 1..set.len()).find(|&j| {
                !used[j] && (set[i].omega - set[j].omega).abs() < 0.05 && set[i].omega * set[j].omega >= -1e-12
            });
            let kind = match partner {
                Some(j) => {
                    used[j] = true;
                    EventKind::SaddleNode
                }
                None if set[i].omega.abs() < 1e-6 => EventKind::Pitchfork,
                None => continue,
            };
            used[i] = true;
            let target = count_side.pls.len();
            let on_count_side = |k: f64| pls::solve_pls(g, k, &[(set[i].r, set[i].omega)]).map(|v| v.len()).unwrap_or(0) == target;
            let (lo, hi) = if core::ptr::eq(count_side, b) {
                bisect(a.coupling, b.coupling, tol, |k| !on_count_side(k))
            } else {
                bisect(a.coupling, b.coupling, tol, on_count_side)
            };
            out.push(BifurcationEvent { kind, coupling: 0.5 * (lo + hi), bracket: hi - lo });
        }
    }
    out
}
