//! Linear stability of the homogeneous state f_hom.
//!
//! The dispersion function is D(z) = 1 − (K/2)·L(z) with L the Laplace
//! transform of ĝ. Zeros of D in Re z > 0 are counted with the argument
//! principle along the imaginary axis: the number of zeros equals the number
//! of times the image (K/2)·L(iy) winds around 1 as y runs from +∞ to −∞.
//! Because that image is a K-independent curve L(iy) scaled by K/2, winding
//! around 1 is the same as winding of L(iy) around 2/K.

#[allow(unused_imports)]
use crate::prelude::*;
use crate::freqdist::{FrequencyMarginal, MarginalKind};
use crate::quad::{self, Tol};
use crate::{Complex64, Error, Result};
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Couplings above this are not searched for instability onset.
pub const K_MAX: f64 = 100.0;
/// Verdicts with a smaller distance between the image curve and 1 are refused.
pub const MIN_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionReport {
    pub coupling: f64,
    pub stable: bool,
    /// Encirclements of 1 by (K/2)·L(iy), oriented so that it equals the
    /// number of zeros of D in the open right half-plane.
    pub winding_number: i32,
    pub unstable_roots: Vec<Complex64>,
    /// min over the contour of |1 − (K/2)·L(iy)|.
    pub boundary_margin: f64,
}

/// Contour resolution knobs; the defaults are what every public entry point uses.
#[derive(Debug, Clone, Copy)]
pub struct ContourOptions {
    /// Multiplier on the automatically chosen extent Y.
    pub extent_factor: f64,
    /// Base number of samples on [−Y, Y] before adaptive refinement.
    pub samples: usize,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions {
            extent_factor: 1.0,
            samples: 2048,
        }
    }
}

pub fn dispersion(g: &FrequencyMarginal, k: f64, z: Complex64) -> Result<Complex64> {
    if k == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok(Complex64::new(1.0, 0.0) - g.laplace(z)? * (0.5 * k))
}

/// dL/dz = −∫ τ ĝ(τ) e^{−zτ} dτ.
fn laplace_derivative(g: &FrequencyMarginal, z: Complex64) -> Result<Complex64> {
    match g.kind() {
        MarginalKind::CauchyMixture(cs) => Ok(cs
            .iter()
            .map(|c| {
                let d = z + Complex64::new(c.width, c.center);
                -c.weight / (d * d)
            })
            .sum()),
        _ => {
            let h = 1e-5 * (1.0 + z.norm());
            let ih = Complex64::new(0.0, h);
            Ok((g.laplace(z + ih)? - g.laplace(z - ih)?) / (ih * 2.0))
        }
    }
}

/// Smallest Y (up to a safety factor) with |(K/2)·L(iy)| < 0.5 for |y| ≥ Y.
pub fn contour_extent(g: &FrequencyMarginal, k: f64) -> Result<f64> {
    match g.kind() {
        MarginalKind::CauchyMixture(cs) => {
            let om = cs.iter().map(|c| c.center.abs()).fold(0.0, f64::max);
            let dw = cs.iter().map(|c| c.width).fold(0.0, f64::max);
            // Σ c_j / (Y − |Ω_j|) ≤ 0.9/K makes the bound 0.45.
            Ok(om + (k / 0.9).max(dw))
        }
        _ => {
            let mut y = 1.2 * k + 4.0 * g.scale();
            for _ in 0..30 {
                let mut ok = true;
                for j in 0..=64 {
                    let t = y * (1.0 + 7.0 * j as f64 / 64.0);
                    for s in [t, -t] {
                        if 0.5 * k * g.laplace(Complex64::new(0.0, s))?.norm() >= 0.45 {
                            ok = false;
                        }
                    }
                }
                if ok {
                    return Ok(y);
                }
                y *= 2.0;
            }
            Err(Error::Divergence("Laplace transform does not decay along the imaginary axis".into()))
        }
    }
}

/// Sample positions on [−Y, Y]: a uniform grid plus points clustered at the
/// peaks of L(iy) for Cauchy components.
fn base_grid(g: &FrequencyMarginal, y_max: f64, samples: usize) -> Vec<f64> {
    let mut n = samples.max(64);
    if !matches!(g.kind(), MarginalKind::CauchyMixture(_)) {
        let fine = (40.0 * y_max / g.scale().max(1e-6)) as usize;
        n = n.max(fine.min(200_000));
    }
    let mut ys: Vec<f64> = (0..=n).map(|i| -y_max + 2.0 * y_max * i as f64 / n as f64).collect();
    if let Some(cs) = g.components() {
        for c in cs {
            for i in 1..128 {
                let th = PI * (i as f64 / 128.0 - 0.5) * 0.995;
                let y = -c.center + c.width * th.tan();
                if y.abs() < y_max {
                    ys.push(y);
                }
            }
        }
    }
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    ys
}

struct Winding {
    /// Winding of the curve around the target for y increasing.
    turns: f64,
    /// min |C(y) − target|.
    min_dist: f64,
    /// Local minima of |C(y) − target| over the base grid (root seeds).
    near: Vec<f64>,
}

/// Winding of y ↦ L(iy) around `target`, closed by a chord at ±Y.
fn winding_of_image(g: &FrequencyMarginal, target: f64, y_max: f64, samples: usize) -> Result<Winding> {
    let ys = base_grid(g, y_max, samples);
    let eval = |y: f64| g.laplace(Complex64::new(0.0, y));
    let p = Complex64::new(target, 0.0);
    let mut turns = 0.0;
    let mut min_dist = f64::INFINITY;
    let mut prev_y = ys[0];
    let mut prev = eval(prev_y)? - p;
    min_dist = min_dist.min(prev.norm());
    let first = prev;
    let mut dists = Vec::with_capacity(ys.len());
    dists.push(prev.norm());
    for &y in &ys[1..] {
        let cur = eval(y)? - p;
        turns += refine_arg(&eval, p, prev_y, prev, y, cur, 0, &mut min_dist)?;
        dists.push(cur.norm());
        prev_y = y;
        prev = cur;
    }
    let mut near: Vec<(f64, f64)> = (1..ys.len() - 1)
        .filter(|&i| dists[i] <= dists[i - 1] && dists[i] <= dists[i + 1])
        .map(|i| (dists[i], ys[i]))
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0));
    let near = near.into_iter().take(16).map(|v| v.1).collect();
    // Chord back from C(Y) to C(−Y), both inside the small disc.
    turns += (first / prev).arg();
    Ok(Winding {
        turns: turns / (2.0 * PI),
        min_dist,
        near,
    })
}

#[allow(clippy::too_many_arguments)]
fn refine_arg<F: Fn(f64) -> Result<Complex64>>(
    eval: &F,
    p: Complex64,
    ya: f64,
    a: Complex64,
    yb: f64,
    b: Complex64,
    depth: u32,
    min_dist: &mut f64,
) -> Result<f64> {
    *min_dist = min_dist.min(b.norm());
    let d = (b / a).arg();
    let close = (b - a).norm() > 0.25 * a.norm().min(b.norm());
    if (d.abs() > 0.2 || close) && depth < 40 && yb - ya > 1e-13 * (1.0 + ya.abs()) {
        let ym = 0.5 * (ya + yb);
        let m = eval(ym)? - p;
        *min_dist = min_dist.min(m.norm());
        return Ok(refine_arg(eval, p, ya, a, ym, m, depth + 1, min_dist)?
            + refine_arg(eval, p, ym, m, yb, b, depth + 1, min_dist)?);
    }
    Ok(d)
}

struct Count {
    zeros: i32,
    margin: f64,
    y_max: f64,
    near: Vec<f64>,
}

fn count_unstable(g: &FrequencyMarginal, k: f64, opts: ContourOptions) -> Result<Count> {
    let y_max = contour_extent(g, k)? * opts.extent_factor;
    let w = winding_of_image(g, 2.0 / k, y_max, opts.samples)?;
    Ok(Count {
        zeros: -(w.turns.round() as i32),
        margin: 0.5 * k * w.min_dist,
        y_max,
        near: w.near,
    })
}

/// Newton polish of a root of D; `None` if it leaves the region or stalls.
fn newton_root(g: &FrequencyMarginal, k: f64, mut z: Complex64, re_cap: f64) -> Option<Complex64> {
    // Cauchy mixtures are analytic left of the axis, so Newton may pass through.
    let re_floor = g.min_width().map_or(-1e-9, |d| -0.9 * d);
    for _ in 0..80 {
        let d = dispersion(g, k, z).ok()?;
        let dp = -laplace_derivative(g, z).ok()? * (0.5 * k);
        if dp.norm() == 0.0 {
            return None;
        }
        let step = d / dp;
        z -= step;
        if !(z.re > re_floor && z.re < 2.0 * re_cap && z.im.is_finite()) {
            return None;
        }
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    let d = dispersion(g, k, z).ok()?;
    (d.norm() < 1e-10 && z.re > 0.0).then_some(z)
}

fn locate_roots(g: &FrequencyMarginal, k: f64, count: usize, y_max: f64, near: &[f64]) -> Vec<Complex64> {
    // |L(z)| ≤ 1/Re z, so zeros of D satisfy Re z ≤ K/2.
    let re_cap = 0.5 * k;
    let mut roots: Vec<Complex64> = Vec::new();
    for &y in near {
        for f in [1e-3, 3e-2] {
            if let Some(z) = newton_root(g, k, Complex64::new(f * re_cap, y), re_cap) {
                if roots.iter().all(|r| (r - z).norm() > 1e-6) {
                    roots.push(z);
                }
            }
        }
    }
    let mut ims: Vec<f64> = (0..=60).map(|j| -y_max + 2.0 * y_max * j as f64 / 60.0).collect();
    if let Some(cs) = g.components() {
        ims.extend(cs.iter().map(|c| -c.center));
    }
    'outer: for i in 0..12 {
        if roots.len() >= count {
            break;
        }
        let re = re_cap * (i as f64 + 0.5) / 12.0;
        for &im in &ims {
            if let Some(z) = newton_root(g, k, Complex64::new(re, im), re_cap) {
                if roots.iter().all(|r| (r - z).norm() > 1e-6) {
                    roots.push(z);
                    if roots.len() >= count {
                        break 'outer;
                    }
                }
            }
        }
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    roots
}

pub fn check_homog_stability(g: &FrequencyMarginal, k: f64) -> Result<DispersionReport> {
    check_homog_stability_with(g, k, ContourOptions::default())
}

pub fn check_homog_stability_with(
    g: &FrequencyMarginal,
    k: f64,
    opts: ContourOptions,
) -> Result<DispersionReport> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::invalid("K", "coupling must be finite and non-negative"));
    }
    if !matches!(g.kind(), MarginalKind::CauchyMixture(_)) {
        // Cauchy mixtures have exponentially decaying ĝ; the others are checked.
        let n = g.l1_norm()?;
        if !n.is_finite() {
            return Err(Error::Divergence("ĝ is not integrable".into()));
        }
    }
    if k == 0.0 {
        return Ok(DispersionReport {
            coupling: k,
            stable: true,
            winding_number: 0,
            unstable_roots: Vec::new(),
            boundary_margin: 1.0,
        });
    }
    let c = count_unstable(g, k, opts)?;
    if c.margin < MIN_MARGIN {
        return Err(Error::Inconclusive { coupling: k, margin: c.margin });
    }
    let roots = if c.zeros > 0 {
        locate_roots(g, k, c.zeros as usize, c.y_max, &c.near)
    } else {
        Vec::new()
    };
    Ok(DispersionReport {
        coupling: k,
        stable: c.zeros == 0 && roots.is_empty(),
        winding_number: c.zeros,
        unstable_roots: roots,
        boundary_margin: c.margin,
    })
}

/// Couplings K = 2/L(iy) at which the image curve passes through 1, i.e.
/// where a root of D crosses the imaginary axis at z = iy. Returned as
/// (K, y) sorted by K, restricted to K ≤ K_MAX.
pub fn axis_crossings(g: &FrequencyMarginal) -> Result<Vec<(f64, f64)>> {
    let y_max = contour_extent(g, K_MAX)?;
    let ys = base_grid(g, y_max, 8192);
    let eval = |y: f64| g.laplace(Complex64::new(0.0, y));
    let mut out = Vec::new();
    let push = |y: f64, l: Complex64, out: &mut Vec<(f64, f64)>| {
        if l.re > 2.0 / K_MAX {
            out.push((2.0 / l.re, y));
        }
    };
    let mut ya = ys[0];
    let mut la = eval(ya)?;
    for &yb in &ys[1..] {
        let lb = eval(yb)?;
        if la.im == 0.0 {
            push(ya, la, &mut out);
        } else if la.im * lb.im < 0.0 {
            let (mut lo, mut hi, mut flo) = (ya, yb, la.im);
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                let fm = eval(m)?.im;
                if fm == 0.0 {
                    lo = m;
                    hi = m;
                    break;
                }
                if fm * flo < 0.0 {
                    hi = m;
                } else {
                    lo = m;
                    flo = fm;
                }
                if hi - lo < 1e-15 * (1.0 + m.abs()) {
                    break;
                }
            }
            let y = 0.5 * (lo + hi);
            push(y, eval(y)?, &mut out);
        }
        ya = yb;
        la = lb;
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(out)
}

/// Critical coupling: 2/(πg(0)) for symmetric unimodal g, otherwise the
/// smallest K at which f_hom loses stability.
pub fn critical_coupling(g: &FrequencyMarginal) -> Result<f64> {
    if g.is_symmetric_unimodal() {
        return Ok(2.0 / (PI * g.density(0.0)?));
    }
    critical_coupling_bisection(g)
}

/// Instability onset by bisection on the winding count, bracketed using
/// the axis crossings; tolerance 1e-6 in K.
pub fn critical_coupling_bisection(g: &FrequencyMarginal) -> Result<f64> {
    let mut cands: Vec<f64> = axis_crossings(g)?.into_iter().map(|c| c.0).collect();
    cands.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let opts = ContourOptions::default();
    let unstable = |k: f64| -> Result<bool> { Ok(count_unstable(g, k, opts)?.zeros > 0) };
    let mut lo = match cands.first() {
        Some(&c) => 0.5 * c,
        None => return Err(Error::NotFound { k_max: K_MAX }),
    };
    for (i, &c) in cands.iter().enumerate() {
        let next = cands.get(i + 1).copied().unwrap_or(K_MAX.max(c * 1.01));
        let probe = 0.5 * (c + next);
        if unstable(probe)? {
            let mut hi = probe;
            while hi - lo > 1e-7 {
                let m = 0.5 * (lo + hi);
                if unstable(m)? {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        lo = probe;
    }
    Err(Error::NotFound { k_max: K_MAX })
}

/// The sufficient threshold 2/‖ĝ‖_{L¹(ℝ⁺)} for nonlinear order-parameter decay.
pub fn uniform_constraint(g: &FrequencyMarginal) -> Result<f64> {
    Ok(2.0 / g.l1_norm()?)
}

fn density_fn(g: &FrequencyMarginal) -> Result<impl Fn(f64) -> f64 + '_> {
    g.density(0.0)?;
    Ok(move |w: f64| g.density(w).unwrap_or(0.0))
}

/// Integration breakpoints (distances from `at`) where g has structure.
fn breaks_about(g: &FrequencyMarginal, at: f64) -> Vec<f64> {
    let mut v: Vec<f64> = match g.kind() {
        MarginalKind::CauchyMixture(cs) => cs.iter().map(|c| (c.center - at).abs()).collect(),
        _ => Vec::new(),
    };
    v.push(at.abs() + 4.0 * g.scale());
    v.retain(|x| *x > 0.0);
    v.sort_by(f64::total_cmp);
    v
}

/// ∫_a^∞ of a folded integrand h over ω, with breakpoints.
fn folded_integral<F: Fn(f64) -> f64>(g: &FrequencyMarginal, h: F, a: f64, at: f64) -> Result<f64> {
    let tol = Tol::new(1e-13, 1e-11);
    let f = |w: f64| Complex64::new(h(w), 0.0);
    let mut pts = alloc::vec![a];
    pts.extend(breaks_about(g, at).into_iter().filter(|x| *x > a));
    let mut s = 0.0;
    for w in pts.windows(2) {
        s += quad::integrate(f, w[0], w[1], tol)?.re;
    }
    let last = *pts.last().unwrap();
    s += quad::integrate_from(f, last, g.scale().max(last), tol)?.re;
    Ok(s)
}

/// P(Ω) = ∫_0^∞ (g(Ω−ω) − g(Ω+ω))/ω dω, which equals Im L(−iΩ + 0).
pub fn penrose_integral(g: &FrequencyMarginal, omega: f64) -> Result<f64> {
    let d = density_fn(g)?;
    folded_integral(g, |w| (d(omega - w) - d(omega + w)) / w, 0.0, omega)
}

/// All Ω with P(Ω) = 0, by grid scan and bisection.
pub fn penrose_critical_frequencies(g: &FrequencyMarginal) -> Result<Vec<f64>> {
    let span = match g.kind() {
        MarginalKind::CauchyMixture(cs) => cs.iter().map(|c| c.center.abs() + 3.0 * c.width).fold(0.0, f64::max),
        _ => 5.0 * g.scale(),
    };
    let min_w = g.min_width().unwrap_or(g.scale());
    let n = ((2.0 * span / (0.02 * min_w)) as usize).clamp(400, 20_000);
    // Odd node count puts Ω = 0 on the grid.
    let n = n | 1;
    let grid: Vec<f64> = (0..n).map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64).collect();
    let vals = grid
        .iter()
        .map(|&o| penrose_integral(g, o))
        .collect::<Result<Vec<_>>>()?;
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = Vec::new();
    for i in 0..n {
        if vals[i].abs() <= 1e-12 * scale.max(1e-300) {
            out.push(grid[i]);
            continue;
        }
        if i + 1 < n && vals[i] * vals[i + 1] < 0.0 && vals[i + 1].abs() > 1e-12 * scale {
            let (mut lo, mut hi, mut flo) = (grid[i], grid[i + 1], vals[i]);
            for _ in 0..60 {
                let m = 0.5 * (lo + hi);
                let fm = penrose_integral(g, m)?;
                if fm * flo <= 0.0 {
                    hi = m;
                } else {
                    lo = m;
                    flo = fm;
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    Ok(out)
}

/// True iff K < 2/(πg(Ω)) at every Ω where P(Ω) = 0 (sufficient for stability).
pub fn penrose_criterion(g: &FrequencyMarginal, k: f64) -> Result<bool> {
    for o in penrose_critical_frequencies(g)? {
        if k >= 2.0 / (PI * g.density(o)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Neville extrapolation to x = 0 of samples (x_i, y_i).
pub(crate) fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p: Vec<f64> = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    p[0]
}

/// PV ∫ g(ω−Ω)/ω dω by symmetric excision of (−ε, ε), extrapolated in ε.
pub fn principal_value(g: &FrequencyMarginal, omega: f64) -> Result<f64> {
    let d = density_fn(g)?;
    let eps = [1e-2, 5e-3, 2.5e-3];
    let mut vals = [0.0; 3];
    for (v, &e) in vals.iter_mut().zip(&eps) {
        *v = folded_integral(g, |w| (d(w - omega) - d(-w - omega)) / w, e, -omega)?;
    }
    Ok(extrapolate_to_zero(&eps, &vals))
}

/// F_{0+0}(Ω) = (K/2)[πg(−Ω) + i·PV ∫ g(ω−Ω)/ω dω], the r → 0 limit of the
/// PLS self-consistency function. Equals (K/2)·conj(L(iΩ + 0)).
pub fn f0_limit(g: &FrequencyMarginal, k: f64, omega: f64) -> Result<Complex64> {
    let re = PI * g.density(-omega)?;
    let im = principal_value(g, omega)?;
    Ok(Complex64::new(re, im) * (0.5 * k))
}
