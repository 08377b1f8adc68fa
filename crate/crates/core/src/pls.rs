//! Partially locked states f_s: existence through the self-consistency
//! function F_r(Ω), and linear stability through det(Id − (K/2)M(z, r)).
//!
//! A PLS rotating with frequency Ω is stationary for the shifted marginal
//! g(ω − Ω); every quantity here is evaluated in that frame.
//!
//! For Cauchy mixtures the frequency integrals are closed by residues in the
//! lower half-plane, where β extends analytically as b(ζ) = 1/(iζ + √(1−ζ²))
//! (principal root). Each component contributes through its pole
//! s_j = Ω_j + Ω − iΔ_j. The identity iζ + b(ζ) = √(1−ζ²) turns the J_k
//! denominators into z + Kr·√(1−ζ²).

#[allow(unused_imports)]
use crate::prelude::*;
use crate::freqdist::{FrequencyMarginal, MarginalKind};
use crate::quad::{self, Tol};
use crate::{Complex64, Error, Result};
use alloc::vec::Vec;
use core::f64::consts::PI;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Stationary phase profile β(x) of f_s: e^{−iθ*(x)} for locked |x| ≤ 1,
/// the drifting Fourier coefficient otherwise.
pub fn beta(x: f64) -> Complex64 {
    if x.abs() <= 1.0 {
        Complex64::new((1.0 - x * x).sqrt(), -x)
    } else {
        // −ix(1 − √(1 − x⁻²)) written without cancellation.
        Complex64::new(0.0, -1.0 / (x + x.signum() * (x * x - 1.0).sqrt()))
    }
}

/// Analytic extension of β into the lower half-plane.
pub fn beta_ext(zeta: Complex64) -> Complex64 {
    ONE / (I * zeta + (ONE - zeta * zeta).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlsStability {
    Stable,
    Unstable,
    Marginal,
    /// Not yet passed through [`pls_stability`].
    Unclassified,
}

impl PlsStability {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlsStability::Stable => "stable",
            PlsStability::Unstable => "unstable",
            PlsStability::Marginal => "marginal",
            PlsStability::Unclassified => "unclassified",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "stable" => PlsStability::Stable,
            "unstable" => PlsStability::Unstable,
            "marginal" => PlsStability::Marginal,
            "unclassified" => PlsStability::Unclassified,
            _ => return None,
        })
    }
}

impl core::fmt::Display for PlsStability {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlsBranchPoint {
    pub coupling: f64,
    pub r: f64,
    pub omega: f64,
    /// |F_r(Ω) − 1|
    pub residual: f64,
    pub stability: PlsStability,
    pub leading_root: Option<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityMatrix {
    pub z: Complex64,
    pub r: f64,
    /// [[J_0(z), J_2(z)], [conj J_2(z̄), conj J_0(z̄)]]
    pub entries: [[Complex64; 2]; 2],
}

impl StabilityMatrix {
    /// det(Id − (K/2)M)
    pub fn dispersion(&self, k: f64) -> Complex64 {
        let h = 0.5 * k;
        let m = &self.entries;
        (ONE - m[0][0] * h) * (ONE - m[1][1] * h) - m[0][1] * m[1][0] * h * h
    }
}

fn validate(k: f64, r: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid("K", "coupling must be positive"));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::invalid("r", "order parameter must lie in (0, 1]"));
    }
    Ok(())
}

/// Lower-half-plane pole locations s_j of the shifted marginal, with weights.
fn poles(g: &FrequencyMarginal, omega: f64) -> Option<impl Iterator<Item = (f64, Complex64)> + '_> {
    g.components()
        .map(move |cs| cs.iter().map(move |c| (c.weight, Complex64::new(c.center + omega, -c.width))))
}

fn tol() -> Tol {
    Tol::new(1e-12, 1e-10)
}

/// ∫ f(ω) g(ω − Ω) dω with breakpoints at the given ω values.
fn against_shifted(
    g: &FrequencyMarginal,
    omega: f64,
    breaks: &[f64],
    f: impl Fn(f64) -> Complex64,
) -> Result<Complex64> {
    g.density(0.0)?;
    let mut pts: Vec<f64> = breaks.to_vec();
    match g.kind() {
        MarginalKind::CauchyMixture(cs) => {
            for c in cs {
                pts.extend([c.center + omega - c.width, c.center + omega, c.center + omega + c.width]);
            }
        }
        MarginalKind::Gaussian { sigma } => pts.extend([omega - 8.0 * sigma, omega, omega + 8.0 * sigma]),
        MarginalKind::Tabulated(_) => unreachable!(),
    }
    quad::integrate_line(
        |w| f(w) * g.density(w - omega).unwrap_or(0.0),
        &pts,
        g.scale().max(1e-3),
        tol(),
    )
}

/// F_r(Ω) = (1/r) ∫ β((ω+Ω)/(Kr)) g(ω) dω.
pub fn self_consistency(g: &FrequencyMarginal, k: f64, r: f64, omega: f64) -> Result<Complex64> {
    validate(k, r)?;
    match poles(g, omega) {
        Some(ps) => {
            let kr = k * r;
            Ok(ps.map(|(c, s)| beta_ext(s / kr) * c).sum::<Complex64>() / r)
        }
        None => self_consistency_quadrature(g, k, r, omega),
    }
}

/// F_r(Ω) by direct quadrature, splitting at the kinks |ω + Ω| = Kr.
pub fn self_consistency_quadrature(g: &FrequencyMarginal, k: f64, r: f64, omega: f64) -> Result<Complex64> {
    validate(k, r)?;
    let kr = k * r;
    Ok(against_shifted(g, omega, &[-kr, kr], |w| beta(w / kr))? / r)
}

/// J_k(z, r) for a PLS rotating at Ω (k ∈ {0, 2}).
pub fn j_integral_at(g: &FrequencyMarginal, coupling: f64, k: u32, z: Complex64, r: f64, omega: f64) -> Result<Complex64> {
    validate(coupling, r)?;
    if z.re < 0.0 {
        return Err(Error::invalid("z", "Re z must be non-negative"));
    }
    let kr = coupling * r;
    match poles(g, omega) {
        Some(ps) => Ok(ps
            .map(|(c, s)| {
                let zeta = s / kr;
                beta_ext(zeta).powu(k) * c / (z + (ONE - zeta * zeta).sqrt() * kr)
            })
            .sum()),
        None => j_integral_quadrature(g, coupling, k, z, r, omega),
    }
}

/// J_k(z, r) for a stationary PLS.
pub fn j_integral(g: &FrequencyMarginal, coupling: f64, k: u32, z: Complex64, r: f64) -> Result<Complex64> {
    j_integral_at(g, coupling, k, z, r, 0.0)
}

/// J_k by quadrature. On Re z = 0 the integrand is singular; the value is
/// taken by continuity from z + δ, δ ∈ {1e-5, 1e-6}, linearly extrapolated.
pub fn j_integral_quadrature(
    g: &FrequencyMarginal,
    coupling: f64,
    k: u32,
    z: Complex64,
    r: f64,
    omega: f64,
) -> Result<Complex64> {
    validate(coupling, r)?;
    let kr = coupling * r;
    // Drifting oscillators resonate where sgn(ω)√(ω² − K²r²) = −Im z.
    let y = z.im;
    let res = -y.signum() * (y * y + kr * kr).sqrt();
    let breaks = [-kr, kr, res];
    let eval = |zz: Complex64| {
        against_shifted(g, omega, &breaks, |w| {
            let b = beta(w / kr);
            b.powu(k) / (zz + I * w + b * kr)
        })
    };
    if z.re > 0.0 {
        return eval(z);
    }
    let (d1, d2) = (1e-5, 1e-6);
    let j1 = eval(z + d1)?;
    let j2 = eval(z + d2)?;
    // The extrapolated value must stay within 1e-5 of the smallest shift.
    let correction = (j2 - j1) * (d2 / (d1 - d2));
    if correction.norm() > 1e-5 {
        return Err(Error::SingularIntegrand { discrepancy: correction.norm() });
    }
    Ok(j2 + correction)
}

pub fn stability_matrix(g: &FrequencyMarginal, coupling: f64, z: Complex64, r: f64, omega: f64) -> Result<StabilityMatrix> {
    let zb = z.conj();
    let j0 = j_integral_at(g, coupling, 0, z, r, omega)?;
    let j2 = j_integral_at(g, coupling, 2, z, r, omega)?;
    let (j0b, j2b) = if z.im == 0.0 {
        (j0, j2)
    } else {
        (
            j_integral_at(g, coupling, 0, zb, r, omega)?,
            j_integral_at(g, coupling, 2, zb, r, omega)?,
        )
    };
    Ok(StabilityMatrix {
        z,
        r,
        entries: [[j0, j2], [j2b.conj(), j0b.conj()]],
    })
}

/// det(Id − (K/2)M(z, r)) for a PLS rotating at Ω.
pub fn pls_dispersion(g: &FrequencyMarginal, coupling: f64, z: Complex64, r: f64, omega: f64) -> Result<Complex64> {
    Ok(stability_matrix(g, coupling, z, r, omega)?.dispersion(coupling))
}

/// Fourier data (f̂_s)_ℓ(τ) of the PLS for τ ≥ 0 and ℓ ≥ 0, in its rotating frame.
pub fn pls_transform(g: &FrequencyMarginal, coupling: f64, r: f64, omega: f64, l: u32, tau: f64) -> Result<Complex64> {
    validate(coupling, r)?;
    if tau < 0.0 {
        return Err(Error::invalid("tau", "transform is provided on τ ≥ 0"));
    }
    let kr = coupling * r;
    match poles(g, omega) {
        Some(ps) => Ok(ps
            .map(|(c, s)| beta_ext(s / kr).powu(l) * (-I * s * tau).exp() * c)
            .sum()),
        None => against_shifted(g, omega, &[-kr, kr], |w| beta(w / kr).powu(l) * (-I * w * tau).exp()),
    }
}

/// Amplitudes b(s_j/(Kr)) of each Cauchy component in the PLS (its OA form).
pub fn pls_amplitudes(g: &FrequencyMarginal, coupling: f64, r: f64, omega: f64) -> Result<Vec<Complex64>> {
    validate(coupling, r)?;
    let kr = coupling * r;
    poles(g, omega)
        .map(|ps| ps.map(|(_, s)| beta_ext(s / kr)).collect())
        .ok_or(Error::UnsupportedKind { operation: "pls_amplitudes", kind: g.kind_name() })
}

fn residual(g: &FrequencyMarginal, k: f64, r: f64, omega: f64) -> Result<Complex64> {
    Ok(self_consistency(g, k, r, omega)? - 1.0)
}

/// Damped Newton on (Re F − 1, Im F) over (r, Ω).
fn newton_2d(g: &FrequencyMarginal, k: f64, mut r: f64, mut om: f64) -> Option<(f64, f64, f64)> {
    let mut f = residual(g, k, r, om).ok()?;
    for _ in 0..200 {
        if f.norm() < 1e-10 {
            break;
        }
        let hr = 1e-7 * r.max(1e-3);
        let ho = 1e-7 * (1.0 + om.abs());
        let fr = (residual(g, k, (r + hr).min(1.0), om).ok()? - residual(g, k, r - hr, om).ok()?)
            / ((r + hr).min(1.0) - (r - hr));
        let fo = (residual(g, k, r, om + ho).ok()? - residual(g, k, r, om - ho).ok()?) / (2.0 * ho);
        let det = fr.re * fo.im - fo.re * fr.im;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dr = (f.re * fo.im - fo.re * f.im) / det;
        let dom = (fr.re * f.im - f.re * fr.im) / det;
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let nr = (r - lam * dr).clamp(1e-6 * r.max(1e-6), 1.0);
            let no = om - lam * dom;
            if let Ok(nf) = residual(g, k, nr, no) {
                if nf.norm() < f.norm() {
                    r = nr;
                    om = no;
                    f = nf;
                    accepted = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if !accepted || r < 1e-5 {
            return None;
        }
    }
    (f.norm() < 1e-10).then_some((r, om, f.norm()))
}

/// Roots of Re F_r(0) − 1 in r ∈ (0, 1] for symmetric marginals.
fn stationary_roots(g: &FrequencyMarginal, k: f64) -> Result<Vec<f64>> {
    let h = |r: f64| -> Result<f64> { Ok(self_consistency(g, k, r, 0.0)?.re - 1.0) };
    let n = 2000;
    let mut out = Vec::new();
    let mut ra = 1e-4;
    let mut ha = h(ra)?;
    for i in 1..=n {
        let rb = i as f64 / n as f64;
        let hb = h(rb)?;
        if hb == 0.0 {
            out.push(rb);
        } else if ha * hb < 0.0 {
            let (mut lo, mut hi, mut flo) = (ra, rb, ha);
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                let fm = h(m)?;
                if fm * flo <= 0.0 {
                    hi = m;
                } else {
                    lo = m;
                    flo = fm;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        ra = rb;
        ha = hb;
    }
    Ok(out)
}

/// Default Ω search range for the multi-start grid.
pub fn omega_max(g: &FrequencyMarginal) -> f64 {
    match g.components() {
        Some(cs) => {
            let om = cs.iter().map(|c| c.center.abs()).fold(0.0, f64::max);
            let dw = cs.iter().map(|c| c.width).fold(0.0, f64::max);
            3.0 * (om + dw)
        }
        None => 3.0 * g.scale(),
    }
}

/// Multi-start grid used by [`solve_pls`]: r ∈ {0.05, …, 0.95} × Ω ∈ [−Ω_max, Ω_max].
pub fn default_seeds(g: &FrequencyMarginal) -> Vec<(f64, f64)> {
    let om = omega_max(g);
    let mut v = Vec::new();
    for i in 1..=19 {
        let r = 0.05 * i as f64;
        for j in 0..=20 {
            v.push((r, -om + 2.0 * om * j as f64 / 20.0));
        }
    }
    v
}

/// All PLS found from the given seeds plus the default grid (and, for
/// symmetric g, the one-dimensional stationary problem).
pub fn solve_pls(g: &FrequencyMarginal, k: f64, seeds: &[(f64, f64)]) -> Result<Vec<PlsBranchPoint>> {
    let mut all: Vec<(f64, f64)> = seeds.to_vec();
    all.extend(default_seeds(g));
    solve_pls_from(g, k, &all)
}

/// Like [`solve_pls`] but only from the given seeds (no default grid).
pub fn solve_pls_from(g: &FrequencyMarginal, k: f64, seeds: &[(f64, f64)]) -> Result<Vec<PlsBranchPoint>> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid("K", "coupling must be positive"));
    }
    let sym = g.is_symmetric();
    let mut found: Vec<(f64, f64)> = Vec::new();
    if sym {
        found.extend(stationary_roots(g, k)?.into_iter().map(|r| (r, 0.0)));
    }
    for &(r0, o0) in seeds {
        if !(r0 > 0.0 && r0 <= 1.0) {
            continue;
        }
        if let Some((r, om, _)) = newton_2d(g, k, r0, o0) {
            if sym && om.abs() < 1e-6 {
                // Stationary states come from the 1D solve.
                continue;
            }
            found.push((r, om));
            if sym {
                found.push((r, -om));
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<PlsBranchPoint> = Vec::new();
    for (r, om) in found {
        if out.iter().any(|p| ((p.r - r).powi(2) + (p.omega - om).powi(2)).sqrt() < 1e-5) {
            continue;
        }
        let res = residual(g, k, r, om)?.norm();
        if res < 1e-8 {
            out.push(PlsBranchPoint {
                coupling: k,
                r,
                omega: om,
                residual: res,
                stability: PlsStability::Unclassified,
                leading_root: None,
            });
        }
    }
    Ok(out)
}

/// Options for the argument-principle count in [`pls_stability`].
#[derive(Debug, Clone, Copy)]
pub struct PlsStabilityOptions {
    /// Left edge of the counting rectangle.
    pub delta: f64,
    /// Step of the central difference for D′(0).
    pub fd_step: f64,
    /// |D′(0)| at or below this is a degenerate rotation mode.
    pub simple_zero_tol: f64,
    /// min |D| on the left edge (away from 0) below this is a neutral mode.
    pub edge_zero_tol: f64,
}

impl Default for PlsStabilityOptions {
    fn default() -> Self {
        PlsStabilityOptions {
            delta: 1e-4,
            fd_step: 1e-4,
            simple_zero_tol: 1e-8,
            edge_zero_tol: 1e-7,
        }
    }
}

pub fn pls_stability(g: &FrequencyMarginal, k: f64, p: &PlsBranchPoint) -> Result<PlsBranchPoint> {
    pls_stability_with(g, k, p, PlsStabilityOptions::default())
}

pub fn pls_stability_with(
    g: &FrequencyMarginal,
    k: f64,
    p: &PlsBranchPoint,
    opts: PlsStabilityOptions,
) -> Result<PlsBranchPoint> {
    if !(p.residual < 1e-8) {
        return Err(Error::invalid("pls", "state is not a converged PLS (residual ≥ 1e-8)"));
    }
    let (r, om) = (p.r, p.omega);
    let d = |z: Complex64| pls_dispersion(g, k, z, r, om);
    let d0 = d(Complex64::new(0.0, 0.0))?;
    if d0.norm() >= 1e-6 {
        return Err(Error::RotationModeMissing(d0.norm()));
    }
    let h = opts.fd_step;
    let dprime = (d(Complex64::new(0.0, h))? - d(Complex64::new(0.0, -h))?) / Complex64::new(0.0, 2.0 * h);
    let mut out = *p;
    out.coupling = k;
    if dprime.norm() <= opts.simple_zero_tol {
        out.stability = PlsStability::Marginal;
        return Ok(out);
    }
    let count = count_zeros(g, k, r, om, opts)?;
    out.stability = match count {
        Counted::Zeros(0, _) => PlsStability::Stable,
        Counted::Zeros(..) => PlsStability::Unstable,
        Counted::Ambiguous => PlsStability::Marginal,
    };
    if let Counted::Zeros(n, near) = &count {
        if *n > 0 {
            out.leading_root = leading_root(g, k, r, om, *n as usize, opts.delta, near);
        }
    }
    Ok(out)
}

enum Counted {
    Zeros(i32, Vec<f64>),
    Ambiguous,
}

/// Far-edge extent: (K/2)(|J0| + |J2|) < 0.5 along Im z = ±Y.
fn rect_extent(g: &FrequencyMarginal, k: f64, r: f64, om: f64, x_max: f64, delta: f64) -> Result<f64> {
    let mut y = (2.0 * k + 2.0 * omega_max(g)).max(1.0);
    for _ in 0..40 {
        let mut ok = true;
        for s in [y, -y] {
            for i in 0..=32 {
                let x = delta + (x_max - delta) * i as f64 / 32.0;
                let z = Complex64::new(x, s);
                let j0 = j_integral_at(g, k, 0, z, r, om)?;
                let j2 = j_integral_at(g, k, 2, z, r, om)?;
                if 0.5 * k * (j0.norm() + j2.norm()) >= 0.5 {
                    ok = false;
                }
            }
        }
        if ok {
            return Ok(y);
        }
        y *= 1.5;
    }
    Err(Error::Divergence("PLS dispersion does not decay along the contour".into()))
}

fn count_zeros(g: &FrequencyMarginal, k: f64, r: f64, om: f64, opts: PlsStabilityOptions) -> Result<Counted> {
    // |J_k| ≤ 1/Re z, so ‖(K/2)M‖ ≤ K/Re z and no zeros lie beyond Re z = 4K.
    let delta = opts.delta;
    let x_max = 4.0 * k;
    let y_max = rect_extent(g, k, r, om, x_max, delta)?;
    let d = |z: Complex64| pls_dispersion(g, k, z, r, om);
    // Counter-clockwise: right edge up, top edge left, left edge down, bottom edge right.
    let corners = [
        Complex64::new(delta, -y_max),
        Complex64::new(x_max, -y_max),
        Complex64::new(x_max, y_max),
        Complex64::new(delta, y_max),
    ];
    let mut turns = 0.0;
    let mut edge_min = f64::INFINITY;
    let mut left: Vec<(f64, f64)> = Vec::new();
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        // The left edge (index 3 → 0) runs down the imaginary axis; sample it densely.
        let n = if e == 3 { 4000 } else { 400 };
        let mut za = a;
        let mut da = d(za)?;
        for i in 1..=n {
            let zb = a + (b - a) * (i as f64 / n as f64);
            let db = d(zb)?;
            turns += refine(&d, za, da, zb, db, 0, &mut |z, v| {
                if e == 3 && z.norm() > 1e-2 {
                    edge_min = edge_min.min(v.norm());
                }
            })?;
            if e == 3 && zb.norm() > 1e-2 {
                edge_min = edge_min.min(db.norm());
            }
            if e == 3 {
                left.push((zb.im, db.norm()));
            }
            za = zb;
            da = db;
        }
    }
    let w = turns / (2.0 * PI);
    if (w - w.round()).abs() > 0.1 || edge_min < opts.edge_zero_tol {
        return Ok(Counted::Ambiguous);
    }
    let mut near: Vec<(f64, f64)> = (1..left.len().saturating_sub(1))
        .filter(|&i| left[i].1 <= left[i - 1].1 && left[i].1 <= left[i + 1].1)
        .map(|i| (left[i].1, left[i].0))
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Counted::Zeros(w.round() as i32, near.into_iter().take(12).map(|v| v.1).collect()))
}

fn refine<F: Fn(Complex64) -> Result<Complex64>, S: FnMut(Complex64, Complex64)>(
    d: &F,
    za: Complex64,
    a: Complex64,
    zb: Complex64,
    b: Complex64,
    depth: u32,
    seen: &mut S,
) -> Result<f64> {
    let step = (b / a).arg();
    let close = (b - a).norm() > 0.25 * a.norm().min(b.norm());
    if (step.abs() > 0.2 || close) && depth < 30 && (zb - za).norm() > 1e-12 {
        let zm = (za + zb) * 0.5;
        let m = d(zm)?;
        seen(zm, m);
        return Ok(refine(d, za, a, zm, m, depth + 1, seen)? + refine(d, zm, m, zb, b, depth + 1, seen)?);
    }
    Ok(step)
}

fn leading_root(
    g: &FrequencyMarginal,
    k: f64,
    r: f64,
    om: f64,
    count: usize,
    delta: f64,
    near: &[f64],
) -> Option<Complex64> {
    let d = |z: Complex64| pls_dispersion(g, k, z, r, om);
    let x_max = 4.0 * k;
    let y_max = 2.0 * k + 2.0 * omega_max(g);
    let mut seeds: Vec<Complex64> = Vec::new();
    for &y in near {
        for x in [2.0 * delta, 1e-2, 1e-1] {
            seeds.push(Complex64::new(x, y));
        }
    }
    for i in 0..16 {
        let x = delta + (x_max - delta) * ((i as f64 + 0.5) / 16.0).powi(2);
        for j in 0..=40 {
            seeds.push(Complex64::new(x, -y_max + 2.0 * y_max * j as f64 / 40.0));
        }
    }
    let mut roots: Vec<Complex64> = Vec::new();
    {
        for seed in seeds {
            let mut z = seed;
            let mut ok = false;
            for _ in 0..60 {
                let Ok(v) = d(z) else { break };
                let h = 1e-6 * (1.0 + z.norm());
                let (Ok(vp), Ok(vm)) = (d(z + h), d(z - h)) else { break };
                let dv = (vp - vm) / (2.0 * h);
                if dv.norm() == 0.0 {
                    break;
                }
                let step = v / dv;
                z -= step;
                if !(z.re > delta * 0.5 && z.re < x_max) {
                    break;
                }
                if step.norm() < 1e-13 * (1.0 + z.norm()) {
                    ok = d(z).map(|v| v.norm() < 1e-9).unwrap_or(false);
                    break;
                }
            }
            if ok && roots.iter().all(|q| (q - z).norm() > 1e-6) {
                roots.push(z);
                if roots.len() >= count {
                    break;
                }
            }
        }
    }
    roots.into_iter().max_by(|a, b| a.re.total_cmp(&b.re))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_examples() {
        assert_eq!(beta(0.0), ONE);
        assert!((beta(1.0) + I).norm() < 1e-15);
        let b = beta(10.0);
        assert!((b.im + 10.0 * (1.0 - 0.99f64.sqrt())).abs() < 1e-12);
        assert!((beta(-1.0) - I).norm() < 1e-15);
        assert!(beta(1e8).norm() < 1e-8);
    }

    #[test]
    fn beta_continuous_at_one() {
        for s in [1.0, -1.0] {
            let a = beta(s * (1.0 - 1e-12));
            let b = beta(s * (1.0 + 1e-12));
            assert!((a - b).norm() < 1e-5);
        }
    }

    #[test]
    fn extension_is_boundary_value_from_below() {
        for x in [-3.0, -1.2, -0.5, 0.0, 0.7, 1.5, 40.0] {
            let b = beta_ext(Complex64::new(x, -1e-12));
            assert!((b - beta(x)).norm() < 1e-5, "{x}");
        }
    }

    #[test]
    fn lorentzian_pls_closed_form() {
        let g = FrequencyMarginal::cauchy(1.0, 0.0).unwrap();
        let f = self_consistency(&g, 4.0, 0.5f64.sqrt(), 0.0).unwrap();
        assert!((f - ONE).norm() < 1e-14);
        let q = self_consistency_quadrature(&g, 4.0, 0.5f64.sqrt(), 0.0).unwrap();
        assert!((q - ONE).norm() < 1e-9);
    }
}
