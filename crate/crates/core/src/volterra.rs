//! Volterra equations of the second kind x − 𝒦∗x = I on a uniform grid,
//! for the linearized order parameter around f_hom (scalar) and around a
//! PLS (2×2), with resolvents R = 𝒦 + 𝒦∗R.
//!
//! Convolutions use the trapezoidal rule including the endpoint t_j = t_k,
//! so each step solves a small linear system (I − (h/2)𝒦(0)) x_k = ….

#[allow(unused_imports)]
use crate::prelude::*;
use crate::freqdist::FrequencyMarginal;
use crate::pls::{pls_transform, PlsBranchPoint};
use crate::spectral::{self, GridSpec, RunOptions, SpectralState};
use crate::{Complex64, Error, Result};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub type Mat2 = [[Complex64; 2]; 2];
pub type Vec2 = [Complex64; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const Z2: Mat2 = [[ZERO; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = Z2;
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat_vec(a: &Mat2, x: &Vec2) -> Vec2 {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

fn mat_inv(a: &Mat2) -> Option<Mat2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.norm() < 1e-300 {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

fn scale(a: &Mat2, s: f64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

fn max_abs(a: &Mat2) -> f64 {
    a.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Discretized Volterra system. For `dim == 1` only the `[0][0]` entries
/// and the first vector component are used (the rest stay zero).
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSystem {
    pub dim: usize,
    pub h: f64,
    pub kernel: Vec<Mat2>,
    pub forcing: Vec<Vec2>,
    pub solution: Option<Vec<Vec2>>,
    pub resolvent: Option<Vec<Mat2>>,
}

impl VolterraSystem {
    pub fn new(dim: usize, h: f64, kernel: Vec<Mat2>, forcing: Vec<Vec2>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid("dim", "must be 1 or 2"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("h", "step must be positive"));
        }
        if kernel.is_empty() {
            return Err(Error::invalid("kernel", "no samples"));
        }
        if !forcing.is_empty() && forcing.len() != kernel.len() {
            return Err(Error::MismatchedGrid { index: forcing.len().min(kernel.len()) });
        }
        Ok(VolterraSystem { dim, h, kernel, forcing, solution: None, resolvent: None })
    }

    /// Scalar system from sampled kernel and forcing.
    pub fn scalar(h: f64, kernel: &[Complex64], forcing: &[Complex64]) -> Result<Self> {
        let k = kernel.iter().map(|v| [[*v, ZERO], [ZERO, ZERO]]).collect();
        let f = forcing.iter().map(|v| [*v, ZERO]).collect();
        Self::new(1, h, k, f)
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| k as f64 * self.h).collect()
    }

    fn mask(&self, m: Mat2) -> Mat2 {
        if self.dim == 1 {
            [[m[0][0], ZERO], [ZERO, ZERO]]
        } else {
            m
        }
    }

    fn implicit_factor(&self) -> Result<Mat2> {
        let id = [[ONE, ZERO], [ZERO, ONE]];
        let a = add(&id, &scale(&self.mask(self.kernel[0]), -0.5 * self.h));
        mat_inv(&a).ok_or_else(|| Error::invalid("h", "I − (h/2)𝒦(0) is singular"))
    }

    /// h·[½𝒦_k x_0 + Σ_{0<j<k} 𝒦_{k−j} x_j + ½𝒦_0 x_k] for a sequence x.
    pub fn convolve_vec(&self, x: &[Vec2], k: usize) -> Vec2 {
        let h = self.h;
        if k == 0 {
            return [ZERO; 2];
        }
        let mut s = mat_vec(&self.kernel[k], &x[0]);
        s = [s[0] * 0.5, s[1] * 0.5];
        for j in 1..k {
            let v = mat_vec(&self.kernel[k - j], &x[j]);
            s = [s[0] + v[0], s[1] + v[1]];
        }
        let v = mat_vec(&self.kernel[0], &x[k]);
        [(s[0] + v[0] * 0.5) * h, (s[1] + v[1] * 0.5) * h]
    }

    /// Max over the grid of |x_k − (𝒦∗x)_k − I_k|.
    pub fn residual(&self) -> Option<f64> {
        let x = self.solution.as_ref()?;
        let mut worst: f64 = 0.0;
        for k in 0..self.len() {
            let c = self.convolve_vec(x, k);
            for i in 0..self.dim {
                worst = worst.max((x[k][i] - c[i] - self.forcing[k][i]).norm());
            }
        }
        Some(worst)
    }

    /// Max over the grid of |R_k − 𝒦_k − (𝒦∗R)_k|.
    pub fn resolvent_residual(&self) -> Option<f64> {
        let r = self.resolvent.as_ref()?;
        let mut worst: f64 = 0.0;
        for k in 0..self.len() {
            let c = self.convolve_mat(r, k);
            let d = add(&add(&r[k], &scale(&self.kernel[k], -1.0)), &scale(&c, -1.0));
            worst = worst.max(max_abs(&self.mask(d)));
        }
        Some(worst)
    }

    fn convolve_mat(&self, r: &[Mat2], k: usize) -> Mat2 {
        if k == 0 {
            return Z2;
        }
        let mut s = scale(&mat_mul(&self.kernel[k], &r[0]), 0.5);
        for j in 1..k {
            s = add(&s, &mat_mul(&self.kernel[k - j], &r[j]));
        }
        s = add(&s, &scale(&mat_mul(&self.kernel[0], &r[k]), 0.5));
        scale(&s, self.h)
    }

    /// x = I + R∗I using the stored resolvent (trapezoidal convolution).
    pub fn solve_with_resolvent(&self) -> Option<Vec<Vec2>> {
        let r = self.resolvent.as_ref()?;
        let h = self.h;
        let f = &self.forcing;
        Some(
            (0..self.len())
                .map(|k| {
                    if k == 0 {
                        return f[0];
                    }
                    let mut s = mat_vec(&r[k], &f[0]);
                    s = [s[0] * 0.5, s[1] * 0.5];
                    for j in 1..k {
                        let v = mat_vec(&r[k - j], &f[j]);
                        s = [s[0] + v[0], s[1] + v[1]];
                    }
                    let v = mat_vec(&r[0], &f[k]);
                    [f[k][0] + (s[0] + v[0] * 0.5) * h, f[k][1] + (s[1] + v[1] * 0.5) * h]
                })
                .collect(),
        )
    }
}

/// Forward substitution; fills `solution`.
pub fn solve_volterra(mut sys: VolterraSystem) -> Result<VolterraSystem> {
    if sys.forcing.len() != sys.kernel.len() {
        return Err(Error::MismatchedGrid { index: sys.forcing.len().min(sys.kernel.len()) });
    }
    let inv = sys.implicit_factor()?;
    let n = sys.len();
    let h = sys.h;
    let mut x: Vec<Vec2> = Vec::with_capacity(n);
    x.push(sys.forcing[0]);
    for k in 1..n {
        let mut s = mat_vec(&sys.kernel[k], &x[0]);
        s = [s[0] * 0.5, s[1] * 0.5];
        for j in 1..k {
            let v = mat_vec(&sys.kernel[k - j], &x[j]);
            s = [s[0] + v[0], s[1] + v[1]];
        }
        let rhs = [sys.forcing[k][0] + s[0] * h, sys.forcing[k][1] + s[1] * h];
        let mut v = mat_vec(&inv, &rhs);
        if sys.dim == 1 {
            v[1] = ZERO;
        }
        x.push(v);
    }
    sys.solution = Some(x);
    Ok(sys)
}

/// Solves R = 𝒦 + 𝒦∗R; fills `resolvent`.
pub fn resolvent(mut sys: VolterraSystem) -> Result<VolterraSystem> {
    let inv = sys.implicit_factor()?;
    let n = sys.len();
    let h = sys.h;
    let mut r: Vec<Mat2> = Vec::with_capacity(n);
    r.push(sys.kernel[0]);
    for k in 1..n {
        let mut s = scale(&mat_mul(&sys.kernel[k], &r[0]), 0.5);
        for j in 1..k {
            s = add(&s, &mat_mul(&sys.kernel[k - j], &r[j]));
        }
        let rhs = add(&sys.kernel[k], &scale(&s, h));
        r.push(sys.mask(mat_mul(&inv, &rhs)));
    }
    sys.resolvent = Some(r);
    Ok(sys)
}

/// R(t) ≈ C + q(t) with C the mean of R over the last 20% of the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSplit {
    pub constant: Mat2,
    /// ∫|q| (max entry) over the horizon, trapezoidal.
    pub q_l1: f64,
    pub q_start: f64,
    pub q_end: f64,
}

pub fn split_resolvent(sys: &VolterraSystem) -> Option<ResolventSplit> {
    let r = sys.resolvent.as_ref()?;
    let n = r.len();
    let from = n - (n / 5).max(1);
    let mut c = Z2;
    for m in &r[from..] {
        c = add(&c, m);
    }
    let c = scale(&c, 1.0 / (n - from) as f64);
    let q: Vec<f64> = r.iter().map(|m| max_abs(&add(m, &scale(&c, -1.0)))).collect();
    let mut l1 = 0.0;
    for k in 1..n {
        l1 += 0.5 * sys.h * (q[k] + q[k - 1]);
    }
    Some(ResolventSplit { constant: c, q_l1: l1, q_start: q[0], q_end: q[n - 1] })
}

/// (K/2)·ĝ(t).
pub fn kernel_hom(g: &FrequencyMarginal, coupling: f64, t: f64) -> Complex64 {
    g.fourier(t) * (0.5 * coupling)
}

/// Grid and horizon for the simulated PLS kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    pub grid: GridSpec,
    /// Simulator step; must not exceed dτ.
    pub dt: f64,
    /// Kernel samples are taken every `stride` simulator steps.
    pub stride: usize,
    pub horizon: f64,
}

impl KernelOptions {
    pub fn for_grid(grid: GridSpec, horizon: f64) -> Self {
        KernelOptions { grid, dt: 0.5 * grid.dtau(), stride: 1, horizon }
    }
}

/// 𝒦(t) = (K/2)[[U_−(t), U_+(t)], [conj U_+(t), conj U_−(t)]] with
/// U_∓(t) = (e^{tL_1} u_{s,∓})_1(0), (u_{s,−})_ℓ = ℓ(f̂_s)_{ℓ−1},
/// (u_{s,+})_ℓ = ℓ(f̂_s)_{ℓ+1}, evolved by the linearized stepper.
/// The unknown is x = (u_1(0), −conj u_1(0)); with that sign choice the
/// Laplace transform of 𝒦 is (K/2)M(z, r_s) entry by entry.
/// Returns the sampled system (zero forcing) with step stride·dt.
pub fn kernel_pls(g: &FrequencyMarginal, p: &PlsBranchPoint, opts: &KernelOptions) -> Result<VolterraSystem> {
    let spec = opts.grid;
    spec.validate()?;
    let k = p.coupling;
    let l_max = spec.modes;
    let n = spec.nodes;
    let o = spec.origin();
    if spec.grid != spectral::Grid::HalfLine {
        return Err(Error::invalid("grid", "the PLS kernel is evolved on the half line"));
    }
    // (f̂_s)_ℓ for ℓ = 0..=L+1 on the grid.
    let mut fs = vec![vec![ZERO; n]; l_max + 2];
    for (l, row) in fs.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            *v = pls_transform(g, k, p.r, p.omega, l as u32, spec.tau(i))?;
        }
    }
    let minus: Vec<Vec<Complex64>> =
        (1..=l_max).map(|l| fs[l - 1].iter().map(|v| v * l as f64).collect()).collect();
    let plus: Vec<Vec<Complex64>> =
        (1..=l_max).map(|l| fs[l + 1].iter().map(|v| v * l as f64).collect()).collect();
    let a = spectral::Coupling::Frozen(Complex64::new(p.r, 0.0));
    let mut um = SpectralState::linearized(k, spec, &minus)?.with_coupling_mode(a);
    let mut up = SpectralState::linearized(k, spec, &plus)?.with_coupling_mode(a);
    let run = RunOptions::new(opts.horizon, opts.dt, opts.stride);
    let sample = |s: &mut SpectralState| -> Result<Vec<Complex64>> {
        let mut v = Vec::new();
        spectral::run_with(s, &run, |st| {
            v.push(st.mode(1)[o]);
            Ok(())
        })?;
        Ok(v)
    };
    let vm = sample(&mut um)?;
    let vp = sample(&mut up)?;
    let steps = (opts.horizon / opts.dt - 1e-9).ceil().max(1.0);
    let h = opts.horizon / steps * opts.stride as f64;
    let half = 0.5 * k;
    let kernel = vm
        .iter()
        .zip(&vp)
        .map(|(m, p)| [[m * half, p * half], [p.conj() * half, m.conj() * half]])
        .collect::<Vec<Mat2>>();
    // The final sample is always recorded; drop it if it is off the stride grid.
    let mut kernel = kernel;
    let on_grid = ((steps as usize) % opts.stride) == 0;
    if !on_grid {
        kernel.pop();
    }
    let len = kernel.len();
    VolterraSystem::new(2, h, kernel, vec![[ZERO; 2]; len])
}

/// Trapezoidal ∫_0^T 𝒦(t) e^{−zt} dt from the kernel samples.
pub fn kernel_laplace(sys: &VolterraSystem, z: Complex64) -> Mat2 {
    let h = sys.h;
    let n = sys.len();
    let mut acc = Z2;
    for (k, m) in sys.kernel.iter().enumerate() {
        let w = if k == 0 || k == n - 1 { 0.5 * h } else { h };
        let e = (-z * (k as f64 * h)).exp() * w;
        acc = add(&acc, &[[m[0][0] * e, m[0][1] * e], [m[1][0] * e, m[1][1] * e]]);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    Exponential,
    Algebraic,
}

impl DecayModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecayModel::Exponential => "exponential",
            DecayModel::Algebraic => "algebraic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// a in |r| ~ e^{−at}, or b in |r| ~ t^{−b}.
    pub rate: f64,
    pub model: DecayModel,
    /// RMS residual of the chosen log-fit.
    pub rms: f64,
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (slope, icpt, (rss / n).sqrt())
}

/// Least-squares fits of log|r| against t and against log t over
/// t ∈ [t0, t1]; returns the better of the two.
pub fn damping_rate(times: &[f64], values: &[f64], t0: f64, t1: f64) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::MismatchedGrid { index: times.len().min(values.len()) });
    }
    let (t, v): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t0 && **t <= t1)
        .map(|(t, v)| (*t, v.abs()))
        .unzip();
    if t.len() < 20 {
        return Err(Error::invalid("window", "need at least 20 samples in the fitting window"));
    }
    if v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::InsufficientDecay(String::from("non-positive or non-finite modulus in window")));
    }
    let mut running_min = f64::INFINITY;
    for x in &v {
        if *x > 10.0 * running_min {
            return Err(Error::InsufficientDecay(alloc::format!(
                "modulus rebounds by more than a factor 10 ({} after {})",
                x, running_min
            )));
        }
        running_min = running_min.min(*x);
    }
    let ly: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let (se, _, re) = linear_fit(&t, &ly);
    let exp = DecayFit { rate: -se, model: DecayModel::Exponential, rms: re };
    if t[0] <= 0.0 {
        return Ok(exp);
    }
    let lt: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let (sa, _, ra) = linear_fit(&lt, &ly);
    if ra < re {
        Ok(DecayFit { rate: -sa, model: DecayModel::Algebraic, rms: ra })
    } else {
        Ok(exp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_inverse() {
        let a: Mat2 = [[Complex64::new(2.0, 1.0), ONE], [Complex64::new(0.0, -1.0), Complex64::new(3.0, 0.0)]];
        let p = mat_mul(&a, &mat_inv(&a).unwrap());
        assert!((p[0][0] - ONE).norm() < 1e-15 && p[0][1].norm() < 1e-15 && (p[1][1] - ONE).norm() < 1e-15);
    }

    #[test]
    fn zero_kernel_passes_forcing_through() {
        let h = 0.01;
        let f: Vec<Complex64> = (0..100).map(|k| Complex64::new((-(k as f64) * h).exp(), 0.0)).collect();
        let sys = solve_volterra(VolterraSystem::scalar(h, &vec![ZERO; 100], &f).unwrap()).unwrap();
        for (x, y) in sys.solution.unwrap().iter().zip(&f) {
            assert_eq!(x[0], *y);
        }
    }
}
