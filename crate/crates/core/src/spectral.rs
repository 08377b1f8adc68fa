//! Kuramoto PDE in double-Fourier variables: W_ℓ(τ, t) = f̂_ℓ(τ, t) for
//! ℓ = 0..L, evolved by
//!
//! ∂_t W_ℓ = ℓ ∂_τ W_ℓ + (Kℓ/2)(a W_{ℓ−1} − ā W_{ℓ+1}),   a = W_1(0, t),
//!
//! with r(t) = conj(W_1(0, t)). Strang splitting: exact transport along
//! characteristics (cubic, limited interpolation) around an RK4 step of the
//! pointwise mode coupling.
//!
//! The default grid is τ ∈ [0, τ_max]: transport moves data toward smaller τ
//! and the coupling is local in τ, so modes ℓ ≥ 0 on the half line form a
//! closed system. A symmetric grid on [−τ_max, τ_max] is also available for
//! diagnostics that need f̂_ℓ at negative τ (convolutions on the OA manifold).

#[allow(unused_imports)]
use crate::prelude::*;
use crate::freqdist::{FrequencyMarginal, WeightSpec};
use crate::{Complex64, Error, Result};
use alloc::vec;
use alloc::vec::Vec;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    /// τ_k = k·dτ on [0, τ_max].
    HalfLine,
    /// τ_k = −τ_max + k·dτ on [−τ_max, τ_max]; N must be odd so τ = 0 is a node.
    FullLine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Mode cutoff L.
    pub modes: usize,
    /// Node count N.
    pub nodes: usize,
    pub tau_max: f64,
    pub grid: Grid,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { modes: 32, nodes: 2048, tau_max: 40.0, grid: Grid::HalfLine }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.modes < 2 {
            return Err(Error::invalid("L", "mode cutoff must be at least 2"));
        }
        if self.nodes < 64 {
            return Err(Error::invalid("N", "need at least 64 grid nodes"));
        }
        if !(self.tau_max >= 10.0 && self.tau_max.is_finite()) {
            return Err(Error::invalid("tau_max", "must be at least 10"));
        }
        if self.grid == Grid::FullLine && self.nodes % 2 == 0 {
            return Err(Error::invalid("N", "full-line grids need an odd node count"));
        }
        Ok(())
    }

    pub fn dtau(&self) -> f64 {
        match self.grid {
            Grid::HalfLine => self.tau_max / (self.nodes - 1) as f64,
            Grid::FullLine => 2.0 * self.tau_max / (self.nodes - 1) as f64,
        }
    }

    /// Index of the τ = 0 node.
    pub fn origin(&self) -> usize {
        match self.grid {
            Grid::HalfLine => 0,
            Grid::FullLine => (self.nodes - 1) / 2,
        }
    }

    pub fn tau(&self, k: usize) -> f64 {
        (k as f64 - self.origin() as f64) * self.dtau()
    }
}

/// Initial perturbation profile added to one mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// ε·e^{−|τ|}·ĝ(τ)
    Bump(f64),
    /// (ε/2)·ĝ(τ): the transform of the phase density 1 + ε·cos(ℓθ).
    Harmonic(f64),
    /// Raw samples, one per grid node.
    Samples(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub mode: usize,
    pub profile: Profile,
}

impl Perturbation {
    pub fn bump(mode: usize, eps: f64) -> Self {
        Perturbation { mode, profile: Profile::Bump(eps) }
    }
}

/// Source of the coefficient `a` in the coupling term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    /// a = W_1(0, t): the nonlinear PDE.
    SelfConsistent,
    /// a fixed: the linearization (L_1 u)_ℓ = ℓ(∂_τ u_ℓ + (K r_s/2)(u_{ℓ−1} − u_{ℓ+1}))
    /// for a = r_s. No modulus bound is enforced in this mode.
    Frozen(Complex64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    spec: GridSpec,
    coupling: f64,
    mode: Coupling,
    t: f64,
    /// (L+1)×N, row-major by mode.
    w: Vec<Complex64>,
    marginal: Vec<Complex64>,
    scratch: Scratch,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Scratch {
    y: Vec<Complex64>,
    k: Vec<Complex64>,
    acc: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub r_values: Vec<Complex64>,
    pub norms: Option<Vec<f64>>,
}

impl TrajectoryRecord {
    pub fn abs_r(&self) -> Vec<f64> {
        self.r_values.iter().map(|r| r.norm()).collect()
    }
}

/// Builds f̂_hom plus perturbations.
pub fn init_state(
    g: &FrequencyMarginal,
    coupling: f64,
    spec: GridSpec,
    perturbations: &[Perturbation],
) -> Result<SpectralState> {
    let mut s = SpectralState::homogeneous(g, coupling, spec)?;
    let n = spec.nodes;
    for p in perturbations {
        if p.mode == 0 || p.mode > spec.modes {
            return Err(Error::invalid("perturbation.mode", "must lie in 1..=L"));
        }
        let row = p.mode * n;
        for k in 0..n {
            let tau = spec.tau(k);
            let ghat = s.marginal[k];
            let v = match &p.profile {
                Profile::Bump(eps) => ghat * (*eps * (-tau.abs()).exp()),
                Profile::Harmonic(eps) => ghat * (0.5 * *eps),
                Profile::Samples(v) => {
                    if v.len() != n {
                        return Err(Error::MismatchedGrid { index: v.len().min(n) });
                    }
                    v[k]
                }
            };
            s.w[row + k] += v;
        }
    }
    s.check_bound("perturbation")?;
    Ok(s)
}

impl SpectralState {
    /// f̂_hom: W_0 = ĝ, all other modes zero.
    pub fn homogeneous(g: &FrequencyMarginal, coupling: f64, spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(Error::invalid("K", "coupling must be finite and non-negative"));
        }
        let n = spec.nodes;
        let marginal: Vec<Complex64> = (0..n).map(|k| g.fourier(spec.tau(k))).collect();
        let mut w = vec![ZERO; (spec.modes + 1) * n];
        w[..n].copy_from_slice(&marginal);
        Ok(SpectralState {
            spec,
            coupling,
            mode: Coupling::SelfConsistent,
            t: 0.0,
            w,
            marginal,
            scratch: Scratch::default(),
        })
    }

    /// State from explicit rows W_1..W_L (W_0 is taken from the marginal).
    pub fn from_modes(g: &FrequencyMarginal, coupling: f64, spec: GridSpec, rows: &[Vec<Complex64>]) -> Result<Self> {
        let mut s = Self::homogeneous(g, coupling, spec)?;
        if rows.len() != spec.modes {
            return Err(Error::invalid("rows", "expected one row per mode 1..=L"));
        }
        for (l, row) in rows.iter().enumerate() {
            if row.len() != spec.nodes {
                return Err(Error::MismatchedGrid { index: l + 1 });
            }
            s.mode_mut(l + 1).copy_from_slice(row);
        }
        Ok(s)
    }

    /// Perturbation state for the linearized dynamics: rows u_1..u_L with
    /// u_0 ≡ 0. Pair with [`Coupling::Frozen`].
    pub fn linearized(coupling: f64, spec: GridSpec, rows: &[Vec<Complex64>]) -> Result<Self> {
        spec.validate()?;
        if rows.len() != spec.modes {
            return Err(Error::invalid("rows", "expected one row per mode 1..=L"));
        }
        let n = spec.nodes;
        let mut w = vec![ZERO; (spec.modes + 1) * n];
        for (l, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::MismatchedGrid { index: l + 1 });
            }
            w[(l + 1) * n..(l + 2) * n].copy_from_slice(row);
        }
        Ok(SpectralState {
            spec,
            coupling,
            mode: Coupling::Frozen(ZERO),
            t: 0.0,
            w,
            marginal: vec![ZERO; n],
            scratch: Scratch::default(),
        })
    }

    pub fn with_coupling_mode(mut self, mode: Coupling) -> Self {
        self.mode = mode;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.spec
    }

    pub fn modes(&self) -> usize {
        self.spec.modes
    }

    pub fn nodes(&self) -> usize {
        self.spec.nodes
    }

    pub fn dtau(&self) -> f64 {
        self.spec.dtau()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn coupling_mode(&self) -> Coupling {
        self.mode
    }

    /// ĝ samples on the grid.
    pub fn marginal(&self) -> &[Complex64] {
        &self.marginal
    }

    pub fn mode(&self, l: usize) -> &[Complex64] {
        let n = self.spec.nodes;
        &self.w[l * n..(l + 1) * n]
    }

    pub fn mode_mut(&mut self, l: usize) -> &mut [Complex64] {
        assert!(l >= 1, "mode 0 is pinned to the marginal");
        let n = self.spec.nodes;
        &mut self.w[l * n..(l + 1) * n]
    }

    /// W_ℓ at τ = 0.
    pub fn at_origin(&self, l: usize) -> Complex64 {
        self.w[l * self.spec.nodes + self.spec.origin()]
    }

    /// r = conj(W_1(0)).
    pub fn order_parameter(&self) -> Complex64 {
        self.at_origin(1).conj()
    }

    /// Largest |W_ℓ| over ℓ ≥ 1, with its mode index.
    pub fn max_modulus(&self) -> (usize, f64) {
        let n = self.spec.nodes;
        let mut best = (0, 0.0);
        for l in 1..=self.spec.modes {
            for v in &self.w[l * n..(l + 1) * n] {
                let m = v.norm();
                if !(m <= best.1) {
                    best = (l, m);
                }
            }
        }
        best
    }

    fn check_bound(&self, what: &'static str) -> Result<()> {
        let (l, m) = self.max_modulus();
        if self.mode == Coupling::SelfConsistent && m > 1.0 + 1e-6 {
            if what == "perturbation" {
                return Err(Error::invalid("perturbation", "perturbed modes exceed |W_ℓ| ≤ 1"));
            }
            return Err(Error::BlowUp { time: self.t, mode: l, modulus: m });
        }
        if !m.is_finite() {
            return Err(Error::BlowUp { time: self.t, mode: l, modulus: m });
        }
        Ok(())
    }

    /// Free transport over time s: W_ℓ(τ) ← W_ℓ(τ + ℓs), zero inflow.
    pub fn transport(&mut self, s: f64) {
        let n = self.spec.nodes;
        let dtau = self.spec.dtau();
        let buf = &mut self.scratch.k;
        buf.resize(n, ZERO);
        for l in 1..=self.spec.modes {
            let row = &mut self.w[l * n..(l + 1) * n];
            shift_row(row, &mut buf[..n], l as f64 * s / dtau);
            row.copy_from_slice(&buf[..n]);
        }
    }

    /// Pointwise mode coupling over dt with classical RK4.
    fn couple(&mut self, dt: f64) {
        if self.coupling == 0.0 {
            return;
        }
        let len = self.w.len();
        let Scratch { y, k, acc } = &mut self.scratch;
        y.resize(len, ZERO);
        k.resize(len, ZERO);
        acc.resize(len, ZERO);
        let ctx = Rhs { n: self.spec.nodes, modes: self.spec.modes, origin: self.spec.origin(), half_k: 0.5 * self.coupling, mode: self.mode };
        let w = &mut self.w;

        ctx.eval(w, k);
        for i in 0..len {
            acc[i] = w[i] + k[i] * (dt / 6.0);
            y[i] = w[i] + k[i] * (0.5 * dt);
        }
        ctx.eval(y, k);
        for i in 0..len {
            acc[i] += k[i] * (dt / 3.0);
            y[i] = w[i] + k[i] * (0.5 * dt);
        }
        ctx.eval(y, k);
        for i in 0..len {
            acc[i] += k[i] * (dt / 3.0);
            y[i] = w[i] + k[i] * dt;
        }
        ctx.eval(y, k);
        let n = self.spec.nodes;
        for i in n..len {
            w[i] = acc[i] + k[i] * (dt / 6.0);
        }
    }

    /// One Strang step: transport dt/2, coupling dt, transport dt/2.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "time step must be positive"));
        }
        if dt > self.spec.dtau() * (1.0 + 1e-12) {
            return Err(Error::invalid("dt", "time step must not exceed the grid step dτ"));
        }
        self.transport(0.5 * dt);
        self.couple(dt);
        self.transport(0.5 * dt);
        self.t += dt;
        self.check_bound("step")
    }
}

struct Rhs {
    n: usize,
    modes: usize,
    origin: usize,
    half_k: f64,
    mode: Coupling,
}

impl Rhs {
    /// out_ℓ = (Kℓ/2)(a y_{ℓ−1} − ā y_{ℓ+1}) for ℓ ≥ 1; row 0 is left at zero.
    fn eval(&self, y: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let a = match self.mode {
            Coupling::SelfConsistent => y[n + self.origin],
            Coupling::Frozen(a) => a,
        };
        let ac = a.conj();
        out[..n].fill(ZERO);
        for l in 1..=self.modes {
            let c = self.half_k * l as f64;
            let (ca, cac) = (a * c, ac * c);
            let (lo, rest) = y.split_at(l * n);
            let prev = &lo[(l - 1) * n..];
            let o = &mut out[l * n..(l + 1) * n];
            if l < self.modes {
                let next = &rest[n..2 * n];
                for k in 0..n {
                    o[k] = ca * prev[k] - cac * next[k];
                }
            } else {
                for k in 0..n {
                    o[k] = ca * prev[k];
                }
            }
        }
    }
}

/// dst[k] = src(k + q) for q ≥ 0 nodes: cubic Lagrange, clamped to the
/// bracketing nodes (quasi-monotone), zero beyond the last node.
fn shift_row(src: &[Complex64], dst: &mut [Complex64], q: f64) {
    let n = src.len();
    let mut m = q.floor() as usize;
    let mut f = q - m as f64;
    if f > 1.0 - 1e-12 {
        m += 1;
        f = 0.0;
    }
    let get = |i: usize| if i < n { src[i] } else { ZERO };
    if f < 1e-12 {
        for (k, d) in dst.iter_mut().enumerate() {
            *d = get(k + m);
        }
        return;
    }
    // Nodes −1, 0, 1, 2 relative to the left bracket.
    let c = [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ];
    // Nodes 0..3 for the one-sided stencil at the left edge.
    let e = [
        -(f - 1.0) * (f - 2.0) * (f - 3.0) / 6.0,
        f * (f - 2.0) * (f - 3.0) / 2.0,
        -f * (f - 1.0) * (f - 3.0) / 2.0,
        f * (f - 1.0) * (f - 2.0) / 6.0,
    ];
    for (k, d) in dst.iter_mut().enumerate() {
        let i = k + m;
        if i >= n {
            *d = ZERO;
            continue;
        }
        let (a, b) = (src[i], get(i + 1));
        let v = if i == 0 {
            a * e[0] + b * e[1] + get(2) * e[2] + get(3) * e[3]
        } else {
            src[i - 1] * c[0] + a * c[1] + b * c[2] + get(i + 2) * c[3]
        };
        *d = Complex64::new(clamp(v.re, a.re, b.re), clamp(v.im, a.im, b.im));
    }
}

fn clamp(v: f64, a: f64, b: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    v.max(lo).min(hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions<'a> {
    pub t_end: f64,
    pub dt: f64,
    /// Record every this many steps (the final step is always recorded).
    pub sample_every: usize,
    /// Track the H¹_φ norm of W − reference.
    pub norm: Option<WeightSpec>,
    /// Reference for the norm; f̂_hom when absent.
    pub reference: Option<&'a SpectralState>,
}

impl<'a> RunOptions<'a> {
    pub fn new(t_end: f64, dt: f64, sample_every: usize) -> Self {
        RunOptions { t_end, dt, sample_every, norm: None, reference: None }
    }
}

/// Integrates to t_end with a step dt' = t_end/⌈t_end/dt⌉ ≤ dt.
pub fn run(state: &mut SpectralState, opts: &RunOptions<'_>) -> Result<TrajectoryRecord> {
    run_with(state, opts, |_| Ok(()))
}

/// As [`run`], calling `observe` at every recorded sample (including t = 0).
pub fn run_with(
    state: &mut SpectralState,
    opts: &RunOptions<'_>,
    mut observe: impl FnMut(&SpectralState) -> Result<()>,
) -> Result<TrajectoryRecord> {
    if !(opts.t_end > 0.0 && opts.t_end.is_finite()) {
        return Err(Error::invalid("T", "horizon must be positive"));
    }
    if !(opts.dt > 0.0) || opts.dt > state.dtau() * (1.0 + 1e-12) {
        return Err(Error::invalid("dt", "time step must lie in (0, dτ]"));
    }
    if opts.sample_every == 0 {
        return Err(Error::invalid("sample_every", "must be at least 1"));
    }
    if let Some(w) = opts.norm {
        w.validate()?;
        if let Some(r) = opts.reference {
            if r.spec != state.spec {
                return Err(Error::MismatchedGrid { index: 0 });
            }
        }
    }
    let steps = (opts.t_end / opts.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = opts.t_end / steps as f64;
    let t0 = state.t;
    let mut rec = TrajectoryRecord { norms: opts.norm.map(|_| Vec::new()), ..Default::default() };
    let mut record = |s: &SpectralState, rec: &mut TrajectoryRecord| -> Result<()> {
        rec.times.push(s.t);
        rec.r_values.push(s.order_parameter());
        if let (Some(w), Some(ns)) = (opts.norm, rec.norms.as_mut()) {
            ns.push(weighted_state_norm(s, w, opts.reference));
        }
        observe(s)
    };
    record(state, &mut rec)?;
    for i in 1..=steps {
        state.step(dt)?;
        if i == steps {
            state.t = t0 + opts.t_end;
        }
        if i % opts.sample_every == 0 || i == steps {
            record(state, &mut rec)?;
        }
    }
    Ok(rec)
}

/// (Σ_ℓ ∫_{τ≥0} φ²(|u_ℓ|² + |u′_ℓ|²) dτ)^{1/2} for u = W − reference, by the
/// trapezoid rule with centered differences (one-sided at the ends).
pub fn weighted_state_norm(state: &SpectralState, w: WeightSpec, reference: Option<&SpectralState>) -> f64 {
    let spec = &state.spec;
    let (n, o, h) = (spec.nodes, spec.origin(), spec.dtau());
    let mut total = 0.0;
    let mut u = vec![ZERO; n - o];
    let phi2: Vec<f64> = (o..n).map(|k| w.eval(spec.tau(k)).powi(2)).collect();
    for l in 0..=spec.modes {
        let row = state.mode(l);
        for (j, k) in (o..n).enumerate() {
            let base = match reference {
                Some(r) => r.mode(l)[k],
                None if l == 0 => state.marginal[k],
                None => ZERO,
            };
            u[j] = row[k] - base;
        }
        let m = u.len();
        for j in 0..m {
            let d = if j == 0 {
                (u[1] - u[0]) / h
            } else if j == m - 1 {
                (u[m - 1] - u[m - 2]) / h
            } else {
                (u[j + 1] - u[j - 1]) / (2.0 * h)
            };
            let wt = if j == 0 || j == m - 1 { 0.5 * h } else { h };
            total += wt * phi2[j] * (u[j].norm_sqr() + d.norm_sqr());
        }
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cauchy() -> FrequencyMarginal {
        FrequencyMarginal::cauchy(1.0, 0.0).unwrap()
    }

    #[test]
    fn integer_shift_is_exact() {
        let src: Vec<Complex64> = (0..10).map(|k| Complex64::new(k as f64, -(k as f64))).collect();
        let mut dst = vec![ZERO; 10];
        shift_row(&src, &mut dst, 3.0);
        assert_eq!(dst[0], src[3]);
        assert_eq!(dst[6], src[9]);
        assert_eq!(dst[7], ZERO);
    }

    #[test]
    fn cubic_shift_reproduces_cubics_inside_bracket_range() {
        let p = |x: f64| 0.1 * x * x * x - x * x + 2.0;
        let src: Vec<Complex64> = (0..40).map(|k| Complex64::new(p(k as f64 * 0.1), 0.0)).collect();
        let mut dst = vec![ZERO; 40];
        shift_row(&src, &mut dst, 0.25);
        for k in 0..30 {
            assert!((dst[k].re - p((k as f64 + 0.25) * 0.1)).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn bump_sets_initial_order_parameter() {
        let s = init_state(&cauchy(), 1.0, GridSpec::default(), &[Perturbation::bump(1, 1e-3)]).unwrap();
        assert!((s.order_parameter().norm() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn oversized_perturbation_is_rejected() {
        let e = init_state(&cauchy(), 1.0, GridSpec::default(), &[Perturbation::bump(1, 1.5)]);
        assert!(matches!(e, Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn dt_above_grid_step_is_rejected() {
        let mut s = SpectralState::homogeneous(&cauchy(), 1.0, GridSpec::default()).unwrap();
        let dt = 2.0 * s.dtau();
        assert!(s.step(dt).is_err());
    }

    #[test]
    fn full_line_grid_centers_origin() {
        let spec = GridSpec { nodes: 401, tau_max: 10.0, grid: Grid::FullLine, modes: 4 };
        assert_eq!(spec.origin(), 200);
        assert!((spec.tau(0) + 10.0).abs() < 1e-12);
        assert!(spec.tau(200).abs() < 1e-15);
        let even = GridSpec { nodes: 400, ..spec };
        assert!(even.validate().is_err());
    }
}
