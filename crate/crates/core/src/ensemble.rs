//! Finite-N Kuramoto system dθ_i/dt = ω_i + K·Im(r e^{−iθ_i}),
//! r = (1/N) Σ_j e^{iθ_j}, integrated with classical RK4 in O(N) per stage.
//!
//! Work is split into fixed chunks of [`CHUNK`] oscillators. Each RK4 stage
//! is one fused pass per chunk returning the chunk's partial sum of e^{iθ};
//! partial sums are always added in chunk order, so any [`Executor`] that
//! preserves that order gives bitwise-identical trajectories.

#[allow(unused_imports)]
use crate::prelude::*;
use crate::freqdist::{FrequencyMarginal, MarginalKind};
use crate::spectral::TrajectoryRecord;
use crate::{Complex64, Error, Result};
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseInit {
    Uniform,
    /// Phase density (1 + ε cos θ)/(2π), 0 ≤ ε < 1; r(0) ≈ ε/2.
    Bump(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorEnsemble {
    theta: Vec<f64>,
    omega: Vec<f64>,
    pub coupling: f64,
    pub t: f64,
}

trait Wrap {
    fn wrap(self) -> f64;
}

impl Wrap for f64 {
    /// Reduction to [0, 2π).
    #[inline]
    fn wrap(self) -> f64 {
        let r = self % TAU;
        if r < 0.0 {
            let w = r + TAU;
            if w < TAU { w } else { 0.0 }
        } else {
            r
        }
    }
}

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse of Φ, the standard normal CDF: rational initial guess refined by
/// Halley steps on erfc.
fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2,
        1.383577518672690e2, -3.066479806614716e1, 2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2,
        6.680131188771972e1, -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838,
        -2.549732539343734, 4.374664141464968, 2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let mut x = if p < 0.02425 {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - 0.02425 {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..2 {
        let e = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2) - p;
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Solves θ + ε sin θ = 2πu on [0, 2π).
fn bump_phase(u: f64, eps: f64) -> f64 {
    let target = TAU * u;
    let mut th = target;
    for _ in 0..50 {
        let f = th + eps * th.sin() - target;
        let step = f / (1.0 + eps * th.cos());
        th -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    th.wrap()
}

/// Draws ω_i from g and θ_i from the requested phase law, deterministically in `seed`.
pub fn sample_ensemble(g: &FrequencyMarginal, n: usize, seed: u64, init: PhaseInit) -> Result<OscillatorEnsemble> {
    if n < 2 {
        return Err(Error::invalid("N", "need at least two oscillators"));
    }
    if let PhaseInit::Bump(eps) = init {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::invalid("epsilon", "bump amplitude must lie in [0, 1)"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega: Vec<f64> = match g.kind() {
        MarginalKind::CauchyMixture(cs) => (0..n)
            .map(|_| {
                let (u, v) = (uniform01(&mut rng), uniform01(&mut rng));
                let mut acc = 0.0;
                let c = cs
                    .iter()
                    .find(|c| {
                        acc += c.weight;
                        u < acc
                    })
                    .unwrap_or(&cs[cs.len() - 1]);
                c.center + c.width * (PI * (v - 0.5)).tan()
            })
            .collect(),
        MarginalKind::Gaussian { sigma } => (0..n)
            .map(|_| {
                let u = uniform01(&mut rng).max(f64::MIN_POSITIVE);
                sigma * normal_quantile(u)
            })
            .collect(),
        MarginalKind::Tabulated(_) => {
            return Err(Error::UnsupportedKind { operation: "sample_ensemble", kind: "tabulated" })
        }
    };
    let theta = (0..n)
        .map(|_| {
            let u = uniform01(&mut rng);
            match init {
                PhaseInit::Uniform => TAU * u,
                PhaseInit::Bump(eps) => bump_phase(u, eps),
            }
        })
        .collect();
    Ok(OscillatorEnsemble { theta, omega, coupling: 0.0, t: 0.0 })
}

impl OscillatorEnsemble {
    pub fn new(theta: Vec<f64>, omega: Vec<f64>, coupling: f64) -> Result<Self> {
        if theta.len() != omega.len() {
            return Err(Error::MismatchedGrid { index: theta.len().min(omega.len()) });
        }
        if theta.len() < 2 {
            return Err(Error::invalid("N", "need at least two oscillators"));
        }
        let theta = theta.into_iter().map(|t| t.wrap()).collect();
        Ok(OscillatorEnsemble { theta, omega, coupling, t: 0.0 })
    }

    pub fn with_coupling(mut self, k: f64) -> Self {
        self.coupling = k;
        self
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.theta
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.omega
    }

    /// Rotates every phase by `shift`.
    pub fn rotate(&mut self, shift: f64) {
        for t in &mut self.theta {
            *t = (*t + shift).wrap();
        }
    }

    /// Adds Ω to every natural frequency (a new ensemble; frequencies are
    /// otherwise immutable).
    pub fn boosted(&self, omega: f64) -> Self {
        let mut e = self.clone();
        for w in &mut e.omega {
            *w += omega;
        }
        e
    }

    /// r = (1/N) Σ e^{iθ_j}, summed in chunk order.
    pub fn order_parameter(&self) -> Complex64 {
        let sums: Vec<Complex64> = self.theta.chunks(CHUNK).map(measure).collect();
        finish(&sums, self.theta.len())
    }
}

/// Per-oscillator integration state. `cos`/`sin` cache e^{i·p} at the
/// current stage point p, so each RK4 stage evaluates one `sin_cos`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Osc {
    pub theta: f64,
    pub omega: f64,
    pub y: f64,
    pub acc: f64,
    pub cos: f64,
    pub sin: f64,
}

/// One fused RK4 pass; `a` weights the stage slope into the accumulator and
/// `b` places the next stage point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stage {
    First { r: Complex64, k: f64, a: f64, b: f64 },
    Middle { r: Complex64, k: f64, a: f64, b: f64 },
    Last { r: Complex64, k: f64, a: f64 },
}

fn measure(theta: &[f64]) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for &th in theta {
        let (s, c) = th.sin_cos();
        sum += Complex64::new(c, s);
    }
    sum
}

/// Runs the stage on one chunk; returns Σ e^{ip} over the chunk's new stage
/// point p (the updated θ for `Last`).
pub fn stage_chunk(osc: &mut [Osc], stage: Stage) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let slope = |r: Complex64, k: f64, o: &Osc| o.omega + k * (r.im * o.cos - r.re * o.sin);
    match stage {
        Stage::First { r, k, a, b } => {
            for o in osc.iter_mut() {
                let d = slope(r, k, o);
                o.acc = o.theta + a * d;
                o.y = o.theta + b * d;
                (o.sin, o.cos) = o.y.sin_cos();
                sum += Complex64::new(o.cos, o.sin);
            }
        }
        Stage::Middle { r, k, a, b } => {
            for o in osc.iter_mut() {
                let d = slope(r, k, o);
                o.acc += a * d;
                o.y = o.theta + b * d;
                (o.sin, o.cos) = o.y.sin_cos();
                sum += Complex64::new(o.cos, o.sin);
            }
        }
        Stage::Last { r, k, a } => {
            for o in osc.iter_mut() {
                let d = slope(r, k, o);
                o.theta = (o.acc + a * d).wrap();
                (o.sin, o.cos) = o.theta.sin_cos();
                sum += Complex64::new(o.cos, o.sin);
            }
        }
    }
    sum
}

/// Applies [`stage_chunk`] to consecutive [`CHUNK`]-sized pieces and returns
/// the partial sums in chunk order.
pub trait Executor {
    fn map_chunks(&self, osc: &mut [Osc], stage: Stage) -> Vec<Complex64>;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_chunks(&self, osc: &mut [Osc], stage: Stage) -> Vec<Complex64> {
        osc.chunks_mut(CHUNK).map(|c| stage_chunk(c, stage)).collect()
    }
}

/// Mean of e^{iθ} from ordered partial sums.
pub fn finish(partials: &[Complex64], n: usize) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for p in partials {
        s += *p;
    }
    s / n as f64
}

/// Integrates to t_end with step t_end/⌈t_end/dt⌉, recording r every
/// `sample_every` steps (and at t = 0 and t_end).
pub fn integrate_ensemble(e: &mut OscillatorEnsemble, t_end: f64, dt: f64, sample_every: usize) -> Result<TrajectoryRecord> {
    integrate_ensemble_with(e, t_end, dt, sample_every, &Sequential)
}

pub fn integrate_ensemble_with<E: Executor>(
    e: &mut OscillatorEnsemble,
    t_end: f64,
    dt: f64,
    sample_every: usize,
    exec: &E,
) -> Result<TrajectoryRecord> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("T", "horizon must be positive"));
    }
    if !(dt > 0.0) || dt > 0.01 / e.coupling.abs().max(1.0) * (1.0 + 1e-12) {
        return Err(Error::invalid("dt", "time step must lie in (0, 0.01/max(1, K)]"));
    }
    if sample_every == 0 {
        return Err(Error::invalid("sample_every", "must be at least 1"));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let n = e.theta.len();
    let k = e.coupling;
    let mut osc: Vec<Osc> = e
        .theta
        .iter()
        .zip(&e.omega)
        .map(|(&theta, &omega)| {
            let (sin, cos) = theta.sin_cos();
            Osc { theta, omega, cos, sin, ..Osc::default() }
        })
        .collect();
    let t0 = e.t;
    let mut r = e.order_parameter();
    let mut rec = TrajectoryRecord::default();
    rec.times.push(e.t);
    rec.r_values.push(r);
    for i in 1..=steps {
        let r1 = finish(&exec.map_chunks(&mut osc, Stage::First { r, k, a: h / 6.0, b: 0.5 * h }), n);
        let r2 = finish(&exec.map_chunks(&mut osc, Stage::Middle { r: r1, k, a: h / 3.0, b: 0.5 * h }), n);
        let r3 = finish(&exec.map_chunks(&mut osc, Stage::Middle { r: r2, k, a: h / 3.0, b: h }), n);
        r = finish(&exec.map_chunks(&mut osc, Stage::Last { r: r3, k, a: h / 6.0 }), n);
        e.t = t0 + i as f64 * h;
        if i % sample_every == 0 || i == steps {
            rec.times.push(e.t);
            rec.r_values.push(r);
        }
    }
    for (t, o) in e.theta.iter_mut().zip(&osc) {
        *t = o.theta;
    }
    Ok(rec)
}

/// max_{t ≤ horizon} |r_a(t) − r_b(t)| over samples present in both records.
pub fn compare_to_continuum(a: &TrajectoryRecord, b: &TrajectoryRecord, horizon: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < a.times.len() && a.times[i] <= horizon + 1e-9 {
        let tb = *b.times.get(i).ok_or(Error::MismatchedGrid { index: i })?;
        if (a.times[i] - tb).abs() > 1e-9 * a.times[i].abs().max(1.0) {
            return Err(Error::MismatchedGrid { index: i });
        }
        worst = worst.max((a.r_values[i] - b.r_values[i]).norm());
        i += 1;
    }
    if i < b.times.len() && b.times[i] <= horizon + 1e-9 {
        return Err(Error::MismatchedGrid { index: i });
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-10, 1e-3, 0.02, 0.3, 0.5, 0.8, 0.99, 1.0 - 1e-9] {
            let x = normal_quantile(p);
            let back = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2);
            assert!((back - p).abs() < 1e-14 * p.max(1e-2) / 1e-2 + 1e-15, "p={p}");
        }
    }

    #[test]
    fn bump_phase_inverts_cdf() {
        for &u in &[0.0, 0.1, 0.5, 0.77, 0.999] {
            let th = bump_phase(u, 0.4);
            assert!(((th + 0.4 * th.sin()) / TAU - u).abs() < 1e-12);
        }
    }
}
