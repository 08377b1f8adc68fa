//! Ott–Antonsen manifold {f̂_ℓ = h^{∗ℓ} ∗ ĝ}: distance functionals
//! w_{n,m} = f̂_{n+m}∗ĝ − f̂_n∗f̂_m, manifold states, and the reduced
//! per-pole dynamics for Cauchy mixtures.
//!
//! On the manifold a Cauchy mixture gives W_ℓ(τ) = Σ_j c_j α_j^ℓ e^{−(Δ_j+iΩ_j)τ}
//! for τ ≥ 0. Substituting into the spectral equation yields
//!
//! dα_j/dt = −(Δ_j + iΩ_j)α_j + (K/2)(R − conj(R)·α_j²),   R = Σ_j c_j α_j = W_1(0),
//!
//! so the physical order parameter is r = conj(R).

#[allow(unused_imports)]
use crate::prelude::*;
use crate::freqdist::{CauchyComponent, FrequencyMarginal, MarginalKind};
use crate::pls::{pls_amplitudes, PlsBranchPoint};
use crate::spectral::{Grid, GridSpec, SpectralState, TrajectoryRecord};
use crate::{Complex64, Error, Result};
use alloc::vec;
use alloc::vec::Vec;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct OADeviation {
    pub n_max: usize,
    pub grid: GridSpec,
    /// w_{n,m} at index (n−1)·n_max + (m−1).
    pub w: Vec<Vec<Complex64>>,
    /// ‖w‖ in H¹_{e^{aτ}}(ℕ²×ℝ) with the 1/(nm) weighting.
    pub norm: f64,
}

impl OADeviation {
    pub fn get(&self, n: usize, m: usize) -> &[Complex64] {
        &self.w[(n - 1) * self.n_max + (m - 1)]
    }
}

/// Discrete (u∗v)(τ_k) = dτ Σ_i u(τ_i) v(τ_k − τ_i) on a symmetric grid.
fn convolve(u: &[Complex64], v: &[Complex64], origin: usize, h: f64) -> Vec<Complex64> {
    let n = u.len();
    let mut out = vec![ZERO; n];
    for (k, o) in out.iter_mut().enumerate() {
        // index of τ_k − τ_i is k − i + origin ∈ [0, n)
        let lo = (k + origin + 1).saturating_sub(n);
        let hi = (k + origin).min(n - 1);
        let mut s = ZERO;
        for i in lo..=hi {
            s += u[i] * v[k + origin - i];
        }
        *o = s * h;
    }
    out
}

/// w_{n,m} for 1 ≤ n, m ≤ n_max and the weighted norm with φ = e^{aτ}.
/// Needs a full-line state with at least 2·n_max modes.
pub fn deviation(state: &SpectralState, a: f64, n_max: usize) -> Result<OADeviation> {
    let spec = *state.grid();
    if spec.grid != Grid::FullLine {
        return Err(Error::invalid("grid", "deviations need f̂_ℓ on the full τ line"));
    }
    if n_max == 0 || 2 * n_max > spec.modes {
        return Err(Error::invalid("n_max", "state must carry modes up to 2·n_max"));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid("a", "weight rate must be positive"));
    }
    if a * spec.tau_max > 30.0 {
        return Err(Error::WeightOverflow(a * spec.tau_max));
    }
    let (o, h, nodes) = (spec.origin(), spec.dtau(), spec.nodes);
    let ghat = state.marginal();
    let mut with_g: Vec<Option<Vec<Complex64>>> = vec![None; 2 * n_max + 1];
    let mut w = vec![Vec::new(); n_max * n_max];
    for n in 1..=n_max {
        for m in n..=n_max {
            let l = n + m;
            if with_g[l].is_none() {
                with_g[l] = Some(convolve(state.mode(l), ghat, o, h));
            }
            let a_part = with_g[l].as_ref().unwrap();
            let b_part = convolve(state.mode(n), state.mode(m), o, h);
            let d: Vec<Complex64> = a_part.iter().zip(&b_part).map(|(x, y)| x - y).collect();
            w[(m - 1) * n_max + (n - 1)] = d.clone();
            w[(n - 1) * n_max + (m - 1)] = d;
        }
    }
    let weight: Vec<f64> = (0..nodes).map(|k| (2.0 * a * spec.tau(k)).exp()).collect();
    let mut total = 0.0;
    for n in 1..=n_max {
        for m in 1..=n_max {
            let u = &w[(n - 1) * n_max + (m - 1)];
            let mut s = 0.0;
            for k in 0..nodes {
                let d = if k == 0 {
                    (u[1] - u[0]) / h
                } else if k == nodes - 1 {
                    (u[k] - u[k - 1]) / h
                } else {
                    (u[k + 1] - u[k - 1]) / (2.0 * h)
                };
                let wt = if k == 0 || k == nodes - 1 { 0.5 * h } else { h };
                s += wt * weight[k] * (u[k].norm_sqr() + d.norm_sqr());
            }
            total += s / (n * m) as f64;
        }
    }
    Ok(OADeviation { n_max, grid: spec, w, norm: total.sqrt() })
}

/// ‖w(0)‖ at a − ε, a, a + ε: a finiteness report for the weighted band
/// around the target rate (nothing is enforced).
pub fn band_report(state: &SpectralState, a: f64, eps: f64, n_max: usize) -> Result<[f64; 3]> {
    Ok([
        deviation(state, (a - eps).max(1e-12), n_max)?.norm,
        deviation(state, a, n_max)?.norm,
        deviation(state, a + eps, n_max)?.norm,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCheck {
    /// Least-squares exponential rate of ‖w(t)‖.
    pub rate: f64,
    /// Rate requirement met (rate ≥ 0.9a), or vacuous on the manifold.
    pub passed: bool,
    /// ‖w(t)‖ ≤ ‖w(0)‖ e^{−0.9 a t} at every sample.
    pub inequality_holds: bool,
    pub vacuous: bool,
}

/// Checks ‖w(t)‖ ≤ ‖w(0)‖e^{−at} with a 10% rate margin from (t, ‖w‖) samples.
pub fn decay_check(samples: &[(f64, f64)], a: f64) -> Result<DecayCheck> {
    if samples.len() < 10 {
        return Err(Error::invalid("samples", "need at least 10 deviation samples"));
    }
    let (t0, w0) = samples[0];
    if samples.iter().all(|s| s.1 < 1e-7) {
        return Ok(DecayCheck { rate: f64::INFINITY, passed: true, inequality_holds: true, vacuous: true });
    }
    let req = 0.9 * a;
    let inequality_holds = samples.iter().all(|&(t, w)| w <= w0 * (-req * (t - t0)).exp() * (1.0 + 1e-12));
    let pts: Vec<(f64, f64)> = samples.iter().filter(|s| s.1 > 0.0).map(|&(t, w)| (t, w.ln())).collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let rate = -sxy / sxx;
    Ok(DecayCheck { rate, passed: rate >= req, inequality_holds, vacuous: false })
}

fn cauchy_components<'a>(g: &'a FrequencyMarginal, op: &'static str) -> Result<&'a [CauchyComponent]> {
    match g.kind() {
        MarginalKind::CauchyMixture(cs) => Ok(cs),
        _ => Err(Error::UnsupportedKind { operation: op, kind: g.kind_name() }),
    }
}

/// W_ℓ from per-pole amplitudes. On a half-line grid any amplitudes are
/// allowed; a full-line grid needs one common amplitude α (h = α·δ_0,
/// W_ℓ = α^ℓ ĝ on all of ℝ), since τ < 0 is not determined by pole values.
pub fn manifold_state(
    g: &FrequencyMarginal,
    coupling: f64,
    spec: GridSpec,
    amplitudes: &[Complex64],
) -> Result<SpectralState> {
    let cs = cauchy_components(g, "manifold_state")?;
    if amplitudes.len() != cs.len() {
        return Err(Error::invalid("amplitudes", "need one amplitude per Cauchy component"));
    }
    if amplitudes.iter().any(|a| !(a.norm() <= 1.0)) {
        return Err(Error::invalid("amplitudes", "amplitudes must satisfy |α| ≤ 1"));
    }
    spec.validate()?;
    let rows: Vec<Vec<Complex64>> = match spec.grid {
        Grid::HalfLine => (1..=spec.modes)
            .map(|l| {
                (0..spec.nodes)
                    .map(|k| {
                        let tau = spec.tau(k);
                        cs.iter()
                            .zip(amplitudes)
                            .map(|(c, a)| a.powu(l as u32) * Complex64::new(-c.width * tau, -c.center * tau).exp() * c.weight)
                            .sum()
                    })
                    .collect()
            })
            .collect(),
        Grid::FullLine => {
            let a0 = amplitudes[0];
            if amplitudes.iter().any(|a| *a != a0) {
                return Err(Error::invalid(
                    "amplitudes",
                    "full-line manifold states need one common amplitude",
                ));
            }
            (1..=spec.modes)
                .map(|l| (0..spec.nodes).map(|k| a0.powu(l as u32) * g.fourier(spec.tau(k))).collect())
                .collect()
        }
    };
    SpectralState::from_modes(g, coupling, spec, &rows)
}

/// The PLS in OA form (half-line grid), in its co-rotating frame: the
/// returned state carries the shifted marginal g(ω − Ω).
pub fn manifold_pls(g: &FrequencyMarginal, p: &PlsBranchPoint, spec: GridSpec) -> Result<SpectralState> {
    cauchy_components(g, "manifold_pls")?;
    if spec.grid != Grid::HalfLine {
        return Err(Error::invalid("grid", "PLS manifold states are built on the half line"));
    }
    let amps = pls_amplitudes(g, p.coupling, p.r, p.omega)?;
    manifold_state(&g.shifted(p.omega)?, p.coupling, spec, &amps)
}

/// Reduced OA system for a Cauchy mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOA {
    pub components: Vec<CauchyComponent>,
    pub amplitudes: Vec<Complex64>,
    pub coupling: f64,
    pub t: f64,
}

impl ReducedOA {
    pub fn new(g: &FrequencyMarginal, coupling: f64, amplitudes: Vec<Complex64>) -> Result<Self> {
        let cs = cauchy_components(g, "reduced_oa")?;
        if amplitudes.len() != cs.len() {
            return Err(Error::invalid("amplitudes", "need one amplitude per Cauchy component"));
        }
        if amplitudes.iter().any(|a| !(a.norm() <= 1.0 + 1e-9)) {
            return Err(Error::invalid("amplitudes", "amplitudes must satisfy |α| ≤ 1"));
        }
        Ok(ReducedOA { components: cs.to_vec(), amplitudes, coupling, t: 0.0 })
    }

    /// R = Σ c_j α_j (= W_1(0)).
    pub fn pole_mean(&self) -> Complex64 {
        self.components.iter().zip(&self.amplitudes).map(|(c, a)| a * c.weight).sum()
    }

    /// Physical order parameter r = conj(R).
    pub fn order_parameter(&self) -> Complex64 {
        self.pole_mean().conj()
    }

    fn rhs_at(&self, a: &[Complex64], out: &mut [Complex64]) {
        let big_r: Complex64 = self.components.iter().zip(a).map(|(c, a)| a * c.weight).sum();
        let hk = 0.5 * self.coupling;
        for ((o, c), a) in out.iter_mut().zip(&self.components).zip(a) {
            *o = -Complex64::new(c.width, c.center) * a + (big_r - big_r.conj() * a * a) * hk;
        }
    }

    /// dα_j/dt at the current amplitudes.
    pub fn rhs(&self) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.amplitudes.len()];
        self.rhs_at(&self.amplitudes, &mut out);
        out
    }

    /// RK4 to t_end with step t_end/⌈t_end/dt⌉; records the physical r.
    pub fn integrate(&mut self, t_end: f64, dt: f64, sample_every: usize) -> Result<TrajectoryRecord> {
        if !(t_end > 0.0 && dt > 0.0) || sample_every == 0 {
            return Err(Error::invalid("dt", "need positive horizon, step and sampling stride"));
        }
        let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
        let h = t_end / steps as f64;
        let n = self.amplitudes.len();
        let (mut k1, mut k2, mut k3, mut k4) = (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
        let mut y = vec![ZERO; n];
        let mut rec = TrajectoryRecord::default();
        let t0 = self.t;
        rec.times.push(self.t);
        rec.r_values.push(self.order_parameter());
        for i in 1..=steps {
            let a = self.amplitudes.clone();
            self.rhs_at(&a, &mut k1);
            for j in 0..n {
                y[j] = a[j] + k1[j] * (0.5 * h);
            }
            self.rhs_at(&y, &mut k2);
            for j in 0..n {
                y[j] = a[j] + k2[j] * (0.5 * h);
            }
            self.rhs_at(&y, &mut k3);
            for j in 0..n {
                y[j] = a[j] + k3[j] * h;
            }
            self.rhs_at(&y, &mut k4);
            for j in 0..n {
                self.amplitudes[j] = a[j] + (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
            }
            self.t = t0 + i as f64 * h;
            for (j, a) in self.amplitudes.iter().enumerate() {
                if a.norm() > 1.0 + 1e-9 {
                    return Err(Error::BlowUp { time: self.t, mode: j, modulus: a.norm() });
                }
            }
            if i % sample_every == 0 || i == steps {
                rec.times.push(self.t);
                rec.r_values.push(self.order_parameter());
            }
        }
        Ok(rec)
    }
}
