//! Frequency marginals g(ω), their Fourier transforms ĝ(τ) = ∫ g e^{−iτω} dω,
//! and Laplace transforms of ĝ over the half line.

#[allow(unused_imports)]
use crate::prelude::*;
use crate::quad::{self, Tol};
use crate::{Complex64, Error, Result};
use alloc::vec::Vec;
use core::f64::consts::PI;

/// One Lorentzian component `weight · Δ/(π((ω−Ω)² + Δ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyComponent {
    pub weight: f64,
    pub center: f64,
    pub width: f64,
}

/// ĝ sampled on a uniform grid `τ_k = k·dτ`, `k = 0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedTransform {
    pub dtau: f64,
    pub values: Vec<Complex64>,
}

impl TabulatedTransform {
    pub fn tau_max(&self) -> f64 {
        self.dtau * (self.values.len() - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarginalKind {
    CauchyMixture(Vec<CauchyComponent>),
    Gaussian { sigma: f64 },
    Tabulated(TabulatedTransform),
}

/// A validated frequency marginal. Construct through the checked constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMarginal {
    kind: MarginalKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightSpec {
    /// φ(τ) = e^{aτ}
    Exponential(f64),
    /// φ(τ) = (1+τ)^b
    Polynomial(f64),
}

impl WeightSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightSpec::Exponential(a) if !(a > 0.0 && a.is_finite()) => {
                Err(Error::invalid("a", "exponential weight rate must be positive"))
            }
            WeightSpec::Polynomial(b) if !(b > 1.0 && b.is_finite()) => {
                Err(Error::invalid("b", "polynomial weight exponent must exceed 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        match *self {
            WeightSpec::Exponential(a) => (a * tau).exp(),
            WeightSpec::Polynomial(b) => (1.0 + tau).powf(b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    H1,
}

impl FrequencyMarginal {
    pub fn cauchy_mixture(components: Vec<CauchyComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("components", "at least one component is required"));
        }
        let mut sum = 0.0;
        for c in &components {
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(Error::invalid("c", alloc::format!("weight {} not in (0, 1]", c.weight)));
            }
            if !c.center.is_finite() {
                return Err(Error::invalid("omega", "center must be finite"));
            }
            if !(c.width > 0.0 && c.width.is_finite()) {
                return Err(Error::invalid("delta", alloc::format!("half-width {} must be positive", c.width)));
            }
            sum += c.weight;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("c", alloc::format!("weights sum to {sum}, not 1")));
        }
        Ok(FrequencyMarginal { kind: MarginalKind::CauchyMixture(components) })
    }

    pub fn cauchy(width: f64, center: f64) -> Result<Self> {
        Self::cauchy_mixture(alloc::vec![CauchyComponent { weight: 1.0, center, width }])
    }

    /// Equal-weight pair of Lorentzians centred at ±Ω.
    pub fn bi_cauchy(width: f64, omega: f64) -> Result<Self> {
        Self::cauchy_mixture(alloc::vec![
            CauchyComponent { weight: 0.5, center: -omega, width },
            CauchyComponent { weight: 0.5, center: omega, width },
        ])
    }

    /// `(1−α)·Cauchy(1, 0) + α·bi_cauchy(Δ, Ω)`.
    pub fn tri_cauchy(width: f64, omega: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", "mixing weight must lie in (0, 1)"));
        }
        Self::cauchy_mixture(alloc::vec![
            CauchyComponent { weight: 1.0 - alpha, center: 0.0, width: 1.0 },
            CauchyComponent { weight: 0.5 * alpha, center: -omega, width },
            CauchyComponent { weight: 0.5 * alpha, center: omega, width },
        ])
    }

    /// g(ω − Ω): the marginal seen from a frame rotating at −Ω.
    pub fn shifted(&self, omega: f64) -> Result<Self> {
        if omega == 0.0 {
            return Ok(self.clone());
        }
        match &self.kind {
            MarginalKind::CauchyMixture(cs) => Self::cauchy_mixture(
                cs.iter().map(|c| CauchyComponent { center: c.center + omega, ..*c }).collect(),
            ),
            _ => Err(Error::UnsupportedKind { operation: "shifted", kind: self.kind_name() }),
        }
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", "standard deviation must be positive"));
        }
        Ok(FrequencyMarginal { kind: MarginalKind::Gaussian { sigma } })
    }

    pub fn tabulated(dtau: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(dtau > 0.0 && dtau.is_finite()) {
            return Err(Error::invalid("dtau", "grid step must be positive"));
        }
        if values.len() < 2 {
            return Err(Error::invalid("table", "need at least two samples"));
        }
        if (values[0] - 1.0).norm() > 1e-10 {
            return Err(Error::invalid("table", "ĝ(0) must equal 1"));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite()) || v.norm() > 1.0 + 1e-9) {
            return Err(Error::invalid("table", "samples must be finite with modulus ≤ 1"));
        }
        Ok(FrequencyMarginal { kind: MarginalKind::Tabulated(TabulatedTransform { dtau, values }) })
    }

    pub fn kind(&self) -> &MarginalKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            MarginalKind::CauchyMixture(_) => "cauchy-mixture",
            MarginalKind::Gaussian { .. } => "gaussian",
            MarginalKind::Tabulated(_) => "tabulated",
        }
    }

    pub fn components(&self) -> Option<&[CauchyComponent]> {
        match &self.kind {
            MarginalKind::CauchyMixture(c) => Some(c),
            _ => None,
        }
    }

    /// Whether g(ω) = g(−ω).
    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            MarginalKind::CauchyMixture(cs) => cs.iter().all(|c| {
                c.center == 0.0
                    || cs.iter().any(|d| {
                        (d.center + c.center).abs() < 1e-14
                            && (d.width - c.width).abs() < 1e-14
                            && (d.weight - c.weight).abs() < 1e-14
                    })
            }),
            MarginalKind::Gaussian { .. } => true,
            MarginalKind::Tabulated(t) => t.values.iter().all(|v| v.im.abs() < 1e-14),
        }
    }

    /// Whether g is symmetric with a single maximum at 0 (so K_c = 2/(πg(0))).
    pub fn is_symmetric_unimodal(&self) -> bool {
        if !self.is_symmetric() {
            return false;
        }
        match &self.kind {
            MarginalKind::Gaussian { .. } => true,
            MarginalKind::CauchyMixture(cs) => {
                if cs.iter().all(|c| c.center == 0.0) {
                    return true;
                }
                // Sampled check of monotone decrease on ω ≥ 0.
                let span = cs.iter().map(|c| c.center.abs() + 4.0 * c.width).fold(0.0, f64::max);
                let mut prev = self.density_unchecked(0.0);
                for k in 1..=4000 {
                    let v = self.density_unchecked(span * k as f64 / 4000.0);
                    if v > prev * (1.0 + 1e-12) {
                        return false;
                    }
                    prev = v;
                }
                true
            }
            MarginalKind::Tabulated(_) => false,
        }
    }

    /// Decay rate of |ĝ| (abscissa of convergence of its Laplace transform, negated).
    pub fn min_width(&self) -> Option<f64> {
        self.components().map(|cs| cs.iter().map(|c| c.width).fold(f64::INFINITY, f64::min))
    }

    /// A frequency scale used to size contours and integration tails.
    pub fn scale(&self) -> f64 {
        match &self.kind {
            MarginalKind::CauchyMixture(cs) => {
                cs.iter().map(|c| c.center.abs() + c.width).fold(0.0, f64::max)
            }
            MarginalKind::Gaussian { sigma } => *sigma,
            MarginalKind::Tabulated(t) => PI / t.dtau.max(1e-3) * 0.1,
        }
    }

    fn density_unchecked(&self, w: f64) -> f64 {
        match &self.kind {
            MarginalKind::CauchyMixture(cs) => cs
                .iter()
                .map(|c| {
                    let d = w - c.center;
                    c.weight * c.width / (PI * (d * d + c.width * c.width))
                })
                .sum(),
            MarginalKind::Gaussian { sigma } => {
                (-0.5 * (w / sigma) * (w / sigma)).exp() / (sigma * (2.0 * PI).sqrt())
            }
            MarginalKind::Tabulated(_) => f64::NAN,
        }
    }

    /// Density g(ω).
    pub fn density(&self, w: f64) -> Result<f64> {
        if let MarginalKind::Tabulated(_) = self.kind {
            return Err(Error::UnsupportedKind { operation: "eval_density", kind: "tabulated" });
        }
        Ok(self.density_unchecked(w))
    }

    /// Fourier transform ĝ(τ).
    pub fn fourier(&self, tau: f64) -> Complex64 {
        match &self.kind {
            MarginalKind::CauchyMixture(cs) => cs
                .iter()
                .map(|c| Complex64::new(-c.width * tau.abs(), -c.center * tau).exp() * c.weight)
                .sum(),
            MarginalKind::Gaussian { sigma } => Complex64::new((-0.5 * sigma * sigma * tau * tau).exp(), 0.0),
            MarginalKind::Tabulated(t) => {
                let v = interp(t, tau.abs());
                if tau < 0.0 {
                    v.conj()
                } else {
                    v
                }
            }
        }
    }

    /// dĝ/dτ for τ > 0.
    pub fn fourier_derivative(&self, tau: f64) -> Complex64 {
        match &self.kind {
            MarginalKind::CauchyMixture(cs) => cs
                .iter()
                .map(|c| {
                    let s = Complex64::new(-c.width * tau.signum(), -c.center);
                    s * Complex64::new(-c.width * tau.abs(), -c.center * tau).exp() * c.weight
                })
                .sum(),
            MarginalKind::Gaussian { sigma } => {
                Complex64::new(-sigma * sigma * tau * (-0.5 * sigma * sigma * tau * tau).exp(), 0.0)
            }
            MarginalKind::Tabulated(t) => {
                let h = 0.5 * t.dtau;
                (self.fourier(tau + h) - self.fourier((tau - h).max(0.0))) / (tau + h - (tau - h).max(0.0))
            }
        }
    }

    /// ∫_0^∞ ĝ(τ) e^{−zτ} dτ.
    pub fn laplace(&self, z: Complex64) -> Result<Complex64> {
        match &self.kind {
            MarginalKind::CauchyMixture(cs) => {
                let abscissa = -cs.iter().map(|c| c.width).fold(f64::INFINITY, f64::min);
                if z.re <= abscissa {
                    return Err(Error::Divergence(alloc::format!(
                        "Re z = {} at or below the abscissa of convergence {}",
                        z.re, abscissa
                    )));
                }
                Ok(cs.iter().map(|c| c.weight / (z + Complex64::new(c.width, c.center))).sum())
            }
            MarginalKind::Gaussian { sigma } => {
                if z.re < 0.0 {
                    return Err(Error::Divergence("Re z < 0 for a numerically transformed marginal".into()));
                }
                let s = *sigma;
                let w = 12.0 / s;
                let tol = Tol::new(1e-13, 1e-11);
                quad::integrate(|t| (-z * t).exp() * (-0.5 * s * s * t * t).exp(), 0.0, w, tol)
            }
            MarginalKind::Tabulated(t) => {
                if z.re < 0.0 {
                    return Err(Error::Divergence("Re z < 0 for a numerically transformed marginal".into()));
                }
                Ok(tabulated_laplace(t, z))
            }
        }
    }

    /// Unweighted ‖ĝ‖_{L¹(ℝ⁺)}.
    pub fn l1_norm(&self) -> Result<f64> {
        let tol = Tol::new(1e-12, 1e-10);
        let f = |t: f64| Complex64::new(self.fourier(t).norm(), 0.0);
        match &self.kind {
            MarginalKind::Tabulated(t) => {
                let mut s = 0.0;
                for k in 0..t.values.len() - 1 {
                    let a = k as f64 * t.dtau;
                    s += quad::integrate(f, a, a + t.dtau, tol)?.re;
                }
                Ok(s)
            }
            MarginalKind::Gaussian { sigma } => Ok(quad::integrate_to_infinity(f, 0.0, 1.0 / sigma, tol)?.re),
            MarginalKind::CauchyMixture(_) => {
                Ok(quad::integrate_to_infinity(f, 0.0, 1.0 / self.min_width().unwrap(), tol)?.re)
            }
        }
    }

    /// ‖ĝ‖ in L¹_φ(ℝ⁺) or H¹_φ(ℝ⁺).
    pub fn weighted_norm(&self, w: WeightSpec, kind: NormKind) -> Result<f64> {
        w.validate()?;
        if let (MarginalKind::CauchyMixture(_), WeightSpec::Exponential(a)) = (&self.kind, w) {
            let d = self.min_width().unwrap();
            let limit = match kind {
                NormKind::L1 => d,
                NormKind::H1 => d,
            };
            if a >= limit {
                return Err(Error::Divergence(alloc::format!(
                    "weight rate {a} is not below the decay rate {d} of ĝ"
                )));
            }
        }
        let tol = Tol::new(1e-12, 1e-10);
        let integrand = |t: f64| {
            let p = w.eval(t);
            let v = match kind {
                NormKind::L1 => p * self.fourier(t).norm(),
                NormKind::H1 => p * p * (self.fourier(t).norm_sqr() + self.fourier_derivative(t).norm_sqr()),
            };
            Complex64::new(v, 0.0)
        };
        let v = match &self.kind {
            MarginalKind::Tabulated(t) => {
                let tm = t.tau_max();
                let n = t.values.len() - 1;
                let mut s = 0.0;
                // Piecewise integrand has kinks at nodes.
                for k in 0..n {
                    let a = k as f64 * t.dtau;
                    let b = (a + t.dtau).min(tm);
                    s += quad::integrate(integrand, a, b, Tol::new(1e-13, 1e-10))?.re;
                }
                s
            }
            MarginalKind::Gaussian { sigma } => {
                let first = 1.0 / sigma;
                quad::integrate_to_infinity(integrand, 0.0, first, tol)?.re
            }
            MarginalKind::CauchyMixture(_) => {
                let d = self.min_width().unwrap();
                let first = match w {
                    WeightSpec::Exponential(a) => 1.0 / (d - a),
                    WeightSpec::Polynomial(_) => 1.0 / d,
                };
                quad::integrate_to_infinity(integrand, 0.0, first, tol)?.re
            }
        };
        Ok(match kind {
            NormKind::L1 => v,
            NormKind::H1 => v.sqrt(),
        })
    }
}

fn interp(t: &TabulatedTransform, tau: f64) -> Complex64 {
    let x = tau / t.dtau;
    let n = t.values.len() - 1;
    if x >= n as f64 {
        return if x == n as f64 { t.values[n] } else { Complex64::new(0.0, 0.0) };
    }
    let k = x.floor() as usize;
    let f = x - k as f64;
    t.values[k] * (1.0 - f) + t.values[k + 1] * f
}

// (1 − e^{−w})/w and (1 − e^{−w}(1+w))/w², with series near w = 0.
fn e0(w: Complex64) -> Complex64 {
    if w.norm() < 1e-3 {
        Complex64::new(1.0, 0.0) - w / 2.0 + w * w / 6.0 - w * w * w / 24.0
    } else {
        (Complex64::new(1.0, 0.0) - (-w).exp()) / w
    }
}

fn e1(w: Complex64) -> Complex64 {
    if w.norm() < 1e-3 {
        Complex64::new(0.5, 0.0) - w / 3.0 + w * w / 8.0 - w * w * w / 30.0
    } else {
        (Complex64::new(1.0, 0.0) - (-w).exp() * (w + 1.0)) / (w * w)
    }
}

/// Exact Laplace transform of the piecewise-linear interpolant.
fn tabulated_laplace(t: &TabulatedTransform, z: Complex64) -> Complex64 {
    let h = t.dtau;
    let w = z * h;
    let a0 = e0(w);
    let a1 = e1(w);
    let step = (-w).exp();
    let mut shift = Complex64::new(1.0, 0.0);
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..t.values.len() - 1 {
        let (v0, v1) = (t.values[k], t.values[k + 1]);
        // ∫_0^h (v0 + (v1−v0)s/h) e^{−z s} ds = h[v0·E0 + (v1−v0)·E1]
        s += shift * (v0 * a0 + (v1 - v0) * a1) * h;
        shift *= step;
    }
    s
}
