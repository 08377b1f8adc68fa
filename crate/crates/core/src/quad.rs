//! Adaptive Gauss–Kronrod quadrature for complex-valued integrands.

#[allow(unused_imports)]
use crate::prelude::*;
use crate::{Complex64, Error, Result};
use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel: (estimate, error estimate).
pub fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let est = kron * h;
    let err = ((kron - gauss) * h).norm();
    (est, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for Tol {
    fn default() -> Self {
        Tol {
            abs: 1e-12,
            rel: 1e-11,
            max_panels: 20_000,
        }
    }
}

impl Tol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tol {
            abs,
            rel,
            ..Tol::default()
        }
    }
}

/// Adaptive integration over a finite interval, bisecting the worst panel.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tol,
) -> Result<Complex64> {
    integrate_ref(&mut f, a, b, tol).map(|(v, _)| v)
}

/// Like [`integrate`] but also returns the error estimate.
pub fn integrate_ref<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: Tol,
) -> Result<(Complex64, f64)> {
    if a == b {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let (v, e) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let mut total = v;
    let mut err = e;
    while err > tol.abs.max(tol.rel * total.norm()) {
        if heap.len() >= tol.max_panels {
            return Err(Error::QuadratureFailed { estimate: err });
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Cannot split further; accept what we have.
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(f, p.a, m);
        let (v2, e2) = gk15(f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, err: e2 });
        if heap.len() % 64 == 0 {
            // Re-sum to keep roundoff from drifting.
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.err).sum();
        }
    }
    let total: Complex64 = heap.iter().map(|p| p.value).sum();
    let err: f64 = heap.iter().map(|p| p.err).sum();
    Ok((total, err))
}

/// Integral over `[a, ∞)` by panels of doubling width, truncated once a
/// panel contributes less than `tol.abs` and the integrand has fallen
/// below 1e-14 at the panel end.
pub fn integrate_to_infinity<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    first_width: f64,
    tol: Tol,
) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut lo = a;
    let mut w = first_width;
    let mut quiet = 0;
    for _ in 0..80 {
        let hi = lo + w;
        let (v, _) = integrate_ref(&mut f, lo, hi, Tol { abs: tol.abs * 0.1, ..tol })?;
        total += v;
        let tail = f(hi).norm();
        if v.norm() <= tol.abs.max(tol.rel * total.norm()) && tail < 1e-14 {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        w *= 2.0;
        if !lo.is_finite() {
            break;
        }
    }
    Err(Error::Divergence(alloc::format!(
        "integrand does not decay on [{a}, ∞)"
    )))
}

/// Integral over the whole real line, splitting at the given breakpoints
/// and mapping the two tails to finite intervals.
pub fn integrate_line<F: FnMut(f64) -> Complex64>(
    mut f: F,
    breakpoints: &[f64],
    scale: f64,
    tol: Tol,
) -> Result<Complex64> {
    let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * (1.0 + b.abs()));
    if pts.is_empty() {
        pts.push(0.0);
    }
    let sub = tol;
    let mut total = Complex64::new(0.0, 0.0);
    for w in pts.windows(2) {
        total += integrate_ref(&mut f, w[0], w[1], sub)?.0;
    }
    let lo = pts[0];
    let hi = pts[pts.len() - 1];
    let s = scale;
    // ω = hi + s·t/(1−t), t ∈ [0, 1)
    let mut right = |t: f64| {
        let d = 1.0 - t;
        f(hi + s * t / d) * (s / (d * d))
    };
    total += tail_integral(&mut right, sub)?;
    let mut left = |t: f64| {
        let d = 1.0 - t;
        f(lo - s * t / d) * (s / (d * d))
    };
    total += tail_integral(&mut left, sub)?;
    Ok(total)
}

/// Integral over `[a, ∞)` for algebraically decaying integrands, via the map
/// ω = a + s·t/(1−t).
pub fn integrate_from<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    scale: f64,
    tol: Tol,
) -> Result<Complex64> {
    let mut g = |t: f64| {
        let d = 1.0 - t;
        f(a + scale * t / d) * (scale / (d * d))
    };
    tail_integral(&mut g, tol)
}

fn tail_integral<F: FnMut(f64) -> Complex64>(f: &mut F, tol: Tol) -> Result<Complex64> {
    // Split near t = 1 so the compressed tail gets its own panels.
    let cuts = [0.0, 0.5, 0.9, 0.99, 0.999, 1.0];
    let mut total = Complex64::new(0.0, 0.0);
    for w in cuts.windows(2) {
        total += integrate_ref(f, w[0], w[1], tol)?.0;
    }
    Ok(total)
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tol) -> Result<f64> {
    integrate(|x| Complex64::new(f(x), 0.0), a, b, tol).map(|v| v.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate_real(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0, Tol::default()).unwrap();
        let exact = (256.0 - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_exponential() {
        // ∫_0^∞ e^{-(1+3i)t} dt = 1/(1+3i)
        let z = Complex64::new(1.0, 3.0);
        let v = integrate_to_infinity(|t| (-z * t).exp(), 0.0, 1.0, Tol::default()).unwrap();
        assert!((v - 1.0 / z).norm() < 1e-11);
    }

    #[test]
    fn lorentzian_over_line() {
        let v = integrate_line(
            |w| Complex64::new(1.0 / (core::f64::consts::PI * (1.0 + w * w)), 0.0),
            &[0.0],
            1.0,
            Tol::default(),
        )
        .unwrap();
        assert!((v.re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_decaying_is_divergent() {
        let r = integrate_to_infinity(|_| Complex64::new(1.0, 0.0), 0.0, 1.0, Tol::default());
        assert!(matches!(r, Err(Error::Divergence(_))));
    }
}
