//! Adaptive Gauss-Kronrod and fixed Gauss-Legendre rules.

use alloc::vec::Vec;
use libm::{cos, fabs};

use crate::{Error, Result};

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
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

impl Estimate {
    pub fn into_result(self, requested: f64) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Quadrature { requested, achieved: self.error })
        }
    }
}

/// Integration tolerance and refinement budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tol {
    pub const fn abs(abs: f64) -> Self {
        Tol { abs, rel: 0.0, max_intervals: 400 }
    }

    pub const fn new(abs: f64, rel: f64) -> Self {
        Tol { abs, rel, max_intervals: 400 }
    }

    fn met(&self, value: f64, error: f64) -> bool {
        error <= self.abs.max(self.rel * fabs(value))
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, fabs((k - g) * h))
}

/// Adaptive 15-point Gauss-Kronrod on `[a, b]`, bisecting the worst interval.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tol) -> Estimate {
    if a == b {
        return Estimate { value: 0.0, error: 0.0, converged: true };
    }
    let (v, e) = kronrod(&mut f, a, b);
    let mut parts: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, v, e)];
    let (mut value, mut error) = (v, e);
    while !tol.met(value, error) && parts.len() < tol.max_intervals {
        let worst = parts.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).map(|(i, _)| i).unwrap_or(0);
        let (lo, hi, pv, pe) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval cannot be split further
            parts.push((lo, hi, pv, pe));
            break;
        }
        let (v1, e1) = kronrod(&mut f, lo, mid);
        let (v2, e2) = kronrod(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
        value = parts.iter().map(|p| p.2).sum();
        error = parts.iter().map(|p| p.3).sum();
    }
    let converged = tol.met(value, error) && value.is_finite();
    Estimate { value, error, converged }
}

/// Integrate over consecutive breakpoints `pts[0] < pts[1] < ...`, splitting
/// the tolerance evenly.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, pts: &[f64], tol: Tol) -> Estimate {
    let n = pts.len().saturating_sub(1).max(1) as f64;
    let piece_tol = Tol { abs: tol.abs / n, ..tol };
    let mut out = Estimate { value: 0.0, error: 0.0, converged: true };
    for w in pts.windows(2) {
        let e = integrate(&mut f, w[0], w[1], piece_tol);
        out.value += e.value;
        out.error += e.error;
        out.converged &= e.converged;
    }
    out
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = cos(core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if fabs(dz) < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fixed Gauss-Legendre rule mapped to an interval.
#[derive(Debug, Clone)]
pub struct FixedRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl FixedRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        FixedRule { x, w }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.x.iter().zip(&self.w).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_exact() {
        let e = integrate(|x| x * x * x - 2.0 * x, 0.0, 3.0, Tol::abs(1e-13));
        assert!(e.converged);
        assert_relative_eq!(e.value, 81.0 / 4.0 - 9.0, epsilon = 1e-12);
    }

    #[test]
    fn peaked_integrand_refines() {
        let e = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tol::new(1e-10, 1e-12));
        assert!(e.converged);
        let exact = 2.0 * libm::atan(1.0 / 1e-2) / 1e-2;
        assert_relative_eq!(e.value, exact, max_relative = 1e-10);
    }

    #[test]
    fn budget_exhausted_reports_failure() {
        let tol = Tol { abs: 1e-14, rel: 0.0, max_intervals: 3 };
        let e = integrate(|x| libm::sqrt(x), 0.0, 1.0, tol);
        assert!(!e.converged);
        assert!(matches!(e.into_result(1e-14), Err(Error::Quadrature { .. })));
    }

    #[test]
    fn legendre_rules() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let deg = 2 * n - 1;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * libm::pow(*x, deg as f64 - 1.0)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert_relative_eq!(q, exact, epsilon = 1e-12);
        }
        let r = FixedRule::new(64);
        assert_relative_eq!(r.integrate(libm::exp, 0.0, 1.0), core::f64::consts::E - 1.0, epsilon = 1e-14);
    }
}
