//! Conditional activity of a device and the mean activity fixed point.

use libm::pow;

use crate::quad::{integrate, Tol};
use crate::sinr::{meta_ccdf, Moments, SuccessKernel};
use crate::{Error, Result, Scenario};

/// How a cluster shares its uplink between its devices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoadModel {
    /// Each device holds `1/N_d` of the band; an attempt lasts `N_d` slots.
    BandwidthSplit,
    /// Each device owns every `N_d`-th slot of the full band.
    TimeSplit,
}

impl LoadModel {
    pub const BOTH: [LoadModel; 2] = [LoadModel::BandwidthSplit, LoadModel::TimeSplit];

    pub fn number(self) -> u8 {
        match self {
            LoadModel::BandwidthSplit => 1,
            LoadModel::TimeSplit => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(LoadModel::BandwidthSplit),
            2 => Some(LoadModel::TimeSplit),
            _ => None,
        }
    }
}

/// Effective arrival parameter of the activity law.
fn arrival(load: LoadModel, n_d: u32, lambda_a: f64) -> f64 {
    match load {
        LoadModel::BandwidthSplit => n_d as f64 * lambda_a,
        LoadModel::TimeSplit => 1.0 - pow(1.0 - lambda_a, n_d as f64),
    }
}

/// With one device both load models behave identically.
fn effective(load: LoadModel, n_d: u32) -> LoadModel {
    if n_d == 1 {
        LoadModel::BandwidthSplit
    } else {
        load
    }
}

/// Probability that a device with success probability `p_s` occupies its
/// resource block in a given slot.
pub fn conditional_activity(load: LoadModel, s: &Scenario, p_s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_s) {
        return Err(Error::Domain { what: "success probability", value: p_s });
    }
    if !(0.0..=1.0).contains(&s.lambda_a) || s.n_d < 1 {
        return Err(Error::param("lambda_a", "must lie in [0, 1]"));
    }
    Ok(activity_law(load, s.n_d, s.lambda_a, p_s)?.clamp(0.0, 1.0))
}

fn activity_law(load: LoadModel, n_d: u32, lambda_a: f64, p_s: f64) -> Result<f64> {
    let load = effective(load, n_d);
    let lam = arrival(load, n_d, lambda_a);
    match load {
        LoadModel::BandwidthSplit => {
            if lam + p_s == 0.0 {
                return Err(Error::Domain { what: "activity with no arrivals and no success", value: 0.0 });
            }
            Ok(lam / (lam + p_s))
        }
        LoadModel::TimeSplit => Ok(p_s * lam + 1.0 - p_s),
    }
}

/// Right-hand side of the fixed point: the mean of the conditional activity
/// under the beta-approximated success distribution at `moments`.
pub fn activity_rhs(load: LoadModel, n_d: u32, lambda_a: f64, moments: &Moments) -> f64 {
    let load = effective(load, n_d);
    let lam = arrival(load, n_d, lambda_a);
    // activity > x  <=>  p_s < g(x); g = 1 below the kink x0
    let (x0, g): (f64, &dyn Fn(f64) -> f64) = match load {
        LoadModel::BandwidthSplit => (lam / (1.0 + lam), &move |x: f64| ((1.0 - x) * lam / x).clamp(0.0, 1.0)),
        LoadModel::TimeSplit => {
            if lam >= 1.0 {
                return 1.0;
            }
            (lam, &move |x: f64| ((1.0 - x) / (1.0 - lam)).clamp(0.0, 1.0))
        }
    };
    let mut tail = 0.0;
    if moments.beta_params().is_none() {
        // step law: F(g(x)) = 1{g(x) < m1}
        if let Some(xs) = step_point(load, lam, moments.m1) {
            tail = 1.0 - xs.max(x0);
        }
    } else {
        let below = x0 * meta_ccdf(moments, 1.0);
        tail = below + integrate(|x| meta_ccdf(moments, g(x)), x0, 1.0, Tol::new(1e-13, 1e-12)).value;
    }
    (1.0 - tail).clamp(0.0, 1.0)
}

/// The `x` at which `g(x)` crosses `m1`, if any.
fn step_point(load: LoadModel, lam: f64, m1: f64) -> Option<f64> {
    if m1 <= 0.0 {
        return None;
    }
    Some(match load {
        LoadModel::BandwidthSplit => lam / (lam + m1),
        LoadModel::TimeSplit => 1.0 - m1 * (1.0 - lam),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivitySolution {
    pub pi_bar: f64,
    pub iterations: usize,
    /// `|rhs(pi_bar) - pi_bar|` at the returned point.
    pub residual: f64,
    pub load_model: LoadModel,
    /// Moments of the success probability at `pi_bar`.
    pub moments: Moments,
}

pub fn solve_mean_activity(load: LoadModel, s: &Scenario, tol: f64, max_iter: usize) -> Result<ActivitySolution> {
    s.validate()?;
    let kernel = SuccessKernel::new(s)?;
    solve_with_kernel(&kernel, load, s.n_d, s.lambda_a, tol, max_iter)
}

/// Fixed point on a prebuilt kernel; `n_d` and `lambda_a` override the
/// kernel's scenario.
pub fn solve_with_kernel(
    kernel: &SuccessKernel,
    load: LoadModel,
    n_d: u32,
    lambda_a: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ActivitySolution> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if max_iter < 1 {
        return Err(Error::param("max_iter", "must be at least 1"));
    }
    if n_d < 1 {
        return Err(Error::param("n_d", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&lambda_a) {
        return Err(Error::param("lambda_a", "must lie in [0, 1]"));
    }
    let eval = |pi: f64| {
        let m = kernel.moments(pi);
        (activity_rhs(load, n_d, lambda_a, &m), m)
    };
    let done = |pi: f64, res: f64, it: usize, m: Moments| ActivitySolution {
        pi_bar: pi,
        iterations: it,
        residual: res,
        load_model: load,
        moments: m,
    };

    const OMEGA: f64 = 0.5;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut pi = lambda_a;
    let mut prev = pi;
    let mut last_res = f64::INFINITY;
    let mut swings = 0;
    let mut bisect = false;
    for it in 1..=max_iter {
        let (rhs, m) = eval(pi);
        let r = rhs - pi;
        if r.abs() <= tol {
            return Ok(done(pi, r.abs(), it, m));
        }
        // rhs is nondecreasing in pi, so the sign of r brackets the root
        if r > 0.0 {
            lo = lo.max(pi);
        } else {
            hi = hi.min(pi);
        }
        if !bisect {
            swings = if r.abs() >= last_res { swings + 1 } else { 0 };
            bisect = swings >= 4;
        }
        last_res = r.abs();
        prev = pi;
        pi = if bisect { 0.5 * (lo + hi) } else { ((1.0 - OMEGA) * pi + OMEGA * rhs).clamp(lo, hi) };
        if bisect && hi - lo <= f64::EPSILON {
            let (rhs, m) = eval(pi);
            return Ok(done(pi, (rhs - pi).abs(), it, m));
        }
    }
    Err(Error::NoConvergence { last: pi, previous: prev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Environment;
    use approx::assert_relative_eq;

    fn moments(m1: f64, m2: f64) -> Moments {
        Moments { m1, m2, pi_bar: 0.0, m2_quenched: m2 }
    }

    #[test]
    fn conditional_examples() {
        let mut s = Scenario::reference(Environment::Dense);
        s.lambda_a = 0.3;
        assert_relative_eq!(conditional_activity(LoadModel::BandwidthSplit, &s, 0.6).unwrap(), 0.3 / 0.9);
        s.n_d = 2;
        s.lambda_a = 0.5;
        assert_relative_eq!(conditional_activity(LoadModel::BandwidthSplit, &s, 0.8).unwrap(), 1.0 / 1.8);
        s.lambda_a = 1.0;
        assert_eq!(conditional_activity(LoadModel::TimeSplit, &s, 1.0).unwrap(), 1.0);
        s.lambda_a = 0.0;
        assert!(conditional_activity(LoadModel::BandwidthSplit, &s, 0.0).is_err());
        assert!(conditional_activity(LoadModel::BandwidthSplit, &s, 1.5).is_err());
    }

    #[test]
    fn rhs_matches_exact_mean_under_beta() {
        // E[lam/(lam+P)] for P ~ Beta(2, 2)
        let m = moments(0.5, 0.3);
        let rule = crate::quad::FixedRule::new(64);
        for &lam in &[0.1, 0.5, 2.0] {
            let exact = rule.integrate(|p| 6.0 * p * (1.0 - p) * lam / (lam + p), 0.0, 1.0);
            assert_relative_eq!(activity_rhs(LoadModel::BandwidthSplit, 1, lam, &m), exact, epsilon = 1e-10);
        }
        // time split is linear in P: 1 - (1 - lam'') m1
        let lam2 = 1.0 - 0.5f64 * 0.5;
        assert_relative_eq!(activity_rhs(LoadModel::TimeSplit, 2, 0.5, &m), 1.0 - (1.0 - lam2) * 0.5, epsilon = 1e-10);
    }

    #[test]
    fn rhs_degenerate_law() {
        let m = moments(0.8, 0.64);
        assert_relative_eq!(activity_rhs(LoadModel::BandwidthSplit, 2, 0.5, &m), 1.0 / 1.8, epsilon = 1e-14);
        assert_relative_eq!(activity_rhs(LoadModel::TimeSplit, 2, 0.5, &m), 0.8 * 0.75 + 0.2, epsilon = 1e-14);
        assert_eq!(activity_rhs(LoadModel::BandwidthSplit, 3, 0.0, &m), 0.0);
    }
}
