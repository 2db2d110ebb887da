//! Peak age of information: distributions and means for both load models
//! and both device modes.
//!
//! Times are counted in slots. `Δ` under bandwidth splitting is the
//! inter-delivery time `G + N_d K` with `G, K ≥ 1` geometric; under time
//! splitting `Δ'` is `G + 1 + N_d J` with `J ≥ 0`, the inter-delivery time
//! without the wait for the device's own slot.

use alloc::vec::Vec;
use core::cell::Cell;

use libm::pow;

use crate::activity::LoadModel;
use crate::quad::{integrate_pieces, Tol};
use crate::sinr::SuccessLaw;
use crate::{Error, Result, Scenario};

/// Mass below which a CCDF tail is summed analytically.
const TAIL: f64 = 1e-13;
/// Hard cap on explicitly summed terms.
const MAX_TERMS: u64 = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceMode {
    /// All devices sample one process; the UAV keeps the freshest update.
    Correlated,
    /// Each device samples its own process.
    Uncorrelated,
}

impl DeviceMode {
    pub const BOTH: [DeviceMode; 2] = [DeviceMode::Correlated, DeviceMode::Uncorrelated];

    pub fn name(self) -> &'static str {
        match self {
            DeviceMode::Correlated => "correlated",
            DeviceMode::Uncorrelated => "uncorrelated",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::BOTH.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Approx,
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaoiSummary {
    /// Mean peak age in slots.
    pub mean_paoi: f64,
    /// `None` for the single-device law, which both load models share.
    pub load_model: Option<LoadModel>,
    pub device_mode: DeviceMode,
    pub n_d: u32,
    pub lambda_a: f64,
    pub method: Method,
}

impl PaoiSummary {
    /// Mean peak age in the scenario's time unit.
    pub fn mean_time(&self, slot: f64) -> f64 {
        self.mean_paoi * slot
    }
}

fn check(p_s: f64, lambda_a: f64, n_d: u32) -> Result<()> {
    if !(p_s > 0.0 && p_s <= 1.0) {
        return Err(Error::Domain { what: "success probability", value: p_s });
    }
    if !(lambda_a > 0.0 && lambda_a <= 1.0) {
        return Err(Error::Domain { what: "arrival probability", value: lambda_a });
    }
    if n_d < 1 {
        return Err(Error::param("n_d", "must be at least 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Lm1,
    Lm2Prime,
}

/// `P(transmission part > j)`.
#[inline]
fn service_ccdf(kind: Kind, q: f64, n_d: u32, j: u64) -> f64 {
    let n = n_d as u64;
    match kind {
        Kind::Lm1 => pow(q, (j / n) as f64),
        Kind::Lm2Prime => {
            if j == 0 {
                1.0
            } else {
                pow(q, ((j - 1) / n + 1) as f64)
            }
        }
    }
}

fn ccdf_at(kind: Kind, p_s: f64, lambda_a: f64, n_d: u32, n: u64) -> f64 {
    let (a, q) = (1.0 - lambda_a, 1.0 - p_s);
    let mut f = 1.0;
    for k in 1..=n {
        f = a * f + lambda_a * service_ccdf(kind, q, n_d, k - 1);
    }
    f.clamp(0.0, 1.0)
}

/// PMF of the bandwidth-split inter-delivery time at `n` slots.
pub fn paoi_pmf_lm1(p_s: f64, lambda_a: f64, n_d: u32, n: u64) -> Result<f64> {
    check(p_s, lambda_a, n_d)?;
    let nd = n_d as u64;
    let mut sum = 0.0;
    // n = n1 + n2 N_d with n1, n2 >= 1
    let mut n2 = 1;
    while n2 * nd < n {
        let n1 = n - n2 * nd;
        sum += lambda_a * p_s * pow(1.0 - lambda_a, (n1 - 1) as f64) * pow(1.0 - p_s, (n2 - 1) as f64);
        n2 += 1;
    }
    Ok(sum)
}

pub fn paoi_ccdf_lm1(p_s: f64, lambda_a: f64, n_d: u32, n: u64) -> Result<f64> {
    check(p_s, lambda_a, n_d)?;
    Ok(ccdf_at(Kind::Lm1, p_s, lambda_a, n_d, n))
}

/// PMF of the time-split inter-delivery time without the slot wait.
pub fn delta_prime_pmf_lm2(p_s: f64, lambda_a: f64, n_d: u32, n: u64) -> Result<f64> {
    check(p_s, lambda_a, n_d)?;
    if n < 2 {
        return Ok(0.0);
    }
    let nd = n_d as u64;
    let mut sum = 0.0;
    for n1 in 0..=(n - 2) / nd {
        sum += lambda_a * p_s * pow(1.0 - lambda_a, (n - 2 - nd * n1) as f64) * pow(1.0 - p_s, n1 as f64);
    }
    Ok(sum)
}

pub fn delta_prime_ccdf_lm2(p_s: f64, lambda_a: f64, n_d: u32, n: u64) -> Result<f64> {
    check(p_s, lambda_a, n_d)?;
    Ok(ccdf_at(Kind::Lm2Prime, p_s, lambda_a, n_d, n))
}

/// Integer-supported law with an explicit head and an analytic tail.
#[derive(Debug, Clone, PartialEq)]
pub struct PaoiDistribution {
    pub support_start: u64,
    /// `pmf[i]` is the mass at `support_start + i`.
    pub pmf: Vec<f64>,
    /// First `n` whose mass is folded into `tail_mass`.
    pub tail_truncation: u64,
    pub tail_mass: f64,
    mean: f64,
}

impl PaoiDistribution {
    pub fn lm1(p_s: f64, lambda_a: f64, n_d: u32) -> Result<Self> {
        check(p_s, lambda_a, n_d)?;
        Ok(Self::build(Kind::Lm1, p_s, lambda_a, n_d))
    }

    pub fn lm2_prime(p_s: f64, lambda_a: f64, n_d: u32) -> Result<Self> {
        check(p_s, lambda_a, n_d)?;
        Ok(Self::build(Kind::Lm2Prime, p_s, lambda_a, n_d))
    }

    fn build(kind: Kind, p_s: f64, lambda_a: f64, n_d: u32) -> Self {
        let support_start = match kind {
            Kind::Lm1 => n_d as u64 + 1,
            Kind::Lm2Prime => 2,
        };
        let (a, q) = (1.0 - lambda_a, 1.0 - p_s);
        let mut f = 1.0;
        let mut pmf = Vec::new();
        let mut n = 0;
        while n < MAX_TERMS {
            n += 1;
            let next = a * f + lambda_a * service_ccdf(kind, q, n_d, n - 1);
            if n >= support_start {
                pmf.push((f - next).max(0.0));
            }
            f = next;
            if f < TAIL && n >= support_start {
                break;
            }
        }
        let mean = ccdf_power_sum(kind, p_s, lambda_a, n_d, 1);
        PaoiDistribution { support_start, pmf, tail_truncation: n + 1, tail_mass: f, mean }
    }

    pub fn pmf(&self, n: u64) -> f64 {
        if n < self.support_start || n >= self.tail_truncation {
            return 0.0;
        }
        self.pmf[(n - self.support_start) as usize]
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum::<f64>() + self.tail_mass
    }

    /// `P(Δ > n)`.
    pub fn ccdf(&self, n: u64) -> f64 {
        if n < self.support_start {
            return 1.0;
        }
        if n + 1 >= self.tail_truncation {
            return self.tail_mass;
        }
        let from = (n + 1 - self.support_start) as usize;
        self.pmf[from..].iter().sum::<f64>() + self.tail_mass
    }

    /// Sum of the CCDF with a geometric tail.
    pub fn mean(&self) -> f64 {
        self.mean
    }
}

/// `sum_{n>=0} ccdf(n)^power` with a geometric tail.
fn ccdf_power_sum(kind: Kind, p_s: f64, lambda_a: f64, n_d: u32, power: u32) -> f64 {
    let (a, q) = (1.0 - lambda_a, 1.0 - p_s);
    let mut f = 1.0;
    let mut sum = 0.0;
    let mut prev;
    let mut n = 0;
    loop {
        let term = pow(f, power as f64);
        sum += term;
        n += 1;
        let next = a * f + lambda_a * service_ccdf(kind, q, n_d, n - 1);
        prev = f;
        f = next;
        if (pow(f, power as f64) < TAIL * sum && n > n_d as u64 + 2) || n >= MAX_TERMS {
            break;
        }
    }
    // remaining terms decay like the last ratio, raised to the power
    let ratio = if prev > 0.0 { (f / prev).min(1.0 - 1e-12) } else { 0.0 };
    let rp = pow(ratio, power as f64);
    sum + pow(f, power as f64) / (1.0 - rp)
}

/// Mean time from generation to the device's own slot under time splitting.
pub fn waiting_time_xn(lambda_a: f64, n_d: u32) -> Result<f64> {
    if !(lambda_a > 0.0 && lambda_a <= 1.0) {
        return Err(Error::Domain { what: "arrival probability", value: lambda_a });
    }
    if n_d < 1 {
        return Err(Error::param("n_d", "must be at least 1"));
    }
    let nd = n_d as f64;
    let z = 1.0 - pow(1.0 - lambda_a, nd);
    let x = |k: u32| pow(1.0 - lambda_a, (k - 1) as f64) * lambda_a / z;
    let mut sum: f64 = (1..n_d).map(|k| x(k) * (nd - k as f64 - 1.0)).sum();
    sum += x(n_d) * (nd - 1.0);
    Ok(sum)
}

/// Mean number of slots from first attempt to delivery under time splitting,
/// counting the delivery slot.
pub fn t_n(p_s: f64, n_d: u32) -> Result<f64> {
    if !(p_s > 0.0 && p_s <= 1.0) {
        return Err(Error::Domain { what: "success probability", value: p_s });
    }
    Ok(1.0 + n_d as f64 * (1.0 - p_s) / p_s)
}

/// Fixed-`p_s` means, in slots.
pub mod fixed {
    use super::*;

    pub fn single_device(p_s: f64, lambda_a: f64) -> Result<f64> {
        check(p_s, lambda_a, 1)?;
        Ok(2.0 / p_s + 1.0 / lambda_a)
    }

    pub fn correlated_lm1(p_s: f64, lambda_a: f64, n_d: u32) -> Result<f64> {
        check(p_s, lambda_a, n_d)?;
        Ok(ccdf_power_sum(Kind::Lm1, p_s, lambda_a, n_d, n_d))
    }

    /// Closed form with merged arrival and success probabilities.
    pub fn correlated_lm1_approx(p_s: f64, lambda_a: f64, n_d: u32) -> Result<f64> {
        check(p_s, lambda_a, n_d)?;
        let nd = n_d as f64;
        let p_hat = 1.0 - pow(1.0 - p_s, nd);
        let l_hat = 1.0 - pow(1.0 - lambda_a, nd);
        Ok(nd / p_hat + 1.0 / l_hat)
    }

    pub fn uncorrelated_lm1(p_s: f64, lambda_a: f64, n_d: u32) -> Result<f64> {
        check(p_s, lambda_a, n_d)?;
        Ok(2.0 * n_d as f64 / p_s + 1.0 / lambda_a)
    }

    /// Without the waiting term, which does not depend on `p_s`.
    pub fn correlated_lm2(p_s: f64, lambda_a: f64, n_d: u32) -> Result<f64> {
        check(p_s, lambda_a, n_d)?;
        Ok(ccdf_power_sum(Kind::Lm2Prime, p_s, lambda_a, n_d, n_d))
    }

    /// Without the waiting terms.
    pub fn uncorrelated_lm2(p_s: f64, lambda_a: f64, n_d: u32) -> Result<f64> {
        check(p_s, lambda_a, n_d)?;
        Ok(1.0 / lambda_a + 2.0 * t_n(p_s, n_d)?)
    }
}

/// `E_r[f(p_s(r))]` over the uniform serving distance.
fn expect_r(law: &SuccessLaw, s: &Scenario, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if law.is_constant() {
        return f(law.p_mixed(0.0)).map_err(infinite);
    }
    let err: Cell<Option<Error>> = Cell::new(None);
    let mut pts = law.breakpoints();
    if pts.len() < 2 {
        pts = alloc::vec![0.0, s.r_c];
    }
    let e = integrate_pieces(
        |r| match f(law.p_mixed(r)) {
            Ok(v) => 2.0 * r / (s.r_c * s.r_c) * v,
            Err(e) => {
                err.set(Some(e));
                0.0
            }
        },
        &pts,
        Tol::new(1e-10, 1e-9),
    );
    if let Some(e) = err.take() {
        return Err(infinite(e));
    }
    e.into_result(1e-9)
}

// a vanishing success probability anywhere means the mean diverges
fn infinite(e: Error) -> Error {
    match e {
        Error::Domain { what: "success probability", .. } => Error::InfiniteMean,
        other => other,
    }
}

fn traffic(s: &Scenario) -> Result<(u32, f64)> {
    if s.n_d < 1 {
        return Err(Error::param("n_d", "must be at least 1"));
    }
    if !(s.lambda_a > 0.0 && s.lambda_a <= 1.0) {
        if s.lambda_a == 0.0 {
            return Err(Error::InfiniteMean);
        }
        return Err(Error::param("lambda_a", "must lie in [0, 1]"));
    }
    Ok((s.n_d, s.lambda_a))
}

fn summary(mean: f64, load: Option<LoadModel>, mode: DeviceMode, s: &Scenario, method: Method) -> PaoiSummary {
    PaoiSummary { mean_paoi: mean, load_model: load, device_mode: mode, n_d: s.n_d, lambda_a: s.lambda_a, method }
}

/// One device per cluster; both load models give the same law.
pub fn mean_paoi_single_device(law: &SuccessLaw, s: &Scenario) -> Result<PaoiSummary> {
    let (_, lam) = traffic(s)?;
    let m = expect_r(law, s, |p| fixed::single_device(p, lam))?;
    Ok(summary(m, None, DeviceMode::Uncorrelated, s, Method::Exact))
}

pub fn mean_paoi_correlated_lm1(law: &SuccessLaw, s: &Scenario) -> Result<PaoiSummary> {
    let (n_d, lam) = traffic(s)?;
    let m = expect_r(law, s, |p| fixed::correlated_lm1(p, lam, n_d))?;
    Ok(summary(m, Some(LoadModel::BandwidthSplit), DeviceMode::Correlated, s, Method::Exact))
}

pub fn mean_paoi_correlated_lm1_approx(law: &SuccessLaw, s: &Scenario) -> Result<PaoiSummary> {
    let (n_d, lam) = traffic(s)?;
    let m = expect_r(law, s, |p| fixed::correlated_lm1_approx(p, lam, n_d))?;
    Ok(summary(m, Some(LoadModel::BandwidthSplit), DeviceMode::Correlated, s, Method::Approx))
}

pub fn mean_paoi_uncorrelated_lm1(law: &SuccessLaw, s: &Scenario) -> Result<PaoiSummary> {
    let (n_d, lam) = traffic(s)?;
    let m = expect_r(law, s, |p| fixed::uncorrelated_lm1(p, lam, n_d))?;
    Ok(summary(m, Some(LoadModel::BandwidthSplit), DeviceMode::Uncorrelated, s, Method::Exact))
}

pub fn mean_paoi_correlated_lm2(law: &SuccessLaw, s: &Scenario) -> Result<PaoiSummary> {
    let (n_d, lam) = traffic(s)?;
    let m = expect_r(law, s, |p| fixed::correlated_lm2(p, lam, n_d))? + waiting_time_xn(lam, n_d)?;
    Ok(summary(m, Some(LoadModel::TimeSplit), DeviceMode::Correlated, s, Method::Exact))
}

/// The wait enters once for the update being delivered and once for the
/// previous one the peak is measured from.
pub fn mean_paoi_uncorrelated_lm2(law: &SuccessLaw, s: &Scenario) -> Result<PaoiSummary> {
    let (n_d, lam) = traffic(s)?;
    let m = expect_r(law, s, |p| fixed::uncorrelated_lm2(p, lam, n_d))? + 2.0 * waiting_time_xn(lam, n_d)?;
    Ok(summary(m, Some(LoadModel::TimeSplit), DeviceMode::Uncorrelated, s, Method::Exact))
}

/// Picks the law for `(load, mode)`, falling back to the single-device law
/// when the cluster has one device.
pub fn mean_paoi(law: &SuccessLaw, s: &Scenario, load: LoadModel, mode: DeviceMode) -> Result<PaoiSummary> {
    if s.n_d == 1 {
        let mut out = mean_paoi_single_device(law, s)?;
        out.load_model = Some(load);
        out.device_mode = mode;
        return Ok(out);
    }
    match (load, mode) {
        (LoadModel::BandwidthSplit, DeviceMode::Correlated) => mean_paoi_correlated_lm1(law, s),
        (LoadModel::BandwidthSplit, DeviceMode::Uncorrelated) => mean_paoi_uncorrelated_lm1(law, s),
        (LoadModel::TimeSplit, DeviceMode::Correlated) => mean_paoi_correlated_lm2(law, s),
        (LoadModel::TimeSplit, DeviceMode::Uncorrelated) => mean_paoi_uncorrelated_lm2(law, s),
    }
}
