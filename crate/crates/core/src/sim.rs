//! Monte-Carlo engine: full SINR simulation of the cluster field and
//! slot-level queue simulation of the devices.
//!
//! Realization `i` draws from a Xoshiro256++ generator seeded by a ChaCha8
//! generator with the master seed switched to stream `i`, so results do
//! not depend on how realizations are scheduled.

use alloc::vec::Vec;

use libm::{log, pow, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::activity::LoadModel;
use crate::channel::{gamma_unit, los_probability, transmit_power, Link};
use crate::geometry::sample_topology_with;
use crate::paoi::DeviceMode;
use crate::sinr::SuccessLaw;
use crate::{Error, Result, Scenario};

/// Below this activity, idle interferers are skipped geometrically.
const SPARSE: f64 = 0.1;

/// Batches per realization for batch-means error estimates.
pub const BATCHES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fidelity {
    /// Sample fading and interference for every attempt.
    FullSinr,
    /// Draw attempt outcomes from a given success law.
    QueueLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub realizations: u32,
    pub slots_per_realization: u64,
    pub window_radius: f64,
    pub seed: u64,
    pub fidelity: Fidelity,
}

impl SimConfig {
    pub fn new(scenario: Scenario, fidelity: Fidelity) -> Self {
        let window_radius = default_window(&scenario);
        SimConfig { scenario, realizations: 100, slots_per_realization: 10_000, window_radius, seed: 0, fidelity }
    }

    /// Slots discarded at the start of every realization.
    pub fn warmup(&self) -> u64 {
        self.slots_per_realization / 10
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.realizations < 1 {
            return Err(Error::param("realizations", "must be at least 1"));
        }
        if self.slots_per_realization < 2 * BATCHES as u64 {
            return Err(Error::param("slots_per_realization", "must be at least 64"));
        }
        if self.fidelity == Fidelity::FullSinr && !(self.window_radius > self.scenario.r_c) {
            return Err(Error::param("window_radius", "must exceed the cluster radius"));
        }
        Ok(())
    }

    fn expect(&self, f: Fidelity) -> Result<()> {
        if self.fidelity != f {
            return Err(Error::param("fidelity", "wrong fidelity for this simulation"));
        }
        self.validate()
    }

    fn rng(&self, realization: u32) -> SimRng {
        stream(self.seed, realization)
    }
}

type SimRng = Xoshiro256PlusPlus;

fn stream(seed: u64, index: u32) -> SimRng {
    let mut root = ChaCha8Rng::seed_from_u64(seed);
    root.set_stream(index as u64);
    SimRng::from_rng(&mut root)
}

/// Ten times the larger of the cluster radius and the mean cluster spacing.
pub fn default_window(s: &Scenario) -> f64 {
    let spacing = if s.lambda_u > 0.0 { 1.0 / sqrt(s.lambda_u_m2()) } else { 0.0 };
    10.0 * s.r_c.max(spacing)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Activity,
    MeanPaoi,
    SuccessProb,
    Coverage,
    Waiting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub metric: Metric,
    /// Set when the run looks non-stationary or a fixed point did not settle.
    pub flagged: bool,
}

impl SimEstimate {
    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr)
    }
}

/// Maps a realization index to its record. The core runs realizations in
/// order; callers may supply a parallel implementation.
pub trait Executor {
    fn run(&self, n: u32, f: &(dyn Fn(u32) -> Record + Sync)) -> Vec<Record>;
}

pub struct Sequential;

impl Executor for Sequential {
    fn run(&self, n: u32, f: &(dyn Fn(u32) -> Record + Sync)) -> Vec<Record> {
        (0..n).map(f).collect()
    }
}

/// Sum and count of one quantity.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Acc {
    sum: f64,
    n: f64,
}

impl Acc {
    #[inline]
    fn add(&mut self, v: f64) {
        self.sum += v;
        self.n += 1.0;
    }

    fn merge(&mut self, o: Acc) {
        self.sum += o.sum;
        self.n += o.n;
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0.0).then(|| self.sum / self.n)
    }
}

/// Everything one realization measured, per batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    devices: usize,
    activity: Vec<Acc>,
    correlated: Vec<Acc>,
    // batch-major, one entry per device
    uncorrelated: Vec<Acc>,
    waiting: Vec<Acc>,
    success: Vec<Acc>,
    bins: Vec<[Acc; 2]>,
}

impl Record {
    fn new(devices: usize, bins: usize) -> Self {
        Record {
            devices,
            activity: alloc::vec![Acc::default(); BATCHES],
            correlated: alloc::vec![Acc::default(); BATCHES],
            uncorrelated: alloc::vec![Acc::default(); BATCHES * devices],
            waiting: alloc::vec![Acc::default(); BATCHES],
            success: alloc::vec![Acc::default(); BATCHES],
            bins: alloc::vec![[Acc::default(); 2]; bins],
        }
    }

    fn pooled(v: &[Acc], batches: core::ops::Range<usize>) -> Acc {
        let mut a = Acc::default();
        for b in batches {
            a.merge(v[b]);
        }
        a
    }

    fn unc_value(&self, batches: core::ops::Range<usize>) -> Option<f64> {
        let mut total = Acc::default();
        for d in 0..self.devices {
            let mut a = Acc::default();
            for b in batches.clone() {
                a.merge(self.uncorrelated[b * self.devices + d]);
            }
            if let Some(m) = a.mean() {
                total.add(m);
            }
        }
        total.mean()
    }

    fn value(&self, metric: Metric, mode: DeviceMode, batches: core::ops::Range<usize>) -> Option<f64> {
        match metric {
            Metric::Activity => Self::pooled(&self.activity, batches).mean(),
            Metric::Waiting => Self::pooled(&self.waiting, batches).mean(),
            Metric::SuccessProb | Metric::Coverage => Self::pooled(&self.success, batches).mean(),
            Metric::MeanPaoi => match mode {
                DeviceMode::Correlated => Self::pooled(&self.correlated, batches).mean(),
                DeviceMode::Uncorrelated => self.unc_value(batches),
            },
        }
    }

    fn samples(&self, metric: Metric, mode: DeviceMode) -> f64 {
        let all = 0..BATCHES;
        match metric {
            Metric::Activity => Self::pooled(&self.activity, all).n,
            Metric::Waiting => Self::pooled(&self.waiting, all).n,
            Metric::SuccessProb | Metric::Coverage => Self::pooled(&self.success, all).n,
            Metric::MeanPaoi => match mode {
                DeviceMode::Correlated => Self::pooled(&self.correlated, all).n,
                DeviceMode::Uncorrelated => Self::pooled(&self.uncorrelated, 0..BATCHES * self.devices).n,
            },
        }
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, sqrt(var))
}

/// Combines records into one estimate.
fn aggregate(records: &[Record], metric: Metric, mode: DeviceMode) -> SimEstimate {
    let whole: Vec<f64> = records.iter().filter_map(|r| r.value(metric, mode, 0..BATCHES)).collect();
    let n_samples = records.iter().map(|r| r.samples(metric, mode)).sum::<f64>() as u64;
    if whole.is_empty() {
        return SimEstimate { mean: f64::NAN, stderr: f64::NAN, n_samples, metric, flagged: true };
    }
    let (mean, sd) = mean_sd(&whole);
    let batch_values = |range: core::ops::Range<usize>| -> Vec<f64> {
        records.iter().flat_map(|r| range.clone().filter_map(move |b| r.value(metric, mode, b..b + 1))).collect()
    };
    let stderr = if whole.len() >= 20 {
        sd / sqrt(whole.len() as f64)
    } else {
        let b = batch_values(0..BATCHES);
        let (_, bsd) = mean_sd(&b);
        bsd / sqrt(b.len() as f64)
    };
    // second quarter against last quarter, paired by realization when possible
    let q2 = BATCHES / 4..BATCHES / 2;
    let q4 = 3 * BATCHES / 4..BATCHES;
    let diffs: Vec<f64> = records
        .iter()
        .filter_map(|r| Some(r.value(metric, mode, q2.clone())? - r.value(metric, mode, q4.clone())?))
        .collect();
    let (gap, se) = if diffs.len() >= 2 {
        let (m, sd) = mean_sd(&diffs);
        (m, sd / sqrt(diffs.len() as f64))
    } else {
        let (a, b) = (batch_values(q2), batch_values(q4));
        if a.len() < 2 || b.len() < 2 {
            (0.0, 0.0)
        } else {
            let (m2, s2) = mean_sd(&a);
            let (m4, s4) = mean_sd(&b);
            (m2 - m4, sqrt(s2 * s2 / a.len() as f64 + s4 * s4 / b.len() as f64))
        }
    };
    let flagged = gap.abs() > 3.0 * se && gap.abs() > 1e-12;
    SimEstimate { mean, stderr, n_samples, metric, flagged }
}

/// Decides transmission attempts of the typical cluster's devices.
trait Attempt {
    fn attempt(&self, device: usize, rng: &mut SimRng) -> bool;
}

struct LawChannel {
    p: Vec<f64>,
}

impl Attempt for LawChannel {
    #[inline]
    fn attempt(&self, device: usize, rng: &mut SimRng) -> bool {
        rng.random::<f64>() < self.p[device]
    }
}

/// Interferer field of one realization with frozen link states.
struct Field {
    /// `(eta * p * z^-alpha, m)` per interferer.
    interferers: Vec<(f64, u32)>,
    pi_bar: f64,
    log_idle: f64,
    theta: f64,
    sigma2: f64,
    /// Per device: LoS probability and `(eta * p * R^-alpha, m)` per link.
    devices: Vec<(f64, [(f64, u32); 2])>,
}

impl Field {
    fn new<R: Rng + ?Sized>(s: &Scenario, window: f64, pi_bar: f64, rng: &mut R) -> Result<(Self, Vec<f64>)> {
        let topo = sample_topology_with(s, window, rng)?;
        let link_of = |r: f64, u: f64| if u < los_probability(s, r) { Link::Los } else { Link::Nlos };
        let mut interferers = Vec::with_capacity(topo.interferers.len());
        for i in &topo.interferers {
            let c1 = link_of(i.d_typical, rng.random());
            let c2 = link_of(i.d_own, rng.random());
            let p1 = s.link(c1);
            let z2 = i.d_typical * i.d_typical + s.h * s.h;
            interferers.push((p1.eta * transmit_power(s, i.d_own, c2) * pow(z2, -0.5 * p1.alpha), p1.m));
        }
        let devices = topo
            .typical_devices
            .iter()
            .map(|&r| {
                let d2 = r * r + s.h * s.h;
                let sig = Link::BOTH.map(|l| {
                    let p = s.link(l);
                    (p.eta * transmit_power(s, r, l) * pow(d2, -0.5 * p.alpha), p.m)
                });
                (los_probability(s, r), sig)
            })
            .collect();
        let log_idle = if pi_bar < 1.0 { log(1.0 - pi_bar) } else { f64::NEG_INFINITY };
        let field = Field { interferers, pi_bar, log_idle, theta: s.theta, sigma2: s.sigma2, devices };
        Ok((field, topo.typical_devices))
    }

    /// Number of idle interferers before the next active one.
    #[inline]
    fn skip(&self, rng: &mut SimRng) -> usize {
        let u: f64 = rng.random();
        let k = log(1.0 - u) / self.log_idle;
        if k >= 1e12 {
            usize::MAX / 2
        } else {
            k as usize
        }
    }

    /// Aggregate interference, stopping early once it reaches `budget`.
    #[inline]
    fn interference(&self, budget: f64, rng: &mut SimRng) -> f64 {
        let mut i = 0.0;
        if self.pi_bar <= 0.0 {
            return i;
        }
        if self.pi_bar < SPARSE {
            let mut j = self.skip(rng);
            while j < self.interferers.len() {
                let (c, m) = self.interferers[j];
                i += c * gamma_unit(m, rng);
                if i >= budget {
                    return i;
                }
                j = j.saturating_add(1 + self.skip(rng));
            }
        } else {
            let dense = self.pi_bar >= 1.0;
            for &(c, m) in &self.interferers {
                if dense || rng.random::<f64>() < self.pi_bar {
                    i += c * gamma_unit(m, rng);
                    if i >= budget {
                        return i;
                    }
                }
            }
        }
        i
    }

    /// Draws the link state and the fading, then the interference until the
    /// outcome is settled. Returns `(success, los)`.
    fn attempt_link(&self, device: usize, rng: &mut SimRng) -> (bool, bool) {
        let (pl, sig) = self.devices[device];
        let los = rng.random::<f64>() < pl;
        let (c, m) = sig[if los { 0 } else { 1 }];
        let budget = c * gamma_unit(m, rng) / self.theta - self.sigma2;
        if budget <= 0.0 {
            return (false, los);
        }
        (self.interference(budget, rng) < budget, los)
    }
}

impl Attempt for Field {
    #[inline]
    fn attempt(&self, device: usize, rng: &mut SimRng) -> bool {
        self.attempt_link(device, rng).0
    }
}

/// Receptions observed by the UAV, for audits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reception {
    pub slot: u64,
    pub device: usize,
    pub generated: u64,
    /// Peak age of this device's own process.
    pub peak_uncorrelated: Option<u64>,
    /// Peak age of the fused process; `None` if stale or first.
    pub peak_correlated: Option<u64>,
    /// Slot of this device's previous delivery.
    pub previous_delivery: Option<u64>,
}

fn queue_realization<C: Attempt>(
    s: &Scenario,
    slots: u64,
    warmup: u64,
    load: LoadModel,
    ch: &C,
    rng: &mut SimRng,
    mut trace: Option<&mut Vec<Reception>>,
    trace_cap: usize,
) -> Record {
    let n = s.n_d as usize;
    let nd = s.n_d as u64;
    let lam = s.lambda_a;
    // equal batches, the remainder joins the warmup
    let batch_len = ((slots - warmup) / BATCHES as u64).max(1);
    let warmup = slots.saturating_sub(batch_len * BATCHES as u64);
    let mut rec = Record::new(n, 0);
    let mut pending: Vec<Option<u64>> = alloc::vec![None; n];
    let mut left: Vec<u64> = alloc::vec![0; n];
    let mut fresh_attempt: Vec<bool> = alloc::vec![false; n];
    let mut last_gen: Vec<Option<u64>> = alloc::vec![None; n];
    let mut last_delivery: Vec<Option<u64>> = alloc::vec![None; n];
    let mut freshest: Option<u64> = None;
    let mut delivered: Vec<(usize, u64)> = Vec::with_capacity(n);
    for t in 1..=slots {
        let on = t > warmup;
        let b = if on { (((t - warmup - 1) / batch_len) as usize).min(BATCHES - 1) } else { 0 };
        delivered.clear();
        for i in 0..n {
            match load {
                LoadModel::BandwidthSplit => {
                    if let Some(g) = pending[i] {
                        if on {
                            rec.activity[b].add(1.0);
                        }
                        left[i] -= 1;
                        if left[i] == 0 {
                            if ch.attempt(i, rng) {
                                delivered.push((i, g));
                                pending[i] = None;
                            } else {
                                left[i] = nd;
                            }
                        }
                    } else {
                        if on {
                            rec.activity[b].add(0.0);
                        }
                        if rng.random::<f64>() < lam {
                            pending[i] = Some(t);
                            left[i] = nd;
                        }
                    }
                }
                LoadModel::TimeSplit => {
                    let own = (t % nd) as usize == i;
                    match pending[i] {
                        Some(g) if own => {
                            if on {
                                rec.activity[b].add(1.0);
                                if fresh_attempt[i] {
                                    rec.waiting[b].add((t - g - 1) as f64);
                                }
                            }
                            fresh_attempt[i] = false;
                            if ch.attempt(i, rng) {
                                delivered.push((i, g));
                                pending[i] = None;
                            }
                        }
                        Some(_) => {}
                        None => {
                            if own && on {
                                rec.activity[b].add(0.0);
                            }
                            if rng.random::<f64>() < lam {
                                pending[i] = Some(t);
                                fresh_attempt[i] = true;
                            }
                        }
                    }
                }
            }
        }
        if delivered.is_empty() {
            continue;
        }
        let best = delivered.iter().map(|d| d.1).max().unwrap_or(0);
        let fused_peak = match freshest {
            Some(f) if best > f => Some(t - f),
            _ => None,
        };
        if freshest.is_none_or(|f| best > f) {
            freshest = Some(best);
        }
        if on {
            if let Some(p) = fused_peak {
                rec.correlated[b].add(p as f64);
            }
        }
        for (k, &(i, g)) in delivered.iter().enumerate() {
            let peak = last_gen[i].map(|gp| t - gp);
            if on {
                if let Some(p) = peak {
                    rec.uncorrelated[b * n + i].add(p as f64);
                }
            }
            if let Some(tr) = trace.as_deref_mut() {
                if tr.len() < trace_cap {
                    tr.push(Reception {
                        slot: t,
                        device: i,
                        generated: g,
                        peak_uncorrelated: peak,
                        peak_correlated: if k == 0 { fused_peak } else { None },
                        previous_delivery: last_delivery[i],
                    });
                }
            }
            last_gen[i] = Some(g);
            last_delivery[i] = Some(t);
        }
    }
    rec
}

fn device_radii(s: &Scenario, rng: &mut SimRng) -> Vec<f64> {
    (0..s.n_d).map(|_| s.r_c * sqrt(rng.random::<f64>())).collect()
}

fn law_channel(cfg: &SimConfig, law: &SuccessLaw, rng: &mut SimRng) -> LawChannel {
    LawChannel { p: device_radii(&cfg.scenario, rng).into_iter().map(|r| law.p_mixed(r)).collect() }
}

/// Output of a queue simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueEstimate {
    pub activity: SimEstimate,
    pub mean_paoi: SimEstimate,
    /// Mean slots between generation and first attempt; time split only.
    pub waiting: Option<SimEstimate>,
}

fn queue_estimate(records: &[Record], load: LoadModel, mode: DeviceMode) -> QueueEstimate {
    QueueEstimate {
        activity: aggregate(records, Metric::Activity, mode),
        mean_paoi: aggregate(records, Metric::MeanPaoi, mode),
        waiting: (load == LoadModel::TimeSplit).then(|| aggregate(records, Metric::Waiting, mode)),
    }
}

/// Queue simulation with attempt outcomes drawn from `law`.
pub fn simulate_queue(cfg: &SimConfig, law: &SuccessLaw, load: LoadModel, mode: DeviceMode) -> Result<QueueEstimate> {
    simulate_queue_on(&Sequential, cfg, law, load, mode)
}

pub fn simulate_queue_on(
    exec: &dyn Executor,
    cfg: &SimConfig,
    law: &SuccessLaw,
    load: LoadModel,
    mode: DeviceMode,
) -> Result<QueueEstimate> {
    cfg.expect(Fidelity::QueueLevel)?;
    let run = |i: u32| {
        let mut rng = cfg.rng(i);
        let ch = law_channel(cfg, law, &mut rng);
        queue_realization(&cfg.scenario, cfg.slots_per_realization, cfg.warmup(), load, &ch, &mut rng, None, 0)
    };
    let records = exec.run(cfg.realizations, &run);
    Ok(queue_estimate(&records, load, mode))
}

/// Receptions of the first realization, up to `max_events`.
pub fn trace_queue(cfg: &SimConfig, law: &SuccessLaw, load: LoadModel, max_events: usize) -> Result<Vec<Reception>> {
    cfg.expect(Fidelity::QueueLevel)?;
    let mut rng = cfg.rng(0);
    let ch = law_channel(cfg, law, &mut rng);
    let mut out = Vec::new();
    queue_realization(&cfg.scenario, cfg.slots_per_realization, 0, load, &ch, &mut rng, Some(&mut out), max_events);
    Ok(out)
}

/// Queue simulation with every attempt decided by a sampled SINR.
pub fn simulate_queue_sinr(cfg: &SimConfig, pi_bar: f64, load: LoadModel, mode: DeviceMode) -> Result<QueueEstimate> {
    simulate_queue_sinr_on(&Sequential, cfg, pi_bar, load, mode)
}

pub fn simulate_queue_sinr_on(
    exec: &dyn Executor,
    cfg: &SimConfig,
    pi_bar: f64,
    load: LoadModel,
    mode: DeviceMode,
) -> Result<QueueEstimate> {
    let records = sinr_queue_records(exec, cfg, pi_bar, load)?;
    Ok(queue_estimate(&records, load, mode))
}

fn sinr_queue_records(exec: &dyn Executor, cfg: &SimConfig, pi_bar: f64, load: LoadModel) -> Result<Vec<Record>> {
    cfg.expect(Fidelity::FullSinr)?;
    if !(0.0..=1.0).contains(&pi_bar) {
        return Err(Error::Domain { what: "pi_bar", value: pi_bar });
    }
    // a failing topology draw is reported once, after the run
    let run = |i: u32| {
        let mut rng = cfg.rng(i);
        match Field::new(&cfg.scenario, cfg.window_radius, pi_bar, &mut rng) {
            Ok((field, _)) => queue_realization(
                &cfg.scenario,
                cfg.slots_per_realization,
                cfg.warmup(),
                load,
                &field,
                &mut rng,
                None,
                0,
            ),
            Err(_) => Record::new(0, 0),
        }
    };
    let records = exec.run(cfg.realizations, &run);
    if records.iter().any(|r| r.devices == 0) {
        return Err(Error::param("window_radius", "topology could not be sampled"));
    }
    Ok(records)
}

/// Self-consistent activity under full SINR simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointEstimate {
    pub activity: SimEstimate,
    /// Activity used to thin the interferers in the final round.
    pub pi_bar_used: f64,
    pub rounds: u32,
}

pub const MAX_ROUNDS: u32 = 20;

pub fn simulate_activity_fixed_point(cfg: &SimConfig, load: LoadModel) -> Result<FixedPointEstimate> {
    simulate_activity_fixed_point_on(&Sequential, cfg, load)
}

/// Alternates SINR-driven queue runs, feeding the measured activity back as
/// the interferer activity, until the two agree within two standard errors.
/// Every round reuses the same random streams.
pub fn simulate_activity_fixed_point_on(
    exec: &dyn Executor,
    cfg: &SimConfig,
    load: LoadModel,
) -> Result<FixedPointEstimate> {
    cfg.expect(Fidelity::FullSinr)?;
    let mut used = cfg.scenario.lambda_a;
    let mut last = None;
    for round in 1..=MAX_ROUNDS {
        let records = sinr_queue_records(exec, cfg, used, load)?;
        let est = aggregate(&records, Metric::Activity, DeviceMode::Uncorrelated);
        if (est.mean - used).abs() <= 2.0 * est.stderr {
            return Ok(FixedPointEstimate { activity: est, pi_bar_used: used, rounds: round });
        }
        last = Some(est);
        used = est.mean.clamp(0.0, 1.0);
    }
    let mut activity = last.unwrap_or(SimEstimate {
        mean: f64::NAN,
        stderr: f64::NAN,
        n_samples: 0,
        metric: Metric::Activity,
        flagged: true,
    });
    activity.flagged = true;
    Ok(FixedPointEstimate { activity, pi_bar_used: used, rounds: MAX_ROUNDS })
}

/// Empirical success probability over a serving-distance bin and link state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub link: Link,
    /// `None` when no attempt fell into the bin.
    pub estimate: Option<SimEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessProfile {
    pub bins: Vec<SuccessBin>,
    /// Success frequency over all devices and slots.
    pub average: SimEstimate,
}

pub fn simulate_success_prob(cfg: &SimConfig, pi_bar: f64, bins: usize) -> Result<SuccessProfile> {
    simulate_success_prob_on(&Sequential, cfg, pi_bar, bins)
}

/// Every device of the typical cluster attempts in every slot.
pub fn simulate_success_prob_on(
    exec: &dyn Executor,
    cfg: &SimConfig,
    pi_bar: f64,
    bins: usize,
) -> Result<SuccessProfile> {
    cfg.expect(Fidelity::FullSinr)?;
    if !(0.0..=1.0).contains(&pi_bar) {
        return Err(Error::Domain { what: "pi_bar", value: pi_bar });
    }
    let bins = bins.max(1);
    let s = &cfg.scenario;
    let slots = cfg.slots_per_realization;
    let batch_len = (slots / BATCHES as u64).max(1);
    let run = |i: u32| {
        let mut rng = cfg.rng(i);
        let Ok((field, radii)) = Field::new(s, cfg.window_radius, pi_bar, &mut rng) else {
            return Record::new(0, bins);
        };
        let mut rec = Record::new(radii.len(), bins);
        for t in 0..batch_len * BATCHES as u64 {
            let b = (t / batch_len) as usize;
            for (d, &r) in radii.iter().enumerate() {
                let (ok, los) = field.attempt_link(d, &mut rng);
                let v = if ok { 1.0 } else { 0.0 };
                rec.success[b].add(v);
                let k = ((r / s.r_c * bins as f64) as usize).min(bins - 1);
                rec.bins[k][if los { 0 } else { 1 }].add(v);
            }
        }
        rec
    };
    let records = exec.run(cfg.realizations, &run);
    if records.iter().any(|r| r.devices == 0) {
        return Err(Error::param("window_radius", "topology could not be sampled"));
    }
    let average = aggregate(&records, Metric::SuccessProb, DeviceMode::Uncorrelated);
    let mut out = Vec::with_capacity(2 * bins);
    for k in 0..bins {
        for link in Link::BOTH {
            let mut pooled = Acc::default();
            let mut per: Vec<f64> = Vec::new();
            for r in &records {
                let a = r.bins[k][link.index()];
                pooled.merge(a);
                if let Some(m) = a.mean() {
                    per.push(m);
                }
            }
            let estimate = pooled.mean().map(|p| {
                let stderr = if per.len() >= 20 {
                    mean_sd(&per).1 / sqrt(per.len() as f64)
                } else {
                    sqrt(p * (1.0 - p) / pooled.n)
                };
                SimEstimate { mean: p, stderr, n_samples: pooled.n as u64, metric: Metric::SuccessProb, flagged: false }
            });
            let w = s.r_c / bins as f64;
            out.push(SuccessBin { r_lo: k as f64 * w, r_hi: (k + 1) as f64 * w, link, estimate });
        }
    }
    Ok(SuccessProfile { bins: out, average })
}

/// Interference samples at the typical UAV, for Laplace-transform checks:
/// returns `E[exp(-g I)]` over `fields` independent fields.
pub fn sample_laplace(s: &Scenario, window: f64, pi_bar: f64, g: f64, fields: u32, seed: u64) -> Result<SimEstimate> {
    let mut vals = Vec::with_capacity(fields as usize);
    for i in 0..fields {
        let mut rng = stream(seed, i);
        let (field, _) = Field::new(s, window, pi_bar, &mut rng)?;
        let total = field.interference(f64::INFINITY, &mut rng);
        vals.push(libm::exp(-g * total));
    }
    let (mean, sd) = mean_sd(&vals);
    Ok(SimEstimate {
        mean,
        stderr: sd / sqrt(vals.len() as f64),
        n_samples: fields as u64,
        metric: Metric::SuccessProb,
        flagged: false,
    })
}
