//! Grid sweeps over one scenario parameter, analytic and simulated.

use std::collections::BTreeMap;
use std::sync::mpsc;
use std::time::Instant;

use paoi_core::activity::solve_with_kernel;
use paoi_core::channel::Link;
use paoi_core::paoi::mean_paoi;
use paoi_core::sim::{
    simulate_activity_fixed_point_on, simulate_queue_on, simulate_queue_sinr_on, simulate_success_prob_on, Executor,
    Record,
};
use paoi_core::{DeviceMode, Environment, Error, Fidelity, LoadModel, Scenario, SimConfig, SimEstimate, SuccessKernel};
use rayon::prelude::*;

use crate::config::LabConfig;
use crate::csvio::Row;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweptParam {
    LambdaA,
    Nd,
    Height,
    Environment,
}

impl SweptParam {
    pub const ALL: [SweptParam; 4] = [SweptParam::LambdaA, SweptParam::Nd, SweptParam::Height, SweptParam::Environment];

    pub fn name(self) -> &'static str {
        match self {
            SweptParam::LambdaA => "lambda_a",
            SweptParam::Nd => "n_d",
            SweptParam::Height => "h",
            SweptParam::Environment => "environment",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    /// True if changing the parameter changes the success law.
    fn geometric(self) -> bool {
        matches!(self, SweptParam::Height | SweptParam::Environment)
    }

    /// `base` with the parameter set to `v`. When the altitude moves, a
    /// compensation factor sitting at its bound follows the bound.
    pub fn apply(self, base: &Scenario, v: f64) -> Scenario {
        let mut s = base.clone();
        match self {
            SweptParam::LambdaA => s.lambda_a = v,
            SweptParam::Nd => s.n_d = v as u32,
            SweptParam::Height => {
                let at_bound = |l: Link| {
                    let (e, m) = (base.link(l).eps, base.eps_max(l));
                    (e - m).abs() <= 1e-12 * m
                };
                let (l, n) = (at_bound(Link::Los), at_bound(Link::Nlos));
                s.h = v;
                if l {
                    s.eps_l = s.eps_max(Link::Los);
                }
                if n {
                    s.eps_n = s.eps_max(Link::Nlos);
                }
            }
            SweptParam::Environment => {
                if let Some(env) = Environment::ALL.get(v as usize) {
                    s.set_environment(*env);
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Activity,
    MeanPaoi,
    Coverage,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Activity, MetricKind::MeanPaoi, MetricKind::Coverage];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Activity => "activity",
            MetricKind::MeanPaoi => "mean_paoi",
            MetricKind::Coverage => "coverage",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Analytic,
    Simulation,
}

impl Engine {
    pub const ALL: [Engine; 2] = [Engine::Analytic, Engine::Simulation];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Simulation => "simulation",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweptParam,
    pub grid: Vec<f64>,
    pub metrics: Vec<MetricKind>,
    pub engines: Vec<Engine>,
    pub load_models: Vec<LoadModel>,
    pub device_modes: Vec<DeviceMode>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            param: SweptParam::LambdaA,
            grid: (1..=10).map(|i| i as f64 / 10.0).collect(),
            metrics: vec![MetricKind::Activity],
            engines: vec![Engine::Analytic],
            load_models: vec![LoadModel::BandwidthSplit],
            device_modes: vec![DeviceMode::Correlated],
        }
    }
}

fn no_duplicates<T: PartialEq>(key: &str, v: &[T]) -> Result<()> {
    for (i, a) in v.iter().enumerate() {
        if v[..i].contains(a) {
            return Err(LabError::config(key, "duplicate entry"));
        }
    }
    Ok(())
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(LabError::config("sweep.grid", "must not be empty"));
        }
        let up = self.grid.windows(2).all(|w| w[1] > w[0]);
        let down = self.grid.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(LabError::config("sweep.grid", "must be strictly monotone"));
        }
        for &v in &self.grid {
            let ok = match self.param {
                SweptParam::LambdaA => (0.0..=1.0).contains(&v),
                SweptParam::Nd => v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64,
                SweptParam::Height => v > 0.0 && v.is_finite(),
                SweptParam::Environment => v >= 0.0 && v.fract() == 0.0 && (v as usize) < Environment::ALL.len(),
            };
            if !ok {
                return Err(LabError::config(
                    "sweep.grid",
                    format!("{v} is not a valid value of {}", self.param.name()),
                ));
            }
        }
        if self.metrics.is_empty() {
            return Err(LabError::config("sweep.metrics", "must not be empty"));
        }
        if self.engines.is_empty() {
            return Err(LabError::config("sweep.engines", "must not be empty"));
        }
        if self.load_models.is_empty() {
            return Err(LabError::config("sweep.load_models", "must not be empty"));
        }
        if self.metrics.contains(&MetricKind::MeanPaoi) && self.device_modes.is_empty() {
            return Err(LabError::config("sweep.device_modes", "must not be empty when mean_paoi is requested"));
        }
        no_duplicates("sweep.metrics", &self.metrics)?;
        no_duplicates("sweep.engines", &self.engines)?;
        no_duplicates("sweep.load_models", &self.load_models)?;
        no_duplicates("sweep.device_modes", &self.device_modes)?;
        Ok(())
    }
}

/// Runs realizations on a rayon pool. Records come back in index order.
pub struct PoolExecutor<'a>(pub &'a rayon::ThreadPool);

impl Executor for PoolExecutor<'_> {
    fn run(&self, n: u32, f: &(dyn Fn(u32) -> Record + Sync)) -> Vec<Record> {
        self.0.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

/// Worker count from `PAOI_LAB_THREADS`, else the machine's parallelism.
pub fn thread_count() -> usize {
    std::env::var("PAOI_LAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub threads: usize,
    /// Fill the `runtime_s` column. Off by default so reruns are
    /// byte-identical.
    pub timings: bool,
    pub progress: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { threads: thread_count(), timings: false, progress: false }
    }
}

#[derive(Debug, Default)]
pub struct SweepOutcome {
    pub rows: usize,
    /// Grid-point label and error of every failed evaluation.
    pub failures: Vec<(String, Error)>,
    /// Labels of simulated estimates flagged as non-stationary.
    pub flagged: Vec<String>,
}

impl SweepOutcome {
    /// The error matching the worst problem seen, if any.
    pub fn status(&self) -> Result<()> {
        if let Some((point, e)) = self.failures.first() {
            return Err(LabError::Numerical { point: point.clone(), source: e.clone() });
        }
        if let Some(point) = self.flagged.first() {
            return Err(LabError::NonStationary(point.clone()));
        }
        Ok(())
    }
}

struct PointOutput {
    rows: Vec<Row>,
    failures: Vec<(String, Error)>,
    flagged: Vec<String>,
}

struct Point<'a> {
    cfg: &'a LabConfig,
    index: usize,
    value: f64,
    scenario: Scenario,
    timings: bool,
    out: PointOutput,
}

impl Point<'_> {
    fn label(&self, rest: &str) -> String {
        format!("{} = {} ({rest})", self.cfg.sweep.param.name(), fmt_value(self.value))
    }

    fn row(
        &self,
        load: LoadModel,
        mode: Option<DeviceMode>,
        engine: Engine,
        metric: MetricKind,
        value: f64,
        stderr: Option<f64>,
    ) -> Row {
        Row {
            swept_param: self.cfg.sweep.param.name().to_string(),
            swept_value: self.value,
            load_model: load.number(),
            device_mode: mode.map_or("any", DeviceMode::name).to_string(),
            engine: engine.name().to_string(),
            metric: metric.name().to_string(),
            value,
            stderr,
            runtime_s: None,
        }
        .quantized()
    }

    fn fail(&mut self, what: &str, e: Error) {
        let label = self.label(what);
        self.out.failures.push((label, e));
    }

    fn push_estimate(&mut self, load: LoadModel, mode: Option<DeviceMode>, metric: MetricKind, e: &SimEstimate) {
        if e.n_samples == 0 {
            // nothing observed, e.g. no deliveries without arrivals
            let row = self.row(load, mode, Engine::Simulation, metric, f64::NAN, None);
            self.out.rows.push(row);
            return;
        }
        if e.flagged {
            let label = self.label(&format!("load model {}, {}, simulation", load.number(), metric.name()));
            self.out.flagged.push(label);
        }
        let row = self.row(load, mode, Engine::Simulation, metric, e.mean, Some(e.stderr));
        self.out.rows.push(row);
    }

    fn analytic(&mut self, kernel: &SuccessKernel, load: LoadModel) {
        let s = &self.scenario;
        let (sv, metrics) = (self.cfg.solver, self.cfg.sweep.metrics.clone());
        let sol = match solve_with_kernel(kernel, load, s.n_d, s.lambda_a, sv.tol, sv.max_iter) {
            Ok(v) => v,
            Err(e) => return self.fail(&format!("load model {}, activity", load.number()), e),
        };
        let law = metrics.contains(&MetricKind::MeanPaoi).then(|| kernel.success_law(sol.pi_bar));
        for metric in metrics {
            match metric {
                MetricKind::Activity => {
                    let r = self.row(load, None, Engine::Analytic, metric, sol.pi_bar, None);
                    self.out.rows.push(r);
                }
                MetricKind::Coverage => {
                    let r = self.row(load, None, Engine::Analytic, metric, sol.moments.m1, None);
                    self.out.rows.push(r);
                }
                MetricKind::MeanPaoi => {
                    let law = law.as_ref().expect("law built for mean_paoi");
                    for mode in self.cfg.sweep.device_modes.clone() {
                        match mean_paoi(law, &self.scenario, load, mode) {
                            Ok(m) => {
                                let r = self.row(load, Some(mode), Engine::Analytic, metric, m.mean_paoi, None);
                                self.out.rows.push(r);
                            }
                            Err(Error::InfiniteMean) => {
                                let r = self.row(load, Some(mode), Engine::Analytic, metric, f64::INFINITY, None);
                                self.out.rows.push(r);
                            }
                            Err(e) => self.fail(&format!("load model {}, {}", load.number(), mode.name()), e),
                        }
                    }
                }
            }
        }
    }

    fn sim_config(&self, fidelity: Fidelity) -> SimConfig {
        let mut c = SimConfig::new(self.scenario.clone(), fidelity);
        c.realizations = self.cfg.sim.realizations;
        c.slots_per_realization = self.cfg.sim.slots;
        c.window_radius = self.cfg.window(&self.scenario);
        // one fixed stream family per grid point, independent of scheduling
        c.seed = self.cfg.sim.seed.wrapping_add((self.index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        c
    }

    fn simulation(&mut self, exec: &dyn Executor, kernel: Option<&SuccessKernel>, load: LoadModel) {
        let metrics = self.cfg.sweep.metrics.clone();
        let modes = self.cfg.sweep.device_modes.clone();
        let sinr = self.sim_config(Fidelity::FullSinr);
        let what = |m: &str| format!("load model {}, {m}, simulation", load.number());
        match self.cfg.sim.fidelity {
            Fidelity::FullSinr => {
                let fp = match simulate_activity_fixed_point_on(exec, &sinr, load) {
                    Ok(v) => v,
                    Err(e) => return self.fail(&what("activity"), e),
                };
                for metric in metrics {
                    match metric {
                        MetricKind::Activity => self.push_estimate(load, None, metric, &fp.activity),
                        MetricKind::Coverage => match simulate_success_prob_on(exec, &sinr, fp.pi_bar_used, 1) {
                            Ok(p) => self.push_estimate(load, None, metric, &p.average),
                            Err(e) => self.fail(&what("coverage"), e),
                        },
                        MetricKind::MeanPaoi => {
                            for &mode in &modes {
                                match simulate_queue_sinr_on(exec, &sinr, fp.pi_bar_used, load, mode) {
                                    Ok(q) => self.push_estimate(load, Some(mode), metric, &q.mean_paoi),
                                    Err(e) => self.fail(&what(mode.name()), e),
                                }
                            }
                        }
                    }
                }
            }
            Fidelity::QueueLevel => {
                let Some(kernel) = kernel else { return };
                let s = &self.scenario;
                let sv = self.cfg.solver;
                let sol = match solve_with_kernel(kernel, load, s.n_d, s.lambda_a, sv.tol, sv.max_iter) {
                    Ok(v) => v,
                    Err(e) => return self.fail(&what("activity"), e),
                };
                let law = kernel.success_law(sol.pi_bar);
                let queue = self.sim_config(Fidelity::QueueLevel);
                let mut runs = Vec::new();
                let wanted: Vec<DeviceMode> =
                    if metrics.contains(&MetricKind::MeanPaoi) { modes.clone() } else { vec![DeviceMode::Correlated] };
                for mode in wanted {
                    match simulate_queue_on(exec, &queue, &law, load, mode) {
                        Ok(q) => runs.push((mode, q)),
                        Err(e) => return self.fail(&what(mode.name()), e),
                    }
                }
                for metric in metrics {
                    match metric {
                        MetricKind::Activity => {
                            let a = runs[0].1.activity;
                            self.push_estimate(load, None, metric, &a);
                        }
                        MetricKind::Coverage => match simulate_success_prob_on(exec, &sinr, sol.pi_bar, 1) {
                            Ok(p) => self.push_estimate(load, None, metric, &p.average),
                            Err(e) => self.fail(&what("coverage"), e),
                        },
                        MetricKind::MeanPaoi => {
                            for (mode, q) in runs.clone() {
                                self.push_estimate(load, Some(mode), metric, &q.mean_paoi);
                            }
                        }
                    }
                }
            }
        }
    }
}

fn fmt_value(v: f64) -> String {
    crate::csvio::fmt_float(v)
}

fn needs_kernel(cfg: &LabConfig) -> bool {
    cfg.sweep.engines.contains(&Engine::Analytic) || cfg.sim.fidelity == Fidelity::QueueLevel
}

fn eval_point(
    cfg: &LabConfig,
    shared: Option<&SuccessKernel>,
    exec: &dyn Executor,
    index: usize,
    timings: bool,
) -> PointOutput {
    let value = cfg.sweep.grid[index];
    let scenario = cfg.sweep.param.apply(&cfg.scenario, value);
    let mut p = Point {
        cfg,
        index,
        value,
        scenario,
        timings,
        out: PointOutput { rows: Vec::new(), failures: Vec::new(), flagged: Vec::new() },
    };
    let own;
    let kernel = match shared {
        Some(k) => Some(k),
        None if needs_kernel(cfg) => match SuccessKernel::new(&p.scenario) {
            Ok(k) => {
                own = k;
                Some(&own)
            }
            Err(e) => {
                p.fail("success kernel", e);
                None
            }
        },
        None => None,
    };
    for &engine in &cfg.sweep.engines {
        for &load in &cfg.sweep.load_models {
            let start = Instant::now();
            let from = p.out.rows.len();
            match engine {
                Engine::Analytic => {
                    if let Some(k) = kernel {
                        p.analytic(k, load);
                    }
                }
                Engine::Simulation => p.simulation(exec, kernel, load),
            }
            if p.timings {
                let secs = start.elapsed().as_secs_f64();
                for r in &mut p.out.rows[from..] {
                    r.runtime_s = Some(crate::csvio::round_sig(secs));
                }
            }
        }
    }
    p.out
}

/// Evaluates every grid point and hands rows to `sink` in grid order, one
/// call per grid point, as soon as the point and all before it are done.
pub fn run_sweep(
    cfg: &LabConfig,
    opts: &RunOptions,
    sink: &mut dyn FnMut(&[Row]) -> Result<()>,
) -> Result<SweepOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.max(1))
        .build()
        .map_err(|e| LabError::Io { context: "thread pool".into(), source: std::io::Error::other(e) })?;
    let exec = PoolExecutor(&pool);
    let mut outcome = SweepOutcome::default();
    let shared = if needs_kernel(cfg) && !cfg.sweep.param.geometric() {
        match SuccessKernel::new(&cfg.scenario) {
            Ok(k) => Some(k),
            Err(e) => {
                outcome.failures.push(("success kernel".to_string(), e));
                return Ok(outcome);
            }
        }
    } else {
        None
    };
    let n = cfg.sweep.grid.len();
    let (tx, rx) = mpsc::channel::<(usize, PointOutput)>();
    let mut sink_err = None;
    std::thread::scope(|scope| {
        let exec = &exec;
        let shared = shared.as_ref();
        let pool = &pool;
        scope.spawn(move || {
            pool.install(|| {
                (0..n).into_par_iter().for_each_with(tx, |tx, i| {
                    let _ = tx.send((i, eval_point(cfg, shared, exec, i, opts.timings)));
                });
            });
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (i, out) in rx {
            pending.insert(i, out);
            while let Some(out) = pending.remove(&next) {
                if opts.progress {
                    eprintln!("[{}/{}] {} = {}", next + 1, n, cfg.sweep.param.name(), fmt_value(cfg.sweep.grid[next]));
                }
                outcome.rows += out.rows.len();
                outcome.failures.extend(out.failures);
                outcome.flagged.extend(out.flagged);
                if sink_err.is_none() {
                    if let Err(e) = sink(&out.rows) {
                        sink_err = Some(e);
                    }
                }
                next += 1;
            }
        }
    });
    if let Some(e) = sink_err {
        return Err(e);
    }
    Ok(outcome)
}

/// Runs a sweep and collects the rows in memory.
pub fn run_collect(cfg: &LabConfig, opts: &RunOptions) -> Result<(Vec<Row>, SweepOutcome)> {
    let mut rows = Vec::new();
    let outcome = run_sweep(cfg, opts, &mut |r| {
        rows.extend_from_slice(r);
        Ok(())
    })?;
    Ok((rows, outcome))
}
