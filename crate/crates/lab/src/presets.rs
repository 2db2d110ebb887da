//! Named configurations: one per environment plus the figure recipes.

use paoi_core::{DeviceMode, Environment, LoadModel, Scenario};

use crate::config::LabConfig;
use crate::sweep::{Engine, MetricKind, SweepSpec, SweptParam};

const NAMES: [(&str, &str); 12] = [
    ("highrise", "activity and coverage vs arrival rate, high-rise environment"),
    ("dense", "activity and coverage vs arrival rate, dense urban environment"),
    ("suburban", "activity and coverage vs arrival rate, suburban environment"),
    ("urban", "activity and coverage vs arrival rate, urban environment"),
    ("fig5a", "activity vs arrival rate, analytic and simulated, suburban, load model 1"),
    ("fig5b", "activity vs arrival rate, analytic and simulated, urban, both load models, two devices"),
    ("fig6a", "correlated mean PAoI vs device count, suburban, load model 1"),
    ("fig6b", "correlated mean PAoI vs device count, suburban, load model 2"),
    ("fig7a", "correlated mean PAoI vs device count, dense, both load models"),
    ("fig7b", "correlated mean PAoI vs device count at light load, dense, both load models"),
    ("fig8a", "uncorrelated mean PAoI vs device count, suburban, load model 1"),
    ("fig8b", "uncorrelated mean PAoI vs device count, suburban, load model 2"),
];

pub fn names() -> Vec<&'static str> {
    NAMES.iter().map(|(n, _)| *n).collect()
}

pub fn description(name: &str) -> Option<&'static str> {
    NAMES.iter().find(|(n, _)| *n == name).map(|(_, d)| *d)
}

fn lambda_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

fn nd_grid(max: u32) -> Vec<f64> {
    (1..=max).map(f64::from).collect()
}

fn environment_preset(env: Environment) -> LabConfig {
    let mut c = LabConfig { scenario: Scenario::reference(env), ..LabConfig::default() };
    c.scenario.lambda_a = 0.5;
    c.sweep = SweepSpec {
        param: SweptParam::LambdaA,
        grid: lambda_grid(),
        metrics: vec![MetricKind::Activity, MetricKind::Coverage],
        engines: vec![Engine::Analytic],
        load_models: vec![LoadModel::BandwidthSplit],
        device_modes: vec![DeviceMode::Correlated],
    };
    c
}

fn activity_figure(env: Environment, n_d: u32, loads: Vec<LoadModel>) -> LabConfig {
    let mut c = environment_preset(env);
    c.scenario.n_d = n_d;
    c.sweep.metrics = vec![MetricKind::Activity];
    c.sweep.engines = vec![Engine::Analytic, Engine::Simulation];
    c.sweep.load_models = loads;
    c.sim.realizations = 1000;
    c.sim.slots = 1000;
    c
}

fn paoi_figure(env: Environment, lambda_a: f64, max_nd: u32, loads: Vec<LoadModel>, mode: DeviceMode) -> LabConfig {
    let mut c = environment_preset(env);
    c.scenario.lambda_a = lambda_a;
    c.sweep = SweepSpec {
        param: SweptParam::Nd,
        grid: nd_grid(max_nd),
        metrics: vec![MetricKind::MeanPaoi],
        engines: vec![Engine::Analytic],
        load_models: loads,
        device_modes: vec![mode],
    };
    c
}

pub fn preset(name: &str) -> Option<LabConfig> {
    use DeviceMode::{Correlated, Uncorrelated};
    use Environment::{Dense, Suburban, Urban};
    use LoadModel::{BandwidthSplit as Lm1, TimeSplit as Lm2};
    let both = || vec![Lm1, Lm2];
    Some(match name {
        "highrise" | "dense" | "suburban" | "urban" => environment_preset(Environment::from_name(name)?),
        "fig5a" => activity_figure(Suburban, 1, vec![Lm1]),
        "fig5b" => activity_figure(Urban, 2, both()),
        "fig6a" => paoi_figure(Suburban, 0.5, 10, vec![Lm1], Correlated),
        "fig6b" => paoi_figure(Suburban, 0.5, 10, vec![Lm2], Correlated),
        "fig7a" => paoi_figure(Dense, 0.5, 10, both(), Correlated),
        "fig7b" => paoi_figure(Dense, 0.2, 6, both(), Correlated),
        "fig8a" => paoi_figure(Suburban, 0.5, 10, vec![Lm1], Uncorrelated),
        "fig8b" => paoi_figure(Suburban, 0.5, 10, vec![Lm2], Uncorrelated),
        _ => return None,
    })
}
