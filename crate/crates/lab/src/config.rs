//! Flat `section.key = value` run files.
//!
//! Physical quantities carry their unit in the key name. Every key is
//! optional and defaults to the dense reference scenario. The text form is
//! TOML, so `[section]` headers work as well as dotted keys.

use std::fmt::Write as _;

use paoi_core::sim::{default_window, Fidelity};
use paoi_core::{DeviceMode, Environment, LoadModel, Scenario};
use toml::Value;

use crate::error::{LabError, Result};
use crate::sweep::{Engine, MetricKind, SweepSpec, SweptParam};

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub realizations: u32,
    pub slots: u64,
    pub seed: u64,
    /// Interferer window radius in metres; `None` picks it from the scenario.
    pub window_m: Option<f64>,
    pub fidelity: Fidelity,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings { realizations: 100, slots: 10_000, seed: 1, window_m: None, fidelity: Fidelity::FullSinr }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tol: 1e-9, max_iter: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabConfig {
    pub scenario: Scenario,
    pub sweep: SweepSpec,
    pub sim: SimSettings,
    pub solver: SolverSettings,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            scenario: Scenario::reference(Environment::Dense),
            sweep: SweepSpec::default(),
            sim: SimSettings::default(),
            solver: SolverSettings::default(),
        }
    }
}

pub fn fidelity_name(f: Fidelity) -> &'static str {
    match f {
        Fidelity::FullSinr => "full_sinr",
        Fidelity::QueueLevel => "queue",
    }
}

fn fidelity_from_name(s: &str) -> Option<Fidelity> {
    match s {
        "full_sinr" => Some(Fidelity::FullSinr),
        "queue" => Some(Fidelity::QueueLevel),
        _ => None,
    }
}

impl LabConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| LabError::config("<file>", e.message()))?;
        let mut flat = Vec::new();
        flatten("", &Value::Table(table), &mut flat);
        let mut cfg = LabConfig::default();
        // the preset name goes first so explicit a and b override it
        if let Some((_, v)) = flat.iter().find(|(k, _)| k == "environment.preset") {
            let name = as_str("environment.preset", v)?;
            let env = Environment::from_name(name)
                .ok_or_else(|| LabError::config("environment.preset", format!("unknown environment `{name}`")))?;
            cfg.scenario.set_environment(env);
        }
        for (key, v) in &flat {
            cfg.apply(key, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a single `key=value` override in config syntax. Leaves the
    /// config untouched on error; call `validate` once all overrides are in.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, _) = assignment.split_once('=').ok_or_else(|| LabError::config(assignment, "expected key=value"))?;
        let key = key.trim();
        let doc = format!("{assignment}\n");
        let table: toml::Table = doc.parse().map_err(|e: toml::de::Error| LabError::config(key, e.message()))?;
        let mut flat = Vec::new();
        flatten("", &Value::Table(table), &mut flat);
        let mut next = self.clone();
        for (k, v) in &flat {
            if k == "environment.preset" {
                let name = as_str(k, v)?;
                let env = Environment::from_name(name)
                    .ok_or_else(|| LabError::config(k.as_str(), format!("unknown environment `{name}`")))?;
                next.scenario.set_environment(env);
            } else {
                next.apply(k, v)?;
            }
        }
        *self = next;
        Ok(())
    }

    fn apply(&mut self, key: &str, v: &Value) -> Result<()> {
        let s = &mut self.scenario;
        match key {
            "environment.preset" => {}
            "geometry.lambda_u_per_km2" => s.lambda_u = as_f64(key, v)?,
            "geometry.r_c_m" => s.r_c = as_f64(key, v)?,
            "geometry.h_m" => s.h = as_f64(key, v)?,
            "environment.a" => s.a = as_f64(key, v)?,
            "environment.b" => s.b = as_f64(key, v)?,
            "power.rho_los_w" => s.rho_l = as_f64(key, v)?,
            "power.rho_nlos_w" => s.rho_n = as_f64(key, v)?,
            "power.p_max_w" => s.p_u = as_f64(key, v)?,
            "power.eps_los" => s.eps_l = as_f64(key, v)?,
            "power.eps_nlos" => s.eps_n = as_f64(key, v)?,
            "channel.alpha_los" => s.alpha_l = as_f64(key, v)?,
            "channel.alpha_nlos" => s.alpha_n = as_f64(key, v)?,
            "channel.m_los" => s.m_l = as_u32(key, v)?,
            "channel.m_nlos" => s.m_n = as_u32(key, v)?,
            "channel.eta_los" => s.eta_l = as_f64(key, v)?,
            "channel.eta_nlos" => s.eta_n = as_f64(key, v)?,
            "channel.sigma2_w" => s.sigma2 = as_f64(key, v)?,
            "channel.theta" => s.theta = as_f64(key, v)?,
            "traffic.n_d" => s.n_d = as_u32(key, v)?,
            "traffic.lambda_a" => s.lambda_a = as_f64(key, v)?,
            "traffic.slot_s" => s.slot = as_f64(key, v)?,
            "sweep.param" => {
                let name = as_str(key, v)?;
                self.sweep.param = SweptParam::from_name(name)
                    .ok_or_else(|| LabError::config(key, format!("unknown parameter `{name}`")))?;
            }
            "sweep.grid" => {
                self.sweep.grid = as_array(key, v)?
                    .iter()
                    .map(|x| match x {
                        Value::String(name) => Environment::from_name(name)
                            .map(|e| e.index() as f64)
                            .ok_or_else(|| LabError::config(key, format!("unknown environment `{name}`"))),
                        other => as_f64(key, other),
                    })
                    .collect::<Result<_>>()?;
            }
            "sweep.metrics" => {
                self.sweep.metrics = names(key, v, |n| MetricKind::from_name(n))?;
            }
            "sweep.engines" => {
                self.sweep.engines = names(key, v, |n| Engine::from_name(n))?;
            }
            "sweep.device_modes" => {
                self.sweep.device_modes = names(key, v, |n| DeviceMode::from_name(n))?;
            }
            "sweep.load_models" => {
                self.sweep.load_models = as_array(key, v)?
                    .iter()
                    .map(|x| {
                        let n = as_u32(key, x)?;
                        u8::try_from(n)
                            .ok()
                            .and_then(LoadModel::from_number)
                            .ok_or_else(|| LabError::config(key, format!("no load model {n}")))
                    })
                    .collect::<Result<_>>()?;
            }
            "sim.realizations" => self.sim.realizations = as_u32(key, v)?,
            "sim.slots" => self.sim.slots = as_u64(key, v)?,
            "sim.seed" => self.sim.seed = as_u64(key, v)?,
            "sim.window_m" => {
                let w = as_f64(key, v)?;
                self.sim.window_m = if w > 0.0 { Some(w) } else { None };
            }
            "sim.fidelity" => {
                let name = as_str(key, v)?;
                self.sim.fidelity = fidelity_from_name(name)
                    .ok_or_else(|| LabError::config(key, format!("unknown fidelity `{name}`")))?;
            }
            "solver.tol" => self.solver.tol = as_f64(key, v)?,
            "solver.max_iter" => self.solver.max_iter = as_u64(key, v)? as usize,
            _ => return Err(LabError::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate().map_err(|e| match e {
            paoi_core::Error::InvalidParameter { field, reason } => LabError::config(scenario_key(field), reason),
            other => LabError::config("scenario", other.to_string()),
        })?;
        self.sweep.validate()?;
        for &v in &self.sweep.grid {
            let s = self.sweep.param.apply(&self.scenario, v);
            s.validate().map_err(|e| {
                LabError::config(
                    "sweep.grid",
                    format!("{} = {} gives an invalid scenario: {e}", self.sweep.param.name(), v),
                )
            })?;
        }
        if self.sim.realizations < 1 {
            return Err(LabError::config("sim.realizations", "must be at least 1"));
        }
        if self.sim.slots < 64 {
            return Err(LabError::config("sim.slots", "must be at least 64"));
        }
        if !(self.solver.tol > 0.0) {
            return Err(LabError::config("solver.tol", "must be positive"));
        }
        if self.solver.max_iter < 1 {
            return Err(LabError::config("solver.max_iter", "must be at least 1"));
        }
        Ok(())
    }

    pub fn window(&self, s: &Scenario) -> f64 {
        self.sim.window_m.unwrap_or_else(|| default_window(s))
    }

    /// Text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("geometry.lambda_u_per_km2", num(s.lambda_u));
        line("geometry.r_c_m", num(s.r_c));
        line("geometry.h_m", num(s.h));
        line("environment.a", num(s.a));
        line("environment.b", num(s.b));
        line("power.rho_los_w", num(s.rho_l));
        line("power.rho_nlos_w", num(s.rho_n));
        line("power.p_max_w", num(s.p_u));
        line("power.eps_los", num(s.eps_l));
        line("power.eps_nlos", num(s.eps_n));
        line("channel.alpha_los", num(s.alpha_l));
        line("channel.alpha_nlos", num(s.alpha_n));
        line("channel.m_los", s.m_l.to_string());
        line("channel.m_nlos", s.m_n.to_string());
        line("channel.eta_los", num(s.eta_l));
        line("channel.eta_nlos", num(s.eta_n));
        line("channel.sigma2_w", num(s.sigma2));
        line("channel.theta", num(s.theta));
        line("traffic.n_d", s.n_d.to_string());
        line("traffic.lambda_a", num(s.lambda_a));
        line("traffic.slot_s", num(s.slot));
        let sw = &self.sweep;
        line("sweep.param", quote(sw.param.name()));
        line("sweep.grid", list(sw.grid.iter().map(|&v| num(v))));
        line("sweep.metrics", list(sw.metrics.iter().map(|m| quote(m.name()))));
        line("sweep.engines", list(sw.engines.iter().map(|e| quote(e.name()))));
        line("sweep.load_models", list(sw.load_models.iter().map(|l| l.number().to_string())));
        line("sweep.device_modes", list(sw.device_modes.iter().map(|d| quote(d.name()))));
        line("sim.realizations", self.sim.realizations.to_string());
        line("sim.slots", self.sim.slots.to_string());
        line("sim.seed", self.sim.seed.to_string());
        line("sim.window_m", num(self.sim.window_m.unwrap_or(0.0)));
        line("sim.fidelity", quote(fidelity_name(self.sim.fidelity)));
        line("solver.tol", num(self.solver.tol));
        line("solver.max_iter", self.solver.max_iter.to_string());
        out
    }
}

fn scenario_key(field: &str) -> &'static str {
    match field {
        "lambda_u" => "geometry.lambda_u_per_km2",
        "r_c" => "geometry.r_c_m",
        "h" => "geometry.h_m",
        "a" => "environment.a",
        "b" => "environment.b",
        "rho_l" => "power.rho_los_w",
        "rho_n" => "power.rho_nlos_w",
        "p_u" => "power.p_max_w",
        "eps_l" => "power.eps_los",
        "eps_n" => "power.eps_nlos",
        "alpha_l" => "channel.alpha_los",
        "alpha_n" => "channel.alpha_nlos",
        "m_l" => "channel.m_los",
        "m_n" => "channel.m_nlos",
        "m" => "channel.m_los",
        "eta_l" => "channel.eta_los",
        "eta_n" => "channel.eta_nlos",
        "sigma2" => "channel.sigma2_w",
        "theta" => "channel.theta",
        "n_d" => "traffic.n_d",
        "lambda_a" => "traffic.lambda_a",
        "slot" => "traffic.slot_s",
        _ => "scenario",
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

// shortest representation that parses back to the same float
fn num(v: f64) -> String {
    let s = format!("{v:?}");
    if v.is_finite() && !s.contains(['.', 'e', 'E']) {
        format!("{s}.0")
    } else {
        s
    }
}

fn quote(s: &str) -> String {
    format!("\"{s}\"")
}

fn list(items: impl Iterator<Item = String>) -> String {
    format!("[{}]", items.collect::<Vec<_>>().join(", "))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(LabError::config(key, "expected a number")),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(LabError::config(key, "expected a nonnegative integer")),
    }
}

fn as_u32(key: &str, v: &Value) -> Result<u32> {
    u32::try_from(as_u64(key, v)?).map_err(|_| LabError::config(key, "integer too large"))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| LabError::config(key, "expected a string"))
}

fn as_array<'a>(key: &str, v: &'a Value) -> Result<&'a [Value]> {
    v.as_array().map(Vec::as_slice).ok_or_else(|| LabError::config(key, "expected a list"))
}

fn names<T>(key: &str, v: &Value, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    as_array(key, v)?
        .iter()
        .map(|x| {
            let n = as_str(key, x)?;
            f(n).ok_or_else(|| LabError::config(key, format!("unknown value `{n}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = LabConfig::default();
        cfg.scenario.sigma2 = 1.234e-11;
        cfg.sweep.grid = vec![0.1, 0.2, 0.30000000000000004];
        cfg.sim.window_m = Some(12_345.5);
        let back = LabConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn sections_and_dotted_keys_agree() {
        let a = LabConfig::parse("geometry.h_m = 80\ntraffic.n_d = 3\n").unwrap();
        let b = LabConfig::parse("[geometry]\nh_m = 80.0\n[traffic]\nn_d = 3\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.scenario.h, 80.0);
    }

    #[test]
    fn environment_preset_sets_los_model() {
        let c = LabConfig::parse("environment.preset = \"urban\"\n").unwrap();
        assert_eq!((c.scenario.a, c.scenario.b), (4.88, 0.43));
        let c = LabConfig::parse("environment.preset = \"urban\"\nenvironment.b = 0.5\n").unwrap();
        assert_eq!((c.scenario.a, c.scenario.b), (4.88, 0.5));
    }

    #[test]
    fn errors_name_the_key() {
        let e = LabConfig::parse("geometry.nope = 1\n").unwrap_err();
        assert!(e.to_string().contains("geometry.nope"));
        let e = LabConfig::parse("channel.alpha_los = 1.5\n").unwrap_err();
        assert!(e.to_string().contains("channel.alpha_los"), "{e}");
        let e = LabConfig::parse("sweep.metrics = []\n").unwrap_err();
        assert!(e.to_string().contains("sweep.metrics"));
        let e = LabConfig::parse("sweep.grid = [0.5, 0.2, 0.3]\n").unwrap_err();
        assert!(e.to_string().contains("sweep.grid"));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn overrides() {
        let mut c = LabConfig::default();
        c.set("traffic.lambda_a=0.25").unwrap();
        c.set("sweep.engines = [\"analytic\"]").unwrap();
        assert_eq!(c.scenario.lambda_a, 0.25);
        assert_eq!(c.sweep.engines, vec![Engine::Analytic]);
        assert!(c.set("traffic.lambda_a=\"x\"").is_err());
        assert!(c.set("traffic.nope=1").is_err());
        assert_eq!(c.scenario.lambda_a, 0.25);
        // checked as a whole, so order does not matter
        c.set("sweep.param=\"n_d\"").unwrap();
        assert!(c.validate().is_err());
        c.set("sweep.grid=[1, 2, 3]").unwrap();
        c.validate().unwrap();
    }
}
