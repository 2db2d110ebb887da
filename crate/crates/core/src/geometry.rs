//! Scenario parameters, cluster topologies and the serving-distance law.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, log, sin, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::channel::Link;
use crate::{Error, Result};

/// Urban environment class of the air-to-ground LoS model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Environment {
    Highrise,
    Dense,
    Suburban,
    Urban,
}

impl Environment {
    pub const ALL: [Environment; 4] =
        [Environment::Highrise, Environment::Dense, Environment::Suburban, Environment::Urban];

    /// The `(a, b)` pair of the elevation-angle LoS model.
    pub fn params(self) -> (f64, f64) {
        match self {
            Environment::Highrise => (27.0, 0.08),
            Environment::Dense => (12.0, 0.11),
            Environment::Suburban => (9.6, 0.16),
            Environment::Urban => (4.88, 0.43),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Environment::Highrise => "highrise",
            Environment::Dense => "dense",
            Environment::Suburban => "suburban",
            Environment::Urban => "urban",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    /// Position in [`Environment::ALL`], used when sweeping environments.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|e| *e == self).unwrap_or(0)
    }
}

/// Full parameter set of the network.
///
/// Distances are in metres, powers in watts and the cluster density in
/// clusters per square kilometre. Time is counted in slots of length `slot`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub lambda_u: f64,
    pub r_c: f64,
    pub h: f64,
    pub a: f64,
    pub b: f64,
    pub rho_l: f64,
    pub rho_n: f64,
    pub p_u: f64,
    pub eps_l: f64,
    pub eps_n: f64,
    pub alpha_l: f64,
    pub alpha_n: f64,
    pub m_l: u32,
    pub m_n: u32,
    pub eta_l: f64,
    pub eta_n: f64,
    pub sigma2: f64,
    pub theta: f64,
    pub n_d: u32,
    pub lambda_a: f64,
    pub slot: f64,
}

/// Per-link slice of a [`Scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub alpha: f64,
    pub m: u32,
    pub eta: f64,
    pub rho: f64,
    pub eps: f64,
}

impl Scenario {
    /// Reference parameters for an environment. The compensation factors sit
    /// at their upper bound, so the cell-edge device transmits exactly `p_u`.
    pub fn reference(env: Environment) -> Self {
        let (a, b) = env.params();
        let mut s = Scenario {
            lambda_u: 1.0,
            r_c: 120.0,
            h: 100.0,
            a,
            b,
            rho_l: 1e-3,
            rho_n: 1e-3,
            p_u: 0.1,
            eps_l: 0.0,
            eps_n: 0.0,
            alpha_l: 2.1,
            alpha_n: 4.0,
            m_l: 3,
            m_n: 1,
            eta_l: 1.0,
            eta_n: 0.01,
            sigma2: 1e-9,
            theta: 1.0,
            n_d: 1,
            lambda_a: 0.5,
            slot: 1.0,
        };
        s.eps_l = s.eps_max(Link::Los);
        s.eps_n = s.eps_max(Link::Nlos);
        s
    }

    pub fn environment(&self) -> Option<Environment> {
        Environment::ALL.into_iter().find(|e| e.params() == (self.a, self.b))
    }

    pub fn set_environment(&mut self, env: Environment) {
        (self.a, self.b) = env.params();
    }

    pub fn link(&self, link: Link) -> LinkParams {
        match link {
            Link::Los => {
                LinkParams { alpha: self.alpha_l, m: self.m_l, eta: self.eta_l, rho: self.rho_l, eps: self.eps_l }
            }
            Link::Nlos => {
                LinkParams { alpha: self.alpha_n, m: self.m_n, eta: self.eta_n, rho: self.rho_n, eps: self.eps_n }
            }
        }
    }

    /// Largest compensation factor that keeps the cluster-edge power at `p_u`.
    pub fn eps_max(&self, link: Link) -> f64 {
        let p = self.link(link);
        let r_max = sqrt(self.r_c * self.r_c + self.h * self.h);
        log(self.p_u / p.rho) / (p.alpha * log(r_max))
    }

    /// Cluster density in m⁻².
    pub fn lambda_u_m2(&self) -> f64 {
        self.lambda_u * 1e-6
    }

    /// Checks every parameter invariant, including the bound on `eps`.
    pub fn validate(&self) -> Result<()> {
        self.validate_physical()?;
        for (link, field) in [(Link::Los, "eps_l"), (Link::Nlos, "eps_n")] {
            let eps = self.link(link).eps;
            if eps > self.eps_max(link) * (1.0 + 1e-12) {
                return Err(Error::param(field, "exceeds the power-control bound"));
            }
        }
        Ok(())
    }

    /// Checks the invariants every formula needs, without the `eps` bound.
    pub fn validate_physical(&self) -> Result<()> {
        let positive = [
            ("lambda_u", self.lambda_u),
            ("r_c", self.r_c),
            ("h", self.h),
            ("a", self.a),
            ("b", self.b),
            ("rho_l", self.rho_l),
            ("rho_n", self.rho_n),
            ("p_u", self.p_u),
            ("alpha_l", self.alpha_l),
            ("alpha_n", self.alpha_n),
            ("eta_l", self.eta_l),
            ("eta_n", self.eta_n),
            ("theta", self.theta),
            ("slot", self.slot),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(field, "must be positive and finite"));
            }
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::param("sigma2", "must be nonnegative"));
        }
        for (field, a) in [("alpha_l", self.alpha_l), ("alpha_n", self.alpha_n)] {
            if a <= 2.0 {
                return Err(Error::param(field, "must exceed 2 for finite interference"));
            }
        }
        if self.m_l < 1 {
            return Err(Error::param("m_l", "must be at least 1"));
        }
        if self.m_n < 1 {
            return Err(Error::param("m_n", "must be at least 1"));
        }
        if self.m_l > 20 || self.m_n > 20 {
            return Err(Error::param("m", "fading shapes above 20 are not supported"));
        }
        for (field, e) in [("eps_l", self.eps_l), ("eps_n", self.eps_n)] {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::param(field, "must be nonnegative"));
            }
        }
        if self.n_d < 1 {
            return Err(Error::param("n_d", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.lambda_a) {
            return Err(Error::param("lambda_a", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Interferer seen by the typical UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    /// Horizontal distance to the typical UAV.
    pub d_typical: f64,
    /// Horizontal distance to its own cluster UAV.
    pub d_own: f64,
}

/// One sampled network realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub typical_devices: Vec<f64>,
    pub interferers: Vec<Interferer>,
    pub seed: u64,
}

pub fn sample_topology(scenario: &Scenario, window_radius: f64, seed: u64) -> Result<Topology> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut topo = sample_topology_with(scenario, window_radius, &mut rng)?;
    topo.seed = seed;
    Ok(topo)
}

/// Same as [`sample_topology`] with a caller-supplied generator.
pub fn sample_topology_with<R: Rng + ?Sized>(scenario: &Scenario, window_radius: f64, rng: &mut R) -> Result<Topology> {
    if !(window_radius > scenario.r_c) || !window_radius.is_finite() {
        return Err(Error::Domain { what: "window radius", value: window_radius });
    }
    let r_c = scenario.r_c;
    let typical_devices = (0..scenario.n_d).map(|_| r_c * sqrt(rng.random::<f64>())).collect();
    let mean = scenario.lambda_u_m2() * PI * window_radius * window_radius;
    let count = if mean > 0.0 {
        let pois = Poisson::new(mean).map_err(|_| Error::Domain { what: "cluster count mean", value: mean })?;
        pois.sample(rng) as usize
    } else {
        0
    };
    let mut interferers = Vec::with_capacity(count);
    for _ in 0..count {
        let d = window_radius * sqrt(rng.random::<f64>());
        let own = r_c * sqrt(rng.random::<f64>());
        let phi = 2.0 * PI * rng.random::<f64>();
        let (x, y) = (d + own * cos(phi), own * sin(phi));
        interferers.push(Interferer { d_typical: sqrt(x * x + y * y), d_own: own });
    }
    Ok(Topology { typical_devices, interferers, seed: 0 })
}

/// Density of the horizontal serving distance, uniform in the cluster disk.
pub fn serving_distance_pdf(scenario: &Scenario, r: f64) -> Result<f64> {
    if !(0.0..=scenario.r_c).contains(&r) {
        return Err(Error::Domain { what: "serving distance", value: r });
    }
    Ok(2.0 * r / (scenario.r_c * scenario.r_c))
}
