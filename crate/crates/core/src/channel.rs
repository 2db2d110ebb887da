//! Air-to-ground link model, truncated power control and fading.

use libm::{atan, exp, pow, sqrt};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::quad::{integrate, Estimate, Tol};
use crate::{Error, Result, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    Los,
    Nlos,
}

impl Link {
    pub const BOTH: [Link; 2] = [Link::Los, Link::Nlos];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Probability that a device at horizontal distance `r` has a LoS link.
pub fn los_probability(s: &Scenario, r: f64) -> f64 {
    let deg = if r <= 0.0 { 90.0 } else { atan(s.h / r).to_degrees() };
    1.0 / (1.0 + s.a * exp(-s.b * (deg - s.a)))
}

/// Probability of `link` at horizontal distance `r`.
pub fn link_probability(s: &Scenario, r: f64, link: Link) -> f64 {
    let pl = los_probability(s, r);
    match link {
        Link::Los => pl,
        Link::Nlos => 1.0 - pl,
    }
}

/// Fractional path-loss inversion, capped at `p_u`.
pub fn transmit_power(s: &Scenario, r: f64, link: Link) -> f64 {
    let p = s.link(link);
    let d2 = r * r + s.h * s.h;
    (p.rho * pow(d2, 0.5 * p.alpha * p.eps)).min(s.p_u)
}

/// Horizontal distance at which the uncapped power reaches `p_u`, if that
/// happens inside the cluster.
pub fn truncation_distance(s: &Scenario, link: Link) -> Option<f64> {
    let p = s.link(link);
    if p.eps <= 0.0 {
        return None;
    }
    let d2 = pow(s.p_u / p.rho, 2.0 / (p.alpha * p.eps));
    let x2 = d2 - s.h * s.h;
    if x2 >= s.r_c * s.r_c {
        None
    } else {
        Some(sqrt(x2.max(0.0)))
    }
}

/// Continuous part and atom of one link's transmit-power law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBranch {
    pub link: Link,
    /// Support of the density, empty when `lo == hi`.
    pub lo: f64,
    pub hi: f64,
    pub atom_at: f64,
    pub atom: f64,
}

/// Joint law of the transmit power and link state of a uniformly placed
/// device.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitPowerLaw {
    scenario: Scenario,
    pub branches: [PowerBranch; 2],
}

pub fn transmit_power_pdf(s: &Scenario) -> Result<TransmitPowerLaw> {
    s.validate_physical()?;
    let tol = Tol::abs(1e-13);
    let mass = |lo: f64, hi: f64, link: Link| -> Result<f64> {
        integrate(|x| link_probability(s, x, link) * 2.0 * x / (s.r_c * s.r_c), lo, hi, tol).into_result(tol.abs)
    };
    let mut branches =
        [Link::Los, Link::Nlos].map(|link| PowerBranch { link, lo: 0.0, hi: 0.0, atom_at: 0.0, atom: 0.0 });
    for b in branches.iter_mut() {
        let p = s.link(b.link);
        if p.eps <= 0.0 {
            let rho = p.rho.min(s.p_u);
            *b = PowerBranch { link: b.link, lo: rho, hi: rho, atom_at: rho, atom: mass(0.0, s.r_c, b.link)? };
            continue;
        }
        let lo = transmit_power(s, 0.0, b.link);
        let hi = transmit_power(s, s.r_c, b.link);
        let atom = match truncation_distance(s, b.link) {
            Some(x) => mass(x, s.r_c, b.link)?,
            None => 0.0,
        };
        *b = PowerBranch { link: b.link, lo, hi, atom_at: s.p_u, atom };
    }
    Ok(TransmitPowerLaw { scenario: s.clone(), branches })
}

impl TransmitPowerLaw {
    /// Density of the power on `link` at `q`, zero outside the support.
    pub fn density(&self, q: f64, link: Link) -> f64 {
        let s = &self.scenario;
        let b = &self.branches[link.index()];
        if !(q > b.lo && q < b.hi) {
            return 0.0;
        }
        let p = s.link(link);
        let ae = p.alpha * p.eps;
        let ratio = q / p.rho;
        let x2 = pow(ratio, 2.0 / ae) - s.h * s.h;
        let x = sqrt(x2.max(0.0));
        link_probability(s, x, link) * 2.0 * pow(ratio, 2.0 / ae - 1.0) / (ae * p.rho * s.r_c * s.r_c)
    }

    /// `E[g(p) 1{link}]` under this law, atom included.
    pub fn expect<F: FnMut(f64) -> f64>(&self, link: Link, mut g: F, tol: Tol) -> Estimate {
        let b = self.branches[link.index()];
        let mut e = if b.hi > b.lo {
            // q = lo + (hi - lo) u², which removes the square-root kink at lo
            let w = b.hi - b.lo;
            integrate(
                |u| {
                    let q = b.lo + w * u * u;
                    g(q) * self.density(q, link) * 2.0 * w * u
                },
                0.0,
                1.0,
                tol,
            )
        } else {
            Estimate { value: 0.0, error: 0.0, converged: true }
        };
        if b.atom > 0.0 {
            e.value += b.atom * g(b.atom_at);
        }
        e
    }

    pub fn total_mass(&self, tol: Tol) -> Result<f64> {
        let mut m = 0.0;
        for link in Link::BOTH {
            m += self.expect(link, |_| 1.0, tol).into_result(tol.abs)?;
        }
        Ok(m)
    }
}

/// Unit-mean gamma draw of integer shape `m`.
pub fn sample_fading<R: Rng + ?Sized>(m: u32, rng: &mut R) -> Result<f64> {
    if m < 1 {
        return Err(Error::param("m", "fading shape must be at least 1"));
    }
    Ok(gamma_unit(m, rng))
}

#[inline]
pub(crate) fn gamma_unit<R: Rng + ?Sized>(m: u32, rng: &mut R) -> f64 {
    let mut sum: f64 = Exp1.sample(rng);
    for _ in 1..m {
        let e: f64 = Exp1.sample(rng);
        sum += e;
    }
    sum / m as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Environment;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn los_examples() {
        let s = Scenario::reference(Environment::Urban);
        assert!(1.0 - los_probability(&s, 0.0) < 1e-15);
        let s = Scenario::reference(Environment::Suburban);
        let expected = 1.0 / (1.0 + 9.6 * libm::exp(-0.16 * (45.0 - 9.6)));
        assert_relative_eq!(los_probability(&s, 100.0), expected, epsilon = 1e-12);
        assert_relative_eq!(los_probability(&s, 100.0), 0.9678, epsilon = 1e-4);
    }

    #[test]
    fn power_examples() {
        let mut s = Scenario::reference(Environment::Urban);
        s.eps_l = 0.0;
        assert_eq!(transmit_power(&s, 77.0, Link::Los), 1e-3);
        s.eps_l = 1.0;
        s.h = 10.0;
        assert_eq!(transmit_power(&s, 0.0, Link::Los), 0.1);
        let s = Scenario::reference(Environment::Urban);
        assert_relative_eq!(transmit_power(&s, 120.0, Link::Los), 0.1, epsilon = 1e-12);
        assert!(transmit_power(&s, 60.0, Link::Nlos) < 0.1);
    }

    #[test]
    fn degenerate_law_is_atomic() {
        let mut s = Scenario::reference(Environment::Dense);
        s.eps_l = 0.0;
        s.eps_n = 0.0;
        let law = transmit_power_pdf(&s).unwrap();
        for b in law.branches {
            assert_eq!(b.lo, b.hi);
            assert_eq!(b.atom_at, 1e-3);
        }
        assert_relative_eq!(law.branches[0].atom + law.branches[1].atom, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_law_mass() {
        for env in Environment::ALL {
            let law = transmit_power_pdf(&Scenario::reference(env)).unwrap();
            assert_relative_eq!(law.total_mass(Tol::abs(1e-12)).unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn truncated_law_mass() {
        let mut s = Scenario::reference(Environment::Suburban);
        s.eps_l = 0.6;
        s.eps_n = 0.3;
        let law = transmit_power_pdf(&s).unwrap();
        assert!(law.branches.iter().all(|b| b.atom > 0.0 && b.hi == s.p_u));
        assert_relative_eq!(law.total_mass(Tol::abs(1e-12)).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fading_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_fading(0, &mut rng).is_err());
        let n = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let g = sample_fading(3, &mut rng).unwrap();
            s1 += g;
            s2 += g * g;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((mean - 1.0).abs() < 0.005, "mean {mean}");
        assert!((var - 1.0 / 3.0).abs() < 0.02 / 3.0, "var {var}");
    }
}
