//! Conditional success probability, interference Laplace transforms,
//! moments of the conditional success probability and the beta-approximated
//! meta distribution.

use alloc::vec::Vec;
use core::cell::Cell;
use core::f64::consts::PI;

use libm::{cos, exp, expm1, log1p, pow, sqrt};

use crate::channel::{
    link_probability, los_probability, transmit_power, transmit_power_pdf, truncation_distance, Link, TransmitPowerLaw,
};
use crate::quad::{gauss_legendre, integrate, integrate_pieces, Estimate, Tol};
use crate::special::{binomial, factorial, inc_beta};
use crate::{Error, Result, Scenario};

const INNER_TOL: Tol = Tol { abs: 1e-11, rel: 1e-11, max_intervals: 200 };
const OUTER_REL: f64 = 1e-9;
const R_TOL: Tol = Tol { abs: 1e-9, rel: 1e-9, max_intervals: 200 };

/// One term `coef * exp(-g (I + sigma2))` of the gamma-CCDF approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    link: Link,
    coef: f64,
    g: f64,
}

/// Expansion of `P(SINR > theta)` for a serving link at horizontal
/// distance `r` into exponential terms in the interference.
fn terms(s: &Scenario, r: f64, link: Link) -> Vec<Term> {
    let p = s.link(link);
    let beta = pow(factorial(p.m), -1.0 / p.m as f64);
    let d2 = r * r + s.h * s.h;
    let base = beta * p.m as f64 * s.theta * pow(d2, 0.5 * p.alpha) / (p.eta * transmit_power(s, r, link));
    (1..=p.m)
        .map(|k| Term { link, coef: if k % 2 == 1 { 1.0 } else { -1.0 } * binomial(p.m, k), g: k as f64 * base })
        .collect()
}

/// `1 - prod_j (m / (m + g_j c))^m`, accurate for small `c`.
#[inline]
fn one_minus_kappa(m: u32, gs: &[f64], c: f64) -> f64 {
    let mf = m as f64;
    let mut small = true;
    for g in gs {
        small &= g * c < 1e-3 * mf;
    }
    if small {
        let mut acc = 0.0;
        for g in gs {
            acc += log1p(g * c / mf);
        }
        return -expm1(-mf * acc);
    }
    let mut base = 1.0;
    for g in gs {
        base *= mf / (mf + g * c);
    }
    let mut prod = 1.0;
    for _ in 0..m {
        prod *= base;
    }
    1.0 - prod
}

#[derive(Clone, Copy)]
enum Route<'a> {
    /// Integrate interferer powers against the transmit-power law.
    Power(&'a TransmitPowerLaw),
    /// Integrate over the interferer's distance to its own UAV.
    Distance,
    /// Fixed-rule version of `Distance`, used for tabulation.
    Rule(&'a InnerRule),
}

/// Precomputed Gauss-Legendre nodes of the interferer own-distance law.
#[derive(Debug, Clone)]
struct InnerRule {
    // (weight * P_c2(x) * 2x / r_c^2, power) per link
    nodes: [Vec<(f64, f64)>; 2],
}

impl InnerRule {
    fn new(s: &Scenario, n: usize) -> Self {
        let (xg, wg) = gauss_legendre(n);
        let nodes = Link::BOTH.map(|c2| {
            let mut out = Vec::new();
            for w in pieces(s, c2).windows(2) {
                let (c, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                for (x, wt) in xg.iter().zip(&wg) {
                    let x = c + half * x;
                    let weight = wt * half * link_probability(s, x, c2) * 2.0 * x / (s.r_c * s.r_c);
                    out.push((weight, transmit_power(s, x, c2)));
                }
            }
            out
        });
        InnerRule { nodes }
    }
}

/// Breakpoints of `[0, r_c]` at the power-truncation distance of `link`.
fn pieces(s: &Scenario, link: Link) -> Vec<f64> {
    let mut v = alloc::vec![0.0];
    if let Some(x) = truncation_distance(s, link) {
        if x > 0.0 && x < s.r_c {
            v.push(x);
        }
    }
    v.push(s.r_c);
    v
}

/// Breakpoints of `[0, r_c]` at both truncation distances.
fn all_pieces(s: &Scenario) -> Vec<f64> {
    let mut v = pieces(s, Link::Los);
    v.extend(pieces(s, Link::Nlos));
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// `sum_c2 E[1 - prod_j kappa_c1(g_j eta p z^-alpha)]` for an interferer at
/// Euclidean distance `z` over link `c1`.
fn inner(s: &Scenario, c1: Link, gs: &[f64], zpow: f64, route: Route<'_>, fail: &Cell<f64>) -> f64 {
    let p1 = s.link(c1);
    let m = p1.m;
    let scale = p1.eta * zpow;
    let mut total = 0.0;
    for c2 in Link::BOTH {
        match route {
            Route::Rule(rule) => {
                for &(w, pw) in &rule.nodes[c2.index()] {
                    total += w * one_minus_kappa(m, gs, scale * pw);
                }
            }
            Route::Distance => {
                let e = integrate_pieces(
                    |x| {
                        link_probability(s, x, c2) * 2.0 * x / (s.r_c * s.r_c)
                            * one_minus_kappa(m, gs, scale * transmit_power(s, x, c2))
                    },
                    &pieces(s, c2),
                    INNER_TOL,
                );
                note(fail, e);
                total += e.value;
            }
            Route::Power(law) => {
                let e = law.expect(c2, |q| one_minus_kappa(m, gs, scale * q), INNER_TOL);
                note(fail, e);
                total += e.value;
            }
        }
    }
    total
}

fn note(fail: &Cell<f64>, e: Estimate) {
    if !e.converged {
        fail.set(fail.get().max(e.error.max(f64::MIN_POSITIVE)));
    }
}

/// Interference exponent: `L(g) = exp(-pi_bar * exponent(g))`.
fn exponent(s: &Scenario, gs: &[f64], route: Route<'_>) -> Result<f64> {
    exponent_within(s, gs, route, f64::INFINITY)
}

/// Exponent from interferers within horizontal distance `radius`.
fn exponent_within(s: &Scenario, gs: &[f64], route: Route<'_>, radius: f64) -> Result<f64> {
    let lambda = s.lambda_u_m2();
    let fail = Cell::new(0.0);
    let mut total = 0.0;
    for c1 in Link::BOTH {
        let alpha = s.link(c1).alpha;
        let k = 2.0 / (alpha - 2.0);
        let hpow = pow(s.h, -alpha);
        let v_lo = if radius.is_finite() { pow(s.h / sqrt(radius * radius + s.h * s.h), 1.0 / k) } else { 0.0 };
        // z = h v^(-k) maps [h, inf) onto (0, 1]
        let f = |v: f64| {
            if v < 1e-12 {
                return 0.0;
            }
            let z = s.h * pow(v, -k);
            let zpow = hpow * pow(v, k * alpha);
            let y = sqrt((z * z - s.h * s.h).max(0.0));
            k * z * z / v * link_probability(s, y, c1) * inner(s, c1, gs, zpow, route, &fail)
        };
        let tol = Tol { abs: 1e-12 / (2.0 * PI * lambda), rel: OUTER_REL, max_intervals: 400 };
        let e = integrate(f, v_lo, 1.0, tol);
        note(&fail, e);
        total += e.value;
    }
    if fail.get() > 0.0 {
        return Err(Error::Quadrature { requested: OUTER_REL, achieved: fail.get() });
    }
    Ok(2.0 * PI * lambda * total)
}

fn check_prob(what: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain { what, value: v })
    }
}

fn check_distance(s: &Scenario, r: f64) -> Result<()> {
    if (0.0..=s.r_c).contains(&r) {
        Ok(())
    } else {
        Err(Error::Domain { what: "serving distance", value: r })
    }
}

/// Success probability of a device at horizontal distance `r` whose link to
/// its UAV is in state `link`, interferers active with probability `pi_bar`.
pub fn conditional_success(s: &Scenario, pi_bar: f64, r: f64, link: Link) -> Result<f64> {
    s.validate_physical()?;
    check_prob("pi_bar", pi_bar)?;
    check_distance(s, r)?;
    let law = transmit_power_pdf(s)?;
    let mut out = 0.0;
    for t in terms(s, r, link) {
        let lap = if pi_bar > 0.0 { exp(-pi_bar * exponent(s, &[t.g], Route::Power(&law))?) } else { 1.0 };
        out += t.coef * exp(-t.g * s.sigma2) * lap;
    }
    Ok(out.clamp(0.0, 1.0))
}

/// Joint Laplace transform `E[prod_j exp(-g_j I)]` of the interference for
/// one or two copies of the fading over the same field.
pub fn laplace_product(s: &Scenario, pi_bar: f64, g_values: &[f64]) -> Result<f64> {
    laplace_product_within(s, pi_bar, g_values, f64::INFINITY)
}

/// [`laplace_product`] with interferers cut off at horizontal distance
/// `radius` from the typical UAV.
pub fn laplace_product_within(s: &Scenario, pi_bar: f64, g_values: &[f64], radius: f64) -> Result<f64> {
    s.validate_physical()?;
    check_prob("pi_bar", pi_bar)?;
    if g_values.is_empty() || g_values.len() > 2 {
        return Err(Error::param("g_values", "one or two values required"));
    }
    if let Some(g) = g_values.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::Domain { what: "Laplace argument", value: *g });
    }
    if !(radius > 0.0) {
        return Err(Error::Domain { what: "window radius", value: radius });
    }
    if pi_bar == 0.0 {
        return Ok(1.0);
    }
    Ok(exp(-pi_bar * exponent_within(s, g_values, Route::Distance, radius)?))
}

/// First and second moment of the conditional success probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub m1: f64,
    pub m2: f64,
    pub pi_bar: f64,
    /// Second moment when the serving link state is frozen per realization
    /// rather than redrawn per attempt.
    pub m2_quenched: f64,
}

impl Moments {
    pub fn variance(&self) -> f64 {
        self.m2 - self.m1 * self.m1
    }

    /// Shape parameters of the matching beta law, `None` when degenerate.
    pub fn beta_params(&self) -> Option<(f64, f64)> {
        let var = self.variance();
        if var < 1e-10 {
            return None;
        }
        let a = self.m1 * (self.m1 - self.m2) / var;
        let b = (self.m1 - self.m2) * (1.0 - self.m1) / var;
        (a > 0.0 && b > 0.0).then_some((a, b))
    }
}

/// Expected success terms at one serving distance, given the Laplace
/// exponents `e1[t]` of single terms and `e2[(t, u)]` of pairs.
fn moment_integrands(
    s: &Scenario,
    r: f64,
    ts: &[Term],
    pi_bar: f64,
    mut e1: impl FnMut(usize) -> f64,
    mut e2: impl FnMut(usize, usize) -> f64,
) -> (f64, f64, f64) {
    let pl = los_probability(s, r);
    let w = |l: Link| if l == Link::Los { pl } else { 1.0 - pl };
    let mut m1 = 0.0;
    for (i, t) in ts.iter().enumerate() {
        m1 += w(t.link) * t.coef * exp(-t.g * s.sigma2 - pi_bar * e1(i));
    }
    let (mut m2, mut m2q) = (0.0, 0.0);
    for i in 0..ts.len() {
        for j in i..ts.len() {
            let (a, b) = (ts[i], ts[j]);
            let mult = if i == j { 1.0 } else { 2.0 };
            let v = a.coef * b.coef * exp(-(a.g + b.g) * s.sigma2 - pi_bar * e2(i, j));
            m2 += mult * w(a.link) * w(b.link) * v;
            if a.link == b.link {
                m2q += mult * w(a.link) * v;
            }
        }
    }
    (m1, m2, m2q)
}

fn all_terms(s: &Scenario, r: f64) -> Vec<Term> {
    let mut ts = terms(s, r, Link::Los);
    ts.extend(terms(s, r, Link::Nlos));
    ts
}

/// Moments by direct adaptive quadrature over the serving distance.
///
/// Slow; [`SuccessKernel::moments`] gives the same numbers from a cache.
pub fn moments(s: &Scenario, pi_bar: f64) -> Result<Moments> {
    s.validate_physical()?;
    check_prob("pi_bar", pi_bar)?;
    let fail: Cell<Option<Error>> = Cell::new(None);
    let eval = |r: f64| -> (f64, f64, f64) {
        let ts = all_terms(s, r);
        let grab = |gs: &[f64]| -> f64 {
            if pi_bar == 0.0 {
                return 0.0;
            }
            match exponent(s, gs, Route::Distance) {
                Ok(v) => v,
                Err(e) => {
                    fail.set(Some(e));
                    0.0
                }
            }
        };
        let e1: Vec<f64> = ts.iter().map(|t| grab(&[t.g])).collect();
        let n = ts.len();
        let mut e2 = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                e2[i * n + j] = grab(&[ts[i].g, ts[j].g]);
            }
        }
        let f = 2.0 * r / (s.r_c * s.r_c);
        let (a, b, c) = moment_integrands(s, r, &ts, pi_bar, |i| e1[i], |i, j| e2[i * n + j]);
        (f * a, f * b, f * c)
    };
    let bp = all_pieces(s);
    let m1 = integrate_pieces(|r| eval(r).0, &bp, R_TOL);
    let m2 = integrate_pieces(|r| eval(r).1, &bp, R_TOL);
    let m2q = integrate_pieces(|r| eval(r).2, &bp, R_TOL);
    if let Some(e) = fail.take() {
        return Err(e);
    }
    for e in [m1, m2, m2q] {
        e.into_result(R_TOL.abs)?;
    }
    Ok(Moments {
        m1: m1.value.clamp(0.0, 1.0),
        m2: m2.value.clamp(0.0, 1.0),
        pi_bar,
        m2_quenched: m2q.value.clamp(0.0, 1.0),
    })
}

/// Beta-approximated CCDF of the conditional success probability at `gamma`.
pub fn meta_distribution(moments: &Moments, gamma: f64) -> Result<f64> {
    check_prob("gamma", gamma)?;
    check_prob("m1", moments.m1)?;
    check_prob("m2", moments.m2)?;
    Ok(meta_ccdf(moments, gamma))
}

pub(crate) fn meta_ccdf(m: &Moments, gamma: f64) -> f64 {
    match m.beta_params() {
        Some((a, b)) => (1.0 - inc_beta(a, b, gamma)).clamp(0.0, 1.0),
        None => {
            if gamma < m.m1 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Piecewise Chebyshev-Lobatto grid over the serving distance.
#[derive(Debug, Clone, PartialEq)]
struct Grid {
    breaks: Vec<f64>,
    std: Vec<f64>,
    cc: Vec<f64>,
    bary: Vec<f64>,
}

impl Grid {
    fn new(breaks: Vec<f64>, n: usize) -> Self {
        let std: Vec<f64> = (0..=n).map(|j| -cos(PI * j as f64 / n as f64)).collect();
        let mut cc = alloc::vec![0.0; n + 1];
        for (j, w) in cc.iter_mut().enumerate() {
            let c = if j == 0 || j == n { 1.0 } else { 2.0 };
            let mut acc = 1.0;
            for k in 1..=n / 2 {
                let b = if 2 * k == n { 1.0 } else { 2.0 };
                acc -= b / (4.0 * (k * k) as f64 - 1.0) * cos(2.0 * PI * (k * j) as f64 / n as f64);
            }
            *w = c / n as f64 * acc;
        }
        let bary = (0..=n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        Grid { breaks, std, cc, bary }
    }

    fn points(&self) -> usize {
        self.std.len()
    }

    fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.breaks.windows(2) {
            let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            out.extend(self.std.iter().map(|x| c + h * x));
        }
        out
    }

    fn integrate(&self, values: &[f64]) -> f64 {
        let n = self.points();
        self.breaks
            .windows(2)
            .enumerate()
            .map(|(p, w)| {
                0.5 * (w[1] - w[0]) * self.cc.iter().zip(&values[p * n..(p + 1) * n]).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum()
    }

    fn interp(&self, values: &[f64], r: f64) -> f64 {
        let n = self.points();
        let last = self.breaks.len() - 2;
        let p = self.breaks.windows(2).position(|w| r <= w[1]).unwrap_or(last);
        let (lo, hi) = (self.breaks[p], self.breaks[p + 1]);
        let x = ((2.0 * r - lo - hi) / (hi - lo)).clamp(-1.0, 1.0);
        let vals = &values[p * n..(p + 1) * n];
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..n {
            let d = x - self.std[j];
            if d == 0.0 {
                return vals[j];
            }
            let t = self.bary[j] / d;
            num += t * vals[j];
            den += t;
        }
        num / den
    }
}

/// Success probability as a function of serving distance and link state.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessLaw {
    /// Activity probability the law was computed at, if any.
    pub pi_bar: Option<f64>,
    curve: Curve,
}

#[derive(Debug, Clone, PartialEq)]
enum Curve {
    Constant(f64),
    Table { scenario: Scenario, grid: Grid, values: [Vec<f64>; 2] },
}

impl SuccessLaw {
    /// The same success probability for every device and link.
    pub fn constant(p: f64) -> Result<Self> {
        check_prob("p_s", p)?;
        Ok(SuccessLaw { pi_bar: None, curve: Curve::Constant(p) })
    }

    /// Tabulates `f(r, link)` on a Chebyshev grid over `[0, r_c]`.
    pub fn from_fn<F: FnMut(f64, Link) -> f64>(s: &Scenario, panels: usize, nodes: usize, mut f: F) -> Self {
        let mut breaks = all_pieces(s);
        refine(&mut breaks, panels.max(1));
        let grid = Grid::new(breaks, nodes.max(2));
        let rs = grid.nodes();
        let values = Link::BOTH.map(|l| rs.iter().map(|&r| f(r, l).clamp(0.0, 1.0)).collect());
        SuccessLaw { pi_bar: None, curve: Curve::Table { scenario: s.clone(), grid, values } }
    }

    pub fn p_success(&self, r: f64, link: Link) -> f64 {
        match &self.curve {
            Curve::Constant(p) => *p,
            Curve::Table { grid, values, .. } => grid.interp(&values[link.index()], r).clamp(0.0, 1.0),
        }
    }

    /// Success probability with the link state averaged out.
    pub fn p_mixed(&self, r: f64) -> f64 {
        match &self.curve {
            Curve::Constant(p) => *p,
            Curve::Table { scenario, .. } => {
                let pl = los_probability(scenario, r);
                pl * self.p_success(r, Link::Los) + (1.0 - pl) * self.p_success(r, Link::Nlos)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.curve, Curve::Constant(_))
    }

    /// Distances where the tabulated curve switches panels.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.curve {
            Curve::Constant(_) => Vec::new(),
            Curve::Table { grid, .. } => grid.breaks.clone(),
        }
    }
}

/// Splits the widest interval until there are `n` of them.
fn refine(breaks: &mut Vec<f64>, n: usize) {
    while breaks.len() - 1 < n {
        let (i, _) = breaks
            .windows(2)
            .enumerate()
            .max_by(|a, b| (a.1[1] - a.1[0]).total_cmp(&(b.1[1] - b.1[0])))
            .unwrap_or((0, &[0.0, 0.0][..]));
        let mid = 0.5 * (breaks[i] + breaks[i + 1]);
        breaks.insert(i + 1, mid);
    }
}

/// Cache of interference exponents over a serving-distance grid.
///
/// The exponents do not depend on the activity probability, so one kernel
/// serves every `pi_bar`, load model, device count and arrival rate.
#[derive(Debug, Clone)]
pub struct SuccessKernel {
    scenario: Scenario,
    grid: Grid,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone)]
struct Node {
    r: f64,
    terms: Vec<Term>,
    e1: Vec<f64>,
    e2: Vec<f64>,
}

impl SuccessKernel {
    pub const PANELS: usize = 2;
    pub const NODES: usize = 24;

    pub fn new(s: &Scenario) -> Result<Self> {
        Self::with_resolution(s, Self::PANELS, Self::NODES)
    }

    pub fn with_resolution(s: &Scenario, panels: usize, nodes: usize) -> Result<Self> {
        s.validate_physical()?;
        let mut breaks = all_pieces(s);
        refine(&mut breaks, panels.max(1));
        let grid = Grid::new(breaks, nodes.max(2));
        let rule = InnerRule::new(s, 32);
        let mut out = Vec::new();
        for r in grid.nodes() {
            let ts = all_terms(s, r);
            let n = ts.len();
            let mut e1 = Vec::with_capacity(n);
            for t in &ts {
                e1.push(exponent(s, &[t.g], Route::Rule(&rule))?);
            }
            let mut e2 = alloc::vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    e2[i * n + j] = exponent(s, &[ts[i].g, ts[j].g], Route::Rule(&rule))?;
                }
            }
            out.push(Node { r, terms: ts, e1, e2 });
        }
        Ok(SuccessKernel { scenario: s.clone(), grid, nodes: out })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn moments(&self, pi_bar: f64) -> Moments {
        let s = &self.scenario;
        let n = self.grid.points() * (self.grid.breaks.len() - 1);
        let (mut v1, mut v2, mut v3) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for node in &self.nodes {
            let k = node.terms.len();
            let (a, b, c) =
                moment_integrands(s, node.r, &node.terms, pi_bar, |i| node.e1[i], |i, j| node.e2[i * k + j]);
            let f = 2.0 * node.r / (s.r_c * s.r_c);
            v1.push(f * a);
            v2.push(f * b);
            v3.push(f * c);
        }
        Moments {
            m1: self.grid.integrate(&v1).clamp(0.0, 1.0),
            m2: self.grid.integrate(&v2).clamp(0.0, 1.0),
            pi_bar,
            m2_quenched: self.grid.integrate(&v3).clamp(0.0, 1.0),
        }
    }

    /// Per-link success probability at activity `pi_bar`.
    pub fn success_law(&self, pi_bar: f64) -> SuccessLaw {
        let s = &self.scenario;
        let values = Link::BOTH.map(|l| {
            self.nodes
                .iter()
                .map(|node| {
                    let mut v = 0.0;
                    for (t, e) in node.terms.iter().zip(&node.e1) {
                        if t.link == l {
                            v += t.coef * exp(-t.g * s.sigma2 - pi_bar * e);
                        }
                    }
                    v.clamp(0.0, 1.0)
                })
                .collect()
        });
        SuccessLaw {
            pi_bar: Some(pi_bar),
            curve: Curve::Table { scenario: s.clone(), grid: self.grid.clone(), values },
        }
    }
}
