use approx::assert_relative_eq;
use paoi_core::channel::{link_probability, Link};
use paoi_core::quad::{integrate_pieces, Tol};
use paoi_core::sim::sample_laplace;
use paoi_core::sinr::{conditional_success, laplace_product, laplace_product_within, meta_distribution, moments};
use paoi_core::{Environment, Moments, Scenario, SuccessKernel};

fn quiet(env: Environment) -> Scenario {
    let mut s = Scenario::reference(env);
    s.sigma2 = 0.0;
    s
}

#[test]
fn empty_field_without_noise_always_succeeds() {
    let s = quiet(Environment::Dense);
    for link in Link::BOTH {
        for r in [0.0, 30.0, 119.0] {
            assert_relative_eq!(conditional_success(&s, 0.0, r, link).unwrap(), 1.0, epsilon = 1e-12);
        }
    }
    let m = moments(&s, 0.0).unwrap();
    assert_relative_eq!(m.m1, 1.0, epsilon = 1e-9);
    assert_relative_eq!(m.m2, 1.0, epsilon = 1e-9);
}

#[test]
fn huge_threshold_never_succeeds() {
    let mut s = Scenario::reference(Environment::Urban);
    s.theta = 1e12;
    for link in Link::BOTH {
        assert!(conditional_success(&s, 0.3, 50.0, link).unwrap() < 1e-9);
    }
    let k = SuccessKernel::new(&s).unwrap();
    let m = k.moments(0.3);
    assert!(m.m1 < 1e-9 && m.m2 < 1e-9);
}

#[test]
fn laplace_trivial_limits() {
    let s = Scenario::reference(Environment::Suburban);
    assert_eq!(laplace_product(&s, 0.0, &[5e9]).unwrap(), 1.0);
    let tiny = laplace_product(&s, 0.7, &[1e-3]).unwrap();
    assert!(tiny > 1.0 - 1e-6 && tiny <= 1.0);
    assert!(laplace_product(&s, 0.5, &[]).is_err());
    assert!(laplace_product(&s, 0.5, &[1.0, 2.0, 3.0]).is_err());
    assert!(laplace_product(&s, 0.5, &[-1.0]).is_err());
}

#[test]
fn laplace_monotone_and_product_bound() {
    let s = Scenario::reference(Environment::Urban);
    let gs = [1e6, 1e8, 1e10];
    let mut last = 1.0;
    for g in gs {
        let v = laplace_product(&s, 0.4, &[g]).unwrap();
        assert!(v > 0.0 && v < last);
        last = v;
    }
    let (g1, g2) = (3e8, 2e9);
    let l1 = laplace_product(&s, 0.4, &[g1]).unwrap();
    let l2 = laplace_product(&s, 0.4, &[g2]).unwrap();
    let l12 = laplace_product(&s, 0.4, &[g1, g2]).unwrap();
    assert!(l12 <= l1.min(l2));
    assert!(laplace_product(&s, 0.8, &[g1]).unwrap() < l1);
}

#[test]
fn success_decreases_in_threshold_and_activity() {
    let base = Scenario::reference(Environment::Dense);
    for link in Link::BOTH {
        let mut prev = 1.0;
        for theta in [0.1, 1.0, 10.0] {
            let mut s = base.clone();
            s.theta = theta;
            let v = conditional_success(&s, 0.5, 60.0, link).unwrap();
            assert!((0.0..=1.0).contains(&v) && v <= prev + 1e-12);
            prev = v;
        }
        let lo = conditional_success(&base, 0.1, 60.0, link).unwrap();
        let hi = conditional_success(&base, 0.9, 60.0, link).unwrap();
        assert!(hi <= lo);
    }
}

#[test]
fn moments_average_the_conditional_law() {
    let s = Scenario::reference(Environment::Urban);
    let pi = 0.4;
    let m = moments(&s, pi).unwrap();
    let avg = integrate_pieces(
        |r| {
            let f = 2.0 * r / (s.r_c * s.r_c);
            Link::BOTH
                .iter()
                .map(|&l| link_probability(&s, r, l) * conditional_success(&s, pi, r, l).unwrap())
                .sum::<f64>()
                * f
        },
        &[0.0, s.r_c],
        Tol::new(1e-9, 1e-9),
    );
    assert_relative_eq!(m.m1, avg.value, epsilon = 1e-4);
    assert!(m.m1 * m.m1 <= m.m2 + 1e-12 && m.m2 <= m.m1 + 1e-12);
    assert!(m.m1 * m.m1 <= m.m2_quenched + 1e-12 && m.m2_quenched <= m.m1 + 1e-12);
}

#[test]
fn kernel_matches_direct_quadrature() {
    for env in [Environment::Highrise, Environment::Suburban] {
        let s = Scenario::reference(env);
        let k = SuccessKernel::new(&s).unwrap();
        for pi in [0.05, 0.6] {
            let a = k.moments(pi);
            let b = moments(&s, pi).unwrap();
            assert_relative_eq!(a.m1, b.m1, epsilon = 1e-8);
            assert_relative_eq!(a.m2, b.m2, epsilon = 1e-8);
            assert_relative_eq!(a.m2_quenched, b.m2_quenched, epsilon = 1e-8);
        }
        let law = k.success_law(0.3);
        for r in [1.0, 47.0, 101.0] {
            for link in Link::BOTH {
                let direct = conditional_success(&s, 0.3, r, link).unwrap();
                assert_relative_eq!(law.p_success(r, link), direct, epsilon = 1e-7);
            }
        }
    }
}

#[test]
fn highrise_average_success_near_quarter() {
    let s = Scenario::reference(Environment::Highrise);
    let k = SuccessKernel::new(&s).unwrap();
    let pi = paoi_core::activity::solve_with_kernel(&k, paoi_core::LoadModel::BandwidthSplit, 1, 0.5, 1e-9, 200)
        .unwrap()
        .pi_bar;
    let m1 = k.moments(pi).m1;
    assert!((m1 - 0.24).abs() < 0.03, "m1 = {m1}");
}

#[test]
fn meta_distribution_examples() {
    let m = Moments { m1: 0.5, m2: 0.3, pi_bar: 0.0, m2_quenched: 0.3 };
    let (a, b) = m.beta_params().unwrap();
    assert_relative_eq!(a, 2.0, epsilon = 1e-12);
    assert_relative_eq!(b, 2.0, epsilon = 1e-12);
    assert_relative_eq!(meta_distribution(&m, 0.5).unwrap(), 0.5, epsilon = 1e-12);
    assert_eq!(meta_distribution(&m, 0.0).unwrap(), 1.0);
    assert_eq!(meta_distribution(&m, 1.0).unwrap(), 0.0);
    // Beta(2,2) CCDF is 1 - 3x^2 + 2x^3
    for x in [0.1, 0.25, 0.9] {
        assert_relative_eq!(meta_distribution(&m, x).unwrap(), 1.0 - 3.0 * x * x + 2.0 * x * x * x, epsilon = 1e-12);
    }
    let step = Moments { m1: 0.7, m2: 0.49, pi_bar: 0.0, m2_quenched: 0.49 };
    assert_eq!(meta_distribution(&step, 0.69).unwrap(), 1.0);
    assert_eq!(meta_distribution(&step, 0.71).unwrap(), 0.0);
    assert!(meta_distribution(&m, 1.5).is_err());
}

#[test]
fn meta_distribution_integrates_to_mean() {
    let s = Scenario::reference(Environment::Dense);
    let k = SuccessKernel::new(&s).unwrap();
    let m = k.moments(0.4);
    let e = integrate_pieces(|g| meta_distribution(&m, g).unwrap(), &[0.0, 1.0], Tol::new(1e-10, 1e-10));
    assert_relative_eq!(e.value, m.m1, epsilon = 1e-8);
}

#[test]
fn laplace_matches_sampled_fields() {
    let s = Scenario::reference(Environment::Urban);
    let m = s.link(Link::Los).m;
    let beta = (1..=m).map(f64::from).product::<f64>().powf(-1.0 / m as f64);
    let r: f64 = 60.0;
    let d2 = r * r + s.h * s.h;
    let p = paoi_core::channel::transmit_power(&s, r, Link::Los);
    let g = beta * m as f64 * s.theta * d2.powf(0.5 * s.alpha_l) / (s.eta_l * p);
    let pi = 0.5;
    let window = 20_000.0;
    let analytic = laplace_product_within(&s, pi, &[g], window).unwrap();
    let mc = sample_laplace(&s, window, pi, g, 100_000, 11).unwrap();
    assert!((mc.mean / analytic - 1.0).abs() < 0.01, "mc {} ± {} analytic {analytic}", mc.mean, mc.stderr);
    assert!((mc.mean - analytic).abs() < 4.0 * mc.stderr);
    // the far field still contributes beyond the window
    let full = laplace_product(&s, pi, &[g]).unwrap();
    assert!(full < analytic && analytic / full - 1.0 < 0.02);
}
