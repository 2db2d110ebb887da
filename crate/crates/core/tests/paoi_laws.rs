use approx::assert_relative_eq;
use paoi_core::activity::conditional_activity;
use paoi_core::paoi::{self, fixed, t_n, waiting_time_xn};
use paoi_core::{DeviceMode, Environment, Error, LoadModel, PaoiDistribution, Scenario, SuccessLaw};
use proptest::prelude::*;

fn traffic(n_d: u32, lambda_a: f64) -> Scenario {
    let mut s = Scenario::reference(Environment::Dense);
    s.n_d = n_d;
    s.lambda_a = lambda_a;
    s
}

#[test]
fn bandwidth_split_pmf_examples() {
    assert_relative_eq!(paoi::paoi_pmf_lm1(0.8, 0.5, 2, 4).unwrap(), 0.2, epsilon = 1e-15);
    assert_eq!(paoi::paoi_pmf_lm1(1.0, 1.0, 1, 2).unwrap(), 1.0);
    for nd in 1..5 {
        for n in 0..=nd as u64 {
            assert_eq!(paoi::paoi_pmf_lm1(0.6, 0.3, nd, n).unwrap(), 0.0);
            assert_eq!(paoi::paoi_ccdf_lm1(0.6, 0.3, nd, n).unwrap(), 1.0);
        }
    }
    assert!(paoi::paoi_ccdf_lm1(0.8, 0.5, 2, 400).unwrap() < 1e-30);
    assert!(paoi::paoi_pmf_lm1(0.0, 0.5, 2, 4).is_err());
}

#[test]
fn time_split_pmf_examples() {
    assert_eq!(paoi::delta_prime_pmf_lm2(0.8, 0.5, 2, 1).unwrap(), 0.0);
    assert_relative_eq!(paoi::delta_prime_pmf_lm2(0.8, 0.5, 2, 3).unwrap(), 0.2, epsilon = 1e-15);
    // always delivered on the first attempt: 2 + geometric(lambda) - 1
    for n in 2..12u64 {
        let want = 0.3 * 0.7f64.powi((n - 2) as i32);
        assert_relative_eq!(paoi::delta_prime_pmf_lm2(1.0, 0.3, 4, n).unwrap(), want, epsilon = 1e-15);
    }
}

#[test]
fn pmf_matches_pair_enumeration() {
    for &(p, lam, nd) in &[(0.5f64, 0.2f64, 1u32), (0.8, 0.5, 2), (0.3, 0.9, 3)] {
        let mut lm1 = vec![0.0; 200];
        for n1 in 1..200u64 {
            for n2 in 1..200u64 {
                let n = (n1 + n2 * nd as u64) as usize;
                if n < lm1.len() {
                    lm1[n] += lam * p * (1.0 - lam).powi(n1 as i32 - 1) * (1.0 - p).powi(n2 as i32 - 1);
                }
            }
        }
        let d = PaoiDistribution::lm1(p, lam, nd).unwrap();
        for (n, &want) in lm1.iter().enumerate() {
            assert_relative_eq!(d.pmf(n as u64), want, epsilon = 1e-13);
            assert_relative_eq!(paoi::paoi_pmf_lm1(p, lam, nd, n as u64).unwrap(), want, epsilon = 1e-14);
        }
    }
}

#[test]
fn distribution_mean_from_ccdf() {
    for &(p, lam, nd) in &[(0.5f64, 0.2f64, 1u32), (0.8, 0.5, 2), (0.3, 0.9, 3), (0.05, 0.05, 6)] {
        for d in [PaoiDistribution::lm1(p, lam, nd).unwrap(), PaoiDistribution::lm2_prime(p, lam, nd).unwrap()] {
            let direct: f64 = d.pmf.iter().enumerate().map(|(i, m)| (d.support_start + i as u64) as f64 * m).sum();
            assert_relative_eq!(d.mean(), direct, max_relative = 1e-9);
            let by_ccdf: f64 = (0..d.tail_truncation).map(|n| d.ccdf(n)).sum();
            assert_relative_eq!(d.mean(), by_ccdf, max_relative = 1e-9);
            assert!(d.mean() >= d.support_start as f64);
        }
        let mean_lm1 = 1.0 / lam + nd as f64 / p;
        assert_relative_eq!(PaoiDistribution::lm1(p, lam, nd).unwrap().mean(), mean_lm1, max_relative = 1e-9);
    }
}

#[test]
fn fused_law_uses_ccdf_power() {
    let (p, lam, nd) = (0.7, 0.4, 3);
    let d = PaoiDistribution::lm1(p, lam, nd).unwrap();
    let powered: f64 = (0..d.tail_truncation).map(|n| d.ccdf(n).powi(nd as i32)).sum();
    assert_relative_eq!(fixed::correlated_lm1(p, lam, nd).unwrap(), powered, max_relative = 1e-9);
    let d2 = PaoiDistribution::lm2_prime(p, lam, nd).unwrap();
    let powered2: f64 = (0..d2.tail_truncation).map(|n| d2.ccdf(n).powi(nd as i32)).sum();
    assert_relative_eq!(fixed::correlated_lm2(p, lam, nd).unwrap(), powered2, max_relative = 1e-9);
}

#[test]
fn waiting_and_retransmission_examples() {
    assert_eq!(waiting_time_xn(0.3, 1).unwrap(), 0.0);
    assert_relative_eq!(waiting_time_xn(0.5, 2).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    assert!(waiting_time_xn(0.0, 2).is_err());
    assert_eq!(t_n(1.0, 5).unwrap(), 1.0);
    assert_relative_eq!(t_n(0.5, 2).unwrap(), 3.0, epsilon = 1e-15);
    // arrivals at the end of the first slot wait N_d - 2 slots
    for nd in 2..8 {
        assert_relative_eq!(waiting_time_xn(1.0, nd).unwrap(), nd as f64 - 2.0, epsilon = 1e-12);
    }
}

#[test]
fn closed_form_examples() {
    let one = SuccessLaw::constant(1.0).unwrap();
    let m = paoi::mean_paoi_single_device(&one, &traffic(1, 1.0)).unwrap();
    assert_relative_eq!(m.mean_paoi, 3.0, epsilon = 1e-12);
    let m = paoi::mean_paoi_uncorrelated_lm1(&one, &traffic(1, 1.0)).unwrap();
    assert_relative_eq!(m.mean_paoi, 3.0, epsilon = 1e-12);
    let m = paoi::mean_paoi_correlated_lm1_approx(&one, &traffic(2, 1.0)).unwrap();
    assert_relative_eq!(m.mean_paoi, 3.0, epsilon = 1e-12);
    assert_eq!(m.method, paoi_core::Method::Approx);
    let law = SuccessLaw::constant(0.6).unwrap();
    let m = paoi::mean_paoi_correlated_lm1_approx(&law, &traffic(1, 0.25)).unwrap();
    assert_relative_eq!(m.mean_paoi, 1.0 / 0.6 + 4.0, epsilon = 1e-12);
    // single device: the fused law reduces to the per-device law
    let c = paoi::mean_paoi_correlated_lm1(&law, &traffic(1, 0.25)).unwrap();
    assert_relative_eq!(c.mean_paoi, 1.0 / 0.6 + 4.0, max_relative = 1e-10);
    // transmission term is linear in N_d
    let u3 = paoi::mean_paoi_uncorrelated_lm1(&law, &traffic(3, 0.25)).unwrap().mean_paoi;
    let u6 = paoi::mean_paoi_uncorrelated_lm1(&law, &traffic(6, 0.25)).unwrap().mean_paoi;
    assert_relative_eq!(u6 - 4.0, 2.0 * (u3 - 4.0), max_relative = 1e-12);
}

#[test]
fn time_split_means() {
    let law = SuccessLaw::constant(0.7).unwrap();
    let s = traffic(3, 0.4);
    let c = paoi::mean_paoi_correlated_lm2(&law, &s).unwrap();
    let d = PaoiDistribution::lm2_prime(0.7, 0.4, 3).unwrap();
    assert!(c.mean_paoi >= waiting_time_xn(0.4, 3).unwrap());
    assert!(c.mean_paoi <= d.mean() + waiting_time_xn(0.4, 3).unwrap());
    let u = paoi::mean_paoi_uncorrelated_lm2(&law, &s).unwrap();
    let want = 1.0 / 0.4 + 2.0 * t_n(0.7, 3).unwrap() + 2.0 * waiting_time_xn(0.4, 3).unwrap();
    assert_relative_eq!(u.mean_paoi, want, max_relative = 1e-12);
    // single device: both load models agree
    let s1 = traffic(1, 0.4);
    let a = paoi::mean_paoi(&law, &s1, LoadModel::BandwidthSplit, DeviceMode::Uncorrelated).unwrap();
    let b = paoi::mean_paoi(&law, &s1, LoadModel::TimeSplit, DeviceMode::Correlated).unwrap();
    assert_eq!(a.mean_paoi, b.mean_paoi);
    assert_relative_eq!(a.mean_paoi, 2.0 / 0.7 + 2.5, max_relative = 1e-12);
}

#[test]
fn uncorrelated_gap_at_saturation() {
    let law = SuccessLaw::constant(0.9).unwrap();
    let s = traffic(18, 1.0);
    let lm1 = paoi::mean_paoi_uncorrelated_lm1(&law, &s).unwrap().mean_paoi;
    let lm2 = paoi::mean_paoi_uncorrelated_lm2(&law, &s).unwrap().mean_paoi;
    assert!(lm1 > lm2);
    let want = 2.0 * 18.0 / 0.9 - 2.0 * t_n(0.9, 18).unwrap() - 2.0 * waiting_time_xn(1.0, 18).unwrap();
    assert_relative_eq!(lm1 - lm2, want, max_relative = 1e-12);
}

#[test]
fn vanishing_success_is_infinite_mean() {
    let s = traffic(2, 0.5);
    let mut s2 = s.clone();
    s2.lambda_a = 0.0;
    let law = SuccessLaw::constant(0.5).unwrap();
    assert!(matches!(paoi::mean_paoi_single_device(&law, &s2), Err(Error::InfiniteMean)));
    let zero = SuccessLaw::constant(0.0).unwrap();
    for load in LoadModel::BOTH {
        for mode in [DeviceMode::Correlated, DeviceMode::Uncorrelated] {
            assert!(matches!(paoi::mean_paoi(&zero, &s, load, mode), Err(Error::InfiniteMean)));
        }
    }
    let sparse = SuccessLaw::from_fn(&s, 2, 8, |r, _| if r > 60.0 { 0.0 } else { 0.9 });
    assert!(matches!(paoi::mean_paoi_uncorrelated_lm1(&sparse, &s), Err(Error::InfiniteMean)));
}

#[test]
fn time_split_wins_for_large_correlated_clusters() {
    let kernel = paoi_core::SuccessKernel::new(&Scenario::reference(Environment::Dense)).unwrap();
    for nd in [8u32, 10] {
        let s = traffic(nd, 0.5);
        let law = kernel.success_law(0.4);
        let lm1 = paoi::mean_paoi_correlated_lm1(&law, &s).unwrap().mean_paoi;
        let lm2 = paoi::mean_paoi_correlated_lm2(&law, &s).unwrap().mean_paoi;
        assert!(lm2 <= lm1, "n_d {nd}: {lm2} > {lm1}");
    }
}

#[test]
fn conditional_activity_examples() {
    let s = traffic(1, 0.3);
    assert_relative_eq!(conditional_activity(LoadModel::BandwidthSplit, &s, 0.6).unwrap(), 0.3 / 0.9, epsilon = 1e-15);
    let s = traffic(2, 0.5);
    assert_relative_eq!(conditional_activity(LoadModel::BandwidthSplit, &s, 0.8).unwrap(), 1.0 / 1.8, epsilon = 1e-15);
    let s = traffic(2, 1.0);
    assert_eq!(conditional_activity(LoadModel::TimeSplit, &s, 1.0).unwrap(), 1.0);
    let s = traffic(1, 0.0);
    assert!(conditional_activity(LoadModel::BandwidthSplit, &s, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laws_are_normalized(p in 0.02f64..=1.0, lam in 0.02f64..=1.0, nd in 1u32..8) {
        let a = PaoiDistribution::lm1(p, lam, nd).unwrap();
        let b = PaoiDistribution::lm2_prime(p, lam, nd).unwrap();
        prop_assert!((a.total_mass() - 1.0).abs() < 1e-9);
        prop_assert!((b.total_mass() - 1.0).abs() < 1e-9);
        prop_assert_eq!(a.pmf(nd as u64), 0.0);
        prop_assert_eq!(b.pmf(1), 0.0);
    }

    #[test]
    fn ccdf_is_nonincreasing(p in 0.02f64..=1.0, lam in 0.02f64..=1.0, nd in 1u32..6, n in 0u64..60) {
        let a = paoi::paoi_ccdf_lm1(p, lam, nd, n).unwrap();
        let b = paoi::paoi_ccdf_lm1(p, lam, nd, n + 1).unwrap();
        prop_assert!(b <= a + 1e-15 && (0.0..=1.0).contains(&b));
        let c = paoi::delta_prime_ccdf_lm2(p, lam, nd, n).unwrap();
        let d = paoi::delta_prime_ccdf_lm2(p, lam, nd, n + 1).unwrap();
        prop_assert!(d <= c + 1e-15);
        let diff = c - d - paoi::delta_prime_pmf_lm2(p, lam, nd, n + 1).unwrap();
        prop_assert!(diff.abs() < 1e-12);
    }

    #[test]
    fn waiting_time_is_bounded(lam in 1e-3f64..=1.0, nd in 1u32..30) {
        let x = waiting_time_xn(lam, nd).unwrap();
        prop_assert!(x >= -1e-12 && x <= nd as f64 - 1.0 + 1e-12);
    }

    #[test]
    fn fused_mean_below_single_mean(p in 0.05f64..=1.0, lam in 0.05f64..=1.0, nd in 1u32..6) {
        let single = PaoiDistribution::lm1(p, lam, nd).unwrap().mean();
        let fused = fixed::correlated_lm1(p, lam, nd).unwrap();
        prop_assert!(fused <= single * (1.0 + 1e-9));
        prop_assert!(fused >= nd as f64 + 1.0 - 1e-9);
    }

    #[test]
    fn activity_is_a_probability(p in 1e-3f64..=1.0, lam in 0.0f64..=1.0, nd in 1u32..20) {
        let s = traffic(nd, lam);
        for load in LoadModel::BOTH {
            let a = conditional_activity(load, &s, p).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
        }
        let hi = traffic(nd, (lam + 0.1).min(1.0));
        prop_assert!(conditional_activity(LoadModel::BandwidthSplit, &hi, p).unwrap()
            >= conditional_activity(LoadModel::BandwidthSplit, &s, p).unwrap());
    }
}
