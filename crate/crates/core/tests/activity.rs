use paoi_core::activity::{activity_rhs, solve_mean_activity, solve_with_kernel};
use paoi_core::{Environment, Error, LoadModel, Scenario, SuccessKernel};

const TOL: f64 = 1e-9;

#[test]
fn residual_within_tolerance() {
    let k = SuccessKernel::new(&Scenario::reference(Environment::Dense)).unwrap();
    for load in LoadModel::BOTH {
        for (nd, lam) in [(1, 0.3), (3, 0.5), (6, 0.9)] {
            let sol = solve_with_kernel(&k, load, nd, lam, TOL, 500).unwrap();
            let rhs = activity_rhs(load, nd, lam, &k.moments(sol.pi_bar));
            assert!((sol.pi_bar - rhs).abs() <= TOL, "{load:?} {nd} {lam}: {} vs {rhs}", sol.pi_bar);
            assert!(sol.residual <= TOL);
            assert!((0.0..=1.0).contains(&sol.pi_bar));
            assert_eq!(sol.load_model, load);
        }
    }
}

#[test]
fn suburban_curve_shape() {
    let k = SuccessKernel::new(&Scenario::reference(Environment::Suburban)).unwrap();
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let pis: Vec<f64> = grid
        .iter()
        .map(|&l| solve_with_kernel(&k, LoadModel::BandwidthSplit, 1, l, TOL, 500).unwrap().pi_bar)
        .collect();
    assert_eq!(pis[0], 0.0);
    assert!(pis.windows(2).all(|w| w[1] >= w[0]));
    for w in pis.windows(3) {
        assert!(w[1] - w[0] >= w[2] - w[1] - 1e-9, "not concave: {w:?}");
    }
    assert!(pis[10] < 1.0);
    // bounded by the activity at the smallest success probability
    let p_min = (0..=120).map(|r| k.success_law(pis[10]).p_mixed(r as f64)).fold(1.0, f64::min);
    assert!(pis[10] <= 1.0 / (1.0 + p_min) + 1e-9);
}

#[test]
fn activity_monotone_in_arrival_rate() {
    let k = SuccessKernel::new(&Scenario::reference(Environment::Highrise)).unwrap();
    for load in LoadModel::BOTH {
        let mut last = -1.0;
        for i in 0..=8 {
            let lam = i as f64 / 8.0;
            let pi = solve_with_kernel(&k, load, 3, lam, TOL, 500).unwrap().pi_bar;
            assert!(pi >= last - 1e-9);
            last = pi;
        }
    }
}

#[test]
fn time_split_is_busier_at_high_load() {
    let k = SuccessKernel::new(&Scenario::reference(Environment::Urban)).unwrap();
    for nd in [2, 4] {
        for lam in [0.8, 0.9, 1.0] {
            let a = solve_with_kernel(&k, LoadModel::BandwidthSplit, nd, lam, TOL, 500).unwrap().pi_bar;
            let b = solve_with_kernel(&k, LoadModel::TimeSplit, nd, lam, TOL, 500).unwrap().pi_bar;
            assert!(b >= a, "{nd} {lam}: {b} < {a}");
        }
        let full = solve_with_kernel(&k, LoadModel::TimeSplit, nd, 1.0, TOL, 500).unwrap().pi_bar;
        assert!((full - 1.0).abs() < 1e-9);
    }
}

#[test]
fn solver_entry_points_agree() {
    let mut s = Scenario::reference(Environment::Dense);
    s.n_d = 2;
    s.lambda_a = 0.4;
    let a = solve_mean_activity(LoadModel::TimeSplit, &s, TOL, 500).unwrap();
    let k = SuccessKernel::new(&s).unwrap();
    let b = solve_with_kernel(&k, LoadModel::TimeSplit, 2, 0.4, TOL, 500).unwrap();
    assert!((a.pi_bar - b.pi_bar).abs() < 1e-12);
    s.lambda_a = 0.0;
    assert_eq!(solve_mean_activity(LoadModel::BandwidthSplit, &s, TOL, 10).unwrap().pi_bar, 0.0);
    assert!(solve_mean_activity(LoadModel::BandwidthSplit, &s, 0.0, 10).is_err());
    assert!(solve_mean_activity(LoadModel::BandwidthSplit, &s, TOL, 0).is_err());
}

#[test]
fn exhausted_budget_reports_iterates() {
    let mut s = Scenario::reference(Environment::Highrise);
    s.n_d = 4;
    s.lambda_a = 0.9;
    match solve_mean_activity(LoadModel::BandwidthSplit, &s, 1e-15, 1) {
        Err(Error::NoConvergence { last, previous }) => {
            assert!((0.0..=1.0).contains(&last) && (0.0..=1.0).contains(&previous));
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}
