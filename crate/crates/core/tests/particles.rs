use proptest::prelude::*;
use sbmre_core::covariance::{CovarianceKernel, ThetaProfile};
use sbmre_core::particles::{
    epoch_readout, martingale_series, run, run_observed, step_epoch, BranchingConfig, Environment,
    ParticlePopulation,
};
use sbmre_core::readout::Readout;
use sbmre_core::rng;
use sbmre_core::stats::combined_se;
use sbmre_core::{Estimate, Executor};

fn field(kernel: CovarianceKernel<f64>) -> Environment<f64> {
    Environment::Field(kernel)
}

#[test]
fn single_particle_splits_half_the_time() {
    let cfg = BranchingConfig::from_point(100, field(CovarianceKernel::constant(1, 1.0).unwrap()), &[0.0], 1, 1.0).unwrap();
    let pop = cfg.initial_population();
    let mut r = rng::stream(1, &[]);
    let trials = 100_000;
    let splits: Vec<f64> = (0..trials)
        .map(|_| step_epoch(&pop, &cfg, &mut r).unwrap().1.splits as f64)
        .collect();
    let e = Estimate::from_samples(&splits);
    assert!(e.within(0.5, 3.0), "{e:?}");
}

#[test]
fn correlated_field_is_critical() {
    let kernel = CovarianceKernel::scaled_theta(1, 4.0, ThetaProfile::Gaussian).unwrap();
    let n = 16;
    let initial: Vec<f64> = (0..40).map(|i| -4.0 + 0.2 * i as f64).collect();
    let cfg = BranchingConfig::new(n, 1, field(kernel), initial, 1.0).unwrap();
    let pop = cfg.initial_population();
    let mut r = rng::stream(2, &[]);
    let offspring: Vec<f64> = (0..5_000)
        .map(|_| {
            let (next, _) = step_epoch(&pop, &cfg, &mut r).unwrap();
            next.count() as f64 / pop.count() as f64
        })
        .collect();
    let e = Estimate::from_samples(&offspring);
    assert!(e.within(1.0, 3.0), "{e:?}");
}

#[test]
fn critical_branching_preserves_mass() {
    let n = 50;
    let cfg = BranchingConfig::from_point(n, field(CovarianceKernel::constant(1, 0.0).unwrap()), &[0.0], n, 1.0).unwrap();
    let masses = Executor::new(4).map(1000, |r| run(&cfg, &[1.0], r as u64).unwrap()[0].mass());
    let e = Estimate::from_samples(&masses);
    assert!(e.within(1.0, 3.0), "{e:?}");
}

#[test]
fn mean_measure_is_heat_flow() {
    let n = 100;
    let t = 1.0;
    let f = Readout::gaussian_bump(vec![0.5], 1.0).unwrap();
    let cfg = BranchingConfig::from_point(n, field(CovarianceKernel::constant(1, 1.0).unwrap()), &[0.0], n, t).unwrap();
    let vals = Executor::new(4).map(1000, |r| {
        let pop = &run(&cfg, &[t], 10 + r as u64).unwrap()[0];
        pop.positions().map(|p| f.eval(p)).sum::<f64>() / n as f64
    });
    let e = Estimate::from_samples(&vals);
    let exact = f.heat_smoothed(t, &[0.0]).unwrap();
    assert!(e.within(exact, 3.0), "{e:?} vs {exact}");
}

#[test]
fn martingale_residual_is_centered() {
    let n = 100;
    let f = Readout::gaussian_bump(vec![0.0], 1.0).unwrap();
    let env = field(CovarianceKernel::constant(1, 1.0).unwrap());
    let cfg = BranchingConfig::from_point(n, env.clone(), &[0.0], n, 1.0).unwrap();
    let series = Executor::new(4).map(1000, |r| {
        let mut readouts = Vec::new();
        run_observed(&cfg, 5000 + r as u64, |pop| readouts.push(epoch_readout(pop, &f, &env).unwrap())).unwrap();
        martingale_series(&readouts, n)
    });
    for k in [20, 40, 60, 80, 100] {
        let m: Vec<f64> = series.iter().map(|s| s.residual[k]).collect();
        let e = Estimate::from_samples(&m);
        assert!(e.within(0.0, 3.0), "epoch {k}: {e:?}");
        let sq = Estimate::from_samples(&m.iter().map(|x| x * x).collect::<Vec<_>>());
        let qv = Estimate::from_samples(&series.iter().map(|s| s.quadratic_variation[k]).collect::<Vec<_>>());
        assert!((sq.mean - qv.mean).abs() <= 5.0 * combined_se(sq.se, qv.se), "epoch {k}: {sq:?} vs {qv:?}");
    }
}

#[test]
fn zero_horizon_and_replay() {
    let cfg = BranchingConfig::from_point(20, field(CovarianceKernel::constant(1, 1.0).unwrap()), &[0.0], 20, 0.5).unwrap();
    assert_eq!(run(&cfg, &[0.0], 3).unwrap()[0], cfg.initial_population());
    assert_eq!(run(&cfg, &[0.25, 0.5], 3).unwrap(), run(&cfg, &[0.25, 0.5], 3).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measure_counts_the_multiset(xs in prop::collection::vec(-3.0f64..3.0, 0..40), n in 1usize..50) {
        let pop = ParticlePopulation::new(0, 1, n, xs.clone()).unwrap();
        let inside = xs.iter().filter(|x| x.abs() < 1.0).count();
        prop_assert_eq!(pop.measure(|p| p[0].abs() < 1.0), inside as f64 / n as f64);
        prop_assert_eq!(pop.count(), xs.len());
    }

    #[test]
    fn epochs_balance(seed in any::<u64>(), count in 1usize..30) {
        let kernel = CovarianceKernel::scaled_theta(1, 9.0, ThetaProfile::Gaussian).unwrap();
        let cfg = BranchingConfig::from_point(4, field(kernel), &[0.0], count, 1.0).unwrap();
        let pop = cfg.initial_population();
        let (next, tally) = step_epoch(&pop, &cfg, &mut rng::stream(seed, &[])).unwrap();
        prop_assert_eq!(tally.splits + tally.deaths, count);
        prop_assert_eq!(next.count(), 2 * tally.splits);
    }
}
