use std::sync::Arc;

use sbmre_core::covariance::{grid_covariance_factor, sample_at_points, CovarianceKernel, ThetaProfile};
use sbmre_core::feynmankac::{
    annealed_moment_w, first_moment_rhs, lyapunov_estimate, pam_second_moment_oracle, qtc, second_moment_rhs,
    tensor, MCConfig,
};
use sbmre_core::heatkernel::{heat_kernel, Torus};
use sbmre_core::readout::Readout;
use sbmre_core::rng;
use sbmre_core::spde::{solve_pam, NoisePath, Scheme};
use sbmre_core::stats::combined_se;
use sbmre_core::{Estimate, Executor};

fn exec() -> Executor {
    Executor::new(4)
}

fn agree(a: &Estimate, b: &Estimate, k: f64) -> bool {
    (a.mean - b.mean).abs() <= k * combined_se(a.se, b.se)
}

#[test]
fn qtc_with_constant_potential() {
    let kernel = CovarianceKernel::constant(2, 0.7).unwrap();
    let mc = MCConfig::new(200, 0.01, 1).unwrap();
    let one = |_: &[f64], _: &[f64]| 1.0;
    let e = qtc(&one, &[0.0, 0.0], &[1.0, 0.0], 1.5, &kernel, &mc, &exec()).unwrap();
    assert!((e.mean - (0.7f64 * 1.5).exp()).abs() < 1e-12);
}

#[test]
fn qtc_without_potential_factorizes() {
    let kernel = CovarianceKernel::constant(1, 0.0).unwrap();
    let f = Readout::gaussian_bump(vec![0.5], 0.8).unwrap();
    let mc = MCConfig::new(20_000, 0.05, 2).unwrap();
    let (x, y) = ([0.0], [1.0]);
    let e = qtc(&tensor(&f), &x, &y, 1.0, &kernel, &mc, &exec()).unwrap();
    let exact = f.heat_smoothed(1.0, &x).unwrap() * f.heat_smoothed(1.0, &y).unwrap();
    assert!(e.within(exact, 3.0), "{e:?} vs {exact}");
}

#[test]
fn oracle_matches_spde_ensemble() {
    // Moderate coupling: at a = 1 the products v(x)v(y) are heavy tailed
    // enough that 10^3 replicas give an unreliable standard error.
    let torus = Torus::new(1, 64, 16.0).unwrap();
    let kernel = CovarianceKernel::scaled_theta(1, 0.5, ThetaProfile::Gaussian).unwrap();
    let factor = Arc::new(grid_covariance_factor(&kernel, &torus).unwrap());
    let f = Readout::gaussian_bump(vec![0.0], 1.0).unwrap();
    let grid_f = f.on(torus);
    let scheme = Scheme::strang(1e-3).unwrap();
    let (ix, iy) = (32, 36);
    let products = exec().map(1000, |r| {
        let noise = NoisePath::new(factor.clone(), 1e-3, 3000 + r as u64).unwrap();
        let v = solve_pam(&grid_f, 1.0, &noise, scheme, &[]).unwrap().last();
        v.values()[ix] * v.values()[iy]
    });
    let ensemble = Estimate::from_samples(&products);
    let mc = MCConfig::new(20_000, 1e-2, 4).unwrap();
    let oracle = pam_second_moment_oracle(&f, 1.0, &torus.point(ix), &torus.point(iy), &kernel, &mc, &exec()).unwrap();
    assert!(agree(&ensemble, &oracle, 3.0), "{ensemble:?} vs {oracle:?}");
}

#[test]
fn first_moment_matches_direct_convolution() {
    let torus = Torus::new(1, 4096, 24.0).unwrap();
    let f = Readout::gaussian_bump(vec![0.7], 0.6).unwrap();
    let t = 0.5;
    let value = first_moment_rhs(&f.on(torus), &[(vec![0.0], 1.0)], t).unwrap();
    // Simpson on [-12, 12] of p_t(y) f(y).
    let m = 20_000;
    let (a, b) = (-12.0, 12.0);
    let h = (b - a) / m as f64;
    let g = |y: f64| heat_kernel(t, &[y]).unwrap() * f.eval(&[y]);
    let mut acc = g(a) + g(b);
    for i in 1..m {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(a + i as f64 * h);
    }
    let oracle = acc * h / 3.0;
    assert!((value - oracle).abs() < 1e-6, "{value} vs {oracle}");

    let doubled = first_moment_rhs(&f.on(torus), &[(vec![0.0], 2.0)], t).unwrap();
    assert_eq!(doubled, 2.0 * value);
    let one = first_moment_rhs(&Readout::constant(1.0).on(torus), &[(vec![0.0], 1.0)], t).unwrap();
    assert!((one - 1.0).abs() < 1e-12);
}

#[test]
fn second_moment_closed_forms() {
    let one = Readout::constant(1.0);
    let nu = [(vec![0.0], 1.0)];
    let mc = MCConfig::new(20_000, 1e-2, 5).unwrap();
    let t = 1.0;

    let c = 1.0;
    let kernel = CovarianceKernel::constant(1, c).unwrap();
    let m = second_moment_rhs(&one, &nu, t, &kernel, &mc, &exec()).unwrap();
    let exact = (c * t).exp() + ((c * t).exp() - 1.0) / c;
    assert!(m.total.within(exact, 3.0), "{m:?} vs {exact}");

    let zero = CovarianceKernel::constant(1, 0.0).unwrap();
    let m0 = second_moment_rhs(&one, &nu, t, &zero, &mc, &exec()).unwrap();
    assert!(m0.total.within(1.0 + t, 3.0), "{m0:?}");

    let small = CovarianceKernel::constant(1, 1e-3).unwrap();
    let ms = second_moment_rhs(&one, &nu, t, &small, &mc, &exec()).unwrap();
    assert!((ms.total.mean - (1.0 + t)).abs() < 5e-3);

    let nothing = Readout::constant(0.0);
    let mz = second_moment_rhs(&nothing, &nu, t, &kernel, &mc, &exec()).unwrap();
    assert_eq!(mz.total.mean, 0.0);
}

#[test]
fn second_moment_dominates_squared_first() {
    let torus = Torus::new(1, 256, 16.0).unwrap();
    let f = Readout::gaussian_bump(vec![0.0], 1.0).unwrap();
    let nu = [(vec![0.0], 0.5), (vec![1.0], 0.5)];
    let mc = MCConfig::new(5_000, 1e-2, 6).unwrap();
    for kernel in [
        CovarianceKernel::constant(1, 0.5).unwrap(),
        CovarianceKernel::scaled_theta(1, 2.0, ThetaProfile::Gaussian).unwrap(),
    ] {
        let first = first_moment_rhs(&f.on(torus), &nu, 1.0).unwrap();
        let second = second_moment_rhs(&f, &nu, 1.0, &kernel, &mc, &exec()).unwrap();
        assert!(second.total.mean >= first * first - 5.0 * second.total.se);
    }
}

#[test]
fn refining_the_path_mesh_is_consistent() {
    let kernel = CovarianceKernel::scaled_theta(1, 1.0, ThetaProfile::Gaussian).unwrap();
    let f = Readout::gaussian_bump(vec![0.0], 1.0).unwrap();
    let coarse = MCConfig::new(20_000, 2e-2, 7).unwrap();
    let fine = MCConfig::new(20_000, 1e-2, 8).unwrap();
    let a = pam_second_moment_oracle(&f, 1.0, &[0.0], &[0.5], &kernel, &coarse, &exec()).unwrap();
    let b = pam_second_moment_oracle(&f, 1.0, &[0.0], &[0.5], &kernel, &fine, &exec()).unwrap();
    assert!(agree(&a, &b, 3.0), "{a:?} vs {b:?}");
}

#[test]
fn annealed_closed_forms() {
    let mc = MCConfig::new(200, 1e-2, 9).unwrap();
    let t = 1.0;
    let k1 = annealed_moment_w(1.0, ThetaProfile::Gaussian, t, &[0.0], 1, &mc, &exec()).unwrap();
    assert!((k1.mean - (t / 2.0).exp()).abs() < 1e-12);
    let flat = annealed_moment_w(3.0, ThetaProfile::Flat, t, &[0.0], 2, &mc, &exec()).unwrap();
    assert!((flat.mean - (2.0 * t).exp()).abs() < 1e-12);
    let frozen = annealed_moment_w(f64::INFINITY, ThetaProfile::Gaussian, t, &[0.0], 2, &mc, &exec()).unwrap();
    assert!((frozen.mean - (2.0 * t).exp()).abs() < 1e-12);
}

/// Samples the field along `k` independent paths and multiplies the
/// exponentials of the path integrals.
fn brute_force_moment(a: f64, t: f64, k: usize, samples: usize, dt: f64, seed: u64) -> Estimate {
    let kernel = CovarianceKernel::scaled_theta(1, 1.0, ThetaProfile::Gaussian).unwrap();
    let steps = (t / dt).round() as usize;
    let xs = exec().map(samples, |i| {
        let mut r = rng::stream(seed, &[i as u64]);
        let mut pos = vec![0.0; k];
        let mut eta = 0.0;
        for _ in 0..steps {
            let field = sample_at_points(&kernel, &pos, dt, &mut r).unwrap();
            eta += field.iter().sum::<f64>();
            for p in pos.iter_mut() {
                *p += (dt / a).sqrt() * rng::normal::<f64, _>(&mut r);
            }
        }
        eta.exp()
    });
    Estimate::from_samples(&xs)
}

#[test]
fn annealed_matches_brute_force() {
    // Short horizon keeps the lognormal brute-force weights light tailed.
    let t = 0.25;
    for a in [1.0, 4.0] {
        let mc = MCConfig::new(20_000, 1e-2, 10).unwrap();
        let fast = annealed_moment_w(a, ThetaProfile::Gaussian, t, &[0.0], 2, &mc, &exec()).unwrap();
        let brute = brute_force_moment(a, t, 2, 40_000, 1e-2, 11);
        assert!(agree(&fast, &brute, 3.0), "a = {a}: {fast:?} vs {brute:?}");
    }
}

#[test]
fn zero_coupling_has_zero_growth() {
    let torus = Torus::new(1, 32, 8.0).unwrap();
    let kernel = CovarianceKernel::scaled_theta(1, 1.0, ThetaProfile::Gaussian).unwrap();
    let base = Arc::new(grid_covariance_factor(&kernel, &torus).unwrap());
    let est = lyapunov_estimate(0.0, &base, 1.0, Scheme::strang(1e-2).unwrap(), 4, 1, &exec()).unwrap();
    assert!(est.slopes.iter().all(|s| s.abs() < 1e-12));
    let est = lyapunov_estimate(2.0, &base, 1.0, Scheme::strang(1e-2).unwrap(), 4, 1, &exec()).unwrap();
    for (s, i) in est.stratonovich_slopes.iter().zip(&est.ito_slopes) {
        assert!((*s - *i - 1.0).abs() < 1e-12);
    }
}
