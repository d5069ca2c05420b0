use std::f64::consts::PI;

use proptest::prelude::*;
use sbmre_core::covariance::CovarianceKernel;
use sbmre_core::heatkernel::{
    apply_heat_semigroup, bridge_potential, check_weight_domination, green, heat_kernel,
    persistence_threshold, sup_potential, theta_potential, theta_potential_at, GridFunction,
    RadialFn, Torus,
};
use sbmre_core::rng;

fn unit_ball() -> RadialFn<f64, impl Fn(f64) -> f64> {
    RadialFn::new(|r: f64| if r <= 1.0 { 1.0 } else { 0.0 })
        .with_breakpoints(vec![1.0])
        .with_support(1.0)
        .non_increasing()
}

/// Smooth cutoff: 1 below `a`, 0 above `b`.
fn window(r: f64, a: f64, b: f64) -> f64 {
    let bump = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let s = (r - a) / (b - a);
    1.0 - bump(s) / (bump(s) + bump(1.0 - s))
}

#[test]
fn threshold_constants() {
    assert!((persistence_threshold(3).unwrap() - PI / 3.0).abs() < 1e-12);
    assert!((persistence_threshold(4).unwrap() - PI * PI / 4.0).abs() < 1e-12);
    assert!((persistence_threshold(5).unwrap() - 3.0 * PI * PI / 10.0).abs() < 1e-12);
}

#[test]
fn heat_kernel_integrates_to_one() {
    for (d, t) in [(1usize, 0.3), (2, 1.0), (3, 2.0)] {
        // Tensor-product midpoint sum over a box of ±10 standard deviations.
        let half = 10.0 * f64::sqrt(t);
        let m = if d == 3 { 120 } else { 400 };
        let h = 2.0 * half / m as f64;
        let mut total = 0.0;
        let mut idx = vec![0usize; d];
        loop {
            let x: Vec<f64> = idx.iter().map(|&i| -half + (i as f64 + 0.5) * h).collect();
            total += heat_kernel(t, &x).unwrap() * h.powi(d as i32);
            let mut k = 0;
            while k < d {
                idx[k] += 1;
                if idx[k] < m {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == d {
                break;
            }
        }
        assert!((total - 1.0).abs() < 1e-6, "d = {d}: {total}");
    }
}

#[test]
fn green_is_time_integral_of_heat_kernel() {
    // ∫_0^T p(2t, r) dt by Simpson on a log-spaced variable; the tail
    // beyond T is below 1e-4 of G for T = 1e8 at r = 1 in d = 3.
    let x = [0.0, 0.0, 0.0];
    let y = [1.0, 0.0, 0.0];
    let g = green(&x, &y).unwrap();
    let (lo, hi) = (1e-6f64.ln(), 1e8f64.ln());
    let m = 20_000;
    let h = (hi - lo) / m as f64;
    let f = |s: f64| {
        let t = s.exp();
        heat_kernel(2.0 * t, &[1.0, 0.0, 0.0]).unwrap() * t
    };
    let mut acc = f(lo) + f(hi);
    for i in 1..m {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    let integral = acc * h / 3.0;
    assert!((integral - g).abs() < 1e-3 * g);
}

#[test]
fn theta_of_unit_ball_is_two_pi() {
    let t: f64 = theta_potential(&unit_ball(), 3).unwrap();
    assert!((t - 2.0 * PI).abs() < 1e-6);
}

#[test]
fn theta_of_power_profile_matches_lattice_sum() {
    let eps = 0.1;
    let kernel = CovarianceKernel::stationary_power(3, eps, 3.0).unwrap();
    let theta: f64 = theta_potential(&kernel, 3).unwrap();

    // Core: cell-centred lattice sum of g(y)/|y| against a smooth window.
    let (a, b) = (4.0, 6.0);
    let h = 0.05;
    let m = (2.0 * b / h) as i64;
    let g = |r: f64| eps / (1.0 + r * r * r);
    let mut core = 0.0;
    for i in 0..m {
        let x = -b + (i as f64 + 0.5) * h;
        for j in 0..m {
            let y = -b + (j as f64 + 0.5) * h;
            for k in 0..m {
                let z = -b + (k as f64 + 0.5) * h;
                let r = (x * x + y * y + z * z).sqrt();
                if r < b {
                    core += g(r) * window(r, a, b) / r;
                }
            }
        }
    }
    core *= h * h * h;
    // Tail: 4π ∫ (1 - window) g r dr, Simpson on [a, b] plus the closed
    // antiderivative of r / (1 + r³) beyond b.
    let n = 2000;
    let dr = (b - a) / n as f64;
    let f = |r: f64| (1.0 - window(r, a, b)) * g(r) * r;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * dr);
    }
    let anti = |r: f64| {
        ((r * r - r + 1.0) / ((r + 1.0) * (r + 1.0))).ln() / 6.0
            + ((2.0 * r - 1.0) / 3f64.sqrt()).atan() / 3f64.sqrt()
    };
    let beyond = eps * (PI / (2.0 * 3f64.sqrt()) - anti(b));
    let tail = 4.0 * PI * (s * dr / 3.0 + beyond);
    let oracle = core + tail;
    assert!((theta - oracle).abs() < 1e-3 * oracle, "{theta} vs {oracle}");
    assert!(theta > persistence_threshold(3).unwrap());
}

#[test]
fn theta_peaks_at_origin_for_monotone_profiles() {
    let kernel = CovarianceKernel::stationary_power(3, 0.05, 3.0).unwrap();
    let origin: f64 = theta_potential_at(&kernel, 3, 0.0).unwrap();
    for rho in [0.1, 0.5, 1.0, 2.0, 5.0] {
        assert!(theta_potential_at(&kernel, 3, rho).unwrap() <= origin);
    }
}

#[test]
fn bridge_matches_lattice_sum() {
    let x = [0.0, 0.0, 0.0];
    let y = [2.0, 0.0, 0.0];
    let value: f64 = bridge_potential(&x, &y, &unit_ball()).unwrap();
    // Green-normalized integrand G(x,z)G(z,y)/G(x,y) = |x-y| / (4π |x-z| |z-y|).
    let h = 0.01;
    let m = (2.0 / h) as i64;
    let mut sum = 0.0;
    for i in 0..m {
        let a = -1.0 + (i as f64 + 0.5) * h;
        for j in 0..m {
            let b = -1.0 + (j as f64 + 0.5) * h;
            for k in 0..m {
                let c = -1.0 + (k as f64 + 0.5) * h;
                let r2 = a * a + b * b + c * c;
                if r2 <= 1.0 {
                    let dy = ((a - 2.0) * (a - 2.0) + b * b + c * c).sqrt();
                    sum += 2.0 / (4.0 * PI * r2.sqrt() * dy);
                }
            }
        }
    }
    let oracle = sum * h * h * h;
    assert!((value - oracle).abs() < 1e-2 * oracle, "{value} vs {oracle}");
    // Unnormalized form of the 3G bound: 4π · value ≤ 2 · 2π.
    assert!(4.0 * PI * value <= 2.0 * 2.0 * PI);
}

#[test]
fn bridge_respects_three_g_bound() {
    let kernel = CovarianceKernel::stationary_power(3, 0.05, 4.0).unwrap();
    let bound = 2.0 * sup_potential(&kernel, 3).unwrap();
    let mut r = rng::stream(42, &[]);
    for _ in 0..100 {
        let x: Vec<f64> = (0..3).map(|_| 3.0 * rng::normal::<f64, _>(&mut r)).collect();
        let y: Vec<f64> = (0..3).map(|_| 3.0 * rng::normal::<f64, _>(&mut r)).collect();
        let v: f64 = bridge_potential(&x, &y, &kernel).unwrap();
        let w: f64 = bridge_potential(&y, &x, &kernel).unwrap();
        assert!(v <= bound, "{v} > {bound}");
        assert!((v - w).abs() <= 1e-12 * v);
    }
}

#[test]
fn weight_domination_is_finite() {
    for rho in [2.0, 4.0] {
        for d in [1, 3] {
            let r = check_weight_domination(rho, d, 1.0).unwrap();
            assert!(r.finite && r.constant >= 1.0, "rho {rho} d {d}: {r:?}");
        }
    }
    let r = check_weight_domination(4.0, 3, 0.5).unwrap();
    assert!(r.finite && r.argmax_t > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn semigroup_conserves_mass_and_sign(seed in any::<u64>(), t in 0.0f64..2.0, dim in 1usize..=3) {
        let torus = Torus::new(dim, 8, 6.0).unwrap();
        let mut r = rng::stream(seed, &[]);
        let vals = (0..torus.len()).map(|_| rng::uniform(&mut r)).collect();
        let f = GridFunction::new(torus, vals).unwrap();
        let g = apply_heat_semigroup(&f, t).unwrap();
        prop_assert!((g.integral() - f.integral()).abs() < 1e-10 * f.integral());
        prop_assert!(g.min() >= 0.0);
        prop_assert!(g.max() <= f.max() + 1e-12);
    }
}
