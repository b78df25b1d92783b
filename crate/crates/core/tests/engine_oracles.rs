//! Dense brute-force oracles for the penalized solver and AR1 whitening.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use segprobe_core::gam::{ar1_whiten, difference_penalty, estimate_rho, fit_reml, raw_design, Gram, Penalty};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| normal(rng))
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Random PSD block `G Gᵀ`, possibly rank deficient.
fn random_penalty(rng: &mut ChaCha8Rng, p: usize, label: &str) -> Penalty {
    let q = rng.random_range(1..=p);
    let start = rng.random_range(0..=p - q);
    let r = rng.random_range(1..=q);
    let g = gaussian(rng, q, r);
    Penalty::new(label, vec![(start, &g * g.transpose())])
}

#[test]
fn penalized_solve_matches_dense_normal_equations() {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = rng.random_range(1..=12);
        let n = rng.random_range(p + 1..=50);
        let x = gaussian(&mut rng, n, p);
        let y = gaussian_vec(&mut rng, n);
        let n_pen = rng.random_range(1..=3);
        let pens: Vec<Penalty> = (0..n_pen).map(|j| random_penalty(&mut rng, p, &format!("s{j}"))).collect();
        let lambda: Vec<f64> = (0..n_pen).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();

        let mut a = x.transpose() * &x;
        for (pen, l) in pens.iter().zip(&lambda) {
            a += pen.dense(p) * *l;
        }
        let expected = a.lu().solve(&(x.transpose() * &y)).expect("invertible");
        let fit = fit_reml(&Gram::from_dense(&x, &y), &pens, Some(&lambda)).unwrap();
        worst = worst.max(rel_err(&fit.coefficients, &expected));
    }
    assert!(worst < 1e-8, "worst relative error {worst:e}");
    assert!(clock.elapsed().as_secs_f64() < 10.0);
}

/// Trajectory starts for `n` rows split into random runs.
fn random_starts(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    (0..n).map(|i| i == 0 || rng.random_bool(0.2)).collect()
}

/// Full AR1 correlation matrix: ρ^|i−j| within a trajectory, 0 across.
fn ar1_correlation(rho: f64, starts: &[bool]) -> DMatrix<f64> {
    let n = starts.len();
    let traj: Vec<usize> = starts.iter().scan(0usize, |id, &s| {
        if s {
            *id += 1;
        }
        Some(*id)
    }).collect();
    DMatrix::from_fn(n, n, |i, j| if traj[i] == traj[j] { rho.powi((i as i32 - j as i32).abs()) } else { 0.0 })
}

#[test]
fn whitened_ols_equals_explicit_gls() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = rng.random_range(1..=5);
        let n = rng.random_range(p + 2..=30);
        let rho = rng.random_range(-0.9..0.9);
        let starts = random_starts(&mut rng, n);
        let x = gaussian(&mut rng, n, p);
        let y = gaussian_vec(&mut rng, n);

        let rinv = ar1_correlation(rho, &starts).try_inverse().expect("correlation is PD");
        let gls = (x.transpose() * &rinv * &x).lu().solve(&(x.transpose() * &rinv * &y)).unwrap();
        let (xw, yw) = ar1_whiten(&x, &y, rho, &starts).unwrap();
        let fit = fit_reml(&Gram::from_dense(&xw, &yw), &[], None).unwrap();
        for (a, b) in fit.coefficients.iter().zip(gls.iter()) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    assert!(worst < 1e-9, "worst element-wise difference {worst:e}");
}

#[test]
fn estimate_rho_recovers_generator() {
    let clock = Instant::now();
    for (k, rho) in [0.0, 0.4, 0.8].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let innov = (1.0f64 - rho * rho).sqrt();
        let (mut resid, mut starts) = (Vec::new(), Vec::new());
        // 500 trajectories of 20 points: 10,000 residuals
        for _ in 0..500 {
            let mut e = normal(&mut rng);
            for j in 0..20 {
                if j > 0 {
                    e = rho * e + innov * normal(&mut rng);
                }
                resid.push(e);
                starts.push(j == 0);
            }
        }
        let est = estimate_rho(&resid, &starts).unwrap();
        assert!((est - rho).abs() < 0.05, "rho {rho}: estimated {est}");
    }
    assert!(clock.elapsed().as_secs_f64() < 10.0);
}

fn spread(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

#[test]
fn huge_first_order_penalty_fits_the_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = spread(60);
    let k = 8;
    let b = raw_design(&x, k);
    let y = DVector::from_fn(x.len(), |i, _| (6.0 * x[i]).sin() + 0.3 * rng.random::<f64>());
    let pen = Penalty::new("s", vec![(0, difference_penalty(k, 1))]);
    let fit = fit_reml(&Gram::from_dense(&b, &y), &[pen], Some(&[1e12])).unwrap();
    let mean = y.mean();
    let dev = (&b * &fit.coefficients).iter().map(|f| (f - mean).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-6, "max deviation from the mean {dev:e}");
}

#[test]
fn zero_lambda_is_ols() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = spread(40);
    let k = 7;
    let b = raw_design(&x, k);
    let y = gaussian_vec(&mut rng, x.len());
    let pen = Penalty::new("s", vec![(0, difference_penalty(k, 2))]);
    let fit = fit_reml(&Gram::from_dense(&b, &y), &[pen], Some(&[0.0])).unwrap();
    let ols = (b.transpose() * &b).lu().solve(&(b.transpose() * &y)).unwrap();
    assert!(rel_err(&fit.coefficients, &ols) < 1e-8);
    assert!((fit.total_edf() - k as f64).abs() < 1e-8);
}

#[test]
fn edf_is_the_trace_of_the_influence_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = spread(50);
    let k = 10;
    let b = raw_design(&x, k);
    let y = gaussian_vec(&mut rng, x.len());
    let s = difference_penalty(k, 2);
    let mut last = f64::INFINITY;
    for l in [1e-3, 1e-1, 10.0, 1e3, 1e6] {
        let pen = Penalty::new("s", vec![(0, s.clone())]);
        let fit = fit_reml(&Gram::from_dense(&b, &y), &[pen], Some(&[l])).unwrap();
        let xtx = b.transpose() * &b;
        let a = (&xtx + &s * l).try_inverse().unwrap();
        let trace = (a * xtx).trace();
        assert!((fit.total_edf() - trace).abs() < 1e-8);
        assert!(fit.total_edf() < last && fit.total_edf() > 2.0 - 1e-6);
        last = fit.total_edf();
    }
}

#[test]
fn posterior_covariance_is_symmetric_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = spread(80);
    let k = 9;
    let b = raw_design(&x, k);
    let y = DVector::from_fn(x.len(), |i, _| x[i] * x[i] + 0.1 * normal(&mut rng));
    let pen = Penalty::new("s", vec![(0, difference_penalty(k, 2))]);
    let fit = fit_reml(&Gram::from_dense(&b, &y), &[pen], None).unwrap();
    let v = &fit.posterior_cov;
    assert_eq!(v, &v.transpose());
    assert!(v.clone().cholesky().is_some());
    assert!(fit.lambda[0] > 0.0);
}
