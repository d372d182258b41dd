//! Independent reference computations checked against the library.

use std::f64::consts::PI;

use dascusum::detectors::{das_cusum_increment, glr_statistic};
use dascusum::gaussian::{kl_gaussian, symmetric_kl, window_estimate, VARIANCE_FLOOR};
use dascusum::montecarlo::trial_rng;
use dascusum::GaussianParams;
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn gp(m: f64, v: f64) -> GaussianParams {
    GaussianParams::new(m, v).unwrap()
}

fn log_density(x: f64, p: &GaussianParams) -> f64 {
    -0.5 * (2.0 * PI * p.variance).ln() - (x - p.mean).powi(2) / (2.0 * p.variance)
}

/// Composite Simpson rule for `int p(x) ln(p(x)/q(x)) dx` over +-14 sd of p.
fn kl_by_quadrature(p: &GaussianParams, q: &GaussianParams) -> f64 {
    let sd = p.variance.sqrt();
    let (a, b) = (p.mean - 14.0 * sd, p.mean + 14.0 * sd);
    let n = 40_000;
    let h = (b - a) / n as f64;
    let f = |x: f64| {
        let lp = log_density(x, p);
        lp.exp() * (lp - log_density(x, q))
    };
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}

#[test]
fn kl_matches_quadrature_on_grid() {
    let means = [-3.0, -0.5, 0.0, 1.0, 2.5, 10.0];
    let vars = [0.05, 0.5, 1.0, 2.0, 9.0];
    for &m1 in &means {
        for &v1 in &vars {
            for &m2 in &means {
                for &v2 in &vars {
                    let (p, q) = (gp(m1, v1), gp(m2, v2));
                    let exact = kl_gaussian(&p, &q);
                    let quad = kl_by_quadrature(&p, &q);
                    let tol = 1e-7 * exact.max(1.0);
                    assert!((exact - quad).abs() < tol, "KL({p:?}||{q:?}) = {exact}, quadrature {quad}");
                }
            }
        }
    }
}

#[test]
fn symmetric_kl_of_the_reference_change_is_one() {
    // N(1,1) vs N(2,2): 0.5 ln 2 + 0.5 ln(1/2) + (2+1)/2 + (1+1)/4 - 1
    let s = symmetric_kl(&gp(1.0, 1.0), &gp(2.0, 2.0));
    assert!((s - 1.0).abs() < 1e-12, "{s}");
    let q = kl_by_quadrature(&gp(1.0, 1.0), &gp(2.0, 2.0)) + kl_by_quadrature(&gp(2.0, 2.0), &gp(1.0, 1.0));
    assert!((q - 1.0).abs() < 1e-8);
}

/// Direct maximisation of the segment log-likelihood ratio: for every start,
/// fit the segment MLE and sum log-density differences term by term.
fn glr_brute_force(history: &[f64], theta0: &GaussianParams, max_lookback: usize, min_segment: usize) -> (f64, usize) {
    let n = history.len();
    let mut best = (f64::NEG_INFINITY, 0);
    for start in (0..=n - min_segment).rev() {
        let seg = &history[start..];
        if seg.len() > max_lookback {
            break;
        }
        let k = seg.len() as f64;
        let mean = seg.iter().sum::<f64>() / k;
        let var = (seg.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k).max(VARIANCE_FLOOR);
        let mle = GaussianParams { mean, variance: var };
        let llr: f64 = seg.iter().map(|&x| log_density(x, &mle) - log_density(x, theta0)).sum();
        if llr > best.0 {
            best = (llr, start);
        }
    }
    best
}

#[test]
fn glr_closed_form_equals_brute_force() {
    let mut rng = trial_rng(2024, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let theta0 = gp(rng.random_range(-2.0..2.0), rng.random_range(0.3..3.0));
        let truth = gp(rng.random_range(-2.0..2.0), rng.random_range(0.3..3.0));
        let d = Normal::new(truth.mean, truth.variance.sqrt()).unwrap();
        let history: Vec<f64> = (0..50).map(|_| d.sample(&mut rng)).collect();
        for &(lookback, min_seg) in &[(50, 2), (20, 5), (500, 10)] {
            let (stat, idx) = glr_statistic(&history, &theta0, lookback, min_seg).unwrap();
            let (brute, bidx) = glr_brute_force(&history, &theta0, lookback, min_seg);
            worst = worst.max((stat - brute).abs());
            assert!((stat - brute).abs() <= 1e-9, "closed {stat} vs brute {brute}");
            assert_eq!(idx, bidx);
        }
    }
    assert!(worst <= 1e-9);
}

#[test]
fn window_estimate_converges() {
    let mut rng = trial_rng(5, 0);
    let d = Normal::new(3.0, 2.0).unwrap();
    let xs: Vec<f64> = (0..1_000_000).map(|_| d.sample(&mut rng)).collect();
    let est = window_estimate(&xs).unwrap();
    assert!((est.mean - 3.0).abs() < 0.01, "{est:?}");
    assert!((est.variance - 4.0).abs() < 0.03, "{est:?}");
}

#[test]
fn increment_equals_likelihood_ratio_plus_divergence() {
    let mut rng = trial_rng(77, 0);
    for _ in 0..10_000 {
        let t0 = gp(rng.random_range(-5.0..5.0), rng.random_range(0.1..10.0));
        let th = gp(rng.random_range(-5.0..5.0), rng.random_range(0.1..10.0));
        let x = rng.random_range(-10.0..10.0);
        let v = rng.random_range(0.01..1.0);
        let direct = log_density(x, &th) - log_density(x, &t0) + kl_gaussian(&t0, &th) - v;
        let fast = das_cusum_increment(x, &t0, &th, v);
        assert!((direct - fast).abs() < 1e-9 * direct.abs().max(1.0), "{direct} vs {fast}");
    }
}
