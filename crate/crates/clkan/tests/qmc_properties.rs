//! Randomized-QMC properties of the scrambled Sobol points: stratification
//! and variance decay of the mean estimator versus plain Monte Carlo.

use clkan::grid::qmc_estimate;
use clkan::sobol::{sobol_points, Scramble};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Smooth RBF-style integrand on the unit square.
fn f(y: &[f64]) -> f64 {
    (-(y[0] * y[0] + y[1] * y[1])).exp()
}

fn variance(estimates: &[f64]) -> f64 {
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0)
}

fn sobol_variance(n: usize, replicates: usize) -> f64 {
    let ests: Vec<f64> = (0..replicates)
        .map(|r| {
            let pts = sobol_points(2, n, Scramble::Owen { seed: 1000 + r as u64 }).unwrap();
            qmc_estimate(f, &pts, 2)
        })
        .collect();
    variance(&ests)
}

fn mc_variance(n: usize, replicates: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let ests: Vec<f64> = (0..replicates)
        .map(|_| {
            let pts: Vec<f64> = (0..2 * n).map(|_| rng.gen::<f64>()).collect();
            qmc_estimate(f, &pts, 2)
        })
        .collect();
    variance(&ests)
}

#[test]
fn scrambled_estimates_are_unbiased() {
    // reference value of the integral over [0,1]^2: (∫₀¹ e^{-t²} dt)²,
    // computed once by fine midpoint quadrature
    let m = 100_000;
    let one_d: f64 = (0..m)
        .map(|i| (-((i as f64 + 0.5) / m as f64).powi(2)).exp())
        .sum::<f64>()
        / m as f64;
    let truth = one_d * one_d;

    let ests: Vec<f64> = (0..50)
        .map(|r| {
            let pts = sobol_points(2, 1024, Scramble::Owen { seed: r }).unwrap();
            qmc_estimate(f, &pts, 2)
        })
        .collect();
    let mean = ests.iter().sum::<f64>() / ests.len() as f64;
    assert!(
        (mean - truth).abs() < 1e-4,
        "mean estimate {mean} vs truth {truth}"
    );
}

#[test]
fn variance_decays_with_sample_count_and_beats_monte_carlo() {
    let replicates = 50;
    let v: Vec<f64> = [64usize, 256, 1024]
        .iter()
        .map(|&n| sobol_variance(n, replicates))
        .collect();
    // monotone decay in n
    assert!(v[0] > v[1] && v[1] > v[2], "sobol variances {v:?}");

    // scrambled Sobol beats plain MC at every n, with growing advantage
    for (i, &n) in [64usize, 256, 1024].iter().enumerate() {
        let mc = mc_variance(n, replicates);
        assert!(
            v[i] < mc,
            "n = {n}: sobol variance {} not below MC variance {mc}",
            v[i]
        );
    }
    // super-MC decay rate: going 64 -> 1024 (16x points) should shrink the
    // RQMC variance by far more than the 16x of plain MC
    assert!(v[0] / v[2] > 50.0, "decay ratio {}", v[0] / v[2]);
}
