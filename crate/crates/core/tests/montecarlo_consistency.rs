//! Monte Carlo consistency of the volume pipeline and the empirical
//! process against the closed-form constants, at the scales where the
//! asymptotics are already visible.

use lpball::closed_forms::{asymptotic_mean, BodyMode, PNorm};
use lpball::limits::{covariance_experiment, Centering};
use lpball::geometry::scaled_body_volume;
use lpball::sampling::{sample_stiefel, sphere_grid, SeedSpec};

#[test]
fn section_volume_median_near_limit_mean() {
    // m = 2 cross-polytope sections at N = 4096: the median volume over 200
    // replicates sits within 5% of the limiting mean.
    let p = PNorm::new(1.0).unwrap();
    let grid = sphere_grid(2, 2048).unwrap();
    let mut volumes: Vec<f64> = (0..200u64)
        .map(|r| {
            let frame = sample_stiefel(2, 4096, SeedSpec::new(909, r)).unwrap();
            scaled_body_volume(&frame, p, BodyMode::Section, &grid).unwrap()
        })
        .collect();
    volumes.sort_by(|a, b| a.total_cmp(b));
    let median = 0.5 * (volumes[99] + volumes[100]);
    let mu = asymptotic_mean(BodyMode::Section, p, 2).unwrap();
    assert!(
        (median - mu).abs() <= 0.05 * mu,
        "median {median} vs mu {mu} off by more than 5%"
    );
}

#[test]
fn projection_volume_mean_m1_cube() {
    // E[vol] -> mu for 1-D shadows of the cube; 4 SE gate plus the tiny
    // mu/(4N) finite-N offset.
    let p = PNorm::infinity();
    let grid = sphere_grid(1, 1).unwrap();
    let n = 1024usize;
    let reps = 2000u64;
    let volumes: Vec<f64> = (0..reps)
        .map(|r| {
            let frame = sample_stiefel(1, n, SeedSpec::new(911, r)).unwrap();
            scaled_body_volume(&frame, p, BodyMode::Projection, &grid).unwrap()
        })
        .collect();
    let mean: f64 = volumes.iter().sum::<f64>() / reps as f64;
    let var: f64 = volumes.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps - 1) as f64;
    let se = (var / reps as f64).sqrt();
    let mu = asymptotic_mean(BodyMode::Projection, p, 1).unwrap();
    let bias_allowance = mu / (4.0 * n as f64);
    assert!(
        (mean - mu).abs() <= 4.0 * se + bias_allowance,
        "mean {mean} vs mu {mu}, 4se = {:.2e}",
        4.0 * se
    );
}

#[test]
fn m3_section_volume_mean_near_limit() {
    // Exercises the Fibonacci-lattice quadrature end to end: m = 3
    // sections at p = 1.5, N = 1024, mean volume over 100 replicates
    // against the limiting mean (4 SE plus a 1% finite-N allowance).
    let p = PNorm::new(1.5).unwrap();
    let grid = sphere_grid(3, 2048).unwrap();
    let volumes: Vec<f64> = (0..100u64)
        .map(|r| {
            let frame = sample_stiefel(3, 1024, SeedSpec::new(917, r)).unwrap();
            scaled_body_volume(&frame, p, BodyMode::Section, &grid).unwrap()
        })
        .collect();
    let mean: f64 = volumes.iter().sum::<f64>() / volumes.len() as f64;
    let var: f64 =
        volumes.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (volumes.len() - 1) as f64;
    let se = (var / volumes.len() as f64).sqrt();
    let mu = asymptotic_mean(BodyMode::Section, p, 3).unwrap();
    assert!(
        (mean - mu).abs() <= 4.0 * se + 0.01 * mu,
        "m=3 section mean {mean} vs mu {mu} (4se = {:.2e})",
        4.0 * se
    );
}

#[test]
fn empirical_process_covariance_ten_thousand_replicates() {
    // Cov(Z_N(u), Z_N(v)) over 1e4 replicate frames against the limiting
    // process covariance, within 4 standard errors.
    let u = [1.0, 0.0];
    let v = [0.6, 0.8];
    let check = covariance_experiment(
        1.0,
        &u,
        &v,
        1024,
        10_000,
        SeedSpec::new(913, 0),
        Centering::ExactFiniteN,
    )
    .unwrap();
    assert!(
        check.within_four_se,
        "empirical {} vs analytic {} (se {})",
        check.empirical, check.analytic, check.standard_error
    );
}
