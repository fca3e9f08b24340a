//! The empirical process over Stiefel columns and the Monte Carlo
//! experiments that probe its limit behavior.
//!
//! Replicates are embarrassingly parallel: replicate r draws its frame from
//! stream r of the master seed, results are collected in replicate order,
//! and all reductions are pairwise sums, so reports are bit-identical for
//! any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::closed_forms::{
    asymptotic_mean, asymptotic_variance, limit_radius, stiefel_exact_moment_rescaled,
    unit_ball_volume, BodyMode, PNorm,
};
use crate::error::{Error, Result};
use crate::geometry::{
    hausdorff_to_ball_fn, scaled_body_volume, section_radial_values, support_from_radial_refined,
    support_profile_values, support_scan,
};
use crate::limits::ks::{ks_statistic, KS_MIN_SAMPLES};
use crate::linalg::{mean, sample_skewness, sample_variance};
use crate::sampling::{sample_stiefel, sphere_grid, SeedSpec, SphereGrid, StiefelFrame};
use crate::specfun::normal_cdf;

/// Which expectation is subtracted inside the empirical process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// The exact finite-N column moment E|<sqrt(N) v_i, u>|^q.
    ExactFiniteN,
    /// The Gaussian limit E|g|^q; the gap to the finite-N moment is
    /// o(1/sqrt(N)), so both centerings share the same limit.
    Asymptotic,
}

/// Parameters of a Monte Carlo experiment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: BodyMode,
    pub p: PNorm,
    pub m: u32,
    pub n: usize,
    pub replicates: usize,
    pub grid_resolution: usize,
    pub seed: SeedSpec,
    pub centering: Centering,
}

/// Grid resolutions that keep quadrature bias an order below the
/// Monte Carlo noise at desk scale.
pub fn default_grid_resolution(m: u32) -> usize {
    match m {
        2 => 2048,
        3 => 8192,
        _ => 2,
    }
}

impl ExperimentConfig {
    fn validate_common(&self) -> Result<()> {
        if self.m == 0 || self.m > 3 {
            return Err(Error::InvalidConfig(format!(
                "experiments run at m in {{1, 2, 3}}, got m = {}",
                self.m
            )));
        }
        if self.n < self.m as usize {
            return Err(Error::InvalidConfig(format!("need N >= m, got N = {}, m = {}", self.n, self.m)));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("need at least one replicate".into()));
        }
        self.mode.body_exponent(self.p)?;
        Ok(())
    }

    /// The central-limit experiment additionally excludes the degenerate
    /// index p = 2.
    pub fn validate_clt(&self) -> Result<()> {
        self.validate_common()?;
        if self.p.is_two() {
            return Err(Error::ModeViolation(
                "p = 2 has vanishing limit variance; the CLT experiment is undefined there".into(),
            ));
        }
        Ok(())
    }

    fn grid(&self) -> Result<SphereGrid> {
        sphere_grid(self.m, self.grid_resolution)
    }
}

/// Summary statistics of a standardized Monte Carlo sample.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub sample_skewness: f64,
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
    pub quantiles: Vec<(f64, f64)>,
    pub wall_time_seconds: f64,
    pub config: ExperimentConfig,
}

/// A CLT run: the report plus the standardized samples themselves (for
/// optional raw dumps and external histogramming).
#[derive(Debug, Clone)]
pub struct CltRun {
    pub report: ExperimentReport,
    pub samples: Vec<f64>,
}

const QUANTILE_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

fn quantiles_of(sorted: &[f64]) -> Vec<(f64, f64)> {
    let n = sorted.len();
    QUANTILE_LEVELS
        .iter()
        .map(|&level| {
            let pos = level * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            (level, sorted[lo] * (1.0 - frac) + sorted[hi] * frac)
        })
        .collect()
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn centering_value(centering: Centering, n: usize, s: f64) -> Result<f64> {
    match centering {
        Centering::Asymptotic => crate::closed_forms::abs_gaussian_moment(s),
        Centering::ExactFiniteN => stiefel_exact_moment_rescaled(n as u64, s),
    }
}

/// The centered empirical process
/// Z_N(u) = (1/sqrt(N)) sum_i (|<sqrt(N) v_i, u>|^q - center)
/// evaluated at every grid direction.
pub fn empirical_process(
    frame: &StiefelFrame,
    q: f64,
    grid: &SphereGrid,
    centering: Centering,
) -> Result<Vec<f64>> {
    if grid.m() != frame.m() {
        return Err(Error::InvalidConfig(format!(
            "grid dimension {} does not match frame dimension {}",
            grid.m(),
            frame.m()
        )));
    }
    let dirs: Vec<&[f64]> = grid.directions().collect();
    empirical_process_at(frame, q, &dirs, centering)
}

/// [`empirical_process`] at an explicit list of directions.
pub fn empirical_process_at(
    frame: &StiefelFrame,
    q: f64,
    directions: &[&[f64]],
    centering: Centering,
) -> Result<Vec<f64>> {
    if q < 1.0 {
        return Err(Error::Domain(format!("empirical process requires q >= 1, got {q}")));
    }
    let n = frame.n();
    let center = centering_value(centering, n, q)?;
    let sqrt_n = (n as f64).sqrt();
    let mut scratch = vec![0.0; n];
    directions
        .iter()
        .map(|u| {
            if u.len() != frame.m() {
                return Err(Error::InvalidConfig(format!(
                    "direction dimension {} does not match frame dimension {}",
                    u.len(),
                    frame.m()
                )));
            }
            frame.column_dots(u, &mut scratch);
            let power_mean = (n as f64).powf(q / 2.0 - 1.0) * crate::geometry::power_sum(&scratch, q);
            Ok(sqrt_n * (power_mean - center))
        })
        .collect()
}

/// Plug-in centering constant for the volume experiment: the asymptotic
/// mean, or its finite-N counterpart kappa_m (N^(s/2) E|v|^s)^(+-m/s) built
/// from the exact column moment (exact at m = 1 for projections, first-order
/// elsewhere).
fn volume_center(config: &ExperimentConfig) -> Result<f64> {
    let s = config.mode.body_exponent(config.p)?;
    match config.centering {
        Centering::Asymptotic => asymptotic_mean(config.mode, config.p, config.m),
        Centering::ExactFiniteN => {
            let moment = stiefel_exact_moment_rescaled(config.n as u64, s)?;
            let exponent = match config.mode {
                BodyMode::Projection => config.m as f64 / s,
                BodyMode::Section => -(config.m as f64) / s,
            };
            Ok(unit_ball_volume(config.m) * moment.powf(exponent))
        }
    }
}

/// Run the central-limit experiment: standardize
/// sqrt(N) (vol_m - mu) / sigma over replicates and test the sample against
/// the standard normal.
pub fn clt_experiment(config: &ExperimentConfig) -> Result<CltRun> {
    let start = Instant::now();
    config.validate_clt()?;
    let grid = config.grid()?;
    let mu = volume_center(config)?;
    let sigma = asymptotic_variance(config.mode, config.p, config.m)?.sqrt();
    if !(sigma > 0.0) {
        return Err(Error::ModeViolation("limit variance is not positive".into()));
    }
    let sqrt_n = (config.n as f64).sqrt();
    let samples: Vec<f64> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let frame = sample_stiefel(config.m as usize, config.n, config.seed.with_stream(r as u64))?;
            let vol = scaled_body_volume(&frame, config.p, config.mode, &grid)?;
            Ok(sqrt_n * (vol - mu) / sigma)
        })
        .collect::<Result<Vec<f64>>>()?;
    let report = summarize(&samples, config, start)?;
    Ok(CltRun { report, samples })
}

fn summarize(samples: &[f64], config: &ExperimentConfig, start: Instant) -> Result<ExperimentReport> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let (ks_stat, ks_p) = if samples.len() >= KS_MIN_SAMPLES {
        let ks = ks_statistic(samples, normal_cdf)?;
        (Some(ks.statistic), ks.p_value)
    } else {
        (None, None)
    };
    Ok(ExperimentReport {
        sample_mean: mean(samples),
        sample_variance: sample_variance(samples),
        sample_skewness: sample_skewness(samples),
        ks_statistic: ks_stat,
        ks_p_value: ks_p,
        quantiles: quantiles_of(&sorted),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        config: *config,
    })
}

/// Parameters of the Hausdorff-convergence experiment over a ladder of
/// ambient dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HausdorffConfig {
    pub mode: BodyMode,
    pub p: PNorm,
    pub m: u32,
    pub n_ladder: Vec<usize>,
    pub replicates: usize,
    pub grid_resolution: usize,
    pub seed: SeedSpec,
}

/// One ladder row: ambient dimension and the median Hausdorff distance to
/// the limiting ball over replicates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HausdorffRow {
    pub n: usize,
    pub median_distance: f64,
}

/// Median Hausdorff distance between the scaled random body and the
/// limiting ball, for each N in the ladder.
pub fn hausdorff_experiment(config: &HausdorffConfig) -> Result<Vec<HausdorffRow>> {
    if config.m == 0 || config.m > 3 {
        return Err(Error::InvalidConfig(format!(
            "experiments run at m in {{1, 2, 3}}, got m = {}",
            config.m
        )));
    }
    if config.replicates == 0 || config.n_ladder.is_empty() {
        return Err(Error::InvalidConfig("need at least one replicate and one ladder entry".into()));
    }
    config.mode.body_exponent(config.p)?;
    let grid = sphere_grid(config.m, config.grid_resolution)?;
    let radius = limit_radius(config.mode, config.p)?;
    let mut rows = Vec::with_capacity(config.n_ladder.len());
    for (ladder_index, &n) in config.n_ladder.iter().enumerate() {
        if n < config.m as usize {
            return Err(Error::InvalidConfig(format!("ladder entry N = {n} is below m = {}", config.m)));
        }
        let mut distances: Vec<f64> = (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let stream = (ladder_index * config.replicates + r) as u64;
                let frame = sample_stiefel(config.m as usize, n, config.seed.with_stream(stream))?;
                hausdorff_distance_to_limit(&frame, config.mode, config.p, &grid, radius)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(HausdorffRow { n, median_distance: median_of(&mut distances) });
    }
    Ok(rows)
}

/// One replicate of the Hausdorff distance: support values on the grid
/// (directly for projections, through the sup-transform of the radial
/// function for sections), then the refined maximum of |h - r|.
fn hausdorff_distance_to_limit(
    frame: &StiefelFrame,
    mode: BodyMode,
    p: PNorm,
    grid: &SphereGrid,
    radius: f64,
) -> Result<f64> {
    match mode {
        BodyMode::Projection => {
            let values = support_profile_values(frame, p, grid)?;
            let h = |u: &[f64]| {
                let mut scratch = vec![0.0; frame.n()];
                crate::geometry::projection_support_scratch(frame, p, u, &mut scratch)
                    .expect("validated above")
            };
            Ok(hausdorff_to_ball_fn(grid, h, Some(&values), radius))
        }
        BodyMode::Section => {
            let rho_values = section_radial_values(frame, p, grid)?;
            // Bulk pass: plain grid sup-transform; the refinement happens
            // only around the maximizing direction inside hausdorff_to_ball.
            let h_grid: Vec<f64> = grid
                .directions()
                .map(|u| support_scan(grid, &rho_values, u))
                .collect();
            let rho_exact = |v: &[f64]| {
                let mut scratch = vec![0.0; frame.n()];
                crate::geometry::section_radial_scratch(frame, p, v, &mut scratch)
                    .expect("validated above")
            };
            let h = |u: &[f64]| support_from_radial_refined(grid, &rho_values, &rho_exact, u);
            Ok(hausdorff_to_ball_fn(grid, h, Some(&h_grid), radius))
        }
    }
}

/// Empirical check of one limiting covariance entry: the covariance of
/// (Z_N(u), Z_N(v)) over replicate frames against the closed form, with the
/// Monte Carlo standard error and a 4-sigma agreement flag.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceCheck {
    pub q: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub n: usize,
    pub replicates: usize,
    pub empirical: f64,
    pub analytic: f64,
    pub standard_error: f64,
    pub within_four_se: bool,
}

/// Estimate Cov(Z_N(u), Z_N(v)) over replicates and compare it with the
/// limiting process covariance.
pub fn covariance_experiment(
    q: f64,
    u: &[f64],
    v: &[f64],
    n: usize,
    replicates: usize,
    seed: SeedSpec,
    centering: Centering,
) -> Result<CovarianceCheck> {
    if replicates < 2 {
        return Err(Error::TooFewSamples { got: replicates, need: 2 });
    }
    let m = u.len();
    if v.len() != m {
        return Err(Error::InvalidConfig("u and v must share a dimension".into()));
    }
    let analytic = crate::closed_forms::process_covariance(q, u, v)?;
    let pairs: Vec<(f64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let frame = sample_stiefel(m, n, seed.with_stream(r as u64))?;
            let z = empirical_process_at(&frame, q, &[u, v], centering)?;
            Ok((z[0], z[1]))
        })
        .collect::<Result<Vec<_>>>()?;
    let zu: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let zv: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mu_u = mean(&zu);
    let mu_v = mean(&zv);
    let products: Vec<f64> = pairs.iter().map(|p| (p.0 - mu_u) * (p.1 - mu_v)).collect();
    let empirical = mean(&products) * replicates as f64 / (replicates - 1) as f64;
    let standard_error = (sample_variance(&products) / replicates as f64).sqrt();
    Ok(CovarianceCheck {
        q,
        u: u.to_vec(),
        v: v.to_vec(),
        n,
        replicates,
        empirical,
        analytic,
        standard_error,
        within_four_se: (empirical - analytic).abs() <= 4.0 * standard_error,
    })
}
