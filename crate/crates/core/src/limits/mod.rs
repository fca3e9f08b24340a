//! Limit-theorem experiments and rate-function evaluators.

mod experiments;
mod ks;
mod rate;

pub use experiments::{
    clt_experiment, covariance_experiment, default_grid_resolution, empirical_process,
    empirical_process_at, hausdorff_experiment, Centering, CltRun, CovarianceCheck,
    ExperimentConfig, ExperimentReport, HausdorffConfig, HausdorffRow,
};
pub use ks::{ks_statistic, KsTest, KS_MIN_SAMPLES, KS_MIN_SAMPLES_P_VALUE};
pub use rate::{
    mdp_covariance_matrix, mdp_rate_quadratic, stiefel_rate_gaussian, GaussianMeasure,
    MdpCovariance, MdpRate, MdpRateInput,
};
