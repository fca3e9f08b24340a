//! Deviation-rate evaluators.
//!
//! Two pieces are closed-form enough to evaluate exactly:
//!
//! * the entropy rate on mean-zero Gaussian measures,
//!   I(nu) = H(nu | gamma^m) + 1/2 Trace(Id - C(nu)), finite exactly when
//!   the covariance satisfies C(nu) <= Id, where it collapses to
//!   -1/2 log det C(nu);
//! * the quadratic moderate-deviation rate <u, C_k^{-1} u> / 2, where C_k is
//!   the covariance of the Gaussian vector
//!   ((|<g,u_1>|^q - E|g|^q, ..., |<g,u_k>|^q - E|g|^q), g g* - Id_m)
//!   with the symmetric matrix block vectorized over its upper triangle.

use serde::Serialize;

use crate::closed_forms::{abs_gaussian_moment, mixed_abs_moment};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, sym_eigen};

/// A mean-zero Gaussian measure on R^m given by its covariance matrix.
#[derive(Debug, Clone)]
pub struct GaussianMeasure {
    m: usize,
    covariance: Vec<f64>,
}

impl GaussianMeasure {
    /// Validates symmetry and positive semidefiniteness (eigenvalues above
    /// -1e-12).
    pub fn new(m: usize, covariance: Vec<f64>) -> Result<Self> {
        if m == 0 || covariance.len() != m * m {
            return Err(Error::InvalidConfig(format!(
                "covariance must be m x m with m >= 1, got m={m}, len={}",
                covariance.len()
            )));
        }
        for i in 0..m {
            for j in (i + 1)..m {
                if (covariance[i * m + j] - covariance[j * m + i]).abs() > 1e-12 {
                    return Err(Error::DegenerateCovariance("covariance is not symmetric".into()));
                }
            }
        }
        let eigen = sym_eigen(&covariance, m);
        if eigen.values[0] < -1e-12 {
            return Err(Error::DegenerateCovariance(format!(
                "covariance has negative eigenvalue {:.3e}",
                eigen.values[0]
            )));
        }
        Ok(GaussianMeasure { m, covariance })
    }

    /// Isotropic measure sigma^2 Id_m.
    pub fn isotropic(m: usize, sigma_sq: f64) -> Result<Self> {
        if sigma_sq < 0.0 {
            return Err(Error::DegenerateCovariance(format!("sigma^2 = {sigma_sq} < 0")));
        }
        let mut cov = vec![0.0; m * m];
        for i in 0..m {
            cov[i * m + i] = sigma_sq;
        }
        GaussianMeasure::new(m, cov)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }
}

/// Entropy rate of a mean-zero Gaussian measure with covariance S:
/// 1/2 (Trace S - m - log det S) + 1/2 Trace(Id - S) when S <= Id (within
/// 1e-12), +infinity otherwise. A singular S is also infeasible: the measure
/// is then not absolutely continuous with respect to the Gaussian reference.
pub fn stiefel_rate_gaussian(nu: &GaussianMeasure) -> Result<f64> {
    let eigen = sym_eigen(&nu.covariance, nu.m);
    if eigen.values[0] < -1e-12 {
        return Err(Error::DegenerateCovariance(format!(
            "covariance has negative eigenvalue {:.3e}",
            eigen.values[0]
        )));
    }
    if eigen.values[nu.m - 1] > 1.0 + 1e-12 {
        return Ok(f64::INFINITY);
    }
    if eigen.values[0] <= 1e-14 {
        return Ok(f64::INFINITY);
    }
    let mut relative_entropy = 0.0;
    let mut trace_term = 0.0;
    for &lambda in &eigen.values {
        relative_entropy += 0.5 * (lambda - 1.0 - lambda.ln());
        trace_term += 0.5 * (1.0 - lambda);
    }
    Ok(relative_entropy + trace_term)
}

/// The evaluation points and perturbation defining a quadratic
/// moderate-deviation rate: k unit vectors, function values at them, and a
/// symmetric m x m matrix perturbation.
#[derive(Debug, Clone)]
pub struct MdpRateInput {
    pub q: f64,
    pub points: Vec<Vec<f64>>,
    pub f_values: Vec<f64>,
    /// Row-major symmetric m x m matrix.
    pub z2: Vec<f64>,
    pub m: usize,
}

impl MdpRateInput {
    pub fn new(q: f64, points: Vec<Vec<f64>>, f_values: Vec<f64>, z2: Vec<f64>, m: usize) -> Result<Self> {
        if !(1.0..2.0).contains(&q) {
            return Err(Error::Domain(format!("moderate-deviation range is q in [1,2), got {q}")));
        }
        if points.len() != f_values.len() {
            return Err(Error::InvalidConfig(format!(
                "{} points but {} function values",
                points.len(),
                f_values.len()
            )));
        }
        if z2.len() != m * m {
            return Err(Error::InvalidConfig(format!(
                "perturbation matrix must be {m} x {m}, got length {}",
                z2.len()
            )));
        }
        validate_points(&points, m)?;
        for i in 0..m {
            for j in (i + 1)..m {
                if (z2[i * m + j] - z2[j * m + i]).abs() > 1e-12 {
                    return Err(Error::InvalidConfig("perturbation matrix is not symmetric".into()));
                }
            }
        }
        Ok(MdpRateInput { q, points, f_values, z2, m })
    }

    /// Flatten to (f_1, ..., f_k, Z2 upper triangle) in the same order the
    /// covariance matrix uses.
    pub fn uhat(&self) -> Vec<f64> {
        let mut out = self.f_values.clone();
        for s in 0..self.m {
            for t in s..self.m {
                out.push(self.z2[s * self.m + t]);
            }
        }
        out
    }
}

fn validate_points(points: &[Vec<f64>], m: usize) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidConfig("need at least one evaluation point".into()));
    }
    for u in points {
        if u.len() != m {
            return Err(Error::InvalidConfig(format!(
                "point dimension {} does not match m = {m}",
                u.len()
            )));
        }
        let norm: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitVector((norm - 1.0).abs()));
        }
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dot: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| a * b).sum();
            if (dot.abs() - 1.0).abs() < 1e-10 {
                return Err(Error::InvalidConfig(format!(
                    "points {i} and {j} are identical or antipodal; the covariance would be singular"
                )));
            }
        }
    }
    Ok(())
}

/// The covariance matrix of the moderate-deviation limit vector, with the
/// index layout (point block, upper-triangle matrix block).
#[derive(Debug, Clone)]
pub struct MdpCovariance {
    pub matrix: Vec<f64>,
    pub dim: usize,
    pub k: usize,
    pub m: usize,
}

/// Covariance matrix of
/// ((|<g,u_1>|^q - E|g|^q, ..., |<g,u_k>|^q - E|g|^q), g g* - Id_m)
/// for q in [1, 2), with the matrix part vectorized over s <= t.
///
/// Blocks:
/// * point x point: E|<g,u_i><g,u_j>|^q - (E|g|^q)^2,
/// * point x matrix: q u_s u_t E|g|^q off the diagonal pairs and
///   q u_s^2 E|g|^q on them,
/// * matrix x matrix: diagonal with 2 for (s,s) entries and 1 for s < t.
pub fn mdp_covariance_matrix(q: f64, points: &[Vec<f64>], m: usize) -> Result<MdpCovariance> {
    if !(1.0..2.0).contains(&q) {
        return Err(Error::Domain(format!("moderate-deviation range is q in [1,2), got {q}")));
    }
    validate_points(points, m)?;
    let k = points.len();
    let t_dim = m * (m + 1) / 2;
    let dim = k + t_dim;
    let e_abs = abs_gaussian_moment(q)?;
    let mut c = vec![0.0; dim * dim];
    for i in 0..k {
        for j in i..k {
            let rho: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| a * b).sum();
            let cov = mixed_abs_moment(q, rho.clamp(-1.0, 1.0))? - e_abs * e_abs;
            c[i * dim + j] = cov;
            c[j * dim + i] = cov;
        }
    }
    // pair index iterates (0,0), (0,1), ..., (0,m-1), (1,1), ...
    let mut pair = 0usize;
    for s in 0..m {
        for t in s..m {
            let col = k + pair;
            for (i, u) in points.iter().enumerate() {
                let b = if s == t {
                    q * u[s] * u[s] * e_abs
                } else {
                    q * u[s] * u[t] * e_abs
                };
                c[i * dim + col] = b;
                c[col * dim + i] = b;
            }
            c[col * dim + col] = if s == t { 2.0 } else { 1.0 };
            pair += 1;
        }
    }
    Ok(MdpCovariance { matrix: c, dim, k, m })
}

/// A quadratic rate value together with the conditioning of the covariance
/// it inverted.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MdpRate {
    pub value: f64,
    pub condition_number: f64,
}

/// The quadratic form <uhat, C^{-1} uhat> / 2 through a Cholesky solve.
/// Degenerate covariance (q = 2 limits, duplicated points) is an error.
pub fn mdp_rate_quadratic(cov: &MdpCovariance, uhat: &[f64]) -> Result<MdpRate> {
    if uhat.len() != cov.dim {
        return Err(Error::InvalidConfig(format!(
            "uhat has dimension {}, covariance expects {}",
            uhat.len(),
            cov.dim
        )));
    }
    let eigen = sym_eigen(&cov.matrix, cov.dim);
    let lambda_min = eigen.values[0];
    let lambda_max = eigen.values[cov.dim - 1];
    if lambda_min <= 1e-12 * lambda_max.max(1.0) {
        return Err(Error::DegenerateCovariance(format!(
            "covariance is singular (min eigenvalue {lambda_min:.3e})"
        )));
    }
    let l = cholesky(&cov.matrix, cov.dim).ok_or_else(|| {
        Error::DegenerateCovariance("covariance is not positive definite".into())
    })?;
    let x = cholesky_solve(&l, cov.dim, uhat);
    let value: f64 = 0.5 * uhat.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
    Ok(MdpRate { value, condition_number: lambda_max / lambda_min })
}
