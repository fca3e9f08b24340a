//! Seeded random generation: Gaussian matrices, Haar-uniform Stiefel frames,
//! and quadrature grids on the unit sphere.
//!
//! All randomness flows through [`SeedSpec`], a (master seed, stream) pair
//! mapped onto independent ChaCha8 streams. Generation is a pure function of
//! (master_seed, stream, counter), so experiments can hand one stream to each
//! replicate and produce bit-identical output for any thread count. Normal
//! variates are drawn with the ziggurat sampler of `rand_distr`; that choice
//! is fixed — changing it would change sampled values for a given seed, but
//! no test pins exact values, only distributional invariants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen;

/// Stream-splittable seed: same pair, same bits out; distinct pairs give
/// statistically independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream: u64,
}

/// Stream offset used for the single retry after a numerically
/// rank-deficient Gram matrix. Far outside the replicate-index range.
const RETRY_STREAM_XOR: u64 = 0x9e37_79b9_7f4a_7c15;

impl SeedSpec {
    pub fn new(master_seed: u64, stream: u64) -> Self {
        SeedSpec { master_seed, stream }
    }

    /// The stream for replicate `index` under the same master seed.
    pub fn with_stream(self, index: u64) -> Self {
        SeedSpec { master_seed: self.master_seed, stream: index }
    }

    /// Instantiate the deterministic generator for this (seed, stream) pair.
    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream);
        rng
    }

    fn retry(self) -> Self {
        SeedSpec {
            master_seed: self.master_seed,
            stream: self.stream ^ RETRY_STREAM_XOR,
        }
    }
}

/// An m x N matrix V with orthonormal rows; Range(V*) is the random
/// subspace and the N columns v_i drive all empirical sums.
#[derive(Debug, Clone)]
pub struct StiefelFrame {
    m: usize,
    n: usize,
    /// Row-major storage: row k occupies entries [k*n, (k+1)*n).
    entries: Vec<f64>,
}

impl StiefelFrame {
    /// Wrap raw rows, checking ||V V* - Id||_max <= 1e-10.
    pub fn from_rows(m: usize, n: usize, entries: Vec<f64>) -> Result<Self> {
        if m == 0 || n < m {
            return Err(Error::InvalidConfig(format!("need 1 <= m <= N, got m={m}, N={n}")));
        }
        if entries.len() != m * n {
            return Err(Error::InvalidConfig(format!(
                "entry buffer has length {}, expected {}",
                entries.len(),
                m * n
            )));
        }
        let frame = StiefelFrame { m, n, entries };
        let dev = frame.orthonormality_defect();
        if dev > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "rows are not orthonormal: ||VV* - Id||_max = {dev:.3e}"
            )));
        }
        Ok(frame)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Row k as a contiguous slice of length N.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.entries[k * self.n..(k + 1) * self.n]
    }

    /// Column i (the vector v_i in R^m).
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.m).map(|k| self.entries[k * self.n + i]).collect()
    }

    /// max_{k,l} |(V V* - Id)_{k,l}|
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.m {
            for l in k..self.m {
                let dot: f64 = self.row(k).iter().zip(self.row(l)).map(|(a, b)| a * b).sum();
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// The inner products <v_i, u> for all columns i, written into `out`.
    ///
    /// This is the hot loop of every experiment; rows are contiguous so the
    /// m <= 3 cases reduce to a handful of streaming fused multiplies.
    pub fn column_dots(&self, u: &[f64], out: &mut [f64]) {
        assert_eq!(u.len(), self.m);
        assert_eq!(out.len(), self.n);
        match self.m {
            1 => {
                let r0 = self.row(0);
                let u0 = u[0];
                for i in 0..self.n {
                    out[i] = u0 * r0[i];
                }
            }
            2 => {
                let (r0, r1) = self.entries.split_at(self.n);
                let (u0, u1) = (u[0], u[1]);
                for i in 0..self.n {
                    out[i] = u0 * r0[i] + u1 * r1[i];
                }
            }
            3 => {
                let (r0, rest) = self.entries.split_at(self.n);
                let (r1, r2) = rest.split_at(self.n);
                let (u0, u1, u2) = (u[0], u[1], u[2]);
                for i in 0..self.n {
                    out[i] = u0 * r0[i] + u1 * r1[i] + u2 * r2[i];
                }
            }
            _ => {
                out.fill(0.0);
                for (k, &uk) in u.iter().enumerate() {
                    let row = self.row(k);
                    for i in 0..self.n {
                        out[i] += uk * row[i];
                    }
                }
            }
        }
    }
}

/// Fill an m x N standard Gaussian matrix, column by column, from one stream.
fn gaussian_matrix(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut g = vec![0.0f64; m * n];
    for i in 0..n {
        for k in 0..m {
            g[k * n + i] = rng.sample(StandardNormal);
        }
    }
    g
}

/// Draw a Haar-uniform frame via the Gram inverse square root:
/// V = (G G*)^(-1/2) G with G an m x N standard Gaussian matrix.
///
/// If the Gram matrix is numerically rank deficient (smallest eigenvalue
/// below 1e-12 of the largest — probability zero in exact arithmetic), the
/// draw is retried once on a derived stream before giving up.
pub fn sample_stiefel(m: usize, n: usize, seed: SeedSpec) -> Result<StiefelFrame> {
    if m == 0 || n < m {
        return Err(Error::InvalidConfig(format!("need 1 <= m <= N, got m={m}, N={n}")));
    }
    match sample_stiefel_once(m, n, seed) {
        Ok(frame) => Ok(frame),
        Err(Error::RankDeficient(_)) => sample_stiefel_once(m, n, seed.retry()),
        Err(e) => Err(e),
    }
}

fn sample_stiefel_once(m: usize, n: usize, seed: SeedSpec) -> Result<StiefelFrame> {
    let mut rng = seed.rng();
    let g = gaussian_matrix(m, n, &mut rng);
    // Gram matrix G G* (m x m).
    let mut gram = vec![0.0f64; m * m];
    for k in 0..m {
        for l in k..m {
            let dot: f64 = g[k * n..(k + 1) * n]
                .iter()
                .zip(&g[l * n..(l + 1) * n])
                .map(|(a, b)| a * b)
                .sum();
            gram[k * m + l] = dot;
            gram[l * m + k] = dot;
        }
    }
    let eigen = sym_eigen(&gram, m);
    let lambda_min = eigen.values[0];
    let lambda_max = eigen.values[m - 1];
    if !(lambda_min > 1e-12 * lambda_max) {
        return Err(Error::RankDeficient(lambda_min / lambda_max));
    }
    let inv_sqrt = eigen.spectral_map(|x| 1.0 / x.sqrt());
    // V = (GG*)^(-1/2) G
    let mut v = vec![0.0f64; m * n];
    for k in 0..m {
        for l in 0..m {
            let w = inv_sqrt[k * m + l];
            let src = &g[l * n..(l + 1) * n];
            let dst = &mut v[k * n..(k + 1) * n];
            for i in 0..n {
                dst[i] += w * src[i];
            }
        }
    }
    StiefelFrame::from_rows(m, n, v)
}

/// A finite direction set on S^(m-1) with quadrature weights summing to 1,
/// the discrete carrier of the normalized spherical measure.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    m: usize,
    /// Flat direction storage, m entries per direction.
    directions: Vec<f64>,
    weights: Vec<f64>,
}

impl SphereGrid {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn direction(&self, j: usize) -> &[f64] {
        &self.directions[j * self.m..(j + 1) * self.m]
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn directions(&self) -> impl Iterator<Item = &[f64]> {
        self.directions.chunks_exact(self.m)
    }

    /// Quadrature of `f` against the normalized spherical measure.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let vals: Vec<f64> = (0..self.len()).map(|j| self.weights[j] * f(self.direction(j))).collect();
        crate::linalg::pairwise_sum(&vals)
    }
}

/// Direction grids for m in {1, 2, 3}.
///
/// * m = 1: the two-point set {+1, -1} with exact weights 1/2 (resolution is
///   ignored).
/// * m = 2: `resolution` equally spaced angles with uniform weights — the
///   periodic trapezoid rule, exact for trigonometric polynomials of degree
///   below the resolution.
/// * m = 3: a Fibonacci lattice of `resolution` points with uniform weights.
pub fn sphere_grid(m: u32, resolution: usize) -> Result<SphereGrid> {
    match m {
        1 => Ok(SphereGrid {
            m: 1,
            directions: vec![1.0, -1.0],
            weights: vec![0.5, 0.5],
        }),
        2 => {
            if resolution < 3 {
                return Err(Error::InvalidConfig(format!(
                    "m=2 grid needs at least 3 directions, got {resolution}"
                )));
            }
            let mut directions = Vec::with_capacity(2 * resolution);
            let step = std::f64::consts::TAU / resolution as f64;
            for j in 0..resolution {
                let theta = j as f64 * step;
                directions.push(theta.cos());
                directions.push(theta.sin());
            }
            Ok(SphereGrid {
                m: 2,
                directions,
                weights: vec![1.0 / resolution as f64; resolution],
            })
        }
        3 => {
            if resolution < 8 {
                return Err(Error::InvalidConfig(format!(
                    "m=3 grid needs at least 8 directions, got {resolution}"
                )));
            }
            let golden_angle = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
            let mut directions = Vec::with_capacity(3 * resolution);
            for j in 0..resolution {
                let z = 1.0 - (2.0 * j as f64 + 1.0) / resolution as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden_angle * j as f64;
                directions.push(r * phi.cos());
                directions.push(r * phi.sin());
                directions.push(z);
            }
            Ok(SphereGrid {
                m: 3,
                directions,
                weights: vec![1.0 / resolution as f64; resolution],
            })
        }
        other => Err(Error::UnsupportedDimension(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{abs_gaussian_moment, stiefel_exact_moment_rescaled};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn frames_are_orthonormal() {
        for (m, n) in [(1usize, 4usize), (2, 8), (3, 32), (4, 64)] {
            let frame = sample_stiefel(m, n, SeedSpec::new(42, 0)).unwrap();
            assert!(frame.orthonormality_defect() <= 1e-10);
        }
    }

    #[test]
    fn deterministic_across_calls() {
        let a = sample_stiefel(3, 128, SeedSpec::new(7, 11)).unwrap();
        let b = sample_stiefel(3, 128, SeedSpec::new(7, 11)).unwrap();
        assert_eq!(a.entries, b.entries);
        let c = sample_stiefel(3, 128, SeedSpec::new(7, 12)).unwrap();
        assert_ne!(a.entries, c.entries);
    }

    #[test]
    fn square_case_is_orthogonal() {
        let frame = sample_stiefel(2, 2, SeedSpec::new(1234, 5)).unwrap();
        let det = frame.row(0)[0] * frame.row(1)[1] - frame.row(0)[1] * frame.row(1)[0];
        assert_abs_diff_eq!(det.abs(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn projection_of_unit_vector_has_unit_image() {
        // u* V V* u = 1 for every unit u, i.e. sum_i <sqrt(N) v_i, u>^2 = N.
        let frame = sample_stiefel(3, 256, SeedSpec::new(99, 3)).unwrap();
        let u = {
            let raw = [0.3f64, -1.2, 0.4];
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            [raw[0] / norm, raw[1] / norm, raw[2] / norm]
        };
        let mut dots = vec![0.0; 256];
        frame.column_dots(&u, &mut dots);
        let total: f64 = dots.iter().map(|d| d * d).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn sphere_mean_is_zero_m1() {
        // Coordinates of a uniform point on S^(N-1) average to zero.
        let n = 16;
        let reps = 10_000;
        let mut sums = vec![0.0f64; n];
        for r in 0..reps {
            let frame = sample_stiefel(1, n, SeedSpec::new(2024, r)).unwrap();
            for (s, x) in sums.iter_mut().zip(frame.row(0)) {
                *s += x;
            }
        }
        let gate = 4.0 / ((reps as f64) * n as f64).sqrt();
        for s in sums {
            assert!(
                (s / reps as f64).abs() < gate,
                "coordinate mean {} exceeds 4 SE gate {gate}",
                s / reps as f64
            );
        }
    }

    #[test]
    fn rotation_invariance_first_two_moments() {
        // The law of R V matches the law of V: compare moments of <v_1, u>
        // from two independent seed ranges, one rotated.
        let reps = 100_000u64;
        let u = [0.6, 0.8];
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let mut plain = Vec::with_capacity(reps as usize);
        let mut rotated = Vec::with_capacity(reps as usize);
        for r in 0..reps {
            let f1 = sample_stiefel(2, 8, SeedSpec::new(5, r)).unwrap();
            let v1 = f1.column(0);
            plain.push(v1[0] * u[0] + v1[1] * u[1]);
            let f2 = sample_stiefel(2, 8, SeedSpec::new(6, r)).unwrap();
            let v2 = f2.column(0);
            let rv = [c * v2[0] - s * v2[1], s * v2[0] + c * v2[1]];
            rotated.push(rv[0] * u[0] + rv[1] * u[1]);
        }
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let second = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        let var1 = crate::linalg::sample_variance(&plain);
        let var2 = crate::linalg::sample_variance(&rotated);
        let se_mean = (var1 / reps as f64).sqrt() + (var2 / reps as f64).sqrt();
        assert!((mean(&plain) - mean(&rotated)).abs() < 4.0 * se_mean);
        let sq1: Vec<f64> = plain.iter().map(|x| x * x).collect();
        let sq2: Vec<f64> = rotated.iter().map(|x| x * x).collect();
        let se_sq = (crate::linalg::sample_variance(&sq1) / reps as f64).sqrt()
            + (crate::linalg::sample_variance(&sq2) / reps as f64).sqrt();
        assert!((second(&plain) - second(&rotated)).abs() < 4.0 * se_sq);
    }

    #[test]
    fn column_moment_matches_closed_form() {
        // E|sqrt(N) v_{1,1}|^q against the exact rescaled Stiefel moment.
        let n = 100usize;
        let reps = 20_000u64;
        for q in [1.0f64, 3.0] {
            let mut vals = Vec::with_capacity(reps as usize);
            for r in 0..reps {
                let frame = sample_stiefel(2, n, SeedSpec::new(31 + q as u64, r)).unwrap();
                let v = frame.column(0);
                vals.push(((n as f64).sqrt() * v[0]).abs().powf(q));
            }
            let mean = crate::linalg::mean(&vals);
            let se = (crate::linalg::sample_variance(&vals) / reps as f64).sqrt();
            let exact = stiefel_exact_moment_rescaled(n as u64, q).unwrap();
            assert!(
                (mean - exact).abs() < 4.0 * se,
                "q={q}: empirical {mean} vs exact {exact} (4se = {})",
                4.0 * se
            );
            // and the rescaled moment is itself close to E|g|^q
            assert_abs_diff_eq!(exact, abs_gaussian_moment(q).unwrap(), epsilon = 2e-2);
        }
    }

    #[test]
    fn grid_m1_exact() {
        let g = sphere_grid(1, 999).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.direction(0), &[1.0]);
        assert_eq!(g.direction(1), &[-1.0]);
        assert_eq!(g.weight(0), 0.5);
        assert_eq!(g.weight(1), 0.5);
    }

    #[test]
    fn grid_m2_integrates_squares_exactly() {
        for res in [16usize, 255, 2048] {
            let g = sphere_grid(2, res).unwrap();
            let integral = g.integrate(|u| u[0] * u[0]);
            assert_abs_diff_eq!(integral, 0.5, epsilon = 1e-12);
            let w: f64 = (0..g.len()).map(|j| g.weight(j)).sum();
            assert_abs_diff_eq!(w, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_m3_integrates_squares() {
        let g = sphere_grid(3, 4096).unwrap();
        for k in 0..3 {
            let integral = g.integrate(|u| u[k] * u[k]);
            assert_abs_diff_eq!(integral, 1.0 / 3.0, epsilon = 1e-4);
        }
        for j in [0usize, 17, 4095] {
            let d = g.direction(j);
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_rejects_unsupported_dimension() {
        assert!(matches!(sphere_grid(4, 100), Err(Error::UnsupportedDimension(4))));
        assert!(sphere_grid(0, 100).is_err());
    }
}
