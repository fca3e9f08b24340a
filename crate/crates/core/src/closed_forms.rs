//! Closed-form moments and limit constants.
//!
//! Everything in this module is exact arithmetic on gamma functions and the
//! diagonal hypergeometric series: absolute Gaussian moments, exact finite-N
//! moments of Stiefel frame entries, mixed moments E|<g,u><g,v>|^q, the
//! asymptotic mean and variance of the scaled volume of a random projection
//! or section of the l_p ball, the radius of the limiting Euclidean ball,
//! and the covariance of the limiting Gaussian process of centered
//! q-th-power sums.
//!
//! Conventions: `q` always denotes the Holder conjugate of `p`. Projection
//! formulas are expressed in `q`, section formulas in `p`, so the p = infinity
//! endpoint never enters floating-point arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{gauss_2f1_diag, log_gamma};

const PI: f64 = std::f64::consts::PI;

/// The norm index p in [1, infinity], with infinity as an explicit variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PNorm {
    Finite(f64),
    Infinity,
}

impl PNorm {
    /// A finite index; requires p >= 1.
    pub fn new(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!("p must satisfy 1 <= p < inf, got {p}")));
        }
        Ok(PNorm::Finite(p))
    }

    pub fn infinity() -> Self {
        PNorm::Infinity
    }

    /// Holder conjugate q with 1/p + 1/q = 1. An involution.
    pub fn conjugate(self) -> PNorm {
        match self {
            PNorm::Infinity => PNorm::Finite(1.0),
            PNorm::Finite(p) => {
                if p == 1.0 {
                    PNorm::Infinity
                } else {
                    PNorm::Finite(p / (p - 1.0))
                }
            }
        }
    }

    pub fn is_two(self) -> bool {
        matches!(self, PNorm::Finite(p) if p == 2.0)
    }

    /// Finite value, or f64::INFINITY for the infinity variant.
    pub fn value(self) -> f64 {
        match self {
            PNorm::Finite(p) => p,
            PNorm::Infinity => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for PNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PNorm::Finite(p) => write!(f, "{p}"),
            PNorm::Infinity => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for PNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "oo" => Ok(PNorm::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::Domain(format!("cannot parse p from {other:?}")))?;
                PNorm::new(p)
            }
        }
    }
}

impl Serialize for PNorm {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PNorm {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Whether the ball is orthogonally projected onto or intersected with the
/// random subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyMode {
    Projection,
    Section,
}

impl BodyMode {
    /// The exponent the volume formulas run on: the conjugate q for
    /// projections (requires p > 1), p itself for sections (requires
    /// p < infinity).
    pub fn body_exponent(self, p: PNorm) -> Result<f64> {
        match self {
            BodyMode::Projection => match p.conjugate() {
                PNorm::Finite(q) => Ok(q),
                PNorm::Infinity => Err(Error::ModeViolation(
                    "projection requires p > 1 (the support norm index q must be finite)".into(),
                )),
            },
            BodyMode::Section => match p {
                PNorm::Finite(p) => Ok(p),
                PNorm::Infinity => Err(Error::ModeViolation(
                    "section formulas require p < infinity".into(),
                )),
            },
        }
    }
}

impl std::fmt::Display for BodyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BodyMode::Projection => write!(f, "projection"),
            BodyMode::Section => write!(f, "section"),
        }
    }
}

impl std::str::FromStr for BodyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "projection" | "proj" => Ok(BodyMode::Projection),
            "section" | "sec" => Ok(BodyMode::Section),
            other => Err(Error::Domain(format!("unknown mode {other:?}"))),
        }
    }
}

/// Volume of the m-dimensional Euclidean unit ball, pi^(m/2) / Gamma(1 + m/2).
pub fn unit_ball_volume(m: u32) -> f64 {
    let mf = m as f64;
    ((mf / 2.0) * PI.ln() - log_gamma(1.0 + mf / 2.0).expect("argument positive")).exp()
}

/// E|g|^q = 2^(q/2) Gamma((q+1)/2) / sqrt(pi) for a standard Gaussian g,
/// valid for q > -1.
pub fn abs_gaussian_moment(q: f64) -> Result<f64> {
    if !(q > -1.0) {
        return Err(Error::Domain(format!("abs Gaussian moment requires q > -1, got {q}")));
    }
    Ok(((q / 2.0) * 2.0f64.ln() + log_gamma((q + 1.0) / 2.0)? - 0.5 * PI.ln()).exp())
}

/// First and second absolute q-th moments of a standard Gaussian, cached for
/// variance computations: E|g|^q and E|g|^(2q).
#[derive(Debug, Clone, Copy)]
pub struct MomentTable {
    pub q: f64,
    pub m: u32,
    pub e_abs: f64,
    pub e_abs_2q: f64,
}

impl MomentTable {
    pub fn new(q: f64, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("m must be positive".into()));
        }
        let e_abs = abs_gaussian_moment(q)?;
        let e_abs_2q = abs_gaussian_moment(2.0 * q)?;
        Ok(MomentTable { q, m, e_abs, e_abs_2q })
    }
}

/// Exact finite-N moment E|v_{i,1}|^q of a single entry of a Haar-uniform
/// Stiefel frame: Gamma((q+1)/2) Gamma(N/2) / (Gamma((N+q)/2) sqrt(pi)).
pub fn stiefel_exact_moment(n: u64, q: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("N must be >= 1".into()));
    }
    if !(q > -1.0) {
        return Err(Error::Domain(format!("Stiefel moment requires q > -1, got {q}")));
    }
    let nf = n as f64;
    Ok((log_gamma((q + 1.0) / 2.0)? + log_gamma(nf / 2.0)? - log_gamma((nf + q) / 2.0)? - 0.5 * PI.ln())
        .exp())
}

/// Rescaled moment N^(q/2) E|v_{i,1}|^q, which converges to E|g|^q faster
/// than 1/sqrt(N).
pub fn stiefel_exact_moment_rescaled(n: u64, q: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("N must be >= 1".into()));
    }
    if !(q > -1.0) {
        return Err(Error::Domain(format!("Stiefel moment requires q > -1, got {q}")));
    }
    let nf = n as f64;
    Ok(((q / 2.0) * nf.ln() + log_gamma((q + 1.0) / 2.0)? + log_gamma(nf / 2.0)?
        - log_gamma((nf + q) / 2.0)?
        - 0.5 * PI.ln())
    .exp())
}

/// Mixed absolute moment E|<g,u><g,v>|^q for jointly standard Gaussian
/// pairs with correlation rho = <u,v>:
/// (2^q Gamma((q+1)/2)^2 / pi) * 2F1(-q/2, -q/2; 1/2; rho^2).
pub fn mixed_abs_moment(q: f64, rho: f64) -> Result<f64> {
    if q < 1.0 {
        return Err(Error::Domain(format!("mixed moment requires q >= 1, got {q}")));
    }
    if !(rho.abs() <= 1.0) {
        return Err(Error::Domain(format!("|rho| <= 1 required, got {rho}")));
    }
    // Correlations within floating-point slop of +-1 take the diagonal
    // branch E|g|^(2q); the inner-product roundoff of unit vectors would
    // otherwise land in the slow-convergence sliver of the series.
    let x = rho * rho;
    let x = if x > 1.0 - 4e-12 { 1.0 } else { x };
    let prefactor = (q * 2.0f64.ln() + 2.0 * log_gamma((q + 1.0) / 2.0)? - PI.ln()).exp();
    Ok(prefactor * gauss_2f1_diag(q, x)?)
}

fn check_unit(u: &[f64]) -> Result<()> {
    let norm_sq: f64 = u.iter().map(|x| x * x).sum();
    let dev = (norm_sq.sqrt() - 1.0).abs();
    if dev > 1e-12 {
        return Err(Error::NonUnitVector(dev));
    }
    Ok(())
}

/// E[|<g,u>|^q g_s g_t] for a unit vector u: (1 + q u_s^2) E|g|^q on the
/// diagonal and q u_s u_t E|g|^q off the diagonal. Indices are zero-based.
pub fn quadratic_cross_moment(q: f64, u: &[f64], s: usize, t: usize) -> Result<f64> {
    if q < 1.0 {
        return Err(Error::Domain(format!("quadratic cross moment requires q >= 1, got {q}")));
    }
    check_unit(u)?;
    if s >= u.len() || t >= u.len() {
        return Err(Error::Domain(format!(
            "indices ({s}, {t}) out of range for dimension {}",
            u.len()
        )));
    }
    let e_abs = abs_gaussian_moment(q)?;
    if s == t {
        Ok((1.0 + q * u[s] * u[s]) * e_abs)
    } else {
        Ok(q * u[s] * u[t] * e_abs)
    }
}

/// The double spherical average E[ int int |<g,u>|^p |<g,v>|^q dsigma dsigma ]
/// over independent sphere directions u, v and g ~ N(0, Id_m):
/// 2^((p+q)/2+1) G((m+p+q)/2) G((1+p)/2) G((1+q)/2) G(1+m/2)
///   / (m pi G((m+p)/2) G((m+q)/2)).
pub fn double_sphere_expectation(m: u32, p: f64, q: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("m must be positive".into()));
    }
    if p < 1.0 || q < 1.0 {
        return Err(Error::Domain(format!("exponents must be >= 1, got p={p}, q={q}")));
    }
    let mf = m as f64;
    let ln = ((p + q) / 2.0 + 1.0) * 2.0f64.ln()
        + log_gamma((mf + p + q) / 2.0)?
        + log_gamma((1.0 + p) / 2.0)?
        + log_gamma((1.0 + q) / 2.0)?
        + log_gamma(1.0 + mf / 2.0)?
        - mf.ln()
        - PI.ln()
        - log_gamma((mf + p) / 2.0)?
        - log_gamma((mf + q) / 2.0)?;
    Ok(ln.exp())
}

/// Asymptotic mean of the scaled volume of the projected or intersected
/// ball, from the displayed closed form (projections in q, sections in p).
pub fn asymptotic_mean(mode: BodyMode, p: PNorm, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("m must be positive".into()));
    }
    let s = mode.body_exponent(p)?;
    let mf = m as f64;
    let ln = match mode {
        BodyMode::Projection => {
            (mf / 2.0) * 2.0f64.ln() + (mf * (s - 1.0) / (2.0 * s)) * PI.ln()
                + (mf / s) * log_gamma((s + 1.0) / 2.0)?
                - log_gamma(mf / 2.0 + 1.0)?
        }
        BodyMode::Section => {
            -(mf / 2.0) * 2.0f64.ln() + (mf * (s + 1.0) / (2.0 * s)) * PI.ln()
                - (mf / s) * log_gamma((s + 1.0) / 2.0)?
                - log_gamma(mf / 2.0 + 1.0)?
        }
    };
    Ok(ln.exp())
}

/// Asymptotic variance of the scaled volume. Vanishes identically at p = 2.
pub fn asymptotic_variance(mode: BodyMode, p: PNorm, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("m must be positive".into()));
    }
    let s = mode.body_exponent(p)?;
    let mf = m as f64;
    // bracket = 4 G(1+m/2) G(m/2+s) - (2m+s^2) G((m+s)/2)^2
    let bracket = (log_gamma(1.0 + mf / 2.0)? + log_gamma(mf / 2.0 + s)? + 4.0f64.ln()).exp()
        - (2.0 * mf + s * s) * (2.0 * log_gamma((mf + s) / 2.0)?).exp();
    let pi_exponent = match mode {
        BodyMode::Projection => (s * mf - mf) / s,
        BodyMode::Section => (s * mf + mf) / s,
    };
    let pow_sign = match mode {
        BodyMode::Projection => 1.0,
        BodyMode::Section => -1.0,
    };
    let ln_prefactor = mf.ln() + pi_exponent * PI.ln()
        + pow_sign * (2.0 * mf / s) * ((s / 2.0) * 2.0f64.ln() + log_gamma((s + 1.0) / 2.0)?)
        - (2.0 * s * s).ln()
        - 2.0 * log_gamma(1.0 + mf / 2.0)?
        - 2.0 * log_gamma((mf + s) / 2.0)?;
    Ok(ln_prefactor.exp() * bracket)
}

/// Radius of the Euclidean ball the scaled projection or section converges
/// to in Hausdorff distance: sqrt(2) pi^(-1/(2q)) Gamma((q+1)/2)^(1/q) for
/// projections and pi^(1/(2p)) 2^(-1/2) Gamma((p+1)/2)^(-1/p) for sections.
pub fn limit_radius(mode: BodyMode, p: PNorm) -> Result<f64> {
    let s = mode.body_exponent(p)?;
    let ln = match mode {
        BodyMode::Projection => {
            0.5 * 2.0f64.ln() - PI.ln() / (2.0 * s) + log_gamma((s + 1.0) / 2.0)? / s
        }
        BodyMode::Section => {
            PI.ln() / (2.0 * s) - 0.5 * 2.0f64.ln() - log_gamma((s + 1.0) / 2.0)? / s
        }
    };
    Ok(ln.exp())
}

/// Covariance E[Z(u)Z(v)] of the limiting Gaussian process of the centered
/// q-th-power sums over Stiefel columns:
///
/// E|<g,u><g,v>|^q - (E|g|^q)^2 (1 + q^2/2 sum_k u_k^2 v_k^2
///                                 + q^2 sum_{k<l} u_k u_l v_k v_l).
///
/// The diagonal u = v reduces to the displayed E[Z(u)^2] branch because the
/// hypergeometric factor collapses to its Gauss summation value there.
pub fn process_covariance(q: f64, u: &[f64], v: &[f64]) -> Result<f64> {
    if q < 1.0 {
        return Err(Error::Domain(format!("process covariance requires q >= 1, got {q}")));
    }
    if u.len() != v.len() {
        return Err(Error::Domain(format!(
            "direction dimensions differ: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    check_unit(u)?;
    check_unit(v)?;
    let rho: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let rho = rho.clamp(-1.0, 1.0);
    let mixed = mixed_abs_moment(q, rho)?;
    let e_abs = abs_gaussian_moment(q)?;
    let m = u.len();
    let mut diag = 0.0;
    for k in 0..m {
        diag += u[k] * u[k] * v[k] * v[k];
    }
    let mut cross = 0.0;
    for k in 0..m {
        for l in (k + 1)..m {
            cross += u[k] * u[l] * v[k] * v[l];
        }
    }
    let correction = 1.0 + (q * q / 2.0) * diag + q * q * cross;
    Ok(mixed - e_abs * e_abs * correction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        // n must be even
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn unit_ball_volumes() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(2), PI, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_moment_trivial_and_derived() {
        assert_relative_eq!(abs_gaussian_moment(2.0).unwrap(), 1.0, max_relative = 1e-13);
        assert_relative_eq!(abs_gaussian_moment(4.0).unwrap(), 3.0, max_relative = 1e-13);
        // Independent quadrature oracle for E|g| = sqrt(2/pi).
        let phi = |x: f64| (-(x * x) / 2.0).exp() / (2.0 * PI).sqrt();
        let quad = 2.0 * simpson(|x| x * phi(x), 0.0, 12.0, 4096);
        assert_relative_eq!(abs_gaussian_moment(1.0).unwrap(), quad, max_relative = 1e-10);
        assert_relative_eq!(
            abs_gaussian_moment(1.0).unwrap(),
            (2.0 / PI).sqrt(),
            max_relative = 1e-13
        );
        assert!(abs_gaussian_moment(-1.0).is_err());
    }

    #[test]
    fn gaussian_moment_recursion() {
        for q in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.5] {
            let lhs = abs_gaussian_moment(q + 2.0).unwrap();
            let rhs = (q + 1.0) * abs_gaussian_moment(q).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn stiefel_moment_examples() {
        for n in [1u64, 2, 5, 100] {
            assert_relative_eq!(
                stiefel_exact_moment(n, 2.0).unwrap(),
                1.0 / n as f64,
                max_relative = 1e-12
            );
        }
        // E|cos theta| over the circle, by quadrature.
        let quad = simpson(|t: f64| t.cos().abs(), 0.0, 2.0 * PI, 4096) / (2.0 * PI);
        assert_relative_eq!(stiefel_exact_moment(2, 1.0).unwrap(), quad, max_relative = 1e-10);
        assert_relative_eq!(stiefel_exact_moment(2, 1.0).unwrap(), 2.0 / PI, max_relative = 1e-13);
    }

    #[test]
    fn stiefel_moment_rescaled_converges() {
        let g1 = abs_gaussian_moment(1.0).unwrap();
        assert_abs_diff_eq!(
            stiefel_exact_moment_rescaled(1_000_000, 1.0).unwrap(),
            g1,
            epsilon = 1e-3
        );
        // sqrt(N) * |gap| decreases along N = 1e2, 1e3, 1e4.
        let mut prev = f64::INFINITY;
        for n in [100u64, 1000, 10_000] {
            for q in [1.0, 3.0] {
                let gap = (stiefel_exact_moment_rescaled(n, q).unwrap()
                    - abs_gaussian_moment(q).unwrap())
                .abs();
                let scaled = (n as f64).sqrt() * gap;
                assert!(scaled.is_finite());
                if q == 1.0 {
                    assert!(scaled < prev, "sqrt(N) gap not decreasing at N={n}");
                    prev = scaled;
                }
            }
        }
    }

    #[test]
    fn mixed_moment_examples() {
        for q in [1.0, 1.5, 3.0] {
            let e = abs_gaussian_moment(q).unwrap();
            assert_relative_eq!(mixed_abs_moment(q, 0.0).unwrap(), e * e, max_relative = 1e-12);
        }
        for rho in [-0.9f64, -0.3, 0.0, 0.4, 1.0] {
            assert_relative_eq!(
                mixed_abs_moment(2.0, rho).unwrap(),
                1.0 + 2.0 * rho * rho,
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(mixed_abs_moment(1.0, 1.0).unwrap(), 1.0, max_relative = 1e-12);
        // |rho| = 1 agrees with the diagonal moment E|g|^{2q}.
        for q in [1.0, 1.5, 3.0] {
            assert_relative_eq!(
                mixed_abs_moment(q, 1.0).unwrap(),
                abs_gaussian_moment(2.0 * q).unwrap(),
                max_relative = 1e-12
            );
        }
        assert!(mixed_abs_moment(1.0, 1.2).is_err());
    }

    #[test]
    fn quadratic_cross_moment_examples() {
        let e1 = [1.0, 0.0];
        for q in [1.0, 1.5, 3.0] {
            assert_relative_eq!(
                quadratic_cross_moment(q, &e1, 0, 0).unwrap(),
                (1.0 + q) * abs_gaussian_moment(q).unwrap(),
                max_relative = 1e-12
            );
            // reduces to E|g|^{q+2} by the gamma recursion
            assert_relative_eq!(
                quadratic_cross_moment(q, &e1, 0, 0).unwrap(),
                abs_gaussian_moment(q + 2.0).unwrap(),
                max_relative = 1e-12
            );
            assert_relative_eq!(
                quadratic_cross_moment(q, &e1, 1, 1).unwrap(),
                abs_gaussian_moment(q).unwrap(),
                max_relative = 1e-12
            );
        }
        let diag = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
        assert_relative_eq!(quadratic_cross_moment(2.0, &diag, 0, 1).unwrap(), 1.0, max_relative = 1e-12);
        assert!(quadratic_cross_moment(1.0, &[0.5, 0.5], 0, 0).is_err());
    }

    #[test]
    fn double_sphere_reductions() {
        for (p, q) in [(1.0, 1.0), (1.0, 2.0), (2.5, 3.0)] {
            assert_relative_eq!(
                double_sphere_expectation(1, p, q).unwrap(),
                abs_gaussian_moment(p + q).unwrap(),
                max_relative = 1e-12
            );
        }
        for m in [1u32, 2, 3, 7] {
            assert_relative_eq!(
                double_sphere_expectation(m, 2.0, 2.0).unwrap(),
                1.0 + 2.0 / m as f64,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn asymptotic_mean_examples() {
        let p2 = PNorm::new(2.0).unwrap();
        for m in [1u32, 2, 3] {
            assert_relative_eq!(
                asymptotic_mean(BodyMode::Projection, p2, m).unwrap(),
                unit_ball_volume(m),
                max_relative = 1e-12
            );
            assert_relative_eq!(
                asymptotic_mean(BodyMode::Section, p2, m).unwrap(),
                unit_ball_volume(m),
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(
            asymptotic_mean(BodyMode::Projection, PNorm::infinity(), 2).unwrap(),
            2.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            asymptotic_mean(BodyMode::Projection, PNorm::infinity(), 1).unwrap(),
            2.0 * (2.0 / PI).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn asymptotic_variance_degenerates_at_p2() {
        let p2 = PNorm::new(2.0).unwrap();
        for mode in [BodyMode::Projection, BodyMode::Section] {
            for m in 1..=5 {
                let v = asymptotic_variance(mode, p2, m).unwrap();
                assert!(v.abs() < 1e-10, "sigma^2(p=2, m={m}) = {v}");
            }
        }
    }

    #[test]
    fn cube_variance_two_routes() {
        // General formula at q = 1 vs the cube-specialized
        // 2^(m-1) m (4 / G((m+1)/2)^2 - (2m+1) / G(m/2+1)^2).
        for m in 1..=4u32 {
            let mf = m as f64;
            let general = asymptotic_variance(BodyMode::Projection, PNorm::infinity(), m).unwrap();
            let special = 2.0f64.powf(mf - 1.0)
                * mf
                * (4.0 / (2.0 * log_gamma((mf + 1.0) / 2.0).unwrap()).exp()
                    - (2.0 * mf + 1.0) / (2.0 * log_gamma(mf / 2.0 + 1.0).unwrap()).exp());
            assert_relative_eq!(general, special, max_relative = 1e-12);
        }
        // m = 1: both equal 4 - 12/pi = 4(pi-3)/pi.
        let v = asymptotic_variance(BodyMode::Projection, PNorm::infinity(), 1).unwrap();
        assert_relative_eq!(v, 4.0 - 12.0 / PI, max_relative = 1e-12);
        assert_relative_eq!(v, 4.0 * (PI - 3.0) / PI, max_relative = 1e-12);
    }

    #[test]
    fn section_variance_p1_m1() {
        let v = asymptotic_variance(BodyMode::Section, PNorm::new(1.0).unwrap(), 1).unwrap();
        assert_relative_eq!(v, PI * (PI - 3.0), max_relative = 1e-12);
    }

    #[test]
    fn limit_radius_examples() {
        assert_relative_eq!(
            limit_radius(BodyMode::Projection, PNorm::infinity()).unwrap(),
            (2.0 / PI).sqrt(),
            max_relative = 1e-12
        );
        let p2 = PNorm::new(2.0).unwrap();
        assert_relative_eq!(limit_radius(BodyMode::Projection, p2).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(limit_radius(BodyMode::Section, p2).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn conjugacy_mean_equals_kappa_radius_power() {
        let ps = [
            PNorm::new(1.0).unwrap(),
            PNorm::new(1.5).unwrap(),
            PNorm::new(2.0).unwrap(),
            PNorm::new(3.0).unwrap(),
            PNorm::infinity(),
        ];
        for p in ps {
            for m in [1u32, 2, 3] {
                for mode in [BodyMode::Projection, BodyMode::Section] {
                    if mode.body_exponent(p).is_err() {
                        continue;
                    }
                    let mu = asymptotic_mean(mode, p, m).unwrap();
                    let r = limit_radius(mode, p).unwrap();
                    assert_relative_eq!(
                        mu,
                        unit_ball_volume(m) * r.powi(m as i32),
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn mode_violations_rejected() {
        assert!(asymptotic_mean(BodyMode::Projection, PNorm::new(1.0).unwrap(), 2).is_err());
        assert!(asymptotic_mean(BodyMode::Section, PNorm::infinity(), 2).is_err());
        assert!(limit_radius(BodyMode::Projection, PNorm::new(1.0).unwrap()).is_err());
    }

    #[test]
    fn process_covariance_examples() {
        // q=1 diagonal at e1: E g^2 - (2/pi)(1 + 1/2) = 1 - 3/pi.
        let e1 = [1.0];
        let v = process_covariance(1.0, &e1, &e1).unwrap();
        assert_relative_eq!(v, 1.0 - 3.0 / PI, max_relative = 1e-12);
        // Same for e1 embedded in higher dimension.
        let e1_3 = [1.0, 0.0, 0.0];
        assert_relative_eq!(
            process_covariance(1.0, &e1_3, &e1_3).unwrap(),
            1.0 - 3.0 / PI,
            max_relative = 1e-12
        );
        assert!(process_covariance(1.0, &[0.7, 0.0], &e1).is_err());
        assert!(process_covariance(1.0, &[0.5, 0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn variance_bridge_m1() {
        // Delta-method identity at m = 1: the variance of the limiting
        // volume fluctuation equals kappa_1^2 (1/q^2) E|g|^q^(2/q - 2)
        // times the average of the process covariance over {+-1}^2.
        for q in [1.0, 1.5, 3.0] {
            let mut acc = 0.0;
            for u in [[1.0], [-1.0]] {
                for v in [[1.0], [-1.0]] {
                    acc += process_covariance(q, &u, &v).unwrap();
                }
            }
            let avg = acc / 4.0;
            let e_abs = abs_gaussian_moment(q).unwrap();
            let bridge = 4.0 / (q * q) * e_abs.powf(2.0 / q - 2.0) * avg;
            let p = PNorm::new(q).unwrap().conjugate();
            let sigma_sq = asymptotic_variance(BodyMode::Projection, p, 1).unwrap();
            assert_abs_diff_eq!(bridge, sigma_sq, epsilon = 1e-10);
        }
    }

    #[test]
    fn variance_matches_delta_method_integral_route() {
        // Independent route to sigma^2 for every m: the variance of the
        // integrated limiting process,
        //   kappa_m^2 (m/s)^2 E^(+-2m/s - 2) [ D(m,s,s) - E^2 (1 + s^2/(2m)) ],
        // where D is the double spherical average and the sign of the
        // exponent flips between projections and sections. Ties together
        // three separately coded closed forms.
        for m in [1u32, 2, 3, 4] {
            let mf = m as f64;
            let kappa = unit_ball_volume(m);
            for s in [1.0f64, 1.3, 1.5, 2.5, 3.0] {
                let e = abs_gaussian_moment(s).unwrap();
                let integrated =
                    double_sphere_expectation(m, s, s).unwrap() - e * e * (1.0 + s * s / (2.0 * mf));
                let factor = kappa * kappa * (mf / s) * (mf / s);
                // projection: exponent q = s
                let p_proj = PNorm::new(s).unwrap().conjugate();
                let via_integral = factor * e.powf(2.0 * mf / s - 2.0) * integrated;
                let direct = asymptotic_variance(BodyMode::Projection, p_proj, m).unwrap();
                assert_relative_eq!(direct, via_integral, max_relative = 1e-11, epsilon = 1e-13);
                // section: exponent p = s
                let via_integral_sec = factor * e.powf(-2.0 * mf / s - 2.0) * integrated;
                let direct_sec =
                    asymptotic_variance(BodyMode::Section, PNorm::new(s).unwrap(), m).unwrap();
                assert_relative_eq!(direct_sec, via_integral_sec, max_relative = 1e-11, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn m1_specialized_variance_formula() {
        // sigma^2 = 2 pi^(-1/q) (2^(q/2) G((q+1)/2))^(2/q)
        //           (2 sqrt(pi) G(q+1/2) - (q^2+2) G((q+1)/2)^2) / (q^2 G((q+1)/2)^2)
        for q in [1.0, 1.3, 1.5, 2.5, 3.0] {
            let g_half = (log_gamma((q + 1.0) / 2.0).unwrap()).exp();
            let g_q = (log_gamma(q + 0.5).unwrap()).exp();
            let special = 2.0 * PI.powf(-1.0 / q)
                * (2.0f64.powf(q / 2.0) * g_half).powf(2.0 / q)
                * (2.0 * PI.sqrt() * g_q - (q * q + 2.0) * g_half * g_half)
                / (q * q * g_half * g_half);
            let p = PNorm::new(q).unwrap().conjugate();
            let general = asymptotic_variance(BodyMode::Projection, p, 1).unwrap();
            assert_relative_eq!(general, special, max_relative = 1e-11, epsilon = 1e-13);
        }
    }

    #[test]
    fn conjugate_rules() {
        assert_eq!(PNorm::new(1.0).unwrap().conjugate(), PNorm::Infinity);
        assert_eq!(PNorm::infinity().conjugate(), PNorm::Finite(1.0));
        assert_eq!(PNorm::new(2.0).unwrap().conjugate(), PNorm::Finite(2.0));
        match PNorm::new(3.0).unwrap().conjugate() {
            PNorm::Finite(q) => assert!((q - 1.5).abs() < 1e-15),
            PNorm::Infinity => panic!("conjugate of 3 is 3/2"),
        }
        assert!(PNorm::new(0.9).is_err());
        assert!("inf".parse::<PNorm>().unwrap() == PNorm::Infinity);
        assert!("2.5".parse::<PNorm>().is_ok());
        assert!("nope".parse::<PNorm>().is_err());
    }

    #[test]
    fn moment_table_jensen() {
        for q in [1.0, 1.5, 2.0, 3.0] {
            let table = MomentTable::new(q, 2).unwrap();
            assert!(table.e_abs > 0.0);
            assert!(table.e_abs_2q >= table.e_abs * table.e_abs);
        }
        assert!(MomentTable::new(1.0, 0).is_err());
    }

    #[test]
    fn quadratic_index_bounds() {
        assert!(quadratic_cross_moment(1.0, &[1.0, 0.0], 0, 2).is_err());
        assert!(quadratic_cross_moment(0.5, &[1.0], 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn conjugate_is_involution(p in 1.0f64..50.0) {
            let pn = PNorm::new(p).unwrap();
            let back = pn.conjugate().conjugate();
            match (pn, back) {
                (PNorm::Finite(a), PNorm::Finite(b)) => prop_assert!((a - b).abs() < 1e-12 * a.max(1.0)),
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn mixed_moment_even_and_monotone(q in 1.0f64..4.0, rho in 0.0f64..0.97) {
            let plus = mixed_abs_moment(q, rho).unwrap();
            let minus = mixed_abs_moment(q, -rho).unwrap();
            prop_assert!((plus - minus).abs() <= 1e-12 * plus.abs());
            let smaller = mixed_abs_moment(q, rho * 0.9).unwrap();
            prop_assert!(plus >= smaller - 1e-12);
        }

        #[test]
        fn process_variance_nonnegative(q in 1.0f64..4.0, theta in 0.0f64..std::f64::consts::TAU) {
            let u = [theta.cos(), theta.sin()];
            let var = process_covariance(q, &u, &u).unwrap();
            prop_assert!(var >= -1e-10, "variance {var} negative at q={q}, theta={theta}");
        }

        #[test]
        fn process_covariance_vanishes_at_q2(
            a in 0.0f64..std::f64::consts::TAU,
            b in 0.0f64..std::f64::consts::TAU,
        ) {
            let u = [a.cos(), a.sin()];
            let v = [b.cos(), b.sin()];
            let c = process_covariance(2.0, &u, &v).unwrap();
            prop_assert!(c.abs() < 1e-12, "q=2 covariance {c} not degenerate");
        }
    }
}
