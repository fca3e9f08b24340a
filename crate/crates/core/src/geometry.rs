//! Convex geometry of the projected or intersected ball.
//!
//! With V an m x N frame with orthonormal rows, the support function of the
//! scaled projected ball satisfies
//!
//!   h(N^(1/p - 1/2) V B_p^N, u)^q = (1/N) sum_i |<sqrt(N) v_i, u>|^q,
//!
//! i.e. h(u) = N^(1/2 - 1/q) ||V* u||_q with q the Holder conjugate, and the
//! radial function of the scaled section is the reciprocal expression in p:
//! rho(u) = N^(1/p - 1/2) / ||V* u||_p. Volumes come from the spherical
//! quadrature of rho^m; projections for m >= 2 first pass through the
//! inf-transform rho(x) = inf { h(u) / <x,u> : <u,x> > 0 }.

use crate::closed_forms::{unit_ball_volume, BodyMode, PNorm};
use crate::error::{Error, Result};
use crate::sampling::{SphereGrid, StiefelFrame};

/// sum_i |d_i|^q with fast paths for the exponents that dominate practice.
pub(crate) fn power_sum(dots: &[f64], q: f64) -> f64 {
    if q == 1.0 {
        dots.iter().map(|d| d.abs()).sum()
    } else if q == 2.0 {
        dots.iter().map(|d| d * d).sum()
    } else if q == 3.0 {
        dots.iter()
            .map(|d| {
                let a = d.abs();
                a * a * a
            })
            .sum()
    } else if q == 1.5 {
        dots.iter()
            .map(|d| {
                let a = d.abs();
                a * a.sqrt()
            })
            .sum()
    } else if q == 4.0 {
        dots.iter()
            .map(|d| {
                let s = d * d;
                s * s
            })
            .sum()
    } else {
        dots.iter().map(|d| d.abs().powf(q)).sum()
    }
}

/// (1/N) sum_i |<sqrt(N) v_i, u>|^s, the power mean driving both support and
/// radial functions. `scratch` must have length N.
fn scaled_power_mean(frame: &StiefelFrame, u: &[f64], s: f64, scratch: &mut [f64]) -> f64 {
    frame.column_dots(u, scratch);
    let n = frame.n() as f64;
    n.powf(s / 2.0 - 1.0) * power_sum(scratch, s)
}

/// Support value of the scaled projected ball in direction u:
/// ((1/N) sum_i |<sqrt(N) v_i, u>|^q)^(1/q). Requires p > 1.
pub fn projection_support(frame: &StiefelFrame, p: PNorm, u: &[f64]) -> Result<f64> {
    let mut scratch = vec![0.0; frame.n()];
    projection_support_scratch(frame, p, u, &mut scratch)
}

pub(crate) fn projection_support_scratch(
    frame: &StiefelFrame,
    p: PNorm,
    u: &[f64],
    scratch: &mut [f64],
) -> Result<f64> {
    let q = BodyMode::Projection.body_exponent(p)?;
    Ok(scaled_power_mean(frame, u, q, scratch).powf(1.0 / q))
}

/// Radial value of the scaled section in direction u:
/// ((1/N) sum_i |<sqrt(N) v_i, u>|^p)^(-1/p). Requires p < infinity.
pub fn section_radial(frame: &StiefelFrame, p: PNorm, u: &[f64]) -> Result<f64> {
    let mut scratch = vec![0.0; frame.n()];
    section_radial_scratch(frame, p, u, &mut scratch)
}

pub(crate) fn section_radial_scratch(
    frame: &StiefelFrame,
    p: PNorm,
    u: &[f64],
    scratch: &mut [f64],
) -> Result<f64> {
    let pv = BodyMode::Section.body_exponent(p)?;
    Ok(scaled_power_mean(frame, u, pv, scratch).powf(-1.0 / pv))
}

/// Support values of the projected ball over all grid directions.
pub(crate) fn support_profile_values(
    frame: &StiefelFrame,
    p: PNorm,
    grid: &SphereGrid,
) -> Result<Vec<f64>> {
    let q = BodyMode::Projection.body_exponent(p)?;
    let mut scratch = vec![0.0; frame.n()];
    Ok(grid
        .directions()
        .map(|u| scaled_power_mean(frame, u, q, &mut scratch).powf(1.0 / q))
        .collect())
}

/// Radial values of the section over all grid directions.
pub(crate) fn section_radial_values(
    frame: &StiefelFrame,
    p: PNorm,
    grid: &SphereGrid,
) -> Result<Vec<f64>> {
    let pv = BodyMode::Section.body_exponent(p)?;
    let mut scratch = vec![0.0; frame.n()];
    Ok(grid
        .directions()
        .map(|u| scaled_power_mean(frame, u, pv, &mut scratch).powf(-1.0 / pv))
        .collect())
}

/// Per-direction support values over a grid.
#[derive(Debug, Clone)]
pub struct SupportProfile {
    pub grid: SphereGrid,
    pub values: Vec<f64>,
}

/// Per-direction radial values over a grid.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub grid: SphereGrid,
    pub values: Vec<f64>,
}

fn check_profile(grid: &SphereGrid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::InvalidConfig(format!(
            "profile has {} values for a grid of {} directions",
            values.len(),
            grid.len()
        )));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidConfig("profile values must be positive".into()));
    }
    Ok(())
}

impl SupportProfile {
    pub fn new(grid: SphereGrid, values: Vec<f64>) -> Result<Self> {
        check_profile(&grid, &values)?;
        Ok(SupportProfile { grid, values })
    }

    /// Interpolated evaluation off the grid (exact on grid points): sign
    /// lookup for m = 1, periodic linear interpolation in the angle for
    /// m = 2, nearest grid direction for m = 3.
    pub fn eval(&self, dir: &[f64]) -> f64 {
        interp_profile(&self.grid, &self.values, dir)
    }

    /// The inf-transform of this profile at x, i.e. the radial value of the
    /// convex body the profile describes.
    pub fn radial_at(&self, x: &[f64]) -> f64 {
        radial_from_support(&self.grid, |u| self.eval(u), x)
    }
}

impl RadialProfile {
    pub fn new(grid: SphereGrid, values: Vec<f64>) -> Result<Self> {
        check_profile(&grid, &values)?;
        Ok(RadialProfile { grid, values })
    }

    pub fn eval(&self, dir: &[f64]) -> f64 {
        interp_profile(&self.grid, &self.values, dir)
    }

    /// The sup-transform h(u) = max_v rho(v) <v, u> of this profile.
    pub fn support_at(&self, u: &[f64]) -> f64 {
        support_from_radial(&self.grid, |v| self.eval(v), u)
    }
}

fn interp_profile(grid: &SphereGrid, values: &[f64], dir: &[f64]) -> f64 {
    match grid.m() {
        1 => {
            if dir[0] >= 0.0 {
                values[0]
            } else {
                values[1]
            }
        }
        2 => {
            let n = grid.len() as f64;
            let theta = dir[1].atan2(dir[0]).rem_euclid(std::f64::consts::TAU);
            let t = theta / std::f64::consts::TAU * n;
            let j0 = (t.floor() as usize) % grid.len();
            let j1 = (j0 + 1) % grid.len();
            let frac = t - t.floor();
            values[j0] * (1.0 - frac) + values[j1] * frac
        }
        _ => {
            // nearest grid direction by inner product
            let mut best = f64::NEG_INFINITY;
            let mut best_j = 0;
            for j in 0..grid.len() {
                let d = grid.direction(j);
                let dot: f64 = d.iter().zip(dir).map(|(a, b)| a * b).sum();
                if dot > best {
                    best = dot;
                    best_j = j;
                }
            }
            values[best_j]
        }
    }
}

/// Build the support profile of the scaled projected ball over a grid.
pub fn support_profile(frame: &StiefelFrame, p: PNorm, grid: &SphereGrid) -> Result<SupportProfile> {
    if grid.m() != frame.m() {
        return Err(Error::InvalidConfig(format!(
            "grid dimension {} does not match frame dimension {}",
            grid.m(),
            frame.m()
        )));
    }
    let q = BodyMode::Projection.body_exponent(p)?;
    let mut scratch = vec![0.0; frame.n()];
    let values: Vec<f64> = grid
        .directions()
        .map(|u| scaled_power_mean(frame, u, q, &mut scratch).powf(1.0 / q))
        .collect();
    SupportProfile::new(grid.clone(), values)
}

/// Build the radial profile of the scaled section over a grid.
pub fn radial_profile(frame: &StiefelFrame, p: PNorm, grid: &SphereGrid) -> Result<RadialProfile> {
    if grid.m() != frame.m() {
        return Err(Error::InvalidConfig(format!(
            "grid dimension {} does not match frame dimension {}",
            grid.m(),
            frame.m()
        )));
    }
    let pv = BodyMode::Section.body_exponent(p)?;
    let mut scratch = vec![0.0; frame.n()];
    let values: Vec<f64> = grid
        .directions()
        .map(|u| scaled_power_mean(frame, u, pv, &mut scratch).powf(-1.0 / pv))
        .collect();
    RadialProfile::new(grid.clone(), values)
}

/// Golden-section minimization of `f` over `[center - hw, center + hw]`.
fn golden_min(f: impl Fn(f64) -> f64, center: f64, hw: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (center - hw, center + hw);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// Pattern-search minimization on the sphere around `center`: a 3 x 3
/// stencil on the local tangent plane, re-centered on the best point and
/// halved `iters` times.
fn tangent_square_min(f: impl Fn(&[f64]) -> f64, center: &[f64], width: f64, iters: usize) -> f64 {
    let mut c = [center[0], center[1], center[2]];
    // tangent basis: cross center with its least-aligned axis
    let axis = if c[0].abs() <= c[1].abs() && c[0].abs() <= c[2].abs() {
        [1.0, 0.0, 0.0]
    } else if c[1].abs() <= c[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let mut t1 = [
        c[1] * axis[2] - c[2] * axis[1],
        c[2] * axis[0] - c[0] * axis[2],
        c[0] * axis[1] - c[1] * axis[0],
    ];
    let norm1 = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    t1 = [t1[0] / norm1, t1[1] / norm1, t1[2] / norm1];
    let t2 = [
        c[1] * t1[2] - c[2] * t1[1],
        c[2] * t1[0] - c[0] * t1[2],
        c[0] * t1[1] - c[1] * t1[0],
    ];
    let mut w = width;
    let mut best = f(&c);
    for _ in 0..iters {
        let mut improved_center = c;
        for da in [-1.0f64, 0.0, 1.0] {
            for db in [-1.0f64, 0.0, 1.0] {
                if da == 0.0 && db == 0.0 {
                    continue;
                }
                let raw = [
                    c[0] + w * (da * t1[0] + db * t2[0]),
                    c[1] + w * (da * t1[1] + db * t2[1]),
                    c[2] + w * (da * t1[2] + db * t2[2]),
                ];
                let norm = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt();
                let cand = [raw[0] / norm, raw[1] / norm, raw[2] / norm];
                let val = f(&cand);
                if val < best {
                    best = val;
                    improved_center = cand;
                }
            }
        }
        c = improved_center;
        w *= 0.5;
    }
    best
}

/// Minimize a direction functional near a starting grid point. `hw` is the
/// angular half-width of the search window (one grid step).
fn refine_direction_min(
    grid: &SphereGrid,
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    start_value: f64,
) -> f64 {
    let refined = match grid.m() {
        1 => start_value,
        2 => {
            let theta0 = start[1].atan2(start[0]);
            let hw = std::f64::consts::TAU / grid.len() as f64;
            golden_min(
                |theta| f(&[theta.cos(), theta.sin()]),
                theta0,
                hw,
                1e-6,
            )
        }
        _ => {
            // cap radius of a Fibonacci lattice is ~2/sqrt(G)
            let width = 3.0 / (grid.len() as f64).sqrt();
            tangent_square_min(|u| f(u), start, width, 12)
        }
    };
    refined.min(start_value)
}

/// Radial function from a support function:
/// rho(x) = inf { h(u) / <x, u> : u in S^(m-1), <u, x> > 0 },
/// evaluated by a grid scan followed by local refinement around the best
/// grid direction. The result never undershoots the true radial value by
/// more than the refinement resolution allows.
pub fn radial_from_support(grid: &SphereGrid, h: impl Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
    let values: Vec<f64> = grid.directions().map(&h).collect();
    inf_transform_with_values(grid, &values, &|u| h(u), x)
}

/// Same as [`radial_from_support`] when the grid values of h are already
/// known; `h` is then only consulted during refinement.
fn inf_transform_with_values(
    grid: &SphereGrid,
    values: &[f64],
    h: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
) -> f64 {
    let mut best = f64::INFINITY;
    let mut best_j = usize::MAX;
    for (j, &value) in values.iter().enumerate() {
        let u = grid.direction(j);
        let dot: f64 = u.iter().zip(x).map(|(a, b)| a * b).sum();
        if dot > 1e-12 {
            let cand = value / dot;
            if cand < best {
                best = cand;
                best_j = j;
            }
        }
    }
    assert!(best_j != usize::MAX, "grid contains no feasible hemisphere direction");
    if grid.m() == 1 {
        return best;
    }
    let objective = |u: &[f64]| {
        let dot: f64 = u.iter().zip(x).map(|(a, b)| a * b).sum();
        if dot <= 1e-12 {
            f64::INFINITY
        } else {
            h(u) / dot
        }
    };
    refine_direction_min(grid, &objective, grid.direction(best_j), best)
}

/// Support function from a radial function:
/// h(u) = max_v rho(v) <v, u>, grid maximum plus local refinement. The grid
/// value is a lower bound of the true supremum.
pub fn support_from_radial(grid: &SphereGrid, rho: impl Fn(&[f64]) -> f64, u: &[f64]) -> f64 {
    let values: Vec<f64> = grid.directions().map(&rho).collect();
    support_from_radial_refined(grid, &values, &|v| rho(v), u)
}

/// Plain grid maximum of rho(v) <v, u> without refinement; a lower bound of
/// the true support value with relative gap at most 1 - cos(grid spacing).
pub(crate) fn support_scan(grid: &SphereGrid, values: &[f64], u: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (j, &value) in values.iter().enumerate() {
        let v = grid.direction(j);
        let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
        let cand = value * dot;
        if cand > best {
            best = cand;
        }
    }
    best
}

pub(crate) fn support_from_radial_refined(
    grid: &SphereGrid,
    values: &[f64],
    rho: &dyn Fn(&[f64]) -> f64,
    u: &[f64],
) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut best_j = 0;
    for (j, &value) in values.iter().enumerate() {
        let v = grid.direction(j);
        let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
        let cand = value * dot;
        if cand > best {
            best = cand;
            best_j = j;
        }
    }
    if grid.m() == 1 {
        return best;
    }
    let objective = |v: &[f64]| {
        let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
        -(rho(v) * dot)
    };
    -refine_direction_min(grid, &objective, grid.direction(best_j), -best)
}

/// Volume by radial quadrature: kappa_m * sum_j w_j rho_j^m.
pub fn body_volume_from_radial(profile: &RadialProfile) -> f64 {
    let m = profile.grid.m() as i32;
    let kappa = unit_ball_volume(profile.grid.m() as u32);
    let weighted: Vec<f64> = (0..profile.grid.len())
        .map(|j| profile.grid.weight(j) * profile.values[j].powi(m))
        .collect();
    kappa * crate::linalg::pairwise_sum(&weighted)
}

/// Volume of the scaled projection or section of the ball carried by the
/// frame.
///
/// Sections integrate the radial function directly. Projections build the
/// support profile, pass through the inf-transform (trivial at m = 1 where
/// the radial and support values coincide), and integrate. An exact
/// alternative for projections would test membership of r*x via the convex
/// program min ||y||_p s.t. V y = x; the inf-transform is used instead
/// because it reuses the support identity and needs no solver.
pub fn scaled_body_volume(
    frame: &StiefelFrame,
    p: PNorm,
    mode: BodyMode,
    grid: &SphereGrid,
) -> Result<f64> {
    if grid.m() != frame.m() {
        return Err(Error::InvalidConfig(format!(
            "grid dimension {} does not match frame dimension {}",
            grid.m(),
            frame.m()
        )));
    }
    let s = mode.body_exponent(p)?;
    let m = frame.m();
    let kappa = unit_ball_volume(m as u32);
    let mut scratch = vec![0.0; frame.n()];
    match mode {
        BodyMode::Section => {
            let weighted: Vec<f64> = (0..grid.len())
                .map(|j| {
                    let pm = scaled_power_mean(frame, grid.direction(j), s, &mut scratch);
                    grid.weight(j) * pm.powf(-(m as f64) / s)
                })
                .collect();
            Ok(kappa * crate::linalg::pairwise_sum(&weighted))
        }
        BodyMode::Projection => {
            let values: Vec<f64> = grid
                .directions()
                .map(|u| scaled_power_mean(frame, u, s, &mut scratch).powf(1.0 / s))
                .collect();
            if m == 1 {
                // The 1-D body is the segment [-h, h]; radial equals support.
                let weighted: Vec<f64> =
                    (0..grid.len()).map(|j| grid.weight(j) * values[j]).collect();
                return Ok(kappa * crate::linalg::pairwise_sum(&weighted));
            }
            let h_exact = |u: &[f64]| {
                let mut local = vec![0.0; frame.n()];
                scaled_power_mean(frame, u, s, &mut local).powf(1.0 / s)
            };
            let weighted: Vec<f64> = (0..grid.len())
                .map(|j| {
                    let rho = inf_transform_with_values(grid, &values, &h_exact, grid.direction(j));
                    grid.weight(j) * rho.powi(m as i32)
                })
                .collect();
            Ok(kappa * crate::linalg::pairwise_sum(&weighted))
        }
    }
}

/// Hausdorff distance to the centered Euclidean ball of radius r, i.e. the
/// sup-norm distance of support functions, max_u |h(u) - r|.
pub fn hausdorff_to_ball(profile: &SupportProfile, r: f64) -> f64 {
    hausdorff_to_ball_fn(&profile.grid, |u| profile.eval(u), Some(&profile.values), r)
}

/// Closure variant of [`hausdorff_to_ball`]: the grid maximum of |h - r| is
/// refined locally around the best grid direction, so the grid value (a
/// lower bound of the true supremum) is tightened at negligible cost.
pub fn hausdorff_to_ball_fn(
    grid: &SphereGrid,
    h: impl Fn(&[f64]) -> f64,
    precomputed: Option<&[f64]>,
    r: f64,
) -> f64 {
    let owned: Vec<f64>;
    let values: &[f64] = match precomputed {
        Some(v) => v,
        None => {
            owned = grid.directions().map(&h).collect();
            &owned
        }
    };
    let mut best = f64::NEG_INFINITY;
    let mut best_j = 0;
    for (j, v) in values.iter().enumerate() {
        let cand = (v - r).abs();
        if cand > best {
            best = cand;
            best_j = j;
        }
    }
    if grid.m() == 1 {
        return best;
    }
    let objective = |u: &[f64]| -((h(u) - r).abs());
    -refine_direction_min(grid, &objective, grid.direction(best_j), -best)
}
