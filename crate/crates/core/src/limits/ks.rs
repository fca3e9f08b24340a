//! Two-sided Kolmogorov-Smirnov test against a fully specified CDF.

use crate::error::{Error, Result};
use crate::specfun::kolmogorov_sf;

/// Outcome of a KS test. The p-value uses the asymptotic Kolmogorov
/// distribution and is only reported from 1000 samples up; below that it is
/// `None` rather than a miscalibrated number.
#[derive(Debug, Clone, Copy)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: Option<f64>,
}

/// Minimum sample count for computing the statistic at all.
pub const KS_MIN_SAMPLES: usize = 10;
/// Minimum sample count for the asymptotic p-value.
pub const KS_MIN_SAMPLES_P_VALUE: usize = 1000;

/// Two-sided KS statistic of `samples` against `target_cdf`, with the
/// asymptotic p-value P(K > sqrt(n) D) when the sample is large enough.
pub fn ks_statistic(samples: &[f64], target_cdf: impl Fn(f64) -> f64) -> Result<KsTest> {
    let n = samples.len();
    if n < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: n, need: KS_MIN_SAMPLES });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = target_cdf(x);
        let upper = (i + 1) as f64 / nf - f;
        let lower = f - i as f64 / nf;
        d = d.max(upper).max(lower);
    }
    let d = d.clamp(0.0, 1.0);
    let p_value = if n >= KS_MIN_SAMPLES_P_VALUE {
        Some(kolmogorov_sf(nf.sqrt() * d))
    } else {
        None
    };
    Ok(KsTest { statistic: d, p_value })
}
