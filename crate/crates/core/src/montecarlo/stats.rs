use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Wilson score interval for `successes` out of `trials` at confidence `level`.
pub fn wilson_interval(successes: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::domain("Wilson interval needs at least one trial"));
    }
    if successes > trials {
        return Err(Error::domain(format!("{successes} successes out of {trials} trials")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("confidence level {level} outside (0, 1)")));
    }
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = (center - half).clamp(0.0, p);
    let high = (center + half).clamp(p, 1.0);
    Ok((low, high))
}

/// Running mean and standard error of a sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl MeanEstimate {
    pub fn from_samples(xs: impl IntoIterator<Item = f64>) -> Self {
        let mut count = 0u64;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for x in xs {
            count += 1;
            let delta = x - mean;
            mean += delta / count as f64;
            m2 += delta * (x - mean);
        }
        if count == 0 {
            return MeanEstimate::default();
        }
        let var = if count > 1 { m2 / (count - 1) as f64 } else { 0.0 };
        MeanEstimate { mean, std_error: (var / count as f64).sqrt(), samples: count }
    }
}
