//! Least-squares rate fits on transformed data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the ordinate (and abscissa) are transformed before the linear fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitScale {
    /// `log2 y` against `log2 x`.
    LogLog,
    /// `log2 y` against `x`.
    LogLinear,
}

/// Result of a straight-line fit `t(y) = intercept + slope * s(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedRate {
    pub experiment: String,
    pub abscissa: String,
    pub scale: FitScale,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the transformed data.
    pub residual: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 4;

/// Ordinary least squares on `(x, y)` pairs; returns `(slope, intercept, rms residual)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Fits a rate; nonpositive samples are dropped, and fewer than four survivors is an error.
pub fn fit_rate(experiment: &str, abscissa: &str, scale: FitScale, x: &[f64], y: &[f64]) -> Result<FittedRate> {
    let mut tx = Vec::new();
    let mut ty = Vec::new();
    for (&a, &b) in x.iter().zip(y) {
        if !(b > 0.0 && b.is_finite()) {
            continue;
        }
        match scale {
            FitScale::LogLog if a > 0.0 => tx.push(a.log2()),
            FitScale::LogLog => continue,
            FitScale::LogLinear => tx.push(a),
        }
        ty.push(b.log2());
    }
    if tx.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_FIT_SAMPLES, got: tx.len() });
    }
    let (slope, intercept, residual) = least_squares(&tx, &ty);
    Ok(FittedRate {
        experiment: experiment.to_string(),
        abscissa: abscissa.to_string(),
        scale,
        slope,
        intercept,
        residual,
        samples: tx.len(),
    })
}
