//! Summary statistics over latency measurements.

use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;

/// Sample statistics (n−1 denominator for the spread).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean_ms: f64,
    pub stddev_ms: f64,
    pub variance: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub n: usize,
}

/// Computes sample mean, standard deviation and variance. Requires at
/// least two measurements.
pub fn summarize(values_ms: &[f64]) -> Result<SummaryStats, HarnessError> {
    if values_ms.len() < 2 {
        return Err(HarnessError::TooFewMeasurements(values_ms.len()));
    }
    let n = values_ms.len();
    let mean = values_ms.iter().sum::<f64>() / n as f64;
    let variance = values_ms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let min = values_ms.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values_ms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SummaryStats {
        mean_ms: mean,
        stddev_ms: variance.sqrt(),
        variance,
        min_ms: min,
        max_ms: max,
        n,
    })
}
