//! Per-region OLS trend estimation of the target series and the two-way
//! increasing / non-increasing split at a threshold.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::panel::TimeSeries;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrendError {
    #[error("series has {0} point(s); at least 2 are required")]
    TooShort(usize),
    #[error("all time points are identical; the trend is undefined")]
    DegenerateTime,
    #[error("empty input")]
    EmptyInput,
}

/// OLS fit of one region's target series against calendar year.
///
/// The time axis is centered at its mean before fitting, so `intercept` is
/// the fitted value at the mean year, not at year zero. `slope` is in
/// value-units per year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendEstimate {
    pub region: String,
    pub slope: f64,
    pub intercept: f64,
    pub n_points: usize,
}

/// Two-way partition of regions by trend threshold. The sets are disjoint
/// and together cover every classified region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grouping {
    increasing: BTreeSet<String>,
    non_increasing: BTreeSet<String>,
    threshold: f64,
}

impl Grouping {
    pub fn increasing(&self) -> &BTreeSet<String> {
        &self.increasing
    }

    pub fn non_increasing(&self) -> &BTreeSet<String> {
        &self.non_increasing
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// True iff the two sets are disjoint and their union is exactly `regions`.
    pub fn is_partition_of(&self, regions: &[String]) -> bool {
        self.increasing.len() + self.non_increasing.len() == regions.len()
            && self.increasing.is_disjoint(&self.non_increasing)
            && regions
                .iter()
                .all(|r| self.increasing.contains(r) ^ self.non_increasing.contains(r))
    }
}

/// Least-squares line through one series: slope = Σ(tᵢ−t̄)(yᵢ−ȳ) / Σ(tᵢ−t̄)².
pub fn ols_trend(series: &TimeSeries) -> Result<TrendEstimate, TrendError> {
    let n = series.len();
    if n < 2 {
        return Err(TrendError::TooShort(n));
    }
    let times = series.times();
    let values = series.values();
    let t_mean = times.iter().map(|&t| t as f64).sum::<f64>() / n as f64;
    let y_mean = values.iter().sum::<f64>() / n as f64;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for i in 0..n {
        let dt = times[i] as f64 - t_mean;
        stt += dt * dt;
        sty += dt * (values[i] - y_mean);
    }
    if stt == 0.0 {
        return Err(TrendError::DegenerateTime);
    }
    Ok(TrendEstimate {
        region: series.region().to_string(),
        slope: sty / stt,
        intercept: y_mean,
        n_points: n,
    })
}

/// Median of the estimated slopes: middle order statistic for odd counts,
/// mean of the two middle order statistics for even counts.
pub fn median_threshold(trends: &[TrendEstimate]) -> Result<f64, TrendError> {
    if trends.is_empty() {
        return Err(TrendError::EmptyInput);
    }
    let mut slopes: Vec<f64> = trends.iter().map(|t| t.slope).collect();
    slopes.sort_by(f64::total_cmp);
    let n = slopes.len();
    Ok(if n % 2 == 1 {
        slopes[n / 2]
    } else {
        0.5 * (slopes[n / 2 - 1] + slopes[n / 2])
    })
}

/// Split regions at the threshold: strictly greater slopes are `increasing`,
/// everything else (ties included) is `non_increasing`. Input order does not
/// affect the result. Region ids are expected unique, as panel extraction
/// guarantees.
pub fn classify_trends(trends: &[TrendEstimate], threshold: f64) -> Grouping {
    let mut increasing = BTreeSet::new();
    let mut non_increasing = BTreeSet::new();
    for t in trends {
        if t.slope > threshold {
            increasing.insert(t.region.clone());
        } else {
            non_increasing.insert(t.region.clone());
        }
    }
    Grouping {
        increasing,
        non_increasing,
        threshold,
    }
}
