//! Per-region Pearson correlation between each contributing factor and the
//! target series.

use serde::Serialize;
use thiserror::Error;

use crate::panel::{PanelError, StudyPanel, TimeSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssocError {
    #[error("series lengths differ: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("series time axes differ between ({x_region}, {x_variable}) and ({y_region}, {y_variable})")]
    TimeMisalignment {
        x_region: String,
        x_variable: String,
        y_region: String,
        y_variable: String,
    },
    #[error("zero variance: series ({region}, {variable}) is constant")]
    ZeroVariance { region: String, variable: String },
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// Per-region correlation of each factor against the target, rows in panel
/// region order and columns in the given factor order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub target: String,
    pub factors: Vec<String>,
    pub regions: Vec<String>,
    /// `rows[i][j]` = Pearson r between factor `j` and the target in region `i`.
    pub rows: Vec<Vec<f64>>,
}

impl CorrelationTable {
    /// One factor's coefficients across all regions, in row order.
    pub fn column(&self, factor: &str) -> Option<Vec<f64>> {
        let j = self.factors.iter().position(|f| f == factor)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Pearson correlation of two aligned series:
/// r = Σ(xᵢ−x̄)(yᵢ−ȳ) / √(Σ(xᵢ−x̄)²·Σ(yᵢ−ȳ)²).
///
/// Centered sums are used rather than the E[xy]−E[x]E[y] form, and the result
/// is clamped to [−1, 1] against rounding overshoot. Constant inputs are an
/// error, not a NaN.
pub fn pearson(x: &TimeSeries, y: &TimeSeries) -> Result<f64, AssocError> {
    if x.len() != y.len() {
        return Err(AssocError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    if x.times() != y.times() {
        return Err(AssocError::TimeMisalignment {
            x_region: x.region().to_string(),
            x_variable: x.variable().to_string(),
            y_region: y.region().to_string(),
            y_variable: y.variable().to_string(),
        });
    }
    let n = x.len() as f64;
    let x_mean = x.values().iter().sum::<f64>() / n;
    let y_mean = y.values().iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&xv, &yv) in x.values().iter().zip(y.values()) {
        let dx = xv - x_mean;
        let dy = yv - y_mean;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(AssocError::ZeroVariance {
            region: x.region().to_string(),
            variable: x.variable().to_string(),
        });
    }
    if syy == 0.0 {
        return Err(AssocError::ZeroVariance {
            region: y.region().to_string(),
            variable: y.variable().to_string(),
        });
    }
    let r = sxy / (sxx * syy).sqrt();
    debug_assert!(r.abs() <= 1.0 + 1e-12, "pearson overshoot: {r}");
    Ok(r.clamp(-1.0, 1.0))
}

/// Correlate every factor with the target in every region. Row order is the
/// panel's region order; column order is the given factor order.
pub fn correlation_table(
    panel: &StudyPanel,
    target: &str,
    factors: &[String],
) -> Result<CorrelationTable, AssocError> {
    let mut rows = Vec::with_capacity(panel.regions().len());
    for region in panel.regions() {
        let target_series = panel.extract_series(region, target)?;
        let mut row = Vec::with_capacity(factors.len());
        for factor in factors {
            let factor_series = panel.extract_series(region, factor)?;
            row.push(pearson(&factor_series, &target_series)?);
        }
        rows.push(row);
    }
    Ok(CorrelationTable {
        target: target.to_string(),
        factors: factors.to_vec(),
        regions: panel.regions().to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::StudyPanel;

    fn series(name: &str, values: Vec<f64>) -> TimeSeries {
        let times = (0..values.len() as i32).collect();
        TimeSeries::new("r", name, times, values).unwrap()
    }

    #[test]
    fn perfect_linear_dependence() {
        let x = series("x", vec![1.0, 2.0, 3.0, 4.0]);
        let up = series("up", vec![5.0, 7.0, 9.0, 11.0]); // 2x + 3
        let down = series("down", vec![-1.0, -2.0, -3.0, -4.0]); // -x
        assert_eq!(pearson(&x, &up).unwrap(), 1.0);
        assert_eq!(pearson(&x, &down).unwrap(), -1.0);
    }

    #[test]
    fn hand_value_point_six() {
        let x = series("x", vec![1.0, 2.0, 3.0, 4.0]);
        let y = series("y", vec![2.0, 1.0, 4.0, 3.0]);
        assert!((pearson(&x, &y).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn brute_force_covariance_agrees() {
        // independent oracle: r = cov(x,y) / (σx σy) with explicit loops
        let xv = [0.3, -1.2, 2.4, 0.9, -0.5, 1.7];
        let yv = [1.1, 0.2, -0.7, 2.2, 0.4, -1.9];
        let n = xv.len() as f64;
        let mx = xv.iter().sum::<f64>() / n;
        let my = yv.iter().sum::<f64>() / n;
        let cov = xv
            .iter()
            .zip(yv)
            .map(|(&a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / n;
        let sx = (xv.iter().map(|&a| (a - mx) * (a - mx)).sum::<f64>() / n).sqrt();
        let sy = (yv.iter().map(|&b| (b - my) * (b - my)).sum::<f64>() / n).sqrt();
        let oracle = cov / (sx * sy);
        let r = pearson(&series("x", xv.to_vec()), &series("y", yv.to_vec())).unwrap();
        assert!((r - oracle).abs() < 1e-12, "{r} vs oracle {oracle}");
    }

    #[test]
    fn zero_variance_names_the_constant_input() {
        let x = series("flat", vec![2.0, 2.0, 2.0]);
        let y = series("y", vec![1.0, 2.0, 3.0]);
        match pearson(&x, &y) {
            Err(AssocError::ZeroVariance { variable, .. }) => assert_eq!(variable, "flat"),
            other => panic!("expected ZeroVariance, got {other:?}"),
        }
        match pearson(&y, &x) {
            Err(AssocError::ZeroVariance { variable, .. }) => assert_eq!(variable, "flat"),
            other => panic!("expected ZeroVariance, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_inputs_error() {
        let x = series("x", vec![1.0, 2.0]);
        let y = series("y", vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            pearson(&x, &y),
            Err(AssocError::LengthMismatch { x: 2, y: 3 })
        ));
        let shifted = TimeSeries::new("r", "y", vec![5, 6], vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            pearson(&x, &shifted),
            Err(AssocError::TimeMisalignment { .. })
        ));
    }

    #[test]
    fn symmetry_is_exact() {
        let x = series("x", vec![0.12, 3.4, -2.2, 0.01, 5.5]);
        let y = series("y", vec![9.1, -0.3, 4.4, 1.25, -6.0]);
        assert_eq!(pearson(&x, &y).unwrap(), pearson(&y, &x).unwrap());
    }

    fn table_panel() -> StudyPanel {
        // factor "same" equals the target, "flip" is its negation
        let mut text = String::from("region_id,year,variable,value\n");
        for region in ["a", "b", "c"] {
            for (i, year) in (2003..2006).enumerate() {
                let t = (i as f64 + 1.0) * 1.5 + (region.len() as f64);
                text.push_str(&format!("{region},{year},target,{t}\n"));
                text.push_str(&format!("{region},{year},same,{t}\n"));
                text.push_str(&format!("{region},{year},flip,{}\n", -t));
            }
        }
        StudyPanel::parse_csv(&text).unwrap()
    }

    #[test]
    fn table_of_perfect_correlations() {
        let panel = table_panel();
        let table =
            correlation_table(&panel, "target", &["same".to_string(), "flip".to_string()])
                .unwrap();
        assert_eq!(table.regions, ["a", "b", "c"]);
        for row in &table.rows {
            assert_eq!(row[0], 1.0);
            assert_eq!(row[1], -1.0);
        }
        assert_eq!(table.column("flip").unwrap(), vec![-1.0, -1.0, -1.0]);
        assert!(table.column("nope").is_none());
    }

    #[test]
    fn table_propagates_unknown_variable() {
        let panel = table_panel();
        let err = correlation_table(&panel, "target", &["ghost".to_string()]).unwrap_err();
        assert!(matches!(
            err,
            AssocError::Panel(PanelError::UnknownVariable(_))
        ));
    }
}
