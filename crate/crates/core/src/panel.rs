//! Rectangular region × year × variable panel: parsing, validation, and
//! per-series access.
//!
//! The only input format is long/tidy CSV with header
//! `region_id,year,variable,value`. Rectangularity (a value for every
//! region–year–variable triple) is a hard requirement; missing cells are an
//! error, never imputed. Values are 64-bit floats, years integers, and
//! region ids opaque strings with no numeric meaning.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PanelError {
    #[error("malformed csv: {0}")]
    MalformedCsv(String),
    #[error("duplicate cell ({region}, {year}, {variable})")]
    DuplicateCell {
        region: String,
        year: i32,
        variable: String,
    },
    #[error("incomplete panel: {missing} cell(s) absent, e.g. {examples:?}")]
    IncompletePanel {
        missing: usize,
        examples: Vec<String>,
    },
    #[error("non-finite value at ({region}, {year}, {variable})")]
    NonFiniteValue {
        region: String,
        year: i32,
        variable: String,
    },
    #[error("unknown region {0:?}")]
    UnknownRegion(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("duplicate region id {0:?}")]
    DuplicateRegion(String),
    #[error("duplicate variable name {0:?}")]
    DuplicateVariable(String),
    #[error("years must be strictly increasing")]
    UnsortedYears,
    #[error("value count {found} does not match {regions} regions x {years} years x {variables} variables")]
    ShapeMismatch {
        regions: usize,
        years: usize,
        variables: usize,
        found: usize,
    },
    #[error("series times and values differ in length ({times} vs {values})")]
    SeriesLengthMismatch { times: usize, values: usize },
}

const EXPECTED_HEADER: [&str; 4] = ["region_id", "year", "variable", "value"];

/// Immutable rectangular panel. Regions and variables keep first-appearance
/// order from the source; years are sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPanel {
    regions: Vec<String>,
    years: Vec<i32>,
    variables: Vec<String>,
    // row-major [region][year][variable]
    values: Vec<f64>,
    region_index: HashMap<String, usize>,
    variable_index: HashMap<String, usize>,
}

impl StudyPanel {
    /// Assemble a panel from pre-shaped parts. Checks uniqueness, year order,
    /// and the value count, but not value finiteness — [`validate`] reports
    /// non-finite cells so damaged panels can still be inspected.
    pub fn from_parts(
        regions: Vec<String>,
        years: Vec<i32>,
        variables: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self, PanelError> {
        let mut region_index = HashMap::new();
        for (i, r) in regions.iter().enumerate() {
            if region_index.insert(r.clone(), i).is_some() {
                return Err(PanelError::DuplicateRegion(r.clone()));
            }
        }
        let mut variable_index = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            if variable_index.insert(v.clone(), i).is_some() {
                return Err(PanelError::DuplicateVariable(v.clone()));
            }
        }
        if years.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PanelError::UnsortedYears);
        }
        if values.len() != regions.len() * years.len() * variables.len() {
            return Err(PanelError::ShapeMismatch {
                regions: regions.len(),
                years: years.len(),
                variables: variables.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            regions,
            years,
            variables,
            values,
            region_index,
            variable_index,
        })
    }

    /// Parse tidy CSV (`region_id,year,variable,value`). Row order does not
    /// matter; duplicates and missing cells are hard errors, as are
    /// non-finite values.
    pub fn parse_csv(text: &str) -> Result<Self, PanelError> {
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());

        let header = reader
            .headers()
            .map_err(|e| PanelError::MalformedCsv(e.to_string()))?;
        if header.len() != 4 || header.iter().zip(EXPECTED_HEADER).any(|(h, e)| h != e) {
            return Err(PanelError::MalformedCsv(format!(
                "expected header {}, got {:?}",
                EXPECTED_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }

        let mut regions: Vec<String> = Vec::new();
        let mut variables: Vec<String> = Vec::new();
        let mut region_index: HashMap<String, usize> = HashMap::new();
        let mut variable_index: HashMap<String, usize> = HashMap::new();
        let mut years: BTreeSet<i32> = BTreeSet::new();
        let mut cells: HashMap<(usize, i32, usize), f64> = HashMap::new();

        for (row_no, record) in reader.records().enumerate() {
            let line = row_no + 2; // header is line 1
            let record = record.map_err(|e| PanelError::MalformedCsv(e.to_string()))?;
            if record.len() != 4 {
                return Err(PanelError::MalformedCsv(format!(
                    "line {line}: expected 4 fields, got {}",
                    record.len()
                )));
            }
            let region = record[0].to_string();
            let year: i32 = record[1].trim().parse().map_err(|_| {
                PanelError::MalformedCsv(format!("line {line}: year {:?} is not an integer", &record[1]))
            })?;
            let value: f64 = record[3].trim().parse().map_err(|_| {
                PanelError::MalformedCsv(format!("line {line}: value {:?} is not a number", &record[3]))
            })?;
            let variable = record[2].to_string();
            if !value.is_finite() {
                return Err(PanelError::NonFiniteValue {
                    region,
                    year,
                    variable,
                });
            }

            let r = *region_index.entry(region.clone()).or_insert_with(|| {
                regions.push(region.clone());
                regions.len() - 1
            });
            let v = *variable_index.entry(variable.clone()).or_insert_with(|| {
                variables.push(variable.clone());
                variables.len() - 1
            });
            years.insert(year);
            if cells.insert((r, year, v), value).is_some() {
                return Err(PanelError::DuplicateCell {
                    region,
                    year,
                    variable,
                });
            }
        }

        let years: Vec<i32> = years.into_iter().collect();
        let expected = regions.len() * years.len() * variables.len();
        if cells.len() != expected {
            let mut examples = Vec::new();
            let mut missing = 0usize;
            for (r, region) in regions.iter().enumerate() {
                for &year in &years {
                    for (v, variable) in variables.iter().enumerate() {
                        if !cells.contains_key(&(r, year, v)) {
                            missing += 1;
                            if examples.len() < 10 {
                                examples.push(format!("({region}, {year}, {variable})"));
                            }
                        }
                    }
                }
            }
            return Err(PanelError::IncompletePanel { missing, examples });
        }

        let mut values = Vec::with_capacity(expected);
        for r in 0..regions.len() {
            for &year in &years {
                for v in 0..variables.len() {
                    values.push(cells[&(r, year, v)]);
                }
            }
        }
        Ok(Self {
            regions,
            years,
            variables,
            values,
            region_index,
            variable_index,
        })
    }

    /// Serialize back to the tidy schema with rows sorted by
    /// (region_id, year, variable), LF line endings, and shortest
    /// round-tripping float formatting.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(usize, usize, usize)> = Vec::with_capacity(self.values.len());
        for r in 0..self.regions.len() {
            for y in 0..self.years.len() {
                for v in 0..self.variables.len() {
                    rows.push((r, y, v));
                }
            }
        }
        rows.sort_by(|a, b| {
            (self.regions[a.0].as_str(), self.years[a.1], self.variables[a.2].as_str()).cmp(&(
                self.regions[b.0].as_str(),
                self.years[b.1],
                self.variables[b.2].as_str(),
            ))
        });
        let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
        writer.write_record(EXPECTED_HEADER).expect("in-memory write");
        for (r, y, v) in rows {
            writer
                .write_record([
                    self.regions[r].as_str(),
                    &self.years[y].to_string(),
                    self.variables[v].as_str(),
                    &self.value_at(r, y, v).to_string(),
                ])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn has_region(&self, region: &str) -> bool {
        self.region_index.contains_key(region)
    }

    pub fn has_variable(&self, variable: &str) -> bool {
        self.variable_index.contains_key(variable)
    }

    /// Value by positional indices, `[region][year][variable]` order.
    pub fn value_at(&self, region: usize, year: usize, variable: usize) -> f64 {
        self.values[(region * self.years.len() + year) * self.variables.len() + variable]
    }

    /// One region's annual series for one variable, in ascending year order.
    pub fn extract_series(&self, region: &str, variable: &str) -> Result<TimeSeries, PanelError> {
        let r = *self
            .region_index
            .get(region)
            .ok_or_else(|| PanelError::UnknownRegion(region.to_string()))?;
        let v = *self
            .variable_index
            .get(variable)
            .ok_or_else(|| PanelError::UnknownVariable(variable.to_string()))?;
        let values = (0..self.years.len())
            .map(|y| self.value_at(r, y, v))
            .collect();
        Ok(TimeSeries {
            region: region.to_string(),
            variable: variable.to_string(),
            times: self.years.clone(),
            values,
        })
    }
}

/// One region's series for one variable. Values and times share an index;
/// panel accessors always produce times in ascending year order.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    region: String,
    variable: String,
    times: Vec<i32>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        region: impl Into<String>,
        variable: impl Into<String>,
        times: Vec<i32>,
        values: Vec<f64>,
    ) -> Result<Self, PanelError> {
        if times.len() != values.len() {
            return Err(PanelError::SeriesLengthMismatch {
                times: times.len(),
                values: values.len(),
            });
        }
        let region = region.into();
        let variable = variable.into();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(PanelError::NonFiniteValue {
                region,
                year: times[i],
                variable,
            });
        }
        Ok(Self {
            region,
            variable,
            times,
            values,
        })
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn times(&self) -> &[i32] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Warning => write!(f, "warning"),
            Severity::Error => write!(f, "error"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub severity: Severity,
    pub location: String,
    pub message: String,
}

/// Outcome of [`validate`]: `ok()` is true iff no issue is error-severity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.issues.iter().all(|i| i.severity != Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues
            .iter()
            .filter(|i| i.severity == Severity::Warning)
    }

    fn push(&mut self, severity: Severity, location: String, message: String) {
        self.issues.push(Issue {
            severity,
            location,
            message,
        });
    }
}

/// Re-check panel invariants and flag downstream hazards.
///
/// Non-finite cells are error-severity. Constant (zero-variance) series per
/// (region, variable) are warning-severity: Pearson correlation is undefined
/// on them and will fail later if they participate.
pub fn validate(panel: &StudyPanel) -> ValidationReport {
    let mut report = ValidationReport::default();
    if panel.years().is_empty() {
        return report;
    }
    for (r, region) in panel.regions().iter().enumerate() {
        for (v, variable) in panel.variables().iter().enumerate() {
            let mut constant = panel.years().len() > 1;
            let first = panel.value_at(r, 0, v);
            for (y, &year) in panel.years().iter().enumerate() {
                let value = panel.value_at(r, y, v);
                if !value.is_finite() {
                    report.push(
                        Severity::Error,
                        format!("({region}, {year}, {variable})"),
                        format!("non-finite value {value}"),
                    );
                }
                if value != first {
                    constant = false;
                }
            }
            if constant {
                report.push(
                    Severity::Warning,
                    format!("({region}, {variable})"),
                    "constant series: zero variance makes Pearson correlation undefined".into(),
                );
            }
        }
    }
    report
}
