//! Anthropogenic baseline emission rate: the historical record up to the
//! pivot year, a saturating projection afterwards.

use thiserror::Error;

use crate::config::{EmissionProjectionParams, ModelParams};

/// Bundled global fossil-fuel emission record, 1800-2017, GtC/yr.
pub const BUNDLED_HISTORICAL_CSV: &str = include_str!("../data/historical_emissions.csv");

const HEADER: [&str; 2] = ["year", "emission_gtc_per_year"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmissionsError {
    #[error("expected header `year,emission_gtc_per_year`, found `{0}`")]
    Header(String),
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("row {row}: duplicate year {year}")]
    DuplicateYear { row: usize, year: f64 },
    #[error("row {row}: year {year} is not after the previous year")]
    Descending { row: usize, year: f64 },
    #[error("record covers [{first}, {last}] but [{needed_from}, {needed_to}] is required")]
    Coverage {
        first: f64,
        last: f64,
        needed_from: f64,
        needed_to: f64,
    },
    #[error("emission rate requested at t = {t}, outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
}

/// Validated annual emission record.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSeries {
    years: Vec<f64>,
    values: Vec<f64>,
}

impl EmissionSeries {
    /// Builds a series from parallel arrays, enforcing strictly ascending
    /// years and non-negative rates. Row numbers in errors are 1-based data rows.
    pub fn new(years: Vec<f64>, values: Vec<f64>) -> Result<Self, EmissionsError> {
        if years.len() != values.len() || years.is_empty() {
            return Err(EmissionsError::MalformedRow {
                row: 0,
                message: "record must contain at least one row".into(),
            });
        }
        for (i, (&y, &v)) in years.iter().zip(&values).enumerate() {
            let row = i + 1;
            if !y.is_finite() || !v.is_finite() {
                return Err(EmissionsError::MalformedRow {
                    row,
                    message: "non-finite value".into(),
                });
            }
            if v < 0.0 {
                return Err(EmissionsError::MalformedRow {
                    row,
                    message: format!("negative emission rate {v}"),
                });
            }
            if i > 0 {
                let prev = years[i - 1];
                if y == prev {
                    return Err(EmissionsError::DuplicateYear { row, year: y });
                }
                if y < prev {
                    return Err(EmissionsError::Descending { row, year: y });
                }
            }
        }
        Ok(Self { years, values })
    }

    /// Parses the `year,emission_gtc_per_year` CSV format.
    pub fn parse_csv(text: &str) -> Result<Self, EmissionsError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| EmissionsError::Header(e.to_string()))?
            .clone();
        if header.iter().collect::<Vec<_>>() != HEADER {
            return Err(EmissionsError::Header(
                header.iter().collect::<Vec<_>>().join(","),
            ));
        }

        let mut years = Vec::new();
        let mut values = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| EmissionsError::MalformedRow {
                row,
                message: e.to_string(),
            })?;
            let field = |k: usize| -> Result<f64, EmissionsError> {
                record
                    .get(k)
                    .ok_or_else(|| EmissionsError::MalformedRow {
                        row,
                        message: "missing column".into(),
                    })?
                    .parse::<f64>()
                    .map_err(|e| EmissionsError::MalformedRow {
                        row,
                        message: format!("column {}: {e}", HEADER[k]),
                    })
            };
            years.push(field(0)?);
            values.push(field(1)?);
        }
        Self::new(years, values)
    }

    /// The record shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse_csv(BUNDLED_HISTORICAL_CSV).expect("bundled emission record is valid")
    }

    pub fn years(&self) -> &[f64] {
        &self.years
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn first_year(&self) -> f64 {
        self.years[0]
    }

    pub fn last_year(&self) -> f64 {
        *self.years.last().expect("non-empty")
    }

    pub fn check_coverage(&self, from: f64, to: f64) -> Result<(), EmissionsError> {
        if self.first_year() <= from && self.last_year() >= to {
            Ok(())
        } else {
            Err(EmissionsError::Coverage {
                first: self.first_year(),
                last: self.last_year(),
                needed_from: from,
                needed_to: to,
            })
        }
    }

    /// Piecewise-linear interpolation; clamps outside the record.
    pub fn interpolate(&self, t: f64) -> f64 {
        let n = self.years.len();
        if t <= self.years[0] {
            return self.values[0];
        }
        if t >= self.years[n - 1] {
            return self.values[n - 1];
        }
        // first index with years[i] > t
        let hi = self.years.partition_point(|&y| y <= t);
        let lo = hi - 1;
        let (y0, y1) = (self.years[lo], self.years[hi]);
        let w = (t - y0) / (y1 - y0);
        self.values[lo] + w * (self.values[hi] - self.values[lo])
    }
}

/// Parses a historical table and checks it spans `[from, to]`.
pub fn ingest_historical(text: &str, from: f64, to: f64) -> Result<EmissionSeries, EmissionsError> {
    let series = EmissionSeries::parse_csv(text)?;
    series.check_coverage(from, to)?;
    Ok(series)
}

/// Emission rate over a run window: the historical record up to the pivot,
/// the saturating projection after it.
#[derive(Debug, Clone)]
pub struct Emissions {
    series: EmissionSeries,
    proj: EmissionProjectionParams,
    anchor: f64,
    t_lo: f64,
    t_hi: f64,
}

impl Emissions {
    pub fn new(
        series: EmissionSeries,
        proj: EmissionProjectionParams,
        t_lo: f64,
        t_hi: f64,
    ) -> Result<Self, EmissionsError> {
        series.check_coverage(t_lo, proj.t_pivot)?;
        let anchor = series.interpolate(proj.t_pivot);
        Ok(Self {
            series,
            proj,
            anchor,
            t_lo,
            t_hi,
        })
    }

    /// Emissions over the run window of `params`.
    pub fn for_params(
        series: EmissionSeries,
        params: &ModelParams,
    ) -> Result<Self, EmissionsError> {
        Self::new(
            series,
            params.emission,
            params.schedule.t_start,
            params.schedule.t_end,
        )
    }

    /// eps(t_pivot).
    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn series(&self) -> &EmissionSeries {
        &self.series
    }

    /// Baseline (unmitigated) emission rate at `t`, GtC/yr.
    pub fn epsilon(&self, t: f64) -> Result<f64, EmissionsError> {
        if !(self.t_lo..=self.t_hi).contains(&t) {
            return Err(EmissionsError::OutOfRange {
                t,
                lo: self.t_lo,
                hi: self.t_hi,
            });
        }
        Ok(self.rate_unchecked(t))
    }

    pub(crate) fn rate_unchecked(&self, t: f64) -> f64 {
        let since = t - self.proj.t_pivot;
        if since <= 0.0 {
            self.series.interpolate(t)
        } else {
            self.anchor + since * self.proj.eps_max / (since + self.proj.s_half)
        }
    }
}
