//! Dated time series and the aligned monthly panel.
//!
//! Dates are canonicalized to calendar months: a `Month` is an absolute
//! month index, and quarterly observations are anchored at the last month
//! of their quarter so that survey-style end-of-quarter reporting aligns
//! with the monthly grid.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute calendar month, counted as `year * 12 + (month - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Month(pub i32);

impl Month {
    pub fn from_ym(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month));
        Month(year * 12 + month as i32 - 1)
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    /// 1-based month of year.
    pub fn month(self) -> u32 {
        (self.0.rem_euclid(12) + 1) as u32
    }

    pub fn offset(self, months: i32) -> Self {
        Month(self.0 + months)
    }

    /// Parses "YYYY-MM".
    pub fn parse(s: &str) -> Result<Self> {
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| Error::Schema(format!("unparseable month '{s}'")))?;
        let year: i32 = y
            .parse()
            .map_err(|_| Error::Schema(format!("unparseable year in '{s}'")))?;
        let month: u32 = m
            .parse()
            .map_err(|_| Error::Schema(format!("unparseable month in '{s}'")))?;
        if !(1..=12).contains(&month) {
            return Err(Error::Schema(format!("month out of range in '{s}'")));
        }
        Ok(Month::from_ym(year, month))
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frequency {
    Monthly,
    Quarterly,
}

impl Frequency {
    /// Step between consecutive observations, in months.
    pub fn step(self) -> i32 {
        match self {
            Frequency::Monthly => 1,
            Frequency::Quarterly => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    Percent,
    PercentagePoints,
    IndexLevel,
    #[default]
    Rate,
}

/// A gap-free dated series at a single frequency.
///
/// Observations are stored densely: `values[i]` belongs to
/// `start.offset(i * frequency.step())`. Quarterly series anchor each
/// quarter at its last month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub id: String,
    pub frequency: Frequency,
    pub unit: Unit,
    pub start: Month,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        id: impl Into<String>,
        frequency: Frequency,
        unit: Unit,
        start: Month,
        values: Vec<f64>,
    ) -> Result<Self> {
        let s = TimeSeries {
            id: id.into(),
            frequency,
            unit,
            start,
            values,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "series '{}' contains non-finite value {v}",
                self.id
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn month_at(&self, i: usize) -> Month {
        self.start.offset(i as i32 * self.frequency.step())
    }

    /// Last observation month, or `start` for an empty series.
    pub fn end(&self) -> Month {
        if self.values.is_empty() {
            self.start
        } else {
            self.month_at(self.values.len() - 1)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Month, f64)> + '_ {
        let step = self.frequency.step();
        let start = self.start;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (start.offset(i as i32 * step), v))
    }

    /// Restricts the series to `[first, last]`. Errors if the window is
    /// empty or outside the observed span.
    pub fn slice(&self, first: Month, last: Month) -> Result<TimeSeries> {
        let step = self.frequency.step();
        if first < self.start || last > self.end() || first > last {
            return Err(Error::Alignment(format!(
                "series '{}' does not cover {first}..{last}",
                self.id
            )));
        }
        let lo = (first.0 - self.start.0).div_euclid(step) as usize;
        let hi = (last.0 - self.start.0).div_euclid(step) as usize;
        let lo_m = self.month_at(lo);
        let first_idx = if lo_m < first { lo + 1 } else { lo };
        Ok(TimeSeries {
            id: self.id.clone(),
            frequency: self.frequency,
            unit: self.unit,
            start: self.month_at(first_idx),
            values: self.values[first_idx..=hi].to_vec(),
        })
    }
}

/// Negates every value; the id is suffixed `_inv`.
///
/// Used for survey series reported as tightening so that a positive value
/// means easing.
pub fn invert_series(s: &TimeSeries) -> TimeSeries {
    let id = if let Some(base) = s.id.strip_suffix("_inv") {
        base.to_string()
    } else {
        format!("{}_inv", s.id)
    };
    TimeSeries {
        id,
        frequency: s.frequency,
        unit: s.unit,
        start: s.start,
        values: s.values.iter().map(|v| -v).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthKind {
    /// 100 * (x_t / x_{t-1} - 1)
    PeriodOnPeriod,
    /// 100 * ln(x_t / x_{t-1})
    LogReturn,
}

/// Period growth rate in percent; output is one observation shorter.
pub fn growth_rate(s: &TimeSeries, kind: GrowthKind) -> Result<TimeSeries> {
    if s.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "series '{}' needs at least 2 observations for a growth rate",
            s.id
        )));
    }
    if kind == GrowthKind::LogReturn {
        if let Some(v) = s.values.iter().find(|v| **v <= 0.0) {
            return Err(Error::Domain(format!(
                "series '{}' has non-positive value {v}; log-return undefined",
                s.id
            )));
        }
    }
    let values = s
        .values
        .windows(2)
        .map(|w| match kind {
            GrowthKind::PeriodOnPeriod => 100.0 * (w[1] / w[0] - 1.0),
            GrowthKind::LogReturn => 100.0 * (w[1] / w[0]).ln(),
        })
        .collect();
    TimeSeries::new(
        format!("{}_gr", s.id),
        s.frequency,
        Unit::Percent,
        s.start.offset(s.frequency.step()),
        values,
    )
}

/// Column mapping for [`load_csv`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date: String,
    pub series_id: String,
    pub value: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            date: "date".into(),
            series_id: "series_id".into(),
            value: "value".into(),
        }
    }
}

enum ParsedDate {
    Monthly(Month),
    Quarterly(Month),
}

fn parse_date(s: &str) -> Result<ParsedDate> {
    if let Some((y, q)) = s.split_once("-Q") {
        let year: i32 = y
            .parse()
            .map_err(|_| Error::Schema(format!("unparseable year in '{s}'")))?;
        let quarter: u32 = q
            .parse()
            .map_err(|_| Error::Schema(format!("unparseable quarter in '{s}'")))?;
        if !(1..=4).contains(&quarter) {
            return Err(Error::Schema(format!("quarter out of range in '{s}'")));
        }
        // Quarters map to their last month.
        Ok(ParsedDate::Quarterly(Month::from_ym(year, quarter * 3)))
    } else {
        Ok(ParsedDate::Monthly(Month::parse(s)?))
    }
}

/// Loads long-format CSV (one observation per row) into per-series
/// [`TimeSeries`], sorted by date within a series and by id across series.
///
/// Dates must be ISO months (`YYYY-MM`) or quarters (`YYYY-Qn`); the
/// frequency is inferred from the date format and must be homogeneous per
/// series. Interior gaps are hard errors.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Vec<TimeSeries>> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
    };
    let date_col = col(&schema.date)?;
    let id_col = col(&schema.series_id)?;
    let value_col = col(&schema.value)?;

    let mut by_id: BTreeMap<String, (Option<Frequency>, BTreeMap<Month, f64>)> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let date_str = record
            .get(date_col)
            .ok_or_else(|| Error::Schema("short row".into()))?;
        let id = record
            .get(id_col)
            .ok_or_else(|| Error::Schema("short row".into()))?
            .to_string();
        let value: f64 = record
            .get(value_col)
            .ok_or_else(|| Error::Schema("short row".into()))?
            .trim()
            .parse()
            .map_err(|_| {
                Error::Schema(format!(
                    "unparseable value '{}' for series '{id}'",
                    record.get(value_col).unwrap_or("")
                ))
            })?;
        if !value.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite value for series '{id}' at {date_str}"
            )));
        }
        let (freq, month) = match parse_date(date_str)? {
            ParsedDate::Monthly(m) => (Frequency::Monthly, m),
            ParsedDate::Quarterly(m) => (Frequency::Quarterly, m),
        };
        let entry = by_id.entry(id.clone()).or_insert((None, BTreeMap::new()));
        match entry.0 {
            None => entry.0 = Some(freq),
            Some(f) if f != freq => {
                return Err(Error::Frequency(format!(
                    "series '{id}' mixes monthly and quarterly dates"
                )))
            }
            _ => {}
        }
        if entry.1.insert(month, value).is_some() {
            return Err(Error::Duplicate {
                series: id,
                date: date_str.to_string(),
            });
        }
    }

    let mut out = Vec::with_capacity(by_id.len());
    for (id, (freq, obs)) in by_id {
        let freq = freq.expect("entry created with a frequency");
        let step = freq.step();
        let months: Vec<Month> = obs.keys().copied().collect();
        for w in months.windows(2) {
            if w[1].0 - w[0].0 != step {
                return Err(Error::Gap {
                    series: id,
                    date: w[0].offset(step).to_string(),
                });
            }
        }
        let start = months[0];
        out.push(TimeSeries {
            id,
            frequency: freq,
            unit: Unit::default(),
            start,
            values: obs.into_values().collect(),
        });
    }
    Ok(out)
}

/// The aligned monthly multivariate panel, in identification order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub series: Vec<TimeSeries>,
    pub start: Month,
    pub t: usize,
}

impl Panel {
    pub fn m(&self) -> usize {
        self.series.len()
    }

    pub fn end(&self) -> Month {
        self.start.offset(self.t as i32 - 1)
    }

    pub fn ordering(&self) -> Vec<String> {
        self.series.iter().map(|s| s.id.clone()).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.series.iter().position(|s| s.id == id)
    }

    /// t x m data matrix, columns in identification order.
    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.t, self.m(), |r, c| self.series[c].values[r])
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.series {
            if s.frequency != Frequency::Monthly {
                return Err(Error::Frequency(format!("series '{}' is not monthly", s.id)));
            }
            if s.start != self.start || s.len() != self.t {
                return Err(Error::Alignment(format!(
                    "series '{}' is not aligned to the panel span",
                    s.id
                )));
            }
            s.validate()?;
        }
        Ok(())
    }
}

/// Trims all series to their common span and arranges them in the given
/// identification order.
pub fn assemble_panel(series: &[TimeSeries], ordering: &[String]) -> Result<Panel> {
    for id in ordering {
        if ordering.iter().filter(|o| *o == id).count() > 1 {
            return Err(Error::Ordering(format!("id '{id}' listed more than once")));
        }
    }
    let mut picked = Vec::with_capacity(ordering.len());
    for id in ordering {
        let s = series
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| Error::Ordering(format!("unknown series id '{id}'")))?;
        if s.frequency != Frequency::Monthly {
            return Err(Error::Frequency(format!(
                "series '{id}' is quarterly; disaggregate it to monthly first"
            )));
        }
        picked.push(s);
    }
    if picked.is_empty() {
        return Err(Error::Ordering("empty ordering".into()));
    }
    let first = picked.iter().map(|s| s.start).max().unwrap();
    let last = picked.iter().map(|s| s.end()).min().unwrap();
    if first > last {
        return Err(Error::Alignment(
            "series have no overlapping span".to_string(),
        ));
    }
    let series: Vec<TimeSeries> = picked
        .iter()
        .map(|s| s.slice(first, last))
        .collect::<Result<_>>()?;
    let panel = Panel {
        t: (last.0 - first.0 + 1) as usize,
        series,
        start: first,
    };
    panel.validate()?;
    Ok(panel)
}
