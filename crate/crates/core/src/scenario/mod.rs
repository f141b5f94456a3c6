//! Ground-truth realizations for a simulated horizon: production, uninfluenced
//! consumption, day-ahead and imbalance prices, calendar and optional
//! exogenous feature columns.

mod csv_io;
mod generate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, read_csv, save_csv, write_csv};
pub use generate::{generate, GeneratorConfig};

use crate::error::{ensure_aligned, Error, Result};
use crate::timeline::{Calendar, CalendarFeatures, Horizon, TimeStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    KwhPerH,
    EurPerMwh,
    Dimensionless,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlySeries {
    start: TimeStep,
    values: Vec<f64>,
    unit: Unit,
}

impl HourlySeries {
    pub fn new(start: TimeStep, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("hourly series must not be empty".into()));
        }
        Ok(Self {
            start,
            values,
            unit,
        })
    }

    pub fn start(&self) -> TimeStep {
        self.start
    }

    pub fn end(&self) -> TimeStep {
        self.start.offset(self.values.len() as i64 - 1)
    }

    pub fn unit(&self) -> Unit {
        self.unit
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

    pub fn get(&self, t: TimeStep) -> Option<f64> {
        let i = t.0 - self.start.0;
        if i < 0 {
            return None;
        }
        self.values.get(i as usize).copied()
    }

    /// Values for `len` consecutive hours starting at `from`.
    pub fn window(&self, from: TimeStep, len: usize) -> Result<&[f64]> {
        let offset = from.0 - self.start.0;
        let end = offset + len as i64;
        if offset < 0 || end > self.values.len() as i64 {
            return Err(Error::OutsideScenario {
                start: from.0,
                end: from.0 + len as i64 - 1,
                first: self.start.0,
                last: self.end().0,
            });
        }
        Ok(&self.values[offset as usize..end as usize])
    }
}

/// Immutable ground truth for one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    production: HourlySeries,
    baseline_consumption: HourlySeries,
    dayahead_price: HourlySeries,
    imbalance_price: HourlySeries,
    calendar: Vec<CalendarFeatures>,
    features: BTreeMap<String, HourlySeries>,
}

impl Scenario {
    pub fn new(
        production: HourlySeries,
        baseline_consumption: HourlySeries,
        dayahead_price: HourlySeries,
        imbalance_price: HourlySeries,
        calendar: &Calendar,
        features: BTreeMap<String, HourlySeries>,
    ) -> Result<Self> {
        let start = production.start();
        let len = production.len();
        Horizon::new(len as i64)?;
        let columns = [
            ("production", &production),
            ("baseline_consumption", &baseline_consumption),
            ("dayahead_price", &dayahead_price),
            ("imbalance_price", &imbalance_price),
        ];
        for (name, series) in columns.iter().copied().chain(
            features
                .iter()
                .map(|(name, series)| (name.as_str(), series)),
        ) {
            ensure_aligned("series length", len, series.len())?;
            if series.start() != start {
                return Err(Error::Config(format!(
                    "series `{name}` starts at {} instead of {start}",
                    series.start()
                )));
            }
            if let Some(row) = series.values().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    column: name.to_string(),
                    row: row + 1,
                });
            }
        }
        for (name, series) in &columns[..2] {
            if let Some(row) = series.values().iter().position(|v| *v < 0.0) {
                return Err(Error::Negative {
                    column: name.to_string(),
                    row: row + 1,
                });
            }
        }
        calendar.validate()?;
        Ok(Self {
            calendar: calendar.features_for(start, len),
            production,
            baseline_consumption,
            dayahead_price,
            imbalance_price,
            features,
        })
    }

    pub fn start(&self) -> TimeStep {
        self.production.start()
    }

    pub fn len(&self) -> usize {
        self.production.len()
    }

    pub fn is_empty(&self) -> bool {
        self.production.is_empty()
    }

    pub fn horizon(&self) -> Horizon {
        Horizon::new(self.len() as i64).expect("validated at construction")
    }

    pub fn production(&self) -> &HourlySeries {
        &self.production
    }

    pub fn baseline_consumption(&self) -> &HourlySeries {
        &self.baseline_consumption
    }

    pub fn dayahead_price(&self) -> &HourlySeries {
        &self.dayahead_price
    }

    pub fn imbalance_price(&self) -> &HourlySeries {
        &self.imbalance_price
    }

    pub fn calendar(&self) -> &[CalendarFeatures] {
        &self.calendar
    }

    pub fn calendar_window(&self, from: TimeStep, len: usize) -> Result<&[CalendarFeatures]> {
        let offset = from.0 - self.start().0;
        if offset < 0 || offset as usize + len > self.calendar.len() {
            return Err(Error::OutsideScenario {
                start: from.0,
                end: from.0 + len as i64 - 1,
                first: self.start().0,
                last: self.production.end().0,
            });
        }
        Ok(&self.calendar[offset as usize..offset as usize + len])
    }

    pub fn features(&self) -> &BTreeMap<String, HourlySeries> {
        &self.features
    }
}
