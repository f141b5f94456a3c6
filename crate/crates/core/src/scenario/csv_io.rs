//! Scenario CSV format: one row per hour, header required.
//!
//! `t,production_kwh,baseline_consumption_kwh,dayahead_price_eur_mwh,imbalance_price_eur_mwh[,feature:<name>...]`

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{HourlySeries, Scenario, Unit};
use crate::error::{Error, Result};
use crate::timeline::{Calendar, Horizon, TimeStep};

const T: &str = "t";
const PRODUCTION: &str = "production_kwh";
const CONSUMPTION: &str = "baseline_consumption_kwh";
const DAYAHEAD: &str = "dayahead_price_eur_mwh";
const IMBALANCE: &str = "imbalance_price_eur_mwh";
const FEATURE_PREFIX: &str = "feature:";

pub fn load_csv(path: impl AsRef<Path>, calendar: &Calendar) -> Result<Scenario> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, calendar)
}

pub fn save_csv(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(scenario, file)
}

pub fn read_csv<R: Read>(reader: R, calendar: &Calendar) -> Result<Scenario> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let t_col = find(T)?;
    let core = [
        (PRODUCTION, find(PRODUCTION)?, true),
        (CONSUMPTION, find(CONSUMPTION)?, true),
        (DAYAHEAD, find(DAYAHEAD)?, false),
        (IMBALANCE, find(IMBALANCE)?, false),
    ];
    let feature_cols: Vec<(String, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            h.trim()
                .strip_prefix(FEATURE_PREFIX)
                .map(|name| (name.to_string(), i))
        })
        .collect();

    let mut start = None;
    let mut core_values: [Vec<f64>; 4] = Default::default();
    let mut feature_values = vec![Vec::new(); feature_cols.len()];

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let field = |col: usize, name: &str| -> Result<f64> {
            let raw = record.get(col).unwrap_or("").trim();
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                column: name.to_string(),
                row,
                value: raw.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    column: name.to_string(),
                    row,
                });
            }
            Ok(value)
        };

        let raw_t = record.get(t_col).unwrap_or("").trim();
        let t: i64 = raw_t.parse().map_err(|_| Error::Parse {
            column: T.to_string(),
            row,
            value: raw_t.to_string(),
        })?;
        let first = *start.get_or_insert(t);
        let expected = first + i as i64;
        if t != expected {
            return Err(Error::NonContiguous {
                row,
                found: t,
                expected,
            });
        }

        for ((name, col, non_negative), out) in core.iter().zip(core_values.iter_mut()) {
            let value = field(*col, name)?;
            if *non_negative && value < 0.0 {
                return Err(Error::Negative {
                    column: name.to_string(),
                    row,
                });
            }
            out.push(value);
        }
        for ((name, col), out) in feature_cols.iter().zip(feature_values.iter_mut()) {
            out.push(field(*col, &format!("{FEATURE_PREFIX}{name}"))?);
        }
    }

    let rows = core_values[0].len();
    if Horizon::new(rows as i64).is_err() {
        return Err(Error::CsvRowCount(rows));
    }
    let start = TimeStep(start.unwrap_or(0));
    let [production, consumption, dayahead, imbalance] = core_values;
    let mut features = BTreeMap::new();
    for ((name, _), values) in feature_cols.into_iter().zip(feature_values) {
        features.insert(name, HourlySeries::new(start, values, Unit::Dimensionless)?);
    }
    Scenario::new(
        HourlySeries::new(start, production, Unit::KwhPerH)?,
        HourlySeries::new(start, consumption, Unit::KwhPerH)?,
        HourlySeries::new(start, dayahead, Unit::EurPerMwh)?,
        HourlySeries::new(start, imbalance, Unit::EurPerMwh)?,
        calendar,
        features,
    )
}

/// Writes values in shortest round-trip form, so a reload is bit-exact.
pub fn write_csv<W: Write>(scenario: &Scenario, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![
        T.to_string(),
        PRODUCTION.to_string(),
        CONSUMPTION.to_string(),
        DAYAHEAD.to_string(),
        IMBALANCE.to_string(),
    ];
    header.extend(
        scenario
            .features()
            .keys()
            .map(|k| format!("{FEATURE_PREFIX}{k}")),
    );
    wtr.write_record(&header)?;
    let start = scenario.start();
    for i in 0..scenario.len() {
        let mut row = vec![
            start.offset(i as i64).0.to_string(),
            scenario.production().values()[i].to_string(),
            scenario.baseline_consumption().values()[i].to_string(),
            scenario.dayahead_price().values()[i].to_string(),
            scenario.imbalance_price().values()[i].to_string(),
        ];
        row.extend(
            scenario
                .features()
                .values()
                .map(|s| s.values()[i].to_string()),
        );
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
