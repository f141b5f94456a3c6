//! Comparison against the world without dynamic pricing.
//!
//! Indicators (percent):
//! - `S = 100 (dev_base - dev) / dev_base`, synchronisation gain;
//! - `B = 100 (bill_base - bill) / bill_base`, consumer saving;
//! - `R = 100 (rev - rev_base) / rev_base`, retailer revenue gain.
//!
//! When a denominator is zero (or, for bill and revenue, negative) the
//! indicator holds the signed absolute difference instead and a flag names
//! the degenerate case.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_aligned, Error, Result};
use crate::scenario::Scenario;
use crate::settlement::{
    self, check_constraints, CostModel, ImbalanceAccounting, SettlementInputs, SettlementLedger,
};

pub const FLAG_DEVIATION_BASELINE_ZERO: &str = "deviation_baseline_zero";
pub const FLAG_BILL_BASELINE_NONPOSITIVE: &str = "bill_baseline_nonpositive";
pub const FLAG_REVENUE_DENOMINATOR_NONPOSITIVE: &str = "denominator_nonpositive";
pub const FLAG_DEMAND_CLIPPED: &str = "demand_response_clipped";

/// No-dynamic-pricing tariff `e_t = alpha * lambda_t + beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineTariff {
    pub alpha: f64,
    /// EUR/MWh.
    pub beta: f64,
}

impl Default for BaselineTariff {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 80.0,
        }
    }
}

impl BaselineTariff {
    pub fn apply(&self, dayahead_price: f64) -> f64 {
        self.alpha * dayahead_price + self.beta
    }

    pub fn series(&self, dayahead: &[f64]) -> Vec<f64> {
        dayahead.iter().map(|&l| self.apply(l)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::Config("tariff alpha and beta must be finite".into()));
        }
        Ok(())
    }
}

/// Settlement of the no-dynamic-pricing world.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub tariff: Vec<f64>,
    pub ledger: SettlementLedger,
}

impl BaselineOutcome {
    pub fn deviation(&self) -> f64 {
        self.ledger.deviation
    }

    pub fn bill(&self) -> f64 {
        self.ledger.bill
    }

    pub fn revenue(&self) -> f64 {
        self.ledger.revenue
    }
}

/// Consumers keep their uninfluenced consumption and pay the baseline
/// tariff; the retailer still trades its forecast gap `cF - pF` day-ahead.
pub fn baseline_run(
    scenario: &Scenario,
    tariff: &BaselineTariff,
    production_forecast: &[f64],
    consumption_forecast: &[f64],
    accounting: ImbalanceAccounting,
) -> Result<BaselineOutcome> {
    tariff.validate()?;
    let prices = tariff.series(scenario.dayahead_price().values());
    let ledger = settlement::revenue(
        &SettlementInputs {
            start: scenario.start(),
            consumption: scenario.baseline_consumption().values(),
            predicted_consumption: consumption_forecast,
            production: scenario.production().values(),
            production_forecast,
            consumer_price: &prices,
            dayahead_price: scenario.dayahead_price().values(),
            imbalance_price: scenario.imbalance_price().values(),
        },
        accounting,
    )?;
    Ok(BaselineOutcome {
        tariff: prices,
        ledger,
    })
}

/// Flat key-value report; key names and order are part of the output format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub deviation_kwh: f64,
    pub deviation_baseline_kwh: f64,
    pub bill_eur: f64,
    pub bill_baseline_eur: f64,
    pub revenue_eur: f64,
    pub revenue_baseline_eur: f64,
    pub indicator_s_pct: f64,
    pub indicator_b_pct: f64,
    pub indicator_r_pct: f64,
    pub consumer_ok: bool,
    pub producer_ok: bool,
    pub flags: Vec<String>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        let text = self.to_json()?;
        writer
            .write_all(text.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .map_err(|e| Error::io("<report writer>", e))
    }

    pub fn constraints_ok(&self) -> bool {
        self.consumer_ok && self.producer_ok
    }
}

/// Relative change in percent, or the signed difference when `denominator`
/// is not positive. Returns whether the fallback was used.
fn relative(gain: f64, denominator: f64) -> (f64, bool) {
    if denominator > 0.0 {
        (100.0 * gain / denominator, false)
    } else {
        (gain, true)
    }
}

/// Scores a settled dynamic-pricing run against its baseline.
pub fn indicators(
    run: &SettlementLedger,
    baseline: &BaselineOutcome,
    cost: &CostModel,
    consumption_kwh: f64,
) -> Result<EvaluationReport> {
    ensure_aligned(
        "run vs baseline horizon",
        run.rows.len(),
        baseline.ledger.rows.len(),
    )?;
    let hours = run.rows.len();
    let mut flags = Vec::new();

    let (s, degenerate) = relative(baseline.deviation() - run.deviation, baseline.deviation());
    if degenerate {
        flags.push(FLAG_DEVIATION_BASELINE_ZERO.to_string());
    }
    let (b, degenerate) = relative(baseline.bill() - run.bill, baseline.bill());
    if degenerate {
        flags.push(FLAG_BILL_BASELINE_NONPOSITIVE.to_string());
    }
    let (r, degenerate) = relative(run.revenue - baseline.revenue(), baseline.revenue());
    if degenerate {
        flags.push(FLAG_REVENUE_DENOMINATOR_NONPOSITIVE.to_string());
    }

    let status = check_constraints(
        run.bill,
        baseline.bill(),
        run.revenue,
        cost,
        hours,
        consumption_kwh,
    );
    Ok(EvaluationReport {
        deviation_kwh: run.deviation,
        deviation_baseline_kwh: baseline.deviation(),
        bill_eur: run.bill,
        bill_baseline_eur: baseline.bill(),
        revenue_eur: run.revenue,
        revenue_baseline_eur: baseline.revenue(),
        indicator_s_pct: s,
        indicator_b_pct: b,
        indicator_r_pct: r,
        consumer_ok: status.consumer_ok,
        producer_ok: status.producer_ok,
        flags,
    })
}
