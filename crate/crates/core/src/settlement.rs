//! Accounting of deviation, consumer bill and retailer revenue.
//!
//! Energy is in kWh (per hourly step) and prices in EUR/MWh, so every money
//! product carries a factor of 1e-3.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_aligned, Error, Result};
use crate::timeline::TimeStep;

/// kWh x EUR/MWh -> EUR.
pub const EUR_PER_KWH_EUR_PER_MWH: f64 = 1e-3;

/// Sum of absolute supply/demand gaps, kWh.
pub fn deviation(production: &[f64], consumption: &[f64]) -> Result<f64> {
    ensure_aligned(
        "production vs consumption",
        production.len(),
        consumption.len(),
    )?;
    Ok(production
        .iter()
        .zip(consumption)
        .map(|(p, c)| (p - c).abs())
        .sum())
}

/// Consumer bill, EUR.
pub fn bill(consumption: &[f64], prices: &[f64]) -> Result<f64> {
    ensure_aligned("consumption vs price", consumption.len(), prices.len())?;
    Ok(consumption
        .iter()
        .zip(prices)
        .map(|(c, y)| c * y * EUR_PER_KWH_EUR_PER_MWH)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    /// EUR per hour.
    pub fixed_cost_per_hour: f64,
    /// EUR/MWh of delivered consumption.
    pub marginal_cost: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            fixed_cost_per_hour: 10.0,
            marginal_cost: 0.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.fixed_cost_per_hour >= 0.0) || !(self.marginal_cost >= 0.0) {
            return Err(Error::Config(format!(
                "cost model must be non-negative, got F_C={} M_C={}",
                self.fixed_cost_per_hour, self.marginal_cost
            )));
        }
        Ok(())
    }

    /// Minimum revenue for profitability over `hours`, EUR.
    pub fn required_revenue(&self, hours: usize, consumption_kwh: f64) -> f64 {
        self.fixed_cost_per_hour * hours as f64
            + self.marginal_cost * consumption_kwh * EUR_PER_KWH_EUR_PER_MWH
    }
}

/// How the imbalance volume is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImbalanceAccounting {
    /// Full realized gap `c_t - p_t` settled at the imbalance price.
    #[default]
    Verbatim,
    /// Only the part not already traded day-ahead:
    /// `(c_t - p_t) - (c'_t - pF_t)`.
    Residual,
}

impl ImbalanceAccounting {
    fn volume(self, c: f64, p: f64, c_pred: f64, p_fc: f64) -> f64 {
        match self {
            ImbalanceAccounting::Verbatim => c - p,
            ImbalanceAccounting::Residual => (c - p) - (c_pred - p_fc),
        }
    }

    fn other(self) -> Self {
        match self {
            ImbalanceAccounting::Verbatim => ImbalanceAccounting::Residual,
            ImbalanceAccounting::Residual => ImbalanceAccounting::Verbatim,
        }
    }
}

/// Aligned inputs to [`revenue`]. All slices cover the same hours.
#[derive(Debug, Clone, Copy)]
pub struct SettlementInputs<'a> {
    pub start: TimeStep,
    /// Realized consumption `c_t`.
    pub consumption: &'a [f64],
    /// Predicted responded consumption `c'_t` traded day-ahead.
    pub predicted_consumption: &'a [f64],
    pub production: &'a [f64],
    pub production_forecast: &'a [f64],
    /// Price paid by consumers.
    pub consumer_price: &'a [f64],
    pub dayahead_price: &'a [f64],
    pub imbalance_price: &'a [f64],
}

impl SettlementInputs<'_> {
    fn validate(&self) -> Result<()> {
        let n = self.consumption.len();
        for (what, len) in [
            ("predicted consumption", self.predicted_consumption.len()),
            ("production", self.production.len()),
            ("production forecast", self.production_forecast.len()),
            ("consumer price", self.consumer_price.len()),
            ("day-ahead price", self.dayahead_price.len()),
            ("imbalance price", self.imbalance_price.len()),
        ] {
            ensure_aligned(what, n, len)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: TimeStep,
    pub consumer_payment: f64,
    pub dayahead_cashflow: f64,
    pub imbalance_cashflow: f64,
}

impl LedgerRow {
    pub fn total(&self) -> f64 {
        self.consumer_payment + self.dayahead_cashflow + self.imbalance_cashflow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementLedger {
    pub accounting: ImbalanceAccounting,
    pub rows: Vec<LedgerRow>,
    /// kWh.
    pub deviation: f64,
    /// EUR.
    pub bill: f64,
    /// EUR.
    pub revenue: f64,
    /// Revenue under the other imbalance accounting, for comparison.
    pub alternative_revenue: f64,
}

impl SettlementLedger {
    pub fn column_sums(&self) -> (f64, f64, f64) {
        self.rows.iter().fold((0.0, 0.0, 0.0), |(a, b, c), r| {
            (
                a + r.consumer_payment,
                b + r.dayahead_cashflow,
                c + r.imbalance_cashflow,
            )
        })
    }

    /// `t,consumer_payment,dayahead_cashflow,imbalance_cashflow`
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "t",
            "consumer_payment",
            "dayahead_cashflow",
            "imbalance_cashflow",
        ])?;
        for row in &self.rows {
            wtr.write_record([
                row.t.0.to_string(),
                row.consumer_payment.to_string(),
                row.dayahead_cashflow.to_string(),
                row.imbalance_cashflow.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<ledger writer>", e))?;
        Ok(())
    }
}

fn ledger_rows(inputs: &SettlementInputs<'_>, accounting: ImbalanceAccounting) -> Vec<LedgerRow> {
    (0..inputs.consumption.len())
        .map(|i| {
            let c = inputs.consumption[i];
            let p = inputs.production[i];
            let c_pred = inputs.predicted_consumption[i];
            let p_fc = inputs.production_forecast[i];
            LedgerRow {
                t: inputs.start.offset(i as i64),
                consumer_payment: c * inputs.consumer_price[i] * EUR_PER_KWH_EUR_PER_MWH,
                dayahead_cashflow: -(c_pred - p_fc)
                    * inputs.dayahead_price[i]
                    * EUR_PER_KWH_EUR_PER_MWH,
                imbalance_cashflow: -accounting.volume(c, p, c_pred, p_fc)
                    * inputs.imbalance_price[i]
                    * EUR_PER_KWH_EUR_PER_MWH,
            }
        })
        .collect()
}

/// Settles every hour: consumer payments, day-ahead trade of the predicted
/// gap `c'_t - pF_t`, and imbalance settlement of the realized gap.
pub fn revenue(
    inputs: &SettlementInputs<'_>,
    accounting: ImbalanceAccounting,
) -> Result<SettlementLedger> {
    inputs.validate()?;
    let rows = ledger_rows(inputs, accounting);
    let revenue = rows.iter().map(LedgerRow::total).sum();
    let alternative_revenue = ledger_rows(inputs, accounting.other())
        .iter()
        .map(LedgerRow::total)
        .sum();
    Ok(SettlementLedger {
        accounting,
        deviation: deviation(inputs.production, inputs.consumption)?,
        bill: bill(inputs.consumption, inputs.consumer_price)?,
        revenue,
        alternative_revenue,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintStatus {
    pub consumer_ok: bool,
    pub producer_ok: bool,
}

impl ConstraintStatus {
    pub fn all_ok(&self) -> bool {
        self.consumer_ok && self.producer_ok
    }
}

/// Consumer bill must not exceed the no-dynamic-pricing bill; revenue must
/// cover fixed (and, if configured, marginal) costs. Both bounds inclusive.
pub fn check_constraints(
    bill: f64,
    baseline_bill: f64,
    revenue: f64,
    cost: &CostModel,
    hours: usize,
    consumption_kwh: f64,
) -> ConstraintStatus {
    ConstraintStatus {
        consumer_ok: bill <= baseline_bill,
        producer_ok: revenue >= cost.required_revenue(hours, consumption_kwh),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn deviation_examples() {
        assert_eq!(deviation(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(deviation(&[1.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(deviation(&[0.0, 5.0, 3.0], &[4.0, 1.0, 3.0]).unwrap(), 8.0);
        assert!(matches!(
            deviation(&[1.0], &[1.0, 2.0]),
            Err(Error::Misaligned { .. })
        ));
    }

    #[test]
    fn bill_examples() {
        assert_relative_eq!(bill(&[2000.0, 3000.0], &[10.0, 20.0]).unwrap(), 80.0);
        assert_eq!(bill(&[5.0, 6.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(bill(&[0.0, 0.0], &[30.0, 40.0]).unwrap(), 0.0);
        assert!(bill(&[1.0], &[]).is_err());
    }

    fn single(
        c: f64,
        c_pred: f64,
        p: f64,
        p_fc: f64,
        y: f64,
        lambda: f64,
        i: f64,
    ) -> SettlementLedger {
        revenue(
            &SettlementInputs {
                start: TimeStep(0),
                consumption: &[c],
                predicted_consumption: &[c_pred],
                production: &[p],
                production_forecast: &[p_fc],
                consumer_price: &[y],
                dayahead_price: &[lambda],
                imbalance_price: &[i],
            },
            ImbalanceAccounting::Verbatim,
        )
        .unwrap()
    }

    #[test]
    fn revenue_examples() {
        assert_eq!(single(7.0, 7.0, 7.0, 7.0, 0.0, 40.0, 60.0).revenue, 0.0);
        let ledger = single(1000.0, 1000.0, 0.0, 0.0, 50.0, 40.0, 60.0);
        assert_relative_eq!(ledger.revenue, -50.0, max_relative = 1e-12);
        assert_relative_eq!(ledger.rows[0].consumer_payment, 50.0);
        assert_relative_eq!(ledger.rows[0].dayahead_cashflow, -40.0);
        assert_relative_eq!(ledger.rows[0].imbalance_cashflow, -60.0);
        // Residual accounting: nothing left to settle once the gap was traded.
        assert_relative_eq!(ledger.alternative_revenue, 10.0, max_relative = 1e-12);
    }

    #[test]
    fn perfect_information_simplifies_revenue() {
        let c = [300.0, 500.0, 100.0];
        let p = [400.0, 200.0, 100.0];
        let y = [70.0, 90.0, 50.0];
        let lambda = [40.0, 65.0, -5.0];
        let imb = [55.0, 80.0, 10.0];
        let ledger = revenue(
            &SettlementInputs {
                start: TimeStep(0),
                consumption: &c,
                predicted_consumption: &c,
                production: &p,
                production_forecast: &p,
                consumer_price: &y,
                dayahead_price: &lambda,
                imbalance_price: &imb,
            },
            ImbalanceAccounting::Residual,
        )
        .unwrap();
        let expected: f64 = (0..3)
            .map(|t| (c[t] * y[t] - (c[t] - p[t]) * lambda[t]) * 1e-3)
            .sum();
        assert_relative_eq!(ledger.revenue, expected, max_relative = 1e-12);
        assert!(ledger.rows.iter().all(|r| r.imbalance_cashflow == 0.0));
    }

    #[test]
    fn constraint_boundaries_are_inclusive() {
        let cost = CostModel {
            fixed_cost_per_hour: 2.0,
            marginal_cost: 0.0,
        };
        let s = check_constraints(100.0, 100.0, 48.0, &cost, 24, 0.0);
        assert!(s.consumer_ok && s.producer_ok);
        let s = check_constraints(100.5, 100.0, 47.9, &cost, 24, 0.0);
        assert!(!s.consumer_ok && !s.producer_ok);
        let free = CostModel {
            fixed_cost_per_hour: 0.0,
            marginal_cost: 0.0,
        };
        assert!(!check_constraints(0.0, 0.0, -1.0, &free, 24, 0.0).producer_ok);
    }

    #[test]
    fn marginal_cost_raises_the_bar() {
        let cost = CostModel {
            fixed_cost_per_hour: 0.0,
            marginal_cost: 10.0,
        };
        assert_relative_eq!(cost.required_revenue(24, 2000.0), 20.0);
        assert!(!check_constraints(0.0, 0.0, 19.0, &cost, 24, 2000.0).producer_ok);
    }

    #[test]
    fn ledger_csv_has_fixed_header() {
        let ledger = single(1000.0, 1000.0, 0.0, 0.0, 50.0, 40.0, 60.0);
        let mut buf = Vec::new();
        ledger.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "t,consumer_payment,dayahead_cashflow,imbalance_cashflow"
        );
        assert_eq!(text.lines().count(), 2);
    }

    proptest! {
        #[test]
        fn deviation_is_metric_like(
            a in prop::collection::vec(0.0f64..1e3, 12),
            b in prop::collection::vec(0.0f64..1e3, 12),
            c in prop::collection::vec(0.0f64..1e3, 12),
        ) {
            let ab = deviation(&a, &b).unwrap();
            prop_assert_eq!(ab, deviation(&b, &a).unwrap());
            prop_assert_eq!(deviation(&a, &a).unwrap(), 0.0);
            prop_assert!(ab >= 0.0);
            let bc = deviation(&b, &c).unwrap();
            let ac = deviation(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn ledger_reconciles(
            data in prop::collection::vec(
                (0.0f64..1e3, 0.0f64..1e3, 0.0f64..1e3, 0.0f64..1e3, 0.0f64..200.0, -50.0f64..200.0, -50.0f64..300.0),
                1..72,
            ),
        ) {
            type Hour = (f64, f64, f64, f64, f64, f64, f64);
            let col = |f: fn(&Hour) -> f64| -> Vec<f64> {
                data.iter().map(f).collect()
            };
            let (c, cp, p, pf) = (col(|d| d.0), col(|d| d.1), col(|d| d.2), col(|d| d.3));
            let (y, l, i) = (col(|d| d.4), col(|d| d.5), col(|d| d.6));
            let ledger = revenue(&SettlementInputs {
                start: TimeStep(0),
                consumption: &c,
                predicted_consumption: &cp,
                production: &p,
                production_forecast: &pf,
                consumer_price: &y,
                dayahead_price: &l,
                imbalance_price: &i,
            }, ImbalanceAccounting::Verbatim).unwrap();
            let (a, b, d) = ledger.column_sums();
            let scale = ledger.rows.iter().map(|r| r.consumer_payment.abs() + r.dayahead_cashflow.abs() + r.imbalance_cashflow.abs()).sum::<f64>().max(1.0);
            prop_assert!((a + b + d - ledger.revenue).abs() <= 1e-6 * scale);
        }
    }
}
