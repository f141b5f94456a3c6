//! End-to-end simulation of the daily pricing loop over a scenario.
//!
//! For each delivery day, in order: forecast the day at its decision time,
//! let the policy price it from the forecasts alone, predict the response
//! with the planning model, realize the response of the uninfluenced load
//! with the true model. The whole horizon is then settled and compared to
//! the no-dynamic-pricing baseline.

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::demand::{DemandModelConfig, DemandResponseModel, PriceSignal};
use crate::error::{Error, Result};
use crate::evaluate::{
    baseline_run, indicators, BaselineOutcome, BaselineTariff, EvaluationReport,
    FLAG_DEMAND_CLIPPED,
};
use crate::forecast::{ForecastSet, ForecasterSuite, SeriesKind};
use crate::policy::{self, PolicyConfig, PolicyInput};
use crate::rng;
use crate::scenario::{self, GeneratorConfig, Scenario};
use crate::settlement::{self, CostModel, ImbalanceAccounting, SettlementInputs, SettlementLedger};
use crate::timeline::{decision_schedule, Calendar, Horizon, HOURS_PER_DAY};

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    Generate(GeneratorConfig),
    Csv { path: PathBuf, calendar: Calendar },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub horizon: Horizon,
    pub source: ScenarioSource,
    pub forecasters: ForecasterSuite,
    /// Planning model used by the policy and for `c'`.
    pub demand: DemandModelConfig,
    /// Model generating realized consumption; `None` means the planning
    /// model is exact.
    pub true_demand: Option<DemandModelConfig>,
    pub policy: PolicyConfig,
    pub tariff: BaselineTariff,
    pub cost: CostModel,
    pub imbalance: ImbalanceAccounting,
    /// Master seed, mixed into every random stream.
    pub seed: u64,
}

impl Default for RunConfig {
    /// The bundled default: one week, solar-heavy portfolio, double-peak
    /// load, elasticity 0.3 with pure load shifting, optimizer policy.
    fn default() -> Self {
        Self {
            horizon: Horizon::days(7).expect("valid"),
            source: ScenarioSource::Generate(GeneratorConfig::default()),
            forecasters: ForecasterSuite::default(),
            demand: DemandModelConfig::default(),
            true_demand: None,
            policy: PolicyConfig::default(),
            tariff: BaselineTariff::default(),
            cost: CostModel::default(),
            imbalance: ImbalanceAccounting::Verbatim,
            seed: 42,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.forecasters.validate()?;
        self.demand.build()?;
        if let Some(t) = &self.true_demand {
            t.build()?;
        }
        self.policy.validate()?;
        self.tariff.validate()?;
        self.cost.validate()?;
        if let ScenarioSource::Generate(g) = &self.source {
            g.validate()?;
        }
        Ok(())
    }

    /// Builds or loads the scenario. Generator streams are salted with the
    /// master seed.
    pub fn scenario(&self) -> Result<Scenario> {
        let scenario = match &self.source {
            ScenarioSource::Generate(g) => {
                let salted = GeneratorConfig {
                    seed: rng::mix(&[self.seed, g.seed]),
                    ..g.clone()
                };
                scenario::generate(&salted, self.horizon)?
            }
            ScenarioSource::Csv { path, calendar } => scenario::load_csv(path, calendar)?,
        };
        if scenario.len() != self.horizon.len() {
            return Err(Error::Config(format!(
                "scenario has {} hours but the horizon is {}",
                scenario.len(),
                self.horizon.hours()
            )));
        }
        Ok(scenario)
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub signals: Vec<PriceSignal>,
    pub forecasts: Vec<ForecastSet>,
    /// Consumer prices `y_t` over the horizon.
    pub prices: Vec<f64>,
    /// Predicted responded consumption `c'_t`.
    pub predicted_consumption: Vec<f64>,
    /// Realized consumption `c_t`.
    pub realized_consumption: Vec<f64>,
    pub production_forecast: Vec<f64>,
    pub consumption_forecast: Vec<f64>,
    /// Realized baseline tariff `e_t`.
    pub baseline_tariff: Vec<f64>,
    pub ledger: SettlementLedger,
    pub baseline: BaselineOutcome,
    pub report: EvaluationReport,
    /// Hours in which either response had to be clipped at zero.
    pub clipped_days: Vec<i64>,
}

impl RunResult {
    /// `t,production,baseline_consumption,consumption,predicted_consumption,price,baseline_tariff,dayahead_price,imbalance_price`
    pub fn write_trajectory_csv<W: Write>(&self, scenario: &Scenario, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "t",
            "production",
            "baseline_consumption",
            "consumption",
            "predicted_consumption",
            "price",
            "baseline_tariff",
            "dayahead_price",
            "imbalance_price",
        ])?;
        for i in 0..scenario.len() {
            wtr.write_record([
                scenario.start().offset(i as i64).0.to_string(),
                scenario.production().values()[i].to_string(),
                scenario.baseline_consumption().values()[i].to_string(),
                self.realized_consumption[i].to_string(),
                self.predicted_consumption[i].to_string(),
                self.prices[i].to_string(),
                self.baseline_tariff[i].to_string(),
                scenario.dayahead_price().values()[i].to_string(),
                scenario.imbalance_price().values()[i].to_string(),
            ])?;
        }
        wtr.flush()
            .map_err(|e| Error::io("<trajectory writer>", e))?;
        Ok(())
    }
}

/// Runs the daily decision loop over `scenario` and settles it.
pub fn run(config: &RunConfig, scenario: &Scenario) -> Result<RunResult> {
    config.validate()?;
    if scenario.len() != config.horizon.len() {
        return Err(Error::Config(format!(
            "scenario has {} hours but the horizon is {}",
            scenario.len(),
            config.horizon.hours()
        )));
    }
    let planning = config.demand.build()?;
    let truth = match &config.true_demand {
        Some(t) => t.build()?,
        None => planning.clone(),
    };
    let policy_config = PolicyConfig {
        seed: rng::mix(&[config.seed, config.policy.seed]),
        ..config.policy.clone()
    };

    let n = scenario.len();
    let mut signals: Vec<PriceSignal> = Vec::new();
    let mut forecasts = Vec::new();
    let mut predicted = Vec::with_capacity(n);
    let mut realized = Vec::with_capacity(n);
    let mut production_forecast = Vec::with_capacity(n);
    let mut consumption_forecast = Vec::with_capacity(n);
    let mut clipped_days = Vec::new();

    for event in decision_schedule(config.horizon) {
        let day = event.delivery_day();
        let outcome = price_day(
            config,
            &policy_config,
            scenario,
            &event,
            &planning,
            &truth,
            &signals,
        )
        .map_err(|e| e.at_day(day))?;
        if outcome.clipped {
            clipped_days.push(day);
        }
        predicted.extend_from_slice(&outcome.predicted);
        realized.extend_from_slice(&outcome.realized);
        production_forecast.extend(outcome.forecasts.means(SeriesKind::Production));
        consumption_forecast.extend(outcome.forecasts.means(SeriesKind::Consumption));
        signals.push(outcome.signal);
        forecasts.push(outcome.forecasts);
    }

    let prices: Vec<f64> = signals
        .iter()
        .flat_map(|s| s.prices.iter().copied())
        .collect();
    let ledger = settlement::revenue(
        &SettlementInputs {
            start: scenario.start(),
            consumption: &realized,
            predicted_consumption: &predicted,
            production: scenario.production().values(),
            production_forecast: &production_forecast,
            consumer_price: &prices,
            dayahead_price: scenario.dayahead_price().values(),
            imbalance_price: scenario.imbalance_price().values(),
        },
        config.imbalance,
    )?;
    let baseline = baseline_run(
        scenario,
        &config.tariff,
        &production_forecast,
        &consumption_forecast,
        config.imbalance,
    )?;
    let mut report = indicators(&ledger, &baseline, &config.cost, realized.iter().sum())?;
    if !clipped_days.is_empty() {
        report.flags.push(FLAG_DEMAND_CLIPPED.to_string());
    }

    Ok(RunResult {
        signals,
        forecasts,
        prices,
        predicted_consumption: predicted,
        realized_consumption: realized,
        production_forecast,
        consumption_forecast,
        baseline_tariff: baseline.tariff.clone(),
        ledger,
        baseline,
        report,
        clipped_days,
    })
}

struct DayOutcome {
    forecasts: ForecastSet,
    signal: PriceSignal,
    predicted: Vec<f64>,
    realized: Vec<f64>,
    clipped: bool,
}

fn price_day(
    config: &RunConfig,
    policy_config: &PolicyConfig,
    scenario: &Scenario,
    event: &crate::timeline::DecisionEvent,
    planning: &DemandResponseModel,
    truth: &DemandResponseModel,
    history: &[PriceSignal],
) -> Result<DayOutcome> {
    let start = event.delivery_start();
    let hours = HOURS_PER_DAY as usize;
    let forecasts = config
        .forecasters
        .forecast_set(scenario, event, config.seed)?;
    let calendar = scenario.calendar_window(start, hours)?.to_vec();
    let expected_tariff = config.tariff.series(&forecasts.means(SeriesKind::Price));
    let realized_tariff = config
        .tariff
        .series(scenario.dayahead_price().window(start, hours)?);

    // The policy sees forecasts, past signals and the planning model only.
    let input = PolicyInput {
        forecasts,
        price_history: history.to_vec(),
        model: planning.clone(),
        calendar,
        baseline_tariff: expected_tariff,
        tariff: config.tariff,
        cost: config.cost,
    };
    let signal = policy::decide(policy_config, &input)?;

    let predicted = planning.respond(
        &input.forecasts.means(SeriesKind::Consumption),
        &signal,
        &input.baseline_tariff,
        &input.calendar,
    )?;
    let realized = truth.respond(
        scenario.baseline_consumption().window(start, hours)?,
        &signal,
        &realized_tariff,
        &input.calendar,
    )?;
    Ok(DayOutcome {
        forecasts: input.forecasts,
        signal,
        clipped: predicted.clipped || realized.clipped,
        predicted: predicted.values,
        realized: realized.values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub indicator_s_pct: f64,
    pub indicator_b_pct: f64,
    pub indicator_r_pct: f64,
    pub consumer_ok: bool,
    pub producer_ok: bool,
}

impl SweepRow {
    pub fn from_report(value: f64, report: &EvaluationReport) -> Self {
        Self {
            value,
            indicator_s_pct: report.indicator_s_pct,
            indicator_b_pct: report.indicator_b_pct,
            indicator_r_pct: report.indicator_r_pct,
            consumer_ok: report.consumer_ok,
            producer_ok: report.producer_ok,
        }
    }
}

/// `value,indicator_s_pct,indicator_b_pct,indicator_r_pct,consumer_ok,producer_ok`
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for row in rows {
        wtr.serialize(row)?;
    }
    if rows.is_empty() {
        wtr.write_record([
            "value",
            "indicator_s_pct",
            "indicator_b_pct",
            "indicator_r_pct",
            "consumer_ok",
            "producer_ok",
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<sweep writer>", e))?;
    Ok(())
}
