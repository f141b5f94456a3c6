//! Simulation and optimization of day-ahead dynamic electricity pricing for a
//! renewable producer/retailer.
//!
//! A run walks the horizon day by day: forecasts are issued at noon of the
//! previous day, a pricing policy announces 24 hourly consumer prices,
//! consumers respond through a demand-response model, and the retailer settles
//! its day-ahead and imbalance positions. Results are compared with a world
//! that has no dynamic pricing.

// `!(x >= 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod demand;
pub mod error;
pub mod evaluate;
pub mod exec;
pub mod forecast;
pub mod orchestrator;
pub mod policy;
mod rng;
pub mod scenario;
pub mod settlement;
pub mod timeline;

pub use demand::{DemandModelConfig, DemandResponseModel, PriceSignal, RespondedLoad, ShiftKernel};
pub use error::{Error, Result};
pub use evaluate::{baseline_run, indicators, BaselineOutcome, BaselineTariff, EvaluationReport};
pub use exec::Exec;
pub use forecast::{
    Forecast, ForecastSet, ForecasterConfig, ForecasterKind, ForecasterSuite, SeriesKind,
};
pub use orchestrator::{run, RunConfig, RunResult, ScenarioSource, SweepRow};
pub use policy::{decide, predicted_objective, PolicyConfig, PolicyInput, PolicyKind};
pub use scenario::{generate, load_csv, save_csv, GeneratorConfig, HourlySeries, Scenario, Unit};
pub use settlement::{CostModel, ImbalanceAccounting, SettlementLedger};
pub use timeline::{
    decision_schedule, decision_time_for, Calendar, DecisionEvent, Horizon, TimeStep,
};

/// Seed mixing used for every random stream, exposed for harnesses that need
/// to derive independent seeds.
pub fn derive_seed(parts: &[u64]) -> u64 {
    rng::mix(parts)
}
