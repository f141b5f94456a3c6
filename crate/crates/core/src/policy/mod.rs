//! Dynamic pricing policies: map the information available at decision time
//! to one day of consumer prices.
//!
//! `Optimizer` minimises the predicted supply/demand deviation over a per-hour
//! price grid by cyclic coordinate descent with restarts, subject to the
//! predicted bill and revenue constraints (exact penalty, feasibility first).
//! `Oracle` enumerates the whole grid and exists to check the optimizer on
//! small windows. `Robust` averages the objective over Monte-Carlo draws of
//! the forecasts and requires the constraints in a fraction of the draws.

mod problem;
mod search;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use search::{DescentTrace, Score};

use crate::demand::{DemandResponseModel, PriceSignal};
use crate::error::{ensure_aligned, Error, Result};
use crate::evaluate::BaselineTariff;
use crate::exec::Exec;
use crate::forecast::{ForecastSet, SeriesKind};
use crate::settlement::CostModel;
use crate::timeline::CalendarFeatures;
use problem::DayProblem;
use search::{Grid, Objective};

/// Largest window the exhaustive oracle accepts.
pub const ORACLE_MAX_HOURS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Flat,
    Indexed,
    Optimizer,
    Oracle,
    Robust,
}

impl FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(PolicyKind::Flat),
            "indexed" => Ok(PolicyKind::Indexed),
            "optimizer" => Ok(PolicyKind::Optimizer),
            "oracle" => Ok(PolicyKind::Oracle),
            "robust" => Ok(PolicyKind::Robust),
            _ => Err(Error::Unknown {
                what: "policy",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Lower price bound, EUR/MWh. Defaults to 0.
    pub y_min: Option<f64>,
    /// Upper price bound, EUR/MWh. Defaults to three times the highest
    /// reference tariff of the day.
    pub y_max: Option<f64>,
    pub grid_levels: usize,
    pub max_sweeps: usize,
    /// Largest number of hours moved jointly once single-hour sweeps stall;
    /// 1 gives plain coordinate descent.
    pub block_size: usize,
    /// Grid steps each hour of a joint move may take either way.
    pub block_radius: usize,
    /// Random perturbations of each converged start.
    pub kicks: usize,
    /// Random restarts on top of the two deterministic starts (reference
    /// tariff and flat tariff).
    pub restarts: usize,
    /// kWh of deviation per EUR of constraint violation.
    pub penalty_weight: f64,
    pub mc_samples: usize,
    pub chance_level: f64,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Optimizer,
            y_min: None,
            y_max: None,
            grid_levels: 25,
            max_sweeps: 30,
            block_size: 2,
            block_radius: 1,
            kicks: 2,
            restarts: 4,
            penalty_weight: 1000.0,
            mc_samples: 16,
            chance_level: 0.9,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl PolicyConfig {
    pub fn of_kind(kind: PolicyKind) -> Self {
        Self {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_levels < 2 {
            return Err(Error::Config(format!(
                "grid_levels must be >= 2, got {}",
                self.grid_levels
            )));
        }
        if self.block_size == 0 || (self.block_size > 1 && self.block_radius == 0) {
            return Err(Error::Config(format!(
                "block_size must be >= 1 and block_radius >= 1 when block_size > 1, got {} and {}",
                self.block_size, self.block_radius
            )));
        }
        if !(self.chance_level > 0.0 && self.chance_level <= 1.0) {
            return Err(Error::Config(format!(
                "chance_level must lie in (0, 1], got {}",
                self.chance_level
            )));
        }
        if self.kind == PolicyKind::Robust && self.mc_samples == 0 {
            return Err(Error::ZeroSamples);
        }
        if !(self.penalty_weight >= 0.0) {
            return Err(Error::Config("penalty_weight must be >= 0".into()));
        }
        if let (Some(lo), Some(hi)) = (self.y_min, self.y_max) {
            if !(lo < hi) {
                return Err(Error::InfeasibleBounds { min: lo, max: hi });
            }
        }
        Ok(())
    }

    /// Price bounds for a day with the given reference tariff.
    pub fn bounds(&self, reference: &[f64]) -> Result<(f64, f64)> {
        let lo = self.y_min.unwrap_or(0.0);
        let hi = self
            .y_max
            .unwrap_or_else(|| 3.0 * reference.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InfeasibleBounds { min: lo, max: hi });
        }
        Ok((lo, hi))
    }
}

/// Everything a policy may look at when pricing one window.
#[derive(Debug, Clone)]
pub struct PolicyInput {
    pub forecasts: ForecastSet,
    /// Previously announced signals, oldest first.
    pub price_history: Vec<PriceSignal>,
    pub model: DemandResponseModel,
    pub calendar: Vec<CalendarFeatures>,
    /// No-dynamic-pricing tariff expected for each priced hour; also the
    /// demand model's reference price.
    pub baseline_tariff: Vec<f64>,
    pub tariff: BaselineTariff,
    pub cost: CostModel,
}

impl PolicyInput {
    pub fn hours(&self) -> usize {
        self.forecasts.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.forecasts.validate()?;
        let n = self.forecasts.len();
        if n > 24 {
            return Err(Error::Config(format!(
                "a policy prices at most one day, got {n} hours"
            )));
        }
        ensure_aligned("calendar vs forecasts", n, self.calendar.len())?;
        ensure_aligned(
            "baseline tariff vs forecasts",
            n,
            self.baseline_tariff.len(),
        )?;
        if let Some(r) = self.baseline_tariff.iter().find(|r| !(**r > 0.0)) {
            return Err(Error::DemandModel(format!(
                "reference price must be > 0, got {r}"
            )));
        }
        self.cost.validate()
    }

    fn problem(&self) -> DayProblem<'_> {
        DayProblem::new(
            self.forecasts.means(SeriesKind::Production),
            self.forecasts.means(SeriesKind::Consumption),
            self.forecasts.means(SeriesKind::Price),
            &self.baseline_tariff,
            &self.calendar,
            &self.model,
            &self.cost,
        )
    }

    fn signal(&self, prices: Vec<f64>) -> PriceSignal {
        PriceSignal::new(
            self.forecasts
                .first_delivery()
                .expect("validated non-empty"),
            prices,
        )
    }
}

/// Predicted outcome of a signal, evaluated on forecast means. No imbalance
/// term: realizations are unknown at decision time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictedObjective {
    pub deviation: f64,
    pub bill: f64,
    pub baseline_bill: f64,
    pub revenue: f64,
    pub required_revenue: f64,
    pub feasible: bool,
}

pub fn predicted_objective(
    input: &PolicyInput,
    signal: &PriceSignal,
) -> Result<PredictedObjective> {
    input.validate()?;
    ensure_aligned("signal vs forecasts", input.hours(), signal.len())?;
    let problem = input.problem();
    let e = problem.evaluate(&signal.prices);
    Ok(PredictedObjective {
        deviation: e.deviation,
        bill: e.bill,
        baseline_bill: problem.baseline_bill,
        revenue: e.revenue,
        required_revenue: e.required_revenue,
        feasible: e.feasible(),
    })
}

/// Penalised score of a signal under the deterministic objective.
pub fn score_signal(
    config: &PolicyConfig,
    input: &PolicyInput,
    signal: &PriceSignal,
) -> Result<Score> {
    input.validate()?;
    ensure_aligned("signal vs forecasts", input.hours(), signal.len())?;
    let objective = Objective::Deterministic {
        problem: input.problem(),
        penalty_weight: config.penalty_weight,
    };
    Ok(objective.score(&signal.prices))
}

/// Full search result, for inspection and testing.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub signal: PriceSignal,
    pub score: Score,
    /// One trace per start, in start order (empty for the oracle).
    pub traces: Vec<DescentTrace>,
}

/// Prices one window.
pub fn decide(config: &PolicyConfig, input: &PolicyInput) -> Result<PriceSignal> {
    config.validate()?;
    input.validate()?;
    let (lo, hi) = config.bounds(&input.baseline_tariff)?;
    let clamp = |v: f64| v.clamp(lo, hi);
    match config.kind {
        PolicyKind::Flat => Ok(input.signal(vec![clamp(input.tariff.beta); input.hours()])),
        PolicyKind::Indexed => Ok(input.signal(
            input
                .forecasts
                .price
                .iter()
                .map(|f| clamp(input.tariff.apply(f.mean)))
                .collect(),
        )),
        PolicyKind::Optimizer | PolicyKind::Robust => Ok(search(config, input)?.signal),
        PolicyKind::Oracle => Ok(exhaustive_search(config, input)?.signal),
    }
}

fn grid_for(config: &PolicyConfig, input: &PolicyInput) -> Result<Grid> {
    let (lo, hi) = config.bounds(&input.baseline_tariff)?;
    Ok(Grid::new(lo, hi, config.grid_levels))
}

fn objective<'a>(config: &PolicyConfig, input: &'a PolicyInput) -> Result<Objective<'a>> {
    Ok(match config.kind {
        PolicyKind::Robust => {
            let seed = crate::rng::mix(&[config.seed, input.forecasts.issued_at.0 as u64, 0xB0B]);
            let samples = input
                .forecasts
                .sample_with(config.mc_samples, seed, config.exec)?;
            Objective::Robust {
                problems: samples
                    .into_iter()
                    .map(|s| {
                        DayProblem::new(
                            s.production,
                            s.consumption,
                            s.price,
                            &input.baseline_tariff,
                            &input.calendar,
                            &input.model,
                            &input.cost,
                        )
                    })
                    .collect(),
                penalty_weight: config.penalty_weight,
                chance_level: config.chance_level,
            }
        }
        _ => Objective::Deterministic {
            problem: input.problem(),
            penalty_weight: config.penalty_weight,
        },
    })
}

/// Multi-start coordinate descent (the `optimizer` and `robust` kinds).
pub fn search(config: &PolicyConfig, input: &PolicyInput) -> Result<SearchOutcome> {
    config.validate()?;
    input.validate()?;
    let grid = grid_for(config, input)?;
    let objective = objective(config, input)?;
    let hours = input.hours();
    let reference = &input.baseline_tariff;

    let mut starts = vec![
        reference
            .iter()
            .map(|&r| grid.nearest(r))
            .collect::<Vec<_>>(),
        vec![grid.nearest(input.tariff.beta); hours],
    ];
    let day_seed = input.forecasts.issued_at.0 as u64;
    for r in 0..config.restarts {
        starts.push(search::random_start(
            &grid,
            hours,
            &[config.seed, day_seed, r as u64],
        ));
    }
    let (best, traces) = search::multi_start(
        &objective,
        &grid,
        reference,
        starts,
        config.max_sweeps,
        search::Block {
            size: config.block_size,
            radius: config.block_radius,
        },
        search::Kicks {
            count: config.kicks,
            seed: crate::rng::mix(&[config.seed, day_seed]),
        },
        config.exec,
    );
    Ok(SearchOutcome {
        signal: input.signal(best.indices.iter().map(|&i| grid.levels[i]).collect()),
        score: best.score,
        traces,
    })
}

/// Exhaustive search over the grid; windows of at most [`ORACLE_MAX_HOURS`].
pub fn exhaustive_search(config: &PolicyConfig, input: &PolicyInput) -> Result<SearchOutcome> {
    config.validate()?;
    input.validate()?;
    if input.hours() > ORACLE_MAX_HOURS {
        return Err(Error::OracleTooLarge {
            hours: input.hours(),
            max: ORACLE_MAX_HOURS,
        });
    }
    let grid = grid_for(config, input)?;
    let objective = Objective::Deterministic {
        problem: input.problem(),
        penalty_weight: config.penalty_weight,
    };
    let (indices, score) =
        search::exhaustive(&objective, &grid, &input.baseline_tariff, config.exec);
    Ok(SearchOutcome {
        signal: input.signal(indices.iter().map(|&i| grid.levels[i]).collect()),
        score,
        traces: Vec::new(),
    })
}
