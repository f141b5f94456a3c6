//! Day-ahead forecasters for production, consumption and day-ahead price.
//!
//! Two forecasters are bundled: a noisy oracle with a tunable error level and
//! a same-hour persistence model. Both return a Gaussian (mean, std) per
//! delivery hour.

use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng;
use crate::scenario::{HourlySeries, Scenario};
use crate::timeline::{DecisionEvent, TimeStep, HOURS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Production,
    Consumption,
    Price,
}

impl SeriesKind {
    fn stream_id(self) -> u64 {
        match self {
            SeriesKind::Production => 11,
            SeriesKind::Consumption => 12,
            SeriesKind::Price => 13,
        }
    }

    /// Power series use relative noise and are clipped at zero.
    pub fn is_power(self) -> bool {
        !matches!(self, SeriesKind::Price)
    }

    fn truth(self, scenario: &Scenario) -> &HourlySeries {
        match self {
            SeriesKind::Production => scenario.production(),
            SeriesKind::Consumption => scenario.baseline_consumption(),
            SeriesKind::Price => scenario.dayahead_price(),
        }
    }
}

impl FromStr for SeriesKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "production" => Ok(SeriesKind::Production),
            "consumption" => Ok(SeriesKind::Consumption),
            "price" => Ok(SeriesKind::Price),
            _ => Err(Error::Unknown {
                what: "forecast kind",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecasterKind {
    NoisyOracle,
    Persistence,
}

impl FromStr for ForecasterKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noisy_oracle" => Ok(ForecasterKind::NoisyOracle),
            "persistence" => Ok(ForecasterKind::Persistence),
            _ => Err(Error::Unknown {
                what: "forecaster",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecasterConfig {
    pub kind: ForecasterKind,
    /// Noisy oracle error level: relative for power, EUR/MWh for price.
    pub gamma: f64,
    pub persistence_std: f64,
    pub seed: u64,
    /// Per hour-of-day fallback used by persistence when no observation is
    /// available yet. Empty means zeros.
    pub default_profile: Vec<f64>,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        Self {
            kind: ForecasterKind::NoisyOracle,
            gamma: 0.0,
            persistence_std: 0.0,
            seed: 0,
            default_profile: Vec::new(),
        }
    }
}

impl ForecasterConfig {
    pub fn noisy_oracle(gamma: f64) -> Self {
        Self {
            gamma,
            ..Default::default()
        }
    }

    pub fn persistence(std: f64, default_profile: Vec<f64>) -> Self {
        Self {
            kind: ForecasterKind::Persistence,
            persistence_std: std,
            default_profile,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!(
                "forecaster gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if !(self.persistence_std >= 0.0 && self.persistence_std.is_finite()) {
            return Err(Error::Config(format!(
                "persistence_std must be >= 0, got {}",
                self.persistence_std
            )));
        }
        if !self.default_profile.is_empty() && self.default_profile.len() != 24 {
            return Err(Error::Config(format!(
                "default_profile needs 24 values, got {}",
                self.default_profile.len()
            )));
        }
        Ok(())
    }

    fn default_value(&self, t: TimeStep) -> f64 {
        self.default_profile
            .get(t.hour_of_day())
            .copied()
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub delivery: TimeStep,
    pub mean: f64,
    pub std: f64,
}

/// Forecasts for every delivery hour of one decision event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSet {
    pub issued_at: TimeStep,
    pub production: Vec<Forecast>,
    pub consumption: Vec<Forecast>,
    pub price: Vec<Forecast>,
}

/// One Monte-Carlo draw of a [`ForecastSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub production: Vec<f64>,
    pub consumption: Vec<f64>,
    pub price: Vec<f64>,
}

impl ForecastSet {
    pub fn len(&self) -> usize {
        self.production.len()
    }

    pub fn is_empty(&self) -> bool {
        self.production.is_empty()
    }

    pub fn series(&self, kind: SeriesKind) -> &[Forecast] {
        match kind {
            SeriesKind::Production => &self.production,
            SeriesKind::Consumption => &self.consumption,
            SeriesKind::Price => &self.price,
        }
    }

    pub fn means(&self, kind: SeriesKind) -> Vec<f64> {
        self.series(kind).iter().map(|f| f.mean).collect()
    }

    pub fn first_delivery(&self) -> Option<TimeStep> {
        self.production.first().map(|f| f.delivery)
    }

    /// Checks the three series share contiguous, sorted delivery steps.
    pub fn validate(&self) -> Result<()> {
        let n = self.production.len();
        crate::error::ensure_aligned("forecast consumption", n, self.consumption.len())?;
        crate::error::ensure_aligned("forecast price", n, self.price.len())?;
        if n == 0 {
            return Err(Error::Config("empty forecast set".into()));
        }
        let start = self.production[0].delivery;
        for kind in [
            SeriesKind::Production,
            SeriesKind::Consumption,
            SeriesKind::Price,
        ] {
            for (i, f) in self.series(kind).iter().enumerate() {
                if f.delivery != start.offset(i as i64) {
                    return Err(Error::Config(format!(
                        "{kind:?} forecast {i} delivers at {} instead of {}",
                        f.delivery,
                        start.offset(i as i64)
                    )));
                }
                if !(f.std >= 0.0) || !f.mean.is_finite() {
                    return Err(Error::Config(format!("{kind:?} forecast {i} is invalid")));
                }
            }
        }
        Ok(())
    }

    /// Draws `n` joint trajectories from independent per-hour Gaussians.
    /// Power series are clipped at zero.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Trajectory>> {
        self.sample_with(n, seed, Exec::default())
    }

    pub fn sample_with(&self, n: usize, seed: u64, exec: Exec) -> Result<Vec<Trajectory>> {
        if n == 0 {
            return Err(Error::ZeroSamples);
        }
        Ok(exec.map_range(n, |i| {
            let mut rng = rng::stream(&[seed, 0x5A4D, i as u64]);
            let mut draw = |kind: SeriesKind| -> Vec<f64> {
                self.series(kind)
                    .iter()
                    .map(|f| {
                        let z: f64 = rng.sample(StandardNormal);
                        let v = f.mean + f.std * z;
                        if kind.is_power() {
                            v.max(0.0)
                        } else {
                            v
                        }
                    })
                    .collect()
            };
            Trajectory {
                production: draw(SeriesKind::Production),
                consumption: draw(SeriesKind::Consumption),
                price: draw(SeriesKind::Price),
            }
        }))
    }
}

/// Forecaster configuration per forecast target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecasterSuite {
    pub production: ForecasterConfig,
    pub consumption: ForecasterConfig,
    pub price: ForecasterConfig,
}

impl Default for ForecasterSuite {
    fn default() -> Self {
        Self {
            production: ForecasterConfig::noisy_oracle(0.05),
            consumption: ForecasterConfig::noisy_oracle(0.03),
            price: ForecasterConfig::noisy_oracle(3.0),
        }
    }
}

impl ForecasterSuite {
    pub fn perfect() -> Self {
        Self {
            production: ForecasterConfig::noisy_oracle(0.0),
            consumption: ForecasterConfig::noisy_oracle(0.0),
            price: ForecasterConfig::noisy_oracle(0.0),
        }
    }

    pub fn get(&self, kind: SeriesKind) -> &ForecasterConfig {
        match kind {
            SeriesKind::Production => &self.production,
            SeriesKind::Consumption => &self.consumption,
            SeriesKind::Price => &self.price,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.production.validate()?;
        self.consumption.validate()?;
        self.price.validate()
    }

    /// All three forecasts for `event`. `seed` is mixed into every stream.
    pub fn forecast_set(
        &self,
        scenario: &Scenario,
        event: &DecisionEvent,
        seed: u64,
    ) -> Result<ForecastSet> {
        let run = |kind| forecast_seeded(kind, scenario, event, self.get(kind), seed);
        Ok(ForecastSet {
            issued_at: event.decision_time(),
            production: run(SeriesKind::Production)?,
            consumption: run(SeriesKind::Consumption)?,
            price: run(SeriesKind::Price)?,
        })
    }
}

/// Forecasts the 24 delivery hours of `event` for one target series.
pub fn forecast(
    kind: SeriesKind,
    scenario: &Scenario,
    event: &DecisionEvent,
    config: &ForecasterConfig,
) -> Result<Vec<Forecast>> {
    forecast_seeded(kind, scenario, event, config, 0)
}

fn forecast_seeded(
    kind: SeriesKind,
    scenario: &Scenario,
    event: &DecisionEvent,
    config: &ForecasterConfig,
    run_seed: u64,
) -> Result<Vec<Forecast>> {
    config.validate()?;
    let truth_series = kind.truth(scenario);
    let start = event.delivery_start();
    let truth = truth_series.window(start, HOURS_PER_DAY as usize)?;
    let tau = event.decision_time();
    let clip = |v: f64| if kind.is_power() { v.max(0.0) } else { v };

    let forecasts = truth
        .iter()
        .enumerate()
        .map(|(i, &actual)| {
            let delivery = start.offset(i as i64);
            let (mean, std) = match config.kind {
                ForecasterKind::NoisyOracle => {
                    let z: f64 = if config.gamma == 0.0 {
                        0.0
                    } else {
                        rng::stream(&[
                            run_seed,
                            config.seed,
                            kind.stream_id(),
                            tau.0 as u64,
                            delivery.0 as u64,
                        ])
                        .sample(StandardNormal)
                    };
                    if kind.is_power() {
                        (
                            actual * (1.0 + config.gamma * z),
                            config.gamma * actual.abs(),
                        )
                    } else {
                        (actual + config.gamma * z, config.gamma)
                    }
                }
                ForecasterKind::Persistence => {
                    // Latest same-hour observation realized by the decision time.
                    let mut source = delivery.offset(-HOURS_PER_DAY);
                    while source > tau {
                        source = source.offset(-HOURS_PER_DAY);
                    }
                    let mean = truth_series
                        .get(source)
                        .unwrap_or_else(|| config.default_value(delivery));
                    (mean, config.persistence_std)
                }
            };
            Forecast {
                delivery,
                mean: clip(mean),
                std,
            }
        })
        .collect();
    Ok(forecasts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate, GeneratorConfig, Unit};
    use crate::timeline::{Calendar, Horizon, MAX_LEAD_HOURS, MIN_LEAD_HOURS};
    use std::collections::BTreeMap;

    fn scenario(days: i64) -> Scenario {
        generate(&GeneratorConfig::default(), Horizon::days(days).unwrap()).unwrap()
    }

    fn periodic(days: usize) -> Scenario {
        let day: Vec<f64> = (0..24).map(|h| 100.0 + 10.0 * h as f64).collect();
        let values: Vec<f64> = day.iter().copied().cycle().take(24 * days).collect();
        let s = |unit| HourlySeries::new(TimeStep(0), values.clone(), unit).unwrap();
        Scenario::new(
            s(Unit::KwhPerH),
            s(Unit::KwhPerH),
            s(Unit::EurPerMwh),
            s(Unit::EurPerMwh),
            &Calendar::default(),
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn zero_noise_oracle_is_exact() {
        let s = scenario(2);
        let event = DecisionEvent::for_day(1);
        for kind in [
            SeriesKind::Production,
            SeriesKind::Consumption,
            SeriesKind::Price,
        ] {
            let f = forecast(kind, &s, &event, &ForecasterConfig::noisy_oracle(0.0)).unwrap();
            let truth = kind.truth(&s).window(TimeStep(24), 24).unwrap();
            assert_eq!(f.len(), 24);
            for (fc, t) in f.iter().zip(truth) {
                assert_eq!(fc.mean, *t);
                assert_eq!(fc.std, 0.0);
            }
        }
    }

    #[test]
    fn persistence_is_exact_on_periodic_data() {
        let s = periodic(4);
        let config = ForecasterConfig::persistence(5.0, vec![]);
        for day in 2..4 {
            let f = forecast(
                SeriesKind::Consumption,
                &s,
                &DecisionEvent::for_day(day),
                &config,
            )
            .unwrap();
            let truth = s
                .baseline_consumption()
                .window(TimeStep(day * 24), 24)
                .unwrap();
            for (fc, t) in f.iter().zip(truth) {
                assert_eq!(fc.mean, *t);
                assert_eq!(fc.std, 5.0);
            }
        }
    }

    #[test]
    fn persistence_uses_default_profile_before_history() {
        let s = periodic(2);
        let profile: Vec<f64> = (0..24).map(|h| h as f64).collect();
        let config = ForecasterConfig::persistence(0.0, profile);
        let f = forecast(
            SeriesKind::Production,
            &s,
            &DecisionEvent::for_day(0),
            &config,
        )
        .unwrap();
        assert!(f.iter().enumerate().all(|(h, fc)| fc.mean == h as f64));
        // Day 1: morning hours are observed by noon of day 0, afternoon hours are not.
        let f = forecast(
            SeriesKind::Production,
            &s,
            &DecisionEvent::for_day(1),
            &config,
        )
        .unwrap();
        assert_eq!(f[3].mean, s.production().values()[3]);
        assert_eq!(f[12].mean, s.production().values()[12]);
        assert_eq!(f[13].mean, 13.0);
    }

    #[test]
    fn oracle_is_deterministic() {
        let s = scenario(2);
        let config = ForecasterConfig {
            seed: 9,
            ..ForecasterConfig::noisy_oracle(0.2)
        };
        let event = DecisionEvent::for_day(1);
        let a = forecast(SeriesKind::Production, &s, &event, &config).unwrap();
        let b = forecast(SeriesKind::Production, &s, &event, &config).unwrap();
        assert_eq!(a, b);
        let truth = s.production().window(TimeStep(24), 24).unwrap();
        assert!(a.iter().zip(truth).any(|(f, t)| f.mean != *t));
        assert!(a.iter().all(|f| f.mean >= 0.0));
    }

    #[test]
    fn lead_times_are_day_ahead() {
        let s = scenario(3);
        let set = ForecasterSuite::default()
            .forecast_set(&s, &DecisionEvent::for_day(2), 1)
            .unwrap();
        set.validate().unwrap();
        for f in &set.price {
            let lead = f.delivery.0 - set.issued_at.0;
            assert!((MIN_LEAD_HOURS..=MAX_LEAD_HOURS).contains(&lead));
        }
    }

    #[test]
    fn window_outside_scenario_is_rejected() {
        let s = scenario(1);
        let err = forecast(
            SeriesKind::Price,
            &s,
            &DecisionEvent::for_day(1),
            &ForecasterConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::OutsideScenario { .. }));
    }

    #[test]
    fn unknown_kinds_are_rejected() {
        assert!(matches!(
            "wind".parse::<SeriesKind>(),
            Err(Error::Unknown { .. })
        ));
        assert!("lstm".parse::<ForecasterKind>().is_err());
    }

    fn constant_set(mean: f64, std: f64) -> ForecastSet {
        let f = |i: usize| Forecast {
            delivery: TimeStep(i as i64),
            mean,
            std,
        };
        ForecastSet {
            issued_at: TimeStep(-12),
            production: (0..24).map(f).collect(),
            consumption: (0..24).map(f).collect(),
            price: (0..24).map(f).collect(),
        }
    }

    #[test]
    fn degenerate_distribution_samples_the_mean() {
        let set = constant_set(42.0, 0.0);
        for traj in set.sample(5, 3).unwrap() {
            assert!(traj.production.iter().all(|&v| v == 42.0));
            assert!(traj.price.iter().all(|&v| v == 42.0));
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let set = constant_set(10.0, 3.0);
        assert_eq!(set.sample(2, 77).unwrap(), set.sample(2, 77).unwrap());
        assert_eq!(
            set.sample_with(2, 77, Exec::Sequential).unwrap(),
            set.sample_with(2, 77, Exec::Parallel).unwrap()
        );
        assert!(matches!(set.sample(0, 1), Err(Error::ZeroSamples)));
    }

    #[test]
    fn sample_mean_within_three_standard_errors() {
        // Standard error of the mean: 10 / sqrt(10_000) = 0.1, bound 3 * 0.1.
        let set = constant_set(100.0, 10.0);
        let samples = set.sample(10_000, 2024).unwrap();
        for hour in [0, 11, 23] {
            let mean: f64 =
                samples.iter().map(|s| s.consumption[hour]).sum::<f64>() / samples.len() as f64;
            assert!((mean - 100.0).abs() < 0.3, "hour {hour}: {mean}");
        }
    }

    #[test]
    fn power_samples_are_clipped() {
        let set = constant_set(1.0, 50.0);
        let samples = set.sample(200, 5).unwrap();
        assert!(samples.iter().all(|s| s
            .production
            .iter()
            .chain(&s.consumption)
            .all(|&v| v >= 0.0)));
        assert!(samples.iter().any(|s| s.price.iter().any(|&v| v < 0.0)));
    }
}
