use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{HourlySeries, Scenario, Unit};
use crate::error::{Error, Result};
use crate::rng;
use crate::timeline::{Calendar, Horizon, TimeStep};

/// Synthetic scenario generator parameters. Power in kWh/h, prices in EUR/MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub calendar: Calendar,

    pub solar_capacity: f64,
    /// First daylight hour (inclusive).
    pub sunrise_hour: u32,
    /// End of the daylight window (exclusive).
    pub sunset_hour: u32,
    /// Day-to-day cloud attenuation in [0, 1]; 0 means clear sky every day.
    pub cloudiness: f64,
    pub solar_noise_std: f64,

    pub wind_capacity: f64,
    /// Long-run mean capacity factor of the wind process.
    pub wind_mean: f64,
    /// Mean-reversion rate per hour, in (0, 1].
    pub wind_reversion: f64,
    pub wind_noise_std: f64,

    pub consumption_base: f64,
    pub consumption_peak_amplitude: f64,
    pub morning_peak_hour: f64,
    pub evening_peak_hour: f64,
    pub peak_width_hours: f64,
    pub weekend_factor: f64,
    pub consumption_noise_std: f64,

    pub price_base: f64,
    /// EUR/MWh per kWh/h of residual load (consumption minus production).
    pub price_slope: f64,
    pub price_noise_std: f64,
    pub imbalance_spread: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            calendar: Calendar::default(),
            solar_capacity: 1600.0,
            sunrise_hour: 6,
            sunset_hour: 20,
            cloudiness: 0.3,
            solar_noise_std: 0.05,
            wind_capacity: 200.0,
            wind_mean: 0.35,
            wind_reversion: 0.15,
            wind_noise_std: 0.08,
            consumption_base: 400.0,
            consumption_peak_amplitude: 450.0,
            morning_peak_hour: 7.5,
            evening_peak_hour: 19.0,
            peak_width_hours: 2.0,
            weekend_factor: 1.1,
            consumption_noise_std: 20.0,
            price_base: 60.0,
            price_slope: 0.02,
            price_noise_std: 5.0,
            imbalance_spread: 25.0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("solar_capacity", self.solar_capacity),
            ("wind_capacity", self.wind_capacity),
            ("solar_noise_std", self.solar_noise_std),
            ("wind_noise_std", self.wind_noise_std),
            ("consumption_base", self.consumption_base),
            ("consumption_noise_std", self.consumption_noise_std),
            ("price_noise_std", self.price_noise_std),
            ("imbalance_spread", self.imbalance_spread),
            ("peak_width_hours", self.peak_width_hours),
            ("weekend_factor", self.weekend_factor),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::Config(format!(
                    "generator `{name}` must be finite and >= 0, got {value}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.cloudiness) || !(0.0..=1.0).contains(&self.wind_mean) {
            return Err(Error::Config(
                "generator `cloudiness` and `wind_mean` must lie in [0, 1]".into(),
            ));
        }
        if !(self.wind_reversion > 0.0 && self.wind_reversion <= 1.0) {
            return Err(Error::Config(
                "generator `wind_reversion` must lie in (0, 1]".into(),
            ));
        }
        if self.sunrise_hour >= self.sunset_hour || self.sunset_hour > 24 {
            return Err(Error::Config(format!(
                "daylight window [{}, {}) is empty or exceeds the day",
                self.sunrise_hour, self.sunset_hour
            )));
        }
        self.calendar.validate()
    }

    /// Clear-sky solar shape in [0, 1]; exactly 0 outside the daylight window.
    fn solar_shape(&self, hour: usize) -> f64 {
        let (rise, set) = (self.sunrise_hour as usize, self.sunset_hour as usize);
        if hour < rise || hour >= set {
            return 0.0;
        }
        let x = (hour - rise) as f64 + 0.5;
        (PI * x / (set - rise) as f64).sin()
    }

    fn consumption_shape(&self, hour: usize) -> f64 {
        let h = hour as f64;
        let bump = |centre: f64| {
            if self.peak_width_hours == 0.0 {
                return if h == centre { 1.0 } else { 0.0 };
            }
            (-(h - centre).powi(2) / (2.0 * self.peak_width_hours.powi(2))).exp()
        };
        self.consumption_base
            + self.consumption_peak_amplitude
                * (bump(self.morning_peak_hour) + bump(self.evening_peak_hour))
    }
}

const STREAM_SOLAR: u64 = 1;
const STREAM_WIND: u64 = 2;
const STREAM_LOAD: u64 = 3;
const STREAM_PRICE: u64 = 4;

/// Draws a synthetic scenario covering `[0, horizon)`. Deterministic in `config.seed`.
pub fn generate(config: &GeneratorConfig, horizon: Horizon) -> Result<Scenario> {
    config.validate()?;
    let len = horizon.len();
    let calendar = config.calendar.features_for(TimeStep(0), len);

    let mut solar_rng = rng::stream(&[config.seed, STREAM_SOLAR]);
    let mut day_factor = 1.0;
    let mut solar = Vec::with_capacity(len);
    for (i, cal) in calendar.iter().enumerate() {
        if i % 24 == 0 {
            day_factor = 1.0 - config.cloudiness * solar_rng.random::<f64>();
        }
        let z: f64 = solar_rng.sample(StandardNormal);
        let shape = config.solar_shape(cal.hour_of_day);
        let value = if shape == 0.0 {
            0.0
        } else {
            config.solar_capacity * shape * day_factor * (1.0 + config.solar_noise_std * z)
        };
        solar.push(value.clamp(0.0, config.solar_capacity));
    }

    let mut wind_rng = rng::stream(&[config.seed, STREAM_WIND]);
    let mut level = config.wind_mean;
    let mut wind = Vec::with_capacity(len);
    for _ in 0..len {
        let z: f64 = wind_rng.sample(StandardNormal);
        level += config.wind_reversion * (config.wind_mean - level) + config.wind_noise_std * z;
        level = level.clamp(0.0, 1.0);
        wind.push(config.wind_capacity * level);
    }

    let production: Vec<f64> = solar.iter().zip(&wind).map(|(s, w)| s + w).collect();

    let mut load_rng = rng::stream(&[config.seed, STREAM_LOAD]);
    let consumption: Vec<f64> = calendar
        .iter()
        .map(|cal| {
            let z: f64 = load_rng.sample(StandardNormal);
            let factor = if cal.is_weekend || cal.is_holiday {
                config.weekend_factor
            } else {
                1.0
            };
            (config.consumption_shape(cal.hour_of_day) * factor + config.consumption_noise_std * z)
                .max(0.0)
        })
        .collect();

    let mut price_rng = rng::stream(&[config.seed, STREAM_PRICE]);
    let mut dayahead = Vec::with_capacity(len);
    let mut imbalance = Vec::with_capacity(len);
    for (c, p) in consumption.iter().zip(&production) {
        let z: f64 = price_rng.sample(StandardNormal);
        let residual = c - p;
        let lambda = config.price_base + config.price_slope * residual + config.price_noise_std * z;
        // A short system pays above day-ahead, a long system sells below it.
        let spread = if residual >= 0.0 {
            config.imbalance_spread
        } else {
            -config.imbalance_spread
        };
        dayahead.push(lambda);
        imbalance.push(lambda + spread);
    }

    let start = TimeStep(0);
    Scenario::new(
        HourlySeries::new(start, production, Unit::KwhPerH)?,
        HourlySeries::new(start, consumption, Unit::KwhPerH)?,
        HourlySeries::new(start, dayahead, Unit::EurPerMwh)?,
        HourlySeries::new(start, imbalance, Unit::EurPerMwh)?,
        &config.calendar,
        BTreeMap::new(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_days() -> Horizon {
        Horizon::days(2).unwrap()
    }

    #[test]
    fn zero_capacity_means_zero_production() {
        let config = GeneratorConfig {
            solar_capacity: 0.0,
            wind_capacity: 0.0,
            ..Default::default()
        };
        let s = generate(&config, two_days()).unwrap();
        assert!(s.production().values().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn same_seed_same_scenario() {
        let config = GeneratorConfig::default();
        assert_eq!(
            generate(&config, two_days()).unwrap(),
            generate(&config, two_days()).unwrap()
        );
        let other = GeneratorConfig {
            seed: 8,
            ..config.clone()
        };
        assert_ne!(
            generate(&config, two_days()).unwrap(),
            generate(&other, two_days()).unwrap()
        );
    }

    #[test]
    fn degenerate_price_is_constant() {
        let config = GeneratorConfig {
            price_noise_std: 0.0,
            price_slope: 0.0,
            price_base: 42.5,
            ..Default::default()
        };
        let s = generate(&config, two_days()).unwrap();
        assert!(s.dayahead_price().values().iter().all(|&p| p == 42.5));
    }

    #[test]
    fn night_production_is_wind_only() {
        let solar_only = GeneratorConfig {
            wind_capacity: 0.0,
            ..Default::default()
        };
        let s = generate(&solar_only, Horizon::days(3).unwrap()).unwrap();
        for (cal, p) in s.calendar().iter().zip(s.production().values()) {
            let h = cal.hour_of_day as u32;
            if h < solar_only.sunrise_hour || h >= solar_only.sunset_hour {
                assert_eq!(*p, 0.0, "hour {h}");
            }
        }
        assert!(s.production().values().iter().any(|&p| p > 0.0));
    }

    #[test]
    fn imbalance_price_penalises_residual() {
        let s = generate(&GeneratorConfig::default(), Horizon::days(2).unwrap()).unwrap();
        for i in 0..s.len() {
            let residual = s.baseline_consumption().values()[i] - s.production().values()[i];
            let gap = s.imbalance_price().values()[i] - s.dayahead_price().values()[i];
            assert!(gap * residual >= 0.0);
        }
    }

    #[test]
    fn rejects_negative_capacity() {
        let config = GeneratorConfig {
            wind_capacity: -1.0,
            ..Default::default()
        };
        assert!(generate(&config, two_days()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn generated_scenarios_respect_invariants(
            seed in any::<u64>(),
            solar in 0.0f64..5000.0,
            wind in 0.0f64..5000.0,
            base in 0.0f64..2000.0,
            amp in -500.0f64..2000.0,
            noise in 0.0f64..500.0,
            days in 1i64..4,
        ) {
            let config = GeneratorConfig {
                seed,
                solar_capacity: solar,
                wind_capacity: wind,
                consumption_base: base,
                consumption_peak_amplitude: amp,
                consumption_noise_std: noise,
                ..Default::default()
            };
            let s = generate(&config, Horizon::days(days).unwrap()).unwrap();
            prop_assert_eq!(s.len() as i64, days * 24);
            prop_assert!(s.production().values().iter().all(|&p| p >= 0.0 && p <= solar + wind));
            prop_assert!(s.baseline_consumption().values().iter().all(|&c| c >= 0.0));
            prop_assert!(s.dayahead_price().values().iter().all(|p| p.is_finite()));
        }
    }
}
