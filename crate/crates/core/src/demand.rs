//! Demand response: how announced prices change consumption.
//!
//! The bundled model works in two stages on one delivery window:
//!
//! 1. own-price response `d_t = cF_t * eps(hour) * (y_t - r_t) / r_t`;
//! 2. a fraction `rho` of each `d_s` is recovered in neighbouring hours
//!    through a shift kernel, truncated to the window and renormalised per
//!    source hour.
//!
//! With `rho = 1` the response only moves energy in time; with `rho = 0` it
//! only curtails (or adds) load.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_aligned, Error, Result};
use crate::timeline::{CalendarFeatures, TimeStep};

const KERNEL_SUM_TOL: f64 = 1e-12;

/// Hourly prices announced for one delivery window, EUR/MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSignal {
    pub start: TimeStep,
    pub prices: Vec<f64>,
}

impl PriceSignal {
    pub fn new(start: TimeStep, prices: Vec<f64>) -> Self {
        Self { start, prices }
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn within(&self, min: f64, max: f64) -> bool {
        self.prices
            .iter()
            .all(|p| p.is_finite() && *p >= min && *p <= max)
    }
}

/// Non-negative weights `w_delta` for offsets `delta` in `-k..=k`, `delta != 0`,
/// summing to one. Energy curtailed at hour `s` reappears at `s + delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftKernel {
    radius: usize,
    /// Ordered `-k, .., -1, 1, .., k`.
    weights: Vec<f64>,
}

impl ShiftKernel {
    pub fn new(radius: usize, weights: Vec<f64>) -> Result<Self> {
        if radius == 0 {
            return Err(Error::DemandModel("kernel radius must be >= 1".into()));
        }
        if weights.len() != 2 * radius {
            return Err(Error::DemandModel(format!(
                "kernel of radius {radius} needs {} weights, got {}",
                2 * radius,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::DemandModel("kernel weights must be >= 0".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > KERNEL_SUM_TOL {
            return Err(Error::DemandModel(format!(
                "kernel weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self { radius, weights })
    }

    /// Equal weight on every offset within `radius`.
    pub fn uniform(radius: usize) -> Result<Self> {
        let n = 2 * radius;
        Self::new(radius, vec![1.0 / n as f64; n])
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offsets(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let k = self.radius as i64;
        (-k..=k)
            .filter(|d| *d != 0)
            .zip(self.weights.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandResponseModel {
    /// Own-price elasticity per hour of day, all `<= 0`.
    elasticity: Vec<f64>,
    kernel: ShiftKernel,
    recovery_fraction: f64,
}

/// Consumption after demand response, aligned to the priced window.
#[derive(Debug, Clone, PartialEq)]
pub struct RespondedLoad {
    pub start: TimeStep,
    pub values: Vec<f64>,
    /// Set when at least one hour had to be clipped at zero.
    pub clipped: bool,
}

impl DemandResponseModel {
    pub fn new(elasticity: Vec<f64>, kernel: ShiftKernel, recovery_fraction: f64) -> Result<Self> {
        if elasticity.len() != 24 {
            return Err(Error::DemandModel(format!(
                "elasticity needs 24 hourly values, got {}",
                elasticity.len()
            )));
        }
        if let Some(h) = elasticity
            .iter()
            .position(|e| !(*e <= 0.0) || !e.is_finite())
        {
            return Err(Error::DemandModel(format!(
                "elasticity at hour {h} is {}, must be <= 0",
                elasticity[h]
            )));
        }
        if !(0.0..=1.0).contains(&recovery_fraction) {
            return Err(Error::DemandModel(format!(
                "recovery fraction {recovery_fraction} outside [0, 1]"
            )));
        }
        Ok(Self {
            elasticity,
            kernel,
            recovery_fraction,
        })
    }

    /// Same elasticity at every hour.
    pub fn uniform(elasticity: f64, kernel: ShiftKernel, recovery_fraction: f64) -> Result<Self> {
        Self::new(vec![elasticity; 24], kernel, recovery_fraction)
    }

    /// A model that never responds.
    pub fn inert() -> Self {
        Self::uniform(0.0, ShiftKernel::uniform(1).expect("valid"), 1.0).expect("valid")
    }

    pub fn elasticity(&self) -> &[f64] {
        &self.elasticity
    }

    pub fn kernel(&self) -> &ShiftKernel {
        &self.kernel
    }

    pub fn recovery_fraction(&self) -> f64 {
        self.recovery_fraction
    }

    pub fn is_inert(&self) -> bool {
        self.elasticity.iter().all(|e| *e == 0.0)
    }

    fn check_inputs(
        &self,
        forecast: &[f64],
        signal: &PriceSignal,
        reference: &[f64],
        calendar: &[CalendarFeatures],
    ) -> Result<()> {
        ensure_aligned("signal vs consumption", forecast.len(), signal.len())?;
        ensure_aligned(
            "reference tariff vs consumption",
            forecast.len(),
            reference.len(),
        )?;
        ensure_aligned("calendar vs consumption", forecast.len(), calendar.len())?;
        if let Some(r) = reference.iter().find(|r| !(**r > 0.0)) {
            return Err(Error::DemandModel(format!(
                "reference price must be > 0, got {r}"
            )));
        }
        if forecast.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::DemandModel("consumption must be >= 0".into()));
        }
        Ok(())
    }

    /// Stage 1: own-price load change per hour.
    pub fn own_price_change(
        &self,
        forecast: &[f64],
        signal: &PriceSignal,
        reference: &[f64],
        calendar: &[CalendarFeatures],
    ) -> Result<Vec<f64>> {
        self.check_inputs(forecast, signal, reference, calendar)?;
        Ok(self.own_price_change_unchecked(forecast, &signal.prices, reference, calendar))
    }

    fn own_price_change_unchecked(
        &self,
        forecast: &[f64],
        prices: &[f64],
        reference: &[f64],
        calendar: &[CalendarFeatures],
    ) -> Vec<f64> {
        forecast
            .iter()
            .zip(prices)
            .zip(reference)
            .zip(calendar)
            .map(|(((c, y), r), cal)| c * self.elasticity[cal.hour_of_day] * (y - r) / r)
            .collect()
    }

    /// Responded load for one priced window.
    pub fn respond(
        &self,
        forecast: &[f64],
        signal: &PriceSignal,
        reference: &[f64],
        calendar: &[CalendarFeatures],
    ) -> Result<RespondedLoad> {
        self.check_inputs(forecast, signal, reference, calendar)?;
        let mut values = vec![0.0; forecast.len()];
        let clipped = self.respond_into(forecast, &signal.prices, reference, calendar, &mut values);
        Ok(RespondedLoad {
            start: signal.start,
            values,
            clipped,
        })
    }

    /// Allocation-free core of [`respond`](Self::respond); inputs must already
    /// be validated. Returns whether clipping occurred.
    pub(crate) fn respond_into(
        &self,
        forecast: &[f64],
        prices: &[f64],
        reference: &[f64],
        calendar: &[CalendarFeatures],
        out: &mut [f64],
    ) -> bool {
        let n = forecast.len() as i64;
        out.copy_from_slice(forecast);
        if self.is_inert() {
            return false;
        }
        for s in 0..forecast.len() {
            let r = reference[s];
            let d = forecast[s] * self.elasticity[calendar[s].hour_of_day] * (prices[s] - r) / r;
            if d == 0.0 {
                continue;
            }
            out[s] += d;
            if self.recovery_fraction == 0.0 {
                continue;
            }
            let si = s as i64;
            let in_window = |delta: i64| (0..n).contains(&(si + delta));
            let norm: f64 = self
                .kernel
                .offsets()
                .filter(|(delta, _)| in_window(*delta))
                .map(|(_, w)| w)
                .sum();
            if norm == 0.0 {
                continue;
            }
            let moved = self.recovery_fraction * d / norm;
            for (delta, w) in self.kernel.offsets() {
                if in_window(delta) {
                    out[(si + delta) as usize] -= w * moved;
                }
            }
        }
        let mut clipped = false;
        for v in out.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clipped = true;
            }
        }
        clipped
    }

    /// Net relative load change per relative price change, measured by
    /// raising every price by `perturbation * r_t`.
    pub fn aggregate_elasticity(
        &self,
        forecast: &[f64],
        signal: &PriceSignal,
        reference: &[f64],
        calendar: &[CalendarFeatures],
        perturbation: f64,
    ) -> Result<f64> {
        if perturbation == 0.0 || !perturbation.is_finite() {
            return Err(Error::ZeroPerturbation);
        }
        let base = self.respond(forecast, signal, reference, calendar)?;
        let bumped = PriceSignal {
            start: signal.start,
            prices: signal
                .prices
                .iter()
                .zip(reference)
                .map(|(y, r)| y + perturbation * r)
                .collect(),
        };
        let moved = self.respond(forecast, &bumped, reference, calendar)?;
        let delta: f64 = moved
            .values
            .iter()
            .zip(&base.values)
            .map(|(a, b)| a - b)
            .sum();
        let total: f64 = forecast.iter().sum();
        if total == 0.0 {
            return Ok(0.0);
        }
        Ok(delta / total / perturbation)
    }
}

/// Configuration-file form of [`DemandResponseModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandModelConfig {
    /// Hourly elasticity profile (24 values, `<= 0`), multiplied by `elasticity_scale`.
    pub elasticity: Vec<f64>,
    pub elasticity_scale: f64,
    pub kernel_radius: usize,
    /// Weights for offsets `-k..-1, 1..k`; empty means uniform.
    pub kernel_weights: Vec<f64>,
    pub rho: f64,
}

impl Default for DemandModelConfig {
    fn default() -> Self {
        Self {
            elasticity: vec![-1.0; 24],
            elasticity_scale: 0.3,
            kernel_radius: 3,
            kernel_weights: Vec::new(),
            rho: 1.0,
        }
    }
}

impl DemandModelConfig {
    pub fn inert() -> Self {
        Self {
            elasticity_scale: 0.0,
            ..Default::default()
        }
    }

    pub fn build(&self) -> Result<DemandResponseModel> {
        if !(self.elasticity_scale >= 0.0) {
            return Err(Error::DemandModel(format!(
                "elasticity_scale must be >= 0, got {}",
                self.elasticity_scale
            )));
        }
        let kernel = if self.kernel_weights.is_empty() {
            ShiftKernel::uniform(self.kernel_radius)?
        } else {
            ShiftKernel::new(self.kernel_radius, self.kernel_weights.clone())?
        };
        let elasticity = self
            .elasticity
            .iter()
            .map(|e| e * self.elasticity_scale)
            .map(|e| if e == 0.0 { 0.0 } else { e })
            .collect();
        DemandResponseModel::new(elasticity, kernel, self.rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::Calendar;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn day_calendar() -> Vec<CalendarFeatures> {
        Calendar::default().features_for(TimeStep(0), 24)
    }

    fn signal(prices: Vec<f64>) -> PriceSignal {
        PriceSignal::new(TimeStep(0), prices)
    }

    fn symmetric_one() -> ShiftKernel {
        ShiftKernel::new(1, vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn reference_price_leaves_load_unchanged() {
        let model = DemandResponseModel::uniform(-0.4, symmetric_one(), 0.7).unwrap();
        let cf: Vec<f64> = (0..24).map(|h| 50.0 + h as f64).collect();
        let r = vec![80.0; 24];
        let out = model
            .respond(&cf, &signal(r.clone()), &r, &day_calendar())
            .unwrap();
        assert_eq!(out.values, cf);
        assert!(!out.clipped);
    }

    #[test]
    fn pure_curtailment_single_hour() {
        let model = DemandResponseModel::uniform(-0.2, symmetric_one(), 0.0).unwrap();
        let cf = vec![100.0; 24];
        let r = vec![50.0; 24];
        let mut y = r.clone();
        y[7] = 55.0;
        let out = model.respond(&cf, &signal(y), &r, &day_calendar()).unwrap();
        for (h, v) in out.values.iter().enumerate() {
            let expected = if h == 7 { 98.0 } else { 100.0 };
            assert_relative_eq!(*v, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn pure_shifting_with_symmetric_kernel() {
        let model = DemandResponseModel::uniform(-0.2, symmetric_one(), 1.0).unwrap();
        let cf = vec![100.0; 24];
        let r = vec![50.0; 24];
        let mut y = r.clone();
        y[12] = 55.0;
        let out = model.respond(&cf, &signal(y), &r, &day_calendar()).unwrap();
        assert_relative_eq!(out.values[12], 98.0, max_relative = 1e-12);
        assert_relative_eq!(out.values[11], 101.0, max_relative = 1e-12);
        assert_relative_eq!(out.values[13], 101.0, max_relative = 1e-12);
        assert_relative_eq!(out.values[10], 100.0, max_relative = 1e-12);
        assert_relative_eq!(out.values.iter().sum::<f64>(), 2400.0, max_relative = 1e-12);
    }

    #[test]
    fn edge_hours_renormalise_over_in_window_targets() {
        let model = DemandResponseModel::uniform(-0.2, symmetric_one(), 1.0).unwrap();
        let cf = vec![100.0; 24];
        let r = vec![50.0; 24];
        let mut y = r.clone();
        y[0] = 55.0;
        let out = model.respond(&cf, &signal(y), &r, &day_calendar()).unwrap();
        assert_relative_eq!(out.values[0], 98.0, max_relative = 1e-12);
        assert_relative_eq!(out.values[1], 102.0, max_relative = 1e-12);
    }

    #[test]
    fn clipping_is_flagged() {
        let model = DemandResponseModel::uniform(-2.0, symmetric_one(), 0.0).unwrap();
        let cf = vec![10.0; 24];
        let r = vec![50.0; 24];
        let out = model
            .respond(&cf, &signal(vec![200.0; 24]), &r, &day_calendar())
            .unwrap();
        assert!(out.clipped);
        assert!(out.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn invalid_models_and_inputs_are_rejected() {
        assert!(ShiftKernel::new(1, vec![0.5, 0.6]).is_err());
        assert!(ShiftKernel::new(1, vec![1.5, -0.5]).is_err());
        assert!(ShiftKernel::new(0, vec![]).is_err());
        assert!(DemandResponseModel::uniform(0.1, symmetric_one(), 1.0).is_err());
        assert!(DemandResponseModel::uniform(-0.1, symmetric_one(), 1.5).is_err());
        let model = DemandResponseModel::uniform(-0.1, symmetric_one(), 1.0).unwrap();
        let mut r = vec![50.0; 24];
        r[3] = 0.0;
        assert!(model
            .respond(&[1.0; 24], &signal(vec![50.0; 24]), &r, &day_calendar())
            .is_err());
    }

    #[test]
    fn aggregate_elasticity_examples() {
        let cal = day_calendar();
        let cf = vec![100.0; 24];
        let r = vec![60.0; 24];
        let sig = signal(r.clone());

        let shifting =
            DemandResponseModel::uniform(-0.3, ShiftKernel::uniform(2).unwrap(), 1.0).unwrap();
        let e = shifting
            .aggregate_elasticity(&cf, &sig, &r, &cal, 0.05)
            .unwrap();
        assert!(e.abs() < 1e-9, "{e}");

        let curtail = DemandResponseModel::uniform(-0.3, symmetric_one(), 0.0).unwrap();
        let e = curtail
            .aggregate_elasticity(&cf, &sig, &r, &cal, 0.05)
            .unwrap();
        assert_relative_eq!(e, -0.3, max_relative = 1e-9);

        let profile: Vec<f64> = (0..24)
            .map(|h| if (8..=19).contains(&h) { -0.1 } else { -0.5 })
            .collect();
        let split = DemandResponseModel::new(profile, symmetric_one(), 0.0).unwrap();
        let e = split
            .aggregate_elasticity(&cf, &sig, &r, &cal, 0.05)
            .unwrap();
        assert_relative_eq!(e, -0.3, max_relative = 1e-9);

        assert!(matches!(
            split.aggregate_elasticity(&cf, &sig, &r, &cal, 0.0),
            Err(Error::ZeroPerturbation)
        ));
    }

    #[test]
    fn config_builds_scaled_profile() {
        let model = DemandModelConfig::default().build().unwrap();
        assert!(model.elasticity().iter().all(|e| *e == -0.3));
        assert_eq!(model.kernel().radius(), 3);
        assert!(DemandModelConfig::inert().build().unwrap().is_inert());
    }

    fn arb_model() -> impl Strategy<Value = DemandResponseModel> {
        (
            prop::collection::vec(-1.0f64..=0.0, 24),
            1usize..5,
            prop::collection::vec(0.01f64..1.0, 8),
            0.0f64..=1.0,
        )
            .prop_map(|(eps, k, raw, rho)| {
                let raw = &raw[..2 * k];
                let sum: f64 = raw.iter().sum();
                let mut w: Vec<f64> = raw.iter().map(|x| x / sum).collect();
                let err: f64 = 1.0 - w.iter().sum::<f64>();
                w[0] += err;
                DemandResponseModel::new(eps, ShiftKernel::new(k, w).unwrap(), rho).unwrap()
            })
    }

    proptest! {
        #[test]
        fn inert_model_is_identity(
            cf in prop::collection::vec(0.0f64..1e4, 24),
            y in prop::collection::vec(-500.0f64..500.0, 24),
        ) {
            let model = DemandResponseModel::inert();
            let r = vec![70.0; 24];
            let out = model.respond(&cf, &signal(y), &r, &day_calendar()).unwrap();
            prop_assert_eq!(out.values, cf);
        }

        #[test]
        fn changing_one_price_acts_locally(
            model in arb_model(),
            cf in prop::collection::vec(100.0f64..1e3, 24),
            hour in 0usize..24,
            bump in 0.01f64..0.3,
        ) {
            let r = vec![60.0; 24];
            let base = model.respond(&cf, &signal(r.clone()), &r, &day_calendar()).unwrap();
            let mut y = r.clone();
            y[hour] *= 1.0 + bump;
            let moved = model.respond(&cf, &signal(y), &r, &day_calendar()).unwrap();
            let k = model.kernel().radius();
            for h in 0usize..24 {
                if h.abs_diff(hour) > k {
                    prop_assert_eq!(base.values[h], moved.values[h]);
                }
            }
        }

        #[test]
        fn higher_price_lowers_own_price_term(
            model in arb_model(),
            cf in prop::collection::vec(1.0f64..1e3, 24),
            hour in 0usize..24,
            bump in 0.5f64..20.0,
        ) {
            prop_assume!(model.elasticity()[hour] < 0.0);
            let r = vec![60.0; 24];
            let cal = day_calendar();
            let low = model.own_price_change(&cf, &signal(r.clone()), &r, &cal).unwrap();
            let mut y = r.clone();
            y[hour] += bump;
            let high = model.own_price_change(&cf, &signal(y), &r, &cal).unwrap();
            prop_assert!(high[hour] < low[hour]);
        }
    }
}
