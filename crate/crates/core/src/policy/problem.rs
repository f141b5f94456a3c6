//! Decision-time evaluation of a candidate price signal on forecast data.

use crate::demand::DemandResponseModel;
use crate::settlement::{CostModel, EUR_PER_KWH_EUR_PER_MWH};
use crate::timeline::CalendarFeatures;

/// One forecast realization of the priced window.
#[derive(Debug, Clone)]
pub(crate) struct DayProblem<'a> {
    pub production: Vec<f64>,
    pub consumption: Vec<f64>,
    pub dayahead: Vec<f64>,
    pub reference: &'a [f64],
    pub cost: &'a CostModel,
    /// Right-hand side of the bill constraint, EUR.
    pub baseline_bill: f64,
    /// `cF_t * eps(h_t)`, so the own-price change is `scaled * (y - r) / r`.
    scaled_elasticity: Vec<f64>,
    /// Fraction of an hour's own-price change moved to its neighbours, after
    /// renormalising the kernel to the window.
    moved: Vec<f64>,
    radius: usize,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Evaluation {
    pub deviation: f64,
    pub bill: f64,
    pub revenue: f64,
    pub required_revenue: f64,
    pub bill_violation: f64,
    pub revenue_violation: f64,
}

impl Evaluation {
    pub fn feasible(&self) -> bool {
        self.bill_violation == 0.0 && self.revenue_violation == 0.0
    }

    pub fn violation(&self) -> f64 {
        self.bill_violation + self.revenue_violation
    }
}

/// Prices and responded load for one problem, updated one hour at a time.
#[derive(Debug, Clone)]
pub(crate) struct DayState {
    prices: Vec<f64>,
    change: Vec<f64>,
    load: Vec<f64>,
}

impl<'a> DayProblem<'a> {
    pub fn new(
        production: Vec<f64>,
        consumption: Vec<f64>,
        dayahead: Vec<f64>,
        reference: &'a [f64],
        calendar: &'a [CalendarFeatures],
        model: &'a DemandResponseModel,
        cost: &'a CostModel,
    ) -> Self {
        let n = consumption.len();
        let baseline_bill = consumption
            .iter()
            .zip(reference)
            .map(|(c, r)| c * r * EUR_PER_KWH_EUR_PER_MWH)
            .sum();
        let scaled_elasticity = consumption
            .iter()
            .zip(calendar)
            .map(|(c, f)| c * model.elasticity()[f.hour_of_day])
            .collect();
        let kernel = model.kernel();
        let moved = (0..n as i64)
            .map(|s| {
                let norm: f64 = kernel
                    .offsets()
                    .filter(|(d, _)| (0..n as i64).contains(&(s + d)))
                    .map(|(_, w)| w)
                    .sum();
                if norm == 0.0 {
                    0.0
                } else {
                    model.recovery_fraction() / norm
                }
            })
            .collect();
        Self {
            production,
            consumption,
            dayahead,
            reference,
            cost,
            baseline_bill,
            scaled_elasticity,
            moved,
            radius: kernel.radius(),
            weights: kernel.weights().to_vec(),
        }
    }

    pub fn hours(&self) -> usize {
        self.consumption.len()
    }

    pub fn state(&self, prices: &[f64]) -> DayState {
        let change = (0..self.hours())
            .map(|h| self.own_change(h, prices[h]))
            .collect();
        let mut state = DayState {
            prices: prices.to_vec(),
            change,
            load: vec![0.0; self.hours()],
        };
        for j in 0..self.hours() {
            state.load[j] = self.load_at(j, &state.change);
        }
        state
    }

    /// Moves hour `h` to `price`; only hours within the kernel radius change.
    pub fn set_price(&self, state: &mut DayState, h: usize, price: f64) {
        state.prices[h] = price;
        state.change[h] = self.own_change(h, price);
        let lo = h.saturating_sub(self.radius);
        let hi = (h + self.radius).min(self.hours() - 1);
        for j in lo..=hi {
            state.load[j] = self.load_at(j, &state.change);
        }
    }

    fn own_change(&self, h: usize, price: f64) -> f64 {
        let r = self.reference[h];
        self.scaled_elasticity[h] * (price - r) / r
    }

    /// Responded load at `j`, clipped at zero. Contributions are added in
    /// ascending source hour, so the value depends only on `change`.
    fn load_at(&self, j: usize, change: &[f64]) -> f64 {
        let k = self.radius;
        let mut v = self.consumption[j];
        for s in j.saturating_sub(k)..=(j + k).min(self.hours() - 1) {
            if s == j {
                v += change[s];
            } else {
                let w = if s > j {
                    self.weights[k - (s - j)]
                } else {
                    self.weights[k + (j - s) - 1]
                };
                v -= w * (change[s] * self.moved[s]);
            }
        }
        v.max(0.0)
    }

    pub fn totals(&self, state: &DayState) -> Evaluation {
        let mut deviation = 0.0;
        let mut bill = 0.0;
        let mut dayahead = 0.0;
        let mut responded = 0.0;
        for h in 0..self.hours() {
            let c = state.load[h];
            deviation += (self.production[h] - c).abs();
            bill += c * state.prices[h] * EUR_PER_KWH_EUR_PER_MWH;
            dayahead -= (c - self.production[h]) * self.dayahead[h] * EUR_PER_KWH_EUR_PER_MWH;
            responded += c;
        }
        let revenue = bill + dayahead;
        let required_revenue = self.cost.required_revenue(self.hours(), responded);
        Evaluation {
            deviation,
            bill,
            revenue,
            required_revenue,
            bill_violation: (bill - self.baseline_bill).max(0.0),
            revenue_violation: (required_revenue - revenue).max(0.0),
        }
    }

    pub fn evaluate(&self, prices: &[f64]) -> Evaluation {
        self.totals(&self.state(prices))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{PriceSignal, ShiftKernel};
    use crate::timeline::{Calendar, TimeStep};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn incremental_updates_match_fresh_state_and_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let calendar = Calendar::default().features_for(TimeStep(0), 24);
        let cost = CostModel::default();
        for radius in 1..=4 {
            let weights = vec![0.5 / radius as f64; 2 * radius];
            let eps: Vec<f64> = (0..24).map(|_| -rng.random_range(0.0..2.0)).collect();
            let model =
                DemandResponseModel::new(eps, ShiftKernel::new(radius, weights).unwrap(), 0.7)
                    .unwrap();
            let cf: Vec<f64> = (0..24).map(|_| rng.random_range(0.0..500.0)).collect();
            let reference: Vec<f64> = (0..24).map(|_| rng.random_range(20.0..90.0)).collect();
            let problem = DayProblem::new(
                vec![100.0; 24],
                cf.clone(),
                vec![50.0; 24],
                &reference,
                &calendar,
                &model,
                &cost,
            );
            let mut prices: Vec<f64> = reference.clone();
            let mut state = problem.state(&prices);
            for _ in 0..200 {
                let h = rng.random_range(0..24);
                prices[h] = rng.random_range(0.0..300.0);
                problem.set_price(&mut state, h, prices[h]);
            }
            let fresh = problem.state(&prices);
            assert_eq!(state.load, fresh.load);
            assert_eq!(problem.totals(&state), problem.totals(&fresh));

            let responded = model
                .respond(
                    &cf,
                    &PriceSignal::new(TimeStep(0), prices.clone()),
                    &reference,
                    &calendar,
                )
                .unwrap();
            for (a, b) in state.load.iter().zip(&responded.values) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }
}
