//! Hourly discretisation and the day-ahead decision schedule.
//!
//! Hour `t = 0` is 00:00 of day 0. Prices for a delivery day are decided once,
//! at 12:00 of the previous day, so the lead time between decision and
//! delivery ranges from 12 to 35 hours. Day 0 is decided at `t = -12`.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOURS_PER_DAY: i64 = 24;
/// Hour of day at which the day-ahead decision is taken.
pub const DECISION_HOUR: i64 = 12;
pub const MIN_LEAD_HOURS: i64 = 12;
pub const MAX_LEAD_HOURS: i64 = 35;

/// Global hour index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeStep(pub i64);

impl TimeStep {
    pub fn hour_of_day(self) -> usize {
        self.0.rem_euclid(HOURS_PER_DAY) as usize
    }

    pub fn day_index(self) -> i64 {
        self.0.div_euclid(HOURS_PER_DAY)
    }

    pub fn offset(self, hours: i64) -> TimeStep {
        TimeStep(self.0 + hours)
    }
}

impl std::fmt::Display for TimeStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Time at which the price of delivery hour `t` is decided.
pub fn decision_time_for(t: TimeStep) -> TimeStep {
    TimeStep(t.0 - (DECISION_HOUR + t.hour_of_day() as i64))
}

/// One day-ahead decision: taken at `decision_time`, pricing the 24 hours of
/// the following calendar day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionEvent {
    decision_time: TimeStep,
}

impl DecisionEvent {
    pub fn new(decision_time: TimeStep) -> Result<Self> {
        if (decision_time.0 + DECISION_HOUR).rem_euclid(HOURS_PER_DAY) != 0 {
            return Err(Error::InvalidDecisionTime(decision_time.0));
        }
        Ok(Self { decision_time })
    }

    /// Event deciding the calendar day `day`.
    pub fn for_day(day: i64) -> Self {
        Self {
            decision_time: TimeStep(day * HOURS_PER_DAY - DECISION_HOUR),
        }
    }

    pub fn decision_time(&self) -> TimeStep {
        self.decision_time
    }

    pub fn delivery_start(&self) -> TimeStep {
        self.decision_time.offset(DECISION_HOUR)
    }

    pub fn delivery_end(&self) -> TimeStep {
        self.decision_time.offset(MAX_LEAD_HOURS)
    }

    pub fn delivery_day(&self) -> i64 {
        self.delivery_start().day_index()
    }

    pub fn delivery_window(&self) -> impl Iterator<Item = TimeStep> {
        self.delivery_range().map(TimeStep)
    }

    pub fn delivery_range(&self) -> RangeInclusive<i64> {
        self.delivery_start().0..=self.delivery_end().0
    }
}

/// Number of hourly steps simulated; always whole days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Horizon(i64);

impl Horizon {
    pub fn new(hours: i64) -> Result<Self> {
        if hours <= 0 || hours % HOURS_PER_DAY != 0 {
            return Err(Error::HorizonNotMultipleOf24(hours));
        }
        Ok(Self(hours))
    }

    pub fn days(days: i64) -> Result<Self> {
        Self::new(days * HOURS_PER_DAY)
    }

    pub fn hours(self) -> i64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0 as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn day_count(self) -> i64 {
        self.0 / HOURS_PER_DAY
    }
}

impl TryFrom<i64> for Horizon {
    type Error = Error;
    fn try_from(hours: i64) -> Result<Self> {
        Horizon::new(hours)
    }
}

impl From<Horizon> for i64 {
    fn from(h: Horizon) -> i64 {
        h.0
    }
}

/// All decisions needed to price `[0, T-1]`, in chronological order.
pub fn decision_schedule(horizon: Horizon) -> Vec<DecisionEvent> {
    (0..horizon.day_count())
        .map(DecisionEvent::for_day)
        .collect()
}

/// Same as [`decision_schedule`] for a raw hour count.
pub fn decision_schedule_for_hours(hours: i64) -> Result<Vec<DecisionEvent>> {
    Horizon::new(hours).map(decision_schedule)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Autumn,
}

impl Season {
    /// Meteorological season for a zero-based day of a 365-day year.
    pub fn from_day_of_year(doy: u32) -> Self {
        match doy % 365 {
            0..=58 => Season::Winter,
            59..=150 => Season::Spring,
            151..=242 => Season::Summer,
            243..=333 => Season::Autumn,
            _ => Season::Winter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarFeatures {
    pub hour_of_day: usize,
    pub is_weekend: bool,
    pub is_holiday: bool,
    pub season: Season,
}

/// Calendar configuration. Weekdays are numbered Monday = 0 .. Sunday = 6.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Calendar {
    pub start_weekday: u32,
    /// Zero-based day of year of day 0.
    pub start_day_of_year: u32,
    /// Holidays as day indices relative to day 0.
    pub holidays: Vec<i64>,
}

impl Calendar {
    pub fn validate(&self) -> Result<()> {
        if self.start_weekday > 6 {
            return Err(Error::Config(format!(
                "start_weekday must be in 0..=6, got {}",
                self.start_weekday
            )));
        }
        Ok(())
    }

    pub fn features(&self, t: TimeStep) -> CalendarFeatures {
        let day = t.day_index();
        let weekday = (day + self.start_weekday as i64).rem_euclid(7);
        let doy = (day + self.start_day_of_year as i64).rem_euclid(365) as u32;
        CalendarFeatures {
            hour_of_day: t.hour_of_day(),
            is_weekend: weekday >= 5,
            is_holiday: self.holidays.contains(&day),
            season: Season::from_day_of_year(doy),
        }
    }

    pub fn features_for(&self, start: TimeStep, len: usize) -> Vec<CalendarFeatures> {
        (0..len as i64)
            .map(|i| self.features(start.offset(i)))
            .collect()
    }
}
