//! Instantaneous reproduction number estimation via the renewal equation.
//!
//! New cases on day t are modelled as `c_t = R_t * sum_{tau<t} c_tau * g_{t-tau}`,
//! so `R_t` is the ratio of today's cases to the serial-interval-weighted sum
//! of earlier cases. The sum only ranges over observed days.

use chrono::{Days, NaiveDate};
use log::{debug, warn};

use crate::error::{Error, Result};
use crate::serial_interval::DiscretizedSerialInterval;

/// Minimum cumulative count for a day to be included in R_t estimation.
pub const DEFAULT_MIN_CUMULATIVE: u64 = 20;
/// Radius of the sliding-window mean filter applied to daily new cases.
pub const DEFAULT_FILTER_RADIUS: usize = 1;

/// Denominators below this are treated as zero.
const DENOMINATOR_FLOOR: f64 = 1e-12;

pub(crate) fn nth_day(start: NaiveDate, offset: usize) -> NaiveDate {
    start
        .checked_add_days(Days::new(offset as u64))
        .expect("date within chrono range")
}

/// Cumulative confirmed counts for one region on consecutive days.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseSeries {
    region: String,
    start: NaiveDate,
    cumulative: Vec<u64>,
}

impl CaseSeries {
    /// Validates that dates are consecutive and counts never decrease.
    pub fn new(region: impl Into<String>, entries: Vec<(NaiveDate, u64)>) -> Result<Self> {
        let region = region.into();
        let Some(&(start, _)) = entries.first() else {
            return Err(Error::DataIntegrity {
                region,
                reason: "case series has no entries".into(),
            });
        };
        for (i, pair) in entries.windows(2).enumerate() {
            let (prev_date, prev) = pair[0];
            let (date, count) = pair[1];
            if date != nth_day(start, i + 1) {
                return Err(Error::DataIntegrity {
                    region,
                    reason: format!(
                        "dates must be consecutive days: {} follows {}",
                        date, prev_date
                    ),
                });
            }
            if count < prev {
                return Err(Error::DataIntegrity {
                    region,
                    reason: format!(
                        "cumulative count decreases on {} ({} -> {})",
                        date, prev, count
                    ),
                });
            }
        }
        Ok(CaseSeries {
            region,
            start,
            cumulative: entries.into_iter().map(|(_, c)| c).collect(),
        })
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn cumulative(&self) -> &[u64] {
        &self.cumulative
    }

    pub fn date(&self, index: usize) -> NaiveDate {
        nth_day(self.start, index)
    }
}

/// Daily new cases, carrying the raw cumulative count for the inclusion rule.
#[derive(Debug, Clone, PartialEq)]
pub struct NewCaseSeries {
    region: String,
    start: NaiveDate,
    new_cases: Vec<f64>,
    cumulative: Vec<u64>,
}

impl NewCaseSeries {
    /// Builds a series from daily values; cumulative counts are the rounded
    /// running sum. Negative values are clamped to zero with a warning.
    pub fn from_daily(region: impl Into<String>, start: NaiveDate, daily: Vec<f64>) -> Self {
        let region = region.into();
        let mut running = 0.0;
        let mut new_cases = Vec::with_capacity(daily.len());
        let mut cumulative = Vec::with_capacity(daily.len());
        for (i, value) in daily.into_iter().enumerate() {
            let value = if value < 0.0 {
                warn!(
                    "{}: negative new cases ({}) on {} clamped to 0",
                    region,
                    value,
                    nth_day(start, i)
                );
                0.0
            } else {
                value
            };
            running += value;
            new_cases.push(value);
            cumulative.push(running.round() as u64);
        }
        NewCaseSeries {
            region,
            start,
            new_cases,
            cumulative,
        }
    }

    /// Pairs explicit daily values with cumulative counts of the same length.
    pub fn from_parts(
        region: impl Into<String>,
        start: NaiveDate,
        new_cases: Vec<f64>,
        cumulative: Vec<u64>,
    ) -> Self {
        assert_eq!(new_cases.len(), cumulative.len(), "series lengths differ");
        NewCaseSeries {
            region: region.into(),
            start,
            new_cases,
            cumulative,
        }
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn len(&self) -> usize {
        self.new_cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.new_cases.is_empty()
    }

    pub fn new_cases(&self) -> &[f64] {
        &self.new_cases
    }

    pub fn cumulative(&self) -> &[u64] {
        &self.cumulative
    }

    pub fn date(&self, index: usize) -> NaiveDate {
        nth_day(self.start, index)
    }

    /// New cases on `date`, if the series covers it.
    pub fn on(&self, date: NaiveDate) -> Option<f64> {
        let offset = (date - self.start).num_days();
        usize::try_from(offset)
            .ok()
            .and_then(|i| self.new_cases.get(i).copied())
    }

    /// Multiplies every daily value by `factor`, keeping cumulative counts.
    pub fn scaled(&self, factor: f64) -> Self {
        NewCaseSeries {
            new_cases: self.new_cases.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtPoint {
    pub date: NaiveDate,
    pub r_t: f64,
    pub cumulative: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtSeries {
    pub region: String,
    pub points: Vec<RtPoint>,
    /// Included days dropped because the renewal denominator vanished.
    pub zero_denominator_days: Vec<NaiveDate>,
}

impl RtSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// First differences of the cumulative counts; day one keeps its own count.
pub fn new_cases_from_cumulative(series: &CaseSeries) -> NewCaseSeries {
    let mut prev = 0u64;
    let new_cases = series
        .cumulative
        .iter()
        .map(|&c| {
            // CaseSeries guarantees c >= prev.
            let diff = c - prev;
            prev = c;
            diff as f64
        })
        .collect();
    NewCaseSeries {
        region: series.region.clone(),
        start: series.start,
        new_cases,
        cumulative: series.cumulative.clone(),
    }
}

/// Sliding-window mean whose window shrinks at the series boundaries.
pub fn mean_filter(series: &NewCaseSeries, radius: usize) -> NewCaseSeries {
    if radius == 0 {
        return series.clone();
    }
    let values = &series.new_cases;
    let n = values.len();
    let smoothed = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n - 1);
            let window = &values[lo..=hi];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect();
    NewCaseSeries {
        new_cases: smoothed,
        ..series.clone()
    }
}

/// Estimates R_t on every day whose cumulative count reaches `min_cumulative`.
pub fn estimate_rt(
    series: &NewCaseSeries,
    si: &DiscretizedSerialInterval,
    min_cumulative: u64,
) -> RtSeries {
    let c = &series.new_cases;
    let mut points = Vec::new();
    let mut zero_denominator_days = Vec::new();
    for t in 0..c.len() {
        if series.cumulative[t] < min_cumulative {
            continue;
        }
        let earliest = t.saturating_sub(si.horizon());
        let denominator: f64 = (earliest..t).map(|tau| c[tau] * si.weight(t - tau)).sum();
        let date = series.date(t);
        if denominator < DENOMINATOR_FLOOR {
            debug!(
                "{}: renewal denominator vanishes on {}, day omitted",
                series.region, date
            );
            zero_denominator_days.push(date);
            continue;
        }
        points.push(RtPoint {
            date,
            r_t: c[t] / denominator,
            cumulative: series.cumulative[t],
        });
    }
    RtSeries {
        region: series.region.clone(),
        points,
        zero_denominator_days,
    }
}

/// Forward renewal simulation: seed days followed by one day per entry of
/// `r_trajectory`, each `R_t` times the weighted sum of all earlier days.
pub fn simulate_cases(
    r_trajectory: &[f64],
    si: &DiscretizedSerialInterval,
    seed_cases: &[f64],
) -> Result<Vec<f64>> {
    if seed_cases.is_empty() {
        return Err(Error::Domain {
            what: "seed cases",
            value: 0.0,
            reason: "at least one seed day is required",
        });
    }
    if let Some(&bad) = seed_cases.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::Domain {
            what: "seed cases",
            value: bad,
            reason: "seed counts must be positive",
        });
    }
    if let Some(&bad) = r_trajectory.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(Error::Domain {
            what: "reproduction number",
            value: bad,
            reason: "must be non-negative and finite",
        });
    }
    let mut cases = Vec::with_capacity(seed_cases.len() + r_trajectory.len());
    cases.extend_from_slice(seed_cases);
    for &r in r_trajectory {
        let t = cases.len();
        let earliest = t.saturating_sub(si.horizon());
        let pressure: f64 = (earliest..t)
            .map(|tau| cases[tau] * si.weight(t - tau))
            .sum();
        cases.push(r * pressure);
    }
    Ok(cases)
}
