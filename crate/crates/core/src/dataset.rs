//! Region-day feature rows: days since each control measure, new cases and
//! weather, binned into small ordinal category codes and labelled by whether
//! R_t falls below a threshold.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use log::warn;

use crate::error::{Error, Result};
use crate::models::CategoricalData;
use crate::rt::{NewCaseSeries, RtSeries};

/// Non-pharmaceutical control measures, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Measure {
    GovernmentAdvocation,
    MaskUse,
    SchoolClosure,
    CityLockdown,
    MassTesting,
    TravelBan,
    ContactTracing,
}

impl Measure {
    pub const ALL: [Measure; 7] = [
        Measure::GovernmentAdvocation,
        Measure::MaskUse,
        Measure::SchoolClosure,
        Measure::CityLockdown,
        Measure::MassTesting,
        Measure::TravelBan,
        Measure::ContactTracing,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Measure::GovernmentAdvocation => "GA",
            Measure::MaskUse => "MU",
            Measure::SchoolClosure => "SC",
            Measure::CityLockdown => "CL",
            Measure::MassTesting => "MT",
            Measure::TravelBan => "ITB",
            Measure::ContactTracing => "CT",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Measure::ALL
            .into_iter()
            .find(|m| m.code() == s)
            .ok_or_else(|| {
                format!("unknown measure code {s:?} (expected one of GA, MU, SC, CL, MT, ITB, CT)")
            })
    }
}

/// The ten model features, in their fixed column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    NewCases,
    GovernmentAdvocation,
    MaskUse,
    SchoolClosure,
    CityLockdown,
    MassTesting,
    TravelBan,
    ContactTracing,
    Temperature,
    Humidity,
}

pub const FEATURE_COUNT: usize = 10;

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::NewCases,
        Feature::GovernmentAdvocation,
        Feature::MaskUse,
        Feature::SchoolClosure,
        Feature::CityLockdown,
        Feature::MassTesting,
        Feature::TravelBan,
        Feature::ContactTracing,
        Feature::Temperature,
        Feature::Humidity,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Feature::NewCases => "NC",
            Feature::Temperature => "T",
            Feature::Humidity => "H",
            other => other.measure().expect("measure feature").code(),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Number of category codes the feature is binned into.
    pub fn arity(self) -> u8 {
        match self {
            Feature::NewCases | Feature::Humidity => 3,
            Feature::Temperature => 4,
            _ => 5,
        }
    }

    pub fn measure(self) -> Option<Measure> {
        match self {
            Feature::GovernmentAdvocation => Some(Measure::GovernmentAdvocation),
            Feature::MaskUse => Some(Measure::MaskUse),
            Feature::SchoolClosure => Some(Measure::SchoolClosure),
            Feature::CityLockdown => Some(Measure::CityLockdown),
            Feature::MassTesting => Some(Measure::MassTesting),
            Feature::TravelBan => Some(Measure::TravelBan),
            Feature::ContactTracing => Some(Measure::ContactTracing),
            _ => None,
        }
    }

    pub fn from_index(index: usize) -> Option<Feature> {
        Feature::ALL.get(index).copied()
    }

    pub fn from_symbol(symbol: &str) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| f.symbol() == symbol)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Implementation dates of the control measures in one region.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MeasureSchedule {
    pub region: String,
    pub dates: BTreeMap<Measure, NaiveDate>,
}

impl MeasureSchedule {
    pub fn new(region: impl Into<String>) -> Self {
        MeasureSchedule {
            region: region.into(),
            dates: BTreeMap::new(),
        }
    }

    pub fn with(mut self, measure: Measure, date: NaiveDate) -> Self {
        self.dates.insert(measure, date);
        self
    }

    pub fn date(&self, measure: Measure) -> Option<NaiveDate> {
        self.dates.get(&measure).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyWeather {
    pub temperature: f64,
    pub humidity: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeatherSeries {
    region: String,
    days: BTreeMap<NaiveDate, DailyWeather>,
}

impl WeatherSeries {
    pub fn new(region: impl Into<String>) -> Self {
        WeatherSeries {
            region: region.into(),
            days: BTreeMap::new(),
        }
    }

    /// Adds one day; humidity must lie in [0, 100] and temperature be finite.
    pub fn insert(&mut self, date: NaiveDate, weather: DailyWeather) -> Result<()> {
        if !weather.temperature.is_finite() {
            return Err(Error::Domain {
                what: "temperature",
                value: weather.temperature,
                reason: "must be finite",
            });
        }
        if !(0.0..=100.0).contains(&weather.humidity) {
            return Err(Error::Domain {
                what: "humidity",
                value: weather.humidity,
                reason: "must lie in [0, 100] percent",
            });
        }
        if self.days.insert(date, weather).is_some() {
            return Err(Error::DataIntegrity {
                region: self.region.clone(),
                reason: format!("duplicate weather entry for {date}"),
            });
        }
        Ok(())
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn get(&self, date: NaiveDate) -> Option<DailyWeather> {
        self.days.get(&date).copied()
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }
}

/// One region-day with continuous feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub region: String,
    pub date: NaiveDate,
    pub r_t: f64,
    pub new_cases: f64,
    /// Days since each measure, indexed by [`Measure::index`]; 0 = not in force.
    pub days_since: [u32; 7],
    pub temperature: f64,
    pub humidity: f64,
}

impl FeatureRow {
    pub fn days_since(&self, measure: Measure) -> u32 {
        self.days_since[measure.index()]
    }
}

/// One region-day with every feature replaced by its category code.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRow {
    pub region: String,
    pub date: NaiveDate,
    pub r_t: f64,
    /// Raw new cases, kept for stratified reporting.
    pub new_cases: f64,
    pub codes: [u8; FEATURE_COUNT],
}

impl DiscreteRow {
    pub fn code(&self, feature: Feature) -> u8 {
        self.codes[feature.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRow {
    pub row: DiscreteRow,
    /// True iff R_t is strictly below the dataset threshold.
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub theta: f64,
    pub rows: Vec<LabeledRow>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows with R_t below the threshold.
    pub fn count_below(&self) -> usize {
        self.rows.iter().filter(|r| r.label).count()
    }

    pub fn count_at_or_above(&self) -> usize {
        self.len() - self.count_below()
    }

    /// The rows as a plain categorical matrix for the classifiers.
    pub fn to_categorical(&self) -> CategoricalData {
        CategoricalData::new(
            Feature::ALL
                .iter()
                .map(|f| f.symbol().to_string())
                .collect(),
            Feature::ALL.iter().map(|f| f.arity()).collect(),
            self.rows.iter().map(|r| r.row.codes.to_vec()).collect(),
            self.rows.iter().map(|r| r.label).collect(),
        )
        .expect("discretized rows respect feature arities")
    }
}

/// Days a measure has been in force on `current`, counting the
/// implementation day as day 1. Zero when absent or not yet implemented.
pub fn days_since(implemented: Option<NaiveDate>, current: NaiveDate) -> u32 {
    match implemented {
        Some(start) if current >= start => (current - start).num_days() as u32 + 1,
        _ => 0,
    }
}

/// Joins R_t estimates with new cases, measures and weather. Days without a
/// weather record or a new-case value are dropped and logged.
pub fn assemble_rows(
    rt: &RtSeries,
    new_cases: &NewCaseSeries,
    measures: &MeasureSchedule,
    weather: &WeatherSeries,
) -> Result<Vec<FeatureRow>> {
    let region = &rt.region;
    for (what, other) in [
        ("new-case series", new_cases.region()),
        ("measure schedule", measures.region.as_str()),
        ("weather series", weather.region()),
    ] {
        if other != region {
            return Err(Error::Config(format!(
                "region mismatch: R_t series is for {region:?} but {what} is for {other:?}"
            )));
        }
    }

    let mut rows = Vec::with_capacity(rt.len());
    let mut dropped = 0usize;
    for point in &rt.points {
        let (Some(w), Some(nc)) = (weather.get(point.date), new_cases.on(point.date)) else {
            dropped += 1;
            continue;
        };
        let mut days = [0u32; 7];
        for m in Measure::ALL {
            days[m.index()] = days_since(measures.date(m), point.date);
        }
        rows.push(FeatureRow {
            region: region.clone(),
            date: point.date,
            r_t: point.r_t,
            new_cases: nc,
            days_since: days,
            temperature: w.temperature,
            humidity: w.humidity,
        });
    }
    if dropped > 0 {
        warn!("{region}: {dropped} R_t day(s) dropped for missing weather or case data");
    }
    Ok(rows)
}

const NEW_CASE_EDGES: [f64; 2] = [10.0, 100.0];
const MEASURE_EDGES: [f64; 4] = [1.0, 5.0, 10.0, 15.0];
const TEMPERATURE_EDGES: [f64; 3] = [0.0, 10.0, 20.0];
const HUMIDITY_EDGES: [f64; 2] = [40.0, 80.0];

// Half-open bins [edge_i, edge_{i+1}); values on an edge go up.
fn bin(value: f64, edges: &[f64]) -> u8 {
    edges.iter().take_while(|&&edge| value >= edge).count() as u8
}

pub fn new_case_code(new_cases: f64) -> u8 {
    bin(new_cases, &NEW_CASE_EDGES)
}

pub fn measure_code(days: u32) -> u8 {
    bin(days as f64, &MEASURE_EDGES)
}

pub fn temperature_code(celsius: f64) -> u8 {
    bin(celsius, &TEMPERATURE_EDGES)
}

pub fn humidity_code(percent: f64) -> u8 {
    bin(percent, &HUMIDITY_EDGES)
}

pub fn discretize_row(row: &FeatureRow) -> DiscreteRow {
    let mut codes = [0u8; FEATURE_COUNT];
    codes[Feature::NewCases.index()] = new_case_code(row.new_cases);
    for m in Measure::ALL {
        // measure features follow NewCases in the same order as Measure::ALL
        codes[1 + m.index()] = measure_code(row.days_since(m));
    }
    codes[Feature::Temperature.index()] = temperature_code(row.temperature);
    codes[Feature::Humidity.index()] = humidity_code(row.humidity);
    DiscreteRow {
        region: row.region.clone(),
        date: row.date,
        r_t: row.r_t,
        new_cases: row.new_cases,
        codes,
    }
}

/// Labels each row `true` iff its R_t is strictly below `theta`.
pub fn label_rows(rows: Vec<DiscreteRow>, theta: f64) -> Result<LabeledDataset> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::Domain {
            what: "threshold theta",
            value: theta,
            reason: "must be positive",
        });
    }
    let rows = rows
        .into_iter()
        .map(|row| LabeledRow {
            label: row.r_t < theta,
            row,
        })
        .collect();
    Ok(LabeledDataset { theta, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rt::RtPoint;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn row(values: [f64; 10]) -> FeatureRow {
        let mut days = [0u32; 7];
        for i in 0..7 {
            days[i] = values[1 + i] as u32;
        }
        FeatureRow {
            region: "R".into(),
            date: d(2020, 3, 1),
            r_t: 1.0,
            new_cases: values[0],
            days_since: days,
            temperature: values[8],
            humidity: values[9],
        }
    }

    #[test]
    fn feature_layout_matches_measures() {
        for m in Measure::ALL {
            assert_eq!(Feature::ALL[1 + m.index()].measure(), Some(m));
        }
        assert_eq!(Feature::from_symbol("ITB"), Some(Feature::TravelBan));
        assert_eq!("CT".parse::<Measure>(), Ok(Measure::ContactTracing));
        assert!("PTC".parse::<Measure>().is_err());
    }

    #[test]
    fn days_since_examples() {
        assert_eq!(days_since(None, d(2020, 2, 8)), 0);
        assert_eq!(days_since(Some(d(2020, 1, 23)), d(2020, 1, 23)), 1);
        assert_eq!(days_since(Some(d(2020, 1, 23)), d(2020, 2, 8)), 17);
        assert_eq!(days_since(Some(d(2020, 3, 28)), d(2020, 2, 8)), 0);
    }

    #[test]
    fn discretize_all_lowest() {
        let r = discretize_row(&row([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -5.0, 0.0]));
        assert_eq!(r.codes, [0; 10]);
    }

    #[test]
    fn bin_edges_go_up() {
        assert_eq!(temperature_code(20.0), 3);
        assert_eq!(temperature_code(-0.0), 1);
        assert_eq!(temperature_code(-1e-9), 0);
        assert_eq!(measure_code(15), 4);
        assert_eq!(measure_code(14), 3);
        assert_eq!(measure_code(1), 1);
        assert_eq!(new_case_code(100.0), 2);
        assert_eq!(new_case_code(9.999), 0);
        assert_eq!(humidity_code(80.0), 2);
        assert_eq!(humidity_code(100.0), 2);
    }

    #[test]
    fn labels_use_strict_inequality() {
        let mk = |r_t| DiscreteRow {
            region: "R".into(),
            date: d(2020, 2, 8),
            r_t,
            new_cases: 0.0,
            codes: [0; 10],
        };
        let ds = label_rows(vec![mk(0.72), mk(1.34), mk(1.0)], 1.0).unwrap();
        let labels: Vec<bool> = ds.rows.iter().map(|r| r.label).collect();
        assert_eq!(labels, vec![true, false, false]);
        assert_eq!(ds.count_below(), 1);
        assert_eq!(ds.count_at_or_above(), 2);
        assert!(label_rows(vec![], 0.0).is_err());
    }

    fn guangdong() -> MeasureSchedule {
        use Measure::*;
        MeasureSchedule::new("Guangdong")
            .with(GovernmentAdvocation, d(2020, 1, 23))
            .with(MaskUse, d(2020, 1, 26))
            .with(SchoolClosure, d(2020, 1, 22))
            .with(CityLockdown, d(2020, 1, 24))
            .with(MassTesting, d(2020, 1, 23))
            .with(TravelBan, d(2020, 3, 28))
            .with(ContactTracing, d(2020, 1, 23))
    }

    #[test]
    fn assemble_inner_joins_on_weather() {
        let rt = RtSeries {
            region: "Guangdong".into(),
            points: vec![
                RtPoint {
                    date: d(2020, 2, 7),
                    r_t: 0.8,
                    cumulative: 1000,
                },
                RtPoint {
                    date: d(2020, 2, 8),
                    r_t: 0.72,
                    cumulative: 1050,
                },
            ],
            zero_denominator_days: vec![],
        };
        let nc = NewCaseSeries::from_daily("Guangdong", d(2020, 2, 7), vec![60.0, 53.0]);
        let mut weather = WeatherSeries::new("Guangdong");
        weather
            .insert(
                d(2020, 2, 8),
                DailyWeather {
                    temperature: 15.89,
                    humidity: 62.66,
                },
            )
            .unwrap();
        let rows = assemble_rows(&rt, &nc, &guangdong(), &weather).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.date, d(2020, 2, 8));
        assert_eq!((r.r_t, r.new_cases), (0.72, 53.0));
        assert_eq!(r.days_since, [17, 14, 18, 16, 17, 0, 17]);
        assert_eq!((r.temperature, r.humidity), (15.89, 62.66));
    }

    #[test]
    fn assemble_rejects_region_mismatch_and_handles_empty() {
        let rt = RtSeries {
            region: "A".into(),
            points: vec![],
            zero_denominator_days: vec![],
        };
        let nc = NewCaseSeries::from_daily("A", d(2020, 2, 7), vec![]);
        let rows = assemble_rows(
            &rt,
            &nc,
            &MeasureSchedule::new("A"),
            &WeatherSeries::new("A"),
        );
        assert!(rows.unwrap().is_empty());
        let err = assemble_rows(&rt, &nc, &guangdong(), &WeatherSeries::new("A")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn weather_validation() {
        let mut w = WeatherSeries::new("A");
        let day = d(2020, 2, 1);
        assert!(w
            .insert(
                day,
                DailyWeather {
                    temperature: 1.0,
                    humidity: 101.0
                }
            )
            .is_err());
        assert!(w
            .insert(
                day,
                DailyWeather {
                    temperature: 1.0,
                    humidity: 50.0
                }
            )
            .is_ok());
        assert!(w
            .insert(
                day,
                DailyWeather {
                    temperature: 1.0,
                    humidity: 50.0
                }
            )
            .is_err());
    }

    proptest! {
        #[test]
        fn discretization_is_total_and_monotone(
            nc in 0.0f64..1e6, days in 0u32..400, t in -60.0f64..60.0, h in 0.0f64..=100.0,
            bump in 0.0f64..50.0,
        ) {
            let base = row([nc, days as f64, days as f64, 0.0, 0.0, 0.0, 0.0, 0.0, t, h]);
            let up = row([nc + bump, (days + bump as u32) as f64, days as f64, 0.0, 0.0, 0.0, 0.0, 0.0,
                t + bump, (h + bump).min(100.0)]);
            let a = discretize_row(&base);
            let b = discretize_row(&up);
            for f in Feature::ALL {
                prop_assert!(a.code(f) < f.arity());
                prop_assert!(a.code(f) <= b.code(f));
            }
        }
    }
}
