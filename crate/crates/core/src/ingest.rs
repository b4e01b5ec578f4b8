//! Readers for the three raw input files.
//!
//! | file     | columns                                   |
//! |----------|-------------------------------------------|
//! | cases    | `region,date,cumulative_confirmed`        |
//! | measures | `region,measure_code,date`                |
//! | weather  | `region,date,temp_c,humidity_pct`         |
//!
//! Dates are ISO-8601 (`YYYY-MM-DD`). Every malformed line across all files
//! is reported together.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use crate::dataset::{DailyWeather, Measure, MeasureSchedule, WeatherSeries};
use crate::error::{Error, IngestReport, Result};
use crate::rt::CaseSeries;

pub const CASES_HEADER: [&str; 3] = ["region", "date", "cumulative_confirmed"];
pub const MEASURES_HEADER: [&str; 3] = ["region", "measure_code", "date"];
pub const WEATHER_HEADER: [&str; 4] = ["region", "date", "temp_c", "humidity_pct"];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Inputs {
    /// Sorted by region name.
    pub cases: Vec<CaseSeries>,
    pub measures: BTreeMap<String, MeasureSchedule>,
    pub weather: BTreeMap<String, WeatherSeries>,
}

pub fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| format!("invalid date {s:?} (expected YYYY-MM-DD)"))
}

/// Records of a CSV source with their 1-based line numbers. Header problems
/// and unreadable records are pushed to `report`.
fn records<R: Read>(
    input: R,
    path: &Path,
    header: &[&str],
    report: &mut IngestReport,
) -> Vec<(usize, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    match reader.headers() {
        Ok(h) if h.iter().eq(header.iter().copied()) => {}
        Ok(h) => {
            report.push(
                path,
                1,
                format!(
                    "header must be {:?}, found {:?}",
                    header.join(","),
                    h.iter().collect::<Vec<_>>().join(",")
                ),
            );
            return Vec::new();
        }
        Err(e) => {
            report.push(path, 1, format!("unreadable header: {e}"));
            return Vec::new();
        }
    }
    let mut out = Vec::new();
    for record in reader.records() {
        match record {
            Ok(r) => {
                let line = r.position().map_or(0, |p| p.line() as usize);
                if r.iter().all(str::is_empty) {
                    continue;
                }
                if r.len() != header.len() {
                    report.push(
                        path,
                        line,
                        format!("expected {} fields, found {}", header.len(), r.len()),
                    );
                    continue;
                }
                out.push((line, r.iter().map(str::to_string).collect()));
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                report.push(path, line, format!("unreadable record: {e}"));
            }
        }
    }
    out
}

fn open(path: &Path, report: &mut IngestReport) -> Option<File> {
    match File::open(path) {
        Ok(f) => Some(f),
        Err(e) => {
            report.push(path, 0, format!("cannot open: {e}"));
            None
        }
    }
}

pub fn read_cases<R: Read>(input: R, path: &Path, report: &mut IngestReport) -> Vec<CaseSeries> {
    let mut by_region: BTreeMap<String, Vec<(NaiveDate, u64, usize)>> = BTreeMap::new();
    let before = report.issues.len();
    let rows = records(input, path, &CASES_HEADER, report);
    let header_ok = report.issues.len() == before;
    for (line, fields) in rows {
        let date = parse_date(&fields[1]);
        let count = fields[2]
            .parse::<u64>()
            .map_err(|_| format!("invalid cumulative count {:?}", fields[2]));
        match (fields[0].is_empty(), date, count) {
            (true, _, _) => report.push(path, line, "empty region"),
            (_, Err(e), _) | (_, _, Err(e)) => report.push(path, line, e),
            (false, Ok(date), Ok(count)) => by_region
                .entry(fields[0].clone())
                .or_default()
                .push((date, count, line)),
        }
    }
    if by_region.is_empty() && header_ok {
        report.push(path, 0, "no case series found");
    }

    let mut series = Vec::new();
    for (region, mut entries) in by_region {
        entries.sort_by_key(|&(date, _, line)| (date, line));
        let mut ok = true;
        for pair in entries.windows(2) {
            let (prev_date, prev, _) = pair[0];
            let (date, count, line) = pair[1];
            let reason = if date == prev_date {
                Some(format!("{region}: duplicate entry for {date}"))
            } else if date.signed_duration_since(prev_date).num_days() != 1 {
                Some(format!(
                    "{region}: missing days between {prev_date} and {date}"
                ))
            } else if count < prev {
                Some(format!(
                    "{region}: cumulative count decreases on {date} ({prev} -> {count})"
                ))
            } else {
                None
            };
            if let Some(reason) = reason {
                report.push(path, line, reason);
                ok = false;
            }
        }
        if ok {
            let entries = entries.into_iter().map(|(d, c, _)| (d, c)).collect();
            match CaseSeries::new(region, entries) {
                Ok(s) => series.push(s),
                Err(e) => report.push(path, 0, e.to_string()),
            }
        }
    }
    series
}

pub fn read_measures<R: Read>(
    input: R,
    path: &Path,
    report: &mut IngestReport,
) -> BTreeMap<String, MeasureSchedule> {
    let mut schedules: BTreeMap<String, MeasureSchedule> = BTreeMap::new();
    for (line, fields) in records(input, path, &MEASURES_HEADER, report) {
        if fields[0].is_empty() {
            report.push(path, line, "empty region");
            continue;
        }
        let measure = match fields[1].parse::<Measure>() {
            Ok(m) => m,
            Err(e) => {
                report.push(path, line, e);
                continue;
            }
        };
        let date = match parse_date(&fields[2]) {
            Ok(d) => d,
            Err(e) => {
                report.push(path, line, e);
                continue;
            }
        };
        let schedule = schedules
            .entry(fields[0].clone())
            .or_insert_with(|| MeasureSchedule::new(fields[0].clone()));
        match schedule.dates.entry(measure) {
            Entry::Vacant(slot) => {
                slot.insert(date);
            }
            Entry::Occupied(_) => report.push(
                path,
                line,
                format!("{}: measure {} listed more than once", fields[0], measure),
            ),
        }
    }
    schedules
}

pub fn read_weather<R: Read>(
    input: R,
    path: &Path,
    report: &mut IngestReport,
) -> BTreeMap<String, WeatherSeries> {
    let mut series: BTreeMap<String, WeatherSeries> = BTreeMap::new();
    for (line, fields) in records(input, path, &WEATHER_HEADER, report) {
        if fields[0].is_empty() {
            report.push(path, line, "empty region");
            continue;
        }
        let date = match parse_date(&fields[1]) {
            Ok(d) => d,
            Err(e) => {
                report.push(path, line, e);
                continue;
            }
        };
        let (Ok(temperature), Ok(humidity)) = (fields[2].parse::<f64>(), fields[3].parse::<f64>())
        else {
            report.push(
                path,
                line,
                format!("invalid number in {:?} / {:?}", fields[2], fields[3]),
            );
            continue;
        };
        let entry = series
            .entry(fields[0].clone())
            .or_insert_with(|| WeatherSeries::new(fields[0].clone()));
        if let Err(e) = entry.insert(
            date,
            DailyWeather {
                temperature,
                humidity,
            },
        ) {
            report.push(path, line, e.to_string());
        }
    }
    series
}

/// Reads and validates all three input files.
pub fn ingest(cases: &Path, measures: &Path, weather: &Path) -> Result<Inputs> {
    let mut report = IngestReport::default();
    let case_series = open(cases, &mut report)
        .map(|f| read_cases(f, cases, &mut report))
        .unwrap_or_default();
    let schedules = open(measures, &mut report)
        .map(|f| read_measures(f, measures, &mut report))
        .unwrap_or_default();
    let weather_series = open(weather, &mut report)
        .map(|f| read_weather(f, weather, &mut report))
        .unwrap_or_default();
    if !report.is_empty() {
        return Err(Error::Ingest(report));
    }
    Ok(Inputs {
        cases: case_series,
        measures: schedules,
        weather: weather_series,
    })
}

/// Measures and weather only, for stages that start from R_t estimates.
pub fn ingest_context(
    measures: &Path,
    weather: &Path,
) -> Result<(
    BTreeMap<String, MeasureSchedule>,
    BTreeMap<String, WeatherSeries>,
)> {
    let mut report = IngestReport::default();
    let schedules = open(measures, &mut report)
        .map(|f| read_measures(f, measures, &mut report))
        .unwrap_or_default();
    let weather_series = open(weather, &mut report)
        .map(|f| read_weather(f, weather, &mut report))
        .unwrap_or_default();
    if report.is_empty() {
        Ok((schedules, weather_series))
    } else {
        Err(Error::Ingest(report))
    }
}

pub fn ingest_cases(path: &Path) -> Result<Vec<CaseSeries>> {
    let mut report = IngestReport::default();
    let series = open(path, &mut report)
        .map(|f| read_cases(f, path, &mut report))
        .unwrap_or_default();
    if report.is_empty() {
        Ok(series)
    } else {
        Err(Error::Ingest(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cases(text: &str) -> (Vec<CaseSeries>, IngestReport) {
        let mut report = IngestReport::default();
        let s = read_cases(text.as_bytes(), Path::new("cases.csv"), &mut report);
        (s, report)
    }

    #[test]
    fn reads_and_groups_cases() {
        let (s, r) = cases(
            "region,date,cumulative_confirmed\nB,2020-01-23,5\nA,2020-01-22,1\nB,2020-01-22,3\n",
        );
        assert!(r.is_empty(), "{r}");
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].region(), "A");
        assert_eq!(s[1].cumulative(), &[3, 5]);
    }

    #[test]
    fn empty_cases_file() {
        let (_, r) = cases("region,date,cumulative_confirmed\n");
        assert_eq!(r.issues.len(), 1);
        assert!(r.to_string().contains("no case series found"));
    }

    #[test]
    fn every_bad_line_is_reported() {
        let text = "region,date,cumulative_confirmed\n\
                    A,2020-01-22,5\n\
                    A,2020-01-23,4\n\
                    A,22/01/2020,1\n\
                    B,2020-01-22,x\n\
                    C,2020-01-22\n";
        let (s, r) = cases(text);
        let mut lines: Vec<usize> = r.issues.iter().map(|i| i.line).collect();
        lines.sort_unstable();
        assert_eq!(lines, vec![3, 4, 5, 6]);
        let decrease = r.issues.iter().find(|i| i.line == 3).unwrap();
        assert!(decrease.reason.contains("decreases on 2020-01-23"));
        assert!(s.is_empty());
    }

    #[test]
    fn wrong_header() {
        let (_, r) = cases("region,day,count\nA,2020-01-22,1\n");
        assert_eq!(r.issues.len(), 1);
        assert!(r.issues[0].reason.contains("header"));
    }

    #[test]
    fn measures_and_weather() {
        let mut r = IngestReport::default();
        let m = read_measures(
            "region,measure_code,date\nHubei,CL,2020-01-23\nHubei,PTC,2020-01-23\nHubei,CL,2020-01-24\n"
                .as_bytes(),
            Path::new("m.csv"),
            &mut r,
        );
        assert_eq!(
            m["Hubei"].date(Measure::CityLockdown),
            NaiveDate::from_ymd_opt(2020, 1, 23)
        );
        assert_eq!(r.issues.len(), 2);

        let mut r = IngestReport::default();
        let w = read_weather(
            "region,date,temp_c,humidity_pct\nA,2020-02-01,3.5,40\nA,2020-02-02,3.5,140\n"
                .as_bytes(),
            Path::new("w.csv"),
            &mut r,
        );
        assert_eq!(w["A"].len(), 1);
        assert_eq!(r.issues.len(), 1);
        assert_eq!(r.issues[0].line, 3);
    }
}
