//! CSV files passed between pipeline stages.
//!
//! Reals are written in shortest round-trip form so a stage reading a file
//! sees exactly the values the previous stage computed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;

use crate::dataset::{discretize_row, Feature, FeatureRow, Measure};
use crate::error::{Error, IngestReport, Result};
use crate::explain::{Method, RankedFeature};
use crate::ingest::parse_date;
use crate::report::RowTopK;
use crate::rt::{nth_day, NewCaseSeries, RtPoint, RtSeries};

/// Per-region daily series produced by the estimation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionEstimate {
    pub raw: NewCaseSeries,
    pub smoothed: NewCaseSeries,
    pub rt: RtSeries,
}

pub const RT_HEADER: &str = "region,date,cumulative,new_cases,smoothed_new_cases,r_t";

/// One line per observed day; `r_t` is empty where no estimate exists.
pub fn render_rt(estimates: &[RegionEstimate]) -> String {
    let mut out = format!("{RT_HEADER}\n");
    for e in estimates {
        let by_date: BTreeMap<NaiveDate, f64> =
            e.rt.points.iter().map(|p| (p.date, p.r_t)).collect();
        for i in 0..e.raw.len() {
            let date = e.raw.date(i);
            let r_t = by_date
                .get(&date)
                .map(|r| r.to_string())
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.raw.region(),
                date,
                e.raw.cumulative()[i],
                e.raw.new_cases()[i],
                e.smoothed.new_cases()[i],
                r_t
            );
        }
    }
    out
}

fn read_csv(path: &Path, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut report = IngestReport::default();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    let expected: Vec<&str> = header.split(',').collect();
    let found = reader
        .headers()
        .map(|h| h.iter().map(str::to_string).collect::<Vec<_>>())
        .unwrap_or_default();
    if found != expected {
        report.push(path, 1, format!("header must be {header:?}"));
        return Err(Error::Ingest(report));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        match record {
            Ok(r) => rows.push((
                r.position().map_or(0, |p| p.line() as usize),
                r.iter().map(str::to_string).collect(),
            )),
            Err(e) => report.push(
                path,
                e.position().map_or(0, |p| p.line() as usize),
                e.to_string(),
            ),
        }
    }
    if report.is_empty() {
        Ok(rows)
    } else {
        Err(Error::Ingest(report))
    }
}

fn field<T: std::str::FromStr>(
    report: &mut IngestReport,
    path: &Path,
    line: usize,
    value: &str,
    what: &str,
) -> Option<T> {
    match value.parse() {
        Ok(v) => Some(v),
        Err(_) => {
            report.push(path, line, format!("invalid {what} {value:?}"));
            None
        }
    }
}

pub fn read_rt(path: &Path) -> Result<Vec<RegionEstimate>> {
    let rows = read_csv(path, RT_HEADER)?;
    let mut report = IngestReport::default();
    type Day = (NaiveDate, u64, f64, f64, Option<f64>);
    let mut regions: BTreeMap<String, Vec<Day>> = BTreeMap::new();
    for (line, f) in rows {
        let date = match parse_date(&f[1]) {
            Ok(d) => d,
            Err(e) => {
                report.push(path, line, e);
                continue;
            }
        };
        let cumulative = field::<u64>(&mut report, path, line, &f[2], "cumulative count");
        let raw = field::<f64>(&mut report, path, line, &f[3], "new cases");
        let smoothed = field::<f64>(&mut report, path, line, &f[4], "smoothed new cases");
        let r_t = if f[5].is_empty() {
            Some(None)
        } else {
            field::<f64>(&mut report, path, line, &f[5], "r_t").map(Some)
        };
        if let (Some(c), Some(n), Some(s), Some(r)) = (cumulative, raw, smoothed, r_t) {
            regions
                .entry(f[0].clone())
                .or_default()
                .push((date, c, n, s, r));
        }
    }
    let mut estimates = Vec::new();
    for (region, days) in regions {
        let start = days[0].0;
        if days
            .iter()
            .enumerate()
            .any(|(i, d)| d.0 != nth_day(start, i))
        {
            report.push(
                path,
                0,
                format!("{region}: days are not consecutive and ordered"),
            );
            continue;
        }
        let cumulative: Vec<u64> = days.iter().map(|d| d.1).collect();
        let points = days
            .iter()
            .filter_map(|d| {
                d.4.map(|r_t| RtPoint {
                    date: d.0,
                    r_t,
                    cumulative: d.1,
                })
            })
            .collect();
        estimates.push(RegionEstimate {
            raw: NewCaseSeries::from_parts(
                &region,
                start,
                days.iter().map(|d| d.2).collect(),
                cumulative.clone(),
            ),
            smoothed: NewCaseSeries::from_parts(
                &region,
                start,
                days.iter().map(|d| d.3).collect(),
                cumulative,
            ),
            rt: RtSeries {
                region,
                points,
                zero_denominator_days: Vec::new(),
            },
        });
    }
    if report.is_empty() {
        Ok(estimates)
    } else {
        Err(Error::Ingest(report))
    }
}

pub fn dataset_header() -> String {
    let mut cols = vec!["region".to_string(), "date".into(), "r_t".into()];
    cols.extend(Feature::ALL.iter().map(|f| f.symbol().to_string()));
    cols.extend(Feature::ALL.iter().map(|f| format!("code_{}", f.symbol())));
    cols.join(",")
}

pub fn render_dataset(rows: &[FeatureRow]) -> String {
    let mut out = dataset_header();
    out.push('\n');
    for row in rows {
        let codes = discretize_row(row).codes;
        let _ = write!(
            out,
            "{},{},{},{}",
            row.region, row.date, row.r_t, row.new_cases
        );
        for m in Measure::ALL {
            let _ = write!(out, ",{}", row.days_since(m));
        }
        let _ = write!(out, ",{},{}", row.temperature, row.humidity);
        for c in codes {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

/// Reads continuous feature rows; the code columns are recomputed, not trusted.
pub fn read_dataset(path: &Path) -> Result<Vec<FeatureRow>> {
    let rows = read_csv(path, &dataset_header())?;
    let mut report = IngestReport::default();
    let mut out = Vec::with_capacity(rows.len());
    for (line, f) in rows {
        let date = match parse_date(&f[1]) {
            Ok(d) => d,
            Err(e) => {
                report.push(path, line, e);
                continue;
            }
        };
        let r_t = field::<f64>(&mut report, path, line, &f[2], "r_t");
        let nc = field::<f64>(&mut report, path, line, &f[3], "new cases");
        let mut days = [0u32; 7];
        let mut ok = true;
        for (i, d) in days.iter_mut().enumerate() {
            match field::<u32>(&mut report, path, line, &f[4 + i], "day count") {
                Some(v) => *d = v,
                None => ok = false,
            }
        }
        let t = field::<f64>(&mut report, path, line, &f[11], "temperature");
        let h = field::<f64>(&mut report, path, line, &f[12], "humidity");
        if let (true, Some(r_t), Some(nc), Some(t), Some(h)) = (ok, r_t, nc, t, h) {
            out.push(FeatureRow {
                region: f[0].clone(),
                date,
                r_t,
                new_cases: nc,
                days_since: days,
                temperature: t,
                humidity: h,
            });
        }
    }
    if report.is_empty() {
        Ok(out)
    } else {
        Err(Error::Ingest(report))
    }
}

pub const EXPLANATIONS_HEADER: &str = "region,date,theta,method,rank,feature,code,value_score";

pub fn render_explanations(rows: &[RowTopK]) -> String {
    let mut out = format!("{EXPLANATIONS_HEADER}\n");
    for row in rows {
        for (rank, r) in row.ranked.iter().enumerate() {
            let feature = Feature::from_index(r.feature)
                .map(|f| f.symbol().to_string())
                .unwrap_or_else(|| r.feature.to_string());
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.region,
                row.date,
                row.theta,
                row.method,
                rank + 1,
                feature,
                r.code,
                r.score
            );
        }
    }
    out
}

/// Reads explanation records back into per-row rankings. New-case counts
/// are looked up in `new_cases` by (region, date), 0 when absent.
pub fn read_explanations(
    path: &Path,
    new_cases: &BTreeMap<(String, NaiveDate), f64>,
) -> Result<Vec<RowTopK>> {
    let rows = read_csv(path, EXPLANATIONS_HEADER)?;
    let mut report = IngestReport::default();
    let mut out: Vec<RowTopK> = Vec::new();
    for (line, f) in rows {
        let date = parse_date(&f[1])
            .map_err(|e| report.push(path, line, e))
            .ok();
        let theta = field::<f64>(&mut report, path, line, &f[2], "theta");
        let method = field::<Method>(&mut report, path, line, &f[3], "method");
        let rank = field::<usize>(&mut report, path, line, &f[4], "rank");
        let feature = Feature::from_symbol(&f[5]);
        if feature.is_none() {
            report.push(path, line, format!("unknown feature {:?}", f[5]));
        }
        let code = field::<u8>(&mut report, path, line, &f[6], "code");
        let score = field::<f64>(&mut report, path, line, &f[7], "score");
        let (
            Some(date),
            Some(theta),
            Some(method),
            Some(rank),
            Some(feature),
            Some(code),
            Some(score),
        ) = (date, theta, method, rank, feature, code, score)
        else {
            continue;
        };
        let ranked = RankedFeature {
            feature: feature.index(),
            code,
            score,
        };
        let same_row = out.last().is_some_and(|r| {
            r.region == f[0] && r.date == date && r.theta == theta && r.method == method
        });
        if same_row && rank == out.last().map_or(0, |r| r.ranked.len()) + 1 {
            out.last_mut().expect("checked").ranked.push(ranked);
        } else if rank == 1 {
            out.push(RowTopK {
                region: f[0].clone(),
                date,
                theta,
                method,
                new_cases: new_cases.get(&(f[0].clone(), date)).copied().unwrap_or(0.0),
                ranked: vec![ranked],
            });
        } else {
            report.push(path, line, format!("rank {rank} out of sequence"));
        }
    }
    if report.is_empty() {
        Ok(out)
    } else {
        Err(Error::Ingest(report))
    }
}
