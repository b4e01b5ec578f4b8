//! Aggregation of per-row top-k explanations into count tables, and the
//! CSV files that hold them.
//!
//! Every table is written as UTF-8 CSV with a header row, `.` as decimal
//! separator and six fixed decimals, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::dataset::{new_case_code, Feature};
use crate::error::{Error, Result};
use crate::explain::{Method, RankedFeature};
use crate::models::EvalReport;

/// Daily new-case ranges used to stratify the aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NcStratum {
    /// [0, 10)
    Low,
    /// [10, 100)
    Mid,
    /// [100, inf)
    High,
}

impl NcStratum {
    pub const ALL: [NcStratum; 3] = [NcStratum::Low, NcStratum::Mid, NcStratum::High];

    pub fn of(new_cases: f64) -> NcStratum {
        match new_case_code(new_cases) {
            0 => NcStratum::Low,
            1 => NcStratum::Mid,
            _ => NcStratum::High,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NcStratum::Low => "0-10",
            NcStratum::Mid => "10-100",
            NcStratum::High => "100-inf",
        }
    }
}

/// Top-ranked feature-values for one explained row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowTopK {
    pub region: String,
    pub date: NaiveDate,
    pub theta: f64,
    pub method: Method,
    pub new_cases: f64,
    /// Best first; may hold more than the `k` being aggregated.
    pub ranked: Vec<RankedFeature>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCounts {
    pub theta: f64,
    pub k: usize,
    pub method: Method,
    pub stratum: Option<NcStratum>,
    /// Rows that passed the stratum filter.
    pub rows: usize,
    pub counts: BTreeMap<(Feature, u8), u64>,
}

impl AggregateCounts {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, feature: Feature, code: u8) -> u64 {
        self.counts.get(&(feature, code)).copied().unwrap_or(0)
    }

    /// Counts summed over codes, per feature.
    pub fn by_feature(&self) -> BTreeMap<Feature, u64> {
        let mut out: BTreeMap<Feature, u64> = Feature::ALL.iter().map(|&f| (f, 0)).collect();
        for (&(f, _), &c) in &self.counts {
            *out.entry(f).or_default() += c;
        }
        out
    }

    /// Entries ordered by descending count, then feature order, then code.
    pub fn ranked(&self) -> Vec<((Feature, u8), u64)> {
        let mut entries: Vec<_> = self.counts.iter().map(|(&k, &v)| (k, v)).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        entries
    }

    pub fn file_name(&self) -> String {
        let mut name = format!("top{}_theta{}_{}", self.k, self.theta, self.method);
        if let Some(s) = self.stratum {
            name.push_str("_nc");
            name.push_str(s.label());
        }
        name.push_str(".csv");
        name
    }
}

/// Counts how often each feature-value appears among the first `k` entries
/// of every row, optionally restricted to one new-case stratum.
pub fn aggregate(
    theta: f64,
    k: usize,
    method: Method,
    rows: &[RowTopK],
    stratum: Option<NcStratum>,
) -> Result<AggregateCounts> {
    let mut counts = BTreeMap::new();
    let mut n_rows = 0;
    for row in rows {
        if row.theta != theta || row.method != method {
            return Err(Error::Config(format!(
                "cannot aggregate {} rows at theta {} into a {} table at theta {}",
                row.method, row.theta, method, theta
            )));
        }
        if stratum.is_some_and(|s| NcStratum::of(row.new_cases) != s) {
            continue;
        }
        n_rows += 1;
        for r in row.ranked.iter().take(k) {
            let feature = Feature::from_index(r.feature).ok_or_else(|| {
                Error::Config(format!("feature index {} out of range", r.feature))
            })?;
            *counts.entry((feature, r.code)).or_default() += 1;
        }
    }
    Ok(AggregateCounts {
        theta,
        k,
        method,
        stratum,
        rows: n_rows,
        counts,
    })
}

pub fn render_counts(counts: &AggregateCounts) -> String {
    let total = counts.total() as f64;
    let mut out = String::from("feature,code,count,fraction\n");
    for ((feature, code), count) in counts.ranked() {
        let _ = writeln!(
            out,
            "{},{},{},{:.6}",
            feature,
            code,
            count,
            count as f64 / total
        );
    }
    out
}

/// One held-out evaluation of one model family.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub model: String,
    pub theta: f64,
    pub seed: u64,
    pub report: EvalReport,
}

pub fn render_evaluation(records: &[EvalRecord]) -> String {
    let mut out = String::from(
        "model,theta,seed,true_positive,false_positive,false_negative,true_negative,precision,recall\n",
    );
    for r in records {
        let e = &r.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6},{:.6}",
            r.model,
            r.theta,
            r.seed,
            e.true_positive,
            e.false_positive,
            e.false_negative,
            e.true_negative,
            e.precision(),
            e.recall()
        );
    }
    out
}

/// Mean precision and recall per (model, theta), in first-seen order.
pub fn summarize_evaluation(records: &[EvalRecord]) -> Vec<(String, f64, usize, f64, f64)> {
    let mut groups: Vec<(String, f64, Vec<&EvalReport>)> = Vec::new();
    for r in records {
        match groups
            .iter_mut()
            .find(|(m, t, _)| *m == r.model && *t == r.theta)
        {
            Some(g) => g.2.push(&r.report),
            None => groups.push((r.model.clone(), r.theta, vec![&r.report])),
        }
    }
    groups
        .into_iter()
        .map(|(model, theta, reports)| {
            let n = reports.len() as f64;
            let precision = reports.iter().map(|e| e.precision()).sum::<f64>() / n;
            let recall = reports.iter().map(|e| e.recall()).sum::<f64>() / n;
            (model, theta, reports.len(), precision, recall)
        })
        .collect()
}

pub fn render_evaluation_summary(records: &[EvalRecord]) -> String {
    let mut out = String::from("model,theta,seeds,mean_precision,mean_recall\n");
    for (model, theta, n, p, r) in summarize_evaluation(records) {
        let _ = writeln!(out, "{model},{theta},{n},{p:.6},{r:.6}");
    }
    out
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes one CSV per count table, plus `evaluation.csv` and
/// `evaluation_summary.csv` when evaluation records are given.
pub fn emit_report(
    tables: &[AggregateCounts],
    evaluation: Option<&[EvalRecord]>,
    destination: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(destination).map_err(|e| Error::io(destination, e))?;
    let mut written = Vec::new();
    for table in tables {
        let path = destination.join(table.file_name());
        write_file(&path, &render_counts(table))?;
        written.push(path);
    }
    if let Some(records) = evaluation {
        let path = destination.join("evaluation.csv");
        write_file(&path, &render_evaluation(records))?;
        written.push(path);
        let path = destination.join("evaluation_summary.csv");
        write_file(&path, &render_evaluation_summary(records))?;
        written.push(path);
    }
    Ok(written)
}
