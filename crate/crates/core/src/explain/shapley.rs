//! Exact Shapley values by coalition enumeration.
//!
//! The characteristic function is the interventional expectation
//! `v(S) = mean_b score(x_S, b_{not S})` over a background set, and
//! `phi_i = sum_{S without i} |S|! (F-|S|-1)! / F! * (v(S + i) - v(S))`.
//! Enumeration is 2^F, so at most 16 features are accepted.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::RankedFeature;
use crate::error::{Error, Result};
use crate::models::{Classifier, CoalitionEvaluator};

pub const MAX_SHAPLEY_FEATURES: usize = 16;

/// Background rows with duplicates merged into integer weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Background {
    rows: Vec<Vec<u8>>,
    weights: Vec<u32>,
    total: u64,
}

impl Background {
    pub fn new<'a>(rows: impl IntoIterator<Item = &'a [u8]>) -> Result<Self> {
        let mut merged: BTreeMap<&[u8], u32> = BTreeMap::new();
        for row in rows {
            *merged.entry(row).or_default() += 1;
        }
        if merged.is_empty() {
            return Err(Error::Explanation("background set is empty".into()));
        }
        let width = merged.keys().next().map_or(0, |r| r.len());
        if merged.keys().any(|r| r.len() != width) {
            return Err(Error::Explanation("background rows differ in width".into()));
        }
        let total = merged.values().map(|&w| w as u64).sum();
        let (rows, weights) = merged.into_iter().map(|(r, w)| (r.to_vec(), w)).unzip();
        Ok(Background {
            rows,
            weights,
            total,
        })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        Background::new(rows.iter().map(Vec::as_slice))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u8], u32)> {
        self.rows
            .iter()
            .map(Vec::as_slice)
            .zip(self.weights.iter().copied())
    }

    /// Number of rows before merging duplicates.
    pub fn total_weight(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }
}

/// Shapley attribution of one prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    /// One entry per feature, in feature order; `score` holds phi.
    pub values: Vec<RankedFeature>,
    /// v(empty set): mean background score.
    pub base_value: f64,
    pub prediction_score: f64,
}

impl Attribution {
    pub fn phi(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.score).collect()
    }
}

/// v(S) for every mask by direct evaluation of the mixed rows.
pub fn enumerate_coalition_values<C: Classifier + ?Sized>(
    model: &C,
    row: &[u8],
    background: &Background,
) -> Vec<f64> {
    let f = row.len();
    let total = background.total_weight() as f64;
    (0..1usize << f)
        .into_par_iter()
        .map(|mask| {
            let mut mixed = vec![0u8; f];
            let mut sum = 0.0;
            for (bg, weight) in background.iter() {
                for i in 0..f {
                    mixed[i] = if mask & (1 << i) != 0 { row[i] } else { bg[i] };
                }
                sum += weight as f64 * model.score(&mixed);
            }
            sum / total
        })
        .collect()
}

/// Subset-formula Shapley values from a full table of coalition values.
pub fn shapley_from_values(values: &[f64], n_features: usize) -> Vec<f64> {
    assert_eq!(
        values.len(),
        1 << n_features,
        "need one value per coalition"
    );
    // weight[s] = s! (F - s - 1)! / F!
    let weight: Vec<f64> = (0..n_features)
        .map(|s| {
            let mut w = 1.0 / n_features as f64;
            // 1/F * 1/C(F-1, s)
            for j in 0..s {
                w *= (j + 1) as f64 / (n_features - 1 - j) as f64;
            }
            w
        })
        .collect();
    (0..n_features)
        .map(|i| {
            let bit = 1usize << i;
            (0..values.len())
                .filter(|mask| mask & bit == 0)
                .map(|mask| {
                    weight[mask.count_ones() as usize] * (values[mask | bit] - values[mask])
                })
                .sum()
        })
        .collect()
}

/// Exact Shapley attributions of one model against one background, with
/// any per-background preparation done once.
pub struct ShapleyExplainer<'a> {
    n_features: usize,
    evaluate: CoalitionEvaluator<'a>,
}

impl<'a> ShapleyExplainer<'a> {
    pub fn new<C: Classifier + ?Sized>(model: &'a C, background: &'a Background) -> Result<Self> {
        let f = model.n_features();
        if f == 0 || f > MAX_SHAPLEY_FEATURES {
            return Err(Error::Explanation(format!(
                "exact Shapley enumeration supports 1 to {MAX_SHAPLEY_FEATURES} features, got {f}; \
                 use a sampling approximation for wider models"
            )));
        }
        if f != background.width() {
            return Err(Error::Explanation(format!(
                "the model expects {f} features but the background has {}",
                background.width()
            )));
        }
        Ok(ShapleyExplainer {
            n_features: f,
            evaluate: model.coalition_evaluator(background),
        })
    }

    pub fn explain(&self, row: &[u8]) -> Result<Attribution> {
        let f = self.n_features;
        if row.len() != f {
            return Err(Error::Explanation(format!(
                "row has {} features but the model expects {f}",
                row.len()
            )));
        }
        let v = (self.evaluate)(row);
        let phi = shapley_from_values(&v, f);
        Ok(Attribution {
            values: phi
                .into_iter()
                .enumerate()
                .map(|(feature, score)| RankedFeature {
                    feature,
                    code: row[feature],
                    score,
                })
                .collect(),
            base_value: v[0],
            prediction_score: v[(1 << f) - 1],
        })
    }
}

/// Exact Shapley attribution of `model` at `row` against `background`.
pub fn shapley_exact<C: Classifier + ?Sized>(
    model: &C,
    row: &[u8],
    background: &Background,
) -> Result<Attribution> {
    ShapleyExplainer::new(model, background)?.explain(row)
}
