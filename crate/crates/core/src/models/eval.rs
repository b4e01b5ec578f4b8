use super::{CategoricalData, Classifier};
use crate::error::{Error, Result};

/// Confusion counts with the `true` label (R_t below threshold) as positive.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalReport {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        EvalReport {
            true_positive: tp,
            false_positive: fp,
            false_negative: fn_,
            true_negative: tn,
        }
    }

    /// TP / (TP + FP); 0 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.true_positive, self.true_positive + self.false_positive)
    }

    /// TP / (TP + FN); 0 when the test set has no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.true_positive, self.true_positive + self.false_negative)
    }

    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.false_negative + self.true_negative
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.true_positive + self.true_negative, self.total())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate(model: &dyn Classifier, test: &CategoricalData) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Training("evaluation set is empty".into()));
    }
    let mut report = EvalReport::default();
    for (sample, &actual) in test.samples().iter().zip(test.labels()) {
        match (model.predict(sample).label, actual) {
            (true, true) => report.true_positive += 1,
            (true, false) => report.false_positive += 1,
            (false, true) => report.false_negative += 1,
            (false, false) => report.true_negative += 1,
        }
    }
    Ok(report)
}
