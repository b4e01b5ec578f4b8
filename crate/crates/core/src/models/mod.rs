//! Binary classifiers over categorical codes.
//!
//! Both model families answer the same question: is R_t below the
//! threshold for this row? They share the [`Classifier`] contract so the
//! explainers can treat them uniformly.

mod ecpi;
mod eval;
mod forest;
mod format;

pub use ecpi::{train_ecpi, EcpiModel, DEFAULT_SMOOTHING};
pub use eval::{evaluate, EvalReport};
pub use forest::{train_forest, ForestModel, ForestParams, Node, Tree, DEFAULT_TREE_COUNT};
pub use format::{read_model, write_model, FORMAT_HEADER};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::explain::Background;

/// Default fraction of rows used for training in the held-out evaluation.
pub const DEFAULT_SPLIT_FRACTION: f64 = 0.9;

/// Rows of small non-negative category codes with boolean labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalData {
    names: Vec<String>,
    arities: Vec<u8>,
    samples: Vec<Vec<u8>>,
    labels: Vec<bool>,
}

impl CategoricalData {
    pub fn new(
        names: Vec<String>,
        arities: Vec<u8>,
        samples: Vec<Vec<u8>>,
        labels: Vec<bool>,
    ) -> Result<Self> {
        if names.len() != arities.len() {
            return Err(Error::Config(format!(
                "{} feature names but {} arities",
                names.len(),
                arities.len()
            )));
        }
        if samples.len() != labels.len() {
            return Err(Error::Config(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        for (i, sample) in samples.iter().enumerate() {
            if sample.len() != arities.len() {
                return Err(Error::Config(format!(
                    "sample {i} has {} values, expected {}",
                    sample.len(),
                    arities.len()
                )));
            }
            if let Some(f) = (0..sample.len()).find(|&f| sample[f] >= arities[f]) {
                return Err(Error::Config(format!(
                    "sample {i}: code {} of feature {} exceeds arity {}",
                    sample[f], names[f], arities[f]
                )));
            }
        }
        Ok(CategoricalData {
            names,
            arities,
            samples,
            labels,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn arities(&self) -> &[u8] {
        &self.arities
    }

    pub fn samples(&self) -> &[Vec<u8>] {
        &self.samples
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn n_features(&self) -> usize {
        self.arities.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn subset(&self, indices: &[usize]) -> CategoricalData {
        CategoricalData {
            names: self.names.clone(),
            arities: self.arities.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Training("training data is empty".into()));
        }
        let positives = self.positives();
        if positives == 0 || positives == self.len() {
            return Err(Error::Training(format!(
                "training data holds a single class ({} of {} rows labelled true)",
                positives,
                self.len()
            )));
        }
        Ok(())
    }
}

/// Shuffles row indices with `seed` and splits them into disjoint train and
/// test parts; the train part holds `round(n * fraction)` rows.
pub fn train_test_split(
    data: &CategoricalData,
    fraction: f64,
    seed: u64,
) -> Result<(CategoricalData, CategoricalData)> {
    let (train, test) = split_indices(data.len(), fraction, seed)?;
    Ok((data.subset(&train), data.subset(&test)))
}

pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Domain {
            what: "split fraction",
            value: fraction,
            reason: "must lie strictly between 0 and 1",
        });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n as f64 * fraction).round() as usize;
    let test = indices.split_off(n_train.min(n));
    Ok((indices, test))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// True means R_t is predicted to be below the threshold.
    pub label: bool,
    pub score: f64,
}

/// A trained binary classifier over category codes.
pub trait Classifier: Sync {
    fn n_features(&self) -> usize;

    /// Probability-like score in [0, 1] for the `true` class.
    fn score(&self, codes: &[u8]) -> f64;

    fn predict(&self, codes: &[u8]) -> Prediction {
        let score = self.score(codes);
        Prediction {
            label: score > 0.5,
            score,
        }
    }

    /// Expected score for every coalition mask: bit `i` set means feature `i`
    /// is taken from `row`, otherwise from each background row in turn.
    fn coalition_values(&self, row: &[u8], background: &Background) -> Vec<f64> {
        self.coalition_evaluator(background)(row)
    }

    /// `coalition_values` bound to one background, for explaining many rows.
    /// Models with structure to exploit precompute here.
    fn coalition_evaluator<'a>(&'a self, background: &'a Background) -> CoalitionEvaluator<'a> {
        Box::new(move |row| crate::explain::enumerate_coalition_values(self, row, background))
    }
}

pub type CoalitionEvaluator<'a> = Box<dyn Fn(&[u8]) -> Vec<f64> + Send + Sync + 'a>;

/// Either model family behind one value.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Forest(ForestModel),
    Ecpi(EcpiModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Forest(_) => "forest",
            Model::Ecpi(_) => "ecpi",
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            Model::Forest(m) => m.feature_names(),
            Model::Ecpi(m) => m.feature_names(),
        }
    }
}

impl Classifier for Model {
    fn n_features(&self) -> usize {
        match self {
            Model::Forest(m) => m.n_features(),
            Model::Ecpi(m) => m.n_features(),
        }
    }

    fn score(&self, codes: &[u8]) -> f64 {
        match self {
            Model::Forest(m) => m.score(codes),
            Model::Ecpi(m) => m.score(codes),
        }
    }

    fn coalition_evaluator<'a>(&'a self, background: &'a Background) -> CoalitionEvaluator<'a> {
        match self {
            Model::Forest(m) => m.coalition_evaluator(background),
            Model::Ecpi(m) => m.coalition_evaluator(background),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes_and_disjointness() {
        let (train, test) = split_indices(800, 0.9, 7).unwrap();
        assert_eq!((train.len(), test.len()), (720, 80));
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..800).collect::<Vec<_>>());
        assert_eq!(split_indices(800, 0.9, 7).unwrap(), (train, test));
        assert!(split_indices(10, 1.0, 0).is_err());
    }

    #[test]
    fn categorical_data_validation() {
        let bad = CategoricalData::new(vec!["a".into()], vec![2], vec![vec![2]], vec![true]);
        assert!(bad.is_err());
        let bad = CategoricalData::new(vec!["a".into()], vec![2], vec![vec![1]], vec![]);
        assert!(bad.is_err());
    }

    #[test]
    fn single_class_is_rejected() {
        let data = CategoricalData::new(
            vec!["a".into()],
            vec![2],
            vec![vec![0], vec![1]],
            vec![true, true],
        )
        .unwrap();
        assert!(matches!(
            data.require_both_classes(),
            Err(Error::Training(_))
        ));
    }
}
