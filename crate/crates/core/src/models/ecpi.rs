//! Additive log-odds classifier over feature-value literals.
//!
//! This is a surrogate for a probabilistic-logic classifier: every observed
//! (feature, code) literal carries a Laplace-smoothed log-likelihood ratio,
//! and inference on any subset of a row's literals adds the prior log-odds to
//! the weights of that subset. Explanations are subsets whose partial
//! inference agrees with the full row (see `explain::ecpi_explain`).

use super::{CategoricalData, Classifier, Prediction};
use crate::error::{Error, Result};

pub const DEFAULT_SMOOTHING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EcpiModel {
    pub(crate) names: Vec<String>,
    pub(crate) arities: Vec<u8>,
    pub(crate) prior: f64,
    pub(crate) smoothing: f64,
    /// `weights[feature][code]`, `None` for literals never seen in training.
    pub(crate) weights: Vec<Vec<Option<f64>>>,
}

pub(crate) fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl EcpiModel {
    pub fn from_parts(
        names: Vec<String>,
        arities: Vec<u8>,
        prior: f64,
        smoothing: f64,
        weights: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if names.len() != arities.len() || weights.len() != arities.len() {
            return Err(Error::Config("ECPI model dimensions disagree".into()));
        }
        if weights
            .iter()
            .zip(&arities)
            .any(|(w, &a)| w.len() != a as usize)
        {
            return Err(Error::Config(
                "ECPI weight table does not match arities".into(),
            ));
        }
        Ok(EcpiModel {
            names,
            arities,
            prior,
            smoothing,
            weights,
        })
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn feature_names(&self) -> &[String] {
        &self.names
    }

    pub fn arities(&self) -> &[u8] {
        &self.arities
    }

    /// Contribution of a literal; zero for unseen or out-of-range codes.
    pub fn weight(&self, feature: usize, code: u8) -> f64 {
        self.weights
            .get(feature)
            .and_then(|w| w.get(code as usize))
            .copied()
            .flatten()
            .unwrap_or(0.0)
    }

    pub fn is_observed(&self, feature: usize, code: u8) -> bool {
        self.weights
            .get(feature)
            .and_then(|w| w.get(code as usize))
            .is_some_and(|w| w.is_some())
    }

    /// Log-odds from the prior plus the literals selected by `mask`.
    pub fn subset_logit(&self, codes: &[u8], mask: u32) -> f64 {
        let mut z = self.prior;
        for (f, &code) in codes.iter().enumerate() {
            if mask & (1 << f) != 0 {
                z += self.weight(f, code);
            }
        }
        z
    }

    pub fn logit(&self, codes: &[u8]) -> f64 {
        self.subset_logit(codes, u32::MAX)
    }
}

impl Classifier for EcpiModel {
    fn n_features(&self) -> usize {
        self.arities.len()
    }

    fn score(&self, codes: &[u8]) -> f64 {
        logistic(self.logit(codes))
    }

    // decide on the log-odds so labels agree with subset inference even
    // where the logistic rounds to exactly 0.5
    fn predict(&self, codes: &[u8]) -> Prediction {
        let z = self.logit(codes);
        Prediction {
            label: z > 0.0,
            score: logistic(z),
        }
    }
}

/// Fits literal weights `ln P(f=v | true) - ln P(f=v | false)` with additive
/// smoothing over each feature's arity, and prior `ln(n_true / n_false)`.
pub fn train_ecpi(data: &CategoricalData, smoothing: f64) -> Result<EcpiModel> {
    if !(smoothing.is_finite() && smoothing > 0.0) {
        return Err(Error::Domain {
            what: "ECPI smoothing",
            value: smoothing,
            reason: "must be positive",
        });
    }
    data.require_both_classes()?;
    if data.n_features() > 32 {
        return Err(Error::Training(format!(
            "ECPI supports at most 32 features, got {}",
            data.n_features()
        )));
    }
    let n_true = data.positives() as f64;
    let n_false = data.len() as f64 - n_true;

    let weights = data
        .arities()
        .iter()
        .enumerate()
        .map(|(f, &arity)| {
            let mut count_true = vec![0f64; arity as usize];
            let mut count_false = vec![0f64; arity as usize];
            for (sample, &label) in data.samples().iter().zip(data.labels()) {
                let code = sample[f] as usize;
                if label {
                    count_true[code] += 1.0;
                } else {
                    count_false[code] += 1.0;
                }
            }
            let v = arity as f64;
            (0..arity as usize)
                .map(|code| {
                    if count_true[code] + count_false[code] == 0.0 {
                        return None;
                    }
                    let p_true = (count_true[code] + smoothing) / (n_true + smoothing * v);
                    let p_false = (count_false[code] + smoothing) / (n_false + smoothing * v);
                    Some(p_true.ln() - p_false.ln())
                })
                .collect()
        })
        .collect();

    Ok(EcpiModel {
        names: data.names().to_vec(),
        arities: data.arities().to_vec(),
        prior: (n_true / n_false).ln(),
        smoothing,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(samples: Vec<Vec<u8>>, labels: Vec<bool>, arities: Vec<u8>) -> CategoricalData {
        let names = (0..arities.len()).map(|f| format!("F{f}")).collect();
        CategoricalData::new(names, arities, samples, labels).unwrap()
    }

    #[test]
    fn independent_feature_has_zero_weight() {
        let d = data(
            vec![vec![0], vec![1], vec![0], vec![1]],
            vec![true, true, false, false],
            vec![2],
        );
        let m = train_ecpi(&d, 1.0).unwrap();
        assert_eq!(m.prior(), 0.0);
        assert!(m.weight(0, 0).abs() < 1e-15);
        assert!(m.weight(0, 1).abs() < 1e-15);
    }

    #[test]
    fn true_only_literal_is_positive() {
        let d = data(
            vec![vec![1], vec![0], vec![0], vec![0]],
            vec![true, true, false, false],
            vec![2],
        );
        let m = train_ecpi(&d, 1.0).unwrap();
        // (1+1)/(2+2) vs (0+1)/(2+2)
        assert!((m.weight(0, 1) - 2f64.ln()).abs() < 1e-15);
        assert!(m.weight(0, 1) > 0.0);
    }

    #[test]
    fn unseen_literals_contribute_nothing() {
        let d = data(vec![vec![0], vec![2]], vec![true, false], vec![4]);
        let m = train_ecpi(&d, 1.0).unwrap();
        assert!(m.is_observed(0, 0) && !m.is_observed(0, 1));
        assert_eq!(m.weight(0, 1), 0.0);
        assert_eq!(m.weight(0, 3), 0.0);
        assert_eq!(m.weight(0, 200), 0.0);
    }

    #[test]
    fn errors() {
        let single = data(vec![vec![0]], vec![true], vec![2]);
        assert!(train_ecpi(&single, 1.0).is_err());
        let empty = data(vec![], vec![], vec![2]);
        assert!(train_ecpi(&empty, 1.0).is_err());
        let ok = data(vec![vec![0], vec![1]], vec![true, false], vec![2]);
        assert!(train_ecpi(&ok, 0.0).is_err());
    }

    #[test]
    fn zero_model_scores_half() {
        let m = EcpiModel::from_parts(
            vec!["a".into()],
            vec![2],
            0.0,
            1.0,
            vec![vec![Some(0.0), Some(0.0)]],
        )
        .unwrap();
        assert_eq!(m.score(&[1]), 0.5);
        assert!(!m.predict(&[1]).label);
    }

    #[test]
    fn score_decomposes_over_weights() {
        let d = crate::models::test_data::planted(90, 5);
        let m = train_ecpi(&d, 1.0).unwrap();
        for s in d.samples() {
            let z: f64 = m.prior() + (0..5).map(|f| m.weight(f, s[f])).sum::<f64>();
            assert!((m.score(s) - 1.0 / (1.0 + (-z).exp())).abs() < 1e-15);
            assert_eq!(m.subset_logit(s, 0b11111), m.logit(s));
        }
    }
}
