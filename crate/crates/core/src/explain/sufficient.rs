//! Minimal sufficient subsets for the additive log-odds classifier.
//!
//! A subset of a row's literals is sufficient when inference from the prior
//! plus those literals alone gives the same label as the full row. The
//! search walks cardinalities upward and returns the first level with a
//! sufficient subset; within a level the largest absolute summed weight
//! wins, then the lexicographically smallest feature list.

use std::cmp::Ordering;

use super::RankedFeature;
use crate::models::EcpiModel;

#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    /// Members in feature order; `score` holds the literal weight.
    pub subset: Vec<RankedFeature>,
    pub inferred_label: bool,
    pub sufficient: bool,
}

impl Explanation {
    pub fn mask(&self) -> u32 {
        self.subset.iter().fold(0, |m, r| m | (1 << r.feature))
    }
}

fn features_of(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask & (1 << i) != 0)
}

pub fn ecpi_explain(model: &EcpiModel, row: &[u8]) -> Explanation {
    let f = row.len();
    assert!(
        f <= 20,
        "exhaustive subset search is limited to 20 features"
    );
    let full = (1u32 << f) - 1;
    let label = model.subset_logit(row, full) > 0.0;

    let mut best: Option<(u32, f64)> = None;
    for size in 0..=f as u32 {
        for mask in (0..=full).filter(|m| m.count_ones() == size) {
            if (model.subset_logit(row, mask) > 0.0) != label {
                continue;
            }
            let strength = features_of(mask)
                .map(|i| model.weight(i, row[i]))
                .sum::<f64>()
                .abs();
            let better = match best {
                None => true,
                Some((best_mask, best_strength)) => match strength.partial_cmp(&best_strength) {
                    Some(Ordering::Greater) => true,
                    Some(Ordering::Equal) => features_of(mask).lt(features_of(best_mask)),
                    _ => false,
                },
            };
            if better {
                best = Some((mask, strength));
            }
        }
        if best.is_some() {
            break;
        }
    }
    // the full set always reproduces its own label
    let (mask, _) = best.expect("full set is sufficient");
    Explanation {
        subset: features_of(mask)
            .map(|feature| RankedFeature {
                feature,
                code: row[feature],
                score: model.weight(feature, row[feature]),
            })
            .collect(),
        inferred_label: label,
        sufficient: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(prior: f64, weights: &[[f64; 2]]) -> EcpiModel {
        EcpiModel::from_parts(
            (0..weights.len()).map(|f| format!("F{f}")).collect(),
            vec![2; weights.len()],
            prior,
            1.0,
            weights
                .iter()
                .map(|w| vec![Some(w[0]), Some(w[1])])
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_give_empty_explanation() {
        let m = model(-0.5, &[[0.0, 0.0], [0.0, 0.0]]);
        let e = ecpi_explain(&m, &[1, 0]);
        assert!(e.subset.is_empty());
        assert!(!e.inferred_label);
        assert!(e.sufficient);
    }

    #[test]
    fn dominant_literal_is_a_singleton() {
        // prior -1; full row: -1 + 3 - 0.5 + 0.2 > 0
        let m = model(-1.0, &[[0.0, 3.0], [-0.5, 0.0], [0.2, 0.0]]);
        let row = [1, 0, 0];
        let e = ecpi_explain(&m, &row);
        assert!(e.inferred_label);
        assert_eq!(e.mask(), 0b001);
        assert!(m.subset_logit(&row, e.mask()) > 0.0);
    }

    #[test]
    fn ties_prefer_stronger_then_earlier() {
        let m = model(-1.0, &[[2.0, 0.0], [3.0, 0.0], [3.0, 0.0]]);
        let e = ecpi_explain(&m, &[0, 0, 0]);
        assert_eq!(e.mask(), 0b010);
    }

    #[test]
    fn pairs_when_no_single_literal_suffices() {
        let m = model(-1.0, &[[0.6, 0.0], [0.7, 0.0], [0.1, 0.0]]);
        let e = ecpi_explain(&m, &[0, 0, 0]);
        assert_eq!(e.mask(), 0b011);
        let weights: Vec<f64> = e.subset.iter().map(|r| r.score).collect();
        assert_eq!(weights, vec![0.6, 0.7]);
    }
}
