//! Per-row explanations: exact Shapley attributions and minimal sufficient
//! literal subsets, plus top-k extraction of the most influential
//! feature-values.

mod shapley;
mod sufficient;

pub use shapley::{
    enumerate_coalition_values, shapley_exact, shapley_from_values, Attribution, Background,
    ShapleyExplainer, MAX_SHAPLEY_FEATURES,
};
pub use sufficient::{ecpi_explain, Explanation};

/// A feature-value with the score it was ranked by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedFeature {
    pub feature: usize,
    pub code: u8,
    pub score: f64,
}

/// Which explainer produced a ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Shap,
    Ecpi,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Shap, Method::Ecpi];

    pub fn name(self) -> &'static str {
        match self {
            Method::Shap => "shap",
            Method::Ecpi => "ecpi",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shap" => Ok(Method::Shap),
            "ecpi" => Ok(Method::Ecpi),
            _ => Err(format!(
                "unknown explanation method {s:?} (expected shap or ecpi)"
            )),
        }
    }
}

// Sort by descending key; equal keys keep ascending feature order.
fn rank_by(
    mut items: Vec<RankedFeature>,
    key: impl Fn(&RankedFeature) -> f64,
    k: usize,
) -> Vec<RankedFeature> {
    items.sort_by(|a, b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.feature.cmp(&b.feature))
    });
    items.truncate(k);
    items
}

impl Attribution {
    /// The `k` feature-values pushing hardest toward `toward_label`: largest
    /// phi for the `true` class, most negative phi for `false`.
    pub fn top_k(&self, k: usize, toward_label: bool) -> Vec<RankedFeature> {
        let sign = if toward_label { 1.0 } else { -1.0 };
        rank_by(self.values.clone(), |r| sign * r.score, k)
    }
}

impl Explanation {
    /// The `k` members of the subset with the largest absolute weight.
    pub fn top_k(&self, k: usize) -> Vec<RankedFeature> {
        rank_by(self.subset.clone(), |r| r.score.abs(), k)
    }
}
