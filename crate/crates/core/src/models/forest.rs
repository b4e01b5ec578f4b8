//! Random forest over ordinal category codes.
//!
//! Each tree is grown on a bootstrap sample with Gini impurity and binary
//! threshold splits `code <= t`. At every node a random subset of
//! `floor(sqrt(F))` features is searched first; if none of them separates the
//! node, the remaining features are tried in the same shuffled order. Trees
//! grow until nodes are pure, hold fewer than `min_node_size` rows, or no
//! feature varies. Tree `i` draws from ChaCha stream `i` of the master seed,
//! so the result does not depend on how trees are scheduled across threads.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CategoricalData, Classifier, CoalitionEvaluator};
use crate::error::{Error, Result};
use crate::explain::Background;

pub const DEFAULT_TREE_COUNT: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub tree_count: usize,
    pub seed: u64,
    /// Features searched per split; `None` means `floor(sqrt(F))`.
    pub max_features: Option<usize>,
    /// Nodes with fewer rows than this become leaves.
    pub min_node_size: usize,
    pub max_depth: Option<usize>,
}

impl ForestParams {
    pub fn new(tree_count: usize, seed: u64) -> Self {
        ForestParams {
            tree_count,
            seed,
            ..Default::default()
        }
    }
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            tree_count: DEFAULT_TREE_COUNT,
            seed: 0,
            max_features: None,
            min_node_size: 2,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    /// Rows with `code <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: u8,
        left: usize,
        right: usize,
    },
    Leaf {
        positives: u32,
        total: u32,
    },
}

impl Node {
    fn leaf_vote(positives: u32, total: u32) -> bool {
        // ties vote false
        2 * positives > total
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn vote(&self, codes: &[u8]) -> bool {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if codes[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
                Node::Leaf { positives, total } => return Node::leaf_vote(positives, total),
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub(crate) names: Vec<String>,
    pub(crate) arities: Vec<u8>,
    pub(crate) trees: Vec<Tree>,
    pub(crate) seed: u64,
}

impl ForestModel {
    pub(crate) fn from_parts(
        names: Vec<String>,
        arities: Vec<u8>,
        trees: Vec<Tree>,
        seed: u64,
    ) -> Self {
        ForestModel {
            names,
            arities,
            trees,
            seed,
        }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn feature_names(&self) -> &[String] {
        &self.names
    }

    pub fn arities(&self) -> &[u8] {
        &self.arities
    }

    pub fn true_votes(&self, codes: &[u8]) -> usize {
        self.trees.iter().filter(|t| t.vote(codes)).count()
    }
}

impl Classifier for ForestModel {
    fn n_features(&self) -> usize {
        self.arities.len()
    }

    fn score(&self, codes: &[u8]) -> f64 {
        self.true_votes(codes) as f64 / self.trees.len() as f64
    }

    fn coalition_evaluator<'a>(&'a self, background: &'a Background) -> CoalitionEvaluator<'a> {
        let game = ForestGame::new(self, background);
        Box::new(move |row| game.values(row))
    }
}

/// A true-voting leaf: the code interval each path feature must fall in,
/// and background weight grouped by the set of features whose background
/// value falls outside its interval.
struct LeafTable {
    bounds: Vec<(usize, u8, u8)>,
    /// (need mask, its ternary index part, weight)
    needs: Vec<(u32, usize, u64)>,
}

/// Exact interventional coalition values from the tree structure.
///
/// The mixed row of coalition S (row values on S, background values
/// elsewhere) reaches a leaf iff S contains every path feature where only
/// the background falls outside the leaf interval ("need") and none where
/// the row does ("forbid"). The need masks depend only on the background, so
/// they are tabulated once; per row only the forbid masks are computed.
/// Counts are integers, so the values do not depend on summation order.
struct ForestGame {
    n_features: usize,
    leaves: Vec<LeafTable>,
    denom: f64,
}

impl ForestGame {
    fn new(forest: &ForestModel, background: &Background) -> Self {
        let f = forest.arities.len();
        let pow = ternary_powers(f);
        let leaves = forest
            .trees
            .par_iter()
            .map(|tree| {
                let mut out = Vec::new();
                let mut stack = vec![(0usize, vec![(0u8, u8::MAX); f])];
                while let Some((i, bounds)) = stack.pop() {
                    match tree.nodes[i] {
                        Node::Leaf { positives, total } => {
                            if Node::leaf_vote(positives, total) {
                                out.push(leaf_table(&bounds, background, &pow));
                            }
                        }
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            let (lo, hi) = bounds[feature];
                            let mut l = bounds.clone();
                            l[feature] = (lo, hi.min(threshold));
                            let mut r = bounds;
                            r[feature] = (lo.max(threshold.saturating_add(1)), hi);
                            stack.push((right, r));
                            stack.push((left, l));
                        }
                    }
                }
                out
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect();
        ForestGame {
            n_features: f,
            leaves,
            denom: forest.trees.len() as f64 * background.total_weight() as f64,
        }
    }

    fn values(&self, row: &[u8]) -> Vec<f64> {
        let f = self.n_features;
        let forbid_of = |leaf: &LeafTable| {
            leaf.bounds
                .iter()
                .filter(|&&(j, lo, hi)| !(lo..=hi).contains(&row[j]))
                .fold(0u32, |m, &(j, _, _)| m | (1 << j))
        };
        let counts = if f <= TERNARY_MAX_FEATURES {
            let pow = ternary_powers(f);
            // every digit 2
            let all_free = pow[f] - 1;
            let mut table = vec![0u64; pow[f]];
            for leaf in &self.leaves {
                let forbid = forbid_of(leaf);
                let forbid_part = ternary_part(forbid, &pow);
                for &(need, need_part, weight) in &leaf.needs {
                    if need & forbid == 0 {
                        table[all_free - need_part - 2 * forbid_part] += weight;
                    }
                }
            }
            expand_ternary(table, f)
        } else {
            let mut constraints: HashMap<(u32, u32), u64> = HashMap::new();
            for leaf in &self.leaves {
                let forbid = forbid_of(leaf);
                for &(need, _, weight) in &leaf.needs {
                    if need & forbid == 0 {
                        *constraints.entry((need, forbid)).or_default() += weight;
                    }
                }
            }
            expand_supersets(&constraints, f)
        };
        counts.into_iter().map(|c| c as f64 / self.denom).collect()
    }
}

fn leaf_table(bounds: &[(u8, u8)], background: &Background, pow: &[usize]) -> LeafTable {
    let bounds: Vec<(usize, u8, u8)> = bounds
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != (0, u8::MAX))
        .map(|(j, &(lo, hi))| (j, lo, hi))
        .collect();
    let mut needs: BTreeMap<u32, u64> = BTreeMap::new();
    for (bg, weight) in background.iter() {
        let need = bounds
            .iter()
            .filter(|&&(j, lo, hi)| !(lo..=hi).contains(&bg[j]))
            .fold(0u32, |m, &(j, _, _)| m | (1 << j));
        *needs.entry(need).or_default() += weight as u64;
    }
    LeafTable {
        bounds,
        needs: needs
            .into_iter()
            .map(|(need, w)| (need, ternary_part(need, pow), w))
            .collect(),
    }
}

const TERNARY_MAX_FEATURES: usize = 12;

fn ternary_powers(f: usize) -> Vec<usize> {
    (0..=f).map(|i| 3usize.pow(i as u32)).collect()
}

/// Sum of 3^j over the bits j of `mask`.
fn ternary_part(mask: u32, pow: &[usize]) -> usize {
    (0..pow.len() - 1)
        .filter(|&j| mask & (1 << j) != 0)
        .map(|j| pow[j])
        .sum()
}

/// Coalition counts from a table over per-feature states (0 = must come from
/// the background, 1 = must come from the row, 2 = free): each free state is
/// pushed into both fixed states, one feature at a time.
fn expand_ternary(mut table: Vec<u64>, f: usize) -> Vec<u64> {
    let pow = ternary_powers(f);
    for i in 0..f {
        for idx in 0..pow[f] {
            if (idx / pow[i]) % 3 == 2 && table[idx] != 0 {
                let c = table[idx];
                table[idx - pow[i]] += c;
                table[idx - 2 * pow[i]] += c;
            }
        }
    }
    (0..1u32 << f)
        .map(|mask| table[ternary_part(mask, &pow)])
        .collect()
}

fn expand_supersets(constraints: &HashMap<(u32, u32), u64>, f: usize) -> Vec<u64> {
    let full = (1u32 << f) - 1;
    let mut counts = vec![0u64; 1 << f];
    for (&(need, forbid), &count) in constraints {
        let free = full & !(need | forbid);
        let mut sub = free;
        loop {
            counts[(need | sub) as usize] += count;
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
    }
    counts
}

/// Trains `params.tree_count` trees on bootstrap samples of `data`.
pub fn train_forest(data: &CategoricalData, params: &ForestParams) -> Result<ForestModel> {
    data.require_both_classes()?;
    if params.tree_count == 0 {
        return Err(Error::Training("tree count must be positive".into()));
    }
    let n_features = data.n_features();
    if n_features == 0 || n_features > 32 {
        return Err(Error::Training(format!(
            "forest supports 1 to 32 features, got {n_features}"
        )));
    }
    let max_features = params
        .max_features
        .unwrap_or_else(|| (n_features as f64).sqrt().floor() as usize)
        .clamp(1, n_features);

    let trees = (0..params.tree_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(i as u64);
            let n = data.len();
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut builder = TreeBuilder {
                data,
                rng,
                max_features,
                min_node_size: params.min_node_size.max(2),
                max_depth: params.max_depth,
                nodes: Vec::new(),
            };
            builder.grow(sample, 0);
            Tree {
                nodes: builder.nodes,
            }
        })
        .collect();

    Ok(ForestModel {
        names: data.names().to_vec(),
        arities: data.arities().to_vec(),
        trees,
        seed: params.seed,
    })
}

struct TreeBuilder<'a> {
    data: &'a CategoricalData,
    rng: ChaCha8Rng,
    max_features: usize,
    min_node_size: usize,
    max_depth: Option<usize>,
    nodes: Vec<Node>,
}

struct SplitChoice {
    feature: usize,
    threshold: u8,
    impurity: f64,
}

fn gini_sum(positives: f64, total: f64) -> f64 {
    // total * gini, so children can be summed directly
    if total == 0.0 {
        0.0
    } else {
        let p = positives / total;
        total * 2.0 * p * (1.0 - p)
    }
}

impl TreeBuilder<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let labels = self.data.labels();
        let positives = rows.iter().filter(|&&r| labels[r]).count() as u32;
        let total = rows.len() as u32;
        let index = self.nodes.len();
        self.nodes.push(Node::Leaf { positives, total });

        let pure = positives == 0 || positives == total;
        let depth_reached = self.max_depth.is_some_and(|d| depth >= d);
        if pure || rows.len() < self.min_node_size || depth_reached {
            return index;
        }
        let Some(choice) = self.best_split(&rows) else {
            return index;
        };
        let samples = self.data.samples();
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| samples[r][choice.feature] <= choice.threshold);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[index] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left,
            right,
        };
        index
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<SplitChoice> {
        let mut order: Vec<usize> = (0..self.data.n_features()).collect();
        order.shuffle(&mut self.rng);
        let mut best: Option<SplitChoice> = None;
        for (tried, &feature) in order.iter().enumerate() {
            if tried >= self.max_features && best.is_some() {
                break;
            }
            if let Some(choice) = self.best_threshold(rows, feature) {
                if best.as_ref().is_none_or(|b| choice.impurity < b.impurity) {
                    best = Some(choice);
                }
            }
        }
        best
    }

    fn best_threshold(&self, rows: &[usize], feature: usize) -> Option<SplitChoice> {
        let arity = self.data.arities()[feature] as usize;
        let samples = self.data.samples();
        let labels = self.data.labels();
        let mut pos = vec![0f64; arity];
        let mut tot = vec![0f64; arity];
        for &r in rows {
            let code = samples[r][feature] as usize;
            tot[code] += 1.0;
            if labels[r] {
                pos[code] += 1.0;
            }
        }
        let n = rows.len() as f64;
        let n_pos: f64 = pos.iter().sum();
        let mut best: Option<SplitChoice> = None;
        let (mut left_pos, mut left_tot) = (0.0, 0.0);
        for threshold in 0..arity.saturating_sub(1) {
            left_pos += pos[threshold];
            left_tot += tot[threshold];
            if left_tot == 0.0 || left_tot == n {
                continue;
            }
            let impurity = gini_sum(left_pos, left_tot) + gini_sum(n_pos - left_pos, n - left_tot);
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                best = Some(SplitChoice {
                    feature,
                    threshold: threshold as u8,
                    impurity,
                });
            }
        }
        best
    }
}
