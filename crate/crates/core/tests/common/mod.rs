//! Independent oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use epiexplain_core::explain::Background;
use epiexplain_core::models::{CategoricalData, Classifier, EcpiModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn fixture(name: &str) -> PathBuf {
    data_dir().join(name)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `eps`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, eps, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // stop refining once roundoff dominates the error estimate
    if depth == 0 || delta.abs() <= (15.0 * eps).max(1e-14 * (left + right).abs()) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Gamma(shape, scale) density known only up to a constant, scaled to 1 at
/// the mode; the oracle normalizes by integrating it numerically.
pub struct GammaOracle {
    shape: f64,
    scale: f64,
    /// Log of the unnormalized density at the mode.
    log_peak: f64,
    total: f64,
}

impl GammaOracle {
    pub fn from_mean_sd(mean: f64, sd: f64) -> Self {
        let shape = (mean / sd).powi(2);
        let scale = sd * sd / mean;
        assert!(
            shape >= 1.0,
            "the quadrature oracle needs a bounded density"
        );
        let mode = (shape - 1.0) * scale;
        let log_peak = if mode > 0.0 {
            (shape - 1.0) * mode.ln() - mode / scale
        } else {
            0.0
        };
        let mut oracle = GammaOracle {
            shape,
            scale,
            log_peak,
            total: 1.0,
        };
        let mut total = 0.0;
        let mut x = 0.0;
        loop {
            let piece = oracle.unnormalized_integral(x, x + 1.0);
            total += piece;
            x += 1.0;
            if x > mean && piece < 1e-20 * total {
                break;
            }
        }
        oracle.total = total;
        oracle
    }

    fn density(&self, x: f64) -> f64 {
        if self.shape == 1.0 {
            return (-x / self.scale).exp();
        }
        if x <= 0.0 {
            return 0.0;
        }
        ((self.shape - 1.0) * x.ln() - x / self.scale - self.log_peak).exp()
    }

    fn unnormalized_integral(&self, a: f64, b: f64) -> f64 {
        simpson(&|x| self.density(x), a, b, 1e-15)
    }

    /// P(a < X <= b).
    pub fn probability(&self, a: f64, b: f64) -> f64 {
        self.unnormalized_integral(a.max(0.0), b) / self.total
    }

    /// Discretized weight of lag `s`: [0, 1.5] for the first day, then
    /// unit windows centered on `s`.
    pub fn weight(&self, s: usize) -> f64 {
        if s == 1 {
            self.probability(0.0, 1.5)
        } else {
            self.probability(s as f64 - 0.5, s as f64 + 0.5)
        }
    }
}

/// v(S) for every coalition mask, straight from the definition.
pub fn direct_values<C: Classifier + ?Sized>(
    model: &C,
    row: &[u8],
    background: &[Vec<u8>],
) -> Vec<f64> {
    let f = row.len();
    (0..1usize << f)
        .map(|mask| {
            let sum: f64 = background
                .iter()
                .map(|bg| {
                    let mixed: Vec<u8> = (0..f)
                        .map(|i| if mask & (1 << i) != 0 { row[i] } else { bg[i] })
                        .collect();
                    model.score(&mixed)
                })
                .sum();
            sum / background.len() as f64
        })
        .collect()
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Shapley values as the average marginal contribution over all orderings.
pub fn permutation_shapley(values: &[f64], n: usize) -> Vec<f64> {
    let mut phi = vec![0.0; n];
    let mut count = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    permutations(&mut order, 0, &mut |perm| {
        let mut mask = 0usize;
        for &player in perm {
            let next = mask | (1 << player);
            phi[player] += values[next] - values[mask];
            mask = next;
        }
        count += 1;
    });
    phi.iter().map(|p| p / count as f64).collect()
}

/// A model given by an arbitrary score for every point of the code grid.
pub struct TableModel {
    pub arities: Vec<u8>,
    pub scores: Vec<f64>,
}

impl TableModel {
    pub fn random(arities: Vec<u8>, seed: u64) -> Self {
        let size: usize = arities.iter().map(|&a| a as usize).product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores = (0..size).map(|_| rng.random::<f64>()).collect();
        TableModel { arities, scores }
    }

    /// Every grid point scored by `score`.
    pub fn from_fn(arities: Vec<u8>, score: impl Fn(&[u8]) -> f64) -> Self {
        let mut model = TableModel {
            arities,
            scores: Vec::new(),
        };
        let size: usize = model.arities.iter().map(|&a| a as usize).product();
        model.scores = (0..size).map(|i| score(&model.decode(i))).collect();
        model
    }

    fn index(&self, codes: &[u8]) -> usize {
        codes
            .iter()
            .zip(&self.arities)
            .fold(0, |acc, (&c, &a)| acc * a as usize + c as usize)
    }

    fn decode(&self, mut index: usize) -> Vec<u8> {
        let mut codes = vec![0u8; self.arities.len()];
        for (slot, &a) in codes.iter_mut().zip(&self.arities).rev() {
            *slot = (index % a as usize) as u8;
            index /= a as usize;
        }
        codes
    }
}

impl Classifier for TableModel {
    fn n_features(&self) -> usize {
        self.arities.len()
    }

    fn score(&self, codes: &[u8]) -> f64 {
        self.scores[self.index(codes)]
    }
}

pub fn random_rows(arities: &[u8], n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<u8>> {
    (0..n)
        .map(|_| arities.iter().map(|&a| rng.random_range(0..a)).collect())
        .collect()
}

pub fn background(rows: &[Vec<u8>]) -> Background {
    Background::from_rows(rows).expect("non-empty background")
}

/// Random labeled data whose label depends on the first two features plus noise.
pub fn random_data(arities: &[u8], n: usize, seed: u64) -> CategoricalData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = random_rows(arities, n, &mut rng);
    let mut labels: Vec<bool> = samples
        .iter()
        .map(|s| {
            let signal = s[0] as f64 + s.get(1).map_or(0.0, |&c| c as f64) * 0.5;
            signal + rng.random_range(-1.0..1.0) > arities[0] as f64 / 2.0
        })
        .collect();
    labels[0] = true;
    labels[1] = false;
    let names = (0..arities.len()).map(|i| format!("f{i}")).collect();
    CategoricalData::new(names, arities.to_vec(), samples, labels).expect("codes within arities")
}

/// The minimal sufficient subset by brute force: smallest size, then largest
/// absolute summed weight, then lexicographically smallest feature list.
pub fn brute_force_explanation(model: &EcpiModel, row: &[u8]) -> u32 {
    let f = row.len();
    let label = model.logit(row) > 0.0;
    let mut candidates: Vec<(u32, f64, Vec<usize>, u32)> = Vec::new();
    for mask in 0u32..(1 << f) {
        let members: Vec<usize> = (0..f).filter(|i| mask & (1 << i) != 0).collect();
        let mut z = model.prior();
        for &i in &members {
            z += model.weight(i, row[i]);
        }
        if (z > 0.0) == label {
            let strength = members
                .iter()
                .map(|&i| model.weight(i, row[i]))
                .sum::<f64>()
                .abs();
            candidates.push((members.len() as u32, strength, members, mask));
        }
    }
    candidates.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(b.1.partial_cmp(&a.1).expect("finite weights"))
            .then(a.2.cmp(&b.2))
    });
    candidates[0].3
}

/// Random ECPI weights, some literals left unseen.
pub fn random_ecpi(arities: &[u8], seed: u64) -> EcpiModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = arities
        .iter()
        .map(|&a| {
            (0..a)
                .map(|_| rng.random_bool(0.85).then(|| rng.random_range(-2.0..2.0)))
                .collect()
        })
        .collect();
    EcpiModel::from_parts(
        (0..arities.len()).map(|i| format!("f{i}")).collect(),
        arities.to_vec(),
        rng.random_range(-1.5..1.5),
        1.0,
        weights,
    )
    .expect("consistent dimensions")
}
