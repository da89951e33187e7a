//! Random forest of gini CART trees grown on bootstrap samples.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::split::{midpoint, sort_rows_by_feature};
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::qstate::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Bootstrap size as a fraction of the training set (with replacement).
    pub max_samples: f64,
    /// Features considered per split, as a fraction (at least one).
    pub max_features: f64,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 5,
            max_samples: 0.9,
            max_features: 1.0,
        }
    }
}

impl RfParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidInput("n_trees must be positive".into()));
        }
        if !(self.max_samples > 0.0 && self.max_samples <= 1.0) {
            return Err(Error::InvalidInput("max_samples must be in (0, 1]".into()));
        }
        if !(self.max_features > 0.0 && self.max_features <= 1.0) {
            return Err(Error::InvalidInput("max_features must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum CartNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartTree {
    nodes: Vec<CartNode>,
}

impl CartTree {
    /// Class frequencies of the leaf reached by `f`.
    pub fn predict(&self, f: &FeatureVector) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                CartNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if f[*feature] < *threshold { *left } else { *right },
                CartNode::Leaf(freq) => return freq,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[CartNode], i: usize) -> usize {
            match &nodes[i] {
                CartNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
                CartNode::Leaf(_) => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    params: RfParams,
    n_classes: usize,
    trees: Vec<CartTree>,
}

impl ForestModel {
    pub fn trees(&self) -> &[CartTree] {
        &self.trees
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn params(&self) -> &RfParams {
        &self.params
    }
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>()
}

struct CartBuilder<'a, R: Rng + ?Sized> {
    features: &'a [FeatureVector],
    labels: &'a [u8],
    n_classes: usize,
    max_depth: usize,
    n_try: usize,
    n_features: usize,
    rng: &'a mut R,
    nodes: Vec<CartNode>,
}

impl<R: Rng + ?Sized> CartBuilder<'_, R> {
    fn counts(&self, rows: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.n_classes];
        for &r in rows {
            c[self.labels[r] as usize] += 1.0;
        }
        c
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&rows);
        let n = rows.len() as f64;
        let idx = self.nodes.len();
        let leaf = CartNode::Leaf(counts.iter().map(|c| c / n).collect());
        self.nodes.push(leaf);
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if depth >= self.max_depth || rows.len() < 2 || pure {
            return idx;
        }

        let mut candidates: Vec<usize> = if self.n_try == self.n_features {
            (0..self.n_features).collect()
        } else {
            sample_indices(self.rng, self.n_features, self.n_try).into_vec()
        };
        candidates.sort_unstable();

        let parent = gini(&counts, n);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = rows.clone();
        for &f in &candidates {
            sort_rows_by_feature(&mut sorted, self.features, f);
            let mut left = vec![0.0; self.n_classes];
            for w in 0..sorted.len() - 1 {
                left[self.labels[sorted[w]] as usize] += 1.0;
                let lo = self.features[sorted[w]][f];
                let hi = self.features[sorted[w + 1]][f];
                if hi <= lo {
                    continue;
                }
                let nl = (w + 1) as f64;
                let nr = n - nl;
                let right: Vec<f64> = counts.iter().zip(&left).map(|(t, l)| t - l).collect();
                let child = (nl * gini(&left, nl) + nr * gini(&right, nr)) / n;
                let decrease = parent - child;
                if best.map_or(true, |b| decrease > b.0) {
                    best = Some((decrease, f, midpoint(lo, hi)));
                }
            }
        }
        let Some((decrease, feature, threshold)) = best else {
            return idx;
        };
        if decrease <= 0.0 {
            return idx;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&row| self.features[row][feature] < threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[idx] = CartNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        idx
    }
}

/// Trains `n_trees` CART trees, each on a bootstrap sample of
/// `round(n * max_samples)` rows drawn with replacement.
pub fn train_rf<R: Rng + ?Sized>(
    train: &Dataset,
    params: &RfParams,
    rng: &mut R,
) -> Result<ForestModel> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let features = train.features();
    let labels = train.labels();
    let n = features.len();
    let n_classes = train.mode().n_classes();
    let n_features = train.n_features();
    let n_boot = ((n as f64 * params.max_samples).round() as usize).clamp(1, n);
    let n_try = ((n_features as f64 * params.max_features).round() as usize).clamp(1, n_features);

    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let rows: Vec<usize> = (0..n_boot).map(|_| rng.gen_range(0..n)).collect();
        let mut b = CartBuilder {
            features: &features,
            labels: &labels,
            n_classes,
            max_depth: params.max_depth,
            n_try,
            n_features,
            rng: &mut *rng,
            nodes: Vec::new(),
        };
        b.grow(rows, 0);
        trees.push(CartTree { nodes: b.nodes });
    }
    Ok(ForestModel {
        params: *params,
        n_classes,
        trees,
    })
}

/// Mean of the per-tree leaf class frequencies.
pub fn predict_rf(model: &ForestModel, f: &FeatureVector) -> Vec<f64> {
    let mut p = vec![0.0; model.n_classes];
    for t in &model.trees {
        for (acc, v) in p.iter_mut().zip(t.predict(f)) {
            *acc += v;
        }
    }
    let k = model.trees.len() as f64;
    p.iter_mut().for_each(|v| *v /= k);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{LabelMode, LabeledSample};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noisy(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| LabeledSample {
                features: FeatureVector::new(rng.gen(), rng.gen(), rng.gen()),
                label: rng.gen_range(0..2),
            })
            .collect();
        Dataset::new(samples, LabelMode::Binary).unwrap()
    }

    #[test]
    fn single_deep_tree_memorizes() {
        let d = noisy(150, 1);
        let params = RfParams {
            n_trees: 1,
            max_depth: 64,
            max_samples: 1.0,
            max_features: 1.0,
        };
        // A full bootstrap still repeats rows; train on the distinct sample
        // the tree actually saw.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = train_rf(&d, &params, &mut rng).unwrap();
        let mut replay = ChaCha8Rng::seed_from_u64(2);
        let seen: Vec<usize> = (0..d.len()).map(|_| replay.gen_range(0..d.len())).collect();
        for &i in &seen {
            let s = &d.samples()[i];
            let p = predict_rf(&model, &s.features);
            assert_eq!(p[s.label as usize], 1.0);
        }
    }

    #[test]
    fn probabilities_sum_to_one_and_depth_capped() {
        let d = noisy(200, 3);
        let model = train_rf(&d, &RfParams::default(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(model.trees().len(), 100);
        assert!(model.trees().iter().all(|t| t.depth() <= 5));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let f = FeatureVector::new(rng.gen(), rng.gen(), rng.gen());
            let p = predict_rf(&model, &f);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_forest() {
        let d = noisy(100, 6);
        let params = RfParams {
            n_trees: 10,
            max_features: 0.5,
            ..RfParams::default()
        };
        let a = train_rf(&d, &params, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = train_rf(&d, &params, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5.0, 0.0], 5.0), 0.0);
        assert_eq!(gini(&[2.0, 2.0], 4.0), 0.5);
        assert!((gini(&[1.0, 1.0, 1.0, 1.0], 4.0) - 0.75).abs() < 1e-15);
    }
}
