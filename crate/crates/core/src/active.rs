//! Pool-based active learning: entropy uncertainty plus cosine diversity,
//! retraining the booster from scratch after every queried batch.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::learners::gbt::{train_gbt, GbtModel, GbtParams};
use crate::metrics::{accuracy, predicted_labels};
use crate::qstate::FeatureVector;

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    h.max(0.0)
}

/// `1 - <a, b> / (|a| |b|)`, clamped to `[0, 2]`.
pub fn cosine_distance(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((1.0 - a.dot(b) / (na * nb)).clamp(0.0, 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlConfig {
    pub init_labeled: usize,
    pub top_k: usize,
    pub batch: usize,
    pub target_labeled: usize,
    pub seed: u64,
}

impl AlConfig {
    /// 20 initial points, top 20 by entropy, batches of 5.
    pub fn new(target_labeled: usize, seed: u64) -> Self {
        Self {
            init_labeled: 20,
            top_k: 20,
            batch: 5,
            target_labeled,
            seed,
        }
    }

    /// Number of query rounds needed to reach the target.
    pub fn iterations(&self) -> Result<usize> {
        if self.batch == 0 || self.batch > self.top_k {
            return Err(Error::ConfigInfeasible(format!(
                "batch {} must be in 1..={}",
                self.batch, self.top_k
            )));
        }
        if self.target_labeled < self.init_labeled
            || (self.target_labeled - self.init_labeled) % self.batch != 0
        {
            return Err(Error::ConfigInfeasible(format!(
                "target {} is not {} plus a multiple of {}",
                self.target_labeled, self.init_labeled, self.batch
            )));
        }
        Ok((self.target_labeled - self.init_labeled) / self.batch)
    }
}

/// Hybrid selection from precomputed entropies. Returns positions into
/// `features`: the highest-entropy point first, then greedily the candidate
/// (among the `top_k` most uncertain) with the largest summed cosine
/// distance to those already chosen. Ties go to the lowest position.
pub fn select_batch_by_entropy(
    entropies: &[f64],
    features: &[FeatureVector],
    top_k: usize,
    batch: usize,
) -> Result<Vec<usize>> {
    if entropies.len() != features.len() {
        return Err(Error::LengthMismatch {
            left: entropies.len(),
            right: features.len(),
        });
    }
    if features.len() < top_k || batch > top_k {
        return Err(Error::PoolExhausted {
            available: features.len(),
            required: top_k.max(batch),
        });
    }
    let mut ranked: Vec<usize> = (0..features.len()).collect();
    ranked.sort_by(|&a, &b| entropies[b].total_cmp(&entropies[a]).then(a.cmp(&b)));
    ranked.truncate(top_k);
    if batch == 0 {
        return Ok(Vec::new());
    }

    let mut chosen = vec![ranked[0]];
    let mut rest: Vec<usize> = ranked[1..].to_vec();
    rest.sort_unstable();
    let mut diversity = vec![0.0; rest.len()];
    while chosen.len() < batch {
        let last = features[*chosen.last().unwrap()];
        let mut best = 0;
        for (i, &r) in rest.iter().enumerate() {
            diversity[i] += cosine_distance(&features[r], &last)?;
            if diversity[i] > diversity[best] {
                best = i;
            }
        }
        chosen.push(rest.remove(best));
        diversity.remove(best);
    }
    Ok(chosen)
}

/// Scores `pool` with `model` and selects a batch (positions into `pool`).
pub fn select_batch(
    model: &GbtModel,
    pool: &[FeatureVector],
    config: &AlConfig,
) -> Result<Vec<usize>> {
    let entropies: Vec<f64> = pool
        .par_iter()
        .map(|f| entropy(&model.predict_proba(f)))
        .collect();
    select_batch_by_entropy(&entropies, pool, config.top_k, config.batch)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub labeled_count: usize,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct AlRun {
    pub model: GbtModel,
    /// One point per trained model, starting with the initial labeled set.
    pub learning_curve: Vec<CurvePoint>,
    /// Original pool indices of the initial labeled set.
    pub initial: Vec<usize>,
    /// Original pool indices queried at each iteration.
    pub batches: Vec<Vec<usize>>,
}

impl AlRun {
    /// Every pool index that ended up labeled, in query order.
    pub fn labeled(&self) -> Vec<usize> {
        self.initial
            .iter()
            .chain(self.batches.iter().flatten())
            .copied()
            .collect()
    }
}

/// Runs the query loop on `pool`, whose stored labels serve as the oracle.
/// A single generator seeded from `config.seed` draws the initial set and
/// drives every retraining.
pub fn run_al(
    pool: &Dataset,
    test: &Dataset,
    config: &AlConfig,
    params: &GbtParams,
) -> Result<AlRun> {
    run_al_observed(pool, test, config, params, &mut |_, _| {})
}

/// [`run_al`] that also hands each freshly trained model to `observe`
/// together with its iteration number.
pub fn run_al_observed(
    pool: &Dataset,
    test: &Dataset,
    config: &AlConfig,
    params: &GbtParams,
    observe: &mut dyn FnMut(usize, &GbtModel),
) -> Result<AlRun> {
    let iterations = config.iterations()?;
    if config.target_labeled > pool.len() {
        return Err(Error::PoolExhausted {
            available: pool.len(),
            required: config.target_labeled,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(&mut rng);
    let initial: Vec<usize> = order[..config.init_labeled].to_vec();
    let mut labeled = initial.clone();
    let mut unlabeled: Vec<usize> = order[config.init_labeled..].to_vec();
    unlabeled.sort_unstable();

    let pool_features = pool.features();
    let test_features = test.features();
    let test_labels = test.labels();
    let mut curve = Vec::with_capacity(iterations + 1);
    let mut batches = Vec::with_capacity(iterations);

    let mut iteration = 0;
    loop {
        let model = train_gbt(&pool.subset(&labeled), params, &mut rng)?;
        observe(iteration, &model);
        let probs = model.predict_proba_batch(&test_features);
        let acc = accuracy(&predicted_labels(&probs), &test_labels)?;
        curve.push(CurvePoint {
            labeled_count: labeled.len(),
            test_accuracy: acc,
        });
        if iteration == iterations {
            return Ok(AlRun {
                model,
                learning_curve: curve,
                initial,
                batches,
            });
        }
        let candidates: Vec<FeatureVector> = unlabeled.iter().map(|&i| pool_features[i]).collect();
        let picked = select_batch(&model, &candidates, config)?;
        let mut taken: Vec<usize> = picked.iter().map(|&p| unlabeled[p]).collect();
        log::debug!("iteration {iteration}: queried {taken:?}");
        let mut drop = picked;
        drop.sort_unstable_by(|a, b| b.cmp(a));
        for p in drop {
            unlabeled.remove(p);
        }
        labeled.extend_from_slice(&taken);
        batches.push(std::mem::take(&mut taken));
        iteration += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&[0.5, 0.5]), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
        assert_abs_diff_eq!(entropy(&[0.25; 4]), 4f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn cosine_examples() {
        let e1 = FeatureVector::new(1.0, 0.0, 0.0);
        let e2 = FeatureVector::new(0.0, 1.0, 0.0);
        let a = FeatureVector::new(0.3, -0.2, 0.1);
        assert_abs_diff_eq!(cosine_distance(&a, &a).unwrap(), 0.0, epsilon = 1e-15);
        assert_eq!(cosine_distance(&e1, &e2).unwrap(), 1.0);
        assert_eq!(cosine_distance(&e1, &FeatureVector::new(-1.0, 0.0, 0.0)).unwrap(), 2.0);
        assert!(matches!(
            cosine_distance(&e1, &FeatureVector::new(0.0, 0.0, 0.0)),
            Err(Error::ZeroNorm)
        ));
    }

    #[test]
    fn batch_of_one_is_argmax() {
        let ent = [0.1, 0.5, 0.3, 0.6, 0.2];
        let fs = vec![FeatureVector::new(0.5, 0.1, 0.1); 5];
        assert_eq!(select_batch_by_entropy(&ent, &fs, 3, 1).unwrap(), vec![3]);
    }

    #[test]
    fn identical_vectors_fall_back_to_index_order() {
        let ent = vec![0.4; 30];
        let fs = vec![FeatureVector::new(0.5, 0.2, -0.1); 30];
        assert_eq!(select_batch_by_entropy(&ent, &fs, 20, 5).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn planted_pool_matches_recomputation() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let fs: Vec<FeatureVector> = (0..30)
                .map(|_| FeatureVector::new(rng.gen_range(0.0..1.0), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
                .collect();
            let ent: Vec<f64> = (0..30).map(|_| rng.gen_range(0.0..0.7)).collect();

            let mut top: Vec<usize> = (0..30).collect();
            top.sort_by(|&a, &b| ent[b].partial_cmp(&ent[a]).unwrap());
            top.truncate(20);
            let mut chosen = vec![top[0]];
            while chosen.len() < 5 {
                let score = |c: usize| -> f64 {
                    chosen.iter().map(|&s| cosine_distance(&fs[c], &fs[s]).unwrap()).sum()
                };
                let next = top
                    .iter()
                    .copied()
                    .filter(|c| !chosen.contains(c))
                    .fold(None, |best: Option<usize>, c| match best {
                        Some(b) if score(b) > score(c) || (score(b) == score(c) && b < c) => Some(b),
                        _ => Some(c),
                    })
                    .unwrap();
                chosen.push(next);
            }
            assert_eq!(select_batch_by_entropy(&ent, &fs, 20, 5).unwrap(), chosen);
        }
    }

    #[test]
    fn pool_exhausted() {
        let fs = vec![FeatureVector::new(0.5, 0.2, -0.1); 10];
        assert!(matches!(
            select_batch_by_entropy(&[0.1; 10], &fs, 20, 5),
            Err(Error::PoolExhausted { available: 10, required: 20 })
        ));
    }

    #[test]
    fn config_arithmetic() {
        assert_eq!(AlConfig::new(1000, 0).iterations().unwrap(), 196);
        assert_eq!(AlConfig::new(20, 0).iterations().unwrap(), 0);
        assert!(matches!(
            AlConfig::new(1002, 0).iterations(),
            Err(Error::ConfigInfeasible(_))
        ));
    }
}
