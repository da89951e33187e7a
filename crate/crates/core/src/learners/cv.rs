//! Stratified k-fold cross-validation and grid search over boosting
//! hyperparameters.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::gbt::{train_gbt, GbtParams};
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{accuracy, predicted_labels};

/// Assigns each row a fold in `0..folds`. Rows of each class are shuffled,
/// then dealt round-robin with one counter running across classes, so fold
/// sizes differ by at most one.
pub fn stratified_folds<R: Rng + ?Sized>(data: &Dataset, folds: usize, rng: &mut R) -> Vec<usize> {
    let labels = data.labels();
    let mut assignment = vec![0; labels.len()];
    let mut counter = 0;
    for class in 0..data.mode().n_classes() as u8 {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rows.shuffle(rng);
        for r in rows {
            assignment[r] = counter % folds;
            counter += 1;
        }
    }
    assignment
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best: GbtParams,
    pub best_index: usize,
    /// Mean validation accuracy per grid point, in grid order.
    pub scores: Vec<f64>,
}

/// Mean validation accuracy of `params` over the given fold assignment.
/// Fold `k` trains with a generator seeded from `seed + k`.
pub fn cv_score(
    data: &Dataset,
    params: &GbtParams,
    assignment: &[usize],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..folds {
        let (train_idx, valid_idx): (Vec<usize>, Vec<usize>) =
            (0..data.len()).partition(|&i| assignment[i] != k);
        let train = data.subset(&train_idx);
        let valid = data.subset(&valid_idx);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let model = train_gbt(&train, params, &mut rng)?;
        let probs = model.predict_proba_batch(&valid.features());
        total += accuracy(&predicted_labels(&probs), &valid.labels())?;
    }
    Ok(total / folds as f64)
}

/// Picks the grid point with the highest mean validation accuracy; the
/// earliest point wins ties. Grid points are scored in parallel.
pub fn grid_search_cv(
    data: &Dataset,
    grid: &[GbtParams],
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    if folds < 2 || data.len() < folds {
        return Err(Error::InvalidInput(format!(
            "need at least 2 folds and one row per fold (folds={folds}, rows={})",
            data.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = stratified_folds(data, folds, &mut rng);
    let fold_seed: u64 = rng.gen();
    let scores = grid
        .par_iter()
        .map(|p| cv_score(data, p, &assignment, folds, fold_seed))
        .collect::<Result<Vec<f64>>>()?;
    let mut best_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best_index] {
            best_index = i;
        }
    }
    Ok(GridSearchResult {
        best: grid[best_index],
        best_index,
        scores,
    })
}

/// The pure-state grid: max_depth {3,4,5,6} x eta {0.05,0.1,0.2,0.3} x
/// subsample {0.8,0.9,1.0} x colsample_bytree {0.8,1.0}, other values from
/// `base`.
pub fn default_pure_grid(base: &GbtParams) -> Vec<GbtParams> {
    let mut grid = Vec::with_capacity(96);
    for max_depth in [3, 4, 5, 6] {
        for eta in [0.05, 0.1, 0.2, 0.3] {
            for subsample in [0.8, 0.9, 1.0] {
                for colsample_bytree in [0.8, 1.0] {
                    grid.push(GbtParams {
                        max_depth,
                        eta,
                        subsample,
                        colsample_bytree,
                        ..*base
                    });
                }
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{LabelMode, LabeledSample};
    use crate::qstate::FeatureVector;

    fn data(n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples = (0..n)
            .map(|i| {
                let label = (i % 2) as u8;
                let x: f64 = rng.gen();
                LabeledSample {
                    features: FeatureVector::new(x, rng.gen(), f64::from(label) * 0.3 + 0.7 * x),
                    label,
                }
            })
            .collect();
        Dataset::new(samples, LabelMode::Binary).unwrap()
    }

    #[test]
    fn fold_sizes_are_even() {
        let d = data(400);
        let a = stratified_folds(&d, 5, &mut ChaCha8Rng::seed_from_u64(1));
        for k in 0..5 {
            let rows: Vec<usize> = (0..400).filter(|&i| a[i] == k).collect();
            assert_eq!(rows.len(), 80);
            let pos = rows.iter().filter(|&&i| d.labels()[i] == 1).count();
            assert_eq!(pos, 40);
        }
    }

    #[test]
    fn single_point_grid() {
        let d = data(60);
        let p = GbtParams {
            n_rounds: 5,
            ..GbtParams::default()
        };
        let r = grid_search_cv(&d, &[p], 5, 9).unwrap();
        assert_eq!(r.best, p);
        assert_eq!(r.best_index, 0);
    }

    #[test]
    fn selects_argmax_with_earliest_tie() {
        let d = data(100);
        let base = GbtParams {
            n_rounds: 5,
            ..GbtParams::default()
        };
        let weak = GbtParams { eta: 0.0, ..base };
        let grid = [weak, base, base];
        let r = grid_search_cv(&d, &grid, 4, 2).unwrap();
        assert_eq!(r.scores[1], r.scores[2]);
        assert_eq!(r.best_index, 1);
        assert!(r.scores.iter().all(|&s| s <= r.scores[r.best_index]));
    }

    #[test]
    fn grid_shape() {
        let g = default_pure_grid(&GbtParams::default());
        assert_eq!(g.len(), 96);
        assert_eq!(g[0].max_depth, 3);
        assert_eq!(g[95].colsample_bytree, 1.0);
    }

    #[test]
    fn rejects_bad_folds() {
        let d = data(3);
        assert!(grid_search_cv(&d, &[GbtParams::default()], 5, 0).is_err());
        assert!(grid_search_cv(&d, &[GbtParams::default()], 1, 0).is_err());
    }
}
