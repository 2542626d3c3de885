//! Stratified splits and grid-search cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, train_on_rows, ForestModel, Hyperparams, ModelKind};
use crate::error::{Error, Result};
use crate::features::{FeatureMask, N_FEATURES};

/// The default hyper-parameter lattice searched by [`grid_search_cv`].
pub fn default_grid() -> Vec<Hyperparams> {
    let mut grid = Vec::new();
    for n_trees in [50, 100, 200] {
        for max_depth in [Some(4), Some(8), None] {
            for min_samples_leaf in [1, 5] {
                grid.push(Hyperparams {
                    n_trees,
                    max_depth,
                    min_samples_leaf,
                    features_per_split: None,
                });
            }
        }
    }
    grid
}

/// Assigns every row to one of `folds` folds, class by class, after a seeded
/// shuffle. Each fold receives rows of both classes when possible.
pub fn stratified_folds(y: &[bool], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config("at least 2 folds are required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; y.len()];
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if idx.len() < folds {
            return Err(Error::InsufficientData(format!(
                "class has {} rows, fewer than {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    Ok(assignment)
}

/// Stratified train/test split; returns `(train, test)` row indices in
/// ascending order.
pub fn stratified_split(y: &[bool], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        if n_test == 0 || n_test >= idx.len() {
            return Err(Error::InsufficientData(format!(
                "cannot split a class of {} rows into train and test",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn accuracy(pred: &[bool], truth: &[bool]) -> f64 {
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub hyperparams: Hyperparams,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: Hyperparams,
    pub table: Vec<CvRow>,
    /// Model refit on all rows with the best hyper-parameters.
    pub model: ForestModel,
}

fn depth_key(d: Option<usize>) -> usize {
    d.unwrap_or(usize::MAX)
}

/// Picks the grid point with the best mean validation accuracy; ties go to
/// fewer trees, then shallower trees, then larger leaves.
pub fn grid_search_cv(
    kind: ModelKind,
    rows: &[[f64; N_FEATURES]],
    y: &[bool],
    mask: FeatureMask,
    grid: &[Hyperparams],
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::Config("hyper-parameter grid is empty".into()));
    }
    let assignment = stratified_folds(y, folds, seed)?;
    let mut table = Vec::with_capacity(grid.len());
    for (g, hyper) in grid.iter().enumerate() {
        let mut fold_accuracy = Vec::with_capacity(folds);
        for fold in 0..folds {
            let (mut tr_x, mut tr_y, mut va_x, mut va_y) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for i in 0..rows.len() {
                if assignment[i] == fold {
                    va_x.push(rows[i]);
                    va_y.push(y[i]);
                } else {
                    tr_x.push(rows[i]);
                    tr_y.push(y[i]);
                }
            }
            let fold_seed = derive_seed(seed, (g * folds + fold) as u64 + 1);
            let model = train_on_rows(kind, &tr_x, &tr_y, mask, hyper, fold_seed)?;
            let pred = model.predict_raw(&va_x)?.is_shape();
            fold_accuracy.push(accuracy(&pred, &va_y));
        }
        let mean_accuracy = fold_accuracy.iter().sum::<f64>() / folds as f64;
        table.push(CvRow {
            hyperparams: *hyper,
            fold_accuracy,
            mean_accuracy,
        });
    }
    let best = table
        .iter()
        .min_by(|a, b| {
            b.mean_accuracy
                .total_cmp(&a.mean_accuracy)
                .then(a.hyperparams.n_trees.cmp(&b.hyperparams.n_trees))
                .then(depth_key(a.hyperparams.max_depth).cmp(&depth_key(b.hyperparams.max_depth)))
                .then(b.hyperparams.min_samples_leaf.cmp(&a.hyperparams.min_samples_leaf))
        })
        .map(|r| r.hyperparams)
        .expect("non-empty grid");
    let model = train_on_rows(kind, rows, y, mask, &best, seed)?;
    Ok(GridSearchResult { best, table, model })
}
