//! Model x feature-subset ablation on a fixed stratified 80/20 split.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cv::{default_grid, grid_search_cv, stratified_split};
use super::{Hyperparams, ModelKind};
use crate::error::Result;
use crate::features::{FeatureMask, FeatureMatrix, N_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Percentages in `[0, 100]`; Shape is the positive class.
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

impl Metrics {
    pub fn compute(pred: &[bool], truth: &[bool]) -> Metrics {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        let mut hits = 0usize;
        for (&p, &t) in pred.iter().zip(truth) {
            hits += (p == t) as usize;
            match (p, t) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        let pct = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
        Metrics {
            accuracy: pct(hits, truth.len()),
            precision: pct(tp, tp + fp),
            recall: pct(tp, tp + fn_),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub model: ModelKind,
    pub subset: String,
    pub mask: FeatureMask,
    pub hyperparams: Hyperparams,
    pub train: Metrics,
    pub test: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub rows: Vec<AblationRow>,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub grid: Vec<Hyperparams>,
    pub folds: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            grid: default_grid(),
            folds: 5,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

/// The four named subsets in table order.
pub fn named_subsets() -> Vec<(&'static str, FeatureMask)> {
    vec![
        ("GEO_OR_STY", FeatureMask::geo_or_sty()),
        ("GEO", FeatureMask::geo()),
        ("STY", FeatureMask::sty()),
        ("GEO_AND_STY", FeatureMask::geo_and_sty()),
    ]
}

/// Runs grid-search CV and held-out evaluation for every model and subset.
pub fn ablation_run(
    matrix: &FeatureMatrix,
    subsets: &[(&str, FeatureMask)],
    models: &[ModelKind],
    config: &AblationConfig,
) -> Result<AblationResult> {
    let (rows, y) = matrix.labeled_rows();
    let (train_idx, test_idx) = stratified_split(&y, config.test_fraction, config.seed)?;
    let pick = |idx: &[usize]| -> (Vec<[f64; N_FEATURES]>, Vec<bool>) {
        idx.iter().map(|&i| (rows[i], y[i])).unzip()
    };
    let (tr_x, tr_y) = pick(&train_idx);
    let (te_x, te_y) = pick(&test_idx);
    let mut out = Vec::new();
    for &kind in models {
        for (name, mask) in subsets {
            log::info!("ablation: {} on {name}", kind.name());
            let search = grid_search_cv(kind, &tr_x, &tr_y, *mask, &config.grid, config.folds, config.seed)?;
            let train_pred = search.model.predict_raw(&tr_x)?.is_shape();
            let test_pred = search.model.predict_raw(&te_x)?.is_shape();
            out.push(AblationRow {
                model: kind,
                subset: name.to_string(),
                mask: *mask,
                hyperparams: search.best,
                train: Metrics::compute(&train_pred, &tr_y),
                test: Metrics::compute(&test_pred, &te_y),
            });
        }
    }
    Ok(AblationResult {
        rows: out,
        n_train: train_idx.len(),
        n_test: test_idx.len(),
    })
}

impl AblationResult {
    pub fn get(&self, model: ModelKind, subset: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.model == model && r.subset == subset)
    }

    /// Two lines (Train, Test) per model/subset with accuracy, precision
    /// and recall in percent.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<20} {:<6} {:>9} {:>9} {:>9}", "model", "split", "accuracy", "precision", "recall");
        for r in &self.rows {
            let name = format!("{}_{}", r.model.name(), r.subset);
            for (split, m) in [("Train", r.train), ("Test", r.test)] {
                let label = if split == "Train" { name.as_str() } else { "" };
                let _ = writeln!(
                    s,
                    "{:<20} {:<6} {:>9.2} {:>9.2} {:>9.2}",
                    label, split, m.accuracy, m.precision, m.recall
                );
            }
        }
        s
    }
}
