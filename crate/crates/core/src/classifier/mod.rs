//! Shape/Scribble stroke classification with tree ensembles.

pub mod ablation;
pub mod cv;
pub mod tree;

use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMask, FeatureMatrix, N_FEATURES};
use crate::sketch::StrokeLabel;
use crate::stats::RobustScaler;
use tree::{grow_classification, grow_regression, GrowParams, RegressionNode, TreeNode};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const BOOST_LEARNING_RATE: f64 = 0.1;
/// Depth used by boosted trees when the grid asks for unlimited depth.
pub const BOOST_DEPTH_CAP: usize = 6;
const BOOST_ROW_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "RF")]
    RandomForest,
    #[serde(rename = "XGBRF")]
    BoostedTrees,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "RF",
            ModelKind::BoostedTrees => "XGBRF",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "RF" | "rf" => Ok(ModelKind::RandomForest),
            "XGBRF" | "xgbrf" => Ok(ModelKind::BoostedTrees),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Defaults to `ceil(sqrt(|mask|))`.
    #[serde(default)]
    pub features_per_split: Option<usize>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: None,
        }
    }
}

impl Hyperparams {
    fn grow_params(&self, kind: ModelKind, mask: FeatureMask) -> GrowParams {
        let k = self
            .features_per_split
            .unwrap_or_else(|| (mask.len() as f64).sqrt().ceil() as usize)
            .clamp(1, mask.len().max(1));
        let max_depth = match kind {
            ModelKind::RandomForest => self.max_depth,
            ModelKind::BoostedTrees => Some(self.max_depth.unwrap_or(BOOST_DEPTH_CAP)),
        };
        GrowParams {
            max_depth,
            min_samples_leaf: self.min_samples_leaf.max(1),
            features_per_split: k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ensemble {
    Forest {
        trees: Vec<TreeNode>,
    },
    Boosted {
        base_score: f64,
        learning_rate: f64,
        trees: Vec<RegressionNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub version: u32,
    pub model: ModelKind,
    pub subset_mask: FeatureMask,
    pub scaling_params: RobustScaler,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub ensemble: Ensemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub labels: Vec<StrokeLabel>,
    /// Fraction of the ensemble voting Shape.
    pub shape_fraction: Vec<f64>,
    /// Fraction voting Scribble; sums with `shape_fraction` to exactly 1.
    pub scribble_fraction: Vec<f64>,
}

impl Prediction {
    pub fn is_shape(&self) -> Vec<bool> {
        self.labels.iter().map(|l| *l == StrokeLabel::Shape).collect()
    }
}

/// Independent per-tree seed derived from the model seed and a counter.
pub fn derive_seed(seed: u64, counter: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(seed ^ splitmix(counter))
}

/// Splits a fraction in `[0, 1]` into a pair that sums to exactly 1 by
/// always deriving the smaller share from the larger one.
fn complementary(shape: f64, scribble: f64) -> (f64, f64) {
    if shape >= 0.5 {
        (shape, 1.0 - shape)
    } else {
        (1.0 - scribble, scribble)
    }
}

/// Row order used for training, independent of the caller's order.
fn canonical_order(x: &[Vec<f64>], y: &[bool]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| {
        y[a].cmp(&y[b]).then_with(|| {
            x[a].iter()
                .zip(&x[b])
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    idx
}

/// Trains an ensemble on already-scaled rows.
pub fn fit_ensemble(
    kind: ModelKind,
    x: &[Vec<f64>],
    y: &[bool],
    mask: FeatureMask,
    hyper: &Hyperparams,
    seed: u64,
) -> Result<Ensemble> {
    let pos = y.iter().filter(|v| **v).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::InsufficientData("training data must contain both classes".into()));
    }
    if mask.is_empty() {
        return Err(Error::Config("feature mask is empty".into()));
    }
    if hyper.n_trees == 0 {
        return Err(Error::Config("n_trees must be positive".into()));
    }
    let order = canonical_order(x, y);
    let x: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
    let y: Vec<bool> = order.iter().map(|&i| y[i]).collect();
    let features = mask.indices();
    let params = hyper.grow_params(kind, mask);
    let n = x.len();
    Ok(match kind {
        ModelKind::RandomForest => {
            let trees = (0..hyper.n_trees)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
                    let samples: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                    grow_classification(&x, &y, &samples, &features, &params, &mut rng)
                })
                .collect();
            Ensemble::Forest { trees }
        }
        ModelKind::BoostedTrees => {
            let base_score = (pos as f64 / (n - pos) as f64).ln();
            let mut margin = vec![base_score; n];
            let mut trees = Vec::with_capacity(hyper.n_trees);
            let take = ((n as f64 * BOOST_ROW_FRACTION).ceil() as usize).clamp(1, n);
            for t in 0..hyper.n_trees {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
                let (grad, hess): (Vec<f64>, Vec<f64>) = margin
                    .iter()
                    .zip(&y)
                    .map(|(m, &label)| {
                        let p = sigmoid(*m);
                        (p - label as u8 as f64, (p * (1.0 - p)).max(1e-16))
                    })
                    .unzip();
                let mut samples = sample_indices(&mut rng, n, take).into_vec();
                samples.sort_unstable();
                let tree = grow_regression(&x, &grad, &hess, &samples, &features, &params, &mut rng);
                for (m, row) in margin.iter_mut().zip(&x) {
                    *m += BOOST_LEARNING_RATE * tree.predict(row);
                }
                trees.push(tree);
            }
            Ensemble::Boosted {
                base_score,
                learning_rate: BOOST_LEARNING_RATE,
                trees,
            }
        }
    })
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Ensemble {
    /// `(shape_fraction, scribble_fraction)` for one scaled row.
    pub fn vote(&self, row: &[f64]) -> (f64, f64) {
        match self {
            Ensemble::Forest { trees } => {
                let n = trees.len();
                let k = trees.iter().filter(|t| t.predict(row)).count();
                complementary(k as f64 / n as f64, (n - k) as f64 / n as f64)
            }
            Ensemble::Boosted {
                base_score,
                learning_rate,
                trees,
            } => {
                let m = base_score + learning_rate * trees.iter().map(|t| t.predict(row)).sum::<f64>();
                complementary(sigmoid(m), sigmoid(-m))
            }
        }
    }

    /// Features referenced by any split.
    pub fn used_features(&self) -> Vec<usize> {
        let mut out: Vec<usize> = match self {
            Ensemble::Forest { trees } => trees.iter().flat_map(|t| t.split_features()).collect(),
            Ensemble::Boosted { trees, .. } => trees.iter().flat_map(|t| t.split_features()).collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Drops unlabeled and Noise rows; returns raw rows and "is Shape" targets.
pub fn training_rows(matrix: &FeatureMatrix) -> (Vec<[f64; N_FEATURES]>, Vec<bool>) {
    matrix.labeled_rows()
}

/// Fits the scaler on `rows` and trains a model of the given kind.
pub fn train_on_rows(
    kind: ModelKind,
    rows: &[[f64; N_FEATURES]],
    y: &[bool],
    mask: FeatureMask,
    hyper: &Hyperparams,
    seed: u64,
) -> Result<ForestModel> {
    let scaler = RobustScaler::fit(rows)?;
    let x: Vec<Vec<f64>> = rows.iter().map(|r| scaler.transform_row(r).to_vec()).collect();
    let ensemble = fit_ensemble(kind, &x, y, mask, hyper, seed)?;
    Ok(ForestModel {
        version: MODEL_FORMAT_VERSION,
        model: kind,
        subset_mask: mask,
        scaling_params: scaler,
        hyperparams: *hyper,
        seed,
        ensemble,
    })
}

/// Random forest on the labeled rows of a feature matrix.
pub fn train_forest(
    matrix: &FeatureMatrix,
    mask: FeatureMask,
    hyper: &Hyperparams,
    seed: u64,
) -> Result<ForestModel> {
    let (rows, y) = training_rows(matrix);
    train_on_rows(ModelKind::RandomForest, &rows, &y, mask, hyper, seed)
}

impl ForestModel {
    /// Predicts rows that were already scaled with `scaling_params`.
    pub fn predict_scaled<R: AsRef<[f64]> + Sync>(&self, rows: &[R]) -> Result<Prediction> {
        if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != N_FEATURES) {
            return Err(Error::SchemaMismatch {
                expected: N_FEATURES,
                actual: bad.as_ref().len(),
            });
        }
        let votes: Vec<(f64, f64)> = rows.par_iter().map(|r| self.ensemble.vote(r.as_ref())).collect();
        Ok(Prediction {
            labels: votes
                .iter()
                .map(|(s, _)| if *s >= 0.5 { StrokeLabel::Shape } else { StrokeLabel::Scribble })
                .collect(),
            shape_fraction: votes.iter().map(|v| v.0).collect(),
            scribble_fraction: votes.iter().map(|v| v.1).collect(),
        })
    }

    /// Scales raw feature rows and predicts them.
    pub fn predict_raw(&self, rows: &[[f64; N_FEATURES]]) -> Result<Prediction> {
        let scaled = self.scaling_params.transform(rows);
        self.predict_scaled(&scaled)
    }

    pub fn predict(&self, matrix: &FeatureMatrix) -> Result<Prediction> {
        let rows: Vec<[f64; N_FEATURES]> = matrix.rows.iter().map(|r| r.to_array()).collect();
        self.predict_raw(&rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ForestModel = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported model format version {}",
                model.version
            )));
        }
        if model.scaling_params.p5.len() != N_FEATURES || model.scaling_params.p95.len() != N_FEATURES {
            return Err(Error::SchemaMismatch {
                expected: N_FEATURES,
                actual: model.scaling_params.p5.len(),
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}
