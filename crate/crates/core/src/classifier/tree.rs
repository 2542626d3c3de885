//! CART trees: Gini classification trees for the forest and second-order
//! regression trees for boosting. Samples with `x[f] <= threshold` go left;
//! thresholds are always observed training values.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature_index: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    /// Counts of `[Scribble, Shape]` training samples.
    Leaf { class_counts: [u32; 2] },
}

impl TreeNode {
    /// Majority class of the reached leaf; a tie goes to Shape.
    pub fn predict(&self, x: &[f64]) -> bool {
        let [scribble, shape] = self.leaf(x);
        shape >= scribble
    }

    pub fn leaf(&self, x: &[f64]) -> [u32; 2] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Split {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature_index] <= *threshold { left } else { right },
                TreeNode::Leaf { class_counts } => return *class_counts,
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
            TreeNode::Leaf { .. } => 0,
        }
    }

    /// Feature indices used by every split, in pre-order.
    pub fn split_features(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            if let TreeNode::Split {
                feature_index,
                left,
                right,
                ..
            } = node
            {
                out.push(*feature_index);
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionNode {
    Split {
        feature_index: usize,
        threshold: f64,
        left: Box<RegressionNode>,
        right: Box<RegressionNode>,
    },
    Leaf { value: f64 },
}

impl RegressionNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                RegressionNode::Split {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature_index] <= *threshold { left } else { right },
                RegressionNode::Leaf { value } => return *value,
            }
        }
    }

    pub fn split_features(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            if let RegressionNode::Split {
                feature_index,
                left,
                right,
                ..
            } = node
            {
                out.push(*feature_index);
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Candidate features examined per node (non-constant ones only).
    pub features_per_split: usize,
}

/// Per-sample additive statistics used to score a split.
trait SplitStat: Copy + Default {
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    /// Node cost; a split is accepted when children cost less than the parent.
    fn cost(self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
struct Gini {
    n: f64,
    pos: f64,
}

impl SplitStat for Gini {
    fn add(self, o: Self) -> Self {
        Gini {
            n: self.n + o.n,
            pos: self.pos + o.pos,
        }
    }
    fn sub(self, o: Self) -> Self {
        Gini {
            n: self.n - o.n,
            pos: self.pos - o.pos,
        }
    }
    fn cost(self) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        let p = self.pos / self.n;
        self.n * 2.0 * p * (1.0 - p)
    }
}

pub const L2_REGULARIZATION: f64 = 1.0;

#[derive(Debug, Clone, Copy, Default)]
struct Newton {
    g: f64,
    h: f64,
}

impl SplitStat for Newton {
    fn add(self, o: Self) -> Self {
        Newton {
            g: self.g + o.g,
            h: self.h + o.h,
        }
    }
    fn sub(self, o: Self) -> Self {
        Newton {
            g: self.g - o.g,
            h: self.h - o.h,
        }
    }
    fn cost(self) -> f64 {
        -self.g * self.g / (self.h + L2_REGULARIZATION)
    }
}

/// Finds the lowest-cost split among up to `features_per_split` non-constant
/// features, visited in a random order. Returns `(feature, threshold)`.
fn find_split<S: SplitStat, R: Rng>(
    x: &[Vec<f64>],
    stat: &dyn Fn(usize) -> S,
    samples: &[usize],
    features: &[usize],
    params: &GrowParams,
    rng: &mut R,
) -> Option<(usize, f64)> {
    let total = samples.iter().fold(S::default(), |a, &i| a.add(stat(i)));
    let parent = total.cost();
    let min_leaf = params.min_samples_leaf.max(1);
    let n = samples.len();
    let mut order = features.to_vec();
    order.shuffle(rng);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut tried = 0;
    let mut values: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &f in &order {
        if tried >= params.features_per_split {
            break;
        }
        values.clear();
        values.extend(samples.iter().map(|&i| (x[i][f], i)));
        values.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if values[0].0 == values[n - 1].0 {
            continue;
        }
        tried += 1;
        let mut left = S::default();
        for i in 1..n {
            left = left.add(stat(values[i - 1].1));
            if i < min_leaf || n - i < min_leaf || values[i - 1].0 == values[i].0 {
                continue;
            }
            let cost = left.cost() + total.sub(left).cost();
            if best.is_none_or(|(b, _, _)| cost < b) {
                best = Some((cost, f, values[i - 1].0));
            }
        }
    }
    best.filter(|(c, _, _)| *c < parent - 1e-12 * parent.abs().max(1.0))
        .map(|(_, f, t)| (f, t))
}

/// Grows a Gini tree over `samples` (indices into `x`, duplicates allowed).
pub fn grow_classification<R: Rng>(
    x: &[Vec<f64>],
    y: &[bool],
    samples: &[usize],
    features: &[usize],
    params: &GrowParams,
    rng: &mut R,
) -> TreeNode {
    grow_cls(x, y, samples, features, params, rng, 0)
}

fn grow_cls<R: Rng>(
    x: &[Vec<f64>],
    y: &[bool],
    samples: &[usize],
    features: &[usize],
    params: &GrowParams,
    rng: &mut R,
    depth: usize,
) -> TreeNode {
    let pos = samples.iter().filter(|&&i| y[i]).count();
    let leaf = TreeNode::Leaf {
        class_counts: [(samples.len() - pos) as u32, pos as u32],
    };
    if pos == 0
        || pos == samples.len()
        || params.max_depth.is_some_and(|d| depth >= d)
        || samples.len() < 2 * params.min_samples_leaf.max(1)
    {
        return leaf;
    }
    let stat = |i: usize| Gini {
        n: 1.0,
        pos: y[i] as u8 as f64,
    };
    match find_split(x, &stat, samples, features, params, rng) {
        Some((f, thr)) => {
            let (l, r): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&i| x[i][f] <= thr);
            TreeNode::Split {
                feature_index: f,
                threshold: thr,
                left: Box::new(grow_cls(x, y, &l, features, params, rng, depth + 1)),
                right: Box::new(grow_cls(x, y, &r, features, params, rng, depth + 1)),
            }
        }
        None => leaf,
    }
}

/// Grows a Newton regression tree on per-sample gradients and hessians.
pub fn grow_regression<R: Rng>(
    x: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    samples: &[usize],
    features: &[usize],
    params: &GrowParams,
    rng: &mut R,
) -> RegressionNode {
    grow_reg(x, grad, hess, samples, features, params, rng, 0)
}

#[allow(clippy::too_many_arguments)]
fn grow_reg<R: Rng>(
    x: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    samples: &[usize],
    features: &[usize],
    params: &GrowParams,
    rng: &mut R,
    depth: usize,
) -> RegressionNode {
    let g: f64 = samples.iter().map(|&i| grad[i]).sum();
    let h: f64 = samples.iter().map(|&i| hess[i]).sum();
    let leaf = RegressionNode::Leaf {
        value: -g / (h + L2_REGULARIZATION),
    };
    if params.max_depth.is_some_and(|d| depth >= d) || samples.len() < 2 * params.min_samples_leaf.max(1) {
        return leaf;
    }
    let stat = |i: usize| Newton {
        g: grad[i],
        h: hess[i],
    };
    match find_split(x, &stat, samples, features, params, rng) {
        Some((f, thr)) => {
            let (l, r): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&i| x[i][f] <= thr);
            RegressionNode::Split {
                feature_index: f,
                threshold: thr,
                left: Box::new(grow_reg(x, grad, hess, &l, features, params, rng, depth + 1)),
                right: Box::new(grow_reg(x, grad, hess, &r, features, params, rng, depth + 1)),
            }
        }
        None => leaf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(depth: Option<usize>) -> GrowParams {
        GrowParams {
            max_depth: depth,
            min_samples_leaf: 1,
            features_per_split: 2,
        }
    }

    #[test]
    fn stump_separates_two_points_per_class() {
        let x = vec![vec![0.0, 5.0], vec![0.1, 1.0], vec![0.9, 5.0], vec![1.0, 1.0]];
        let y = vec![false, false, true, true];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow_classification(&x, &y, &[0, 1, 2, 3], &[0, 1], &params(Some(1)), &mut rng);
        assert_eq!(t.depth(), 1);
        for (row, label) in x.iter().zip(&y) {
            assert_eq!(t.predict(row), *label);
        }
        if let TreeNode::Split { threshold, .. } = t {
            assert_eq!(threshold, 0.1);
        }
    }

    #[test]
    fn tied_leaf_predicts_shape() {
        let t = TreeNode::Leaf { class_counts: [3, 3] };
        assert!(t.predict(&[0.0]));
    }

    #[test]
    fn regression_leaf_is_newton_step() {
        let x = vec![vec![0.0], vec![1.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow_regression(&x, &[1.0, 1.0], &[0.5, 0.5], &[0, 1], &[0], &params(Some(0)), &mut rng);
        assert_eq!(t.predict(&[0.0]), -2.0 / 2.0);
    }
}
