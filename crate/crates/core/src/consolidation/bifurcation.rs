//! Splitting thinned clusters at branching points of their spanning tree.

use super::emst::{emst, Tree};
use crate::geom::Vec3;

pub const DEFAULT_BRANCH_RATIO: f64 = 0.05;
/// Sub-clusters with fewer points are discarded after a split.
pub const MIN_SUBCLUSTER_POINTS: usize = 4;

/// A vertex of degree >= 3 and the cumulative edge length of each branch
/// hanging off it, with the neighbor that starts the branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub vertex: usize,
    pub branches: Vec<(usize, f64)>,
}

impl BranchPoint {
    /// Third-longest branch over the longest one.
    pub fn ratio(&self) -> f64 {
        let mut lens: Vec<f64> = self.branches.iter().map(|b| b.1).collect();
        lens.sort_by(|a, b| b.total_cmp(a));
        if lens.len() < 3 || lens[0] <= 0.0 {
            return 0.0;
        }
        lens[2] / lens[0]
    }
}

/// Branch lengths at every vertex of degree >= 3, computed from subtree sums
/// of the tree rooted at vertex 0. A branch includes its connecting edge.
pub fn branch_points(tree: &Tree) -> Vec<BranchPoint> {
    let n = tree.len();
    if n == 0 {
        return Vec::new();
    }
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![0];
    parent[0] = 0;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(u, _) in &tree.adjacency[v] {
            if parent[u] == usize::MAX {
                parent[u] = v;
                stack.push(u);
            }
        }
    }
    let mut below = vec![0.0; n];
    for &v in order.iter().rev() {
        for &(u, w) in &tree.adjacency[v] {
            if u != parent[v] {
                below[v] += below[u] + w;
            }
        }
    }
    let total = below[0];
    (0..n)
        .filter(|&v| tree.degree(v) >= 3)
        .map(|v| {
            let branches = tree.adjacency[v]
                .iter()
                .map(|&(u, w)| {
                    if v != 0 && u == parent[v] {
                        (u, total - below[v])
                    } else {
                        (u, below[u] + w)
                    }
                })
                .collect();
            BranchPoint { vertex: v, branches }
        })
        .collect()
}

/// Vertices reachable from `start` without passing through `blocked`.
fn component(tree: &Tree, start: usize, blocked: usize) -> Vec<usize> {
    let mut seen = vec![false; tree.len()];
    seen[blocked] = true;
    seen[start] = true;
    let mut out = vec![start];
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &(u, _) in &tree.adjacency[v] {
            if !seen[u] {
                seen[u] = true;
                out.push(u);
                stack.push(u);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Recursively splits `points` at the strongest branching vertex whose third
/// branch is at least `ratio` of its longest. The split vertex is copied into
/// every branch. Branches with fewer than [`MIN_SUBCLUSTER_POINTS`] points or
/// spanning-tree length below `min_length` are dropped.
pub fn detect_and_split(points: &[Vec3], ratio: f64, min_length: f64) -> Vec<Vec<Vec3>> {
    let mut out = Vec::new();
    split_into(points.to_vec(), ratio, min_length, &mut out);
    out
}

fn split_into(points: Vec<Vec3>, ratio: f64, min_length: f64, out: &mut Vec<Vec<Vec3>>) {
    if points.len() < MIN_SUBCLUSTER_POINTS {
        out.push(points);
        return;
    }
    let tree = emst(&points);
    let best = branch_points(&tree)
        .into_iter()
        .filter(|b| b.ratio() >= ratio)
        .max_by(|a, b| a.ratio().total_cmp(&b.ratio()).then(b.vertex.cmp(&a.vertex)));
    let Some(best) = best else {
        out.push(points);
        return;
    };
    for &(u, len) in &best.branches {
        let mut idx = component(&tree, u, best.vertex);
        if idx.len() + 1 < MIN_SUBCLUSTER_POINTS || len < min_length {
            continue;
        }
        idx.push(best.vertex);
        idx.sort_unstable();
        split_into(idx.iter().map(|&i| points[i]).collect(), ratio, min_length, out);
    }
}
