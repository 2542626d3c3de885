//! Euclidean minimum spanning trees and tree paths.

use crate::geom::Vec3;

/// Adjacency lists of a tree with edge lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl Tree {
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn total_length(&self) -> f64 {
        self.adjacency.iter().flatten().map(|e| e.1).sum::<f64>() / 2.0
    }

    /// Tree distance from `root` to every vertex and each vertex's parent.
    pub fn distances_from(&self, root: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        let n = self.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![None; n];
        dist[root] = 0.0;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &(u, w) in &self.adjacency[v] {
                if dist[u].is_infinite() {
                    dist[u] = dist[v] + w;
                    parent[u] = Some(v);
                    stack.push(u);
                }
            }
        }
        (dist, parent)
    }

    /// Vertex sequence of the longest path, starting from the end point
    /// farthest from vertex 0.
    pub fn diameter_path(&self) -> Vec<usize> {
        if self.is_empty() {
            return Vec::new();
        }
        let farthest = |d: &[f64]| {
            (0..d.len())
                .max_by(|&a, &b| d[a].total_cmp(&d[b]).then(b.cmp(&a)))
                .unwrap()
        };
        let (d0, _) = self.distances_from(0);
        let a = farthest(&d0);
        let (da, parent) = self.distances_from(a);
        let b = farthest(&da);
        let mut path = vec![b];
        let mut v = b;
        while let Some(p) = parent[v] {
            path.push(p);
            v = p;
        }
        path.reverse();
        path
    }
}

/// Prim's algorithm on the complete Euclidean graph, O(n^2).
pub fn emst(points: &[Vec3]) -> Tree {
    let n = points.len();
    let mut adjacency = vec![Vec::new(); n];
    if n == 0 {
        return Tree { adjacency };
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut link = vec![0usize; n];
    in_tree[0] = true;
    for j in 1..n {
        best[j] = (points[j] - points[0]).norm_squared();
    }
    for _ in 1..n {
        let mut v = usize::MAX;
        let mut bv = f64::INFINITY;
        for j in 0..n {
            if !in_tree[j] && (best[j] < bv || v == usize::MAX) {
                bv = best[j];
                v = j;
            }
        }
        in_tree[v] = true;
        let w = (points[v] - points[link[v]]).norm();
        adjacency[v].push((link[v], w));
        adjacency[link[v]].push((v, w));
        for j in 0..n {
            if !in_tree[j] {
                let d = (points[j] - points[v]).norm_squared();
                if d < best[j] {
                    best[j] = d;
                    link[j] = v;
                }
            }
        }
    }
    Tree { adjacency }
}
