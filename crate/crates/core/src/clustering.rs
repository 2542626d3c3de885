//! Density-based clustering over precomputed pairwise scores.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreKind {
    ShapeScore,
    ScribbleScore,
}

/// Dense symmetric `n x n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub n: usize,
    pub values: Vec<f64>,
    pub kind: ScoreKind,
}

impl ScoreMatrix {
    pub fn from_fn(n: usize, kind: ScoreKind, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        use rayon::prelude::*;
        let upper: Vec<(usize, usize, f64)> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, f(i, j)))
            .collect();
        let mut values = vec![0.0; n * n];
        for (i, j, v) in upper {
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
        ScoreMatrix { n, values, kind }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Dense symmetric distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        DistanceMatrix { n, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_square_csv(writer, self.n, &self.values)
    }
}

pub fn write_square_csv<W: Write>(writer: W, n: usize, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for i in 0..n {
        w.write_record(values[i * n..(i + 1) * n].iter().map(|v| v.to_string()))
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// `d = 1 - score`, floored at 0.
pub fn score_to_distance(scores: &ScoreMatrix) -> DistanceMatrix {
    let n = scores.n;
    let mut values: Vec<f64> = scores.values.iter().map(|s| (1.0 - s).max(0.0)).collect();
    for i in 0..n {
        values[i * n + i] = 0.0;
    }
    DistanceMatrix { n, values }
}

/// Distance from every item to its `k`-th nearest other item.
pub fn k_distances(d: &DistanceMatrix, k: usize) -> Vec<f64> {
    (0..d.n)
        .map(|i| {
            let mut row: Vec<f64> = (0..d.n).filter(|&j| j != i).map(|j| d.get(i, j)).collect();
            row.sort_by(f64::total_cmp);
            row[(k.max(1) - 1).min(row.len() - 1)]
        })
        .collect()
}

/// Knee of the descending k-distance curve: the point farthest from the
/// chord joining the curve's end points. A flat curve yields its median.
pub fn select_epsilon(d: &DistanceMatrix, k: usize) -> Result<f64> {
    if d.n < 3 {
        return Err(Error::degenerate("epsilon selection needs at least 3 items"));
    }
    let mut curve = k_distances(d, k);
    curve.sort_by(|a, b| b.total_cmp(a));
    Ok(knee(&curve))
}

/// Knee of a descending curve sampled at unit spacing.
pub fn knee(curve: &[f64]) -> f64 {
    let n = curve.len();
    let (x0, y0) = (0.0, curve[0]);
    let (x1, y1) = ((n - 1) as f64, curve[n - 1]);
    let (dx, dy) = (x1 - x0, y1 - y0);
    let norm = (dx * dx + dy * dy).sqrt();
    let mut best = (0.0, 0usize);
    for (i, &y) in curve.iter().enumerate() {
        let dev = if norm > 0.0 {
            (dy * (i as f64 - x0) - dx * (y - y0)).abs() / norm
        } else {
            0.0
        };
        if dev > best.0 {
            best = (dev, i);
        }
    }
    if best.0 < 1e-9 {
        let mut sorted = curve.to_vec();
        sorted.sort_by(f64::total_cmp);
        return if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
    }
    curve[best.1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// Cluster id per item; `None` marks noise.
    pub labels: Vec<Option<usize>>,
    pub epsilon: f64,
    pub min_pts: usize,
}

impl Clustering {
    pub fn n_clusters(&self) -> usize {
        self.labels.iter().flatten().map(|c| c + 1).max().unwrap_or(0)
    }

    /// Member lists per cluster id.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters()];
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(c) = l {
                out[*c].push(i);
            }
        }
        out
    }

    /// Gives every noise item its own cluster, numbered after the existing
    /// ones in item order.
    pub fn with_noise_as_singletons(mut self) -> Self {
        let mut next = self.n_clusters();
        for l in self.labels.iter_mut() {
            if l.is_none() {
                *l = Some(next);
                next += 1;
            }
        }
        self
    }
}

/// DBSCAN on a precomputed metric; neighbors satisfy `d <= epsilon` and the
/// neighborhood count includes the item itself. Cluster ids follow the
/// index of their first core item.
pub fn dbscan(d: &DistanceMatrix, epsilon: f64, min_pts: usize) -> Clustering {
    let n = d.n;
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && d.get(i, j) <= epsilon).collect())
        .collect();
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() + 1 >= min_pts).collect();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for start in 0..n {
        if labels[start].is_some() || !is_core[start] {
            continue;
        }
        labels[start] = Some(next);
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            for &q in &neighbors[p] {
                if labels[q].is_none() {
                    labels[q] = Some(next);
                    if is_core[q] {
                        stack.push(q);
                    }
                }
            }
        }
        next += 1;
    }
    Clustering {
        labels,
        epsilon,
        min_pts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn union_find_components(d: &DistanceMatrix, eps: f64) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..d.n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for i in 0..d.n {
            for j in i + 1..d.n {
                if d.get(i, j) <= eps {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        (0..d.n).map(|i| find(&mut parent, i)).collect()
    }

    fn same_partition(a: &[Option<usize>], roots: &[usize], isolated: &[bool]) -> bool {
        let n = a.len();
        for i in 0..n {
            if isolated[i] != a[i].is_none() {
                return false;
            }
            for j in 0..n {
                if !isolated[i] && !isolated[j] && (a[i] == a[j]) != (roots[i] == roots[j]) {
                    return false;
                }
            }
        }
        true
    }

    fn random_matrix(values: &[f64], n: usize) -> DistanceMatrix {
        DistanceMatrix::from_fn(n, |i, j| values[(i * 31 + j * 17) % values.len()])
    }

    #[test]
    fn score_to_distance_is_linear() {
        let s = ScoreMatrix {
            n: 2,
            values: vec![0.0, -25.0, -25.0, 0.0],
            kind: ScoreKind::ScribbleScore,
        };
        assert_eq!(score_to_distance(&s).get(0, 1), 26.0);
        let s = ScoreMatrix::from_fn(3, ScoreKind::ShapeScore, |i, j| if i + j == 1 { 1.0 } else { 0.0 });
        let d = score_to_distance(&s);
        assert_eq!(d.get(0, 1), 0.0);
        assert_eq!(d.get(0, 2), 1.0);
    }

    #[test]
    fn chain_is_one_cluster() {
        let d = DistanceMatrix::from_fn(3, |i, j| if i + j == 2 && i != j { 0.9 } else { 0.1 });
        let c = dbscan(&d, 0.2, 2);
        assert_eq!(c.labels, vec![Some(0); 3]);
    }

    #[test]
    fn isolated_item_is_noise() {
        let d = DistanceMatrix::from_fn(3, |i, j| if i == 2 || j == 2 { 0.9 } else { 0.1 });
        let c = dbscan(&d, 0.2, 2);
        assert_eq!(c.labels, vec![Some(0), Some(0), None]);
        assert_eq!(c.with_noise_as_singletons().labels, vec![Some(0), Some(0), Some(1)]);
    }

    /// Two chains of ten items with 0.0625 spacing plus two outliers;
    /// distances are capped at 0.9.
    fn two_groups() -> (DistanceMatrix, Vec<usize>) {
        let pos: Vec<f64> = (0..10)
            .map(|i| i as f64 * 0.0625)
            .chain((0..10).map(|i| 10.0 + i as f64 * 0.0625))
            .chain([5.0, 20.0])
            .collect();
        let group: Vec<usize> = (0..22).map(|i| if i < 10 { 0 } else if i < 20 { 1 } else { 2 + i - 20 }).collect();
        (DistanceMatrix::from_fn(pos.len(), |i, j| (pos[i] - pos[j]).abs().min(0.9)), group)
    }

    #[test]
    fn knee_separates_within_and_between_group_distances() {
        let (d, group) = two_groups();
        let eps = select_epsilon(&d, 1).unwrap();
        assert!(eps > 0.05 && eps < 0.9, "{eps}");
        let c = dbscan(&d, eps, 2);
        for i in 0..22 {
            for j in 0..22 {
                if group[i] < 2 && group[j] < 2 {
                    assert_eq!(c.labels[i] == c.labels[j], group[i] == group[j]);
                }
            }
        }
        assert_eq!(c.labels[20], None);
        assert_eq!(c.labels[21], None);
    }

    #[test]
    fn flat_curve_falls_back_to_median() {
        let d = DistanceMatrix::from_fn(3, |_, _| 0.4);
        assert_eq!(select_epsilon(&d, 1).unwrap(), 0.4);
        assert!(select_epsilon(&DistanceMatrix::from_fn(2, |_, _| 1.0), 1).is_err());
    }

    proptest! {
        #[test]
        fn min_pts_two_equals_threshold_components(
            values in prop::collection::vec(0.0..1.0f64, 60),
            eps in 0.0..0.3f64,
        ) {
            let d = random_matrix(&values, 50);
            let c = dbscan(&d, eps, 2);
            let roots = union_find_components(&d, eps);
            let isolated: Vec<bool> = (0..50).map(|i| (0..50).all(|j| j == i || d.get(i, j) > eps)).collect();
            prop_assert!(same_partition(&c.labels, &roots, &isolated));
        }

        #[test]
        fn reordering_items_relabels_only(
            values in prop::collection::vec(0.0..1.0f64, 40),
            eps in 0.0..0.3f64,
            rot in 1usize..30,
        ) {
            let d = random_matrix(&values, 30);
            let perm: Vec<usize> = (0..30).map(|i| (i + rot) % 30).collect();
            let dp = DistanceMatrix::from_fn(30, |i, j| d.get(perm[i], perm[j]));
            let a = dbscan(&d, eps, 2).labels;
            let b = dbscan(&dp, eps, 2).labels;
            for i in 0..30 {
                for j in 0..30 {
                    prop_assert_eq!(a[perm[i]] == a[perm[j]], b[i] == b[j]);
                }
            }
        }

        #[test]
        fn lowering_epsilon_never_merges(
            values in prop::collection::vec(0.0..1.0f64, 40),
            eps in 0.05..0.4f64,
            shrink in 0.0..1.0f64,
        ) {
            let d = random_matrix(&values, 30);
            let hi = dbscan(&d, eps, 2).with_noise_as_singletons();
            let lo = dbscan(&d, eps * shrink, 2).with_noise_as_singletons();
            prop_assert!(lo.n_clusters() >= hi.n_clusters());
        }
    }
}
