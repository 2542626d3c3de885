//! A static 3-d tree over a point set.
//!
//! The tree is stored implicitly: `order` is a permutation of the point
//! indices laid out so that the median of every sub-range is the node and the
//! split axis cycles with depth.

use crate::geom::Vec3;

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Vec3>,
    order: Vec<usize>,
}

impl SpatialIndex {
    pub fn new(points: Vec<Vec3>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(&points, &mut order, 0);
        SpatialIndex { points, order }
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest point index and its distance. Ties resolve to the lower index.
    pub fn nearest(&self, query: &Vec3) -> Option<(usize, f64)> {
        self.k_nearest(query, 1).into_iter().next()
    }

    /// The `k` nearest points sorted by (distance, index).
    pub fn k_nearest(&self, query: &Vec3, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.knn_rec(query, k, 0, self.order.len(), 0, &mut best);
        best.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
    }

    fn knn_rec(
        &self,
        q: &Vec3,
        k: usize,
        lo: usize,
        hi: usize,
        depth: usize,
        best: &mut Vec<(f64, usize)>,
    ) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = &self.points[idx];
        let d2 = (p - q).norm_squared();
        insert_candidate(best, k, (d2, idx));

        let axis = depth % 3;
        let diff = q[axis] - p[axis];
        let (first, second) = if diff <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.knn_rec(q, k, first.0, first.1, depth + 1, best);
        let worst = if best.len() < k {
            f64::INFINITY
        } else {
            best[best.len() - 1].0
        };
        if diff * diff <= worst {
            self.knn_rec(q, k, second.0, second.1, depth + 1, best);
        }
    }

    /// Indices of all points within `radius` (inclusive), ascending.
    pub fn within_radius(&self, query: &Vec3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.radius_rec(query, radius * radius, 0, self.order.len(), 0, &mut |i| {
            out.push(i)
        });
        out.sort_unstable();
        out
    }

    pub fn count_within_radius(&self, query: &Vec3, radius: f64) -> usize {
        let mut n = 0;
        self.radius_rec(query, radius * radius, 0, self.order.len(), 0, &mut |_| n += 1);
        n
    }

    pub fn any_within_radius(&self, query: &Vec3, radius: f64) -> bool {
        self.nearest(query).is_some_and(|(_, d)| d <= radius)
    }

    fn radius_rec(
        &self,
        q: &Vec3,
        r2: f64,
        lo: usize,
        hi: usize,
        depth: usize,
        visit: &mut dyn FnMut(usize),
    ) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = &self.points[idx];
        if (p - q).norm_squared() <= r2 {
            visit(idx);
        }
        let axis = depth % 3;
        let diff = q[axis] - p[axis];
        if diff <= 0.0 || diff * diff <= r2 {
            self.radius_rec(q, r2, lo, mid, depth + 1, visit);
        }
        if diff >= 0.0 || diff * diff <= r2 {
            self.radius_rec(q, r2, mid + 1, hi, depth + 1, visit);
        }
    }
}

fn insert_candidate(best: &mut Vec<(f64, usize)>, k: usize, cand: (f64, usize)) {
    let pos = best.partition_point(|b| (b.0, b.1) < cand);
    if pos >= k {
        return;
    }
    best.insert(pos, cand);
    best.truncate(k);
}

fn build(points: &[Vec3], order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a][axis]
            .total_cmp(&points[b][axis])
            .then(a.cmp(&b))
    });
    let (left, right) = order.split_at_mut(mid);
    build(points, left, depth + 1);
    build(points, &mut right[1..], depth + 1);
}
