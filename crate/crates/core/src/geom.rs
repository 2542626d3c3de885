//! Small geometric primitives shared by every stage.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Cumulative Euclidean length of a polyline.
pub fn arc_length(points: &[Vec3]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::degenerate("arc length needs at least 2 points"));
    }
    Ok(points.windows(2).map(|w| (w[1] - w[0]).norm()).sum())
}

/// Cumulative arc length at every vertex, starting at 0.
pub fn cumulative_lengths(points: &[Vec3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            acc += (p - points[i - 1]).norm();
        }
        out.push(acc);
    }
    out
}

/// Closest point on segment `[a, b]` to `p`, with its parameter in `[0, 1]`.
pub fn closest_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> (Vec3, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= f64::MIN_POSITIVE {
        return (*a, 0.0);
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    (p - closest_on_segment(p, a, b).0).norm()
}

pub fn point_polyline_distance(p: &Vec3, polyline: &[Vec3]) -> f64 {
    match polyline.len() {
        0 => f64::INFINITY,
        1 => (p - polyline[0]).norm(),
        _ => polyline
            .windows(2)
            .map(|w| point_segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Ramer-Douglas-Peucker simplification; returns the indices of kept vertices.
pub fn rdp_indices(points: &[Vec3], epsilon: f64) -> Vec<usize> {
    let n = points.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((start, end)) = stack.pop() {
        if end <= start + 1 {
            continue;
        }
        let (mut best, mut best_d) = (start, -1.0);
        for i in start + 1..end {
            let d = point_segment_distance(&points[i], &points[start], &points[end]);
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        if best_d > epsilon {
            keep[best] = true;
            stack.push((start, best));
            stack.push((best, end));
        }
    }
    keep.iter()
        .enumerate()
        .filter_map(|(i, &k)| k.then_some(i))
        .collect()
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Unit normal of a triangle, or `None` when it is degenerate.
pub fn triangle_normal(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<Vec3> {
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    (len > 1e-300).then(|| n / len)
}

/// Projects `p` along the triangle normal. Returns the signed offset when the
/// foot point falls inside the triangle (with a relative barycentric slack).
pub fn project_onto_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3, slack: f64) -> Option<f64> {
    let n = triangle_normal(a, b, c)?;
    let offset = (p - a).dot(&n);
    let q = p - n * offset;
    let v0 = b - a;
    let v1 = c - a;
    let v2 = q - a;
    let d00 = v0.dot(&v0);
    let d01 = v0.dot(&v1);
    let d11 = v1.dot(&v1);
    let d20 = v2.dot(&v0);
    let d21 = v2.dot(&v1);
    let denom = d00 * d11 - d01 * d01;
    if denom.abs() < 1e-300 {
        return None;
    }
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    let u = 1.0 - v - w;
    (u >= -slack && v >= -slack && w >= -slack).then_some(offset)
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut bb = Aabb {
            min: first,
            max: first,
        };
        for p in it {
            bb.min = bb.min.inf(p);
            bb.max = bb.max.sup(p);
        }
        Some(bb)
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    /// Scales the box about its center; each half-extent is then raised to at
    /// least `min_half_extent`.
    pub fn scaled(&self, factor: f64, min_half_extent: f64) -> Self {
        let c = self.center();
        let half = (self.max - self.min) * (0.5 * factor);
        let half = half.map(|h| h.max(min_half_extent));
        Aabb {
            min: c - half,
            max: c + half,
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.contains(&other.min) && self.contains(&other.max)
    }

    /// Lower bound on the distance between any point of `self` and `other`.
    pub fn gap(&self, other: &Aabb) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let g = (other.min[k] - self.max[k]).max(self.min[k] - other.max[k]).max(0.0);
            d2 += g * g;
        }
        d2.sqrt()
    }
}

/// Unit vector orthogonal to `v` (which need not be normalized).
pub fn any_orthogonal(v: &Vec3) -> Vec3 {
    let a = if v.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    v.cross(&a).normalize()
}
