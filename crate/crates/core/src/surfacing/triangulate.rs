//! Minimum-weight triangulation of a closed 3D polygon by interval dynamic
//! programming, with area and dihedral terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{triangle_area, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TriangulationWeights {
    pub area: f64,
    pub dihedral: f64,
}

impl Default for TriangulationWeights {
    fn default() -> Self {
        TriangulationWeights {
            area: 1.0,
            dihedral: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triangulation {
    /// Vertex index triples `(i, m, j)` with `i < m < j`.
    pub triangles: Vec<[usize; 3]>,
    pub weight: f64,
}

/// Unnormalized normal of triangle `(i, m, j)` in polygon order.
fn raw_normal(p: &[Vec3], t: [usize; 3]) -> Vec3 {
    (p[t[1]] - p[t[0]]).cross(&(p[t[2]] - p[t[0]]))
}

/// `1 - cos` of the angle between two triangle normals; 1 if either is
/// degenerate.
pub fn dihedral_penalty(p: &[Vec3], a: [usize; 3], b: [usize; 3]) -> f64 {
    let na = raw_normal(p, a);
    let nb = raw_normal(p, b);
    let (la, lb) = (na.norm(), nb.norm());
    if la == 0.0 || lb == 0.0 {
        return 1.0;
    }
    1.0 - (na.dot(&nb) / (la * lb)).clamp(-1.0, 1.0)
}

/// Whether a triangle has (near) zero area relative to the polygon size.
fn degenerate(p: &[Vec3], t: [usize; 3], eps: f64) -> bool {
    triangle_area(&p[t[0]], &p[t[1]], &p[t[2]]) <= eps
}

/// Total weight of an explicit triangulation: area terms plus one dihedral
/// term per pair of triangles sharing a diagonal.
pub fn triangulation_weight(p: &[Vec3], triangles: &[[usize; 3]], w: &TriangulationWeights) -> f64 {
    let mut total: f64 = triangles.iter().map(|t| w.area * triangle_area(&p[t[0]], &p[t[1]], &p[t[2]])).sum();
    let edges = |t: &[usize; 3]| [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])];
    for (x, a) in triangles.iter().enumerate() {
        for b in &triangles[x + 1..] {
            if edges(a).iter().any(|e| edges(b).contains(e)) {
                total += w.dihedral * dihedral_penalty(p, *a, *b);
            }
        }
    }
    total
}

/// Exact minimum over all triangulations, O(n^4). Triangles with area at
/// most `1e-12 * diameter^2` are avoided when any triangulation without them
/// exists. Ties keep the candidate with the larger apex index.
pub fn triangulate_polygon(points: &[Vec3], weights: &TriangulationWeights) -> Result<Triangulation> {
    let n = points.len();
    if n < 3 {
        return Err(Error::degenerate(format!("polygon needs 3 vertices, got {n}")));
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() == 0.0 {
                return Err(Error::degenerate(format!("polygon vertices {i} and {j} coincide")));
            }
        }
    }
    let diameter = points
        .iter()
        .flat_map(|a| points.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    let eps = 1e-12 * diameter * diameter;
    let strict = solve(points, weights, Some(eps));
    let (_, tris) = match strict {
        Some(r) => r,
        None => solve(points, weights, None).expect("unrestricted polygon always triangulates"),
    };
    let weight = triangulation_weight(points, &tris, weights);
    Ok(Triangulation { triangles: tris, weight })
}

/// DP over `best[i][j][m]`: cheapest triangulation of vertices `i..=j` whose
/// triangle on chord `(i, j)` has apex `m`.
fn solve(p: &[Vec3], w: &TriangulationWeights, forbid: Option<f64>) -> Option<(f64, Vec<[usize; 3]>)> {
    let n = p.len();
    let idx = |i: usize, j: usize, m: usize| (i * n + j) * n + m;
    let mut best = vec![f64::INFINITY; n * n * n];
    // child[(i, j, m)] = best apex for the sub-polygon under (i, m), given parent (i, m, j), and for (m, j)
    let mut child = vec![(usize::MAX, usize::MAX); n * n * n];
    for len in 2..n {
        for i in 0..n - len {
            let j = i + len;
            for m in i + 1..j {
                let t = [i, m, j];
                if forbid.is_some_and(|eps| degenerate(p, t, eps)) {
                    continue;
                }
                let mut cost = w.area * triangle_area(&p[i], &p[m], &p[j]);
                let mut pick = (usize::MAX, usize::MAX);
                // left side (i, m)
                if m > i + 1 {
                    let mut b = f64::INFINITY;
                    let mut arg = usize::MAX;
                    for k in (i + 1..m).rev() {
                        let c = best[idx(i, m, k)];
                        if c.is_finite() {
                            let c = c + w.dihedral * dihedral_penalty(p, t, [i, k, m]);
                            if c < b {
                                b = c;
                                arg = k;
                            }
                        }
                    }
                    cost += b;
                    pick.0 = arg;
                }
                if m + 1 < j {
                    let mut b = f64::INFINITY;
                    let mut arg = usize::MAX;
                    for k in (m + 1..j).rev() {
                        let c = best[idx(m, j, k)];
                        if c.is_finite() {
                            let c = c + w.dihedral * dihedral_penalty(p, t, [m, k, j]);
                            if c < b {
                                b = c;
                                arg = k;
                            }
                        }
                    }
                    cost += b;
                    pick.1 = arg;
                }
                best[idx(i, j, m)] = cost;
                child[idx(i, j, m)] = pick;
            }
        }
    }
    let mut root = (f64::INFINITY, usize::MAX);
    for m in (1..n - 1).rev() {
        let c = best[idx(0, n - 1, m)];
        if c < root.0 {
            root = (c, m);
        }
    }
    if !root.0.is_finite() {
        return None;
    }
    let mut tris = Vec::with_capacity(n - 2);
    let mut stack = vec![(0, n - 1, root.1)];
    while let Some((i, j, m)) = stack.pop() {
        tris.push([i, m, j]);
        let (l, r) = child[idx(i, j, m)];
        if m > i + 1 {
            stack.push((i, m, l));
        }
        if m + 1 < j {
            stack.push((m, j, r));
        }
    }
    tris.sort_unstable();
    Some((root.0, tris))
}
