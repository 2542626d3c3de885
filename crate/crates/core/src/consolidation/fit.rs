//! Ordering a sub-cluster along its spanning-tree diameter and fitting one
//! cubic segment.

use serde::{Deserialize, Serialize};

use super::emst::emst;
use crate::error::{Error, Result};
use crate::geom::{cumulative_lengths, Vec3};
use crate::spline::{fit_bezier, CubicBezier};

/// Reparameterization rounds after the initial fit.
const REFINE_ITERATIONS: usize = 20;

/// One consolidated Shape curve. The control points define a clamped cubic
/// B-spline with knots `[0, 0, 0, 0, 1, 1, 1, 1]`, i.e. a cubic Bezier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsolidatedCurve {
    pub curve_id: usize,
    pub source_cluster_id: usize,
    pub control_points: [Vec3; 4],
    pub mean_width: f64,
    pub source_stroke_ids: Vec<usize>,
    /// Largest distance from a source point to the curve.
    pub max_residual: f64,
}

impl ConsolidatedCurve {
    pub fn bezier(&self) -> CubicBezier {
        CubicBezier::new(self.control_points)
    }
}

/// Curve parameter in `[0, 1]` for every point: arc-length position of its
/// nearest diameter-path vertex (ties by distance, then index). Returns the
/// parameters and the two path ends.
pub fn order_along_diameter(points: &[Vec3]) -> (Vec<f64>, Vec3, Vec3) {
    let tree = emst(points);
    let path = tree.diameter_path();
    let path_pts: Vec<Vec3> = path.iter().map(|&i| points[i]).collect();
    let cum = cumulative_lengths(&path_pts);
    let total = *cum.last().unwrap();
    let mut on_path = vec![None; points.len()];
    for (k, &i) in path.iter().enumerate() {
        on_path[i] = Some(k);
    }
    let params = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let k = on_path[i].unwrap_or_else(|| {
                (0..path.len())
                    .min_by(|&a, &b| {
                        (path_pts[a] - p)
                            .norm()
                            .total_cmp(&(path_pts[b] - p).norm())
                            .then(path[a].cmp(&path[b]))
                    })
                    .unwrap()
            });
            if total > 0.0 {
                cum[k] / total
            } else {
                0.0
            }
        })
        .collect();
    (params, path_pts[0], *path_pts.last().unwrap())
}

fn max_distance(curve: &CubicBezier, points: &[Vec3]) -> f64 {
    points.iter().map(|p| curve.distance_to(p)).fold(0.0, f64::max)
}

/// Fits a four-control-point cubic to a sub-cluster. Fewer than four points
/// yield a straight segment between the farthest pair.
pub fn consolidate(points: &[Vec3]) -> Result<CubicBezier> {
    if points.is_empty() {
        return Err(Error::degenerate("cannot consolidate an empty point set"));
    }
    if points.len() < 4 {
        let (_, a, b) = order_along_diameter(points);
        return Ok(CubicBezier::line(a, b));
    }
    let (params, a, b) = order_along_diameter(points);
    if params.iter().all(|&u| u == 0.0) {
        return Ok(CubicBezier::line(a, b));
    }
    let sse = |c: &CubicBezier, u: &[f64]| -> f64 {
        points.iter().zip(u).map(|(p, &t)| (c.eval(t) - p).norm_squared()).sum()
    };
    let mut curve = fit_bezier(points, &params).unwrap_or_else(|_| CubicBezier::line(a, b));
    let mut err = sse(&curve, &params);
    for _ in 0..REFINE_ITERATIONS {
        let refined: Vec<f64> = points.iter().map(|p| curve.closest_param(p)).collect();
        let Ok(next) = fit_bezier(points, &refined) else { break };
        let next_err = sse(&next, &refined);
        if next_err >= err * (1.0 - 1e-6) {
            if next_err < err {
                curve = next;
            }
            break;
        }
        curve = next;
        err = next_err;
    }
    Ok(curve)
}

/// Builds the output record for a fitted sub-cluster.
pub fn consolidated_curve(
    curve_id: usize,
    source_cluster_id: usize,
    points: &[Vec3],
    mean_width: f64,
    source_stroke_ids: Vec<usize>,
) -> Result<ConsolidatedCurve> {
    let curve = consolidate(points)?;
    Ok(ConsolidatedCurve {
        curve_id,
        source_cluster_id,
        control_points: curve.control_points,
        mean_width,
        source_stroke_ids,
        max_residual: max_distance(&curve, points),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point_segment_distance;

    #[test]
    fn segment_points_give_the_segment() {
        let a = Vec3::new(0.0, 1.0, 2.0);
        let b = Vec3::new(1.0, 1.5, 2.0);
        let mut pts: Vec<Vec3> = (0..40).map(|i| a + (b - a) * (i as f64 / 39.0)).collect();
        pts.swap(3, 30);
        let c = consolidate(&pts).unwrap();
        for q in c.sample(100) {
            assert!(point_segment_distance(&q, &a, &b) < 1e-6);
        }
        assert!((c.start() - a).norm() < 1e-6 || (c.start() - b).norm() < 1e-6);
    }

    #[test]
    fn quarter_circle_within_two_percent() {
        let pts: Vec<Vec3> = (0..200)
            .map(|i| {
                let t = std::f64::consts::FRAC_PI_2 * i as f64 / 199.0;
                Vec3::new(t.cos(), t.sin(), 0.0)
            })
            .collect();
        let c = consolidate(&pts).unwrap();
        let worst = c.sample(400).iter().map(|q| (q.norm() - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst <= 0.02, "{worst}");
        assert!(max_distance(&c, &pts) <= 0.02);
    }

    #[test]
    fn tiny_sets_become_lines() {
        let pts = [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)];
        let c = consolidate(&pts).unwrap();
        assert!((c.length() - 1.0).abs() < 1e-9);
        assert!(consolidate(&[]).is_err());
    }
}
