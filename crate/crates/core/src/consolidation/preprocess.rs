//! Shape-stroke clean-up: de-duplication, hook trimming, spline smoothing and
//! uniform resampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{cumulative_lengths, Vec3};
use crate::sketch::StrokeRecord;
use crate::spline::{chord_length_params, fit_least_squares};

pub const DEDUP_DISTANCE: f64 = 1e-6;
/// Hook zone length in units of ink width.
pub const HOOK_ZONE_WIDTHS: f64 = 1.5;
pub const HOOK_ANGLE_DEG: f64 = 60.0;
pub const SAMPLE_SPACING_WIDTHS: f64 = 0.5;
pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessedStroke {
    pub stroke_id: usize,
    pub width: f64,
    pub points: Vec<Vec3>,
    /// Unit tangents of the smoothing spline at `points`.
    pub tangents: Vec<Vec3>,
}

/// Drops vertices closer than [`DEDUP_DISTANCE`] to the previously kept one.
pub fn dedupe(points: &[Vec3]) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().is_none_or(|q| (p - q).norm() >= DEDUP_DISTANCE) {
            out.push(*p);
        }
    }
    out
}

/// Index of the first vertex kept after trimming a hook at the start of
/// `points`. `zone` is the hook zone length.
fn hook_start(points: &[Vec3], zone: f64) -> usize {
    let cum = cumulative_lengths(points);
    let total = *cum.last().unwrap();
    if total <= 4.0 * zone {
        return 0;
    }
    // first vertex past the zone, and a reference direction beyond it
    let h = cum.iter().position(|&c| c >= zone).unwrap_or(points.len() - 1);
    let far = cum
        .iter()
        .position(|&c| c >= cum[h] + 2.0 * zone)
        .unwrap_or(points.len() - 1);
    let reference = points[far] - points[h];
    if reference.norm() == 0.0 {
        return 0;
    }
    let reference = reference.normalize();
    let cos_limit = HOOK_ANGLE_DEG.to_radians().cos();
    let mut cut = 0;
    for i in 0..h {
        let seg = points[i + 1] - points[i];
        let len = seg.norm();
        if len > 0.0 && seg.dot(&reference) / len < cos_limit {
            cut = i + 1;
        }
    }
    cut
}

/// Removes hooks at both ends of a polyline.
pub fn trim_hooks(points: &[Vec3], width: f64) -> Vec<Vec3> {
    let zone = HOOK_ZONE_WIDTHS * width;
    let start = hook_start(points, zone);
    let rev: Vec<Vec3> = points.iter().rev().copied().collect();
    let end = points.len() - hook_start(&rev, zone);
    if end <= start + 1 {
        return points.to_vec();
    }
    points[start..end].to_vec()
}

/// Inserts vertices by linear interpolation until there are at least `n`.
fn densify(points: &[Vec3], n: usize) -> Vec<Vec3> {
    if points.len() >= n {
        return points.to_vec();
    }
    let cum = cumulative_lengths(points);
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let target = total * i as f64 / (n - 1) as f64;
        while seg + 2 < points.len() && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let f = if span > 0.0 { ((target - cum[seg]) / span).clamp(0.0, 1.0) } else { 0.0 };
        out.push(points[seg] + (points[seg + 1] - points[seg]) * f);
    }
    out
}

pub fn control_point_count(n_vertices: usize) -> usize {
    n_vertices.div_ceil(4).clamp(4, 16)
}

pub fn preprocess_stroke(stroke_id: usize, stroke: &StrokeRecord) -> Result<PreprocessedStroke> {
    let width = stroke.ink_width;
    let raw = dedupe(&stroke.positions());
    if raw.len() < 2 {
        return Err(Error::degenerate(format!("stroke {stroke_id} has all vertices coincident")));
    }
    let trimmed = trim_hooks(&raw, width);
    let n_ctrl = control_point_count(trimmed.len());
    let pts = densify(&trimmed, 2 * n_ctrl);
    let params = chord_length_params(&pts);
    let spline = fit_least_squares(&pts, &params, n_ctrl)?;
    let (us, points) = spline.resample_by_arc_length(SAMPLE_SPACING_WIDTHS * width, MIN_SAMPLES);
    let chord = (pts[pts.len() - 1] - pts[0]).normalize();
    let tangents = us
        .iter()
        .map(|&u| {
            let t = spline.tangent(u);
            if t.norm() > 0.0 {
                t
            } else {
                chord
            }
        })
        .collect();
    Ok(PreprocessedStroke {
        stroke_id,
        width,
        points,
        tangents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::tests::stroke_from;
    use crate::geom::point_segment_distance;
    use crate::synth::{synth_sketch, SynthConfig, SynthObject};

    #[test]
    fn two_vertex_stroke_stays_a_segment() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.5, 0.2);
        let p = preprocess_stroke(0, &stroke_from(&[a, b], &[0.0, 1.0], 0.02)).unwrap();
        assert!(p.points.len() >= MIN_SAMPLES);
        for q in &p.points {
            assert!(point_segment_distance(q, &a, &b) < 1e-9);
        }
        assert!((p.points[0] - a).norm() < 1e-9);
        assert!((p.points[p.points.len() - 1] - b).norm() < 1e-9);
    }

    #[test]
    fn coincident_vertices_are_degenerate() {
        let a = Vec3::new(1.0, 1.0, 1.0);
        let r = preprocess_stroke(0, &stroke_from(&[a, a, a], &[0.0, 1.0, 2.0], 0.02));
        assert!(matches!(r, Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn end_hook_is_removed() {
        let w = 0.02;
        let mut pts: Vec<Vec3> = (0..=100).map(|i| Vec3::new(i as f64 * 0.01, 0.0, 0.0)).collect();
        // three-vertex reversal ending 0.012 back from the tip
        pts.push(Vec3::new(0.996, 0.004, 0.0));
        pts.push(Vec3::new(0.992, 0.008, 0.0));
        pts.push(Vec3::new(0.988, 0.012, 0.0));
        let trimmed = trim_hooks(&pts, w);
        assert_eq!(trimmed.len(), 101);
        assert_eq!(*trimmed.last().unwrap(), Vec3::new(1.0, 0.0, 0.0));
        let times: Vec<f64> = (0..pts.len()).map(|i| i as f64).collect();
        let p = preprocess_stroke(0, &stroke_from(&pts, &times, w)).unwrap();
        let tip = p.points[p.points.len() - 1];
        assert!(tip.y.abs() < 1e-3 && (tip.x - 1.0).abs() < 1e-3, "{tip:?}");
    }

    #[test]
    fn straight_stroke_without_hook_is_untouched() {
        let pts: Vec<Vec3> = (0..50).map(|i| Vec3::new(i as f64 * 0.02, 0.0, 0.0)).collect();
        assert_eq!(trim_hooks(&pts, 0.02), pts);
    }

    #[test]
    fn jittered_edge_samples_stay_near_the_edge() {
        let s = synth_sketch(&SynthConfig::new(SynthObject::Cube, 0.1, 3, 11)).unwrap();
        let o = s.oracle.as_ref().unwrap();
        for (i, stroke) in s.strokes.iter().enumerate() {
            let Some(c) = o.stroke_cluster[i] else { continue };
            let [a, b] = o.edges[c];
            let p = preprocess_stroke(i, stroke).unwrap();
            for q in &p.points {
                assert!(point_segment_distance(q, &a, &b) < 0.5 * stroke.ink_width);
            }
            for t in &p.tangents {
                assert!((t.norm() - 1.0).abs() < 1e-9);
            }
        }
    }
}
