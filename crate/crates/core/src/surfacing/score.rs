//! Pairwise similarity of Scribble strokes with a Shape-stroke separator
//! penalty.

use serde::{Deserialize, Serialize};

use crate::geom::{point_polyline_distance, Aabb, Vec3};
use crate::kdtree::SpatialIndex;
use crate::sketch::{CanvasType, StrokeRecord};

/// How the per-Shape-stroke separator fractions are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeparatorAggregate {
    #[default]
    Max,
    /// Minimum over all Shape strokes, as literally written.
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScribbleScoreParams {
    pub match_coefficient: f64,
    pub overlap_gain: f64,
    pub separator_penalty: f64,
    /// Canvas coefficient when the centers pass the type-specific test.
    pub near_canvas_coefficient: f64,
    pub plane_inverse_distance: f64,
    pub sphere_inverse_distance: f64,
    pub aggregate: SeparatorAggregate,
}

impl Default for ScribbleScoreParams {
    fn default() -> Self {
        ScribbleScoreParams {
            match_coefficient: 1.5,
            overlap_gain: 12.5,
            separator_penalty: 25.0,
            near_canvas_coefficient: 100.0,
            plane_inverse_distance: 0.375,
            sphere_inverse_distance: 1.75,
            aggregate: SeparatorAggregate::Max,
        }
    }
}

/// Canvas coefficient: the large value when both canvases are planes (or
/// both spheres) and the reciprocal center distance is at most the
/// type-specific bound; coincident centers give an infinite reciprocal.
pub fn canvas_coefficient(a: &StrokeRecord, b: &StrokeRecord, params: &ScribbleScoreParams) -> f64 {
    let d = (a.canvas_center() - b.canvas_center()).norm();
    let inv = if d == 0.0 { f64::INFINITY } else { 1.0 / d };
    let bound = match (a.canvas_type, b.canvas_type) {
        (CanvasType::Plane, CanvasType::Plane) => Some(params.plane_inverse_distance),
        (CanvasType::Sphere, CanvasType::Sphere) => Some(params.sphere_inverse_distance),
        _ => None,
    };
    match bound {
        Some(limit) if inv <= limit => params.near_canvas_coefficient,
        _ => 1.0 / params.overlap_gain,
    }
}

/// A stroke with its vertex index, reused across many pair scores.
pub struct IndexedStroke<'a> {
    pub stroke: &'a StrokeRecord,
    pub points: Vec<Vec3>,
    pub index: SpatialIndex,
    pub aabb: Aabb,
}

impl<'a> IndexedStroke<'a> {
    pub fn new(stroke: &'a StrokeRecord) -> Self {
        let points = stroke.positions();
        IndexedStroke {
            stroke,
            index: SpatialIndex::new(points.clone()),
            aabb: stroke.aabb(),
            points,
        }
    }
}

/// Breakdown of one pair score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScribbleScoreTerms {
    pub pair_count: usize,
    pub canvas_coefficient: f64,
    pub overlap: f64,
    pub separator: f64,
    pub score: f64,
}

pub fn scribble_score_terms(
    a: &IndexedStroke,
    b: &IndexedStroke,
    shapes: &[IndexedStroke],
    params: &ScribbleScoreParams,
) -> ScribbleScoreTerms {
    let radius = params.match_coefficient * a.stroke.ink_width.min(b.stroke.ink_width);
    let mut pair_count = 0;
    let mut matched: Vec<Vec3> = Vec::new();
    if a.aabb.gap(&b.aabb) <= radius {
        for p in &a.points {
            let c = b.index.count_within_radius(p, radius);
            pair_count += c;
            if c > 0 {
                matched.push(*p);
            }
        }
        matched.extend(b.points.iter().filter(|q| a.index.any_within_radius(q, radius)));
    }
    let c = canvas_coefficient(a.stroke, b.stroke, params);
    let n = (a.points.len() + b.points.len()) as f64;
    let overlap = (c * params.overlap_gain * pair_count as f64 / n).min(1.0);
    let separator = if matched.is_empty() || shapes.is_empty() {
        0.0
    } else {
        let matched_box = Aabb::from_points(&matched).expect("non-empty");
        let fractions = shapes.iter().map(|k| {
            let reach = params.match_coefficient * k.stroke.ink_width;
            if matched_box.gap(&k.aabb) > reach {
                return 0.0;
            }
            let near = matched
                .iter()
                .filter(|p| point_polyline_distance(p, &k.points) <= reach)
                .count();
            near as f64 / matched.len() as f64
        });
        match params.aggregate {
            SeparatorAggregate::Max => fractions.fold(0.0, f64::max),
            SeparatorAggregate::Min => fractions.fold(f64::INFINITY, f64::min),
        }
    };
    ScribbleScoreTerms {
        pair_count,
        canvas_coefficient: c,
        overlap,
        separator,
        score: overlap - params.separator_penalty * separator,
    }
}

/// Similarity in `[-25, 1]` of two Scribble strokes given the Shape strokes.
pub fn scribble_score(
    a: &StrokeRecord,
    b: &StrokeRecord,
    shapes: &[&StrokeRecord],
    params: &ScribbleScoreParams,
) -> f64 {
    let shapes: Vec<IndexedStroke> = shapes.iter().map(|s| IndexedStroke::new(s)).collect();
    scribble_score_terms(&IndexedStroke::new(a), &IndexedStroke::new(b), &shapes, params).score
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::tests::stroke_from;

    fn zigzag(y0: f64, width: f64) -> StrokeRecord {
        let pts: Vec<Vec3> = (0..60)
            .map(|i| Vec3::new(0.02 * i as f64, y0 + if i % 2 == 0 { 0.0 } else { 0.1 }, 0.0))
            .collect();
        let times: Vec<f64> = (0..60).map(|i| i as f64 * 0.01).collect();
        stroke_from(&pts, &times, width)
    }

    fn brute_pairs(a: &StrokeRecord, b: &StrokeRecord, r: f64) -> usize {
        a.vertices
            .iter()
            .map(|p| b.vertices.iter().filter(|q| (p.p - q.p).norm() <= r).count())
            .sum()
    }

    #[test]
    fn overlapping_scribbles_on_one_canvas() {
        let w = 0.03;
        let a = zigzag(0.0, w);
        let b = zigzag(0.01, w);
        let params = ScribbleScoreParams::default();
        let s = scribble_score(&a, &b, &[], &params);
        let nij = brute_pairs(&a, &b, 1.5 * w) as f64;
        let expected = (nij / 120.0).min(1.0);
        assert_eq!(canvas_coefficient(&a, &b, &params), 1.0 / 12.5);
        assert!((s - expected).abs() < 1e-12);
        assert!(s > 0.3);
        assert!((scribble_score(&b, &a, &[], &params) - s).abs() < 1e-9);
    }

    #[test]
    fn disjoint_scribbles_score_at_most_zero() {
        let a = zigzag(0.0, 0.03);
        let b = zigzag(1.0, 0.03);
        assert!(scribble_score(&a, &b, &[], &ScribbleScoreParams::default()) <= 0.0);
    }

    #[test]
    fn separating_shape_stroke_dominates() {
        let w = 0.03;
        let a = zigzag(0.0, w);
        let b = zigzag(0.01, w);
        // a wide shape stroke covering the whole overlap
        let shape_pts: Vec<Vec3> = (0..30).map(|i| Vec3::new(-0.1 + 0.05 * i as f64, 0.05, 0.0)).collect();
        let shape = stroke_from(&shape_pts, &(0..30).map(|i| i as f64).collect::<Vec<_>>(), 0.2);
        let far = stroke_from(
            &[Vec3::new(10.0, 0.0, 0.0), Vec3::new(11.0, 0.0, 0.0)],
            &[0.0, 1.0],
            0.02,
        );
        let params = ScribbleScoreParams::default();
        let s = scribble_score(&a, &b, &[&shape, &far], &params);
        assert!(s <= 1.0 - 25.0 + 1e-12, "{s}");
        // the literal minimum is nullified by the unrelated far stroke
        let literal = ScribbleScoreParams {
            aggregate: SeparatorAggregate::Min,
            ..params.clone()
        };
        let s_min = scribble_score(&a, &b, &[&shape, &far], &literal);
        assert_eq!(s_min, scribble_score(&a, &b, &[], &params));
    }

    #[test]
    fn far_plane_canvases_get_the_large_coefficient() {
        let mut a = zigzag(0.0, 0.03);
        let b = zigzag(0.0, 0.03);
        a.canvas_transform[3] = 3.0;
        assert_eq!(canvas_coefficient(&a, &b, &ScribbleScoreParams::default()), 100.0);
    }
}
