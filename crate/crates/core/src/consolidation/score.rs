//! Pairwise similarity of preprocessed Shape strokes from matching runs.

use serde::{Deserialize, Serialize};

use super::preprocess::PreprocessedStroke;
use crate::geom::Vec3;
use crate::kdtree::SpatialIndex;

pub const DEFAULT_MATCH_COEFFICIENT: f64 = 1.5;
/// Shortest run of consecutive matched samples that forms a sequence.
pub const MIN_RUN: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingSequence {
    pub indices_a: Vec<usize>,
    pub indices_b: Vec<usize>,
    pub mean_tangent_a: Vec3,
    pub mean_tangent_b: Vec3,
}

fn mean_direction(tangents: &[Vec3], idx: &[usize]) -> Vec3 {
    let sum = idx.iter().fold(Vec3::zeros(), |acc, &i| acc + tangents[i]);
    let n = sum.norm();
    if n > 0.0 {
        sum / n
    } else {
        Vec3::zeros()
    }
}

/// Maximal runs of `a`'s samples that have a counterpart in `b` within
/// `radius`.
pub fn matching_sequences(
    a: &PreprocessedStroke,
    b: &PreprocessedStroke,
    b_index: &SpatialIndex,
    radius: f64,
) -> Vec<MatchingSequence> {
    let mut out = Vec::new();
    let mut run_a: Vec<usize> = Vec::new();
    let mut run_b: Vec<usize> = Vec::new();
    let mut flush = |run_a: &mut Vec<usize>, run_b: &mut Vec<usize>| {
        if run_a.len() >= MIN_RUN {
            out.push(MatchingSequence {
                mean_tangent_a: mean_direction(&a.tangents, run_a),
                mean_tangent_b: mean_direction(&b.tangents, run_b),
                indices_a: std::mem::take(run_a),
                indices_b: std::mem::take(run_b),
            });
        }
        run_a.clear();
        run_b.clear();
    };
    for (i, p) in a.points.iter().enumerate() {
        match b_index.nearest(p) {
            Some((j, d)) if d <= radius => {
                run_a.push(i);
                run_b.push(j);
            }
            _ => flush(&mut run_a, &mut run_b),
        }
    }
    flush(&mut run_a, &mut run_b);
    out
}

fn directed_score(a: &PreprocessedStroke, b: &PreprocessedStroke, b_index: &SpatialIndex, radius: f64) -> f64 {
    let seqs = matching_sequences(a, b, b_index, radius);
    if seqs.is_empty() {
        return 0.0;
    }
    seqs.iter()
        .map(|s| s.mean_tangent_a.dot(&s.mean_tangent_b).abs())
        .sum::<f64>()
        / seqs.len() as f64
}

/// Symmetric similarity in `[0, 1]`: the mean of both directed scores.
pub fn shape_score(a: &PreprocessedStroke, b: &PreprocessedStroke, coefficient: f64) -> f64 {
    let ia = SpatialIndex::new(a.points.clone());
    let ib = SpatialIndex::new(b.points.clone());
    shape_score_indexed(a, &ia, b, &ib, coefficient)
}

pub fn shape_score_indexed(
    a: &PreprocessedStroke,
    a_index: &SpatialIndex,
    b: &PreprocessedStroke,
    b_index: &SpatialIndex,
    coefficient: f64,
) -> f64 {
    let radius = coefficient * a.width.min(b.width);
    let s = 0.5 * (directed_score(a, b, b_index, radius) + directed_score(b, a, a_index, radius));
    s.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(from: Vec3, to: Vec3, n: usize, width: f64) -> PreprocessedStroke {
        let dir = (to - from).normalize();
        PreprocessedStroke {
            stroke_id: 0,
            width,
            points: (0..n).map(|i| from + (to - from) * (i as f64 / (n - 1) as f64)).collect(),
            tangents: vec![dir; n],
        }
    }

    #[test]
    fn parallel_offset_copies_match() {
        let w = 0.02;
        let a = straight(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), 101, w);
        let b = straight(Vec3::new(0.0, 0.5 * w, 0.0), Vec3::new(1.0, 0.5 * w, 0.0), 101, w);
        assert!(shape_score(&a, &b, 1.5) >= 0.99);
        // opposite drawing direction still matches
        let mut rev = b.clone();
        rev.points.reverse();
        rev.tangents = vec![Vec3::new(-1.0, 0.0, 0.0); 101];
        assert!(shape_score(&a, &rev, 1.5) >= 0.99);
    }

    #[test]
    fn perpendicular_crossing_scores_low() {
        let w = 0.02;
        let a = straight(Vec3::new(-0.5, 0.0, 0.0), Vec3::new(0.5, 0.0, 0.0), 101, w);
        let b = straight(Vec3::new(0.0, -0.5, 0.0), Vec3::new(0.0, 0.5, 0.0), 101, w);
        assert!(shape_score(&a, &b, 1.5) <= 0.3);
    }

    #[test]
    fn distant_strokes_score_zero() {
        let w = 0.02;
        let a = straight(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), 50, w);
        let b = straight(Vec3::new(0.0, 0.05, 0.0), Vec3::new(1.0, 0.05, 0.0), 50, w);
        assert_eq!(shape_score(&a, &b, 1.5), 0.0);
    }

    #[test]
    fn score_is_symmetric() {
        let w = 0.02;
        let a = straight(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), 80, w);
        let b = straight(Vec3::new(0.5, 0.01, 0.0), Vec3::new(1.3, 0.2, 0.0), 57, 0.03);
        let ab = shape_score(&a, &b, 1.5);
        let ba = shape_score(&b, &a, 1.5);
        assert!((ab - ba).abs() <= 1e-6);
    }
}
