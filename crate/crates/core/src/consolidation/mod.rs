//! Shape-stroke consolidation: clustering over-sketched strokes and fitting
//! one cubic per cluster branch.

pub mod bifurcation;
pub mod emst;
pub mod fit;
pub mod preprocess;
pub mod score;
pub mod thinning;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fit::ConsolidatedCurve;
pub use preprocess::{preprocess_stroke, PreprocessedStroke};
pub use score::{shape_score, MatchingSequence};

use crate::clustering::{dbscan, score_to_distance, select_epsilon, Clustering, ScoreKind, ScoreMatrix};
use crate::error::Result;
use crate::geom::{Aabb, Vec3};
use crate::kdtree::SpatialIndex;
use crate::sketch::Sketch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsolidationParams {
    pub match_coefficient: f64,
    /// Neighbor rank of the k-distance plot.
    pub k: usize,
    pub min_pts: usize,
    /// The selected epsilon is clamped to this range.
    pub epsilon_range: [f64; 2],
    pub branch_ratio: f64,
    pub epsilon_override: Option<f64>,
}

impl Default for ConsolidationParams {
    fn default() -> Self {
        ConsolidationParams {
            match_coefficient: score::DEFAULT_MATCH_COEFFICIENT,
            k: 1,
            min_pts: 2,
            epsilon_range: [0.1, 0.5],
            branch_ratio: bifurcation::DEFAULT_BRANCH_RATIO,
            epsilon_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeStage {
    pub shape: ShapeClustering,
    pub curves: Vec<ConsolidatedCurve>,
}

/// Pairwise similarity of preprocessed strokes. Pairs whose boxes are
/// farther apart than the match radius score 0 without a search.
pub fn shape_score_matrix(strokes: &[PreprocessedStroke], coefficient: f64) -> ScoreMatrix {
    let indices: Vec<SpatialIndex> = strokes.iter().map(|s| SpatialIndex::new(s.points.clone())).collect();
    let boxes: Vec<Aabb> = strokes
        .iter()
        .map(|s| Aabb::from_points(&s.points).expect("non-empty samples"))
        .collect();
    ScoreMatrix::from_fn(strokes.len(), ScoreKind::ShapeScore, |i, j| {
        let radius = coefficient * strokes[i].width.min(strokes[j].width);
        if boxes[i].gap(&boxes[j]) > radius {
            return 0.0;
        }
        score::shape_score_indexed(&strokes[i], &indices[i], &strokes[j], &indices[j], coefficient)
    })
}

/// DBSCAN on `1 - score`. Epsilon is the override when given, otherwise the
/// k-distance knee clamped to `epsilon_range`; noise becomes singleton
/// clusters.
pub fn cluster_by_score(
    scores: &ScoreMatrix,
    k: usize,
    min_pts: usize,
    epsilon_range: [f64; 2],
    epsilon_override: Option<f64>,
) -> Clustering {
    let d = score_to_distance(scores);
    let eps = epsilon_override.unwrap_or_else(|| {
        select_epsilon(&d, k)
            .unwrap_or(epsilon_range[0])
            .clamp(epsilon_range[0], epsilon_range[1])
    });
    log::debug!("clustering {} items at epsilon {eps:.4}", scores.n);
    dbscan(&d, eps, min_pts).with_noise_as_singletons()
}

fn prepare(sketch: &Sketch, ids: &[usize]) -> Vec<PreprocessedStroke> {
    ids.iter()
        .filter_map(|&id| match preprocess_stroke(id, &sketch.strokes[id]) {
            Ok(p) => Some(p),
            Err(e) => {
                log::warn!("skipping stroke {id}: {e}");
                None
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeClustering {
    /// Sketch stroke ids that survived preprocessing, in matrix order.
    pub stroke_ids: Vec<usize>,
    pub scores: ScoreMatrix,
    /// Over `stroke_ids`; noise strokes are promoted to singleton clusters.
    pub clustering: Clustering,
}

impl ShapeClustering {
    /// Cluster id per sketch stroke id.
    pub fn assignments(&self) -> BTreeMap<usize, usize> {
        self.stroke_ids
            .iter()
            .zip(&self.clustering.labels)
            .filter_map(|(&s, l)| l.map(|c| (s, c)))
            .collect()
    }
}

/// Preprocesses and clusters the given Shape strokes. Strokes whose vertices
/// all coincide are skipped.
pub fn cluster_shape_strokes(sketch: &Sketch, shape_ids: &[usize], params: &ConsolidationParams) -> ShapeClustering {
    let prepared = prepare(sketch, shape_ids);
    let stroke_ids: Vec<usize> = prepared.iter().map(|p| p.stroke_id).collect();
    let scores = shape_score_matrix(&prepared, params.match_coefficient);
    let clustering = cluster_by_score(&scores, params.k, params.min_pts, params.epsilon_range, params.epsilon_override);
    ShapeClustering {
        stroke_ids,
        scores,
        clustering,
    }
}

/// Fits the curves of every cluster given as member stroke-id lists: thin
/// the cluster samples, split at branching points, fit a cubic per branch.
pub fn consolidate_clusters(
    sketch: &Sketch,
    clusters: &[Vec<usize>],
    params: &ConsolidationParams,
) -> Result<Vec<ConsolidatedCurve>> {
    let fitted: Vec<Result<Vec<Vec<Vec3>>>> = clusters
        .par_iter()
        .map(|members| {
            let prepared = prepare(sketch, members);
            if prepared.is_empty() {
                return Ok(Vec::new());
            }
            let h = prepared.iter().map(|s| s.width).sum::<f64>() / prepared.len() as f64;
            let points: Vec<Vec3> = prepared.iter().flat_map(|s| s.points.iter().copied()).collect();
            let thinned = thinning::thin_cluster(&points, h)?;
            let mut parts = bifurcation::detect_and_split(&thinned, params.branch_ratio, h);
            if parts.is_empty() {
                parts.push(thinned);
            }
            Ok(parts)
        })
        .collect();
    let mut curves = Vec::new();
    for (cluster_id, (members, parts)) in clusters.iter().zip(fitted).enumerate() {
        let mean_width = members.iter().map(|&m| sketch.strokes[m].ink_width).sum::<f64>() / members.len() as f64;
        for points in parts? {
            let id = curves.len();
            curves.push(fit::consolidated_curve(id, cluster_id, &points, mean_width, members.clone())?);
        }
    }
    Ok(curves)
}

/// Runs clustering and consolidation over the given Shape strokes.
pub fn consolidate_shapes(sketch: &Sketch, shape_ids: &[usize], params: &ConsolidationParams) -> Result<ShapeStage> {
    let shape = cluster_shape_strokes(sketch, shape_ids, params);
    let members: Vec<Vec<usize>> = shape
        .clustering
        .clusters()
        .into_iter()
        .map(|c| c.into_iter().map(|m| shape.stroke_ids[m]).collect())
        .collect();
    let curves = consolidate_clusters(sketch, &members, params)?;
    Ok(ShapeStage { shape, curves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point_segment_distance;
    use crate::sketch::StrokeLabel;
    use crate::synth::{synth_sketch, SynthConfig, SynthObject};

    fn shape_ids(s: &Sketch) -> Vec<usize> {
        (0..s.strokes.len()).filter(|&i| s.strokes[i].label == Some(StrokeLabel::Shape)).collect()
    }

    fn curve_matches_edge(c: &ConsolidatedCurve, e: &[Vec3; 2]) -> bool {
        let b = c.bezier();
        b.sample(50).iter().all(|q| point_segment_distance(q, &e[0], &e[1]) <= c.mean_width)
            && [e[0], e[1]].iter().all(|p| b.distance_to(p) <= c.mean_width)
    }

    #[test]
    fn zero_jitter_cube_gives_twelve_edges() {
        let sketch = synth_sketch(&SynthConfig::new(SynthObject::Cube, 0.0, 3, 1)).unwrap();
        let stage = consolidate_shapes(&sketch, &shape_ids(&sketch), &ConsolidationParams::default()).unwrap();
        assert_eq!(stage.shape.clustering.n_clusters(), 12);
        assert_eq!(stage.curves.len(), 12);
        let oracle = sketch.oracle.as_ref().unwrap();
        for e in &oracle.edges {
            assert_eq!(stage.curves.iter().filter(|c| curve_matches_edge(c, e)).count(), 1);
        }
    }

    #[test]
    fn jittered_cube_edges_fit_within_width() {
        let sketch = synth_sketch(&SynthConfig::new(SynthObject::Cube, 0.1, 3, 2)).unwrap();
        let stage = consolidate_shapes(&sketch, &shape_ids(&sketch), &ConsolidationParams::default()).unwrap();
        assert_eq!(stage.curves.len(), 12);
        for c in &stage.curves {
            assert!(c.max_residual <= c.mean_width, "{}", c.max_residual);
            assert_eq!(c.source_stroke_ids.len(), 3);
        }
    }

    #[test]
    fn y_junction_cluster_splits_into_arms() {
        let sketch = synth_sketch(&SynthConfig::new(SynthObject::YJunction, 0.0, 2, 3)).unwrap();
        let stage = consolidate_shapes(&sketch, &shape_ids(&sketch), &ConsolidationParams::default()).unwrap();
        assert_eq!(stage.shape.clustering.n_clusters(), 1);
        assert_eq!(stage.curves.len(), 3);
    }
}
