//! Grouping Scribble strokes into faces.

use serde::{Deserialize, Serialize};

use super::score::{scribble_score_terms, IndexedStroke, ScribbleScoreParams};
use crate::clustering::{Clustering, ScoreKind, ScoreMatrix};
use crate::consolidation::cluster_by_score;
use crate::geom::{Aabb, Vec3};
use crate::sketch::Sketch;

pub const DEFAULT_BOX_SCALE: f64 = 1.5;
/// Scaled boxes get at least this many mean ink widths of half-extent per
/// axis, so a flat cluster still has thickness.
pub const MIN_HALF_EXTENT_WIDTHS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScribbleCluster {
    pub id: usize,
    pub stroke_ids: Vec<usize>,
    pub points: Vec<Vec3>,
    pub aabb: Aabb,
    pub scaled_aabb: Aabb,
    pub mean_width: f64,
    /// Normalized mean of the member vertices' canvas normals (may be zero).
    pub mean_normal: Vec3,
}

impl ScribbleCluster {
    pub fn new(id: usize, sketch: &Sketch, stroke_ids: Vec<usize>, box_scale: f64) -> Self {
        let strokes: Vec<_> = stroke_ids.iter().map(|&i| &sketch.strokes[i]).collect();
        let points: Vec<Vec3> = strokes.iter().flat_map(|s| s.vertices.iter().map(|v| v.p)).collect();
        let normal_sum: Vec3 = strokes.iter().flat_map(|s| s.vertices.iter().map(|v| v.normal)).sum();
        let mean_width = strokes.iter().map(|s| s.ink_width).sum::<f64>() / strokes.len() as f64;
        let aabb = Aabb::from_points(&points).expect("strokes have vertices");
        ScribbleCluster {
            id,
            stroke_ids,
            scaled_aabb: aabb.scaled(box_scale, MIN_HALF_EXTENT_WIDTHS * mean_width),
            aabb,
            points,
            mean_width,
            mean_normal: if normal_sum.norm() > 0.0 {
                normal_sum.normalize()
            } else {
                Vec3::zeros()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScribbleClustering {
    pub stroke_ids: Vec<usize>,
    pub scores: ScoreMatrix,
    pub clustering: Clustering,
    pub clusters: Vec<ScribbleCluster>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScribbleClusterParams {
    pub score: ScribbleScoreParams,
    pub k: usize,
    pub min_pts: usize,
    pub epsilon_range: [f64; 2],
    pub box_scale: f64,
    pub epsilon_override: Option<f64>,
}

impl Default for ScribbleClusterParams {
    fn default() -> Self {
        ScribbleClusterParams {
            score: ScribbleScoreParams::default(),
            k: 1,
            min_pts: 2,
            epsilon_range: [0.1, 0.5],
            box_scale: DEFAULT_BOX_SCALE,
            epsilon_override: None,
        }
    }
}

/// Clusters the given Scribble strokes; unmatched strokes become one-member
/// clusters.
pub fn cluster_scribbles(
    sketch: &Sketch,
    scribble_ids: &[usize],
    shape_ids: &[usize],
    params: &ScribbleClusterParams,
) -> ScribbleClustering {
    let scribbles: Vec<IndexedStroke> = scribble_ids.iter().map(|&i| IndexedStroke::new(&sketch.strokes[i])).collect();
    let shapes: Vec<IndexedStroke> = shape_ids.iter().map(|&i| IndexedStroke::new(&sketch.strokes[i])).collect();
    let scores = ScoreMatrix::from_fn(scribbles.len(), ScoreKind::ScribbleScore, |i, j| {
        scribble_score_terms(&scribbles[i], &scribbles[j], &shapes, &params.score).score
    });
    let clustering = if scribbles.is_empty() {
        Clustering {
            labels: Vec::new(),
            epsilon: 0.0,
            min_pts: params.min_pts,
        }
    } else {
        cluster_by_score(&scores, params.k, params.min_pts, params.epsilon_range, params.epsilon_override)
    };
    let clusters = clustering
        .clusters()
        .into_iter()
        .enumerate()
        .map(|(id, members)| {
            let ids = members.iter().map(|&m| scribble_ids[m]).collect();
            ScribbleCluster::new(id, sketch, ids, params.box_scale)
        })
        .collect();
    ScribbleClustering {
        stroke_ids: scribble_ids.to_vec(),
        scores,
        clustering,
        clusters,
    }
}
