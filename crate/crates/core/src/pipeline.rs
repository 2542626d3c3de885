//! Stage-wise orchestration. Every stage reads and writes plain artifacts, so
//! running the stages one at a time from files gives the same bytes as
//! [`run_pipeline`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifier::ForestModel;
use crate::config::PipelineConfig;
use crate::consolidation::{cluster_shape_strokes, consolidate_clusters, ConsolidatedCurve};
use crate::error::{Error, Result};
use crate::features::extract_features;
use crate::geom::Aabb;
use crate::sketch::{Sketch, StrokeLabel};
use crate::surfacing::{cluster_scribbles, surface_network, PatchReport, ScribbleCluster, SurfacingResult};
use crate::topology::{recover_topology, CurveNetwork};

pub const STAGE_PREDICT: &str = "Stroke Type Prediction";
pub const STAGE_SHAPES: &str = "Clustering Shape Strokes";
pub const STAGE_TOPOLOGY: &str = "Topology Recovery";
pub const STAGE_SCRIBBLES: &str = "Clustering Scribble Strokes";
pub const STAGE_SURFACING: &str = "Surfacing";

pub const LABELS_FILE: &str = "labels.json";
pub const SHAPE_CLUSTERS_FILE: &str = "shape_clusters.json";
pub const CURVES_FILE: &str = "curves.json";
pub const NETWORK_FILE: &str = "network.json";
pub const SCRIBBLE_CLUSTERS_FILE: &str = "scribble_clusters.json";
pub const PATCHES_FILE: &str = "patches.json";
pub const MESH_FILE: &str = "mesh.obj";
pub const TIMINGS_FILE: &str = "timings.json";

/// Every file written by [`run_pipeline`], in stage order.
pub const ARTIFACTS: [&str; 8] = [
    LABELS_FILE,
    SHAPE_CLUSTERS_FILE,
    CURVES_FILE,
    NETWORK_FILE,
    SCRIBBLE_CLUSTERS_FILE,
    PATCHES_FILE,
    MESH_FILE,
    TIMINGS_FILE,
];

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Predicted stroke types, indexed by stroke id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub labels: Vec<StrokeLabel>,
    pub shape_fraction: Vec<f64>,
}

impl Labels {
    fn ids(&self, label: StrokeLabel) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == label).collect()
    }

    pub fn shape_ids(&self) -> Vec<usize> {
        self.ids(StrokeLabel::Shape)
    }

    pub fn scribble_ids(&self) -> Vec<usize> {
        self.ids(StrokeLabel::Scribble)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text, "labels")
    }

    fn check(&self, sketch: &Sketch) -> Result<()> {
        if self.labels.len() != sketch.strokes.len() {
            return Err(Error::validation(
                "labels",
                format!("{} labels for {} strokes", self.labels.len(), sketch.strokes.len()),
            ));
        }
        Ok(())
    }
}

/// Shape-stroke cluster ids keyed by stroke id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeAssignments {
    pub epsilon: f64,
    pub min_pts: usize,
    pub assignments: BTreeMap<usize, usize>,
}

impl ShapeAssignments {
    /// Member stroke ids per cluster, in cluster id order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let n = self.assignments.values().map(|&c| c + 1).max().unwrap_or(0);
        let mut out = vec![Vec::new(); n];
        for (&s, &c) in &self.assignments {
            out[c].push(s);
        }
        out.retain(|m| !m.is_empty());
        out
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text, "shape clusters")
    }
}

/// Consolidated cubic Bezier curves, each with a clamped knot vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub knots: [f64; 8],
    pub curves: Vec<ConsolidatedCurve>,
}

impl CurveSet {
    pub fn new(curves: Vec<ConsolidatedCurve>) -> Self {
        CurveSet {
            knots: [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0],
            curves,
        }
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text, "curves")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScribbleClusterRecord {
    pub id: usize,
    pub stroke_ids: Vec<usize>,
    pub aabb: Aabb,
    pub scaled_aabb: Aabb,
    pub mean_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScribbleClusterSet {
    pub epsilon: f64,
    pub min_pts: usize,
    pub clusters: Vec<ScribbleClusterRecord>,
}

impl ScribbleClusterSet {
    /// Rebuilds the full clusters from the sketch.
    pub fn clusters(&self, sketch: &Sketch, box_scale: f64) -> Result<Vec<ScribbleCluster>> {
        self.clusters
            .iter()
            .map(|r| {
                if r.stroke_ids.is_empty() || r.stroke_ids.iter().any(|&s| s >= sketch.strokes.len()) {
                    return Err(Error::validation(
                        "scribble_clusters",
                        format!("cluster {} references strokes outside the sketch", r.id),
                    ));
                }
                Ok(ScribbleCluster::new(r.id, sketch, r.stroke_ids.clone(), box_scale))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text, "scribble clusters")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSet {
    pub patches: Vec<PatchReport>,
    pub unsurfaced_clusters: Vec<usize>,
    pub warnings: Vec<String>,
}

impl PatchSet {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text, "patches")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub threads: usize,
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
}

pub fn predict_stage(sketch: &Sketch, model: &ForestModel) -> Result<Labels> {
    let run = || -> Result<Labels> {
        let prediction = model.predict(&extract_features(sketch)?)?;
        Ok(Labels {
            labels: prediction.labels,
            shape_fraction: prediction.shape_fraction,
        })
    };
    run().map_err(|e| e.in_stage(STAGE_PREDICT))
}

pub fn shape_cluster_stage(sketch: &Sketch, labels: &Labels, config: &PipelineConfig) -> Result<ShapeAssignments> {
    labels.check(sketch).map_err(|e| e.in_stage(STAGE_SHAPES))?;
    let shape = cluster_shape_strokes(sketch, &labels.shape_ids(), &config.consolidation);
    Ok(ShapeAssignments {
        epsilon: shape.clustering.epsilon,
        min_pts: shape.clustering.min_pts,
        assignments: shape.assignments(),
    })
}

pub fn consolidate_stage(sketch: &Sketch, shapes: &ShapeAssignments, config: &PipelineConfig) -> Result<CurveSet> {
    if let Some(&s) = shapes.assignments.keys().find(|&&s| s >= sketch.strokes.len()) {
        return Err(Error::validation("shape_clusters", format!("stroke {s} is not in the sketch")).in_stage(STAGE_SHAPES));
    }
    consolidate_clusters(sketch, &shapes.members(), &config.consolidation)
        .map(CurveSet::new)
        .map_err(|e| e.in_stage(STAGE_SHAPES))
}

pub fn topology_stage(curves: &CurveSet, config: &PipelineConfig) -> Result<CurveNetwork> {
    recover_topology(&curves.curves, config.topology.connect_coefficient)
        .map(|(_, network)| network)
        .map_err(|e| e.in_stage(STAGE_TOPOLOGY))
}

pub fn scribble_cluster_stage(sketch: &Sketch, labels: &Labels, config: &PipelineConfig) -> Result<ScribbleClusterSet> {
    labels.check(sketch).map_err(|e| e.in_stage(STAGE_SCRIBBLES))?;
    let result = cluster_scribbles(sketch, &labels.scribble_ids(), &labels.shape_ids(), &config.scribble);
    Ok(ScribbleClusterSet {
        epsilon: result.clustering.epsilon,
        min_pts: result.clustering.min_pts,
        clusters: result
            .clusters
            .into_iter()
            .map(|c| ScribbleClusterRecord {
                id: c.id,
                stroke_ids: c.stroke_ids,
                aabb: c.aabb,
                scaled_aabb: c.scaled_aabb,
                mean_width: c.mean_width,
            })
            .collect(),
    })
}

/// Surfaces the network and renders `patches.json` and `mesh.obj`.
pub fn surface_stage(
    sketch: &Sketch,
    network: &CurveNetwork,
    scribbles: &ScribbleClusterSet,
    config: &PipelineConfig,
) -> Result<(SurfacingResult, PatchSet, String)> {
    let clusters = scribbles
        .clusters(sketch, config.scribble.box_scale)
        .map_err(|e| e.in_stage(STAGE_SURFACING))?;
    let mut warnings = Vec::new();
    if config.surfacing.guided && clusters.is_empty() {
        warnings.push("no Scribble strokes; the curve network is left unsurfaced".to_string());
    }
    let result = surface_network(network, &clusters, &config.surfacing);
    for &c in &result.unsurfaced {
        warnings.push(format!("scribble cluster {c}: no bounding cycle found"));
    }
    for p in result.patches.iter().filter(|p| !p.verified) {
        warnings.push(format!(
            "patch on edges {:?} discarded (coverage {:.3})",
            p.cycle.edges, p.coverage
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let obj = result.mesh.to_obj(network);
    let patches = PatchSet {
        patches: result.reports(),
        unsurfaced_clusters: result.unsurfaced.clone(),
        warnings,
    };
    Ok((result, patches, obj))
}

/// Runs `f` on a dedicated pool of `threads` workers; 0 means one per core.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub out_dir: PathBuf,
    pub timings: Timings,
    pub warnings: Vec<String>,
    pub patch_count: usize,
    pub verified_count: usize,
}

/// Runs every stage on `sketch` and writes all artifacts into `out_dir`.
pub fn run_pipeline(
    sketch: &Sketch,
    model: &ForestModel,
    config: &PipelineConfig,
    out_dir: impl AsRef<Path>,
    threads: usize,
) -> Result<PipelineReport> {
    let out_dir = out_dir.as_ref().to_path_buf();
    config.validate()?;
    std::fs::create_dir_all(&out_dir).map_err(|source| Error::Io {
        path: out_dir.clone(),
        source,
    })?;
    let threads_used = if threads == 0 { rayon::current_num_threads() } else { threads };
    with_threads(threads, || {
        let total = Instant::now();
        let mut stages = Vec::new();
        let mut time = |name: &str, start: Instant| {
            stages.push(StageTiming {
                name: name.to_string(),
                seconds: start.elapsed().as_secs_f64(),
            })
        };
        let write = |name: &str, text: &str| write_text(out_dir.join(name), text);

        let t = Instant::now();
        let labels = predict_stage(sketch, model)?;
        time(STAGE_PREDICT, t);
        write(LABELS_FILE, &labels.to_json())?;

        let t = Instant::now();
        let shapes = shape_cluster_stage(sketch, &labels, config)?;
        let curves = consolidate_stage(sketch, &shapes, config)?;
        time(STAGE_SHAPES, t);
        write(SHAPE_CLUSTERS_FILE, &shapes.to_json())?;
        write(CURVES_FILE, &curves.to_json())?;

        let t = Instant::now();
        let network = topology_stage(&curves, config)?;
        time(STAGE_TOPOLOGY, t);
        write(NETWORK_FILE, &network.to_json())?;

        let t = Instant::now();
        let scribbles = scribble_cluster_stage(sketch, &labels, config)?;
        time(STAGE_SCRIBBLES, t);
        write(SCRIBBLE_CLUSTERS_FILE, &scribbles.to_json())?;

        let t = Instant::now();
        let (result, patches, obj) = surface_stage(sketch, &network, &scribbles, config)?;
        time(STAGE_SURFACING, t);
        write(PATCHES_FILE, &patches.to_json())?;
        write(MESH_FILE, &obj)?;

        let timings = Timings {
            threads: threads_used,
            stages,
            total_seconds: total.elapsed().as_secs_f64(),
        };
        write(TIMINGS_FILE, &to_json(&timings))?;
        Ok(PipelineReport {
            out_dir: out_dir.clone(),
            timings,
            warnings: patches.warnings,
            patch_count: result.patches.len(),
            verified_count: result.verified_count(),
        })
    })?
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_follow_cluster_ids() {
        let a = ShapeAssignments {
            epsilon: 0.2,
            min_pts: 2,
            assignments: [(3, 1), (0, 0), (7, 1), (5, 0), (9, 2)].into_iter().collect(),
        };
        assert_eq!(a.members(), vec![vec![0, 5], vec![3, 7], vec![9]]);
        assert_eq!(ShapeAssignments::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn labels_must_cover_the_sketch() {
        let sketch = crate::synth::synth_sketch(&crate::synth::SynthConfig::new(
            crate::synth::SynthObject::Cube,
            0.0,
            1,
            0,
        ))
        .unwrap();
        let labels = Labels {
            labels: vec![StrokeLabel::Shape],
            shape_fraction: vec![1.0],
        };
        let err = shape_cluster_stage(&sketch, &labels, &PipelineConfig::default()).unwrap_err();
        assert!(err.to_string().starts_with(STAGE_SHAPES));
    }
}
