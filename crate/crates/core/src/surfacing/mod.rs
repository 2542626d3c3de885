//! Scribble clustering and Scribble-guided surfacing of curve networks.

pub mod cluster;
pub mod cycles;
pub mod mesh;
pub mod score;
pub mod triangulate;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cluster::{cluster_scribbles, ScribbleCluster, ScribbleClusterParams, ScribbleClustering};
pub use cycles::{discover_cycles, unguided_patches, CycleParams, CyclePatch, EdgeSamples};
pub use mesh::{assemble_mesh, verify_patches, SurfaceMesh};
pub use score::{scribble_score, ScribbleScoreParams, SeparatorAggregate};
pub use triangulate::{triangulate_polygon, Triangulation, TriangulationWeights};

use crate::error::Error;
use crate::geom::Vec3;
use crate::topology::CurveNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfacingParams {
    pub cycles: CycleParams,
    /// Fraction of a cluster's points that must project onto a patch.
    pub verify_fraction: f64,
    /// When false, cycles are searched on the whole network and not verified.
    pub guided: bool,
}

impl Default for SurfacingParams {
    fn default() -> Self {
        SurfacingParams {
            cycles: CycleParams::default(),
            verify_fraction: 0.5,
            guided: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchReport {
    pub cycle_nodes: Vec<usize>,
    pub cycle_edges: Vec<usize>,
    pub weight: f64,
    pub coverage: f64,
    pub verified: bool,
    pub source_cluster_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacingResult {
    pub patches: Vec<CyclePatch>,
    /// Clusters for which no cycle was found.
    pub unsurfaced: Vec<usize>,
    pub mesh: SurfaceMesh,
}

impl SurfacingResult {
    pub fn verified_count(&self) -> usize {
        self.patches.iter().filter(|p| p.verified).count()
    }

    pub fn reports(&self) -> Vec<PatchReport> {
        self.patches
            .iter()
            .map(|p| PatchReport {
                cycle_nodes: p.cycle.nodes.clone(),
                cycle_edges: p.cycle.edges.clone(),
                weight: p.weight,
                coverage: p.coverage,
                verified: p.verified,
                source_cluster_id: p.source_cluster_id,
            })
            .collect()
    }

    pub fn patches_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "patches": self.reports(),
            "unsurfaced_clusters": self.unsurfaced,
        }))
        .expect("serializable")
    }
}

/// Finds, verifies and meshes the patches of a curve network.
pub fn surface_network(network: &CurveNetwork, clusters: &[ScribbleCluster], params: &SurfacingParams) -> SurfacingResult {
    let samples = EdgeSamples::new(network);
    if !params.guided {
        let patches = unguided_patches(network, &samples, &params.cycles);
        let mesh = assemble_mesh(&patches, &[]);
        return SurfacingResult {
            patches,
            unsurfaced: Vec::new(),
            mesh,
        };
    }
    let found: Vec<Result<CyclePatch, Error>> = clusters
        .par_iter()
        .map(|c| discover_cycles(network, &samples, c, &params.cycles).map(|s| s.chosen))
        .collect();
    let mut patches = Vec::new();
    let mut unsurfaced = Vec::new();
    let mut keys = BTreeSet::new();
    for (c, r) in clusters.iter().zip(found) {
        match r {
            Ok(p) => {
                if keys.insert(p.cycle.key()) {
                    patches.push(p);
                } else {
                    log::info!("cluster {} chose an already surfaced cycle", c.id);
                }
            }
            Err(e) => {
                log::warn!("cluster {}: {e}", c.id);
                unsurfaced.push(c.id);
            }
        }
    }
    verify_patches(&mut patches, clusters, params.verify_fraction, params.cycles.projection_widths);
    let orientation: Vec<Option<Vec3>> = patches
        .iter()
        .map(|p| {
            p.source_cluster_id
                .and_then(|id| clusters.iter().find(|c| c.id == id))
                .map(|c| c.mean_normal)
                .filter(|n| n.norm() > 0.0)
        })
        .collect();
    let mesh = assemble_mesh(&patches, &orientation);
    SurfacingResult {
        patches,
        unsurfaced,
        mesh,
    }
}
