//! Cycle enumeration on curve networks and Scribble-guided cycle selection.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::cluster::ScribbleCluster;
use super::triangulate::{triangulate_polygon, Triangulation, TriangulationWeights};
use crate::error::{Error, Result};
use crate::geom::{project_onto_triangle, Vec3};
use crate::topology::CurveNetwork;

pub const MAX_CYCLE_EDGES: usize = 12;
/// Upper bound on sampled vertices per edge and per polygon.
pub const MAX_EDGE_SEGMENTS: usize = 16;
pub const MAX_POLYGON_VERTICES: usize = 64;
/// Enumeration stops after this many distinct cycles.
pub const MAX_CYCLES: usize = 20_000;
/// Relative barycentric slack when projecting points onto triangles.
const PROJECTION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CycleParams {
    pub max_edges: usize,
    pub min_coverage: f64,
    /// Projection distance in units of the cluster's mean ink width.
    pub projection_widths: f64,
    pub weights: TriangulationWeights,
}

impl Default for CycleParams {
    fn default() -> Self {
        CycleParams {
            max_edges: MAX_CYCLE_EDGES,
            min_coverage: 0.6,
            projection_widths: 2.0,
            weights: TriangulationWeights::default(),
        }
    }
}

/// Boundary samples of every network edge from `node_a` to `node_b`,
/// computed once so that patches sharing an edge share its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSamples {
    pub samples: Vec<Vec<Vec3>>,
}

impl EdgeSamples {
    pub fn new(network: &CurveNetwork) -> Self {
        let samples = network
            .edges
            .iter()
            .map(|e| {
                let b = e.bezier();
                let segs = ((b.length() / (0.5 * e.width)).ceil() as usize).clamp(1, MAX_EDGE_SEGMENTS);
                let mut pts = b.sample(segs + 1);
                pts[0] = network.nodes[e.node_a].p;
                pts[segs] = network.nodes[e.node_b].p;
                pts
            })
            .collect();
        EdgeSamples { samples }
    }
}

/// A closed walk through distinct nodes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cycle {
    /// Nodes in walk order, starting from the smallest id.
    pub nodes: Vec<usize>,
    /// `edges[k]` joins `nodes[k]` and `nodes[k + 1]` (cyclically).
    pub edges: Vec<usize>,
}

impl Cycle {
    /// Sorted edge ids; identifies the cycle regardless of start and direction.
    pub fn key(&self) -> Vec<usize> {
        let mut k = self.edges.clone();
        k.sort_unstable();
        k
    }

    /// Boundary polygon from the shared edge samples. Long cycles are
    /// decimated per edge to at most [`MAX_POLYGON_VERTICES`] vertices.
    pub fn polygon(&self, network: &CurveNetwork, samples: &EdgeSamples) -> Vec<Vec3> {
        let total: usize = self.edges.iter().map(|&e| samples.samples[e].len() - 1).sum();
        let mut out = Vec::with_capacity(total.min(MAX_POLYGON_VERTICES));
        for (k, &e) in self.edges.iter().enumerate() {
            let s = &samples.samples[e];
            let forward = network.edges[e].node_a == self.nodes[k];
            let segs = s.len() - 1;
            let keep = if total > MAX_POLYGON_VERTICES {
                ((segs * MAX_POLYGON_VERTICES) / total).max(1)
            } else {
                segs
            };
            for t in 0..keep {
                let i = t * segs / keep;
                out.push(if forward { s[i] } else { s[segs - i] });
            }
        }
        out
    }
}

/// Simple cycles of at most `max_edges` edges in the subgraph made of
/// `edges`, sorted by key. Parallel edges form 2-cycles.
pub fn enumerate_cycles(network: &CurveNetwork, edges: &[usize], max_edges: usize) -> Vec<Cycle> {
    let n = network.nodes.len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut sorted: Vec<usize> = edges.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &e in &sorted {
        let ed = &network.edges[e];
        if ed.node_a == ed.node_b {
            continue;
        }
        adj[ed.node_a].push((e, ed.node_b));
        adj[ed.node_b].push((e, ed.node_a));
    }
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut out: Vec<Cycle> = Vec::new();
    let mut on_path = vec![false; n];
    for start in 0..n {
        if adj[start].is_empty() {
            continue;
        }
        let mut nodes = vec![start];
        let mut path_edges: Vec<usize> = Vec::new();
        on_path[start] = true;
        dfs(start, start, &adj, max_edges, &mut on_path, &mut nodes, &mut path_edges, &mut seen, &mut out);
        on_path[start] = false;
        if out.len() >= MAX_CYCLES {
            log::warn!("cycle enumeration capped at {MAX_CYCLES}");
            break;
        }
    }
    out.sort_by_key(|c| c.key());
    out
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    start: usize,
    v: usize,
    adj: &[Vec<(usize, usize)>],
    max_edges: usize,
    on_path: &mut [bool],
    nodes: &mut Vec<usize>,
    path_edges: &mut Vec<usize>,
    seen: &mut BTreeSet<Vec<usize>>,
    out: &mut Vec<Cycle>,
) {
    if out.len() >= MAX_CYCLES {
        return;
    }
    for &(e, u) in &adj[v] {
        if path_edges.contains(&e) {
            continue;
        }
        if u == start && !path_edges.is_empty() {
            path_edges.push(e);
            let cycle = Cycle {
                nodes: nodes.clone(),
                edges: path_edges.clone(),
            };
            if seen.insert(cycle.key()) {
                out.push(cycle);
            }
            path_edges.pop();
            continue;
        }
        if u <= start || on_path[u] || path_edges.len() + 1 >= max_edges {
            continue;
        }
        on_path[u] = true;
        nodes.push(u);
        path_edges.push(e);
        dfs(start, u, adj, max_edges, on_path, nodes, path_edges, seen, out);
        path_edges.pop();
        nodes.pop();
        on_path[u] = false;
    }
}

/// Edges with at least one boundary sample inside the cluster's scaled box.
pub fn edges_in_box(samples: &EdgeSamples, cluster: &ScribbleCluster) -> Vec<usize> {
    (0..samples.samples.len())
        .filter(|&e| samples.samples[e].iter().any(|p| cluster.scaled_aabb.contains(p)))
        .collect()
}

/// Fraction of `points` that project along a triangle normal onto one of the
/// triangles with an offset of at most `max_offset`.
pub fn projection_coverage(points: &[Vec3], polygon: &[Vec3], triangles: &[[usize; 3]], max_offset: f64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let hit = points
        .iter()
        .filter(|p| {
            triangles.iter().any(|t| {
                project_onto_triangle(p, &polygon[t[0]], &polygon[t[1]], &polygon[t[2]], PROJECTION_SLACK)
                    .is_some_and(|off| off.abs() <= max_offset)
            })
        })
        .count();
    hit as f64 / points.len() as f64
}

/// A cycle with its triangulated boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclePatch {
    pub cycle: Cycle,
    pub polygon: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub weight: f64,
    pub source_cluster_id: Option<usize>,
    pub coverage: f64,
    pub verified: bool,
}

impl CyclePatch {
    pub fn new(cycle: Cycle, network: &CurveNetwork, samples: &EdgeSamples, weights: &TriangulationWeights) -> Result<Self> {
        let polygon = cycle.polygon(network, samples);
        let Triangulation { triangles, weight } = triangulate_polygon(&polygon, weights)?;
        Ok(CyclePatch {
            cycle,
            polygon,
            triangles,
            weight,
            source_cluster_id: None,
            coverage: 0.0,
            verified: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub edges: Vec<usize>,
    pub coverage: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSearch {
    pub candidates: Vec<CandidateScore>,
    pub chosen: CyclePatch,
}

/// Picks the cycle of the cluster's box subgraph whose patch covers the most
/// cluster points; ties go to fewer edges, then lower weight.
pub fn discover_cycles(
    network: &CurveNetwork,
    samples: &EdgeSamples,
    cluster: &ScribbleCluster,
    params: &CycleParams,
) -> Result<CycleSearch> {
    let sub = edges_in_box(samples, cluster);
    let cycles = enumerate_cycles(network, &sub, params.max_edges);
    let max_offset = params.projection_widths * cluster.mean_width;
    let mut candidates = Vec::with_capacity(cycles.len());
    let mut best: Option<CyclePatch> = None;
    for cycle in cycles {
        let mut patch = match CyclePatch::new(cycle, network, samples, &params.weights) {
            Ok(p) => p,
            Err(e) => {
                log::debug!("skipping cycle: {e}");
                continue;
            }
        };
        patch.coverage = projection_coverage(&cluster.points, &patch.polygon, &patch.triangles, max_offset);
        patch.source_cluster_id = Some(cluster.id);
        candidates.push(CandidateScore {
            edges: patch.cycle.key(),
            coverage: patch.coverage,
            weight: patch.weight,
        });
        let better = match &best {
            None => true,
            Some(b) => {
                patch.coverage > b.coverage
                    || (patch.coverage == b.coverage
                        && (patch.cycle.edges.len() < b.cycle.edges.len()
                            || (patch.cycle.edges.len() == b.cycle.edges.len() && patch.weight < b.weight)))
            }
        };
        if better {
            best = Some(patch);
        }
    }
    match best {
        Some(chosen) if chosen.coverage >= params.min_coverage => Ok(CycleSearch { candidates, chosen }),
        _ => Err(Error::NoCycleFound(cluster.id)),
    }
}

/// Cycle selection without Scribble guidance: all cycles of the whole network,
/// shortest first (then lighter), accepted while every edge is used by at
/// most two patches.
pub fn unguided_patches(network: &CurveNetwork, samples: &EdgeSamples, params: &CycleParams) -> Vec<CyclePatch> {
    let all: Vec<usize> = (0..network.edges.len()).collect();
    let mut patches: Vec<CyclePatch> = enumerate_cycles(network, &all, params.max_edges)
        .into_iter()
        .filter_map(|c| CyclePatch::new(c, network, samples, &params.weights).ok())
        .collect();
    patches.sort_by(|a, b| {
        a.cycle
            .edges
            .len()
            .cmp(&b.cycle.edges.len())
            .then(a.weight.total_cmp(&b.weight))
            .then(a.cycle.key().cmp(&b.cycle.key()))
    });
    let mut use_count = vec![0usize; network.edges.len()];
    let mut out = Vec::new();
    for mut p in patches {
        if p.cycle.edges.iter().all(|&e| use_count[e] < 2) {
            for &e in &p.cycle.edges {
                use_count[e] += 1;
            }
            p.verified = true;
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consolidation::ConsolidatedCurve;
    use crate::spline::CubicBezier;
    use crate::topology::{build_network, plan_connections};

    fn net_from_segments(segs: &[(Vec3, Vec3)], w: f64) -> CurveNetwork {
        let curves: Vec<ConsolidatedCurve> = segs
            .iter()
            .enumerate()
            .map(|(i, (a, b))| ConsolidatedCurve {
                curve_id: i,
                source_cluster_id: i,
                control_points: CubicBezier::line(*a, *b).control_points,
                mean_width: w,
                source_stroke_ids: vec![i],
                max_residual: 0.0,
            })
            .collect();
        build_network(&curves, &plan_connections(&curves, 1.5)).unwrap()
    }

    fn cluster_on(points: Vec<Vec3>, w: f64) -> ScribbleCluster {
        let aabb = crate::geom::Aabb::from_points(&points).unwrap();
        ScribbleCluster {
            id: 0,
            stroke_ids: vec![0],
            scaled_aabb: aabb.scaled(1.5, 2.0 * w),
            aabb,
            points,
            mean_width: w,
            mean_normal: Vec3::z(),
        }
    }

    #[test]
    fn triangle_network_unique_cycle() {
        let w = 0.02;
        let (a, b, c) = (Vec3::zeros(), Vec3::x(), Vec3::new(0.5, 0.8, 0.0));
        let net = net_from_segments(&[(a, b), (b, c), (c, a)], w);
        assert_eq!(net.nodes.len(), 3);
        let samples = EdgeSamples::new(&net);
        let mut interior = Vec::new();
        for i in 1..10 {
            for j in 1..10 - i {
                let (u, v) = (i as f64 / 10.0, j as f64 / 10.0);
                interior.push(a + (b - a) * u + (c - a) * v);
            }
        }
        let cl = cluster_on(interior, w);
        let s = discover_cycles(&net, &samples, &cl, &CycleParams::default()).unwrap();
        assert_eq!(s.candidates.len(), 1);
        assert_eq!(s.chosen.cycle.edges.len(), 3);
        assert_eq!(s.chosen.coverage, 1.0);
    }

    #[test]
    fn open_corner_has_no_cycle() {
        let w = 0.02;
        let o = Vec3::zeros();
        let net = net_from_segments(&[(o, Vec3::x()), (o, Vec3::y()), (o, Vec3::z())], w);
        let samples = EdgeSamples::new(&net);
        let cl = cluster_on(vec![Vec3::new(0.3, 0.3, 0.0), Vec3::new(0.2, 0.1, 0.0)], w);
        assert!(matches!(
            discover_cycles(&net, &samples, &cl, &CycleParams::default()),
            Err(Error::NoCycleFound(0))
        ));
    }

    #[test]
    fn enumeration_ignores_edge_order() {
        let w = 0.02;
        let p = [Vec3::zeros(), Vec3::x(), Vec3::new(1.0, 1.0, 0.0), Vec3::y()];
        let net = net_from_segments(&[(p[0], p[1]), (p[1], p[2]), (p[2], p[3]), (p[3], p[0]), (p[0], p[2])], w);
        let a = enumerate_cycles(&net, &[0, 1, 2, 3, 4], 12);
        let b = enumerate_cycles(&net, &[4, 2, 0, 3, 1], 12);
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn shared_edges_share_polygon_vertices() {
        let w = 0.02;
        let p = [Vec3::zeros(), Vec3::x(), Vec3::new(1.0, 1.0, 0.0), Vec3::y()];
        let net = net_from_segments(&[(p[0], p[1]), (p[1], p[2]), (p[2], p[3]), (p[3], p[0]), (p[0], p[2])], w);
        let samples = EdgeSamples::new(&net);
        let cycles = enumerate_cycles(&net, &[0, 1, 2, 3, 4], 12);
        let tri: Vec<&Cycle> = cycles.iter().filter(|c| c.edges.len() == 3).collect();
        let pa = tri[0].polygon(&net, &samples);
        let pb = tri[1].polygon(&net, &samples);
        let shared = pa.iter().filter(|x| pb.contains(x)).count();
        assert_eq!(shared, samples.samples[4].len());
    }
}
