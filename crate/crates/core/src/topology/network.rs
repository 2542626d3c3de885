//! Assembling a connected curve network from a connection plan.

use serde::{Deserialize, Serialize};

use super::distance::sample_count;
use super::junction::solve_junction;
use super::plan::{Anchor, ConnectionPlan, CurveEnd, DEFAULT_CONNECT_COEFFICIENT};
use crate::consolidation::ConsolidatedCurve;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::spline::{chord_length_params, fit_bezier_fixed_ends, CubicBezier};

/// Nodes closer than this are the same node.
pub const NODE_MERGE_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub p: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: usize,
    pub node_a: usize,
    pub node_b: usize,
    pub control_points: [Vec3; 4],
    pub width: f64,
    pub source_curve: usize,
}

impl Edge {
    pub fn bezier(&self) -> CubicBezier {
        CubicBezier::new(self.control_points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveNetwork {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    /// Junction nodes placed at a fallback because their lines coincided.
    #[serde(default)]
    pub singular_nodes: Vec<usize>,
}

impl CurveNetwork {
    /// `(edge id, neighbor node)` per node.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.node_a].push((e.id, e.node_b));
            adj[e.node_b].push((e.id, e.node_a));
        }
        adj
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges.iter().map(|e| (e.node_a == node) as usize + (e.node_b == node) as usize).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("curve network: {e}")))
    }

    /// Network of unconnected curves: two nodes per curve.
    pub fn from_curves(curves: &[ConsolidatedCurve]) -> Self {
        let plan = ConnectionPlan {
            pairs: Vec::new(),
            anchors: Vec::new(),
            groups: Vec::new(),
        };
        build_network(curves, &plan).expect("no junctions to solve")
    }
}

struct Piece {
    curve: usize,
    bezier: CubicBezier,
    width: f64,
    /// Junction group per end, if constrained.
    group: [Option<usize>; 2],
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    parent[x] = r;
    r
}

/// Pieces of every curve after applying the plan's splits, with anchor ids
/// at constrained ends.
fn split_pieces(curves: &[ConsolidatedCurve], plan: &ConnectionPlan, anchor_group: &[usize]) -> Vec<Piece> {
    let mut pieces = Vec::new();
    for (c, curve) in curves.iter().enumerate() {
        let anchor_of = |pred: &dyn Fn(&Anchor) -> bool| plan.anchors.iter().position(pred).map(|a| anchor_group[a]);
        let start_group = anchor_of(&|a| matches!(a, Anchor::Endpoint { curve, end: CurveEnd::Start } if *curve == c));
        let end_group = anchor_of(&|a| matches!(a, Anchor::Endpoint { curve, end: CurveEnd::End } if *curve == c));
        let splits = plan.splits_of(c);
        let mut rest = curve.bezier();
        let mut consumed = 0.0;
        let mut prev_group = start_group;
        for &u in &splits {
            let local = (u - consumed) / (1.0 - consumed);
            let (left, right) = rest.split(local);
            let g = anchor_of(&|a| matches!(a, Anchor::Split { curve, param } if *curve == c && *param == u));
            pieces.push(Piece {
                curve: c,
                bezier: left,
                width: curve.mean_width,
                group: [prev_group, g],
            });
            prev_group = g;
            rest = right;
            consumed = u;
        }
        pieces.push(Piece {
            curve: c,
            bezier: rest,
            width: curve.mean_width,
            group: [prev_group, end_group],
        });
    }
    pieces
}

fn end_point(b: &CubicBezier, side: usize) -> Vec3 {
    if side == 0 {
        b.start()
    } else {
        b.end()
    }
}

/// Solves every junction group; returns the point and a singular flag.
fn solve_groups(pieces: &[Piece], n_groups: usize, group_of: &[usize]) -> Result<Vec<(Vec3, bool)>> {
    let mut ends = vec![Vec::new(); n_groups];
    let mut tangents = vec![Vec::new(); n_groups];
    for p in pieces {
        for side in 0..2 {
            if let Some(g) = p.group[side] {
                let g = group_of[g];
                ends[g].push(end_point(&p.bezier, side));
                tangents[g].push(p.bezier.tangent(side as f64));
            }
        }
    }
    (0..n_groups)
        .map(|g| {
            let centroid = || ends[g].iter().sum::<Vec3>() / ends[g].len().max(1) as f64;
            if ends[g].len() < 2 {
                return Ok((centroid(), false));
            }
            match solve_junction(&ends[g], &tangents[g]) {
                Ok(s) => Ok((s.point, false)),
                Err(Error::SingularConfiguration(msg)) => {
                    log::warn!("junction {g}: {msg}; using the centroid");
                    Ok((centroid(), true))
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Refits `piece` with its ends pinned to `a` and `b`, dropping samples that
/// lie past a constrained end along the outgoing tangent.
fn extend_piece(piece: &Piece, a: Vec3, b: Vec3) -> CubicBezier {
    if piece.group == [None, None] {
        return piece.bezier;
    }
    let bz = &piece.bezier;
    let n = sample_count(bz, piece.width);
    let out_start = -bz.tangent(0.0);
    let out_end = bz.tangent(1.0);
    let interior: Vec<Vec3> = bz
        .sample(n)
        .into_iter()
        .skip(1)
        .take(n - 2)
        .filter(|s| piece.group[0].is_none() || (s - a).dot(&out_start) < 0.0)
        .filter(|s| piece.group[1].is_none() || (s - b).dot(&out_end) < 0.0)
        .collect();
    if interior.is_empty() {
        return CubicBezier::line(a, b);
    }
    let mut all = Vec::with_capacity(interior.len() + 2);
    all.push(a);
    all.extend_from_slice(&interior);
    all.push(b);
    let params = chord_length_params(&all);
    fit_bezier_fixed_ends(a, b, &interior, &params[1..params.len() - 1])
}

/// Applies splits, places one node per junction group, extends constrained
/// curve ends to their node and refits each piece with pinned ends.
pub fn build_network(curves: &[ConsolidatedCurve], plan: &ConnectionPlan) -> Result<CurveNetwork> {
    let mut anchor_group = vec![0; plan.anchors.len()];
    for (g, members) in plan.groups.iter().enumerate() {
        for &a in members {
            anchor_group[a] = g;
        }
    }
    let pieces = split_pieces(curves, plan, &anchor_group);
    let n_groups = plan.groups.len();

    // merge groups whose junctions land within reach of each other
    let mut group_of: Vec<usize> = (0..n_groups).collect();
    let mut reach = vec![0.0f64; n_groups];
    for p in &pieces {
        for g in p.group.iter().flatten() {
            reach[*g] = reach[*g].max(DEFAULT_CONNECT_COEFFICIENT * p.width);
        }
    }
    let mut solved = solve_groups(&pieces, n_groups, &group_of)?;
    loop {
        let mut merged = false;
        let roots: Vec<usize> = (0..n_groups).filter(|&g| group_of[g] == g).collect();
        'outer: for (i, &a) in roots.iter().enumerate() {
            for &b in &roots[i + 1..] {
                if (solved[a].0 - solved[b].0).norm() < reach[a].max(reach[b]) {
                    for g in group_of.iter_mut() {
                        if *g == b {
                            *g = a;
                        }
                    }
                    reach[a] = reach[a].max(reach[b]);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
        solved = solve_groups(&pieces, n_groups, &group_of)?;
    }

    // raw nodes: junction roots first, then free piece ends
    let mut positions: Vec<Vec3> = Vec::new();
    let mut singular: Vec<bool> = Vec::new();
    let mut root_node = vec![usize::MAX; n_groups];
    for g in 0..n_groups {
        if group_of[g] == g {
            root_node[g] = positions.len();
            positions.push(solved[g].0);
            singular.push(solved[g].1);
        }
    }
    let mut piece_nodes = Vec::with_capacity(pieces.len());
    for p in &pieces {
        let mut ids = [0; 2];
        for side in 0..2 {
            ids[side] = match p.group[side] {
                Some(g) => root_node[group_of[g]],
                None => {
                    positions.push(end_point(&p.bezier, side));
                    singular.push(false);
                    positions.len() - 1
                }
            };
        }
        piece_nodes.push(ids);
    }
    let mut parent: Vec<usize> = (0..positions.len()).collect();
    for i in 0..positions.len() {
        for j in 0..i {
            if (positions[i] - positions[j]).norm() <= NODE_MERGE_DISTANCE {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut final_id = vec![usize::MAX; positions.len()];
    let mut nodes = Vec::new();
    let mut singular_nodes = Vec::new();
    for i in 0..positions.len() {
        let r = find(&mut parent, i);
        if final_id[r] == usize::MAX {
            final_id[r] = nodes.len();
            if singular[r] {
                singular_nodes.push(nodes.len());
            }
            nodes.push(Node {
                id: nodes.len(),
                p: positions[r],
            });
        }
        final_id[i] = final_id[r];
    }

    let mut edges = Vec::new();
    for (p, ids) in pieces.iter().zip(&piece_nodes) {
        let (na, nb) = (final_id[ids[0]], final_id[ids[1]]);
        if na == nb {
            log::debug!("dropping curve {} piece collapsed onto node {na}", p.curve);
            continue;
        }
        let mut bz = extend_piece(p, nodes[na].p, nodes[nb].p);
        bz.control_points[0] = nodes[na].p;
        bz.control_points[3] = nodes[nb].p;
        edges.push(Edge {
            id: edges.len(),
            node_a: na,
            node_b: nb,
            control_points: bz.control_points,
            width: p.width,
            source_curve: p.curve,
        });
    }
    Ok(CurveNetwork {
        nodes,
        edges,
        singular_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::super::plan::plan_connections;
    use super::super::plan::tests::curve;
    use super::*;

    #[test]
    fn single_curve_gives_two_nodes() {
        let curves = [curve(0, Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), 0.02)];
        let net = build_network(&curves, &plan_connections(&curves, DEFAULT_CONNECT_COEFFICIENT)).unwrap();
        assert_eq!(net.nodes.len(), 2);
        assert_eq!(net.edges.len(), 1);
    }

    #[test]
    fn t_fixture_topology() {
        let w = 0.02;
        let curves = [
            curve(0, Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), w),
            curve(1, Vec3::new(0.3, 0.5 * w, 0.0), Vec3::new(0.3, 1.0, 0.0), w),
        ];
        let plan = plan_connections(&curves, DEFAULT_CONNECT_COEFFICIENT);
        let net = build_network(&curves, &plan).unwrap();
        assert_eq!(net.nodes.len(), 4);
        assert_eq!(net.edges.len(), curves.len() + plan.split_count());
        let hubs: Vec<usize> = (0..net.nodes.len()).filter(|&n| net.degree(n) == 3).collect();
        assert_eq!(hubs.len(), 1);
        assert!((net.nodes[hubs[0]].p - Vec3::new(0.3, 0.0, 0.0)).norm() < 1e-6);
        for e in &net.edges {
            assert_eq!(e.control_points[0], net.nodes[e.node_a].p);
            assert_eq!(e.control_points[3], net.nodes[e.node_b].p);
        }
    }

    #[test]
    fn json_round_trip() {
        let curves = [curve(0, Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), 0.02)];
        let net = CurveNetwork::from_curves(&curves);
        assert_eq!(CurveNetwork::from_json(&net.to_json()).unwrap(), net);
    }
}
