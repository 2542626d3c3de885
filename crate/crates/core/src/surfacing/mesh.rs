//! Patch verification, mesh assembly and OBJ export.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cluster::ScribbleCluster;
use super::cycles::{projection_coverage, CyclePatch};
use crate::geom::{triangle_area, Vec3};
use crate::kdtree::SpatialIndex;
use crate::topology::CurveNetwork;

pub const WELD_DISTANCE: f64 = 1e-6;
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Keeps a patch iff at least `min_fraction` of some cluster's points project
/// onto it within `projection_widths` of that cluster's mean width. Sets
/// `verified` and `coverage` (the best fraction) on every patch.
pub fn verify_patches(patches: &mut [CyclePatch], clusters: &[ScribbleCluster], min_fraction: f64, projection_widths: f64) {
    for p in patches.iter_mut() {
        let best = clusters
            .iter()
            .map(|c| projection_coverage(&c.points, &p.polygon, &p.triangles, projection_widths * c.mean_width))
            .fold(0.0, f64::max);
        p.coverage = best;
        p.verified = best >= min_fraction;
        if !p.verified {
            log::info!("discarding patch on edges {:?}: coverage {best:.3}", p.cycle.key());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    /// Patch index per face.
    pub face_patch: Vec<usize>,
    /// Network edge ids bounding each patch.
    pub patch_edges: Vec<Vec<usize>>,
}

impl SurfaceMesh {
    pub fn patch_count(&self) -> usize {
        self.patch_edges.len()
    }

    /// Undirected edges with the number of faces using each.
    pub fn edge_use(&self) -> BTreeMap<(usize, usize), usize> {
        let mut m = BTreeMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        m
    }

    pub fn euler_characteristic(&self) -> i64 {
        let used: BTreeSet<usize> = self.faces.iter().flatten().copied().collect();
        used.len() as i64 - self.edge_use().len() as i64 + self.faces.len() as i64
    }

    /// Edges used by exactly one face.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        self.edge_use().into_iter().filter(|(_, c)| *c == 1).map(|(e, _)| e).collect()
    }

    pub fn is_closed(&self) -> bool {
        !self.faces.is_empty() && self.edge_use().values().all(|&c| c == 2)
    }

    /// Wavefront OBJ: `o` per connected component of the curve network,
    /// `g` per patch.
    pub fn to_obj(&self, network: &CurveNetwork) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        let component = network_components(network);
        let mut by_component: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (p, edges) in self.patch_edges.iter().enumerate() {
            let c = edges.first().map(|&e| component[network.edges[e].node_a]).unwrap_or(0);
            by_component.entry(c).or_default().push(p);
        }
        for (c, patches) in by_component {
            let _ = writeln!(s, "o network_{c}");
            for p in patches {
                let _ = writeln!(s, "g patch_{p}");
                for (f, _) in self.face_patch.iter().enumerate().filter(|(_, &fp)| fp == p) {
                    let [a, b, c] = self.faces[f];
                    let _ = writeln!(s, "f {} {} {}", a + 1, b + 1, c + 1);
                }
            }
        }
        s
    }
}

/// Connected-component id per network node.
pub fn network_components(network: &CurveNetwork) -> Vec<usize> {
    let adj = network.adjacency();
    let mut comp = vec![usize::MAX; network.nodes.len()];
    let mut next = 0;
    for s in 0..network.nodes.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &(_, u) in &adj[v] {
                if comp[u] == usize::MAX {
                    comp[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Concatenates the verified patches, welds coincident vertices and drops
/// degenerate faces. Faces are wound so their normals agree with the given
/// per-patch reference direction when one is supplied.
pub fn assemble_mesh(patches: &[CyclePatch], orientation: &[Option<Vec3>]) -> SurfaceMesh {
    let mut raw: Vec<Vec3> = Vec::new();
    let mut faces = Vec::new();
    let mut face_patch = Vec::new();
    let mut patch_edges = Vec::new();
    for (k, p) in patches.iter().enumerate().filter(|(_, p)| p.verified) {
        let pid = patch_edges.len();
        patch_edges.push(p.cycle.edges.clone());
        let base = raw.len();
        raw.extend_from_slice(&p.polygon);
        let normal: Vec3 = p
            .triangles
            .iter()
            .map(|t| (p.polygon[t[1]] - p.polygon[t[0]]).cross(&(p.polygon[t[2]] - p.polygon[t[0]])))
            .sum();
        let flip = orientation.get(k).copied().flatten().is_some_and(|r| normal.dot(&r) < 0.0);
        for t in &p.triangles {
            let f = if flip { [t[0], t[2], t[1]] } else { *t };
            faces.push(f.map(|i| base + i));
            face_patch.push(pid);
        }
    }
    // weld: each vertex maps to the lowest-index vertex within the tolerance
    let index = SpatialIndex::new(raw.clone());
    let mut rep = vec![usize::MAX; raw.len()];
    let mut vertices = Vec::new();
    let mut new_id = vec![0; raw.len()];
    for i in 0..raw.len() {
        if rep[i] != usize::MAX {
            continue;
        }
        let id = vertices.len();
        vertices.push(raw[i]);
        for j in index.within_radius(&raw[i], WELD_DISTANCE) {
            if rep[j] == usize::MAX {
                rep[j] = i;
                new_id[j] = id;
            }
        }
    }
    let mut out_faces = Vec::with_capacity(faces.len());
    let mut out_patch = Vec::with_capacity(faces.len());
    for (f, pid) in faces.into_iter().zip(face_patch) {
        let g = f.map(|i| new_id[i]);
        if g[0] == g[1] || g[1] == g[2] || g[0] == g[2] {
            continue;
        }
        if triangle_area(&vertices[g[0]], &vertices[g[1]], &vertices[g[2]]) <= DEGENERATE_AREA {
            continue;
        }
        out_faces.push(g);
        out_patch.push(pid);
    }
    SurfaceMesh {
        vertices,
        faces: out_faces,
        face_patch: out_patch,
        patch_edges,
    }
}
