//! Connecting consolidated curves into a curve network.

pub mod distance;
pub mod junction;
pub mod network;
pub mod plan;

pub use distance::{curve_pair_distance, CurvePairDistance};
pub use junction::{junction_objective, solve_junction, JunctionSolution};
pub use network::{build_network, CurveNetwork, Edge, Node};
pub use plan::{plan_connections, Action, Anchor, ConnectionPlan, CurveEnd, DEFAULT_CONNECT_COEFFICIENT};

use crate::consolidation::ConsolidatedCurve;
use crate::error::Result;

/// Plans connections with the given proximity coefficient and builds the
/// network.
pub fn recover_topology(curves: &[ConsolidatedCurve], coefficient: f64) -> Result<(ConnectionPlan, CurveNetwork)> {
    let plan = plan_connections(curves, coefficient);
    let network = build_network(curves, &plan)?;
    Ok((plan, network))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consolidation::{consolidate_shapes, ConsolidationParams};
    use crate::sketch::StrokeLabel;
    use crate::synth::{synth_sketch, SynthConfig, SynthObject};

    #[test]
    fn zero_jitter_cube_network() {
        let sketch = synth_sketch(&SynthConfig::new(SynthObject::Cube, 0.0, 2, 4)).unwrap();
        let ids: Vec<usize> = (0..sketch.strokes.len())
            .filter(|&i| sketch.strokes[i].label == Some(StrokeLabel::Shape))
            .collect();
        let stage = consolidate_shapes(&sketch, &ids, &ConsolidationParams::default()).unwrap();
        let (plan, net) = recover_topology(&stage.curves, plan::DEFAULT_CONNECT_COEFFICIENT).unwrap();
        assert_eq!(net.nodes.len(), 8);
        assert_eq!(net.edges.len(), 12);
        assert_eq!(plan.split_count(), 0);
        let corners = &sketch.oracle.as_ref().unwrap().corners;
        for n in &net.nodes {
            let d = corners.iter().map(|c| (c - n.p).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-3, "{d}");
        }
        for (i, a) in net.nodes.iter().enumerate() {
            for b in &net.nodes[i + 1..] {
                assert!((a.p - b.p).norm() > 1.5 * 0.02);
            }
        }
    }
}
