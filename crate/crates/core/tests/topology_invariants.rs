use nalgebra::{Rotation3, Unit};
use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};

use strokesurf::consolidation::{consolidate_shapes, ConsolidatedCurve, ConsolidationParams};
use strokesurf::synth::{synth_sketch, SynthConfig, SynthObject};
use strokesurf::topology::{recover_topology, Action, CurveEnd, DEFAULT_CONNECT_COEFFICIENT};
use strokesurf::{StrokeLabel, Vec3};

fn fixture_curves(object: SynthObject, seed: u64) -> Vec<ConsolidatedCurve> {
    let sketch = synth_sketch(&SynthConfig::new(object, 0.2, 2, seed)).unwrap();
    let ids: Vec<usize> = (0..sketch.strokes.len())
        .filter(|&i| sketch.strokes[i].label == Some(StrokeLabel::Shape))
        .collect();
    consolidate_shapes(&sketch, &ids, &ConsolidationParams::default()).unwrap().curves
}

fn object(k: u8) -> SynthObject {
    [SynthObject::Cube, SynthObject::OpenBox, SynthObject::Wall, SynthObject::YJunction][k as usize % 4]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn edges_are_curves_plus_splits(k in 0u8..4, seed in 0u64..1000) {
        let curves = fixture_curves(object(k), seed);
        let (plan, net) = recover_topology(&curves, DEFAULT_CONNECT_COEFFICIENT).unwrap();
        prop_assert_eq!(net.edges.len(), curves.len() + plan.split_count());
        for e in &net.edges {
            prop_assert!(e.node_a < net.nodes.len() && e.node_b < net.nodes.len());
        }
    }

    #[test]
    fn constrained_ends_stay_near_their_junction(k in 0u8..4, seed in 0u64..1000) {
        let curves = fixture_curves(object(k), seed);
        let (plan, net) = recover_topology(&curves, DEFAULT_CONNECT_COEFFICIENT).unwrap();
        for pair in &plan.pairs {
            let reach = 1.5 * curves[pair.curves[0]].mean_width.min(curves[pair.curves[1]].mean_width);
            for action in pair.actions {
                if let Action::ConstrainEndpoint { curve, end } = action {
                    let b = curves[curve].bezier();
                    let p = if end == CurveEnd::Start { b.start() } else { b.end() };
                    let nearest = net.nodes.iter().map(|n| (n.p - p).norm()).fold(f64::INFINITY, f64::min);
                    prop_assert!(nearest <= reach, "end of curve {} is {} from the nearest node (reach {})", curve, nearest, reach);
                }
            }
        }
    }

    #[test]
    fn rigid_motion_moves_every_node(
        k in 0u8..4,
        seed in 0u64..1000,
        axis in (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0),
        angle in -3.0f64..3.0,
        shift in (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0),
    ) {
        let curves = fixture_curves(object(k), seed);
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::new(axis.0, axis.1, axis.2)), angle);
        let shift = Vec3::new(shift.0, shift.1, shift.2);
        let moved: Vec<ConsolidatedCurve> = curves
            .iter()
            .map(|c| ConsolidatedCurve {
                control_points: c.control_points.map(|p| rot * p + shift),
                ..c.clone()
            })
            .collect();
        let (_, a) = recover_topology(&curves, DEFAULT_CONNECT_COEFFICIENT).unwrap();
        let (_, b) = recover_topology(&moved, DEFAULT_CONNECT_COEFFICIENT).unwrap();
        prop_assert_eq!(a.nodes.len(), b.nodes.len());
        prop_assert_eq!(a.edges.len(), b.edges.len());
        for n in &a.nodes {
            let want = rot * n.p + shift;
            let nearest = b.nodes.iter().map(|m| (m.p - want).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= 1e-6, "node {} misses by {}", n.id, nearest);
        }
    }
}
