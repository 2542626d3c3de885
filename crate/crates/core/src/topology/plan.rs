//! Deciding which curve ends must meet and which curves must be split.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::{curve_pair_distance, CurvePairDistance};
use crate::consolidation::ConsolidatedCurve;
use crate::geom::{Aabb, Vec3};

pub const DEFAULT_CONNECT_COEFFICIENT: f64 = 1.5;
/// Fraction of curve length within which a closest point counts as an end.
pub const END_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveEnd {
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "action")]
pub enum Action {
    ConstrainEndpoint { curve: usize, end: CurveEnd },
    SplitAt { curve: usize, param: f64 },
}

/// A curve pair closer than the connection threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPair {
    pub curves: [usize; 2],
    pub distance: CurvePairDistance,
    pub threshold: f64,
    pub actions: [Action; 2],
}

/// A location on a curve that must sit on a junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Anchor {
    Endpoint { curve: usize, end: CurveEnd },
    Split { curve: usize, param: f64 },
}

impl Anchor {
    pub fn curve(&self) -> usize {
        match *self {
            Anchor::Endpoint { curve, .. } | Anchor::Split { curve, .. } => curve,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionPlan {
    pub pairs: Vec<FlaggedPair>,
    pub anchors: Vec<Anchor>,
    /// Anchor indices per junction group; every anchor is in exactly one.
    pub groups: Vec<Vec<usize>>,
}

impl ConnectionPlan {
    pub fn split_count(&self) -> usize {
        self.anchors.iter().filter(|a| matches!(a, Anchor::Split { .. })).count()
    }

    /// Sorted split parameters of one curve.
    pub fn splits_of(&self, curve: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .anchors
            .iter()
            .filter_map(|a| match *a {
                Anchor::Split { curve: c, param } if c == curve => Some(param),
                _ => None,
            })
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

fn classify(curve: &ConsolidatedCurve, param: f64, threshold: f64, index: usize) -> Action {
    let b = curve.bezier();
    let length = b.length();
    let to_start = b.length_between(0.0, param);
    let to_end = b.length_between(param, 1.0);
    let near = threshold.max(END_FRACTION * length);
    if to_start.min(to_end) <= near {
        let end = if to_start <= to_end { CurveEnd::Start } else { CurveEnd::End };
        Action::ConstrainEndpoint { curve: index, end }
    } else {
        Action::SplitAt { curve: index, param }
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

/// Position of an anchor on its curve.
pub fn anchor_point(curves: &[ConsolidatedCurve], a: &Anchor) -> Vec3 {
    match *a {
        Anchor::Endpoint { curve, end } => {
            let b = curves[curve].bezier();
            match end {
                CurveEnd::Start => b.start(),
                CurveEnd::End => b.end(),
            }
        }
        Anchor::Split { curve, param } => curves[curve].bezier().eval(param),
    }
}

/// Flags curve pairs closer than `coefficient * min(w_i, w_j)`, classifies
/// each side as an end constraint or an interior split, merges nearby splits
/// of one curve and groups anchors by transitive proximity.
pub fn plan_connections(curves: &[ConsolidatedCurve], coefficient: f64) -> ConnectionPlan {
    let n = curves.len();
    let boxes: Vec<Aabb> = curves
        .iter()
        .map(|c| Aabb::from_points(&c.control_points).expect("four points"))
        .collect();
    let pairs: Vec<FlaggedPair> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let threshold = coefficient * curves[i].mean_width.min(curves[j].mean_width);
            if boxes[i].gap(&boxes[j]) >= threshold {
                return None;
            }
            let d = curve_pair_distance(&curves[i].bezier(), curves[i].mean_width, &curves[j].bezier(), curves[j].mean_width);
            if d.distance >= threshold {
                return None;
            }
            Some(FlaggedPair {
                curves: [i, j],
                distance: d,
                threshold,
                actions: [
                    classify(&curves[i], d.param_a, threshold, i),
                    classify(&curves[j], d.param_b, threshold, j),
                ],
            })
        })
        .collect();

    // anchors: one per curve end, splits merged when closer than the threshold
    let mut anchors: Vec<Anchor> = Vec::new();
    let mut anchor_width: Vec<f64> = Vec::new();
    let mut pair_anchor = vec![[0usize; 2]; pairs.len()];
    for (k, p) in pairs.iter().enumerate() {
        for side in 0..2 {
            let found = match p.actions[side] {
                Action::ConstrainEndpoint { curve, end } => {
                    let a = Anchor::Endpoint { curve, end };
                    anchors.iter().position(|x| *x == a).unwrap_or_else(|| {
                        anchors.push(a);
                        anchor_width.push(p.threshold);
                        anchors.len() - 1
                    })
                }
                Action::SplitAt { curve, param } => {
                    let b = curves[curve].bezier();
                    let near = anchors.iter().position(|x| match *x {
                        Anchor::Split { curve: c, param: q } => c == curve && b.length_between(q, param) < p.threshold,
                        _ => false,
                    });
                    near.unwrap_or_else(|| {
                        anchors.push(Anchor::Split { curve, param });
                        anchor_width.push(p.threshold);
                        anchors.len() - 1
                    })
                }
            };
            pair_anchor[k][side] = found;
        }
    }
    let mut parent: Vec<usize> = (0..anchors.len()).collect();
    for pa in &pair_anchor {
        union(&mut parent, pa[0], pa[1]);
    }
    let pos: Vec<Vec3> = anchors.iter().map(|a| anchor_point(curves, a)).collect();
    for a in 0..anchors.len() {
        for b in a + 1..anchors.len() {
            let reach = anchor_width[a].max(anchor_width[b]);
            if (pos[a] - pos[b]).norm() < reach {
                union(&mut parent, a, b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_group = vec![usize::MAX; anchors.len()];
    for a in 0..anchors.len() {
        let r = find(&mut parent, a);
        if root_group[r] == usize::MAX {
            root_group[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_group[r]].push(a);
    }
    ConnectionPlan { pairs, anchors, groups }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::spline::CubicBezier;

    pub(crate) fn curve(id: usize, a: Vec3, b: Vec3, width: f64) -> ConsolidatedCurve {
        ConsolidatedCurve {
            curve_id: id,
            source_cluster_id: id,
            control_points: CubicBezier::line(a, b).control_points,
            mean_width: width,
            source_stroke_ids: vec![id],
            max_residual: 0.0,
        }
    }

    #[test]
    fn nearly_touching_ends_form_one_group() {
        let w = 0.02;
        let curves = [
            curve(0, Vec3::new(-1.0, 0.0, 0.0), Vec3::new(-0.5 * w, 0.0, 0.0), w),
            curve(1, Vec3::zeros(), Vec3::new(0.0, 1.0, 0.0), w),
        ];
        let plan = plan_connections(&curves, DEFAULT_CONNECT_COEFFICIENT);
        assert_eq!(plan.pairs.len(), 1);
        assert_eq!(
            plan.pairs[0].actions,
            [
                Action::ConstrainEndpoint { curve: 0, end: CurveEnd::End },
                Action::ConstrainEndpoint { curve: 1, end: CurveEnd::Start },
            ]
        );
        assert_eq!(plan.groups.len(), 1);
        assert_eq!(plan.split_count(), 0);
    }

    #[test]
    fn t_configuration_splits_the_bar() {
        let w = 0.02;
        let foot = 0.3;
        let curves = [
            curve(0, Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), w),
            curve(1, Vec3::new(foot, 0.5 * w, 0.0), Vec3::new(foot, 1.0, 0.0), w),
        ];
        let plan = plan_connections(&curves, DEFAULT_CONNECT_COEFFICIENT);
        let [bar, stem] = plan.pairs[0].actions;
        assert_eq!(stem, Action::ConstrainEndpoint { curve: 1, end: CurveEnd::Start });
        match bar {
            Action::SplitAt { curve, param } => {
                assert_eq!(curve, 0);
                let true_param = (foot + 1.0) / 2.0;
                assert!((param - true_param).abs() < 0.05);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(plan.split_count(), 1);
        assert_eq!(plan.groups, vec![vec![0, 1]]);
    }

    #[test]
    fn far_curves_give_an_empty_plan() {
        let curves = [
            curve(0, Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), 0.02),
            curve(1, Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 1.0, 0.0), 0.02),
        ];
        let plan = plan_connections(&curves, DEFAULT_CONNECT_COEFFICIENT);
        assert!(plan.pairs.is_empty() && plan.anchors.is_empty() && plan.groups.is_empty());
    }
}
