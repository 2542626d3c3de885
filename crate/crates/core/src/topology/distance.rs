//! Closest points between two cubic curves.

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::spline::{golden_section, CubicBezier};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePairDistance {
    pub distance: f64,
    pub point_a: Vec3,
    pub point_b: Vec3,
    pub param_a: f64,
    pub param_b: f64,
}

/// Samples used per curve: one per half width, at least 16.
pub fn sample_count(curve: &CubicBezier, width: f64) -> usize {
    let n = if width > 0.0 {
        (curve.length() / (0.5 * width)).ceil()
    } else {
        0.0
    };
    (n as usize).max(16)
}

/// Brute-force closest sample pair, then one golden-section pass on each
/// parameter within a sample spacing of the winner.
pub fn curve_pair_distance(a: &CubicBezier, width_a: f64, b: &CubicBezier, width_b: f64) -> CurvePairDistance {
    let na = sample_count(a, width_a);
    let nb = sample_count(b, width_b);
    let pa = a.sample(na);
    let pb = b.sample(nb);
    let mut best = (f64::INFINITY, 0, 0);
    for (i, p) in pa.iter().enumerate() {
        for (j, q) in pb.iter().enumerate() {
            let d = (p - q).norm_squared();
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    let ha = 1.0 / (na - 1) as f64;
    let hb = 1.0 / (nb - 1) as f64;
    let mut ua = best.1 as f64 * ha;
    let mut ub = best.2 as f64 * hb;
    let ua_ref = golden_section(|u| (a.eval(u) - b.eval(ub)).norm_squared(), (ua - ha).max(0.0), (ua + ha).min(1.0), 50);
    if (a.eval(ua_ref) - b.eval(ub)).norm_squared() <= best.0 {
        ua = ua_ref;
    }
    let ub_ref = golden_section(|u| (a.eval(ua) - b.eval(u)).norm_squared(), (ub - hb).max(0.0), (ub + hb).min(1.0), 50);
    if (a.eval(ua) - b.eval(ub_ref)).norm_squared() <= (a.eval(ua) - b.eval(ub)).norm_squared() {
        ub = ub_ref;
    }
    let point_a = a.eval(ua);
    let point_b = b.eval(ub);
    CurvePairDistance {
        distance: (point_a - point_b).norm(),
        point_a,
        point_b,
        param_a: ua,
        param_b: ub,
    }
}
