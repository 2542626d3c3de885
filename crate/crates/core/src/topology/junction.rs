//! Junction placement: the point minimizing the summed distance to the lines
//! through curve ends along their end tangents.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionSolution {
    pub point: Vec3,
    /// Unsmoothed objective at `point`.
    pub objective: f64,
    pub iterations: usize,
}

/// Sum of distances from `p` to the lines `(ends[i], tangents[i])`.
pub fn junction_objective(p: &Vec3, ends: &[Vec3], tangents: &[Vec3]) -> f64 {
    ends.iter().zip(tangents).map(|(e, t)| (p - e).cross(t).norm()).sum()
}

/// Length scale of a junction problem: diagonal of the end points' box,
/// floored so coincident ends still get a usable tolerance.
pub fn junction_scale(ends: &[Vec3]) -> f64 {
    Aabb::from_points(ends).map(|b| b.diagonal()).unwrap_or(0.0).max(1e-3)
}

fn smoothed(p: &Vec3, ends: &[Vec3], tangents: &[Vec3], delta: f64) -> (f64, Vec3) {
    let mut f = 0.0;
    let mut g = Vec3::zeros();
    for (e, t) in ends.iter().zip(tangents) {
        let d = p - e;
        let perp = d - t * t.dot(&d);
        let r = (perp.norm_squared() + delta * delta).sqrt();
        f += r - delta;
        g += perp / r;
    }
    (f, g)
}

fn is_singular(ends: &[Vec3], tangents: &[Vec3], scale: f64) -> bool {
    let t0 = tangents[0];
    let parallel = tangents.iter().all(|t| t.cross(&t0).norm() < 1e-9);
    parallel && ends.iter().all(|e| (e - ends[0]).cross(&t0).norm() < 1e-9 * scale)
}

/// Two lines minimize their distance sum on a whole segment (or strip, when
/// parallel); pick its midpoint so the answer moves rigidly with the input.
fn two_line_minimizer(ends: &[Vec3], tangents: &[Vec3]) -> Vec3 {
    let (a, b) = (ends[0], ends[1]);
    let (u, v) = (tangents[0].normalize(), tangents[1].normalize());
    let w = a - b;
    let c = u.dot(&v);
    let denom = 1.0 - c * c;
    if denom < 1e-12 {
        return (a + b) * 0.5;
    }
    let s = (c * v.dot(&w) - u.dot(&w)) / denom;
    let t = (v.dot(&w) - c * u.dot(&w)) / denom;
    (a + u * s + b + v * t) * 0.5
}

/// BFGS on the smoothed objective `sum(sqrt(|c_i|^2 + delta^2) - delta)`,
/// `delta = 1e-8 * scale`, starting at the centroid of `ends`; two ends are
/// solved in closed form. Fails with `SingularConfiguration` when all lines
/// coincide.
pub fn solve_junction(ends: &[Vec3], tangents: &[Vec3]) -> Result<JunctionSolution> {
    if ends.len() < 2 || ends.len() != tangents.len() {
        return Err(Error::degenerate("a junction needs at least two curve ends"));
    }
    let scale = junction_scale(ends);
    let centroid = ends.iter().sum::<Vec3>() / ends.len() as f64;
    if is_singular(ends, tangents, scale) {
        return Err(Error::SingularConfiguration(format!(
            "{} collinear curve ends share one line near {centroid:?}",
            ends.len()
        )));
    }
    if ends.len() == 2 {
        let point = two_line_minimizer(ends, tangents);
        return Ok(JunctionSolution {
            point,
            objective: junction_objective(&point, ends, tangents),
            iterations: 0,
        });
    }
    let delta = 1e-8 * scale;
    let tol = 1e-8 * scale;
    let eval = |p: &Vec3| smoothed(p, ends, tangents, delta);
    let mut x = centroid;
    let (mut f, mut g) = eval(&x);
    let mut h_inv = Matrix3::identity() * scale;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && g.norm() >= tol {
        iterations += 1;
        let mut dir = -(h_inv * g);
        if dir.dot(&g) >= 0.0 {
            h_inv = Matrix3::identity() * scale;
            dir = -(h_inv * g);
        }
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = x + dir * step;
            let (fn_, gn) = eval(&xn);
            if fn_ <= f + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else { break };
        let s = xn - x;
        let y = gn - g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let i = Matrix3::identity();
            h_inv = (i - s * y.transpose() * rho) * h_inv * (i - y * s.transpose() * rho) + s * s.transpose() * rho;
        }
        let done = (f - fn_).abs() <= f64::EPSILON * f.abs() && s.norm() <= f64::EPSILON * scale;
        x = xn;
        f = fn_;
        g = gn;
        if done {
            break;
        }
    }
    Ok(JunctionSolution {
        point: x,
        objective: junction_objective(&x, ends, tangents),
        iterations,
    })
}
