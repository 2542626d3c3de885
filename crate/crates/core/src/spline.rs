//! Clamped cubic B-splines and least-squares fitting.
//!
//! Knot vectors are clamped and uniform on `[0, 1]`. A spline with exactly
//! four control points is a single cubic Bezier segment, which is the form
//! every consolidated curve takes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{cumulative_lengths, Vec3};

const DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CubicBSpline {
    control_points: Vec<Vec3>,
    knots: Vec<f64>,
}

fn clamped_uniform_knots(n_ctrl: usize) -> Vec<f64> {
    let spans = n_ctrl - DEGREE;
    let mut knots = vec![0.0; DEGREE + 1];
    for i in 1..spans {
        knots.push(i as f64 / spans as f64);
    }
    knots.extend(std::iter::repeat_n(1.0, DEGREE + 1));
    knots
}

impl CubicBSpline {
    pub fn new(control_points: Vec<Vec3>) -> Result<Self> {
        if control_points.len() < DEGREE + 1 {
            return Err(Error::degenerate("cubic B-spline needs 4 control points"));
        }
        let knots = clamped_uniform_knots(control_points.len());
        Ok(CubicBSpline {
            control_points,
            knots,
        })
    }

    pub fn control_points(&self) -> &[Vec3] {
        &self.control_points
    }

    fn span(&self, u: f64) -> usize {
        let n = self.control_points.len();
        if u >= 1.0 {
            return n - 1;
        }
        let u = u.max(0.0);
        // last knot index i with knots[i] <= u, restricted to [DEGREE, n-1]
        let mut lo = DEGREE;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid] <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    pub fn eval(&self, u: f64) -> Vec3 {
        let u = u.clamp(0.0, 1.0);
        let span = self.span(u);
        let basis = basis_functions(&self.knots, span, u);
        (0..=DEGREE).fold(Vec3::zeros(), |acc, j| {
            acc + self.control_points[span - DEGREE + j] * basis[j]
        })
    }

    pub fn derivative(&self, u: f64) -> Vec3 {
        let u = u.clamp(0.0, 1.0);
        let n = self.control_points.len();
        // derivative is a degree-2 spline on the inner knot vector
        let dknots = &self.knots[1..self.knots.len() - 1];
        let dctrl: Vec<Vec3> = (0..n - 1)
            .map(|i| {
                let denom = self.knots[i + DEGREE + 1] - self.knots[i + 1];
                if denom > 0.0 {
                    (self.control_points[i + 1] - self.control_points[i]) * (DEGREE as f64 / denom)
                } else {
                    Vec3::zeros()
                }
            })
            .collect();
        let deg = DEGREE - 1;
        let mut span = deg;
        while span + 1 < dctrl.len() && dknots[span + 1] <= u {
            span += 1;
        }
        let basis = basis_functions_deg(dknots, span, u, deg);
        (0..=deg).fold(Vec3::zeros(), |acc, j| acc + dctrl[span - deg + j] * basis[j])
    }

    pub fn tangent(&self, u: f64) -> Vec3 {
        let d = self.derivative(u);
        let n = d.norm();
        if n > 0.0 {
            d / n
        } else {
            Vec3::zeros()
        }
    }

    /// Dense polyline approximation with `n` uniform parameter samples.
    pub fn sample_uniform(&self, n: usize) -> Vec<Vec3> {
        let n = n.max(2);
        (0..n)
            .map(|i| self.eval(i as f64 / (n - 1) as f64))
            .collect()
    }

    /// Resamples the curve at (approximately) constant arc-length spacing.
    /// Returns `(parameters, points)`; never fewer than `min_samples`.
    pub fn resample_by_arc_length(&self, spacing: f64, min_samples: usize) -> (Vec<f64>, Vec<Vec3>) {
        let dense_n = (self.control_points.len() * 64).max(256);
        let params: Vec<f64> = (0..dense_n).map(|i| i as f64 / (dense_n - 1) as f64).collect();
        let dense: Vec<Vec3> = params.iter().map(|&u| self.eval(u)).collect();
        let cum = cumulative_lengths(&dense);
        let total = *cum.last().unwrap();
        let count = if spacing > 0.0 {
            ((total / spacing).ceil() as usize + 1).max(min_samples)
        } else {
            min_samples
        }
        .max(2);
        let mut out_u = Vec::with_capacity(count);
        let mut seg = 0;
        for i in 0..count {
            let target = total * i as f64 / (count - 1) as f64;
            while seg + 2 < dense_n && cum[seg + 1] < target {
                seg += 1;
            }
            let span = cum[seg + 1] - cum[seg];
            let f = if span > 0.0 {
                ((target - cum[seg]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
            out_u.push(params[seg] + f * (params[seg + 1] - params[seg]));
        }
        let pts = out_u.iter().map(|&u| self.eval(u)).collect();
        (out_u, pts)
    }
}

fn basis_functions(knots: &[f64], span: usize, u: f64) -> [f64; DEGREE + 1] {
    let v = basis_functions_deg(knots, span, u, DEGREE);
    [v[0], v[1], v[2], v[3]]
}

/// Cox-de Boor basis values `N_{span-deg..=span, deg}(u)`.
fn basis_functions_deg(knots: &[f64], span: usize, u: f64, deg: usize) -> Vec<f64> {
    let mut n = vec![0.0; deg + 1];
    let mut left = vec![0.0; deg + 1];
    let mut right = vec![0.0; deg + 1];
    n[0] = 1.0;
    for j in 1..=deg {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom != 0.0 { n[r] / denom } else { 0.0 };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

/// Normalized chord-length parameters in `[0, 1]`.
pub fn chord_length_params(points: &[Vec3]) -> Vec<f64> {
    let cum = cumulative_lengths(points);
    let total = *cum.last().unwrap_or(&0.0);
    if total <= 0.0 {
        let n = points.len().max(2) - 1;
        return (0..points.len()).map(|i| i as f64 / n as f64).collect();
    }
    cum.into_iter().map(|c| c / total).collect()
}

fn basis_matrix(knots: &[f64], n_ctrl: usize, params: &[f64]) -> DMatrix<f64> {
    let spline_probe = CubicBSpline {
        control_points: vec![Vec3::zeros(); n_ctrl],
        knots: knots.to_vec(),
    };
    let mut a = DMatrix::zeros(params.len(), n_ctrl);
    for (row, &u) in params.iter().enumerate() {
        let u = u.clamp(0.0, 1.0);
        let span = spline_probe.span(u);
        let b = basis_functions(knots, span, u);
        for j in 0..=DEGREE {
            a[(row, span - DEGREE + j)] = b[j];
        }
    }
    a
}

fn solve_columns(a: &DMatrix<f64>, rhs: &[DVector<f64>; 3]) -> Result<[DVector<f64>; 3]> {
    let svd = a.clone().svd(true, true);
    let solve = |b: &DVector<f64>| {
        svd.solve(b, 1e-12)
            .map_err(|e| Error::degenerate(format!("least-squares solve failed: {e}")))
    };
    Ok([solve(&rhs[0])?, solve(&rhs[1])?, solve(&rhs[2])?])
}

/// Least-squares clamped cubic B-spline through `points` at `params`.
pub fn fit_least_squares(points: &[Vec3], params: &[f64], n_ctrl: usize) -> Result<CubicBSpline> {
    if n_ctrl < DEGREE + 1 {
        return Err(Error::degenerate("need at least 4 control points"));
    }
    if points.len() < 2 || points.len() != params.len() {
        return Err(Error::degenerate("need at least 2 parameterized points"));
    }
    let knots = clamped_uniform_knots(n_ctrl);
    let a = basis_matrix(&knots, n_ctrl, params);
    let rhs = [0, 1, 2].map(|k| DVector::from_iterator(points.len(), points.iter().map(|p| p[k])));
    let sol = solve_columns(&a, &rhs)?;
    let ctrl = (0..n_ctrl)
        .map(|i| Vec3::new(sol[0][i], sol[1][i], sol[2][i]))
        .collect();
    Ok(CubicBSpline {
        control_points: ctrl,
        knots,
    })
}

/// Single-segment cubic (four control points).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicBezier {
    pub control_points: [Vec3; 4],
}

impl CubicBezier {
    pub fn new(control_points: [Vec3; 4]) -> Self {
        CubicBezier { control_points }
    }

    /// Straight segment from `a` to `b` encoded with four control points.
    pub fn line(a: Vec3, b: Vec3) -> Self {
        let d = b - a;
        CubicBezier::new([a, a + d / 3.0, a + d * (2.0 / 3.0), b])
    }

    pub fn eval(&self, u: f64) -> Vec3 {
        let u = u.clamp(0.0, 1.0);
        let v = 1.0 - u;
        let [p0, p1, p2, p3] = &self.control_points;
        p0 * (v * v * v) + p1 * (3.0 * v * v * u) + p2 * (3.0 * v * u * u) + p3 * (u * u * u)
    }

    pub fn derivative(&self, u: f64) -> Vec3 {
        let u = u.clamp(0.0, 1.0);
        let v = 1.0 - u;
        let [p0, p1, p2, p3] = &self.control_points;
        (p1 - p0) * (3.0 * v * v) + (p2 - p1) * (6.0 * v * u) + (p3 - p2) * (3.0 * u * u)
    }

    /// Unit tangent; falls back to the chord direction for degenerate ends.
    pub fn tangent(&self, u: f64) -> Vec3 {
        let d = self.derivative(u);
        if d.norm() > 1e-12 {
            return d.normalize();
        }
        let chord = self.end() - self.start();
        if chord.norm() > 0.0 {
            chord.normalize()
        } else {
            Vec3::zeros()
        }
    }

    pub fn start(&self) -> Vec3 {
        self.control_points[0]
    }

    pub fn end(&self) -> Vec3 {
        self.control_points[3]
    }

    pub fn sample(&self, n: usize) -> Vec<Vec3> {
        let n = n.max(2);
        (0..n).map(|i| self.eval(i as f64 / (n - 1) as f64)).collect()
    }

    pub fn length(&self) -> f64 {
        self.sample(129).windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Arc length between parameters `a <= b`.
    pub fn length_between(&self, a: f64, b: f64) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let n = 64;
        (0..n)
            .map(|i| {
                let u0 = a + (b - a) * i as f64 / n as f64;
                let u1 = a + (b - a) * (i + 1) as f64 / n as f64;
                (self.eval(u1) - self.eval(u0)).norm()
            })
            .sum()
    }

    /// de Casteljau subdivision at `u`.
    pub fn split(&self, u: f64) -> (CubicBezier, CubicBezier) {
        let [p0, p1, p2, p3] = self.control_points;
        let lerp = |a: Vec3, b: Vec3| a + (b - a) * u;
        let p01 = lerp(p0, p1);
        let p12 = lerp(p1, p2);
        let p23 = lerp(p2, p3);
        let p012 = lerp(p01, p12);
        let p123 = lerp(p12, p23);
        let mid = lerp(p012, p123);
        (
            CubicBezier::new([p0, p01, p012, mid]),
            CubicBezier::new([mid, p123, p23, p3]),
        )
    }

    pub fn reversed(&self) -> Self {
        let [a, b, c, d] = self.control_points;
        CubicBezier::new([d, c, b, a])
    }

    /// Parameter of the closest curve point to `p` (dense search + golden refine).
    pub fn closest_param(&self, p: &Vec3) -> f64 {
        let n = 64;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=n {
            let u = i as f64 / n as f64;
            let d = (self.eval(u) - p).norm_squared();
            if d < best.0 {
                best = (d, u);
            }
        }
        let h = 1.0 / n as f64;
        golden_section(|u| (self.eval(u) - p).norm_squared(), (best.1 - h).max(0.0), (best.1 + h).min(1.0), 60)
    }

    pub fn distance_to(&self, p: &Vec3) -> f64 {
        (self.eval(self.closest_param(p)) - p).norm()
    }

    pub fn transformed(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        CubicBezier::new(self.control_points.map(|p| f(&p)))
    }
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // keep the endpoints in play when the minimum sits on the boundary
    [a, mid, b]
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap()
}

/// Least-squares cubic with four control points.
pub fn fit_bezier(points: &[Vec3], params: &[f64]) -> Result<CubicBezier> {
    let s = fit_least_squares(points, params, 4)?;
    let c = s.control_points();
    Ok(CubicBezier::new([c[0], c[1], c[2], c[3]]))
}

/// Four-control-point cubic through fixed end points; the two interior
/// control points are fitted by least squares against `points` at `params`.
pub fn fit_bezier_fixed_ends(
    start: Vec3,
    end: Vec3,
    points: &[Vec3],
    params: &[f64],
) -> CubicBezier {
    let residual = |c: &CubicBezier, params: &[f64]| -> f64 {
        points.iter().zip(params).map(|(p, &u)| (c.eval(u) - p).norm_squared()).sum()
    };
    let mut curve = fit_fixed_ends_once(start, end, points, params);
    let mut err = residual(&curve, params);
    for _ in 0..50 {
        let refined: Vec<f64> = points.iter().map(|p| curve.closest_param(p)).collect();
        let next = fit_fixed_ends_once(start, end, points, &refined);
        let next_err = residual(&next, &refined);
        if next_err >= err * (1.0 - 1e-6) {
            if next_err < err {
                curve = next;
            }
            break;
        }
        curve = next;
        err = next_err;
    }
    curve
}

fn fit_fixed_ends_once(start: Vec3, end: Vec3, points: &[Vec3], params: &[f64]) -> CubicBezier {
    let mut ata = nalgebra::Matrix2::<f64>::zeros();
    let mut atb = [nalgebra::Vector2::<f64>::zeros(); 3];
    for (p, &u) in points.iter().zip(params) {
        let v = 1.0 - u;
        let b0 = v * v * v;
        let b1 = 3.0 * v * v * u;
        let b2 = 3.0 * v * u * u;
        let b3 = u * u * u;
        let r = p - start * b0 - end * b3;
        ata[(0, 0)] += b1 * b1;
        ata[(0, 1)] += b1 * b2;
        ata[(1, 1)] += b2 * b2;
        for k in 0..3 {
            atb[k][0] += b1 * r[k];
            atb[k][1] += b2 * r[k];
        }
    }
    ata[(1, 0)] = ata[(0, 1)];
    match ata.try_inverse().filter(|_| ata.determinant().abs() > 1e-14) {
        Some(inv) => {
            let sol = atb.map(|b| inv * b);
            let c1 = Vec3::new(sol[0][0], sol[1][0], sol[2][0]);
            let c2 = Vec3::new(sol[0][1], sol[1][1], sol[2][1]);
            CubicBezier::new([start, c1, c2, end])
        }
        None => CubicBezier::line(start, end),
    }
}
