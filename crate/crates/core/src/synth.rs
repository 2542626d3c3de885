//! Deterministic synthetic 4D sketches with ground truth.
//!
//! Shape strokes trace object edges slowly and straight with a smooth
//! bell-shaped speed profile; Scribble strokes bounce quickly between random
//! way-points inside a face and slow down at every turn. Pressure and tilt
//! are drawn from the same distribution for both stroke types.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{any_orthogonal, Vec3};
use crate::sketch::{CanvasType, Oracle, Sketch, StrokeLabel, StrokeRecord, StrokeVertex};

const SAMPLE_RATE_HZ: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthObject {
    Cube,
    OpenBox,
    Wall,
    YJunction,
}

impl FromStr for SynthObject {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(SynthObject::Cube),
            "open_box" => Ok(SynthObject::OpenBox),
            "wall" => Ok(SynthObject::Wall),
            "y_junction" => Ok(SynthObject::YJunction),
            other => Err(Error::Config(format!("unknown synthetic object '{other}'"))),
        }
    }
}

impl SynthObject {
    pub fn name(self) -> &'static str {
        match self {
            SynthObject::Cube => "cube",
            SynthObject::OpenBox => "open_box",
            SynthObject::Wall => "wall",
            SynthObject::YJunction => "y_junction",
        }
    }
}

/// Generator configuration. `jitter_sigma` is expressed in units of the
/// Shape-stroke ink width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub object: SynthObject,
    pub jitter_sigma: f64,
    pub overdraw_count: usize,
    pub seed: u64,
    #[serde(default = "default_one")]
    pub scribbles_per_face: usize,
    #[serde(default = "default_size")]
    pub size: f64,
    #[serde(default = "default_shape_width")]
    pub shape_width: f64,
    #[serde(default = "default_scribble_width")]
    pub scribble_width: f64,
}

fn default_one() -> usize {
    1
}
fn default_size() -> f64 {
    1.0
}
fn default_shape_width() -> f64 {
    0.02
}
fn default_scribble_width() -> f64 {
    0.03
}

impl SynthConfig {
    pub fn new(object: SynthObject, jitter_sigma: f64, overdraw_count: usize, seed: u64) -> Self {
        SynthConfig {
            object,
            jitter_sigma,
            overdraw_count,
            seed,
            scribbles_per_face: 1,
            size: default_size(),
            shape_width: default_shape_width(),
            scribble_width: default_scribble_width(),
        }
    }

    pub fn with_scribbles_per_face(mut self, n: usize) -> Self {
        self.scribbles_per_face = n;
        self
    }

    pub fn with_size(mut self, size: f64) -> Self {
        self.size = size;
        self
    }
}

struct Geometry {
    corners: Vec<Vec3>,
    edges: Vec<[usize; 2]>,
    /// Scribbled faces as CCW corner loops seen from outside.
    faces: Vec<Vec<usize>>,
}

fn object_geometry(object: SynthObject, size: f64) -> Geometry {
    match object {
        SynthObject::Cube | SynthObject::OpenBox => {
            let corners: Vec<Vec3> = (0..8)
                .map(|i| {
                    Vec3::new(
                        (i & 1) as f64 * size,
                        ((i >> 1) & 1) as f64 * size,
                        ((i >> 2) & 1) as f64 * size,
                    )
                })
                .collect();
            let mut edges = Vec::new();
            for a in 0..8usize {
                for bit in [1usize, 2, 4] {
                    if a & bit == 0 {
                        edges.push([a, a | bit]);
                    }
                }
            }
            let mut faces = vec![
                vec![0, 2, 3, 1], // z = 0
                vec![0, 1, 5, 4], // y = 0
                vec![0, 4, 6, 2], // x = 0
                vec![1, 3, 7, 5], // x = 1
                vec![2, 6, 7, 3], // y = 1
            ];
            if object == SynthObject::Cube {
                faces.push(vec![4, 5, 7, 6]); // z = 1
            }
            Geometry {
                corners,
                edges,
                faces,
            }
        }
        SynthObject::Wall => Geometry {
            corners: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(2.0 * size, 0.0, 0.0),
                Vec3::new(2.0 * size, 0.0, size),
                Vec3::new(0.0, 0.0, size),
            ],
            edges: vec![[0, 1], [1, 2], [2, 3], [3, 0]],
            faces: vec![vec![0, 1, 2, 3]],
        },
        SynthObject::YJunction => {
            let mut corners = vec![Vec3::zeros()];
            for k in 0..3 {
                let a = PI / 2.0 + 2.0 * PI * k as f64 / 3.0;
                corners.push(Vec3::new(a.cos(), a.sin(), 0.0) * size);
            }
            Geometry {
                corners,
                edges: vec![[0, 1], [0, 2], [0, 3]],
                faces: Vec::new(),
            }
        }
    }
}

fn gauss(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let z: f64 = rng.sample(StandardNormal);
    z * sigma
}

fn gauss_vec_perp(rng: &mut ChaCha8Rng, dir: &Vec3, sigma: f64) -> Vec3 {
    let v = Vec3::new(gauss(rng, sigma), gauss(rng, sigma), gauss(rng, sigma));
    v - dir * v.dot(dir)
}

/// Row-major transform whose local z axis is `normal`, placed at `center`.
fn plane_transform(center: &Vec3, normal: &Vec3, scale: f64) -> [f64; 16] {
    let u = any_orthogonal(normal);
    let v = normal.cross(&u);
    let (u, v, n) = (u * scale, v * scale, normal * scale);
    [
        u.x, v.x, n.x, center.x, //
        u.y, v.y, n.y, center.y, //
        u.z, v.z, n.z, center.z, //
        0.0, 0.0, 0.0, 1.0,
    ]
}

struct StrokeStyle {
    color: [f64; 3],
    width: f64,
    pressure: f64,
    tilt: [f64; 2],
    twist: f64,
}

fn random_style(rng: &mut ChaCha8Rng, color: [f64; 3], width: f64) -> StrokeStyle {
    let tilt_mag: f64 = rng.random_range(0.0..0.6);
    let tilt_dir: f64 = rng.random_range(0.0..2.0 * PI);
    StrokeStyle {
        color: color.map(|c| (c + rng.random_range(-0.03..0.03)).clamp(0.0, 1.0)),
        width,
        pressure: rng.random_range(0.3..0.9),
        tilt: [tilt_mag * tilt_dir.cos(), tilt_mag * tilt_dir.sin()],
        twist: rng.random_range(-0.3..0.3),
    }
}

struct Builder {
    rng: ChaCha8Rng,
    clock: f64,
    strokes: Vec<StrokeRecord>,
    stroke_cluster: Vec<Option<usize>>,
    stroke_face: Vec<Option<usize>>,
}

impl Builder {
    fn push(
        &mut self,
        positions: Vec<Vec3>,
        times: Vec<f64>,
        style: &StrokeStyle,
        canvas: (String, [f64; 16], Vec3),
        label: StrokeLabel,
        cluster: Option<usize>,
        face: Option<usize>,
    ) {
        let start = self.clock;
        let (canvas_id, transform, normal) = canvas;
        let vertices = positions
            .into_iter()
            .zip(times)
            .map(|(p, t)| StrokeVertex {
                p,
                t: start + t,
                pressure: (style.pressure + gauss(&mut self.rng, 0.01)).clamp(0.0, 1.0),
                tilt: style.tilt,
                twist: style.twist,
                normal,
            })
            .collect::<Vec<_>>();
        self.clock = vertices.last().map(|v| v.t).unwrap_or(start) + self.rng.random_range(0.4..1.2);
        let cam = Vec3::new(transform[3], transform[7], transform[11]) + normal * 3.0;
        self.strokes.push(StrokeRecord {
            ink_color: style.color,
            ink_width: style.width,
            camera_position: cam,
            camera_rotation: [0.0, 0.0, 0.0, 1.0],
            canvas_id,
            canvas_type: CanvasType::Plane,
            canvas_transform: transform,
            vertices,
            label: Some(label),
        });
        self.stroke_cluster.push(cluster);
        self.stroke_face.push(face);
    }
}

/// Minimum-jerk traversal of a polyline; returns sampled points and times.
fn traverse_min_jerk(path: &[Vec3], avg_speed: f64) -> (Vec<Vec3>, Vec<f64>) {
    let cum = crate::geom::cumulative_lengths(path);
    let total = *cum.last().unwrap();
    let duration = (total / avg_speed).max(2.0 / SAMPLE_RATE_HZ);
    let n = (duration * SAMPLE_RATE_HZ).ceil() as usize + 1;
    let mut pts = Vec::with_capacity(n);
    let mut times = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let tau = (k as f64 / (n - 1) as f64).min(1.0);
        let s = total * (10.0 * tau.powi(3) - 15.0 * tau.powi(4) + 6.0 * tau.powi(5));
        while seg + 2 < path.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let f = if span > 0.0 { ((s - cum[seg]) / span).clamp(0.0, 1.0) } else { 0.0 };
        pts.push(path[seg] + (path[seg + 1] - path[seg]) * f);
        times.push(tau * duration);
    }
    (pts, times)
}

/// Way-point traversal that slows to a fraction of the peak speed at each
/// turn. Returns points and times.
fn traverse_with_turns(waypoints: &[Vec3], peak_speed: f64, turn_fraction: f64) -> (Vec<Vec3>, Vec<f64>) {
    let dt = 1.0 / SAMPLE_RATE_HZ;
    let mut pts = vec![waypoints[0]];
    let mut times = vec![0.0];
    let mut t = 0.0;
    for w in waypoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b - a).norm();
        if len <= 0.0 {
            continue;
        }
        let mut s = 0.0;
        loop {
            let f = s / len;
            let v = peak_speed * (turn_fraction + (1.0 - turn_fraction) * (PI * f).sin());
            s += v * dt;
            t += dt;
            if s >= len {
                let overshoot = (s - len) / v;
                pts.push(b);
                times.push(t - overshoot);
                t -= overshoot;
                break;
            }
            pts.push(a + (b - a) * (s / len));
            times.push(t);
        }
    }
    (pts, times)
}

/// Smooth lateral wobble built from two low-frequency sinusoids.
fn wobble(rng: &mut ChaCha8Rng, dir: &Vec3, amplitude: f64) -> impl Fn(f64) -> Vec3 {
    let e1 = any_orthogonal(dir);
    let e2 = dir.cross(&e1);
    let params: Vec<(f64, f64, f64, Vec3)> = (0..2)
        .map(|k| {
            let freq = rng.random_range(0.5..2.0) * (k + 1) as f64;
            let phase = rng.random_range(0.0..2.0 * PI);
            let angle: f64 = rng.random_range(0.0..2.0 * PI);
            let amp = amplitude * rng.random_range(0.5..1.0);
            (freq, phase, amp, e1 * angle.cos() + e2 * angle.sin())
        })
        .collect();
    move |f: f64| {
        params
            .iter()
            .map(|(freq, phase, amp, axis)| axis * (amp * (2.0 * PI * freq * f + phase).sin()))
            .fold(Vec3::zeros(), |a, b| a + b)
    }
}

/// Generate a synthetic sketch. Pure function of the config.
pub fn synth_sketch(config: &SynthConfig) -> Result<Sketch> {
    if !(config.jitter_sigma >= 0.0) {
        return Err(Error::Config("jitter_sigma must be non-negative".into()));
    }
    if config.overdraw_count < 1 {
        return Err(Error::Config("overdraw_count must be at least 1".into()));
    }
    if !(config.size > 0.0) {
        return Err(Error::Config("size must be positive".into()));
    }
    let geo = object_geometry(config.object, config.size);
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        clock: 0.0,
        strokes: Vec::new(),
        stroke_cluster: Vec::new(),
        stroke_face: Vec::new(),
    };
    let w = config.shape_width;
    let sigma = config.jitter_sigma * w;
    let inset = 0.5 * w / 2f64.sqrt();
    let shape_color = [0.1, 0.1, 0.12];
    let face_palette = [
        [0.85, 0.45, 0.35],
        [0.35, 0.6, 0.85],
        [0.5, 0.8, 0.4],
        [0.9, 0.75, 0.3],
        [0.7, 0.45, 0.8],
        [0.4, 0.8, 0.8],
    ];
    let centroid = geo.corners.iter().fold(Vec3::zeros(), |a, c| a + c) / geo.corners.len() as f64;

    // Shape strokes: each path is a list of corner indices.
    let mut shape_jobs: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut oracle_edges: Vec<[Vec3; 2]> = Vec::new();
    if config.object == SynthObject::YJunction {
        for _ in 0..config.overdraw_count {
            shape_jobs.push((vec![1, 0, 2], 0));
            shape_jobs.push((vec![1, 0, 3], 0));
        }
        for e in &geo.edges {
            oracle_edges.push([geo.corners[e[0]], geo.corners[e[1]]]);
        }
    } else {
        for (ei, e) in geo.edges.iter().enumerate() {
            for _ in 0..config.overdraw_count {
                shape_jobs.push((vec![e[0], e[1]], ei));
            }
            oracle_edges.push([geo.corners[e[0]], geo.corners[e[1]]]);
        }
    }
    shuffle(&mut b.rng, &mut shape_jobs);

    for (path_idx, cluster) in shape_jobs {
        let mut path: Vec<Vec3> = path_idx.iter().map(|&i| geo.corners[i]).collect();
        if b.rng.random_bool(0.5) {
            path.reverse();
        }
        let n = path.len();
        let d_start = (path[1] - path[0]).normalize();
        let d_end = (path[n - 1] - path[n - 2]).normalize();
        let stroke_dir = (path[n - 1] - path[0]).normalize();
        // corner inset, jittered over/undershoot and lateral offset
        if config.object != SynthObject::YJunction {
            path[0] += d_start * (inset + gauss(&mut b.rng, sigma));
            path[n - 1] -= d_end * (inset + gauss(&mut b.rng, sigma));
        } else {
            path[0] += d_start * gauss(&mut b.rng, sigma);
            path[n - 1] -= d_end * gauss(&mut b.rng, sigma);
        }
        let off_a = gauss_vec_perp(&mut b.rng, &d_start, sigma);
        let off_b = gauss_vec_perp(&mut b.rng, &d_end, sigma);
        let cum = crate::geom::cumulative_lengths(&path);
        let total = *cum.last().unwrap();
        for (i, p) in path.iter_mut().enumerate() {
            let f = cum[i] / total;
            *p += off_a * (1.0 - f) + off_b * f;
        }
        let speed = b.rng.random_range(0.22..0.38) * config.size.sqrt();
        let (mut pts, times) = traverse_min_jerk(&path, speed);
        let wob = wobble(&mut b.rng, &stroke_dir, 0.3 * sigma);
        let m = pts.len();
        for (k, p) in pts.iter_mut().enumerate() {
            *p += wob(k as f64 / (m - 1) as f64);
        }
        let style = random_style(&mut b.rng, shape_color, w);
        let mid = (path[0] + path[n - 1]) * 0.5;
        let normal = any_orthogonal(&stroke_dir);
        let normal = if (mid - centroid).dot(&normal) < 0.0 { -normal } else { normal };
        let canvas = (format!("edge-{cluster}"), plane_transform(&mid, &normal, config.size), normal);
        b.push(pts, times, &style, canvas, StrokeLabel::Shape, Some(cluster), None);
    }

    // Scribble strokes, drawn after the outline.
    let mut scribble_jobs: Vec<usize> = (0..geo.faces.len())
        .flat_map(|f| std::iter::repeat_n(f, config.scribbles_per_face))
        .collect();
    shuffle(&mut b.rng, &mut scribble_jobs);
    for face in scribble_jobs {
        let loop_pts: Vec<Vec3> = geo.faces[face].iter().map(|&i| geo.corners[i]).collect();
        let origin = loop_pts[0];
        let eu = loop_pts[1] - loop_pts[0];
        let ev = loop_pts[3] - loop_pts[0];
        let normal = eu.cross(&ev).normalize();
        let center = loop_pts.iter().fold(Vec3::zeros(), |a, c| a + c) / 4.0;
        let margin = 0.1;
        let n_way = b.rng.random_range(14..22);
        let mut waypoints: Vec<Vec3> = (0..n_way)
            .map(|_| {
                let s = b.rng.random_range(margin..1.0 - margin);
                let t = b.rng.random_range(margin..1.0 - margin);
                origin + eu * s + ev * t
            })
            .collect();
        // Visit every corner region so the scribble spans its face.
        let mut slots: Vec<usize> = (0..n_way).collect();
        shuffle(&mut b.rng, &mut slots);
        for (k, &slot) in slots.iter().take(4).enumerate() {
            let mut near = |corner: bool| {
                let d = b.rng.random_range(margin..1.5 * margin);
                if corner { 1.0 - d } else { d }
            };
            let (s, t) = (near(k & 1 == 1), near(k & 2 == 2));
            waypoints[slot] = origin + eu * s + ev * t;
        }
        let peak = b.rng.random_range(1.2..2.0) * config.size.sqrt();
        let (pts, times) = traverse_with_turns(&waypoints, peak, 0.1);
        let style = random_style(&mut b.rng, face_palette[face % face_palette.len()], config.scribble_width);
        let canvas = (format!("face-{face}"), plane_transform(&center, &normal, config.size), normal);
        b.push(pts, times, &style, canvas, StrokeLabel::Scribble, None, Some(face));
    }

    let oracle = Oracle {
        object: config.object.name().to_string(),
        stroke_cluster: b.stroke_cluster,
        stroke_face: b.stroke_face,
        edges: oracle_edges,
        corners: geo.corners.clone(),
        faces: geo.faces,
        bifurcations: if config.object == SynthObject::YJunction {
            vec![geo.corners[0]]
        } else {
            Vec::new()
        },
    };
    let sketch = Sketch {
        name: format!("{}-seed{}", config.object.name(), config.seed),
        strokes: b.strokes,
        oracle: Some(oracle),
    };
    sketch.validate()?;
    Ok(sketch)
}

fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// A labeled corpus of sketches with roughly balanced Shape/Scribble counts
/// and at least `min_strokes` strokes in total.
pub fn synth_corpus(min_strokes: usize, seed: u64) -> Result<Vec<Sketch>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    let objects = [SynthObject::Cube, SynthObject::OpenBox, SynthObject::Wall];
    let mut out = Vec::new();
    let mut total = 0;
    let mut k = 0usize;
    while total < min_strokes {
        let object = objects[k % objects.len()];
        let overdraw = rng.random_range(1..=3);
        let (edges, faces) = match object {
            SynthObject::Cube => (12, 6),
            SynthObject::OpenBox => (12, 5),
            _ => (4, 1),
        };
        let spf = ((edges * overdraw) as f64 / faces as f64).round().max(1.0) as usize;
        let mut cfg = SynthConfig::new(object, rng.random_range(0.0..0.3), overdraw, rng.random());
        cfg.scribbles_per_face = spf;
        cfg.size = rng.random_range(0.6..2.5);
        cfg.shape_width = rng.random_range(0.015..0.03);
        cfg.scribble_width = rng.random_range(0.02..0.05);
        let sketch = synth_sketch(&cfg)?;
        total += sketch.strokes.len();
        out.push(sketch);
        k += 1;
    }
    Ok(out)
}
