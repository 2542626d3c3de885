//! Per-stroke features for stroke-type classification.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{arc_length, rdp_indices, Vec3};
use crate::kdtree::SpatialIndex;
use crate::sketch::{CanvasType, Sketch, StrokeLabel, StrokeRecord};

pub const N_FEATURES: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    AvgPressure,
    AvgSpeed,
    AvgTilt,
    ColorShift,
    Density,
    Dist,
    Duration,
    Length,
    Order,
    PrimSegCount,
    Straightness,
}

impl Feature {
    pub const ALL: [Feature; N_FEATURES] = [
        Feature::AvgPressure,
        Feature::AvgSpeed,
        Feature::AvgTilt,
        Feature::ColorShift,
        Feature::Density,
        Feature::Dist,
        Feature::Duration,
        Feature::Length,
        Feature::Order,
        Feature::PrimSegCount,
        Feature::Straightness,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name used in CSV and JSON output.
    pub fn column(self) -> &'static str {
        match self {
            Feature::AvgPressure => "avg_pressure",
            Feature::AvgSpeed => "avg_speed",
            Feature::AvgTilt => "avg_tilt",
            Feature::ColorShift => "color_shift",
            Feature::Density => "density",
            Feature::Dist => "dist",
            Feature::Duration => "duration",
            Feature::Length => "length",
            Feature::Order => "order",
            Feature::PrimSegCount => "prim_seg_count",
            Feature::Straightness => "straightness",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A set of feature columns stored as a bitmask over [`Feature::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureMask(pub u16);

impl FeatureMask {
    pub const EMPTY: FeatureMask = FeatureMask(0);

    pub fn of(features: &[Feature]) -> Self {
        FeatureMask(features.iter().fold(0, |m, f| m | (1 << f.index())))
    }

    pub fn all() -> Self {
        FeatureMask((1 << N_FEATURES) - 1)
    }

    /// Geometry-only features.
    pub fn geo() -> Self {
        Self::of(&[Feature::Straightness, Feature::Length, Feature::Dist])
    }

    /// Drawing-style-only features.
    pub fn sty() -> Self {
        Self::of(&[
            Feature::Order,
            Feature::Duration,
            Feature::ColorShift,
            Feature::AvgSpeed,
        ])
    }

    /// Features that depend on both geometry and drawing style.
    pub fn geo_and_sty() -> Self {
        Self::of(&[Feature::PrimSegCount, Feature::Density])
    }

    /// Every retained feature.
    pub fn geo_or_sty() -> Self {
        FeatureMask(Self::geo().0 | Self::sty().0 | Self::geo_and_sty().0)
    }

    pub fn contains(self, f: Feature) -> bool {
        self.0 & (1 << f.index()) != 0
    }

    pub fn features(self) -> Vec<Feature> {
        Feature::ALL.into_iter().filter(|f| self.contains(*f)).collect()
    }

    pub fn indices(self) -> Vec<usize> {
        self.features().into_iter().map(Feature::index).collect()
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl FromStr for FeatureMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "GEO" | "geo" => Ok(Self::geo()),
            "STY" | "sty" => Ok(Self::sty()),
            "GEO_OR_STY" | "geo_or_sty" | "GEO∨STY" => Ok(Self::geo_or_sty()),
            "GEO_AND_STY" | "geo_and_sty" | "GEO∧STY" => Ok(Self::geo_and_sty()),
            "ALL" | "all" => Ok(Self::all()),
            other => Err(Error::Config(format!("unknown feature subset '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub avg_pressure: f64,
    pub avg_speed: f64,
    pub avg_tilt: f64,
    pub color_shift: f64,
    pub density: f64,
    pub dist: f64,
    pub duration: f64,
    pub length: f64,
    pub order: f64,
    pub prim_seg_count: f64,
    pub straightness: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.avg_pressure,
            self.avg_speed,
            self.avg_tilt,
            self.color_shift,
            self.density,
            self.dist,
            self.duration,
            self.length,
            self.order,
            self.prim_seg_count,
            self.straightness,
        ]
    }

    pub fn from_array(a: [f64; N_FEATURES]) -> Self {
        FeatureVector {
            avg_pressure: a[0],
            avg_speed: a[1],
            avg_tilt: a[2],
            color_shift: a[3],
            density: a[4],
            dist: a[5],
            duration: a[6],
            length: a[7],
            order: a[8],
            prim_seg_count: a[9],
            straightness: a[10],
        }
    }

    pub fn get(&self, f: Feature) -> f64 {
        self.to_array()[f.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<FeatureVector>,
    pub labels: Vec<Option<StrokeLabel>>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, f: Feature) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(f)).collect()
    }

    pub fn concat(parts: impl IntoIterator<Item = FeatureMatrix>) -> FeatureMatrix {
        let mut out = FeatureMatrix {
            rows: Vec::new(),
            labels: Vec::new(),
        };
        for p in parts {
            out.rows.extend(p.rows);
            out.labels.extend(p.labels);
        }
        out
    }

    /// Rows whose label is Shape or Scribble, with a boolean "is Shape" target.
    pub fn labeled_rows(&self) -> (Vec<[f64; N_FEATURES]>, Vec<bool>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (r, l) in self.rows.iter().zip(&self.labels) {
            match l {
                Some(StrokeLabel::Shape) => {
                    x.push(r.to_array());
                    y.push(true);
                }
                Some(StrokeLabel::Scribble) => {
                    x.push(r.to_array());
                    y.push(false);
                }
                _ => {}
            }
        }
        (x, y)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let with_labels = self.labels.iter().any(|l| l.is_some());
        let mut header: Vec<&str> = Feature::ALL.iter().map(|f| f.column()).collect();
        if with_labels {
            header.push("label");
        }
        w.write_record(&header).map_err(csv_err)?;
        for (r, l) in self.rows.iter().zip(&self.labels) {
            let mut rec: Vec<String> = r.to_array().iter().map(|v| v.to_string()).collect();
            if with_labels {
                rec.push(l.map(|l| l.code().to_string()).unwrap_or_default());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<FeatureMatrix> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let mut cols = Vec::with_capacity(N_FEATURES);
        for f in Feature::ALL {
            let idx = headers
                .iter()
                .position(|h| h == f.column())
                .ok_or_else(|| Error::Parse(format!("missing column '{}'", f.column())))?;
            cols.push(idx);
        }
        let label_col = headers.iter().position(|h| h == "label");
        let mut out = FeatureMatrix {
            rows: Vec::new(),
            labels: Vec::new(),
        };
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let mut a = [0.0; N_FEATURES];
            for (k, &c) in cols.iter().enumerate() {
                a[k] = rec[c]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number '{}'", &rec[c])))?;
            }
            let label = match label_col.map(|c| rec[c].trim()) {
                None | Some("") => None,
                Some(s) => {
                    let code: i8 = s.parse().map_err(|_| Error::Parse(format!("bad label '{s}'")))?;
                    Some(StrokeLabel::try_from(code).map_err(Error::Parse)?)
                }
            };
            out.rows.push(FeatureVector::from_array(a));
            out.labels.push(label);
        }
        Ok(out)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Per-segment speeds, skipping segments with zero elapsed time.
pub fn segment_speeds(stroke: &StrokeRecord) -> Vec<f64> {
    stroke
        .vertices
        .windows(2)
        .filter_map(|w| {
            let dt = w[1].t - w[0].t;
            (dt > 0.0).then(|| (w[1].p - w[0].p).norm() / dt)
        })
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// 5-tap centered moving average; the window is truncated at the ends.
fn smooth5(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(n - 1);
            mean(&values[lo..=hi])
        })
        .collect()
}

/// Number of slow-down points: strict interior minima of the smoothed speed
/// profile lying below half the mean speed. A flat run of equal values
/// bounded by larger values on both sides counts as one minimum.
pub fn prim_seg_count(stroke: &StrokeRecord) -> usize {
    if stroke.vertices.len() < 3 {
        return 0;
    }
    let speeds = segment_speeds(stroke);
    if speeds.len() < 3 {
        return 0;
    }
    let threshold = 0.5 * mean(&speeds);
    let s = smooth5(&speeds);
    let mut count = 0;
    let mut i = 1;
    while i + 1 < s.len() {
        if s[i] < s[i - 1] {
            let mut j = i;
            while j + 1 < s.len() && s[j + 1] == s[i] {
                j += 1;
            }
            if j + 1 < s.len() && s[j + 1] > s[j] && s[i] < threshold {
                count += 1;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    count
}

/// Shortest path between the stroke endpoints over its canvas surface.
pub fn canvas_geodesic(stroke: &StrokeRecord) -> f64 {
    let a = stroke.vertices[0].p;
    let b = stroke.vertices[stroke.vertices.len() - 1].p;
    let c = stroke.canvas_center();
    match stroke.canvas_type {
        CanvasType::Plane | CanvasType::Cube => (b - a).norm(),
        CanvasType::Sphere => {
            let (ra, rb) = (a - c, b - c);
            let r = 0.5 * (ra.norm() + rb.norm());
            let angle = angle_between(&ra, &rb);
            if r > 0.0 {
                r * angle
            } else {
                (b - a).norm()
            }
        }
        CanvasType::Cylinder => {
            let m = &stroke.canvas_transform;
            let axis = Vec3::new(m[2], m[6], m[10]);
            if axis.norm() == 0.0 {
                return (b - a).norm();
            }
            let axis = axis.normalize();
            let (ha, hb) = ((a - c).dot(&axis), (b - c).dot(&axis));
            let (ra, rb) = (a - c - axis * ha, b - c - axis * hb);
            let r = 0.5 * (ra.norm() + rb.norm());
            let arc = r * angle_between(&ra, &rb);
            (arc * arc + (hb - ha) * (hb - ha)).sqrt()
        }
    }
}

fn angle_between(u: &Vec3, v: &Vec3) -> f64 {
    let cross = u.cross(v).norm();
    cross.atan2(u.dot(v))
}

fn stroke_features(stroke: &StrokeRecord) -> Result<FeatureVector> {
    let n = stroke.vertices.len();
    if n < 2 {
        return Err(Error::degenerate("feature extraction needs at least 2 vertices per stroke"));
    }
    let positions = stroke.positions();
    let length = arc_length(&positions)?;
    let dist = canvas_geodesic(stroke);
    let straightness = if length > 0.0 {
        (dist / length).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let kept = rdp_indices(&positions, 0.5 * stroke.ink_width).len();
    let vertices = &stroke.vertices;
    Ok(FeatureVector {
        avg_pressure: vertices.iter().map(|v| v.pressure).sum::<f64>() / n as f64,
        avg_speed: mean(&segment_speeds(stroke)),
        avg_tilt: vertices
            .iter()
            .map(|v| (v.tilt[0] * v.tilt[0] + v.tilt[1] * v.tilt[1]).sqrt())
            .sum::<f64>()
            / n as f64,
        color_shift: 0.0,
        density: kept as f64 / n as f64,
        dist,
        duration: vertices[n - 1].t - vertices[0].t,
        length,
        order: 0.0,
        prim_seg_count: prim_seg_count(stroke) as f64,
        straightness,
    })
}

/// Strokes whose closest vertex pair lies within `2.5 * (w_i + w_j) / 2`.
pub fn stroke_neighbors(sketch: &Sketch) -> Vec<Vec<usize>> {
    let mut points = Vec::new();
    let mut owner = Vec::new();
    for (i, s) in sketch.strokes.iter().enumerate() {
        for v in &s.vertices {
            points.push(v.p);
            owner.push(i);
        }
    }
    let w_max = sketch
        .strokes
        .iter()
        .map(|s| s.ink_width)
        .fold(0.0, f64::max);
    let index = SpatialIndex::new(points);
    sketch
        .strokes
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut is_neighbor = vec![false; sketch.strokes.len()];
            let r_max = 1.25 * (s.ink_width + w_max);
            for v in &s.vertices {
                for k in index.within_radius(&v.p, r_max) {
                    let j = owner[k];
                    if j == i || is_neighbor[j] {
                        continue;
                    }
                    let r = 1.25 * (s.ink_width + sketch.strokes[j].ink_width);
                    if (index.points()[k] - v.p).norm() <= r {
                        is_neighbor[j] = true;
                    }
                }
            }
            is_neighbor
                .iter()
                .enumerate()
                .filter_map(|(j, &b)| b.then_some(j))
                .collect()
        })
        .collect()
}

fn color_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn extract_features(sketch: &Sketch) -> Result<FeatureMatrix> {
    let mut rows = sketch
        .strokes
        .par_iter()
        .map(stroke_features)
        .collect::<Result<Vec<_>>>()?;
    let m = rows.len();
    let neighbors = stroke_neighbors(sketch);
    for (i, row) in rows.iter_mut().enumerate() {
        row.order = if m > 1 { i as f64 / (m - 1) as f64 } else { 0.0 };
        let nb = &neighbors[i];
        if !nb.is_empty() {
            let c = &sketch.strokes[i].ink_color;
            row.color_shift = nb
                .iter()
                .map(|&j| color_distance(c, &sketch.strokes[j].ink_color))
                .sum::<f64>()
                / nb.len() as f64;
        }
    }
    Ok(FeatureMatrix {
        rows,
        labels: sketch.labels(),
    })
}
