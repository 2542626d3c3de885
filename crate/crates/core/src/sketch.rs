//! The 4D sketch data model and its JSON file format.

use std::fs;
use std::path::Path;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeVertex {
    pub p: Vec3,
    pub t: f64,
    pub pressure: f64,
    pub tilt: [f64; 2],
    pub twist: f64,
    pub normal: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CanvasType {
    Plane,
    Cube,
    Sphere,
    Cylinder,
}

/// Ground-truth stroke type. Unlabeled strokes carry no label at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum StrokeLabel {
    Shape,
    Scribble,
    Noise,
}

impl StrokeLabel {
    pub fn code(self) -> i8 {
        match self {
            StrokeLabel::Shape => 1,
            StrokeLabel::Scribble => 0,
            StrokeLabel::Noise => -1,
        }
    }
}

impl TryFrom<i8> for StrokeLabel {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(StrokeLabel::Shape),
            0 => Ok(StrokeLabel::Scribble),
            -1 => Ok(StrokeLabel::Noise),
            other => Err(format!("unknown stroke label {other}")),
        }
    }
}

impl From<StrokeLabel> for i8 {
    fn from(l: StrokeLabel) -> i8 {
        l.code()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeRecord {
    pub ink_color: [f64; 3],
    pub ink_width: f64,
    pub camera_position: Vec3,
    /// Quaternion as `[x, y, z, w]`.
    pub camera_rotation: [f64; 4],
    pub canvas_id: String,
    pub canvas_type: CanvasType,
    /// Row-major 4x4 affine transform of the unit canvas primitive.
    pub canvas_transform: [f64; 16],
    pub vertices: Vec<StrokeVertex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<StrokeLabel>,
}

impl StrokeRecord {
    pub fn positions(&self) -> Vec<Vec3> {
        self.vertices.iter().map(|v| v.p).collect()
    }

    pub fn transform(&self) -> Matrix4<f64> {
        Matrix4::from_row_slice(&self.canvas_transform)
    }

    /// World position of the canvas primitive's origin.
    pub fn canvas_center(&self) -> Vec3 {
        let m = &self.canvas_transform;
        Vec3::new(m[3], m[7], m[11])
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().map(|v| &v.p)).expect("validated stroke")
    }
}

/// Ground truth emitted by the synthetic generator. The pipeline never reads it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Oracle {
    pub object: String,
    /// Ground-truth Shape cluster per stroke (`None` for Scribble strokes).
    pub stroke_cluster: Vec<Option<usize>>,
    /// Ground-truth face per stroke (`None` for Shape strokes).
    pub stroke_face: Vec<Option<usize>>,
    /// Ground-truth curve segments; for a bifurcating cluster, one per arm.
    pub edges: Vec<[Vec3; 2]>,
    pub corners: Vec<Vec3>,
    /// Corner loops of the scribbled faces, indexed by face id.
    pub faces: Vec<Vec<usize>>,
    #[serde(default)]
    pub bifurcations: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sketch {
    pub name: String,
    pub strokes: Vec<StrokeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Oracle>,
}

impl Sketch {
    /// Diameter of the axis-aligned bounding box of all vertices.
    pub fn scale(&self) -> f64 {
        Aabb::from_points(self.strokes.iter().flat_map(|s| s.vertices.iter().map(|v| &v.p)))
            .map(|b| b.diagonal())
            .unwrap_or(0.0)
    }

    pub fn labels(&self) -> Vec<Option<StrokeLabel>> {
        self.strokes.iter().map(|s| s.label).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.strokes.iter().enumerate() {
            validate_stroke(i, s)?;
        }
        if let Some(o) = &self.oracle {
            let n = self.strokes.len();
            if o.stroke_cluster.len() != n || o.stroke_face.len() != n {
                return Err(Error::validation(
                    "oracle",
                    format!("oracle arrays must have {n} entries"),
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sketch: Sketch =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        sketch.validate()?;
        Ok(sketch)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sketch serializes")
    }
}

fn validate_stroke(i: usize, s: &StrokeRecord) -> Result<()> {
    if s.vertices.len() < 2 {
        return Err(Error::validation(
            "vertices",
            format!("stroke {i} has {} vertices, need at least 2", s.vertices.len()),
        ));
    }
    if !(0.01..=1.0).contains(&s.ink_width) {
        return Err(Error::validation(
            "ink_width",
            format!("stroke {i} ink width {} outside [0.01, 1.0]", s.ink_width),
        ));
    }
    if s.ink_color.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::validation(
            "ink_color",
            format!("stroke {i} color outside [0, 1]"),
        ));
    }
    let m = s.transform();
    let det = m.fixed_view::<3, 3>(0, 0).determinant();
    if !det.is_finite() || det.abs() < 1e-12 {
        return Err(Error::validation(
            "canvas_transform",
            format!("stroke {i} canvas transform is singular"),
        ));
    }
    let mut prev_t = f64::NEG_INFINITY;
    for (j, v) in s.vertices.iter().enumerate() {
        if !v.p.iter().all(|c| c.is_finite()) {
            return Err(Error::validation(
                "position",
                format!("stroke {i} vertex {j} is not finite"),
            ));
        }
        if !(v.t >= 0.0) {
            return Err(Error::validation(
                "timestamps",
                format!("stroke {i} vertex {j} has negative timestamp"),
            ));
        }
        if v.t < prev_t {
            return Err(Error::validation(
                "timestamps",
                format!("stroke {i} timestamps decrease at vertex {j}"),
            ));
        }
        prev_t = v.t;
        if !(0.0..=1.0).contains(&v.pressure) {
            return Err(Error::validation(
                "pressure",
                format!("stroke {i} vertex {j} pressure outside [0, 1]"),
            ));
        }
        if (v.normal.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::validation(
                "normal",
                format!("stroke {i} vertex {j} canvas normal is not unit length"),
            ));
        }
    }
    Ok(())
}

pub fn load_sketch(path: impl AsRef<Path>) -> Result<Sketch> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Sketch::from_json(&text)
}

pub fn save_sketch(sketch: &Sketch, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, sketch.to_json()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Row-major identity transform.
pub const IDENTITY_TRANSFORM: [f64; 16] = [
    1.0, 0.0, 0.0, 0.0, //
    0.0, 1.0, 0.0, 0.0, //
    0.0, 0.0, 1.0, 0.0, //
    0.0, 0.0, 0.0, 1.0,
];

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_vertex_json(t1: f64) -> String {
        format!(
            r#"{{"name":"tiny","strokes":[{{"ink_color":[0,0,0],"ink_width":0.02,
            "camera_position":[0,0,5],"camera_rotation":[0,0,0,1],"canvas_id":"c0",
            "canvas_type":"Plane","canvas_transform":[1,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1],
            "vertices":[{{"p":[0,0,0],"t":1.0,"pressure":0.5,"tilt":[0,0],"twist":0,"normal":[0,0,1]}},
                        {{"p":[3,4,0],"t":{t1},"pressure":0.5,"tilt":[0,0],"twist":0,"normal":[0,0,1]}}]}}]}}"#
        )
    }

    #[test]
    fn minimal_sketch_scale_is_vertex_distance() {
        let s = Sketch::from_json(&two_vertex_json(2.0)).unwrap();
        assert_eq!(s.strokes.len(), 1);
        assert_eq!(s.scale(), 5.0);
        assert_eq!(s.strokes[0].label, None);
    }

    #[test]
    fn decreasing_timestamps_are_rejected() {
        match Sketch::from_json(&two_vertex_json(0.5)) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "timestamps"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(Sketch::from_json("{\"name\": 3"), Err(Error::Parse(_))));
    }

    #[test]
    fn singular_transform_is_rejected() {
        let text = two_vertex_json(2.0).replace(
            "[1,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1]",
            "[1,0,0,0,0,0,0,0,0,0,1,0,0,0,0,1]",
        );
        match Sketch::from_json(&text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "canvas_transform"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn labels_use_integer_codes() {
        let text = two_vertex_json(2.0).replace("\"vertices\"", "\"label\":-1,\"vertices\"");
        let s = Sketch::from_json(&text).unwrap();
        assert_eq!(s.strokes[0].label, Some(StrokeLabel::Noise));
        assert!(s.to_json().contains("\"label\": -1"));
    }
}
