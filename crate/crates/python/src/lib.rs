//! Python bindings. Sketches, models and results cross the boundary as JSON
//! strings or file paths.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use strokesurf::classifier::{train_forest, Hyperparams};
use strokesurf::features::{extract_features, FeatureMask, FeatureMatrix};
use strokesurf::surfacing::TriangulationWeights;
use strokesurf::synth::SynthConfig;
use strokesurf::{pipeline, Error, PipelineConfig, Sketch, Vec3};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn vec3(p: [f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

/// Synthetic labeled sketch as JSON; `object` is cube, open_box, wall or
/// y_junction.
#[pyfunction]
#[pyo3(signature = (object, jitter = 0.1, overdraw = 3, seed = 0, scribbles_per_face = 1))]
fn synth_sketch(object: &str, jitter: f64, overdraw: usize, seed: u64, scribbles_per_face: usize) -> PyResult<String> {
    let object = object.parse().map_err(py_err)?;
    let config = SynthConfig::new(object, jitter, overdraw, seed).with_scribbles_per_face(scribbles_per_face);
    Ok(strokesurf::synth::synth_sketch(&config).map_err(py_err)?.to_json())
}

/// Per-stroke feature table of a sketch, as CSV text.
#[pyfunction]
fn feature_table(sketch_json: &str) -> PyResult<String> {
    let sketch = Sketch::from_json(sketch_json).map_err(py_err)?;
    let mut buf = Vec::new();
    extract_features(&sketch).map_err(py_err)?.write_csv(&mut buf).map_err(py_err)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

/// Two-sided Mann-Whitney test; returns `(u, p)`.
#[pyfunction]
fn mann_whitney_u(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = strokesurf::stats::mann_whitney_u(&a, &b).map_err(py_err)?;
    Ok((r.u, r.p))
}

#[pyfunction]
#[pyo3(signature = (p_values, alpha = 0.05))]
fn benjamini_hochberg(p_values: Vec<f64>, alpha: f64) -> PyResult<Vec<bool>> {
    strokesurf::stats::benjamini_hochberg(&p_values, alpha).map_err(py_err)
}

/// Junction point of curve ends; returns `(point, objective)`.
#[pyfunction]
fn solve_junction(ends: Vec<[f64; 3]>, tangents: Vec<[f64; 3]>) -> PyResult<([f64; 3], f64)> {
    let ends: Vec<Vec3> = ends.into_iter().map(vec3).collect();
    let tangents: Vec<Vec3> = tangents.into_iter().map(|t| vec3(t).normalize()).collect();
    let s = strokesurf::topology::solve_junction(&ends, &tangents).map_err(py_err)?;
    Ok(([s.point.x, s.point.y, s.point.z], s.objective))
}

/// Minimum-weight triangulation of a closed 3D polygon; returns
/// `(triangles, weight)`.
#[pyfunction]
#[pyo3(signature = (points, area = 1.0, dihedral = 0.1))]
fn triangulate_polygon(points: Vec<[f64; 3]>, area: f64, dihedral: f64) -> PyResult<(Vec<[usize; 3]>, f64)> {
    let points: Vec<Vec3> = points.into_iter().map(vec3).collect();
    let t = strokesurf::surfacing::triangulate_polygon(&points, &TriangulationWeights { area, dihedral })
        .map_err(py_err)?;
    Ok((t.triangles, t.weight))
}

/// Random forest on all features of labeled sketches; returns model JSON.
#[pyfunction]
#[pyo3(signature = (sketch_jsons, n_trees = 100, seed = 0))]
fn train_model(py: Python<'_>, sketch_jsons: Vec<String>, n_trees: usize, seed: u64) -> PyResult<String> {
    py.detach(|| {
        let mut parts = Vec::new();
        for text in &sketch_jsons {
            parts.push(extract_features(&Sketch::from_json(text)?)?);
        }
        let hyper = Hyperparams {
            n_trees,
            ..Default::default()
        };
        let model = train_forest(&FeatureMatrix::concat(parts), FeatureMask::geo_or_sty(), &hyper, seed)?;
        Ok(model.to_json())
    })
    .map_err(py_err)
}

/// Default configuration as TOML.
#[pyfunction]
fn default_config() -> String {
    PipelineConfig::default().to_toml()
}

/// Runs every stage and writes the artifacts into `out_dir`; returns a JSON
/// summary with timings and warnings.
#[pyfunction]
#[pyo3(signature = (sketch_path, model_path, out_dir, config_toml = None, threads = 0))]
fn run_pipeline(
    py: Python<'_>,
    sketch_path: &str,
    model_path: &str,
    out_dir: &str,
    config_toml: Option<&str>,
    threads: usize,
) -> PyResult<String> {
    py.detach(|| {
        let config = match config_toml {
            Some(text) => PipelineConfig::from_toml(text)?,
            None => PipelineConfig::default(),
        };
        let sketch = strokesurf::load_sketch(sketch_path)?;
        let model = strokesurf::classifier::ForestModel::load(model_path)?;
        let report = pipeline::run_pipeline(&sketch, &model, &config, out_dir, threads)?;
        Ok(serde_json::json!({
            "patches": report.patch_count,
            "verified": report.verified_count,
            "warnings": report.warnings,
            "timings": report.timings,
        })
        .to_string())
    })
    .map_err(py_err)
}

#[pymodule]
fn strokesurf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(synth_sketch, m)?)?;
    m.add_function(wrap_pyfunction!(feature_table, m)?)?;
    m.add_function(wrap_pyfunction!(mann_whitney_u, m)?)?;
    m.add_function(wrap_pyfunction!(benjamini_hochberg, m)?)?;
    m.add_function(wrap_pyfunction!(solve_junction, m)?)?;
    m.add_function(wrap_pyfunction!(triangulate_polygon, m)?)?;
    m.add_function(wrap_pyfunction!(train_model, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
