//! End-to-end acceptance checks. Each test prints one PASS/FAIL line per
//! criterion before asserting it.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use strokesurf::classifier::ablation::{ablation_run, named_subsets, AblationConfig};
use strokesurf::classifier::{train_forest, ForestModel, Hyperparams, ModelKind};
use strokesurf::consolidation::bifurcation::{detect_and_split, DEFAULT_BRANCH_RATIO};
use strokesurf::consolidation::{consolidate_shapes, ConsolidationParams};
use strokesurf::features::{extract_features, Feature, FeatureMask, FeatureMatrix};
use strokesurf::pipeline::{
    consolidate_stage, predict_stage, run_pipeline, scribble_cluster_stage, shape_cluster_stage, surface_stage,
    topology_stage, CurveSet, Labels, ScribbleClusterSet, ShapeAssignments, Timings, ARTIFACTS, CURVES_FILE,
    LABELS_FILE, MESH_FILE, NETWORK_FILE, PATCHES_FILE, SCRIBBLE_CLUSTERS_FILE, SHAPE_CLUSTERS_FILE, TIMINGS_FILE,
};
use strokesurf::stats::{benjamini_hochberg, mann_whitney_u, significance_report};
use strokesurf::surfacing::{triangulate_polygon, SurfacingResult, TriangulationWeights};
use strokesurf::synth::{synth_corpus, synth_sketch, SynthConfig, SynthObject};
use strokesurf::topology::{junction::junction_scale, recover_topology, solve_junction, CurveNetwork};
use strokesurf::{PipelineConfig, Sketch, StrokeLabel, Vec3};

fn verdict(id: u32, what: &str, pass: bool, detail: impl std::fmt::Display) -> bool {
    println!("{} [{id}] {what}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn corpus_matrix(min_strokes: usize, seed: u64) -> FeatureMatrix {
    let corpus = synth_corpus(min_strokes, seed).unwrap();
    FeatureMatrix::concat(corpus.iter().map(|s| extract_features(s).unwrap()))
}

fn true_labels(sketch: &Sketch) -> Labels {
    Labels {
        labels: sketch.strokes.iter().map(|s| s.label.unwrap()).collect(),
        shape_fraction: sketch
            .strokes
            .iter()
            .map(|s| if s.label == Some(StrokeLabel::Shape) { 1.0 } else { 0.0 })
            .collect(),
    }
}

fn shape_ids(sketch: &Sketch) -> Vec<usize> {
    (0..sketch.strokes.len())
        .filter(|&i| sketch.strokes[i].label == Some(StrokeLabel::Shape))
        .collect()
}

/// A pre-trained model shared by the pipeline criteria.
fn model() -> &'static ForestModel {
    static MODEL: OnceLock<ForestModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let m = corpus_matrix(600, 3);
        let hyper = Hyperparams {
            n_trees: 50,
            ..Default::default()
        };
        train_forest(&m, FeatureMask::geo_or_sty(), &hyper, 3).unwrap()
    })
}

// ---------------------------------------------------------------- 1

#[test]
fn criterion_1_classifier() {
    let start = Instant::now();
    let matrix = corpus_matrix(1000, 11);
    let subsets: Vec<_> = named_subsets().into_iter().filter(|(n, _)| *n != "GEO_AND_STY").collect();
    let config = AblationConfig {
        seed: 11,
        ..Default::default()
    };
    let result = ablation_run(&matrix, &subsets, &[ModelKind::RandomForest], &config).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let rf = |s: &str| result.get(ModelKind::RandomForest, s).unwrap();
    let both = rf("GEO_OR_STY");
    let (geo, sty) = (rf("GEO").test.accuracy, rf("STY").test.accuracy);

    let mut ok = verdict(1, "corpus size >= 1000", matrix.len() >= 1000, matrix.len());
    ok &= verdict(
        1,
        "RF GEO_OR_STY test accuracy >= 95%",
        both.test.accuracy >= 95.0,
        format!("{:.2}%", both.test.accuracy),
    );
    ok &= verdict(
        1,
        "RF GEO_OR_STY train accuracy >= 99%",
        both.train.accuracy >= 99.0,
        format!("{:.2}%", both.train.accuracy),
    );
    ok &= verdict(
        1,
        "GEO_OR_STY >= max(GEO, STY) on test",
        both.test.accuracy >= geo.max(sty),
        format!("{:.2} vs GEO {geo:.2}, STY {sty:.2}", both.test.accuracy),
    );
    ok &= verdict(1, "runtime < 60 s", elapsed < 60.0, format!("{elapsed:.1} s"));
    assert!(ok);
}

// ---------------------------------------------------------------- 2

/// U of the first sample by pair counting, with ties worth one half.
fn u_by_pairs(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 }))
        .sum()
}

/// Two-sided p from every relabeling of the pooled sample.
fn permutation_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let observed = u_by_pairs(a, b);
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (i, v) in pooled.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    x.push(*v)
                } else {
                    y.push(*v)
                }
            }
            (x, y)
        };
        let u = u_by_pairs(&x, &y);
        total += 1;
        le += (u <= observed) as u64;
        ge += (u >= observed) as u64;
    }
    (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
}

fn bh_by_definition(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len();
    let mut k_max = 0;
    for k in 1..=m {
        let count = p.iter().filter(|&&x| x <= p_kth(p, k)).count();
        if count >= k && p_kth(p, k) <= k as f64 / m as f64 * alpha {
            k_max = k;
        }
    }
    if k_max == 0 {
        return vec![false; m];
    }
    let cut = p_kth(p, k_max);
    p.iter().map(|&x| x <= cut).collect()
}

fn p_kth(p: &[f64], k: usize) -> f64 {
    let mut s = p.to_vec();
    s.sort_by(f64::total_cmp);
    s[k - 1]
}

#[test]
fn criterion_2_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for na in 1..=6 {
        for nb in 1..=6 {
            for _ in 0..3 {
                // Small integer values so ties occur.
                let a: Vec<f64> = (0..na).map(|_| rng.random_range(0..6) as f64).collect();
                let b: Vec<f64> = (0..nb).map(|_| rng.random_range(0..6) as f64).collect();
                let got = mann_whitney_u(&a, &b).unwrap();
                assert_eq!(got.u, u_by_pairs(&a, &b));
                worst = worst.max((got.p - permutation_p(&a, &b)).abs());
            }
        }
    }
    let mut ok = verdict(2, "exact Mann-Whitney equals permutation enumeration", worst <= 1e-12, format!("max |dp| = {worst:.1e}"));

    let mut mismatches = 0;
    for _ in 0..500 {
        let m = rng.random_range(1..=20);
        let p: Vec<f64> = (0..m)
            .map(|_| if rng.random_bool(0.3) { rng.random_range(0.0..0.01) } else { rng.random_range(0.0..1.0) })
            .collect();
        if benjamini_hochberg(&p, 0.05).unwrap() != bh_by_definition(&p, 0.05) {
            mismatches += 1;
        }
    }
    ok &= verdict(2, "BH equals step-up definition on 500 vectors", mismatches == 0, format!("{mismatches} mismatches"));

    let seeds = 20;
    let mut dropped = 0;
    for seed in 0..seeds {
        let report = significance_report(&corpus_matrix(300, 100 + seed), 0.05).unwrap();
        let kept = report.retained();
        if !kept.contains(&Feature::AvgPressure) && !kept.contains(&Feature::AvgTilt) {
            dropped += 1;
        }
    }
    ok &= verdict(
        2,
        "label-independent features not significant in >= 90% of seeds",
        dropped * 10 >= seeds * 9,
        format!("{dropped}/{seeds}"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- 3

/// Adjusted Rand index from the contingency table.
fn adjusted_rand(a: &[usize], b: &[usize]) -> f64 {
    let choose2 = |n: u64| (n * n.saturating_sub(1)) as f64 / 2.0;
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| choose2(n)).sum();
    let sa: f64 = rows.values().map(|&n| choose2(n)).sum();
    let sb: f64 = cols.values().map(|&n| choose2(n)).sum();
    let expected = sa * sb / choose2(a.len() as u64);
    let max = (sa + sb) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

fn y_cloud(lengths: [f64; 3], spacing: f64) -> Vec<Vec3> {
    let mut pts = vec![Vec3::zeros()];
    for (k, len) in lengths.iter().enumerate() {
        let t = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * k as f64 / 3.0;
        let dir = Vec3::new(t.cos(), t.sin(), 0.0);
        let n = ((len / spacing).round() as usize).max(1);
        pts.extend((1..=n).map(|i| dir * (len * i as f64 / n as f64)));
    }
    pts
}

#[test]
fn criterion_3_shape_consolidation() {
    let params = ConsolidationParams::default();
    let cube = synth_sketch(&SynthConfig::new(SynthObject::Cube, 0.0, 3, 0)).unwrap();
    let stage = consolidate_shapes(&cube, &shape_ids(&cube), &params).unwrap();
    let n = stage.shape.clustering.n_clusters();
    let mut ok = verdict(3, "zero-jitter cube gives 12 clusters", n == 12, n);

    let (mut min_ari, mut worst_residual) = (f64::INFINITY, f64::NEG_INFINITY);
    for seed in 0..10 {
        let s = synth_sketch(&SynthConfig::new(SynthObject::Cube, 0.1, 3, seed)).unwrap();
        let stage = consolidate_shapes(&s, &shape_ids(&s), &params).unwrap();
        let oracle = s.oracle.as_ref().unwrap();
        let truth: Vec<usize> = stage.shape.stroke_ids.iter().map(|&i| oracle.stroke_cluster[i].unwrap()).collect();
        let got: Vec<usize> = stage.shape.clustering.labels.iter().map(|l| l.unwrap()).collect();
        min_ari = min_ari.min(adjusted_rand(&truth, &got));
        for c in &stage.curves {
            worst_residual = worst_residual.max(c.max_residual / c.mean_width);
        }
    }
    ok &= verdict(3, "jitter 0.1w: ARI >= 0.95 on 10 seeds", min_ari >= 0.95, format!("min ARI {min_ari:.4}"));
    ok &= verdict(
        3,
        "every curve max residual <= mean width",
        worst_residual <= 1.0,
        format!("worst residual/width {worst_residual:.3}"),
    );

    let y = synth_sketch(&SynthConfig::new(SynthObject::YJunction, 0.0, 3, 0)).unwrap();
    let stage = consolidate_shapes(&y, &shape_ids(&y), &params).unwrap();
    let (clusters, curves) = (stage.shape.clustering.n_clusters(), stage.curves.len());
    ok &= verdict(
        3,
        "Y-junction splits into 3 sub-clusters",
        clusters == 1 && curves == 3,
        format!("{clusters} cluster(s), {curves} curves"),
    );
    let parts = detect_and_split(&y_cloud([1.0, 1.0, 0.01], 0.01), DEFAULT_BRANCH_RATIO, 0.0).len();
    ok &= verdict(3, "1% arm does not split", parts == 1, format!("{parts} part(s)"));
    assert!(ok);
}

// ---------------------------------------------------------------- 4

fn line_distance_sum(p: &Vec3, ends: &[Vec3], tangents: &[Vec3]) -> f64 {
    ends.iter()
        .zip(tangents)
        .map(|(e, t)| {
            let d = p - e;
            (d - t * (d.dot(t) / t.norm_squared())).norm()
        })
        .sum()
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if v.norm() > 0.2 && v.norm() <= 1.0 {
            return v.normalize();
        }
    }
}

fn network_of(sketch: &Sketch) -> CurveNetwork {
    let stage = consolidate_shapes(sketch, &shape_ids(sketch), &ConsolidationParams::default()).unwrap();
    recover_topology(&stage.curves, 1.5).unwrap().1
}

#[test]
fn criterion_4_topology() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..50 {
        let k = rng.random_range(2..=5);
        let ends: Vec<Vec3> = (0..k)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let tangents: Vec<Vec3> = (0..k).map(|_| random_unit(&mut rng)).collect();
        let solved = solve_junction(&ends, &tangents).unwrap();
        let value = line_distance_sum(&solved.point, &ends, &tangents);
        let (lo, hi) = ends.iter().fold((ends[0], ends[0]), |(lo, hi), e| (lo.inf(e), hi.sup(e)));
        let margin = (hi - lo) * 0.1;
        let (lo, hi) = (lo - margin, hi + margin);
        let at = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / 20.0;
        let mut grid_min = f64::INFINITY;
        for i in 0..=20 {
            for j in 0..=20 {
                for l in 0..=20 {
                    let p = Vec3::new(at(lo.x, hi.x, i), at(lo.y, hi.y, j), at(lo.z, hi.z, l));
                    grid_min = grid_min.min(line_distance_sum(&p, &ends, &tangents));
                }
            }
        }
        worst_gap = worst_gap.max((value - grid_min) / junction_scale(&ends));
    }
    let mut ok = verdict(
        4,
        "junction solver beats 21^3 grid on 50 instances",
        worst_gap <= 1e-6,
        format!("worst (solver - grid)/scale = {worst_gap:.2e}"),
    );

    let mut worst_miss: f64 = 0.0;
    for _ in 0..50 {
        let x = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let k = rng.random_range(2..=5);
        let tangents: Vec<Vec3> = (0..k).map(|_| random_unit(&mut rng)).collect();
        let ends: Vec<Vec3> = tangents.iter().map(|t| x + t * rng.random_range(-1.0..1.0)).collect();
        let solved = solve_junction(&ends, &tangents).unwrap();
        worst_miss = worst_miss.max((solved.point - x).norm());
    }
    ok &= verdict(4, "concurrent lines recover the intersection", worst_miss <= 1e-6, format!("max miss {worst_miss:.2e}"));

    let cube = synth_sketch(&SynthConfig::new(SynthObject::Cube, 0.0, 3, 0)).unwrap();
    let net = network_of(&cube);
    let corners = &cube.oracle.as_ref().unwrap().corners;
    let corner_err = net
        .nodes
        .iter()
        .map(|n| corners.iter().map(|c| (n.p - c).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    ok &= verdict(
        4,
        "cube network has 8 nodes / 12 edges",
        net.nodes.len() == 8 && net.edges.len() == 12,
        format!("{} nodes, {} edges", net.nodes.len(), net.edges.len()),
    );
    ok &= verdict(4, "cube corners within 1e-3", corner_err <= 1e-3, format!("max corner error {corner_err:.2e}"));
    assert!(ok);
}

// ---------------------------------------------------------------- 5

fn area(p: &[Vec3], t: [usize; 3]) -> f64 {
    (p[t[1]] - p[t[0]]).cross(&(p[t[2]] - p[t[0]])).norm() / 2.0
}

fn all_triangulations(i: usize, j: usize) -> Vec<Vec<[usize; 3]>> {
    if j < i + 2 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for m in i + 1..j {
        for left in all_triangulations(i, m) {
            for right in all_triangulations(m, j) {
                let mut t = left.clone();
                t.extend(right);
                t.push([i, m, j]);
                out.push(t);
            }
        }
    }
    out
}

fn brute_weight(p: &[Vec3], tris: &[[usize; 3]], w: &TriangulationWeights) -> f64 {
    let normal = |t: [usize; 3]| (p[t[1]] - p[t[0]]).cross(&(p[t[2]] - p[t[0]])).normalize();
    let sides = |t: [usize; 3]| [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])];
    let mut total: f64 = tris.iter().map(|&t| w.area * area(p, t)).sum();
    for a in 0..tris.len() {
        for b in a + 1..tris.len() {
            if sides(tris[a]).iter().any(|s| sides(tris[b]).contains(s)) {
                total += w.dihedral * (1.0 - normal(tris[a]).dot(&normal(tris[b])));
            }
        }
    }
    total
}

#[test]
fn criterion_5_triangulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let weights = TriangulationWeights::default();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut dp_time = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(3..=10);
        let pts: Vec<Vec3> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let r = rng.random_range(0.6..1.4);
                Vec3::new(r * t.cos(), r * t.sin(), rng.random_range(-0.5..0.5))
            })
            .collect();
        let t = Instant::now();
        let dp = triangulate_polygon(&pts, &weights).unwrap();
        dp_time += t.elapsed().as_secs_f64();
        let best = all_triangulations(0, n - 1)
            .iter()
            .map(|tris| brute_weight(&pts, tris, &weights))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(dp.triangles.len(), n - 2);
        worst = worst.max((dp.weight - best).abs());
    }
    let total = start.elapsed().as_secs_f64();
    let mut ok = verdict(5, "DP equals exhaustive minimum on 100 polygons", worst <= 1e-9, format!("max |dw| = {worst:.1e}"));
    ok &= verdict(5, "runtime < 5 s", total < 5.0, format!("{total:.3} s total, {dp_time:.3} s in DP"));
    assert!(ok);
}

// ---------------------------------------------------------------- 6

fn surface_fixture(object: SynthObject, seed: u64, guided: bool) -> SurfacingResult {
    let sketch = synth_sketch(&SynthConfig::new(object, 0.1, 3, seed)).unwrap();
    let mut config = PipelineConfig::default();
    config.surfacing.guided = guided;
    let labels = true_labels(&sketch);
    let shapes = shape_cluster_stage(&sketch, &labels, &config).unwrap();
    let curves = consolidate_stage(&sketch, &shapes, &config).unwrap();
    let network = topology_stage(&curves, &config).unwrap();
    let scribbles = scribble_cluster_stage(&sketch, &labels, &config).unwrap();
    surface_stage(&sketch, &network, &scribbles, &config).unwrap().0
}

#[test]
fn criterion_6_surfacing() {
    let cube = surface_fixture(SynthObject::Cube, 0, true);
    let four_edged = cube.patches.iter().all(|p| p.cycle.edges.len() == 4);
    let mut ok = verdict(
        6,
        "cube gives 6 verified 4-edge patches",
        cube.verified_count() == 6 && cube.patches.len() == 6 && four_edged,
        format!("{} patches, {} verified", cube.patches.len(), cube.verified_count()),
    );
    let chi = cube.mesh.euler_characteristic();
    ok &= verdict(
        6,
        "cube mesh is closed with V-E+F = 2",
        cube.mesh.is_closed() && chi == 2,
        format!("closed {}, chi {chi}", cube.mesh.is_closed()),
    );

    let open = surface_fixture(SynthObject::OpenBox, 1, true);
    let rim = open.mesh.boundary_edges().len();
    ok &= verdict(
        6,
        "open box gives 5 patches and keeps its opening",
        open.verified_count() == 5 && open.patches.len() == 5 && rim > 0,
        format!("{} patches, {rim} boundary mesh edges", open.patches.len()),
    );
    let unguided = surface_fixture(SynthObject::OpenBox, 1, false);
    let diff = unguided.patches.len() as i64 - open.verified_count() as i64;
    ok &= verdict(6, "unguided search surfaces at least one more patch", diff >= 1, format!("difference {diff}"));
    assert!(ok);
}

// ---------------------------------------------------------------- 7

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn same_artifacts(a: &Path, b: &Path) -> Vec<&'static str> {
    ARTIFACTS
        .iter()
        .copied()
        .filter(|&f| f != TIMINGS_FILE && read(a, f) != read(b, f))
        .collect()
}

#[test]
fn criterion_7_determinism_and_composability() {
    let sketch = synth_sketch(&SynthConfig::new(SynthObject::Cube, 0.1, 3, 7).with_scribbles_per_face(2)).unwrap();
    let config = PipelineConfig::default();
    let dirs: Vec<_> = (0..4).map(|_| tempfile::tempdir().unwrap()).collect();
    run_pipeline(&sketch, model(), &config, dirs[0].path(), 1).unwrap();
    run_pipeline(&sketch, model(), &config, dirs[1].path(), 1).unwrap();
    run_pipeline(&sketch, model(), &config, dirs[2].path(), 4).unwrap();

    let repeat = same_artifacts(dirs[0].path(), dirs[1].path());
    let mut ok = verdict(7, "repeat runs are byte-identical", repeat.is_empty(), format!("differing: {repeat:?}"));
    let threads = same_artifacts(dirs[0].path(), dirs[2].path());
    ok &= verdict(7, "threads 1 vs 4 are byte-identical", threads.is_empty(), format!("differing: {threads:?}"));

    // Stage by stage, each reading the previous stage's files.
    let (src, dst) = (dirs[0].path(), dirs[3].path());
    let write = |name: &str, text: &str| std::fs::write(dst.join(name), text).unwrap();
    let labels = predict_stage(&sketch, model()).unwrap();
    write(LABELS_FILE, &labels.to_json());
    let labels = Labels::from_json(&read(dst, LABELS_FILE)).unwrap();
    write(SHAPE_CLUSTERS_FILE, &shape_cluster_stage(&sketch, &labels, &config).unwrap().to_json());
    let shapes = ShapeAssignments::from_json(&read(dst, SHAPE_CLUSTERS_FILE)).unwrap();
    write(CURVES_FILE, &consolidate_stage(&sketch, &shapes, &config).unwrap().to_json());
    let curves = CurveSet::from_json(&read(dst, CURVES_FILE)).unwrap();
    write(NETWORK_FILE, &topology_stage(&curves, &config).unwrap().to_json());
    let network = CurveNetwork::from_json(&read(dst, NETWORK_FILE)).unwrap();
    write(SCRIBBLE_CLUSTERS_FILE, &scribble_cluster_stage(&sketch, &labels, &config).unwrap().to_json());
    let scribbles = ScribbleClusterSet::from_json(&read(dst, SCRIBBLE_CLUSTERS_FILE)).unwrap();
    let (_, patches, obj) = surface_stage(&sketch, &network, &scribbles, &config).unwrap();
    write(PATCHES_FILE, &patches.to_json());
    write(MESH_FILE, &obj);
    write(TIMINGS_FILE, "");
    let staged = same_artifacts(src, dst);
    ok &= verdict(7, "stage-wise equals end-to-end", staged.is_empty(), format!("differing: {staged:?}"));
    assert!(ok);
}

// ---------------------------------------------------------------- 8

#[test]
fn criterion_8_performance() {
    let model = model();
    let sketch = synth_sketch(&SynthConfig::new(SynthObject::Cube, 0.1, 11, 8).with_scribbles_per_face(11)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_pipeline(&sketch, model, &PipelineConfig::default(), dir.path(), 1).unwrap();
    let timings: Timings = serde_json::from_str(&read(dir.path(), TIMINGS_FILE)).unwrap();
    let all_present = ARTIFACTS.iter().all(|f| dir.path().join(f).exists());
    let mut ok = verdict(8, "sketch has 198 strokes", sketch.strokes.len() == 198, sketch.strokes.len());
    ok &= verdict(8, "all artifacts written", all_present, format!("{} patches", report.verified_count));
    ok &= verdict(
        8,
        "single-threaded pipeline < 60 s",
        timings.total_seconds < 60.0 && timings.threads == 1,
        format!("{:.2} s", timings.total_seconds),
    );
    assert!(ok);
}
