use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use strokesurf::classifier::ablation::{ablation_run, named_subsets};
use strokesurf::classifier::cv::grid_search_cv;
use strokesurf::classifier::{ForestModel, ModelKind};
use strokesurf::features::{extract_features, FeatureMask, FeatureMatrix};
use strokesurf::pipeline::{self, read_text, write_text, CurveSet, Labels, ScribbleClusterSet, ShapeAssignments};
use strokesurf::stats::significance_report;
use strokesurf::synth::{synth_corpus, synth_sketch, SynthConfig, SynthObject};
use strokesurf::topology::CurveNetwork;
use strokesurf::{load_sketch, save_sketch, Error, PipelineConfig, Result};

const THREADS_ENV: &str = "STROKESURF_THREADS";

#[derive(Parser)]
#[command(name = "strokesurf", version, about = "Curve networks and surfaces from 4D sketches")]
struct Cli {
    /// TOML configuration; unset keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SketchArg {
    #[arg(long)]
    sketch: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled sketch, or a corpus with --corpus.
    Synth {
        #[arg(long, default_value = "cube")]
        object: SynthObject,
        /// Lateral jitter in Shape ink widths.
        #[arg(long, default_value_t = 0.1)]
        jitter: f64,
        #[arg(long, default_value_t = 3)]
        overdraw: usize,
        #[arg(long, default_value_t = 1)]
        scribbles_per_face: usize,
        /// Write sketches totalling at least this many strokes instead.
        #[arg(long)]
        corpus: Option<usize>,
    },
    /// Per-stroke feature table (features.csv) for one or more sketches.
    Features { sketches: Vec<PathBuf> },
    /// Shape-vs-Scribble significance tests on a feature table.
    Stats {
        features: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Grid-search and train a classifier (model.json).
    Train {
        features: PathBuf,
        #[arg(long, default_value = "RF")]
        model: ModelKind,
        #[arg(long, default_value = "GEO_OR_STY")]
        subset: FeatureMask,
    },
    /// Model by feature-subset ablation (ablation.txt, ablation.json).
    Ablate { features: PathBuf },
    /// Predict stroke types (labels.json).
    Predict {
        #[command(flatten)]
        sketch: SketchArg,
        #[arg(long)]
        model: PathBuf,
    },
    /// Cluster Shape strokes (shape_clusters.json).
    ClusterShape {
        #[command(flatten)]
        sketch: SketchArg,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Fit one curve per Shape cluster branch (curves.json).
    Consolidate {
        #[command(flatten)]
        sketch: SketchArg,
        #[arg(long)]
        shape_clusters: PathBuf,
    },
    /// Connect curves into a network (network.json).
    Topology {
        #[arg(long)]
        curves: PathBuf,
    },
    /// Cluster Scribble strokes (scribble_clusters.json).
    ClusterScribble {
        #[command(flatten)]
        sketch: SketchArg,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Surface the network (patches.json, mesh.obj).
    Surface {
        #[command(flatten)]
        sketch: SketchArg,
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        scribble_clusters: PathBuf,
    },
    /// All stages end to end, writing every artifact and timings.json.
    Pipeline {
        #[command(flatten)]
        sketch: SketchArg,
        #[arg(long)]
        model: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    FeatureMatrix::read_csv(file)
}

fn run(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    let out = &cli.out;
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.clone(),
        source,
    })?;
    let emit = |name: &str, text: &str| -> Result<()> {
        let path = out.join(name);
        write_text(&path, text)?;
        log::info!("wrote {}", path.display());
        Ok(())
    };
    match &cli.command {
        Command::Synth {
            object,
            jitter,
            overdraw,
            scribbles_per_face,
            corpus,
        } => match corpus {
            Some(min_strokes) => {
                for (k, sketch) in synth_corpus(*min_strokes, config.seed)?.iter().enumerate() {
                    save_sketch(sketch, out.join(format!("sketch_{k:03}.json")))?;
                }
            }
            None => {
                let cfg = SynthConfig::new(*object, *jitter, *overdraw, config.seed)
                    .with_scribbles_per_face(*scribbles_per_face);
                save_sketch(&synth_sketch(&cfg)?, out.join("sketch.json"))?;
            }
        },
        Command::Features { sketches } => {
            if sketches.is_empty() {
                return Err(Error::Config("no sketches given".into()));
            }
            let mut parts = Vec::new();
            for path in sketches {
                parts.push(extract_features(&load_sketch(path)?)?);
            }
            let mut buf = Vec::new();
            FeatureMatrix::concat(parts).write_csv(&mut buf)?;
            emit("features.csv", &String::from_utf8(buf).expect("csv is utf-8"))?;
        }
        Command::Stats { features, alpha } => {
            let report = significance_report(&read_features(features)?, *alpha)?;
            print!("{}", report.to_table());
            emit("stats.txt", &report.to_table())?;
            emit("stats.json", &serde_json::to_string_pretty(&report).expect("serializable"))?;
        }
        Command::Train { features, model, subset } => {
            let (rows, y) = read_features(features)?.labeled_rows();
            let c = &config.classifier;
            let search = grid_search_cv(*model, &rows, &y, *subset, &c.grid, c.folds, config.seed)?;
            log::info!("best hyper-parameters: {:?}", search.best);
            search.model.save(out.join("model.json"))?;
        }
        Command::Ablate { features } => {
            let models = [ModelKind::RandomForest, ModelKind::BoostedTrees];
            let result = ablation_run(&read_features(features)?, &named_subsets(), &models, &config.ablation())?;
            print!("{}", result.to_table());
            emit("ablation.txt", &result.to_table())?;
            emit("ablation.json", &serde_json::to_string_pretty(&result).expect("serializable"))?;
        }
        Command::Predict { sketch, model } => {
            let labels = pipeline::predict_stage(&load_sketch(&sketch.sketch)?, &ForestModel::load(model)?)?;
            emit(pipeline::LABELS_FILE, &labels.to_json())?;
        }
        Command::ClusterShape { sketch, labels } => {
            let labels = Labels::from_json(&read_text(labels)?)?;
            let shapes = pipeline::shape_cluster_stage(&load_sketch(&sketch.sketch)?, &labels, &config)?;
            emit(pipeline::SHAPE_CLUSTERS_FILE, &shapes.to_json())?;
        }
        Command::Consolidate { sketch, shape_clusters } => {
            let shapes = ShapeAssignments::from_json(&read_text(shape_clusters)?)?;
            let curves = pipeline::consolidate_stage(&load_sketch(&sketch.sketch)?, &shapes, &config)?;
            emit(pipeline::CURVES_FILE, &curves.to_json())?;
        }
        Command::Topology { curves } => {
            let curves = CurveSet::from_json(&read_text(curves)?)?;
            emit(pipeline::NETWORK_FILE, &pipeline::topology_stage(&curves, &config)?.to_json())?;
        }
        Command::ClusterScribble { sketch, labels } => {
            let labels = Labels::from_json(&read_text(labels)?)?;
            let set = pipeline::scribble_cluster_stage(&load_sketch(&sketch.sketch)?, &labels, &config)?;
            emit(pipeline::SCRIBBLE_CLUSTERS_FILE, &set.to_json())?;
        }
        Command::Surface {
            sketch,
            network,
            scribble_clusters,
        } => {
            let network = CurveNetwork::from_json(&read_text(network)?)?;
            let scribbles = ScribbleClusterSet::from_json(&read_text(scribble_clusters)?)?;
            let (_, patches, obj) = pipeline::surface_stage(&load_sketch(&sketch.sketch)?, &network, &scribbles, &config)?;
            emit(pipeline::PATCHES_FILE, &patches.to_json())?;
            emit(pipeline::MESH_FILE, &obj)?;
        }
        Command::Pipeline { sketch, model } => {
            let sketch = load_sketch(&sketch.sketch)?;
            let model = ForestModel::load(model)?;
            let report = pipeline::run_pipeline(&sketch, &model, &config, out, cli.threads)?;
            for stage in &report.timings.stages {
                println!("{:<28} {:>8.3} s", stage.name, stage.seconds);
            }
            println!(
                "{} of {} patches verified, {} warning(s)",
                report.verified_count,
                report.patch_count,
                report.warnings.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Pipeline { .. } => run(&cli),
        _ => pipeline::with_threads(cli.threads, || run(&cli)).and_then(|r| r),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
