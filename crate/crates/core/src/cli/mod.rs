//! Command-line front end. Every randomized command takes an explicit seed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{assemble_feature_vector, fit_visibility_model, GmmConfig, VisibilityModel};
use crate::geometry::WeightVector;
use crate::pipeline::{
    evaluate_model, mix_seed, run_optimization_loop, CollectConfig, Dataset, LoopConfig, LoopControl, SampleSource,
    SimulationSource, Split, StepConfig, SyntheticSource, MANIFEST_FILE,
};
use crate::planner::{build_search_tree, node_count_formula, plan_min_cost_sequence, PlanConfig, PlanReport, PruneCause};
use crate::ranking::{rpc_train, scene_labels, PreferenceSample, RpcConfig, RpcModel, TauVariant, Voting};
use crate::scene::{generate_scene, Scene, WorkspacePreset, WorkspaceSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "seqrank", version, about = "Plan damage-minimizing unloading sequences and learn ranking strategies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random clustered scenes.
    GenScenes(GenScenes),
    /// Plan the minimum-cost removal order of a scene.
    Plan(Plan),
    /// Compute feature vectors of scenes.
    Features(Features),
    /// Fit visibility mixtures from random single-object placements.
    FitVis(FitVis),
    /// Train a pairwise ranking model on a dataset.
    Train(Train),
    /// Evaluate a model on a dataset's test split.
    Eval(Eval),
    /// Run the self-supervised optimization loop.
    Optimize(Optimize),
    /// Print tree sizes and prune summaries.
    Stats(Stats),
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    #[arg(long, value_enum, default_value = "container")]
    pub workspace: WorkspacePreset,
    /// Comma-separated object classes, one object each.
    #[arg(long, value_delimiter = ',', default_value = "carton,can,crate,cube")]
    pub classes: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GenScenes {
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub scenes: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Plan {
    #[arg(long)]
    pub scene: PathBuf,
    /// Accepted for symmetry with other commands; planning is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "1,1,2,1,1,1")]
    pub weights: WeightVector,
    /// Disable every pruning strategy.
    #[arg(long)]
    pub exhaustive: bool,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Features {
    #[arg(long, required = true, num_args = 1..)]
    pub scene: Vec<PathBuf>,
    #[arg(long)]
    pub vis: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitVis {
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Placements per class.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(20..))]
    pub samples: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long, value_enum, default_value = "soft")]
    pub voting: Voting,
    /// Weight votes by the training preference weights.
    #[arg(long)]
    pub pref_weights: bool,
}

#[derive(Debug, Args)]
pub struct Train {
    /// Dataset JSONL; a sibling manifest.json restricts training to the train split.
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub rank: RankArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Eval {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset JSONL; a sibling manifest.json restricts evaluation to the test split.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Use the unscaled discordance weight in the weighted tau.
    #[arg(long)]
    pub literal_tau: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SourceKind {
    Simulation,
    Synthetic,
}

#[derive(Debug, Args)]
pub struct Optimize {
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Scene budget, initial scenes included.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub scenes: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
    pub initial_scenes: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub scenes_per_step: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub variants: u64,
    /// Planning runs per variant.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value = "1,1,2,1,1,1")]
    pub weights: WeightVector,
    #[command(flatten)]
    pub rank: RankArgs,
    #[arg(long)]
    pub literal_tau: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    /// Visibility model; fitted on the fly when omitted.
    #[arg(long)]
    pub vis: Option<PathBuf>,
    /// Placements per class when fitting visibility on the fly.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(20..))]
    pub vis_samples: u64,
    #[arg(long, value_enum, default_value = "simulation")]
    pub source: SourceKind,
    /// Stop after this many seconds.
    #[arg(long)]
    pub time_budget: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Stats {
    /// Print the worst-case tree size for this many objects.
    #[arg(long)]
    pub tree_size: Option<usize>,
    /// Plan this scene and print its prune summary.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long, default_value = "1,1,2,1,1,1")]
    pub weights: WeightVector,
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

/// Reads a dataset file, with its split when a manifest sits beside it.
fn load_dataset(path: &Path) -> Result<(Vec<PreferenceSample>, Option<Dataset>)> {
    let dir = path.parent().unwrap_or(Path::new("."));
    if dir.join(MANIFEST_FILE).exists() && path.file_name() == Some(crate::pipeline::DATASET_FILE.as_ref()) {
        let d = Dataset::load(dir)?;
        return Ok((d.samples.clone(), Some(d)));
    }
    let text = std::fs::read_to_string(path)?;
    let samples = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| Error::Format(format!("line {}: {e}", n + 1))))
        .collect::<Result<Vec<PreferenceSample>>>()?;
    Ok((samples, None))
}

fn gen_scenes(a: &GenScenes) -> Result<()> {
    let ws = WorkspaceSpec::preset(a.scene.workspace);
    std::fs::create_dir_all(&a.out)?;
    for k in 0..a.scenes {
        let s = generate_scene(&a.scene.classes, &ws, mix_seed(a.seed, k))?;
        s.save(&a.out.join(format!("scene_{k:04}.json")))?;
    }
    log::info!("wrote {} scenes to {}", a.scenes, a.out.display());
    Ok(())
}

fn plan(a: &Plan) -> Result<()> {
    let scene = Scene::load(&a.scene)?;
    let cfg = if a.exhaustive {
        PlanConfig::exhaustive(a.weights)
    } else {
        PlanConfig::with_weights(a.weights)
    };
    let r = plan_min_cost_sequence(&scene, &cfg)?;
    write_output(a.out.as_deref(), &PlanReport::new(&r, a.weights).to_json()?)
}

#[derive(Serialize)]
struct FeatureRecord {
    scene: String,
    /// Ranking labels in layout order.
    labels: Vec<String>,
    features: Vec<f64>,
}

fn features(a: &Features) -> Result<()> {
    let vis = VisibilityModel::load(&a.vis)?;
    let mut out = String::new();
    for p in &a.scene {
        let s = Scene::load(p)?;
        let x = assemble_feature_vector(&s, &vis)?;
        let rec = FeatureRecord {
            scene: p.display().to_string(),
            labels: scene_labels(&s).into_values().collect(),
            features: x.0,
        };
        out.push_str(&serde_json::to_string(&rec)?);
        out.push('\n');
    }
    write_output(a.out.as_deref(), &out)
}

fn fit_vis(a: &FitVis) -> Result<()> {
    let ws = WorkspaceSpec::preset(a.scene.workspace);
    let cfg = GmmConfig {
        seed: a.seed,
        ..GmmConfig::default()
    };
    let m = fit_visibility_model(&a.scene.classes, &ws, a.samples as usize, &cfg)?;
    write_output(Some(&a.out), &m.to_json()?)
}

fn rpc_config(r: &RankArgs) -> RpcConfig {
    RpcConfig {
        voting: r.voting,
        use_pref_weights: r.pref_weights,
        ..RpcConfig::default()
    }
}

fn train(a: &Train) -> Result<()> {
    let (samples, dataset) = load_dataset(&a.dataset)?;
    let train = match &dataset {
        Some(d) => d.samples_in(Split::Train),
        None => samples,
    };
    let m = rpc_train(&train, &rpc_config(&a.rank))?;
    m.save_atomic(&a.out)
}

fn eval(a: &Eval) -> Result<()> {
    let model = RpcModel::load(&a.model)?;
    let (samples, dataset) = load_dataset(&a.dataset)?;
    let test = match &dataset {
        Some(d) => d.samples_in(Split::Test),
        None => samples,
    };
    let variant = if a.literal_tau {
        TauVariant::Literal
    } else {
        TauVariant::Scaled
    };
    write_output(a.out.as_deref(), &to_json(&evaluate_model(&model, &test, variant)?)?)
}

fn optimize(a: &Optimize) -> Result<()> {
    let ws = WorkspaceSpec::preset(a.scene.workspace);
    let source: Box<dyn SampleSource> = match a.source {
        SourceKind::Synthetic => Box::new(SyntheticSource {
            variants: a.variants as usize,
            samples_per_variant: a.samples as usize,
            seed: a.seed,
            ..SyntheticSource::default()
        }),
        SourceKind::Simulation => {
            let vis = match &a.vis {
                Some(p) => VisibilityModel::load(p)?,
                None => {
                    let cfg = GmmConfig {
                        seed: a.seed,
                        ..GmmConfig::default()
                    };
                    log::info!("fitting visibility mixtures on {} placements per class", a.vis_samples);
                    fit_visibility_model(&a.scene.classes, &ws, a.vis_samples as usize, &cfg)?
                }
            };
            let mut collect = CollectConfig::for_workspace(&ws);
            collect.variants = a.variants as usize;
            collect.samples_per_variant = a.samples as usize;
            collect.plan = PlanConfig::with_weights(a.weights);
            Box::new(SimulationSource {
                classes: a.scene.classes.clone(),
                workspace: ws,
                visibility: vis,
                collect,
                seed: a.seed,
            })
        }
    };
    let cfg = LoopConfig {
        initial_scenes: a.initial_scenes as usize,
        scenes_per_step: a.scenes_per_step as usize,
        scene_budget: a.scenes as usize,
        workers: a.workers as usize,
        seed: a.seed,
        step: StepConfig {
            rpc: rpc_config(&a.rank),
            tau: if a.literal_tau {
                TauVariant::Literal
            } else {
                TauVariant::Scaled
            },
        },
        out_dir: Some(a.out.clone()),
    };
    let interrupt = Arc::new(AtomicBool::new(false));
    {
        let flag = interrupt.clone();
        // a second handler registration fails harmlessly when run in-process twice
        let _ = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst));
    }
    let control = LoopControl {
        interrupt,
        deadline: a
            .time_budget
            .map(|s| std::time::Instant::now() + std::time::Duration::from_secs_f64(s.max(0.0))),
        may_continue: None,
    };
    let state = run_optimization_loop(source.as_ref(), &cfg, &control)?;
    if state.current_model.is_none() {
        return Err(Error::InsufficientData {
            needed: 2,
            got: state.dataset.scene_count(),
        });
    }
    println!(
        "scenes {} samples {} accepted {} discarded {} tau_w {:.4}",
        state.dataset.scene_count(),
        state.dataset.samples.len(),
        state.accepted_history().len(),
        state.discarded_batches,
        state.accepted_tau_w().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn stats(a: &Stats) -> Result<()> {
    if a.tree_size.is_none() && a.scene.is_none() {
        return Err(Error::InvalidConfig("give --tree-size or --scene".into()));
    }
    if let Some(n) = a.tree_size {
        let ids: Vec<u32> = (1..=n as u32).collect();
        let t = build_search_tree(&ids)?;
        let levels: Vec<String> = t.level_sizes().iter().map(|l| l.to_string()).collect();
        println!("nodes {}", node_count_formula(n)?);
        println!("levels {}", levels.join(","));
    }
    if let Some(p) = &a.scene {
        let r = plan_min_cost_sequence(&Scene::load(p)?, &PlanConfig::with_weights(a.weights))?;
        let s = &r.stats;
        let pct = |n: usize| 100.0 * n as f64 / s.total_nodes as f64;
        println!("total nodes {}", s.total_nodes);
        println!("simulated nodes {} ({:.1}%)", s.simulated_nodes, pct(s.simulated_nodes));
        for c in PruneCause::ALL {
            println!("pruned {} {} ({:.1}%)", c.name(), s.pruned(c), pct(s.pruned(c)));
        }
        println!("pruned total {} ({:.1}%)", s.pruned_total(), pct(s.pruned_total()));
        println!("significant movement nodes {}", s.significant_movement_nodes);
        println!("best {:?} cost {:.4}", r.best.sequence, r.best.cost);
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenScenes(a) => gen_scenes(a),
        Command::Plan(a) => plan(a),
        Command::Features(a) => features(a),
        Command::FitVis(a) => fit_vis(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Optimize(a) => optimize(a),
        Command::Stats(a) => stats(a),
    }
}

/// Parses `argv` (program name first), runs the command, returns the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DOMAIN
        }
    }
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("SEQRANK_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}
