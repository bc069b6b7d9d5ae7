//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the process exit code.

mod policy_spec;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

pub use policy_spec::{parse_policy, WeightedPolicy};

use crate::dedol::{self, DedolConfig, Evaluation, ModePlan};
use crate::error::{GsgiError, Result};
use crate::exact::{self, TreeBudget};
use crate::game::{generate_map, play_episode, write_replay_jsonl, Cell, GameConfig, MapKind, Side};
use crate::metagame::write_payoff_csv;
use crate::nn::save_checkpoint;
use crate::policies::{grid_search_defender_params, write_grid_search_csv, GridSpec, PurePolicy};
use crate::rl::{self, TrainingConfig, TrainingMode, Variant};
use crate::rng;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "GSGI_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "gsgi", version, about = "Green security games with real-time information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Roll out two policies and report the defender's mean utility.
    Simulate(SimulateArgs),
    /// Train a DQN (or actor-critic) best response against a policy.
    TrainBr(TrainBrArgs),
    /// Run the DeDOL double-oracle loop.
    Dedol(DedolArgs),
    /// Solve the game tree with chance-sampled CFR.
    Cfr(CfrArgs),
    /// Evaluate a defender bundle or policy.
    Eval(EvalArgs),
    /// Exact best response against a policy on a small game.
    ExactBr(ExactBrArgs),
    /// Write a success-probability map.
    Genmap(GenmapArgs),
    /// Search heuristic-defender weights on a lattice.
    GridSearch(GridSearchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Uniform,
    Gaussian,
}

impl From<KindArg> for MapKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Uniform => MapKind::Uniform,
            KindArg::Gaussian => MapKind::GaussianMixture,
        }
    }
}

#[derive(Debug, Args)]
struct GameArgs {
    /// Game configuration JSON; overrides the preset options below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Side length of a preset square grid.
    #[arg(long, default_value_t = 3)]
    grid: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    map_kind: KindArg,
    /// Seed of the preset map; defaults to --seed.
    #[arg(long)]
    map_seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long)]
    tools: Option<u32>,
    /// Root seed of every random stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl GameArgs {
    fn load(&self) -> Result<GameConfig> {
        let mut cfg = match &self.config {
            Some(p) => serde_json::from_slice::<GameConfig>(&fs::read(p)?)
                .map_err(|e| GsgiError::Config(format!("{}: {e}", p.display())))?,
            None => GameConfig::preset(self.grid, self.map_kind.into(), self.map_seed.unwrap_or(self.seed))?,
        };
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(t) = self.tools {
            cfg.num_tools = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Defender policy (see README for the spec syntax).
    #[arg(long, default_value = "random-sweep")]
    defender: String,
    #[arg(long, default_value = "heuristic-attacker")]
    attacker: String,
    #[arg(long, default_value_t = 1000)]
    episodes: usize,
    /// Also write per-step replays.
    #[arg(long)]
    replays: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SideArg {
    Defender,
    Attacker,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Defender => Side::Defender,
            SideArg::Attacker => Side::Attacker,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Vanilla,
    VanillaDouble,
    DuelingDouble,
    ActorCritic,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Vanilla => Variant::Vanilla,
            VariantArg::VanillaDouble => Variant::VanillaDouble,
            VariantArg::DuelingDouble => Variant::DuelingDouble,
            VariantArg::ActorCritic => Variant::ActorCritic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

#[derive(Debug, Args)]
struct TrainingArgs {
    #[arg(long, value_enum, default_value = "desk")]
    profile: ProfileArg,
    /// Training episodes; the exploration decay is rescaled to match.
    #[arg(long)]
    train_episodes: Option<usize>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    lr: Option<f64>,
}

impl TrainingArgs {
    fn build(&self, grid: usize, seed: u64) -> Result<TrainingConfig> {
        let mut t = match self.profile {
            ProfileArg::Desk => TrainingConfig::desk(grid, seed),
            ProfileArg::Paper => TrainingConfig::paper(grid, seed),
        };
        if let Some(n) = self.train_episodes {
            t.epsilon.every = (t.epsilon.every * n / t.episodes.max(1)).max(1);
            t.curve_every = (t.curve_every * n / t.episodes.max(1)).max(1);
            t.episodes = n;
        }
        if let Some(v) = self.variant {
            t.variant = v.into();
        }
        if let Some(lr) = self.lr {
            t.lr = lr;
        }
        t.validate()?;
        Ok(t)
    }
}

fn parse_cell(s: &str) -> std::result::Result<Cell, String> {
    let (r, c) = s.split_once(',').ok_or("expected ROW,COL")?;
    Ok(Cell::new(
        r.trim().parse().map_err(|e| format!("{e}"))?,
        c.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

#[derive(Debug, Args)]
struct TrainBrArgs {
    #[command(flatten)]
    game: GameArgs,
    #[command(flatten)]
    training: TrainingArgs,
    /// Side that learns.
    #[arg(long, value_enum, default_value = "defender")]
    side: SideArg,
    /// Opponent policy or bundle.
    #[arg(long)]
    against: String,
    /// Fix the attacker entry (local mode), as ROW,COL.
    #[arg(long, value_parser = parse_cell)]
    local: Option<Cell>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlanArg {
    PureGlobal,
    LocalThenGlobal,
    PureLocal,
}

impl From<PlanArg> for ModePlan {
    fn from(p: PlanArg) -> Self {
        match p {
            PlanArg::PureGlobal => ModePlan::PureGlobal,
            PlanArg::LocalThenGlobal => ModePlan::LocalThenGlobal,
            PlanArg::PureLocal => ModePlan::PureLocal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EvalArg {
    Exact,
    Trained,
}

#[derive(Debug, Args)]
struct DedolArgs {
    #[command(flatten)]
    game: GameArgs,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long, value_enum, default_value = "pure-global")]
    plan: PlanArg,
    /// Iterations of the global phase.
    #[arg(long, default_value_t = 3)]
    iters: usize,
    /// Iterations of each local phase.
    #[arg(long, default_value_t = 2)]
    local_iters: usize,
    #[arg(long, default_value_t = 0.15)]
    alpha: f64,
    #[arg(long, default_value_t = 200)]
    episodes_per_entry: usize,
    /// Fixed improvement margin; defaults to three standard errors.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    eval: Option<EvalArg>,
    /// Start from random networks instead of the heuristics.
    #[arg(long)]
    vanilla_psro: bool,
    /// Experiment JSON holding a full `DedolConfig`; replaces the options
    /// above.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CfrArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = 5000)]
    iterations: u64,
    /// Record exploitability every this many iterations.
    #[arg(long)]
    trace_every: Option<u64>,
    #[arg(long, default_value_t = TreeBudget::default().max_nodes)]
    max_nodes: u64,
    #[arg(long, default_value_t = TreeBudget::default().max_bytes)]
    max_bytes: u64,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Defender policy or bundle directory (`bundle:DIR`).
    #[arg(long)]
    defender: String,
    /// Attacker policy; ignored with --train-br.
    #[arg(long, default_value = "heuristic-attacker")]
    against: String,
    /// Evaluate against a freshly trained attacker best response.
    #[arg(long)]
    train_br: bool,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long, default_value_t = 10_000)]
    episodes: usize,
}

#[derive(Debug, Args)]
struct ExactBrArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, value_enum, default_value = "attacker")]
    side: SideArg,
    #[arg(long)]
    against: String,
}

#[derive(Debug, Args)]
struct GenmapArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    kind: KindArg,
    #[arg(long, default_value_t = 3)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridSearchArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value = "heuristic-attacker")]
    against: String,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    min: f64,
    #[arg(long, default_value_t = 5.0)]
    max: f64,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, default_value_t = 200)]
    episodes: usize,
}

/// Provenance written next to every artifact.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config_hash: String,
    artifacts: Vec<String>,
}

struct Ctx {
    command_line: String,
}

impl Ctx {
    fn manifest(&self, dir: &Path, seed: u64, config: &impl Serialize, artifacts: &[&str]) -> Result<()> {
        let m = Manifest {
            command: &self.command_line,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config_hash: config_hash(config)?,
            artifacts: artifacts.iter().map(|s| s.to_string()).collect(),
        };
        fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&m)?)?;
        Ok(())
    }
}

/// SHA-256 of the canonical JSON of a configuration, hex-encoded.
pub fn config_hash(config: &impl Serialize) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Mean, standard error and the normal 95% half-width.
pub fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let se = (var / n).sqrt();
    (mean, se, 1.96 * se)
}

fn configure_workers() {
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn exit_code(e: &GsgiError) -> i32 {
    match e {
        GsgiError::Budget { .. } => EXIT_BUDGET,
        GsgiError::Config(_)
        | GsgiError::Dimensions(_)
        | GsgiError::InvalidArgument(_)
        | GsgiError::Shape(_)
        | GsgiError::Json(_)
        | GsgiError::Checkpoint(_) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

/// Parse `args` (including the program name) and run the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    configure_workers();
    let ctx = Ctx {
        command_line: args
            .iter()
            .map(|a| a.to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join(" "),
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(&ctx, a),
        Command::TrainBr(a) => train_br(&ctx, a),
        Command::Dedol(a) => run_dedol(&ctx, a),
        Command::Cfr(a) => cfr(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::ExactBr(a) => exact_br(&ctx, a),
        Command::Genmap(a) => genmap(a),
        Command::GridSearch(a) => grid_search(&ctx, a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn out_dir(game: &GameArgs) -> Result<&Path> {
    fs::create_dir_all(&game.out)?;
    Ok(&game.out)
}

fn single(spec: &str, side: Side, base: &Path) -> Result<PurePolicy> {
    let mut p = parse_policy(spec, side, base)?;
    if p.len() != 1 {
        return Err(GsgiError::Config(format!(
            "{spec} is a mixture; a single policy is needed here"
        )));
    }
    Ok(p.remove(0).policy)
}

fn simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<()> {
    let cfg = a.game.load()?;
    if a.episodes == 0 {
        return Err(GsgiError::Config("episodes must be positive".into()));
    }
    let cwd = PathBuf::from(".");
    let def = single(&a.defender, Side::Defender, &cwd)?;
    let att = single(&a.attacker, Side::Attacker, &cwd)?;
    let dir = out_dir(&a.game)?;
    let mut csv = csv::Writer::from_writer(create(dir, "utilities.csv")?);
    csv.write_record(["episode", "seed", "entry_row", "entry_col", "utility"])?;
    let mut replays = if a.replays {
        Some(create(dir, "replays.jsonl")?)
    } else {
        None
    };
    let mut us = Vec::with_capacity(a.episodes);
    for i in 0..a.episodes {
        let seed = rng::derive_seed(a.game.seed, "simulate", i as u64);
        let ep = play_episode(&cfg, &def, &att, seed, None, a.replays)?;
        csv.write_record([
            i.to_string(),
            seed.to_string(),
            ep.entry.row.to_string(),
            ep.entry.col.to_string(),
            ep.utility.to_string(),
        ])?;
        if let Some(w) = replays.as_mut() {
            write_replay_jsonl(&mut *w, i as u64, seed, &ep)?;
        }
        us.push(ep.utility);
    }
    csv.flush()?;
    if let Some(mut w) = replays {
        w.flush()?;
    }
    let (mean, se, ci) = summarize(&us);
    println!(
        "mean utility {mean:.6} se {se:.6} 95% ci [{:.6}, {:.6}] over {} episodes",
        mean - ci,
        mean + ci,
        a.episodes
    );
    let mut artifacts = vec!["utilities.csv"];
    if a.replays {
        artifacts.push("replays.jsonl");
    }
    ctx.manifest(dir, a.game.seed, &cfg, &artifacts)
}

fn train_br(ctx: &Ctx, a: &TrainBrArgs) -> Result<()> {
    let cfg = a.game.load()?;
    let side: Side = a.side.into();
    let training = a.training.build(cfg.rows(), a.game.seed)?;
    let opponents: Vec<(PurePolicy, f64)> = parse_policy(&a.against, side.opponent(), Path::new("."))?
        .into_iter()
        .map(|w| (w.policy, w.weight))
        .collect();
    let mode = match a.local {
        Some(c) => TrainingMode::Local(c),
        None => TrainingMode::Global,
    };
    let start = Instant::now();
    let oracle = rl::train_dqn_best_response(&cfg, side, &opponents, &training, mode)?;
    let dir = out_dir(&a.game)?;
    save_checkpoint(&oracle.net, &dir.join("br.ckpt"))?;
    rl::write_curve_csv(create(dir, "curve.csv")?, &oracle.curve)?;
    let last = oracle.curve.last().map(|c| c.mean_utility).unwrap_or(f64::NAN);
    println!(
        "trained {side} oracle: {} updates in {:.1}s, final window mean utility {last:.4}",
        oracle.updates,
        start.elapsed().as_secs_f64()
    );
    ctx.manifest(
        dir,
        a.game.seed,
        &json!({"game": cfg, "training": training}),
        &["br.ckpt", "curve.csv"],
    )
}

fn run_dedol(ctx: &Ctx, a: &DedolArgs) -> Result<()> {
    let cfg = a.game.load()?;
    let d = match &a.spec {
        Some(p) => serde_json::from_slice::<DedolConfig>(&fs::read(p)?)
            .map_err(|e| GsgiError::Config(format!("{}: {e}", p.display())))?,
        None => {
            let mut d = DedolConfig::for_game(&cfg, a.game.seed);
            d.training = a.training.build(cfg.rows(), a.game.seed)?;
            d.plan = a.plan.into();
            d.max_iterations = a.iters;
            d.local_iterations = a.local_iters;
            d.alpha = a.alpha;
            d.episodes_per_entry = a.episodes_per_entry;
            d.vanilla_psro = a.vanilla_psro;
            if let Some(delta) = a.delta {
                d.margin = dedol::Margin::Fixed { delta };
            }
            match a.eval {
                Some(EvalArg::Exact) => d.evaluation = Evaluation::Exact,
                Some(EvalArg::Trained) => {
                    d.evaluation = Evaluation::Trained {
                        budget_factor: 2,
                        episodes: 2000,
                    }
                }
                None => {}
            }
            d
        }
    };
    let start = Instant::now();
    let report = dedol::run_dedol(&cfg, &d)?;
    let dir = out_dir(&a.game)?;
    dedol::write_report_jsonl(create(dir, "report.jsonl")?, &report)?;
    write_payoff_csv(create(dir, "payoff.csv")?, &report.game)?;
    dedol::write_strategy_bundle(&dir.join("bundle"), &report)?;
    for r in &report.records {
        println!(
            "{} iteration {}: defender EU {:.4}, added {:?}{}",
            r.phase,
            r.iteration,
            r.defender_eu,
            r.validation.added,
            if r.validation.terminate { ", terminate" } else { "" }
        );
    }
    match report.final_strategy.eu {
        Some(eu) => println!(
            "final defender strategy EU {eu:.4} ({:.1}s)",
            start.elapsed().as_secs_f64()
        ),
        None => println!(
            "final defender strategy: NE of the merged game ({:.1}s)",
            start.elapsed().as_secs_f64()
        ),
    }
    ctx.manifest(
        dir,
        d.seed,
        &json!({"game": cfg, "dedol": d}),
        &["report.jsonl", "payoff.csv", "bundle/manifest.json"],
    )
}

fn cfr(ctx: &Ctx, a: &CfrArgs) -> Result<()> {
    let cfg = a.game.load()?;
    let budget = TreeBudget {
        max_nodes: a.max_nodes,
        max_bytes: a.max_bytes,
    };
    let start = Instant::now();
    let tree = exact::build_game_tree(&cfg, None, budget)?;
    let stats = tree.stats();
    eprintln!("tree: {stats:?} built in {:.1}s", start.elapsed().as_secs_f64());
    let res = exact::run_cfr(&tree, a.iterations, a.game.seed, a.trace_every)?;
    let expl = exact::exploitability(&tree, &res.defender, &res.attacker)?;
    let value = exact::profile_value(&tree, &res.defender, &res.attacker)?;
    let dir = out_dir(&a.game)?;
    exact::write_strategy_csv(create(dir, "strategies.csv")?, &[&res.defender, &res.attacker])?;
    exact::write_trace_csv(create(dir, "trace.csv")?, &res.trace)?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_vec_pretty(&json!({
            "tree": stats,
            "iterations": res.iterations,
            "exploitability": expl,
            "value": value,
            "mean_nodes_per_iteration": res.mean_nodes_per_iteration,
        }))?,
    )?;
    println!(
        "value {value:.6} exploitability {expl:.6} after {} iterations",
        res.iterations
    );
    ctx.manifest(dir, a.game.seed, &cfg, &["strategies.csv", "trace.csv", "summary.json"])
}

fn eval(ctx: &Ctx, a: &EvalArgs) -> Result<()> {
    let cfg = a.game.load()?;
    if a.episodes == 0 {
        return Err(GsgiError::Config("episodes must be positive".into()));
    }
    let defender = parse_policy(&a.defender, Side::Defender, Path::new("."))?;
    let attacker = if a.train_br {
        let training = a
            .training
            .build(cfg.rows(), rng::derive_seed(a.game.seed, "eval-br", 0))?;
        let mix: Vec<(PurePolicy, f64)> = defender.iter().map(|w| (w.policy.clone(), w.weight)).collect();
        rl::train_dqn_best_response(&cfg, Side::Attacker, &mix, &training, TrainingMode::Global)?.policy()
    } else {
        single(&a.against, Side::Attacker, Path::new("."))?
    };
    // one defender component per episode, drawn from the bundle weights
    let weights: Vec<f64> = defender.iter().map(|w| w.weight).collect();
    let mut pick = rng::stream(a.game.seed, "eval-pick", 0);
    let mut us = Vec::with_capacity(a.episodes);
    for i in 0..a.episodes {
        let k = rl::sample_index(&weights, &mut pick);
        let seed = rng::derive_seed(a.game.seed, "eval", i as u64);
        us.push(play_episode(&cfg, &defender[k].policy, &attacker, seed, None, false)?.utility);
    }
    let (mean, se, ci) = summarize(&us);
    println!(
        "defender EU {mean:.6} se {se:.6} 95% ci [{:.6}, {:.6}] over {} episodes",
        mean - ci,
        mean + ci,
        a.episodes
    );
    let dir = out_dir(&a.game)?;
    fs::write(
        dir.join("eval.json"),
        serde_json::to_vec_pretty(
            &json!({"mean": mean, "std_error": se, "ci95": [mean - ci, mean + ci], "episodes": a.episodes}),
        )?,
    )?;
    ctx.manifest(dir, a.game.seed, &cfg, &["eval.json"])
}

fn exact_br(ctx: &Ctx, a: &ExactBrArgs) -> Result<()> {
    let cfg = a.game.load()?;
    let side: Side = a.side.into();
    let opp: Vec<(PurePolicy, f64)> = parse_policy(&a.against, side.opponent(), Path::new("."))?
        .into_iter()
        .map(|w| (w.policy, w.weight))
        .collect();
    let br = exact::mixture_best_response(&cfg, &opp, side)?;
    println!(
        "{side} best-response value {:.9} over {} info sets",
        br.value, br.infosets
    );
    let dir = out_dir(&a.game)?;
    fs::write(
        dir.join("exact_br.json"),
        serde_json::to_vec_pretty(
            &json!({"side": side, "value": br.value, "infosets": br.infosets, "policy": br.policy}),
        )?,
    )?;
    ctx.manifest(dir, a.game.seed, &cfg, &["exact_br.json"])
}

fn genmap(a: &GenmapArgs) -> Result<()> {
    let corners = crate::game::corner_cells(a.size, a.size);
    let map = generate_map(a.kind.into(), a.size, a.size, &corners, a.seed)?;
    let rows: Vec<&[f64]> = map.chunks(a.size).collect();
    let doc = json!({
        "kind": MapKind::from(a.kind),
        "rows": a.size,
        "cols": a.size,
        "seed": a.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "success": rows,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &a.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn grid_search(ctx: &Ctx, a: &GridSearchArgs) -> Result<()> {
    let cfg = a.game.load()?;
    let opp = single(&a.against, Side::Attacker, Path::new("."))?;
    let spec = GridSpec {
        min: a.min,
        max: a.max,
        step: a.step,
    };
    let res = grid_search_defender_params(&cfg, &opp, &spec.lattice()?, a.episodes, a.game.seed)?;
    let dir = out_dir(&a.game)?;
    write_grid_search_csv(create(dir, "grid_search.csv")?, &res)?;
    let b = res.best.params;
    println!(
        "best w_p {} w_i {} w_o {}: mean utility {:.4}",
        b.w_p, b.w_i, b.w_o, res.best.mean
    );
    ctx.manifest(dir, a.game.seed, &cfg, &["grid_search.csv"])
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn summary_of_constant_values() {
        let (m, se, ci) = summarize(&[2.0, 2.0, 2.0]);
        assert_eq!((m, se, ci), (2.0, 0.0, 0.0));
    }
}
