//! Double oracle with exploration-mixed DQN oracles, better-response
//! validation and local modes.

mod report;
mod valid;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{load_strategy_bundle, write_report_jsonl, write_strategy_bundle, BundleEntry, BundleManifest};
pub use valid::{validate_best_responses, Candidates, Margin, SideCheck, Validation};

use crate::error::{GsgiError, Result};
use crate::exact::{exact_policy_value, mixture_best_response};
use crate::game::{corner_cells, Cell, GameConfig, Side};
use crate::metagame::{estimate_pair, estimate_payoff_matrix, mix_strategies, MixedStrategy, RestrictedGame};
use crate::nn::{Head, QNetwork};
use crate::policies::{HeuristicAttackerParams, PurePolicy, Strategy};
use crate::rl::{train_dqn_best_response, TrainingConfig, TrainingMode};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModePlan {
    PureGlobal,
    LocalThenGlobal,
    PureLocal,
}

/// Game variant one DeDOL-S phase runs in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Global,
    Local(Cell),
}

impl Mode {
    pub fn config(&self, cfg: &GameConfig) -> Result<GameConfig> {
        match self {
            Mode::Global => Ok(cfg.clone()),
            Mode::Local(e) => cfg.with_entry(*e),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Mode::Global => "g".into(),
            Mode::Local(c) => format!("l{}{}", c.row, c.col),
        }
    }
}

/// How a defender mixture's utility is measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evaluation {
    /// Exact best-response attacker and exact value against the heuristic
    /// attacker; small grids only.
    Exact,
    /// A fresh attacker DQN trained `budget_factor` times the oracle budget,
    /// and the heuristic attacker, each estimated over `episodes` rollouts.
    Trained { budget_factor: usize, episodes: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DedolConfig {
    pub alpha: f64,
    /// Iterations of a global phase.
    pub max_iterations: usize,
    /// Iterations of each local phase.
    pub local_iterations: usize,
    pub plan: ModePlan,
    pub local_entries: Vec<Cell>,
    pub margin: Margin,
    /// Per-oracle training budget and hyperparameters; the seed is replaced
    /// per oracle.
    pub training: TrainingConfig,
    pub episodes_per_entry: usize,
    pub evaluation: Evaluation,
    /// Start from random-initialized networks instead of the heuristics.
    pub vanilla_psro: bool,
    pub seed: u64,
}

impl DedolConfig {
    /// Defaults for a game: α = 0.15, corner local modes, δ = 3 standard
    /// errors, desk-scale training, exact evaluation on grids up to 3×3.
    pub fn for_game(cfg: &GameConfig, seed: u64) -> Self {
        let local_entries = corner_cells(cfg.rows(), cfg.cols())
            .into_iter()
            .filter(|c| cfg.entry_points.contains(c))
            .collect();
        DedolConfig {
            alpha: 0.15,
            max_iterations: 3,
            local_iterations: 2,
            plan: ModePlan::PureGlobal,
            local_entries,
            margin: Margin::default(),
            training: TrainingConfig::desk(cfg.rows(), seed),
            episodes_per_entry: 200,
            evaluation: if cfg.num_cells() <= 9 {
                Evaluation::Exact
            } else {
                Evaluation::Trained {
                    budget_factor: 2,
                    episodes: 2000,
                }
            },
            vanilla_psro: false,
            seed,
        }
    }

    pub fn validate(&self, cfg: &GameConfig) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(GsgiError::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if let Some(c) = self.local_entries.iter().find(|c| !cfg.entry_points.contains(c)) {
            return Err(GsgiError::Config(format!("local entry {c:?} is not an entry point")));
        }
        if self.plan != ModePlan::PureGlobal && self.local_entries.is_empty() {
            return Err(GsgiError::Config("local plan with no local entries".into()));
        }
        if self.episodes_per_entry == 0 {
            return Err(GsgiError::Config("episodes_per_entry must be positive".into()));
        }
        if let Evaluation::Trained {
            budget_factor,
            episodes,
        } = self.evaluation
        {
            if budget_factor == 0 || episodes == 0 {
                return Err(GsgiError::Config("evaluation budget must be positive".into()));
            }
        }
        self.training.validate()
    }
}

/// A defender mixture and its measured utility.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedStrategy {
    /// `explore` for the exploration-mixed NE, `nash` for the plain NE.
    pub label: String,
    pub strategy: MixedStrategy,
    /// The worse of the two below.
    pub eu: f64,
    pub vs_best_response: f64,
    pub vs_heuristic: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub phase: String,
    pub iteration: usize,
    pub defender_ne: MixedStrategy,
    pub attacker_ne: MixedStrategy,
    pub value: f64,
    pub alpha: f64,
    /// The defender mixture the attacker oracle trained against.
    pub defender_mixture: MixedStrategy,
    /// The attacker mixture the defender oracle trained against.
    pub attacker_mixture: MixedStrategy,
    pub defender_candidate: String,
    pub attacker_candidate: String,
    pub validation: Validation,
    pub evaluated: Vec<EvaluatedStrategy>,
    pub defender_eu: f64,
    pub defenders: usize,
    pub attackers: usize,
    pub seconds: f64,
}

/// The defender strategy a run settles on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalStrategy {
    pub phase: String,
    /// `None` when no iteration ran and the NE of the game is returned.
    pub iteration: Option<usize>,
    pub label: String,
    pub strategy: MixedStrategy,
    pub eu: Option<f64>,
}

/// Highest evaluated defender EU over all records; ties go to the latest.
pub fn select_final_strategy(records: &[IterationRecord]) -> Result<FinalStrategy> {
    let mut best: Option<(&IterationRecord, &EvaluatedStrategy)> = None;
    for r in records {
        for e in &r.evaluated {
            if best.is_none_or(|(_, b)| e.eu >= b.eu) {
                best = Some((r, e));
            }
        }
    }
    let (r, e) = best.ok_or_else(|| GsgiError::InvalidArgument("no evaluated iteration records".into()))?;
    Ok(FinalStrategy {
        phase: r.phase.clone(),
        iteration: Some(r.iteration),
        label: e.label.clone(),
        strategy: e.strategy.clone(),
        eu: Some(e.eu),
    })
}

#[derive(Clone, Debug)]
pub struct PhaseOutcome {
    pub final_strategy: FinalStrategy,
    pub game: RestrictedGame,
    pub records: Vec<IterationRecord>,
}

/// The strategies of `mix` with positive weight, resolved in `pool`.
pub fn mixture_policies(pool: &[Strategy], mix: &MixedStrategy) -> Result<Vec<(PurePolicy, f64)>> {
    let mut out = Vec::new();
    for (id, p) in mix.ids.iter().zip(&mix.probs) {
        if *p <= 0.0 {
            continue;
        }
        let s = pool
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| GsgiError::InvalidArgument(format!("unknown strategy {id}")))?;
        out.push((s.policy.clone(), *p));
    }
    let total: f64 = out.iter().map(|(_, p)| p).sum();
    out.iter_mut().for_each(|(_, p)| *p /= total);
    Ok(out)
}

/// Utility of a defender mixture under the configured evaluation.
pub fn evaluate_defender(
    cfg: &GameConfig,
    defender: &[(PurePolicy, f64)],
    evaluation: Evaluation,
    training: &TrainingConfig,
    seed: u64,
) -> Result<(f64, f64)> {
    let heuristic = PurePolicy::HeuristicAttacker(HeuristicAttackerParams::default());
    match evaluation {
        Evaluation::Exact => {
            let br = -mixture_best_response(cfg, defender, Side::Attacker)?.value;
            let mut h = 0.0;
            for (d, w) in defender {
                h += w * exact_policy_value(cfg, d, &heuristic)?;
            }
            Ok((br, h))
        }
        Evaluation::Trained {
            budget_factor,
            episodes,
        } => {
            let mut t = training.clone();
            t.episodes *= budget_factor;
            t.seed = rng::derive_seed(seed, "eval-oracle", 0);
            let br = train_dqn_best_response(cfg, Side::Attacker, defender, &t, TrainingMode::Global)?.policy();
            let (mut vb, mut vh) = (0.0, 0.0);
            for (i, (d, w)) in defender.iter().enumerate() {
                let s = rng::derive_seed(seed, "eval-rollouts", i as u64);
                vb += w * estimate_pair(cfg, d, &br, episodes, s, None)?.mean;
                vh += w * estimate_pair(cfg, d, &heuristic, episodes, s, None)?.mean;
            }
            Ok((vb, vh))
        }
    }
}

fn evaluate(
    cfg: &GameConfig,
    game: &RestrictedGame,
    label: &str,
    mix: &MixedStrategy,
    dedol: &DedolConfig,
    seed: u64,
) -> Result<EvaluatedStrategy> {
    let d = mixture_policies(&game.defenders, mix)?;
    let (vb, vh) = evaluate_defender(cfg, &d, dedol.evaluation, &dedol.training, seed)?;
    Ok(EvaluatedStrategy {
        label: label.into(),
        strategy: mix.clone(),
        eu: vb.min(vh),
        vs_best_response: vb,
        vs_heuristic: vh,
    })
}

fn train_oracle(
    cfg: &GameConfig,
    side: Side,
    pool: &[Strategy],
    against: &MixedStrategy,
    dedol: &DedolConfig,
    id: &str,
) -> Result<Strategy> {
    let mut t = dedol.training.clone();
    t.seed = rng::derive_seed(dedol.seed, "oracle", rng::key_of(id));
    let opponents = mixture_policies(pool, against)?;
    let oracle = train_dqn_best_response(cfg, side, &opponents, &t, TrainingMode::Global)?;
    Ok(Strategy::new(id, oracle.policy()))
}

fn train_pair(
    cfg: &GameConfig,
    game: &RestrictedGame,
    vs_attacker: &MixedStrategy,
    vs_defender: &MixedStrategy,
    dedol: &DedolConfig,
    ids: (String, String),
) -> Result<Candidates> {
    let (d, a) = rayon::join(
        || train_oracle(cfg, Side::Defender, &game.attackers, vs_attacker, dedol, &ids.0),
        || train_oracle(cfg, Side::Attacker, &game.defenders, vs_defender, dedol, &ids.1),
    );
    Ok(Candidates {
        defender: d?,
        attacker: a?,
    })
}

fn payoff_seed(dedol: &DedolConfig, mode: Mode) -> u64 {
    rng::derive_seed(dedol.seed, "payoff", rng::key_of(&mode.tag()))
}

/// One DeDOL-S phase. Each iteration solves the restricted game, trains both
/// oracles against the opponent NE mixed with α of the uniform strategy,
/// validates them, and records the defender EU of the exploration-mixed NE
/// (plus the plain NE when a retrain happened). Stops after `iterations` or
/// when validation signals termination; the returned defender strategy is
/// the best recorded one, or the NE of the game when no iteration ran.
pub fn run_dedol_s(
    cfg: &GameConfig,
    initial: RestrictedGame,
    dedol: &DedolConfig,
    mode: Mode,
    iterations: usize,
) -> Result<PhaseOutcome> {
    dedol.validate(cfg)?;
    if initial.defenders.is_empty() || initial.attackers.is_empty() {
        return Err(GsgiError::InvalidArgument(
            "initial subgame needs a strategy per side".into(),
        ));
    }
    let mcfg = mode.config(cfg)?;
    let tag = mode.tag();
    let pseed = payoff_seed(dedol, mode);
    let mut game = initial;
    estimate_payoff_matrix(&mut game, &mcfg, dedol.episodes_per_entry, pseed, None)?;
    let mut records = Vec::new();
    for t in 0..iterations {
        let start = Instant::now();
        let (sd, sa, value) = game.solve()?;
        let md = mix_strategies(&sd, &MixedStrategy::uniform(sd.ids.clone())?, dedol.alpha)?;
        let ma = mix_strategies(&sa, &MixedStrategy::uniform(sa.ids.clone())?, dedol.alpha)?;
        let ids = (format!("{tag}-d{t}"), format!("{tag}-a{t}"));
        let first = train_pair(&mcfg, &game, &ma, &md, dedol, ids.clone())?;
        let before = game.clone();
        let validation = validate_best_responses(
            &mcfg,
            &mut game,
            &sd,
            &sa,
            first,
            dedol.margin,
            dedol.episodes_per_entry,
            pseed,
            || {
                train_pair(
                    &mcfg,
                    &before,
                    &sa,
                    &sd,
                    dedol,
                    (format!("{}r", ids.0), format!("{}r", ids.1)),
                )
            },
        )?;
        let eval_seed = rng::derive_seed(dedol.seed, "eval", rng::key_of(&format!("{tag}-{t}")));
        let mut evaluated = vec![evaluate(&mcfg, &game, "explore", &md, dedol, eval_seed)?];
        if validation.retrained.is_some() {
            evaluated.push(evaluate(&mcfg, &game, "nash", &sd, dedol, eval_seed)?);
        }
        let defender_eu = evaluated.iter().map(|e| e.eu).fold(f64::NEG_INFINITY, f64::max);
        let terminate = validation.terminate;
        records.push(IterationRecord {
            phase: tag.clone(),
            iteration: t,
            defender_ne: sd,
            attacker_ne: sa,
            value,
            alpha: dedol.alpha,
            defender_mixture: md,
            attacker_mixture: ma,
            defender_candidate: ids.0,
            attacker_candidate: ids.1,
            validation,
            evaluated,
            defender_eu,
            defenders: game.defenders.len(),
            attackers: game.attackers.len(),
            seconds: start.elapsed().as_secs_f64(),
        });
        if terminate {
            break;
        }
    }
    let final_strategy = if records.is_empty() {
        let (sd, _, _) = game.solve()?;
        FinalStrategy {
            phase: tag,
            iteration: None,
            label: "nash".into(),
            strategy: sd,
            eu: None,
        }
    } else {
        select_final_strategy(&records)?
    };
    Ok(PhaseOutcome {
        final_strategy,
        game,
        records,
    })
}

/// The starting strategies: random sweep and the heuristic attacker, or
/// random-initialized networks for the vanilla PSRO ablation.
pub fn initial_game(cfg: &GameConfig, dedol: &DedolConfig) -> Result<RestrictedGame> {
    if dedol.vanilla_psro {
        let net = |side: Side| -> Result<PurePolicy> {
            let seed = rng::derive_seed(dedol.seed, "init-net", side as u64);
            PurePolicy::network(
                QNetwork::build(cfg.rows(), Head::Dueling, side.num_actions(), seed)?,
                side,
            )
        };
        RestrictedGame::new(
            vec![Strategy::new("init-defender", net(Side::Defender)?)],
            vec![Strategy::new("init-attacker", net(Side::Attacker)?)],
        )
    } else {
        RestrictedGame::new(
            vec![Strategy::new("random-sweep", PurePolicy::RandomSweep)],
            vec![Strategy::new(
                "heuristic-attacker",
                PurePolicy::HeuristicAttacker(HeuristicAttackerParams::default()),
            )],
        )
    }
}

/// Result of one local phase, with its final defender strategy also
/// measured in the global game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSummary {
    pub entry: Cell,
    pub final_strategy: FinalStrategy,
    pub global_eu: f64,
    pub defenders: usize,
    pub attackers: usize,
}

#[derive(Clone, Debug)]
pub struct DedolReport {
    pub final_strategy: FinalStrategy,
    pub game: RestrictedGame,
    pub records: Vec<IterationRecord>,
    pub locals: Vec<LocalSummary>,
}

/// Run the configured plan. Local phases run in parallel; their strategy
/// pools are merged into one game whose payoffs are re-estimated globally.
/// Pure-local then returns the NE of that game; local-then-global continues
/// with a global phase.
pub fn run_dedol(cfg: &GameConfig, dedol: &DedolConfig) -> Result<DedolReport> {
    dedol.validate(cfg)?;
    let initial = initial_game(cfg, dedol)?;
    if dedol.plan == ModePlan::PureGlobal {
        let out = run_dedol_s(cfg, initial, dedol, Mode::Global, dedol.max_iterations)?;
        return Ok(DedolReport {
            final_strategy: out.final_strategy,
            game: out.game,
            records: out.records,
            locals: Vec::new(),
        });
    }
    let phases: Vec<PhaseOutcome> = dedol
        .local_entries
        .par_iter()
        .map(|e| run_dedol_s(cfg, initial.clone(), dedol, Mode::Local(*e), dedol.local_iterations))
        .collect::<Result<_>>()?;
    let mut union = RestrictedGame::new(Vec::new(), Vec::new())?;
    for p in &phases {
        for s in &p.game.defenders {
            if !union.defenders.iter().any(|d| d.id == s.id) {
                union.add_defender(s.clone())?;
            }
        }
        for s in &p.game.attackers {
            if !union.attackers.iter().any(|a| a.id == s.id) {
                union.add_attacker(s.clone())?;
            }
        }
    }
    let mut locals = Vec::new();
    let mut records = Vec::new();
    for (e, p) in dedol.local_entries.iter().zip(phases) {
        let d = mixture_policies(&p.game.defenders, &p.final_strategy.strategy)?;
        let seed = rng::derive_seed(dedol.seed, "cross-mode", rng::key_of(&Mode::Local(*e).tag()));
        let (vb, vh) = evaluate_defender(cfg, &d, dedol.evaluation, &dedol.training, seed)?;
        locals.push(LocalSummary {
            entry: *e,
            final_strategy: p.final_strategy,
            global_eu: vb.min(vh),
            defenders: p.game.defenders.len(),
            attackers: p.game.attackers.len(),
        });
        records.extend(p.records);
    }
    let iterations = match dedol.plan {
        ModePlan::PureLocal => 0,
        _ => dedol.max_iterations,
    };
    let out = run_dedol_s(cfg, union, dedol, Mode::Global, iterations)?;
    records.extend(out.records);
    Ok(DedolReport {
        final_strategy: out.final_strategy,
        game: out.game,
        records,
        locals,
    })
}
