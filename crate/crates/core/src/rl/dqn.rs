use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::{TrainingConfig, Variant};
use super::replay::{ReplayBuffer, Transition};
use crate::error::{GsgiError, Result};
use crate::game::{encode_state, sample_entry, AttackerAction, Cell, GameConfig, GameState, Move, Side};
use crate::nn::{apply_gradients, AdamState, Head, QNetwork};
use crate::policies::{greedy_action, PolicyState, PurePolicy};
use crate::rng::{self, Rng};

/// How TD targets bootstrap from the next state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TdTarget {
    /// `r + γ max_a' Q_target(s', a')`
    Vanilla,
    /// `r + γ Q_target(s', argmax_a' Q_online(s', a'))`
    Double,
}

/// Where the attacker enters during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingMode {
    Global,
    Local(Cell),
}

impl TrainingMode {
    pub fn entry(&self, cfg: &GameConfig, seed: u64) -> Cell {
        match self {
            TrainingMode::Global => sample_entry(cfg, seed),
            TrainingMode::Local(c) => *c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub episode: usize,
    /// Mean learner utility over the episodes since the previous point.
    pub mean_utility: f64,
    pub epsilon: f64,
}

/// A trained oracle and how it got there.
#[derive(Clone, Debug)]
pub struct TrainedOracle {
    pub net: QNetwork,
    pub side: Side,
    pub curve: Vec<CurvePoint>,
    pub updates: u64,
}

impl TrainedOracle {
    pub fn policy(&self) -> PurePolicy {
        PurePolicy::network(self.net.clone(), self.side).expect("trained net matches its side")
    }
}

fn masked(side: Side, outputs: usize, tools: u32, a: usize) -> bool {
    side == Side::Attacker && outputs == Side::Attacker.num_actions() && tools == 0 && a % 2 == 1
}

/// Bootstrapped regression targets for a minibatch. Terminal transitions
/// use the reward alone.
pub fn compute_td_targets(
    batch: &[&Transition],
    online: &QNetwork,
    target: &QNetwork,
    gamma: f64,
    kind: TdTarget,
    side: Side,
) -> Result<Vec<f32>> {
    let mut out = Vec::with_capacity(batch.len());
    for t in batch {
        if t.terminal || gamma == 0.0 {
            out.push(t.reward);
            continue;
        }
        let qt = target.forward(&t.next.data)?;
        let n = qt.len();
        let boot = match kind {
            TdTarget::Vanilla => (0..n)
                .filter(|a| !masked(side, n, t.next_tools, *a))
                .map(|a| qt[a])
                .fold(f32::NEG_INFINITY, f32::max),
            TdTarget::Double => {
                let qo = online.forward(&t.next.data)?;
                qt[greedy_action(
                    &qo,
                    side,
                    if n == Side::Attacker.num_actions() {
                        t.next_tools
                    } else {
                        1
                    },
                )]
            }
        };
        out.push(t.reward + gamma as f32 * boot);
    }
    Ok(out)
}

/// Draw an index from a weight vector that sums to one.
pub(crate) fn sample_index(weights: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

pub(crate) fn check_opponents(side: Side, opponents: &[(PurePolicy, f64)]) -> Result<()> {
    if opponents.is_empty() {
        return Err(GsgiError::InvalidArgument("opponent list is empty".into()));
    }
    let total: f64 = opponents.iter().map(|(_, w)| *w).sum();
    if opponents.iter().any(|(_, w)| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(GsgiError::InvalidArgument(
            "opponent weights must form a distribution".into(),
        ));
    }
    if opponents.iter().any(|(p, _)| p.side() != side.opponent()) {
        return Err(GsgiError::InvalidArgument(format!(
            "opponents must play the {}",
            side.opponent()
        )));
    }
    Ok(())
}

fn decode(side: Side, learner: usize, other: usize) -> (Move, AttackerAction) {
    let (d, a) = match side {
        Side::Defender => (learner, other),
        Side::Attacker => (other, learner),
    };
    (
        Move::from_index(d).expect("defender action"),
        AttackerAction::from_index(a).expect("attacker action"),
    )
}

/// Runs the game forward with the learner standing still, returning the
/// learner's discounted remaining reward. Used once the attacker learner has
/// been caught or gone home but his tools can still fire.
#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_passively(
    cfg: &GameConfig,
    state: &mut GameState,
    side: Side,
    opponent: &PurePolicy,
    opp_state: &mut PolicyState,
    gamma: f64,
    opp_rng: &mut Rng,
    triggers: &mut Rng,
) -> Result<f64> {
    let mut tail = 0.0;
    let mut discount = 1.0;
    while !state.terminal {
        discount *= gamma;
        let other = opponent.act(&state.observation(cfg, side.opponent()), opp_state, opp_rng)?;
        let idle = match side {
            Side::Defender => Move::Stay.index(),
            Side::Attacker => AttackerAction::new(Move::Stay, false).index(),
        };
        let (d, a) = decode(side, idle, other);
        let ev = state.step(cfg, d, a, triggers)?;
        tail += discount * side.sign() * ev.defender_reward;
    }
    Ok(tail)
}

fn learner_tools(state: &GameState, side: Side) -> u32 {
    match side {
        Side::Defender => 0,
        Side::Attacker => state.tools_remaining,
    }
}

struct CurveAccumulator {
    every: usize,
    sum: f64,
    count: usize,
    points: Vec<CurvePoint>,
}

impl CurveAccumulator {
    fn new(every: usize) -> Self {
        CurveAccumulator {
            every,
            sum: 0.0,
            count: 0,
            points: Vec::new(),
        }
    }

    fn record(&mut self, episode: usize, utility: f64, epsilon: f64) {
        self.sum += utility;
        self.count += 1;
        if (episode + 1).is_multiple_of(self.every) {
            self.points.push(CurvePoint {
                episode: episode + 1,
                mean_utility: self.sum / self.count as f64,
                epsilon,
            });
            self.sum = 0.0;
            self.count = 0;
        }
    }
}

/// Train a DQN best response for `side` against a mixture of frozen
/// opponents. One opponent is drawn per episode; one minibatch update runs
/// per environment step once the buffer holds a full batch, and the target
/// network is refreshed every `target_update_steps` updates.
pub fn train_dqn_best_response(
    cfg: &GameConfig,
    side: Side,
    opponents: &[(PurePolicy, f64)],
    training: &TrainingConfig,
    mode: TrainingMode,
) -> Result<TrainedOracle> {
    training.validate()?;
    check_opponents(side, opponents)?;
    if training.variant == Variant::ActorCritic {
        return super::actor_critic::train_actor_critic(cfg, side, opponents, training, mode);
    }
    if cfg.rows() != cfg.cols() {
        return Err(GsgiError::Dimensions("networks need a square grid".into()));
    }
    let (head, kind) = match training.variant {
        Variant::Vanilla => (Head::SingleQ, TdTarget::Vanilla),
        Variant::VanillaDouble => (Head::SingleQ, TdTarget::Double),
        _ => (Head::Dueling, TdTarget::Double),
    };
    let seed = training.seed;
    let outputs = side.num_actions();
    let mut online = QNetwork::build(cfg.rows(), head, outputs, rng::derive_seed(seed, "init", 0))?;
    let mut target = online.clone();
    let mut adam = AdamState::new(online.num_params());
    let mut buffer = ReplayBuffer::new(training.buffer_capacity);
    let mut explore = rng::stream(seed, "train-explore", 0);
    let mut batch_rng = rng::stream(seed, "train-batch", 0);
    let mut pick_rng = rng::stream(seed, "train-opponent", 0);
    let weights: Vec<f64> = opponents.iter().map(|(_, w)| *w).collect();
    let mut grads = online.zero_gradients();
    let mut updates = 0u64;
    let mut curve = CurveAccumulator::new(training.curve_every);

    for episode in 0..training.episodes {
        let eps = training.epsilon.at(episode);
        let ep_seed = rng::derive_seed(seed, "train-episode", episode as u64);
        let opponent = &opponents[sample_index(&weights, &mut pick_rng)].0;
        let mut opp_rng = rng::stream(ep_seed, "opponent", 0);
        let mut triggers = rng::stream(ep_seed, "triggers", 0);
        let mut opp_state = PolicyState::Fresh;
        let mut state = GameState::initial(cfg, mode.entry(cfg, ep_seed));
        let mut s = encode_state(&state.observation(cfg, side));

        while !state.terminal {
            let tools = learner_tools(&state, side);
            let a = if explore.gen::<f64>() < eps {
                let n = if side == Side::Attacker && tools == 0 {
                    5
                } else {
                    outputs
                };
                let i = explore.gen_range(0..n);
                if n == 5 && side == Side::Attacker {
                    i * 2
                } else {
                    i
                }
            } else {
                greedy_action(&online.forward(&s.data)?, side, tools)
            };
            let other = opponent.act(&state.observation(cfg, side.opponent()), &mut opp_state, &mut opp_rng)?;
            let (d, att) = decode(side, a, other);
            let ev = state.step(cfg, d, att, &mut triggers)?;
            let mut r = side.sign() * ev.defender_reward;
            let retired = side == Side::Attacker && !state.attacker_active();
            if retired && !state.terminal {
                r += finish_passively(
                    cfg,
                    &mut state,
                    side,
                    opponent,
                    &mut opp_state,
                    training.gamma,
                    &mut opp_rng,
                    &mut triggers,
                )?;
            }
            let next = encode_state(&state.observation(cfg, side));
            buffer.push(Transition {
                state: std::mem::replace(&mut s, next.clone()),
                action: a,
                reward: r as f32,
                next,
                next_tools: learner_tools(&state, side),
                terminal: state.terminal,
            });

            if buffer.len() >= training.batch {
                let batch = buffer.sample(training.batch, &mut batch_rng);
                let targets = compute_td_targets(&batch, &online, &target, training.gamma, kind, side)?;
                grads.clear();
                let scale = 1.0 / batch.len() as f32;
                let mut out_grad = vec![0.0f32; outputs];
                for (t, y) in batch.iter().zip(&targets) {
                    let cache = online.forward_cached(&t.state.data)?;
                    out_grad.iter_mut().for_each(|g| *g = 0.0);
                    out_grad[t.action] = (cache.output()[t.action] - y) * scale;
                    online.backward(&cache, &out_grad, &mut grads)?;
                }
                apply_gradients(&mut online, &grads, &mut adam, training.lr)?;
                updates += 1;
                if updates.is_multiple_of(training.target_update_steps) {
                    target = online.clone();
                }
            }
        }
        curve.record(episode, side.sign() * state.cumulative_defender_reward, eps);
    }
    Ok(TrainedOracle {
        net: online,
        side,
        curve: curve.points,
        updates,
    })
}

/// Write a learning curve as CSV.
pub fn write_curve_csv<W: Write>(w: W, curve: &[CurvePoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in curve {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{MapKind, StateTensor};
    use crate::nn::{LayerSpec, NetworkSpec};
    use crate::policies::HeuristicAttackerParams;

    fn constant_net(q: [f32; 2]) -> QNetwork {
        let spec = NetworkSpec::new(1, 1, 1, vec![LayerSpec::Flatten], Head::SingleQ, 2).unwrap();
        let mut n = QNetwork::zeros(spec).unwrap();
        n.set_params(&[0.0, 0.0, q[0], q[1]]).unwrap();
        n
    }

    fn toy(reward: f32, terminal: bool) -> Transition {
        Transition {
            state: StateTensor {
                rows: 1,
                cols: 1,
                data: vec![0.0],
            },
            action: 0,
            reward,
            next: StateTensor {
                rows: 1,
                cols: 1,
                data: vec![0.0],
            },
            next_tools: 0,
            terminal,
        }
    }

    #[test]
    fn double_and_vanilla_targets_by_hand() {
        let online = constant_net([1.0, 3.0]);
        let target = constant_net([5.0, 2.0]);
        let t = toy(1.0, false);
        let d = compute_td_targets(&[&t], &online, &target, 0.9, TdTarget::Double, Side::Defender).unwrap();
        let v = compute_td_targets(&[&t], &online, &target, 0.9, TdTarget::Vanilla, Side::Defender).unwrap();
        assert!((d[0] - 2.8).abs() < 1e-6);
        assert!((v[0] - 5.5).abs() < 1e-6);
        assert!(d[0] <= v[0]);
    }

    #[test]
    fn terminal_and_zero_gamma_use_reward() {
        let online = constant_net([1.0, 3.0]);
        let target = constant_net([5.0, 2.0]);
        let t = toy(-2.0, true);
        for kind in [TdTarget::Double, TdTarget::Vanilla] {
            assert_eq!(
                compute_td_targets(&[&t], &online, &target, 0.99, kind, Side::Defender).unwrap(),
                vec![-2.0]
            );
            let live = toy(0.5, false);
            assert_eq!(
                compute_td_targets(&[&live], &online, &target, 0.0, kind, Side::Defender).unwrap(),
                vec![0.5]
            );
        }
    }

    fn short_training(seed: u64) -> TrainingConfig {
        let mut t = TrainingConfig::desk(3, seed);
        t.episodes = 60;
        t.curve_every = 20;
        t.target_update_steps = 50;
        t
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = GameConfig::preset(3, MapKind::Uniform, 1).unwrap();
        let opp = vec![(PurePolicy::HeuristicAttacker(HeuristicAttackerParams::default()), 1.0)];
        let a = train_dqn_best_response(&cfg, Side::Defender, &opp, &short_training(4), TrainingMode::Global).unwrap();
        let b = train_dqn_best_response(&cfg, Side::Defender, &opp, &short_training(4), TrainingMode::Global).unwrap();
        assert_eq!(a.net, b.net);
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.curve.len(), 3);
        assert!(a.updates > 0);
    }

    #[test]
    fn attacker_training_runs_in_local_mode() {
        let cfg = GameConfig::preset(3, MapKind::Uniform, 1).unwrap();
        let opp = vec![
            (PurePolicy::RandomSweep, 0.5),
            (PurePolicy::Stationary(Side::Defender), 0.5),
        ];
        let mode = TrainingMode::Local(cfg.entry_points[2]);
        let o = train_dqn_best_response(&cfg, Side::Attacker, &opp, &short_training(2), mode).unwrap();
        assert_eq!(o.net.spec().outputs, 10);
    }

    #[test]
    fn rejects_bad_opponents() {
        let cfg = GameConfig::preset(3, MapKind::Uniform, 1).unwrap();
        let t = short_training(0);
        assert!(train_dqn_best_response(&cfg, Side::Defender, &[], &t, TrainingMode::Global).is_err());
        let wrong = vec![(PurePolicy::RandomSweep, 1.0)];
        assert!(train_dqn_best_response(&cfg, Side::Defender, &wrong, &t, TrainingMode::Global).is_err());
    }
}
