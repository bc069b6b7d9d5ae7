use rand::Rng as _;

use super::config::TrainingConfig;
use super::dqn::{check_opponents, finish_passively, sample_index, TrainedOracle, TrainingMode};
use crate::error::{GsgiError, Result};
use crate::game::{encode_state, AttackerAction, GameConfig, GameState, Move, Side, StateTensor};
use crate::nn::{apply_gradients, AdamState, Gradients, Head, QNetwork};
use crate::policies::PolicyState;
use crate::rng;

/// One on-policy step of the learner.
#[derive(Clone, Debug, PartialEq)]
pub struct AcStep {
    pub state: StateTensor,
    pub action: usize,
    pub reward: f64,
    pub next: StateTensor,
    pub terminal: bool,
}

/// Gradients of the actor and critic losses over a trajectory.
#[derive(Clone, Debug)]
pub struct AcGradients {
    pub policy: Gradients<f32>,
    pub value: Gradients<f32>,
    pub advantages: Vec<f64>,
}

/// Actor loss `-Σ log π(a|s) Â` with `Â = r + γV(s') - V(s)` (or `r - V(s)`
/// at the end), critic loss `½ Σ (V(s) - r - γV(s'))²` with the target held
/// fixed.
pub fn actor_critic_gradients(
    policy: &QNetwork,
    value: &QNetwork,
    trajectory: &[AcStep],
    gamma: f64,
) -> Result<AcGradients> {
    if policy.spec().head != Head::PolicySoftmax || value.spec().head != Head::ScalarValue {
        return Err(GsgiError::Shape(
            "actor-critic needs a softmax policy and a scalar value net".into(),
        ));
    }
    let mut gp = policy.zero_gradients();
    let mut gv = value.zero_gradients();
    let mut advantages = Vec::with_capacity(trajectory.len());
    for step in trajectory {
        let vc = value.forward_cached(&step.state.data)?;
        let v = vc.output()[0] as f64;
        let target = if step.terminal {
            step.reward
        } else {
            step.reward + gamma * value.forward(&step.next.data)?[0] as f64
        };
        let adv = target - v;
        if !adv.is_finite() {
            return Err(GsgiError::NonFinite("advantage".into()));
        }
        advantages.push(adv);
        value.backward(&vc, &[(v - target) as f32], &mut gv)?;

        let pc = policy.forward_cached(&step.state.data)?;
        let logit_grad: Vec<f32> = pc
            .output()
            .iter()
            .enumerate()
            .map(|(i, p)| adv as f32 * (p - if i == step.action { 1.0 } else { 0.0 }))
            .collect();
        policy.backward_logits(&pc, &logit_grad, &mut gp)?;
    }
    Ok(AcGradients {
        policy: gp,
        value: gv,
        advantages,
    })
}

/// Optimizer state of both networks.
#[derive(Clone, Debug)]
pub struct AcOptimizer {
    pub policy: AdamState,
    pub value: AdamState,
    pub policy_lr: f64,
    pub value_lr: f64,
}

/// One actor-critic step on a trajectory; returns the advantages used.
pub fn actor_critic_update(
    policy: &mut QNetwork,
    value: &mut QNetwork,
    trajectory: &[AcStep],
    gamma: f64,
    opt: &mut AcOptimizer,
) -> Result<Vec<f64>> {
    let g = actor_critic_gradients(policy, value, trajectory, gamma)?;
    apply_gradients(policy, &g.policy, &mut opt.policy, opt.policy_lr)?;
    apply_gradients(value, &g.value, &mut opt.value, opt.value_lr)?;
    Ok(g.advantages)
}

/// On-policy actor-critic training with one update per episode.
pub fn train_actor_critic(
    cfg: &GameConfig,
    side: Side,
    opponents: &[(crate::policies::PurePolicy, f64)],
    training: &TrainingConfig,
    mode: TrainingMode,
) -> Result<TrainedOracle> {
    training.validate()?;
    check_opponents(side, opponents)?;
    let seed = training.seed;
    let outputs = side.num_actions();
    let mut policy = QNetwork::build(
        cfg.rows(),
        Head::PolicySoftmax,
        outputs,
        rng::derive_seed(seed, "init", 0),
    )?;
    let mut value = QNetwork::build(
        cfg.rows(),
        Head::ScalarValue,
        1,
        rng::derive_seed(seed, "init-value", 0),
    )?;
    let mut opt = AcOptimizer {
        policy: AdamState::new(policy.num_params()),
        value: AdamState::new(value.num_params()),
        policy_lr: training.lr,
        value_lr: training.value_lr,
    };
    let mut act_rng = rng::stream(seed, "train-explore", 0);
    let mut pick_rng = rng::stream(seed, "train-opponent", 0);
    let weights: Vec<f64> = opponents.iter().map(|(_, w)| *w).collect();
    let mut curve = Vec::new();
    let (mut sum, mut count) = (0.0, 0usize);
    let mut updates = 0;

    for episode in 0..training.episodes {
        let ep_seed = rng::derive_seed(seed, "train-episode", episode as u64);
        let opponent = &opponents[sample_index(&weights, &mut pick_rng)].0;
        let mut opp_rng = rng::stream(ep_seed, "opponent", 0);
        let mut triggers = rng::stream(ep_seed, "triggers", 0);
        let mut opp_state = PolicyState::Fresh;
        let mut state = GameState::initial(cfg, mode.entry(cfg, ep_seed));
        let mut s = encode_state(&state.observation(cfg, side));
        let mut trajectory = Vec::new();
        while !state.terminal {
            let probs = policy.forward(&s.data)?;
            let no_tools = side == Side::Attacker && state.tools_remaining == 0;
            let allowed = |i: usize| !(no_tools && i % 2 == 1);
            let total: f32 = probs
                .iter()
                .enumerate()
                .filter(|(i, _)| allowed(*i))
                .map(|(_, p)| p)
                .sum();
            let mut u = act_rng.gen::<f32>() * total;
            let mut a = (0..outputs).rev().find(|i| allowed(*i)).unwrap();
            for (i, p) in probs.iter().enumerate() {
                if !allowed(i) {
                    continue;
                }
                if u < *p {
                    a = i;
                    break;
                }
                u -= p;
            }
            let other = opponent.act(&state.observation(cfg, side.opponent()), &mut opp_state, &mut opp_rng)?;
            let (d, att) = match side {
                Side::Defender => (a, other),
                Side::Attacker => (other, a),
            };
            let ev = state.step(
                cfg,
                Move::from_index(d).expect("defender action"),
                AttackerAction::from_index(att).expect("attacker action"),
                &mut triggers,
            )?;
            let mut r = side.sign() * ev.defender_reward;
            if side == Side::Attacker && !state.attacker_active() && !state.terminal {
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
            trajectory.push(AcStep {
                state: std::mem::replace(&mut s, next.clone()),
                action: a,
                reward: r,
                next,
                terminal: state.terminal,
            });
        }
        actor_critic_update(&mut policy, &mut value, &trajectory, training.gamma, &mut opt)?;
        updates += 1;
        sum += side.sign() * state.cumulative_defender_reward;
        count += 1;
        if (episode + 1) % training.curve_every == 0 {
            curve.push(super::dqn::CurvePoint {
                episode: episode + 1,
                mean_utility: sum / count as f64,
                epsilon: 0.0,
            });
            sum = 0.0;
            count = 0;
        }
    }
    Ok(TrainedOracle {
        net: policy,
        side,
        curve,
        updates,
    })
}
