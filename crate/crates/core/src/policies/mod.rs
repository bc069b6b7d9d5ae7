//! Closed-form and network-backed pure strategies.

mod grid_search;
mod heuristic;
mod sweep;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

pub use grid_search::{grid_search_defender_params, write_grid_search_csv, GridPoint, GridSearchResult, GridSpec};
pub use heuristic::{
    direction_features, heuristic_move_distribution, snare_placement_probability, DirectionFeatures,
    HeuristicAttackerParams, HeuristicDefenderParams,
};
pub use sweep::{boundary_move, chase_moves, patrol_move, random_sweep_moves, Edge, SweepState};

use crate::error::{GsgiError, Result};
use crate::game::{encode_state, AttackerAction, Move, Observation, Side};
use crate::nn::{Head, QNetwork};

/// Per-episode memory of a pure strategy. Only the random sweep uses it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PolicyState {
    #[default]
    Fresh,
    Sweep(SweepState),
}

/// One outcome of a policy's randomization at a decision point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branch {
    pub prob: f64,
    pub action: usize,
    pub next: PolicyState,
}

pub type Branches = SmallVec<[Branch; 10]>;

/// A fixed behavioral strategy for one side.
#[derive(Clone)]
pub enum PurePolicy {
    HeuristicAttacker(HeuristicAttackerParams),
    HeuristicDefender(HeuristicDefenderParams),
    RandomSweep,
    /// Greedy in the network's outputs (or sampling them for a softmax head).
    Network {
        net: Arc<QNetwork>,
        side: Side,
    },
    UniformRandom(Side),
    /// Always stays put and never places a tool.
    Stationary(Side),
}

impl fmt::Debug for PurePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PurePolicy::HeuristicAttacker(p) => write!(f, "HeuristicAttacker({p:?})"),
            PurePolicy::HeuristicDefender(p) => write!(f, "HeuristicDefender({p:?})"),
            PurePolicy::RandomSweep => write!(f, "RandomSweep"),
            PurePolicy::Network { side, net } => write!(f, "Network({side}, {} params)", net.num_params()),
            PurePolicy::UniformRandom(s) => write!(f, "UniformRandom({s})"),
            PurePolicy::Stationary(s) => write!(f, "Stationary({s})"),
        }
    }
}

/// Index of the best output, restricted to actions that are meaningful:
/// an attacker without tools only considers non-placing actions.
pub fn greedy_action(q: &[f32], side: Side, tools_remaining: u32) -> usize {
    let mut best = 0usize;
    let mut best_q = f32::NEG_INFINITY;
    for (i, v) in q.iter().enumerate() {
        if side == Side::Attacker && tools_remaining == 0 && i % 2 == 1 {
            continue;
        }
        if *v > best_q {
            best = i;
            best_q = *v;
        }
    }
    best
}

fn single(action: usize, next: PolicyState) -> Branches {
    let mut b = Branches::new();
    b.push(Branch {
        prob: 1.0,
        action,
        next,
    });
    b
}

impl PurePolicy {
    pub fn side(&self) -> Side {
        match self {
            PurePolicy::HeuristicAttacker(_) => Side::Attacker,
            PurePolicy::HeuristicDefender(_) | PurePolicy::RandomSweep => Side::Defender,
            PurePolicy::Network { side, .. } | PurePolicy::UniformRandom(side) | PurePolicy::Stationary(side) => *side,
        }
    }

    pub fn network(net: QNetwork, side: Side) -> Result<Self> {
        if net.spec().outputs != side.num_actions() {
            return Err(GsgiError::Shape(format!(
                "{side} network needs {} outputs, has {}",
                side.num_actions(),
                net.spec().outputs
            )));
        }
        Ok(PurePolicy::Network {
            net: Arc::new(net),
            side,
        })
    }

    /// Every action the policy may take next, with its probability and the
    /// policy state it leads to. Probabilities sum to one. An attacker
    /// without tools never places; an inactive attacker stays.
    pub fn branches(&self, obs: &Observation<'_>, state: &PolicyState) -> Result<Branches> {
        let side = self.side();
        if side != obs.side {
            return Err(GsgiError::InvalidArgument(format!(
                "{side} policy asked to act as {}",
                obs.side
            )));
        }
        if side == Side::Attacker && !obs.active {
            return Ok(single(AttackerAction::new(Move::Stay, false).index(), *state));
        }
        let mut out = Branches::new();
        match self {
            PurePolicy::HeuristicAttacker(p) => {
                let moves = heuristic_move_distribution(&direction_features(obs), p.w_p, p.w_i, p.w_o)?;
                let place = snare_placement_probability(obs, p.tau);
                for mv in Move::ALL {
                    for (flag, q) in [(false, 1.0 - place), (true, place)] {
                        if q > 0.0 {
                            out.push(Branch {
                                prob: moves[mv.index()] * q,
                                action: AttackerAction::new(mv, flag).index(),
                                next: *state,
                            });
                        }
                    }
                }
            }
            PurePolicy::HeuristicDefender(p) => {
                let moves = heuristic_move_distribution(&direction_features(obs), p.w_p, p.w_i, p.w_o)?;
                for mv in Move::ALL {
                    out.push(Branch {
                        prob: moves[mv.index()],
                        action: mv.index(),
                        next: *state,
                    });
                }
            }
            PurePolicy::RandomSweep => match state {
                PolicyState::Sweep(s) => {
                    for (prob, mv) in random_sweep_moves(obs, *s) {
                        out.push(Branch {
                            prob,
                            action: mv.index(),
                            next: *state,
                        });
                    }
                }
                PolicyState::Fresh => {
                    for edge in Edge::ALL {
                        for clockwise in [true, false] {
                            let s = SweepState { edge, clockwise };
                            for (prob, mv) in random_sweep_moves(obs, s) {
                                out.push(Branch {
                                    prob: prob / 8.0,
                                    action: mv.index(),
                                    next: PolicyState::Sweep(s),
                                });
                            }
                        }
                    }
                }
            },
            PurePolicy::Network { net, .. } => {
                let input = encode_state(obs);
                let q = net.forward(&input.data)?;
                if net.spec().head == Head::PolicySoftmax {
                    let mask = side == Side::Attacker && obs.tools_remaining == 0;
                    let total: f64 = q
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| !(mask && i % 2 == 1))
                        .map(|(_, v)| *v as f64)
                        .sum();
                    for (i, v) in q.iter().enumerate() {
                        if !(mask && i % 2 == 1) {
                            out.push(Branch {
                                prob: *v as f64 / total,
                                action: i,
                                next: *state,
                            });
                        }
                    }
                } else {
                    return Ok(single(greedy_action(&q, side, obs.tools_remaining), *state));
                }
            }
            PurePolicy::UniformRandom(_) => {
                let n = if side == Side::Attacker && obs.tools_remaining == 0 {
                    5
                } else {
                    side.num_actions()
                };
                for i in 0..n {
                    let action = if side == Side::Attacker && n == 5 { i * 2 } else { i };
                    out.push(Branch {
                        prob: 1.0 / n as f64,
                        action,
                        next: *state,
                    });
                }
            }
            PurePolicy::Stationary(_) => {
                let action = match side {
                    Side::Defender => Move::Stay.index(),
                    Side::Attacker => AttackerAction::new(Move::Stay, false).index(),
                };
                return Ok(single(action, *state));
            }
        }
        Ok(out)
    }

    /// Sample an action and advance the policy state.
    pub fn act<R: rand::Rng + ?Sized>(
        &self,
        obs: &Observation<'_>,
        state: &mut PolicyState,
        rng: &mut R,
    ) -> Result<usize> {
        let branches = self.branches(obs, state)?;
        let chosen = if branches.len() == 1 {
            branches[0]
        } else {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = branches[branches.len() - 1];
            for b in &branches {
                acc += b.prob;
                if u < acc {
                    pick = *b;
                    break;
                }
            }
            pick
        };
        *state = chosen.next;
        Ok(chosen.action)
    }
}

/// A pure strategy registered under a stable identifier.
#[derive(Clone, Debug)]
pub struct Strategy {
    pub id: String,
    pub policy: PurePolicy,
}

impl Strategy {
    pub fn new(id: impl Into<String>, policy: PurePolicy) -> Self {
        Strategy { id: id.into(), policy }
    }
}

/// Serializable description of a pure strategy. Network policies refer to a
/// checkpoint file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyDescriptor {
    HeuristicAttacker { params: HeuristicAttackerParams },
    HeuristicDefender { params: HeuristicDefenderParams },
    RandomSweep,
    Network { side: Side, checkpoint: String },
    UniformRandom { side: Side },
    Stationary { side: Side },
}

impl PolicyDescriptor {
    /// Build the policy; checkpoint paths are resolved against `base`.
    pub fn load(&self, base: &std::path::Path) -> Result<PurePolicy> {
        Ok(match self {
            PolicyDescriptor::HeuristicAttacker { params } => {
                params.validate()?;
                PurePolicy::HeuristicAttacker(*params)
            }
            PolicyDescriptor::HeuristicDefender { params } => PurePolicy::HeuristicDefender(*params),
            PolicyDescriptor::RandomSweep => PurePolicy::RandomSweep,
            PolicyDescriptor::Network { side, checkpoint } => {
                PurePolicy::network(crate::nn::load_checkpoint(&base.join(checkpoint))?, *side)?
            }
            PolicyDescriptor::UniformRandom { side } => PurePolicy::UniformRandom(*side),
            PolicyDescriptor::Stationary { side } => PurePolicy::Stationary(*side),
        })
    }
}
