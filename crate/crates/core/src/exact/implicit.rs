//! Exact evaluation against simulator policies without materializing the
//! game tree: beliefs are lists of concrete states grouped by the searching
//! player's observation history, the same partition the explicit tree uses.

use std::collections::BTreeMap;

use serde::Serialize;

use super::tree::{attacker_action_at, attacker_actions, info_token};
use crate::error::{GsgiError, Result};
use crate::game::{AttackerAction, GameConfig, GameState, Move, Side};
use crate::policies::{PolicyState, PurePolicy};

#[derive(Clone)]
struct Member {
    state: GameState,
    reach: f64,
    opp: PolicyState,
    /// Index of the opponent mixture component this history plays against.
    comp: usize,
}

struct Search<'a> {
    cfg: &'a GameConfig,
    opponents: &'a [(PurePolicy, f64)],
    side: Side,
    infosets: u64,
    /// Alternating observation tokens and own actions leading to the
    /// info set being solved.
    path: Vec<u32>,
    policy: Vec<InfoSetAction>,
}

fn idle(side: Side) -> usize {
    match side {
        Side::Defender => Move::Stay.index(),
        Side::Attacker => AttackerAction::new(Move::Stay, false).index(),
    }
}

impl Search<'_> {
    fn decides(&self, s: &GameState) -> bool {
        self.side == Side::Defender || s.attacker_active()
    }

    fn num_actions(&self, s: &GameState) -> usize {
        match self.side {
            Side::Defender => 5,
            Side::Attacker => attacker_actions(s),
        }
    }

    /// Play one step from `m` with the searching player's action `own`
    /// (a legal-action position) and route the results.
    fn step(&self, m: &Member, own: usize, total: &mut f64, frontier: &mut BTreeMap<u32, Vec<Member>>) -> Result<()> {
        let cfg = self.cfg;
        let s = &m.state;
        let obs = s.observation(cfg, self.side.opponent());
        for b in self.opponents[m.comp].0.branches(&obs, &m.opp)? {
            if b.prob <= 0.0 {
                continue;
            }
            let (d, a) = match self.side {
                Side::Defender => (
                    Move::from_index(own).expect("move"),
                    AttackerAction::from_index(b.action).expect("attacker action"),
                ),
                Side::Attacker => {
                    let a = if s.attacker_active() {
                        attacker_action_at(s.tools_remaining, own)
                    } else {
                        AttackerAction::new(Move::Stay, false)
                    };
                    (Move::from_index(b.action).expect("move"), a)
                }
            };
            let mut mid = s.clone();
            let pending = mid.begin_step(cfg, d, a)?;
            for (q, mask) in mid.trigger_outcomes(cfg) {
                let mut next = mid.clone();
                next.finish_step(cfg, pending, mask);
                let reach = m.reach * b.prob * q;
                let member = Member {
                    state: next,
                    reach,
                    opp: b.next,
                    comp: m.comp,
                };
                self.route(member, total, frontier)?;
            }
        }
        Ok(())
    }

    fn route(&self, m: Member, total: &mut f64, frontier: &mut BTreeMap<u32, Vec<Member>>) -> Result<()> {
        if m.state.terminal || m.state.t >= self.cfg.horizon {
            *total += m.reach * self.side.sign() * m.state.cumulative_defender_reward;
        } else if self.decides(&m.state) {
            frontier
                .entry(info_token(self.cfg, &m.state, self.side))
                .or_default()
                .push(m);
        } else {
            self.step(&m, idle(self.side), total, frontier)?;
        }
        Ok(())
    }

    fn frontier_value(&mut self, frontier: BTreeMap<u32, Vec<Member>>) -> Result<f64> {
        let mut v = 0.0;
        for (token, members) in frontier {
            self.path.push(token);
            v += self.solve(&members)?;
            self.path.pop();
        }
        Ok(v)
    }

    fn solve(&mut self, members: &[Member]) -> Result<f64> {
        self.infosets += 1;
        let n = self.num_actions(&members[0].state);
        let mut best = (f64::NEG_INFINITY, 0);
        for a in 0..n {
            let mut total = 0.0;
            let mut frontier = BTreeMap::new();
            for m in members {
                self.step(m, a, &mut total, &mut frontier)?;
            }
            self.path.push(a as u32);
            let v = total + self.frontier_value(frontier)?;
            self.path.pop();
            if v > best.0 {
                best = (v, a);
            }
        }
        self.policy.push(InfoSetAction {
            history: self.path.clone(),
            action: best.1,
        });
        Ok(best.0)
    }
}

/// Chosen action at one info set, identified by the alternating
/// observation tokens and own actions that reach it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InfoSetAction {
    pub history: Vec<u32>,
    pub action: usize,
}

/// Value of an exact best response against a fixed policy, with the
/// response itself.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyBestResponse {
    /// In the searching player's utility.
    pub value: f64,
    pub infosets: u64,
    pub policy: Vec<InfoSetAction>,
}

/// Exact best response of `side` against a simulator policy. Entries are
/// uniform over the configured set; the attacker knows his entry, the
/// defender does not.
pub fn policy_best_response(cfg: &GameConfig, opponent: &PurePolicy, side: Side) -> Result<PolicyBestResponse> {
    mixture_best_response(cfg, &[(opponent.clone(), 1.0)], side)
}

/// Exact best response of `side` against a mixture of simulator policies,
/// one drawn per episode and unknown to the searching player.
pub fn mixture_best_response(
    cfg: &GameConfig,
    opponents: &[(PurePolicy, f64)],
    side: Side,
) -> Result<PolicyBestResponse> {
    if opponents.is_empty() {
        return Err(GsgiError::InvalidArgument("empty opponent mixture".into()));
    }
    if opponents.iter().any(|(p, _)| p.side() != side.opponent()) {
        return Err(GsgiError::InvalidArgument(
            "opponent policy plays the searching side".into(),
        ));
    }
    let total: f64 = opponents.iter().map(|(_, w)| *w).sum();
    if opponents.iter().any(|(_, w)| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(GsgiError::InvalidArgument(
            "opponent weights must form a distribution".into(),
        ));
    }
    let mut s = Search {
        cfg,
        opponents,
        side,
        infosets: 0,
        path: Vec::new(),
        policy: Vec::new(),
    };
    let p = 1.0 / cfg.entry_points.len() as f64;
    let mut frontier: BTreeMap<u32, Vec<Member>> = BTreeMap::new();
    for (i, e) in cfg.entry_points.iter().enumerate() {
        for (comp, (_, w)) in opponents.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let m = Member {
                state: GameState::initial(cfg, *e),
                reach: p * w,
                opp: PolicyState::Fresh,
                comp,
            };
            if side == Side::Attacker {
                // one root info set per entry
                frontier.entry(u32::MAX - i as u32).or_default().push(m);
            } else {
                frontier.entry(0).or_default().push(m);
            }
        }
    }
    let value = s.frontier_value(frontier)?;
    Ok(PolicyBestResponse {
        value,
        infosets: s.infosets,
        policy: s.policy,
    })
}

/// Exact expected defender utility of two policies, summing over every
/// policy branch and trigger outcome.
pub fn exact_policy_value(cfg: &GameConfig, defender: &PurePolicy, attacker: &PurePolicy) -> Result<f64> {
    if defender.side() != Side::Defender || attacker.side() != Side::Attacker {
        return Err(GsgiError::InvalidArgument("policies passed for the wrong sides".into()));
    }
    fn go(
        cfg: &GameConfig,
        s: &GameState,
        ds: PolicyState,
        as_: PolicyState,
        d: &PurePolicy,
        a: &PurePolicy,
    ) -> Result<f64> {
        if s.terminal || s.t >= cfg.horizon {
            return Ok(s.cumulative_defender_reward);
        }
        let mut v = 0.0;
        let db = d.branches(&s.observation(cfg, Side::Defender), &ds)?;
        let ab = a.branches(&s.observation(cfg, Side::Attacker), &as_)?;
        for x in &db {
            for y in &ab {
                let p = x.prob * y.prob;
                if p <= 0.0 {
                    continue;
                }
                let mut mid = s.clone();
                let pending = mid.begin_step(
                    cfg,
                    Move::from_index(x.action).expect("move"),
                    AttackerAction::from_index(y.action).expect("attacker action"),
                )?;
                for (q, mask) in mid.trigger_outcomes(cfg) {
                    let mut next = mid.clone();
                    next.finish_step(cfg, pending, mask);
                    v += p * q * go(cfg, &next, x.next, y.next, d, a)?;
                }
            }
        }
        Ok(v)
    }
    let p = 1.0 / cfg.entry_points.len() as f64;
    let mut v = 0.0;
    for e in &cfg.entry_points {
        v += p * go(
            cfg,
            &GameState::initial(cfg, *e),
            PolicyState::Fresh,
            PolicyState::Fresh,
            defender,
            attacker,
        )?;
    }
    Ok(v)
}
