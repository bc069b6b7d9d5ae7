use std::collections::HashMap;

use serde::Serialize;
use smallvec::SmallVec;

use crate::error::{GsgiError, Result};
use crate::game::{AttackerAction, Cell, GameConfig, GameState, Move, PendingStep, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Chance,
    Decision(Side),
    Terminal,
}

const CHANCE: u8 = 0;
const DEFENDER: u8 = 1;
const ATTACKER: u8 = 2;
const TERMINAL: u8 = 3;
const UNSET: u8 = 255;

/// Information set: a player's decision points that share one
/// observation-and-action history.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfoSet {
    pub owner: Side,
    pub num_actions: usize,
    pub members: Vec<u32>,
}

/// Arena-stored extensive-form game. Children of a node are contiguous;
/// decision children are ordered by action index and chance children carry
/// probabilities. Utilities are the defender's.
#[derive(Clone, Debug, Default)]
pub struct GameTree {
    kind: Vec<u8>,
    num_children: Vec<u8>,
    first_child: Vec<u32>,
    /// Info-set index (decision), offset into `chance_probs` (chance) or
    /// into `utilities` (terminal).
    aux: Vec<u32>,
    chance_probs: Vec<f64>,
    utilities: Vec<f64>,
    infosets: [Vec<InfoSet>; 2],
}

fn side_index(s: Side) -> usize {
    match s {
        Side::Defender => 0,
        Side::Attacker => 1,
    }
}

/// Node and info-set totals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TreeStats {
    pub nodes: u64,
    pub terminals: u64,
    pub chance_nodes: u64,
    pub defender_nodes: u64,
    pub attacker_nodes: u64,
    pub defender_infosets: u64,
    pub attacker_infosets: u64,
    pub bytes: u64,
}

impl GameTree {
    pub const ROOT: u32 = 0;

    pub fn num_nodes(&self) -> usize {
        self.kind.len()
    }

    pub fn kind(&self, n: u32) -> NodeKind {
        match self.kind[n as usize] {
            CHANCE => NodeKind::Chance,
            DEFENDER => NodeKind::Decision(Side::Defender),
            ATTACKER => NodeKind::Decision(Side::Attacker),
            TERMINAL => NodeKind::Terminal,
            _ => unreachable!("node {n} was never filled"),
        }
    }

    pub fn children(&self, n: u32) -> std::ops::Range<u32> {
        let f = self.first_child[n as usize];
        f..f + self.num_children[n as usize] as u32
    }

    pub fn child(&self, n: u32, i: usize) -> u32 {
        self.first_child[n as usize] + i as u32
    }

    pub fn num_children(&self, n: u32) -> usize {
        self.num_children[n as usize] as usize
    }

    /// Probabilities of a chance node's children.
    pub fn chance_probs(&self, n: u32) -> &[f64] {
        debug_assert_eq!(self.kind[n as usize], CHANCE);
        let o = self.aux[n as usize] as usize;
        &self.chance_probs[o..o + self.num_children(n)]
    }

    pub fn utility(&self, n: u32) -> f64 {
        debug_assert_eq!(self.kind[n as usize], TERMINAL);
        self.utilities[self.aux[n as usize] as usize]
    }

    /// Info-set index of a decision node within its owner's list.
    pub fn infoset_of(&self, n: u32) -> usize {
        self.aux[n as usize] as usize
    }

    pub fn infosets(&self, side: Side) -> &[InfoSet] {
        &self.infosets[side_index(side)]
    }

    pub fn stats(&self) -> TreeStats {
        let count = |k: u8| self.kind.iter().filter(|x| **x == k).count() as u64;
        TreeStats {
            nodes: self.kind.len() as u64,
            terminals: count(TERMINAL),
            chance_nodes: count(CHANCE),
            defender_nodes: count(DEFENDER),
            attacker_nodes: count(ATTACKER),
            defender_infosets: self.infosets[0].len() as u64,
            attacker_infosets: self.infosets[1].len() as u64,
            bytes: self.heap_bytes(),
        }
    }

    /// Heap memory held by the tree.
    pub fn heap_bytes(&self) -> u64 {
        let members: usize = self
            .infosets
            .iter()
            .flatten()
            .map(|i| i.members.capacity() * 4 + 48)
            .sum();
        (self.kind.capacity() * 2
            + self.first_child.capacity() * 4
            + self.aux.capacity() * 4
            + self.chance_probs.capacity() * 8
            + self.utilities.capacity() * 8
            + members) as u64
    }
}

/// Incremental construction: reserve a node, then fill it as chance,
/// decision or terminal, which reserves its children.
#[derive(Debug, Default)]
pub struct TreeBuilder {
    tree: GameTree,
    keys: [HashMap<u64, u32>; 2],
}

impl TreeBuilder {
    /// A builder holding only the unfilled root.
    pub fn new() -> Self {
        let mut b = TreeBuilder::default();
        b.reserve(1);
        b
    }

    pub fn with_capacity(nodes: usize) -> Self {
        let mut b = TreeBuilder::default();
        let t = &mut b.tree;
        t.kind.reserve_exact(nodes);
        t.num_children.reserve_exact(nodes);
        t.first_child.reserve_exact(nodes);
        t.aux.reserve_exact(nodes);
        b.reserve(1);
        b
    }

    fn reserve(&mut self, n: usize) -> u32 {
        let t = &mut self.tree;
        let first = t.kind.len() as u32;
        t.kind.extend(std::iter::repeat_n(UNSET, n));
        t.num_children.extend(std::iter::repeat_n(0, n));
        t.first_child.extend(std::iter::repeat_n(0, n));
        t.aux.extend(std::iter::repeat_n(0, n));
        first
    }

    fn check(&self, node: u32) -> Result<()> {
        match self.tree.kind.get(node as usize) {
            Some(&UNSET) => Ok(()),
            _ => Err(GsgiError::InvalidArgument(format!("node {node} is not an open slot"))),
        }
    }

    /// Make `node` a chance node; returns the first child.
    pub fn chance(&mut self, node: u32, probs: &[f64]) -> Result<u32> {
        self.check(node)?;
        let s: f64 = probs.iter().sum();
        if probs.is_empty() || probs.len() > 255 || probs.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > 1e-9 {
            return Err(GsgiError::InvalidArgument(format!("bad chance distribution {probs:?}")));
        }
        let first = self.reserve(probs.len());
        let t = &mut self.tree;
        t.kind[node as usize] = CHANCE;
        t.num_children[node as usize] = probs.len() as u8;
        t.first_child[node as usize] = first;
        t.aux[node as usize] = t.chance_probs.len() as u32;
        t.chance_probs.extend_from_slice(probs);
        Ok(first)
    }

    /// Make `node` a decision node of `owner` in the info set named `key`;
    /// returns the first child.
    pub fn decision(&mut self, node: u32, owner: Side, key: u64, num_actions: usize) -> Result<u32> {
        self.check(node)?;
        if num_actions == 0 || num_actions > 255 {
            return Err(GsgiError::InvalidArgument("decision nodes need 1..=255 actions".into()));
        }
        let si = side_index(owner);
        let sets = &mut self.tree.infosets[si];
        let idx = *self.keys[si].entry(key).or_insert_with(|| {
            sets.push(InfoSet {
                owner,
                num_actions,
                members: Vec::new(),
            });
            (sets.len() - 1) as u32
        });
        let set = &mut sets[idx as usize];
        if set.num_actions != num_actions {
            return Err(GsgiError::InvalidArgument(format!(
                "info set {key} seen with {} and {num_actions} actions",
                set.num_actions
            )));
        }
        set.members.push(node);
        let first = self.reserve(num_actions);
        let t = &mut self.tree;
        t.kind[node as usize] = if owner == Side::Defender { DEFENDER } else { ATTACKER };
        t.num_children[node as usize] = num_actions as u8;
        t.first_child[node as usize] = first;
        t.aux[node as usize] = idx;
        Ok(first)
    }

    pub fn terminal(&mut self, node: u32, utility: f64) -> Result<()> {
        self.check(node)?;
        let t = &mut self.tree;
        t.kind[node as usize] = TERMINAL;
        t.aux[node as usize] = t.utilities.len() as u32;
        t.utilities.push(utility);
        Ok(())
    }

    pub fn finish(self) -> Result<GameTree> {
        if self.tree.kind.contains(&UNSET) {
            return Err(GsgiError::InvalidArgument("tree has unfilled nodes".into()));
        }
        Ok(self.tree)
    }
}

/// Limits checked before a game tree is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TreeBudget {
    pub max_nodes: u64,
    pub max_bytes: u64,
}

impl Default for TreeBudget {
    fn default() -> Self {
        TreeBudget {
            max_nodes: 100_000_000,
            max_bytes: 3 << 30,
        }
    }
}

/// Upper estimate of the memory a built tree of `nodes` nodes needs.
pub fn estimated_bytes(nodes: u64) -> u64 {
    // node arrays plus, at most, one f64 per node for probabilities and
    // utilities.
    nodes * (2 + 4 + 4 + 8) + (64 << 20)
}

/// Observation token a side receives at the end of a step: opponent bits in
/// its cell plus catch and removal (defender) or catch and return (attacker).
pub fn info_token(cfg: &GameConfig, state: &GameState, side: Side) -> u32 {
    match side {
        Side::Defender => {
            let bits = state.memory_def.get(cfg.index(state.defender_pos)) as u32;
            bits | (state.attacker_caught as u32) << 8 | state.tools_removed << 9
        }
        Side::Attacker => {
            let bits = state.memory_att.get(cfg.index(state.attacker_pos)) as u32;
            bits | (state.attacker_caught as u32) << 8 | (state.attacker_home as u32) << 9
        }
    }
}

/// Legal attacker actions: all ten with tools left, only the five
/// non-placing ones without.
pub fn attacker_actions(state: &GameState) -> usize {
    if state.tools_remaining > 0 {
        10
    } else {
        5
    }
}

pub fn attacker_action_at(state_tools: u32, i: usize) -> AttackerAction {
    if state_tools > 0 {
        AttackerAction::from_index(i).expect("attacker action index")
    } else {
        AttackerAction::new(Move::from_index(i).expect("move index"), false)
    }
}

/// Prefix tree over observation-action histories; each distinct history gets
/// a dense id used as its info-set key.
#[derive(Debug, Default)]
pub(crate) struct HistoryTrie {
    map: HashMap<(u32, u32), u32>,
}

impl HistoryTrie {
    pub const EMPTY: u32 = 0;

    pub fn extend(&mut self, parent: u32, token: u32) -> u32 {
        let next = self.map.len() as u32 + 1;
        *self.map.entry((parent, token)).or_insert(next)
    }
}

fn key(hist: u32, state: &GameState) -> u64 {
    // the step index disambiguates nothing under perfect recall but keeps
    // keys readable when debugging
    (hist as u64) << 8 | state.t as u64
}

fn token_action(action: usize, obs: u32) -> u32 {
    (action as u32) << 16 | obs
}

fn apply(cfg: &GameConfig, state: &GameState, d: usize, a: Option<usize>) -> (GameState, PendingStep) {
    let mut s = state.clone();
    let att = match a {
        Some(i) => attacker_action_at(state.tools_remaining, i),
        None => AttackerAction::new(Move::Stay, false),
    };
    let pending = s
        .begin_step(cfg, Move::from_index(d).expect("defender action"), att)
        .expect("non-terminal state");
    (s, pending)
}

/// A state plus the placement step of every unresolved tool.
#[derive(Clone, Debug)]
struct Node {
    s: GameState,
    born: SmallVec<[(Cell, u32); 4]>,
}

impl Node {
    fn initial(cfg: &GameConfig, entry: Cell) -> Self {
        Node {
            s: GameState::initial(cfg, entry),
            born: SmallVec::new(),
        }
    }

    fn is_leaf(&self, cfg: &GameConfig) -> bool {
        self.s.terminal || self.s.t >= cfg.horizon
    }

    /// Defender utility at a leaf, with unresolved tools paying their
    /// expected attack outcome.
    fn leaf_value(&self, cfg: &GameConfig) -> f64 {
        let mut v = self.s.cumulative_defender_reward;
        for (c, b) in &self.born {
            let q = cfg.trigger_probability(*c);
            v += cfg.rewards.p_attack.at(*c) * (1.0 - (1.0 - q).powi((self.s.t - b) as i32));
        }
        v
    }
}

/// Successors of one joint action. Triggers are resolved only where they
/// become observable: when the defender steps onto tools, the chance outcome
/// is how many of them are still there to remove. Tools never visited are
/// settled in expectation at the leaf.
fn advance(cfg: &GameConfig, n: &Node, d: usize, a: Option<usize>) -> SmallVec<[(f64, Node); 4]> {
    let (mid, pending) = apply(cfg, &n.s, d, a);
    let mut born = n.born.clone();
    if mid.tools_remaining < n.s.tools_remaining {
        born.push((mid.attacker_pos, n.s.t));
    }
    let here = mid.defender_pos;
    let mut dist: SmallVec<[f64; 8]> = SmallVec::from_slice(&[1.0]);
    for (c, b) in born.iter().filter(|(c, _)| *c == here) {
        let survive = (1.0 - cfg.trigger_probability(*c)).powi((n.s.t - b + 1) as i32);
        dist.push(0.0);
        for k in (0..dist.len()).rev() {
            let stay = if k > 0 { dist[k - 1] * survive } else { 0.0 };
            dist[k] = dist[k] * (1.0 - survive) + stay;
        }
    }
    let idx: SmallVec<[usize; 8]> = (0..mid.deployed_tools.len())
        .filter(|i| mid.deployed_tools[*i] == here)
        .collect();
    born.retain(|(c, _)| *c != here);
    let mut out = SmallVec::new();
    for (k, p) in dist.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let fired = idx.len() - k;
        let mask = idx[..fired].iter().fold(0u64, |m, i| m | 1 << i);
        let mut s = mid.clone();
        s.finish_step(cfg, pending, mask);
        out.push((*p, Node { s, born: born.clone() }));
    }
    out
}

/// Counts nodes without storing them.
struct Counter<'a> {
    cfg: &'a GameConfig,
    nodes: u64,
    limit: u64,
}

impl Counter<'_> {
    fn state(&mut self, n: &Node) -> bool {
        self.nodes += 1;
        if self.nodes > self.limit {
            return false;
        }
        if n.is_leaf(self.cfg) {
            return true;
        }
        for d in 0..5 {
            if n.s.attacker_active() {
                self.nodes += 1;
                for a in 0..attacker_actions(&n.s) {
                    if !self.after(n, d, Some(a)) {
                        return false;
                    }
                }
            } else if !self.after(n, d, None) {
                return false;
            }
        }
        true
    }

    fn after(&mut self, n: &Node, d: usize, a: Option<usize>) -> bool {
        let outcomes = advance(self.cfg, n, d, a);
        if outcomes.len() > 1 {
            self.nodes += 1;
        }
        for (_, next) in &outcomes {
            if !self.state(next) {
                return false;
            }
        }
        true
    }
}

fn horizon_config(cfg: &GameConfig, horizon: Option<u32>) -> GameConfig {
    let mut c = cfg.clone();
    if let Some(h) = horizon {
        c.horizon = h;
    }
    c
}

/// Exact node count of the game tree, stopping early once it passes `limit`.
pub fn count_game_tree(cfg: &GameConfig, horizon: Option<u32>, limit: u64) -> u64 {
    let cfg = horizon_config(cfg, horizon);
    if cfg.horizon == 0 {
        return 1;
    }
    let mut c = Counter {
        cfg: &cfg,
        nodes: 1,
        limit,
    };
    for e in &cfg.entry_points {
        if !c.state(&Node::initial(&cfg, *e)) {
            break;
        }
    }
    c.nodes
}

struct Builder<'a> {
    cfg: &'a GameConfig,
    b: TreeBuilder,
    hist: [HistoryTrie; 2],
}

impl Builder<'_> {
    /// Fill `node` with the subtree of `n`; `hd`, `ha` are the players'
    /// history ids.
    fn state(&mut self, node: u32, n: &Node, hd: u32, ha: u32) -> Result<()> {
        if n.is_leaf(self.cfg) {
            return self.b.terminal(node, n.leaf_value(self.cfg));
        }
        let s = &n.s;
        let first = self.b.decision(node, Side::Defender, key(hd, s), 5)?;
        for d in 0..5 {
            let child = first + d as u32;
            if s.attacker_active() {
                let k = attacker_actions(s);
                let af = self.b.decision(child, Side::Attacker, key(ha, s), k)?;
                for a in 0..k {
                    self.after(af + a as u32, n, d, Some(a), hd, ha)?;
                }
            } else {
                self.after(child, n, d, None, hd, ha)?;
            }
        }
        Ok(())
    }

    fn after(&mut self, node: u32, n: &Node, d: usize, a: Option<usize>, hd: u32, ha: u32) -> Result<()> {
        let outcomes = advance(self.cfg, n, d, a);
        let first = if outcomes.len() > 1 {
            let probs: SmallVec<[f64; 4]> = outcomes.iter().map(|(p, _)| *p).collect();
            Some(self.b.chance(node, &probs)?)
        } else {
            None
        };
        for (i, (_, next)) in outcomes.iter().enumerate() {
            let nd = self.hist[0].extend(hd, token_action(d, info_token(self.cfg, &next.s, Side::Defender)));
            let na = match a {
                Some(a) => self.hist[1].extend(ha, token_action(a, info_token(self.cfg, &next.s, Side::Attacker))),
                None => ha,
            };
            let target = first.map_or(node, |f| f + i as u32);
            self.state(target, next, nd, na)?;
        }
        Ok(())
    }
}

/// Build the extensive-form game: a root chance node over entry points, then
/// per step a defender node, an attacker node (while the attacker is still
/// in play) whose info set hides the defender's pending move, and a chance
/// node over the surviving count whenever the defender steps onto deployed
/// tools. Tools she never reaches pay their expected attack outcome at the
/// leaf, which leaves every player's information unchanged. `horizon`
/// overrides the configured one (0 gives a single terminal). The node count
/// is checked against the budget before anything is allocated.
pub fn build_game_tree(cfg: &GameConfig, horizon: Option<u32>, budget: TreeBudget) -> Result<GameTree> {
    let cfg = horizon_config(cfg, horizon);
    let mut b = TreeBuilder::new();
    if cfg.horizon == 0 {
        b.terminal(GameTree::ROOT, 0.0)?;
        return b.finish();
    }
    let count = count_game_tree(&cfg, None, budget.max_nodes);
    if count > budget.max_nodes {
        return Err(GsgiError::Budget {
            what: "game tree nodes".into(),
            estimate: count,
            budget: budget.max_nodes,
        });
    }
    if estimated_bytes(count) > budget.max_bytes {
        return Err(GsgiError::Budget {
            what: "game tree bytes".into(),
            estimate: estimated_bytes(count),
            budget: budget.max_bytes,
        });
    }
    let mut bl = Builder {
        cfg: &cfg,
        b: TreeBuilder::with_capacity(count as usize),
        hist: Default::default(),
    };
    let n = cfg.entry_points.len();
    let first = bl.b.chance(GameTree::ROOT, &vec![1.0 / n as f64; n])?;
    for (i, e) in cfg.entry_points.clone().into_iter().enumerate() {
        let ha = bl.hist[1].extend(HistoryTrie::EMPTY, (cfg.index(e) as u32) << 20);
        bl.state(first + i as u32, &Node::initial(&cfg, e), HistoryTrie::EMPTY, ha)?;
    }
    let tree = bl.b.finish()?;
    debug_assert_eq!(tree.num_nodes() as u64, count);
    Ok(tree)
}
