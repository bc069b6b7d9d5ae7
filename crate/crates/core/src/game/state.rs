use serde::Serialize;
use smallvec::SmallVec;
use std::hash::{Hash, Hasher};

use super::config::GameConfig;
use super::footprint::FootprintGrid;
use super::observation::Observation;
use super::types::{AttackerAction, Cell, Move, Side};
use crate::error::{GsgiError, Result};

pub type Tools = SmallVec<[Cell; 8]>;

/// Full simulator state. Tools are kept sorted so equal multisets compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct GameState {
    pub t: u32,
    pub defender_pos: Cell,
    pub attacker_pos: Cell,
    pub attacker_entry: Cell,
    pub tools_remaining: u32,
    pub deployed_tools: Tools,
    pub footprints_def: FootprintGrid,
    pub footprints_att: FootprintGrid,
    /// Attacker footprints the defender has seen so far.
    pub memory_def: FootprintGrid,
    /// Defender footprints the attacker has seen so far.
    pub memory_att: FootprintGrid,
    pub attacker_caught: bool,
    pub attacker_home: bool,
    pub terminal: bool,
    pub tools_removed: u32,
    pub tools_triggered: u32,
    pub cumulative_defender_reward: f64,
}

impl Eq for GameState {}

impl Hash for GameState {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.t.hash(h);
        self.defender_pos.hash(h);
        self.attacker_pos.hash(h);
        self.attacker_entry.hash(h);
        self.tools_remaining.hash(h);
        self.deployed_tools.hash(h);
        self.footprints_def.hash(h);
        self.footprints_att.hash(h);
        self.memory_def.hash(h);
        self.memory_att.hash(h);
        (self.attacker_caught, self.attacker_home, self.terminal).hash(h);
        (self.tools_removed, self.tools_triggered).hash(h);
        self.cumulative_defender_reward.to_bits().hash(h);
    }
}

/// What happened during one step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepEvents {
    pub t: u32,
    pub defender_move: Move,
    /// `None` when the attacker was already caught or home.
    pub attacker_action: Option<AttackerAction>,
    pub defender_pos: Cell,
    pub attacker_pos: Cell,
    pub placed: Option<Cell>,
    pub triggered: Vec<Cell>,
    pub removed: Vec<Cell>,
    pub caught: bool,
    pub went_home: bool,
    pub defender_reward: f64,
    pub terminal: bool,
}

/// Moves and placement applied, triggers not yet resolved.
#[derive(Clone, Copy, Debug)]
pub struct PendingStep {
    defender_move: Move,
    attacker_action: Option<AttackerAction>,
    placed: Option<Cell>,
}

fn apply_move(cfg: &GameConfig, from: Cell, mv: Move) -> Cell {
    let (dr, dc) = mv.delta();
    let r = from.row as isize + dr;
    let c = from.col as isize + dc;
    if r < 0 || c < 0 || r as usize >= cfg.rows() || c as usize >= cfg.cols() {
        from
    } else {
        Cell::new(r as usize, c as usize)
    }
}

/// Destination of a move; off-grid moves resolve to staying put.
pub fn destination(cfg: &GameConfig, from: Cell, mv: Move) -> Cell {
    apply_move(cfg, from, mv)
}

impl GameState {
    pub fn initial(cfg: &GameConfig, entry: Cell) -> Self {
        GameState {
            t: 0,
            defender_pos: cfg.patrol_post,
            attacker_pos: entry,
            attacker_entry: entry,
            tools_remaining: cfg.num_tools,
            deployed_tools: Tools::new(),
            footprints_def: FootprintGrid::default(),
            footprints_att: FootprintGrid::default(),
            memory_def: FootprintGrid::default(),
            memory_att: FootprintGrid::default(),
            attacker_caught: false,
            attacker_home: false,
            terminal: false,
            tools_removed: 0,
            tools_triggered: 0,
            cumulative_defender_reward: 0.0,
        }
    }

    /// The attacker still makes decisions.
    pub fn attacker_active(&self) -> bool {
        !self.attacker_caught && !self.attacker_home
    }

    pub fn observation<'a>(&'a self, cfg: &'a GameConfig, side: Side) -> Observation<'a> {
        match side {
            Side::Defender => Observation {
                side,
                position: self.defender_pos,
                t: self.t,
                horizon: cfg.horizon,
                tools_remaining: 0,
                active: !self.terminal,
                own_footprints: &self.footprints_def,
                opponent_memory: &self.memory_def,
                config: cfg,
            },
            Side::Attacker => Observation {
                side,
                position: self.attacker_pos,
                t: self.t,
                horizon: cfg.horizon,
                tools_remaining: self.tools_remaining,
                active: !self.terminal && self.attacker_active(),
                own_footprints: &self.footprints_att,
                opponent_memory: &self.memory_att,
                config: cfg,
            },
        }
    }

    /// Apply both moves simultaneously, write footprints and place a tool.
    pub fn begin_step(&mut self, cfg: &GameConfig, defender: Move, attacker: AttackerAction) -> Result<PendingStep> {
        if self.terminal || self.t >= cfg.horizon {
            return Err(GsgiError::TerminalState);
        }
        let d_from = self.defender_pos;
        let d_to = apply_move(cfg, d_from, defender);
        if d_to != d_from {
            self.footprints_def
                .record_move(cfg.index(d_from), cfg.index(d_to), defender);
        }
        self.defender_pos = d_to;

        let mut placed = None;
        let attacker_action = if self.attacker_active() {
            let a_from = self.attacker_pos;
            let a_to = apply_move(cfg, a_from, attacker.mv);
            if a_to != a_from {
                self.footprints_att
                    .record_move(cfg.index(a_from), cfg.index(a_to), attacker.mv);
            }
            self.attacker_pos = a_to;
            if attacker.place && self.tools_remaining > 0 {
                self.tools_remaining -= 1;
                let at = self.deployed_tools.partition_point(|c| *c <= a_to);
                self.deployed_tools.insert(at, a_to);
                placed = Some(a_to);
            }
            Some(attacker)
        } else {
            None
        };
        Ok(PendingStep {
            defender_move: defender,
            attacker_action,
            placed,
        })
    }

    /// Distinct trigger outcomes for the currently deployed tools as
    /// `(probability, mask)`, where bit `i` of the mask fires tool `i`.
    /// Masks that fire the same multiset of cells are merged; zero-probability
    /// outcomes are dropped.
    pub fn trigger_outcomes(&self, cfg: &GameConfig) -> Vec<(f64, u64)> {
        let tools = &self.deployed_tools;
        let k = tools.len();
        assert!(k < 24, "too many deployed tools to enumerate");
        let probs: SmallVec<[f64; 8]> = tools.iter().map(|c| cfg.trigger_probability(*c)).collect();
        let mut out: Vec<(f64, u64, SmallVec<[Cell; 8]>)> = Vec::new();
        for mask in 0u64..(1u64 << k) {
            let mut p = 1.0;
            for (i, q) in probs.iter().enumerate() {
                p *= if mask >> i & 1 == 1 { *q } else { 1.0 - *q };
            }
            if p == 0.0 {
                continue;
            }
            let fired: SmallVec<[Cell; 8]> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| tools[i]).collect();
            match out.iter_mut().find(|(_, _, f)| *f == fired) {
                Some(entry) => entry.0 += p,
                None => out.push((p, mask, fired)),
            }
        }
        out.into_iter().map(|(p, m, _)| (p, m)).collect()
    }

    /// Resolve triggers (given as a mask over `deployed_tools`), removals,
    /// capture, return home and termination.
    pub fn finish_step(&mut self, cfg: &GameConfig, pending: PendingStep, trigger_mask: u64) -> StepEvents {
        let mut reward = 0.0;
        let mut triggered = Vec::new();
        let mut kept = Tools::new();
        for (i, c) in self.deployed_tools.iter().enumerate() {
            if trigger_mask >> i & 1 == 1 {
                reward += cfg.rewards.p_attack.at(*c);
                triggered.push(*c);
            } else {
                kept.push(*c);
            }
        }
        self.tools_triggered += triggered.len() as u32;

        let mut removed = Vec::new();
        kept.retain(|c| {
            if *c == self.defender_pos {
                removed.push(*c);
                false
            } else {
                true
            }
        });
        self.deployed_tools = kept;
        for c in &removed {
            reward += cfg.rewards.r_tool.at(*c);
        }
        self.tools_removed += removed.len() as u32;

        let mut caught = false;
        if self.attacker_active() && self.defender_pos == self.attacker_pos {
            self.attacker_caught = true;
            caught = true;
            reward += cfg.rewards.r_catch;
        }
        let mut went_home = false;
        if cfg.attacker_returns_home
            && self.attacker_active()
            && self.tools_remaining == 0
            && self.attacker_pos == self.attacker_entry
        {
            self.attacker_home = true;
            went_home = true;
        }

        let d = cfg.index(self.defender_pos);
        self.memory_def.set(d, self.footprints_att.get(d));
        if self.attacker_active() {
            let a = cfg.index(self.attacker_pos);
            self.memory_att.set(a, self.footprints_def.get(a));
        }

        self.t += 1;
        self.cumulative_defender_reward += reward;
        self.terminal =
            self.t >= cfg.horizon || ((self.attacker_caught || self.attacker_home) && self.deployed_tools.is_empty());

        StepEvents {
            t: self.t,
            defender_move: pending.defender_move,
            attacker_action: pending.attacker_action,
            defender_pos: self.defender_pos,
            attacker_pos: self.attacker_pos,
            placed: pending.placed,
            triggered,
            removed,
            caught,
            went_home,
            defender_reward: reward,
            terminal: self.terminal,
        }
    }

    /// One full simulator step with triggers sampled from `rng`.
    pub fn step<R: rand::Rng + ?Sized>(
        &mut self,
        cfg: &GameConfig,
        defender: Move,
        attacker: AttackerAction,
        rng: &mut R,
    ) -> Result<StepEvents> {
        let pending = self.begin_step(cfg, defender, attacker)?;
        let mut mask = 0u64;
        for (i, c) in self.deployed_tools.iter().enumerate() {
            if rng.gen::<f64>() < cfg.trigger_probability(*c) {
                mask |= 1 << i;
            }
        }
        Ok(self.finish_step(cfg, pending, mask))
    }

    /// Opponent footprint bits visible to `side` in its current cell.
    pub fn visible_bits(&self, cfg: &GameConfig, side: Side) -> u8 {
        match side {
            Side::Defender => self.footprints_att.get(cfg.index(self.defender_pos)),
            Side::Attacker => self.footprints_def.get(cfg.index(self.attacker_pos)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::config::GameConfig;

    fn cfg(success: f64) -> GameConfig {
        GameConfig::new(3, 3, vec![success; 9], vec![Cell::new(0, 0)], Cell::new(1, 1), 10, 3, 0).unwrap()
    }

    #[test]
    fn zero_probability_tool_never_triggers() {
        let c = cfg(0.0);
        let mut rng = crate::rng::stream(1, "t", 0);
        let mut s = GameState::initial(&c, Cell::new(0, 0));
        s.step(&c, Move::Stay, AttackerAction::new(Move::Right, true), &mut rng)
            .unwrap();
        for _ in 0..8 {
            let ev = s
                .step(&c, Move::Stay, AttackerAction::new(Move::Stay, false), &mut rng)
                .unwrap();
            assert!(ev.triggered.is_empty());
        }
        assert_eq!(s.tools_triggered, 0);
        assert_eq!(s.cumulative_defender_reward, 0.0);
    }

    #[test]
    fn defender_removes_all_tools_in_cell() {
        let c = cfg(0.0);
        let mut rng = crate::rng::stream(1, "t", 0);
        let mut s = GameState::initial(&c, Cell::new(0, 0));
        // attacker drops two tools at (0,1), then walks to (0,2)
        s.step(&c, Move::Stay, AttackerAction::new(Move::Right, true), &mut rng)
            .unwrap();
        s.step(&c, Move::Stay, AttackerAction::new(Move::Stay, true), &mut rng)
            .unwrap();
        s.step(&c, Move::Stay, AttackerAction::new(Move::Right, false), &mut rng)
            .unwrap();
        assert_eq!(s.deployed_tools.len(), 2);
        let ev = s
            .step(&c, Move::Up, AttackerAction::new(Move::Stay, false), &mut rng)
            .unwrap();
        assert_eq!(ev.removed.len(), 2);
        assert_eq!(ev.defender_reward, 4.0);
    }

    #[test]
    fn co_location_catches() {
        let c = cfg(0.0);
        let mut rng = crate::rng::stream(1, "t", 0);
        let mut s = GameState::initial(&c, Cell::new(0, 0));
        s.step(&c, Move::Stay, AttackerAction::new(Move::Right, false), &mut rng)
            .unwrap();
        let ev = s
            .step(&c, Move::Up, AttackerAction::new(Move::Stay, false), &mut rng)
            .unwrap();
        assert!(ev.caught);
        assert_eq!(ev.defender_reward, 8.0);
        // no tools deployed: game over
        assert!(ev.terminal);
        assert!(s
            .step(&c, Move::Stay, AttackerAction::new(Move::Stay, false), &mut rng)
            .is_err());
    }

    #[test]
    fn edge_swap_is_not_a_catch() {
        let c = GameConfig::new(1, 3, vec![0.0; 3], vec![Cell::new(0, 0)], Cell::new(0, 1), 5, 1, 0).unwrap();
        let mut rng = crate::rng::stream(1, "t", 0);
        let mut s = GameState::initial(&c, Cell::new(0, 0));
        let ev = s
            .step(&c, Move::Left, AttackerAction::new(Move::Right, false), &mut rng)
            .unwrap();
        assert!(!ev.caught);
        assert_eq!(s.defender_pos, Cell::new(0, 0));
        assert_eq!(s.attacker_pos, Cell::new(0, 1));
    }

    #[test]
    fn attacker_goes_home_without_tools() {
        let mut c = cfg(0.0);
        c.num_tools = 1;
        let mut rng = crate::rng::stream(1, "t", 0);
        let mut s = GameState::initial(&c, Cell::new(0, 0));
        s.step(&c, Move::Stay, AttackerAction::new(Move::Right, true), &mut rng)
            .unwrap();
        let ev = s
            .step(&c, Move::Stay, AttackerAction::new(Move::Left, false), &mut rng)
            .unwrap();
        assert!(ev.went_home);
        assert!(!ev.terminal, "tool still deployed");
        // inactive attacker no longer moves
        s.step(&c, Move::Stay, AttackerAction::new(Move::Right, false), &mut rng)
            .unwrap();
        assert_eq!(s.attacker_pos, Cell::new(0, 0));
    }

    #[test]
    fn trigger_outcomes_merge_same_cell_tools() {
        let c = cfg(1.0);
        let mut s = GameState::initial(&c, Cell::new(0, 0));
        s.deployed_tools.push(Cell::new(0, 1));
        s.deployed_tools.push(Cell::new(0, 1));
        let out = s.trigger_outcomes(&c);
        assert_eq!(out.len(), 3);
        let total: f64 = out.iter().map(|o| o.0).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
