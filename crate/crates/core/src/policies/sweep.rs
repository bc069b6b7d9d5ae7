use serde::{Deserialize, Serialize};

use crate::game::{Cell, GameConfig, Move, Observation};

/// Boundary edge the sweeping defender heads for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Edge {
    Top,
    Bottom,
    Left,
    Right,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Top, Edge::Bottom, Edge::Left, Edge::Right];
}

/// Per-episode state of the random sweep: chosen edge and orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SweepState {
    pub edge: Edge,
    pub clockwise: bool,
}

fn on_grid(cfg: &GameConfig, at: Cell, mv: Move) -> bool {
    let (dr, dc) = mv.delta();
    let r = at.row as isize + dr;
    let c = at.col as isize + dc;
    r >= 0 && c >= 0 && (r as usize) < cfg.rows() && (c as usize) < cfg.cols()
}

fn on_boundary(cfg: &GameConfig, at: Cell) -> bool {
    at.row == 0 || at.col == 0 || at.row + 1 == cfg.rows() || at.col + 1 == cfg.cols()
}

/// Moves that follow the attacker trail seen in the current cell: every
/// leaving direction, or failing that, the continuation of every entering
/// direction. Off-grid candidates are dropped.
pub fn chase_moves(obs: &Observation<'_>) -> Vec<Move> {
    let bits = obs.current_bits();
    let cfg = obs.config;
    let leaving: Vec<Move> = Move::COMPASS
        .into_iter()
        .filter(|d| bits >> (4 + d.index()) & 1 == 1 && on_grid(cfg, obs.position, *d))
        .collect();
    if !leaving.is_empty() {
        return leaving;
    }
    Move::COMPASS
        .into_iter()
        .filter(|d| bits >> d.index() & 1 == 1)
        .map(Move::opposite)
        .filter(|d| on_grid(cfg, obs.position, *d))
        .collect()
}

/// Next boundary move in the given orientation; `Stay` when the grid has no
/// boundary cycle to follow.
pub fn boundary_move(cfg: &GameConfig, at: Cell, clockwise: bool) -> Move {
    let last_row = cfg.rows() - 1;
    let last_col = cfg.cols() - 1;
    let mv = if clockwise {
        if at.row == 0 && at.col < last_col {
            Move::Right
        } else if at.col == last_col && at.row < last_row {
            Move::Down
        } else if at.row == last_row && at.col > 0 {
            Move::Left
        } else if at.col == 0 && at.row > 0 {
            Move::Up
        } else {
            Move::Stay
        }
    } else if at.row == 0 && at.col > 0 {
        Move::Left
    } else if at.col == 0 && at.row < last_row {
        Move::Down
    } else if at.row == last_row && at.col < last_col {
        Move::Right
    } else if at.col == last_col && at.row > 0 {
        Move::Up
    } else {
        Move::Stay
    };
    if on_grid(cfg, at, mv) {
        mv
    } else {
        Move::Stay
    }
}

/// Patrol move without any trail in sight: head to the chosen edge, then walk
/// the boundary.
pub fn patrol_move(cfg: &GameConfig, at: Cell, state: SweepState) -> Move {
    if on_boundary(cfg, at) {
        return boundary_move(cfg, at, state.clockwise);
    }
    match state.edge {
        Edge::Top => Move::Up,
        Edge::Bottom => Move::Down,
        Edge::Left => Move::Left,
        Edge::Right => Move::Right,
    }
}

/// Distribution over the sweep's next move as `(probability, move)`.
pub fn random_sweep_moves(obs: &Observation<'_>, state: SweepState) -> Vec<(f64, Move)> {
    let chase = chase_moves(obs);
    if chase.is_empty() {
        return vec![(1.0, patrol_move(obs.config, obs.position, state))];
    }
    let p = 1.0 / chase.len() as f64;
    chase.into_iter().map(|m| (p, m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{footprint::leaving_bit, GameState, Side};

    fn cfg() -> GameConfig {
        GameConfig::new(5, 5, vec![0.5; 25], vec![Cell::new(0, 0)], Cell::new(2, 2), 10, 1, 0).unwrap()
    }

    #[test]
    fn interior_heads_to_edge() {
        let c = cfg();
        let s = GameState::initial(&c, Cell::new(0, 0));
        let obs = s.observation(&c, Side::Defender);
        let st = SweepState {
            edge: Edge::Top,
            clockwise: true,
        };
        assert_eq!(random_sweep_moves(&obs, st), vec![(1.0, Move::Up)]);
    }

    #[test]
    fn clockwise_walks_the_boundary() {
        let c = cfg();
        assert_eq!(boundary_move(&c, Cell::new(0, 2), true), Move::Right);
        assert_eq!(boundary_move(&c, Cell::new(0, 4), true), Move::Down);
        assert_eq!(boundary_move(&c, Cell::new(4, 4), true), Move::Left);
        assert_eq!(boundary_move(&c, Cell::new(4, 0), true), Move::Up);
        assert_eq!(boundary_move(&c, Cell::new(0, 0), true), Move::Right);
        assert_eq!(boundary_move(&c, Cell::new(0, 2), false), Move::Left);
        assert_eq!(boundary_move(&c, Cell::new(0, 0), false), Move::Down);
    }

    #[test]
    fn follows_leaving_footprint() {
        let c = cfg();
        let mut s = GameState::initial(&c, Cell::new(0, 0));
        s.memory_def.set(c.index(s.defender_pos), leaving_bit(Move::Right));
        let obs = s.observation(&c, Side::Defender);
        let st = SweepState {
            edge: Edge::Top,
            clockwise: true,
        };
        assert_eq!(random_sweep_moves(&obs, st), vec![(1.0, Move::Right)]);
    }

    #[test]
    fn continues_entering_trail() {
        let c = cfg();
        let mut s = GameState::initial(&c, Cell::new(0, 0));
        // entered from the left, so the trail continues right
        s.memory_def.set(
            c.index(s.defender_pos),
            crate::game::footprint::entering_bit(Move::Left),
        );
        let obs = s.observation(&c, Side::Defender);
        assert_eq!(chase_moves(&obs), vec![Move::Right]);
    }
}
