use serde::{Deserialize, Serialize};
use std::fmt;

/// Grid coordinate, row 0 at the top.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Defender,
    Attacker,
}

impl Side {
    pub fn opponent(self) -> Side {
        match self {
            Side::Defender => Side::Attacker,
            Side::Attacker => Side::Defender,
        }
    }

    /// Number of joint actions: moves for the defender, move x place for the attacker.
    pub fn num_actions(self) -> usize {
        match self {
            Side::Defender => 5,
            Side::Attacker => 10,
        }
    }

    /// Sign converting a defender payoff into this side's payoff.
    pub fn sign(self) -> f64 {
        match self {
            Side::Defender => 1.0,
            Side::Attacker => -1.0,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Defender => f.write_str("defender"),
            Side::Attacker => f.write_str("attacker"),
        }
    }
}

/// One of the four compass directions or staying put. The discriminant doubles
/// as the footprint direction index and the network output index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Move {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
    Stay = 4,
}

impl Move {
    pub const ALL: [Move; 5] = [Move::Up, Move::Down, Move::Left, Move::Right, Move::Stay];
    pub const COMPASS: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Move> {
        Move::ALL.get(i).copied()
    }

    pub fn opposite(self) -> Move {
        match self {
            Move::Up => Move::Down,
            Move::Down => Move::Up,
            Move::Left => Move::Right,
            Move::Right => Move::Left,
            Move::Stay => Move::Stay,
        }
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Move::Up => (-1, 0),
            Move::Down => (1, 0),
            Move::Left => (0, -1),
            Move::Right => (0, 1),
            Move::Stay => (0, 0),
        }
    }
}

/// Attacker's joint action. Encoded as `move * 2 + place` for network outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttackerAction {
    pub mv: Move,
    pub place: bool,
}

impl AttackerAction {
    pub const fn new(mv: Move, place: bool) -> Self {
        AttackerAction { mv, place }
    }

    pub fn index(self) -> usize {
        self.mv.index() * 2 + self.place as usize
    }

    pub fn from_index(i: usize) -> Option<AttackerAction> {
        Some(AttackerAction {
            mv: Move::from_index(i / 2)?,
            place: i % 2 == 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attacker_action_index_roundtrip() {
        for i in 0..10 {
            assert_eq!(AttackerAction::from_index(i).unwrap().index(), i);
        }
        assert!(AttackerAction::from_index(10).is_none());
    }

    #[test]
    fn opposite_is_involution() {
        for m in Move::ALL {
            assert_eq!(m.opposite().opposite(), m);
        }
    }
}
