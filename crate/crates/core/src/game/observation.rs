use super::config::GameConfig;
use super::footprint::FootprintGrid;
use super::types::{Cell, Side};

pub const NUM_CHANNELS: usize = 19;
pub const CH_OPPONENT: usize = 0;
pub const CH_OWN: usize = 8;
pub const CH_POSITION: usize = 16;
pub const CH_SUCCESS: usize = 17;
pub const CH_TIME: usize = 18;

/// A player's view of the game: everything its policy may condition on.
#[derive(Clone, Copy)]
pub struct Observation<'a> {
    pub side: Side,
    pub position: Cell,
    pub t: u32,
    pub horizon: u32,
    /// Attacker only; 0 for the defender.
    pub tools_remaining: u32,
    /// False once this player makes no further decisions.
    pub active: bool,
    pub own_footprints: &'a FootprintGrid,
    /// Opponent footprints seen so far, each in the cell where it was observed.
    pub opponent_memory: &'a FootprintGrid,
    pub config: &'a GameConfig,
}

impl Observation<'_> {
    /// Opponent footprint bits in the current cell.
    pub fn current_bits(&self) -> u8 {
        self.opponent_memory.get(self.config.index(self.position))
    }

    pub fn normalized_time(&self) -> f64 {
        self.t as f64 / self.horizon as f64
    }
}

/// Channel-major `19 x rows x cols` input tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl StateTensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        StateTensor {
            rows,
            cols,
            data: vec![0.0; NUM_CHANNELS * rows * cols],
        }
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.data[(channel * self.rows + row) * self.cols + col]
    }

    fn set(&mut self, row: usize, col: usize, channel: usize, v: f32) {
        self.data[(channel * self.rows + row) * self.cols + col] = v;
    }

    pub fn channel(&self, channel: usize) -> &[f32] {
        let n = self.rows * self.cols;
        &self.data[channel * n..(channel + 1) * n]
    }
}

/// Encode an observation as the 19-channel network input: 8 opponent
/// footprint planes (entering then leaving, each up/down/left/right), 8 own
/// footprint planes, a one-hot position plane, the success map and a constant
/// normalized-time plane.
pub fn encode_state(obs: &Observation<'_>) -> StateTensor {
    let cfg = obs.config;
    let (rows, cols) = (cfg.rows(), cfg.cols());
    let mut t = StateTensor::zeros(rows, cols);
    let time = obs.normalized_time() as f32;
    for r in 0..rows {
        for c in 0..cols {
            let idx = r * cols + c;
            let opp = obs.opponent_memory.get(idx);
            let own = obs.own_footprints.get(idx);
            for b in 0..8 {
                if opp >> b & 1 == 1 {
                    t.set(r, c, CH_OPPONENT + b, 1.0);
                }
                if own >> b & 1 == 1 {
                    t.set(r, c, CH_OWN + b, 1.0);
                }
            }
            t.set(r, c, CH_SUCCESS, cfg.success_map()[idx] as f32);
            t.set(r, c, CH_TIME, time);
        }
    }
    t.set(obs.position.row, obs.position.col, CH_POSITION, 1.0);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{AttackerAction, GameState, Move};

    fn cfg() -> GameConfig {
        GameConfig::new(4, 5, vec![0.3; 20], vec![Cell::new(2, 2)], Cell::new(0, 0), 6, 1, 0).unwrap()
    }

    #[test]
    fn initial_encoding() {
        let c = cfg();
        let s = GameState::initial(&c, Cell::new(3, 4));
        let t = encode_state(&s.observation(&c, Side::Defender));
        for ch in 0..16 {
            assert!(t.channel(ch).iter().all(|v| *v == 0.0));
        }
        assert_eq!(t.channel(CH_POSITION).iter().sum::<f32>(), 1.0);
        assert_eq!(t.get(0, 0, CH_POSITION), 1.0);
        assert!(t.channel(CH_TIME).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn time_plane_is_one_at_horizon() {
        let c = cfg();
        let mut s = GameState::initial(&c, Cell::new(3, 4));
        s.t = c.horizon;
        let t = encode_state(&s.observation(&c, Side::Attacker));
        assert!(t.channel(CH_TIME).iter().all(|v| *v == 1.0));
    }

    #[test]
    fn one_observed_footprint_sets_one_bit() {
        // attacker enters (2,3) from the left while the defender stands there.
        let c = cfg();
        let mut rng = crate::rng::stream(0, "t", 0);
        let mut s = GameState::initial(&c, Cell::new(2, 2));
        s.defender_pos = Cell::new(2, 3);
        s.step(&c, Move::Stay, AttackerAction::new(Move::Right, false), &mut rng)
            .unwrap();
        let t = encode_state(&s.observation(&c, Side::Defender));
        let mut nonzero = Vec::new();
        for ch in 0..8 {
            for r in 0..4 {
                for col in 0..5 {
                    if t.get(r, col, ch) != 0.0 {
                        nonzero.push((r, col, ch));
                    }
                }
            }
        }
        assert_eq!(nonzero, vec![(2, 3, CH_OPPONENT + Move::Left.index())]);
    }
}
