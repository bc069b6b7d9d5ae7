use serde::{Deserialize, Serialize};

use crate::error::{GsgiError, Result};
use crate::game::{Move, Observation};

/// Weights of the softmax random-walk attacker.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicAttackerParams {
    pub w_p: f64,
    pub w_i: f64,
    pub w_o: f64,
    pub tau: f64,
}

impl Default for HeuristicAttackerParams {
    /// Drawn to dense cells, shies away from defender footprints.
    fn default() -> Self {
        HeuristicAttackerParams {
            w_p: 2.0,
            w_i: -4.0,
            w_o: -2.0,
            tau: 0.3,
        }
    }
}

impl HeuristicAttackerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || ![self.w_p, self.w_i, self.w_o].iter().all(|w| w.is_finite()) {
            return Err(GsgiError::Config(format!("invalid heuristic attacker params {self:?}")));
        }
        Ok(())
    }
}

/// Movement weights of the softmax random-walk defender.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct HeuristicDefenderParams {
    pub w_p: f64,
    pub w_i: f64,
    pub w_o: f64,
}

/// Per-move features, indexed like [`Move`] (stay last).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionFeatures {
    pub avg_success: [f64; 5],
    pub entering: [f64; 5],
    pub leaving: [f64; 5],
}

/// Mean success probability of the half-plane on each side of the observer
/// (0 for an empty side), the current cell's value for staying, and the
/// opponent footprint bits in the current cell.
pub fn direction_features(obs: &Observation<'_>) -> DirectionFeatures {
    let cfg = obs.config;
    let (rows, cols) = (cfg.rows(), cfg.cols());
    let (m, n) = (obs.position.row, obs.position.col);
    let map = cfg.success_map();
    let mean = |cells: &mut dyn Iterator<Item = (usize, usize)>| -> f64 {
        let (s, k) = cells.fold((0.0, 0usize), |(s, k), (r, c)| (s + map[r * cols + c], k + 1));
        if k == 0 {
            0.0
        } else {
            s / k as f64
        }
    };
    let mut avg = [0.0; 5];
    avg[Move::Up.index()] = mean(&mut (0..m).flat_map(|r| (0..cols).map(move |c| (r, c))));
    avg[Move::Down.index()] = mean(&mut (m + 1..rows).flat_map(|r| (0..cols).map(move |c| (r, c))));
    avg[Move::Left.index()] = mean(&mut (0..rows).flat_map(|r| (0..n).map(move |c| (r, c))));
    avg[Move::Right.index()] = mean(&mut (0..rows).flat_map(|r| (n + 1..cols).map(move |c| (r, c))));
    avg[Move::Stay.index()] = map[m * cols + n];

    let bits = obs.current_bits();
    let mut entering = [0.0; 5];
    let mut leaving = [0.0; 5];
    for d in Move::COMPASS {
        entering[d.index()] = (bits >> d.index() & 1) as f64;
        leaving[d.index()] = (bits >> (4 + d.index()) & 1) as f64;
    }
    DirectionFeatures {
        avg_success: avg,
        entering,
        leaving,
    }
}

/// Softmax over `w_p * avg + w_i * entering + w_o * leaving`.
pub fn heuristic_move_distribution(f: &DirectionFeatures, w_p: f64, w_i: f64, w_o: f64) -> Result<[f64; 5]> {
    let z: [f64; 5] = std::array::from_fn(|k| w_p * f.avg_success[k] + w_i * f.entering[k] + w_o * f.leaving[k]);
    if z.iter().any(|v| !v.is_finite()) {
        return Err(GsgiError::NonFinite("heuristic logits".into()));
    }
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p = z.map(|v| (v - max).exp());
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    Ok(p)
}

/// Probability of placing a tool in the current cell: the current cell's
/// share of a softmax of `success / tau` over the whole grid. Zero when no
/// tools are left.
pub fn snare_placement_probability(obs: &Observation<'_>, tau: f64) -> f64 {
    if obs.tools_remaining == 0 {
        return 0.0;
    }
    let map = obs.config.success_map();
    let max = map.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let denom: f64 = map.iter().map(|p| ((p - max) / tau).exp()).sum();
    let here = map[obs.config.index(obs.position)];
    ((here - max) / tau).exp() / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Cell, GameConfig, GameState, Side};

    fn cfg(map: Vec<f64>, rows: usize, cols: usize) -> GameConfig {
        GameConfig::new(rows, cols, map, vec![Cell::new(0, 0)], Cell::new(0, 0), 5, 2, 0).unwrap()
    }

    fn at(c: &GameConfig, pos: Cell) -> GameState {
        let mut s = GameState::initial(c, Cell::new(0, 0));
        s.attacker_pos = pos;
        s
    }

    #[test]
    fn constant_map_interior() {
        let c = cfg(vec![0.5; 9], 3, 3);
        let s = at(&c, Cell::new(1, 1));
        let f = direction_features(&s.observation(&c, Side::Attacker));
        assert_eq!(f.avg_success, [0.5; 5]);
    }

    #[test]
    fn top_row_has_empty_up_side() {
        let c = cfg(vec![0.5; 9], 3, 3);
        let s = at(&c, Cell::new(0, 1));
        let f = direction_features(&s.observation(&c, Side::Attacker));
        assert_eq!(f.avg_success[Move::Up.index()], 0.0);
    }

    #[test]
    fn half_plane_means_by_hand() {
        let map = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
        let c = cfg(map, 3, 3);
        let s = at(&c, Cell::new(1, 1));
        let f = direction_features(&s.observation(&c, Side::Attacker));
        let expect = [0.2, 0.8, (0.1 + 0.4 + 0.7) / 3.0, (0.3 + 0.6 + 0.9) / 3.0, 0.5];
        for (got, want) in f.avg_success.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_cases() {
        let zero = DirectionFeatures {
            avg_success: [1.0, 0.0, 0.0, 0.0, 0.0],
            entering: [0.0; 5],
            leaving: [0.0; 5],
        };
        assert_eq!(heuristic_move_distribution(&zero, 0.0, 0.0, 0.0).unwrap(), [0.2; 5]);
        let p = heuristic_move_distribution(&zero, 1.0, 0.0, 0.0).unwrap();
        let e = std::f64::consts::E;
        assert!((p[0] - e / (e + 4.0)).abs() < 1e-12);
        assert!((p[0] - 0.4046).abs() < 1e-4);
        assert!((p[1] - 1.0 / (e + 4.0)).abs() < 1e-12);
        let flat = DirectionFeatures {
            avg_success: [0.7; 5],
            ..zero
        };
        let p = heuristic_move_distribution(&flat, 3.0, 0.0, 0.0).unwrap();
        assert!(p.iter().all(|v| (v - 0.2).abs() < 1e-12));
        assert!(heuristic_move_distribution(&zero, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn placement_probability_cases() {
        let c = cfg(vec![0.4; 6], 2, 3);
        let s = at(&c, Cell::new(1, 2));
        assert!((snare_placement_probability(&s.observation(&c, Side::Attacker), 0.3) - 1.0 / 6.0).abs() < 1e-12);

        let c = cfg(vec![1.0, 0.5, 0.5, 0.5], 2, 2);
        let s = at(&c, Cell::new(0, 0));
        let e = std::f64::consts::E;
        let p = snare_placement_probability(&s.observation(&c, Side::Attacker), 1.0);
        assert!((p - e / (e + 3.0 * e.sqrt())).abs() < 1e-12);
        assert!((p - 0.3547).abs() < 1e-4);
        let hot = snare_placement_probability(&s.observation(&c, Side::Attacker), 1e6);
        assert!((hot - 0.25).abs() < 1e-3);

        let mut s = s.clone();
        s.tools_remaining = 0;
        assert_eq!(
            snare_placement_probability(&s.observation(&c, Side::Attacker), 1.0),
            0.0
        );
    }
}
