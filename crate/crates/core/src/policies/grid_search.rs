use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HeuristicDefenderParams, PurePolicy};
use crate::error::{GsgiError, Result};
use crate::game::{play_episode, GameConfig};
use crate::rng;

/// Evenly spaced values `min, min + step, ..., max` shared by all three weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.max >= self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(GsgiError::InvalidArgument(format!("bad grid {self:?}")));
        }
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.min + i as f64 * self.step).collect())
    }

    /// Every `(w_p, w_i, w_o)` combination in lexicographic order.
    pub fn lattice(&self) -> Result<Vec<HeuristicDefenderParams>> {
        let v = self.values()?;
        let mut out = Vec::with_capacity(v.len().pow(3));
        for &w_p in &v {
            for &w_i in &v {
                for &w_o in &v {
                    out.push(HeuristicDefenderParams { w_p, w_i, w_o });
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub params: HeuristicDefenderParams,
    pub mean: f64,
    pub std: f64,
    pub episodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSearchResult {
    pub best: GridPoint,
    pub points: Vec<GridPoint>,
}

/// Evaluate a heuristic defender at every point against `opponent` and keep
/// the best mean utility; ties go to the earlier point. All points see the
/// same episode seeds.
pub fn grid_search_defender_params(
    cfg: &GameConfig,
    opponent: &PurePolicy,
    points: &[HeuristicDefenderParams],
    episodes_per_point: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    if episodes_per_point == 0 {
        return Err(GsgiError::InvalidArgument("episodes_per_point must be positive".into()));
    }
    if points.is_empty() {
        return Err(GsgiError::InvalidArgument("empty parameter grid".into()));
    }
    let evaluated: Vec<GridPoint> = points
        .par_iter()
        .map(|p| {
            let def = PurePolicy::HeuristicDefender(*p);
            let mut sum = 0.0;
            let mut sq = 0.0;
            for e in 0..episodes_per_point {
                let u = play_episode(
                    cfg,
                    &def,
                    opponent,
                    rng::derive_seed(seed, "grid-episode", e as u64),
                    None,
                    false,
                )?
                .utility;
                sum += u;
                sq += u * u;
            }
            let n = episodes_per_point as f64;
            let mean = sum / n;
            Ok(GridPoint {
                params: *p,
                mean,
                std: (sq / n - mean * mean).max(0.0).sqrt(),
                episodes: episodes_per_point,
            })
        })
        .collect::<Result<_>>()?;
    let mut best = evaluated[0];
    for p in &evaluated[1..] {
        if p.mean > best.mean {
            best = *p;
        }
    }
    Ok(GridSearchResult {
        best,
        points: evaluated,
    })
}

pub fn write_grid_search_csv<W: Write>(w: W, result: &GridSearchResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["w_p", "w_i", "w_o", "mean_utility", "std", "episodes"])?;
    for p in &result.points {
        out.write_record([
            p.params.w_p.to_string(),
            p.params.w_i.to_string(),
            p.params.w_o.to_string(),
            p.mean.to_string(),
            p.std.to_string(),
            p.episodes.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{MapKind, Side};
    use crate::policies::HeuristicAttackerParams;

    #[test]
    fn paper_lattice_size() {
        let g = GridSpec {
            min: -5.0,
            max: 5.0,
            step: 0.1,
        };
        assert_eq!(g.values().unwrap().len(), 101);
        assert_eq!(g.lattice().unwrap().len(), 101 * 101 * 101);
    }

    #[test]
    fn single_point_is_returned() {
        let cfg = GameConfig::preset(3, MapKind::Uniform, 0).unwrap();
        let p = HeuristicDefenderParams {
            w_p: 1.0,
            w_i: 0.0,
            w_o: 2.0,
        };
        let att = PurePolicy::HeuristicAttacker(HeuristicAttackerParams::default());
        let r = grid_search_defender_params(&cfg, &att, &[p], 5, 1).unwrap();
        assert_eq!(r.best.params, p);
        assert!(grid_search_defender_params(&cfg, &att, &[p], 0, 1).is_err());
    }

    #[test]
    fn dominating_point_wins() {
        // the attacker keeps its one tool and sits on its corner; a defender glued to the bright
        // center never catches it, a random walker sometimes does.
        let mut map = vec![0.2; 9];
        map[4] = 1.0;
        let mut cfg = GameConfig::preset(3, MapKind::Uniform, 0)
            .unwrap()
            .with_success_map(map)
            .unwrap();
        cfg.num_tools = 1;
        let still = HeuristicDefenderParams {
            w_p: 50.0,
            w_i: 0.0,
            w_o: 0.0,
        };
        let r = grid_search_defender_params(
            &cfg,
            &PurePolicy::Stationary(Side::Attacker),
            &[still, HeuristicDefenderParams::default()],
            200,
            3,
        )
        .unwrap();
        assert_eq!(r.best.params, HeuristicDefenderParams::default());
        let mut buf = Vec::new();
        write_grid_search_csv(&mut buf, &r).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
