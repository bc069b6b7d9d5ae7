//! Restricted games over registered pure strategies.

mod simplex;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use simplex::{certificate, solve_zero_sum, ZeroSumSolution};

use crate::error::{GsgiError, Result};
use crate::game::{play_episode, Cell, GameConfig};
use crate::policies::{PurePolicy, Strategy};
use crate::rng;

/// Probability vector over named strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    pub ids: Vec<String>,
    pub probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(ids: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if ids.len() != probs.len() || ids.is_empty() {
            return Err(GsgiError::InvalidArgument(
                "mixed strategy needs one probability per id".into(),
            ));
        }
        let s: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > 1e-9 {
            return Err(GsgiError::InvalidArgument(format!("not a distribution: {probs:?}")));
        }
        Ok(MixedStrategy { ids, probs })
    }

    pub fn uniform(ids: Vec<String>) -> Result<Self> {
        let n = ids.len();
        MixedStrategy::new(ids, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn pure(ids: Vec<String>, index: usize) -> Result<Self> {
        let mut p = vec![0.0; ids.len()];
        *p.get_mut(index)
            .ok_or_else(|| GsgiError::InvalidArgument("pure index out of range".into()))? = 1.0;
        MixedStrategy::new(ids, p)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// `(1 - α) nash + α unif` over the same strategies.
pub fn mix_strategies(nash: &MixedStrategy, unif: &MixedStrategy, alpha: f64) -> Result<MixedStrategy> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(GsgiError::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    if nash.ids != unif.ids {
        return Err(GsgiError::InvalidArgument(
            "mixtures over different strategy lists".into(),
        ));
    }
    let probs = nash
        .probs
        .iter()
        .zip(&unif.probs)
        .map(|(n, u)| (1.0 - alpha) * n + alpha * u)
        .collect();
    MixedStrategy::new(nash.ids.clone(), probs)
}

/// `σdᵀ G σa`.
pub fn expected_utility(defender: &[f64], attacker: &[f64], g: &[Vec<f64>]) -> Result<f64> {
    if g.len() != defender.len() || g.iter().any(|r| r.len() != attacker.len()) {
        return Err(GsgiError::Shape("strategy and matrix dimensions differ".into()));
    }
    Ok(g.iter()
        .zip(defender)
        .map(|(row, x)| x * row.iter().zip(attacker).map(|(v, y)| v * y).sum::<f64>())
        .sum())
}

/// Monte-Carlo estimate of one matrix entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub episodes: usize,
}

/// Registered strategies and the (partially) estimated defender payoffs.
#[derive(Clone, Debug)]
pub struct RestrictedGame {
    pub defenders: Vec<Strategy>,
    pub attackers: Vec<Strategy>,
    entries: Vec<Vec<Option<PayoffEstimate>>>,
}

impl RestrictedGame {
    pub fn new(defenders: Vec<Strategy>, attackers: Vec<Strategy>) -> Result<Self> {
        let mut g = RestrictedGame {
            defenders: Vec::new(),
            attackers: Vec::new(),
            entries: Vec::new(),
        };
        for d in defenders {
            g.add_defender(d)?;
        }
        for a in attackers {
            g.add_attacker(a)?;
        }
        Ok(g)
    }

    pub fn add_defender(&mut self, s: Strategy) -> Result<()> {
        if s.policy.side() != crate::game::Side::Defender || self.defenders.iter().any(|d| d.id == s.id) {
            return Err(GsgiError::InvalidArgument(format!(
                "cannot add defender strategy {}",
                s.id
            )));
        }
        self.defenders.push(s);
        self.entries.push(vec![None; self.attackers.len()]);
        Ok(())
    }

    pub fn add_attacker(&mut self, s: Strategy) -> Result<()> {
        if s.policy.side() != crate::game::Side::Attacker || self.attackers.iter().any(|a| a.id == s.id) {
            return Err(GsgiError::InvalidArgument(format!(
                "cannot add attacker strategy {}",
                s.id
            )));
        }
        self.attackers.push(s);
        self.entries.iter_mut().for_each(|r| r.push(None));
        Ok(())
    }

    pub fn defender_ids(&self) -> Vec<String> {
        self.defenders.iter().map(|s| s.id.clone()).collect()
    }

    pub fn attacker_ids(&self) -> Vec<String> {
        self.attackers.iter().map(|s| s.id.clone()).collect()
    }

    pub fn entry(&self, d: usize, a: usize) -> Option<PayoffEstimate> {
        self.entries[d][a]
    }

    pub fn set_entry(&mut self, d: usize, a: usize, e: PayoffEstimate) {
        self.entries[d][a] = Some(e);
    }

    pub fn is_complete(&self) -> bool {
        self.entries.iter().flatten().all(Option::is_some)
    }

    /// The payoff means; fails while any entry is missing.
    pub fn matrix(&self) -> Result<Vec<Vec<f64>>> {
        self.entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|e| {
                        e.map(|e| e.mean)
                            .ok_or_else(|| GsgiError::InvalidArgument("payoff entry not estimated".into()))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn max_std_error(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .flatten()
            .map(|e| e.std_error)
            .fold(0.0, f64::max)
    }

    /// Nash equilibrium of the current matrix as named mixtures.
    pub fn solve(&self) -> Result<(MixedStrategy, MixedStrategy, f64)> {
        let sol = solve_zero_sum(&self.matrix()?)?;
        Ok((
            MixedStrategy::new(self.defender_ids(), sol.defender)?,
            MixedStrategy::new(self.attacker_ids(), sol.attacker)?,
            sol.value,
        ))
    }

    /// Forget every estimate, e.g. before re-evaluating in another mode.
    pub fn clear_estimates(&mut self) {
        self.entries.iter_mut().flatten().for_each(|e| *e = None);
    }
}

/// Seed for one matrix entry, derived from both strategy ids so an entry's
/// estimate does not depend on when it was computed.
pub fn entry_seed(seed: u64, defender_id: &str, attacker_id: &str) -> u64 {
    rng::derive_seed(
        seed,
        "payoff",
        rng::key_of(defender_id) ^ rng::key_of(attacker_id).rotate_left(17),
    )
}

/// Mean defender utility and its standard error over `episodes` seeded
/// rollouts of a strategy pair.
pub fn estimate_pair(
    cfg: &GameConfig,
    defender: &PurePolicy,
    attacker: &PurePolicy,
    episodes: usize,
    seed: u64,
    entry: Option<Cell>,
) -> Result<PayoffEstimate> {
    if episodes == 0 {
        return Err(GsgiError::InvalidArgument("episodes must be positive".into()));
    }
    let mut sum = 0.0;
    let mut sq = 0.0;
    for e in 0..episodes {
        let u = play_episode(
            cfg,
            defender,
            attacker,
            rng::derive_seed(seed, "episode", e as u64),
            entry,
            false,
        )?
        .utility;
        sum += u;
        sq += u * u;
    }
    let n = episodes as f64;
    let mean = sum / n;
    let var = if episodes > 1 {
        ((sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(PayoffEstimate {
        mean,
        std_error: (var / n).sqrt(),
        episodes,
    })
}

/// Fill every missing entry of the matrix by simulation; existing entries are
/// kept. `entry` fixes the attacker's entry point (local mode).
pub fn estimate_payoff_matrix(
    game: &mut RestrictedGame,
    cfg: &GameConfig,
    episodes_per_entry: usize,
    seed: u64,
    entry: Option<Cell>,
) -> Result<()> {
    if game.defenders.is_empty() || game.attackers.is_empty() {
        return Err(GsgiError::InvalidArgument(
            "restricted game has an empty strategy list".into(),
        ));
    }
    if episodes_per_entry == 0 {
        return Err(GsgiError::InvalidArgument("episodes_per_entry must be positive".into()));
    }
    let missing: Vec<(usize, usize)> = (0..game.defenders.len())
        .flat_map(|d| (0..game.attackers.len()).map(move |a| (d, a)))
        .filter(|(d, a)| game.entries[*d][*a].is_none())
        .collect();
    let results: Vec<PayoffEstimate> = missing
        .par_iter()
        .map(|&(d, a)| {
            let (ds, at) = (&game.defenders[d], &game.attackers[a]);
            estimate_pair(
                cfg,
                &ds.policy,
                &at.policy,
                episodes_per_entry,
                entry_seed(seed, &ds.id, &at.id),
                entry,
            )
        })
        .collect::<Result<_>>()?;
    for ((d, a), e) in missing.into_iter().zip(results) {
        game.entries[d][a] = Some(e);
    }
    Ok(())
}

/// Payoff means as CSV with strategy ids as row and column labels.
pub fn write_payoff_csv<W: Write>(w: W, game: &RestrictedGame) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["defender\\attacker".to_string()];
    header.extend(game.attacker_ids());
    out.write_record(&header)?;
    for (d, s) in game.defenders.iter().enumerate() {
        let mut row = vec![s.id.clone()];
        row.extend((0..game.attackers.len()).map(|a| game.entry(d, a).map(|e| e.mean.to_string()).unwrap_or_default()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{MapKind, Side};
    use crate::policies::HeuristicAttackerParams;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn mixing_arithmetic() {
        let nash = MixedStrategy::new(ids(2), vec![1.0, 0.0]).unwrap();
        let unif = MixedStrategy::uniform(ids(2)).unwrap();
        let m = mix_strategies(&nash, &unif, 0.15).unwrap();
        assert!((m.probs[0] - 0.925).abs() < 1e-12 && (m.probs[1] - 0.075).abs() < 1e-12);
        assert_eq!(mix_strategies(&nash, &unif, 0.0).unwrap(), nash);
        assert_eq!(mix_strategies(&nash, &unif, 1.0).unwrap().probs, unif.probs);
        assert!(mix_strategies(&nash, &unif, 1.5).is_err());
    }

    #[test]
    fn bilinear_utility() {
        let g = vec![vec![3.0, -1.0], vec![-2.0, 2.0]];
        assert_eq!(expected_utility(&[0.0, 1.0], &[1.0, 0.0], &g).unwrap(), -2.0);
        assert!((expected_utility(&[0.5, 0.5], &[0.375, 0.625], &g).unwrap() - 0.5).abs() < 1e-12);
        let mp = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        assert_eq!(expected_utility(&[0.5, 0.5], &[0.5, 0.5], &mp).unwrap(), 0.0);
    }

    fn game() -> RestrictedGame {
        RestrictedGame::new(
            vec![
                Strategy::new("sweep", PurePolicy::RandomSweep),
                Strategy::new("stay", PurePolicy::Stationary(Side::Defender)),
            ],
            vec![Strategy::new(
                "heur",
                PurePolicy::HeuristicAttacker(HeuristicAttackerParams::default()),
            )],
        )
        .unwrap()
    }

    #[test]
    fn estimation_is_deterministic_and_incremental() {
        let cfg = GameConfig::preset(3, MapKind::Uniform, 2).unwrap();
        let mut a = game();
        estimate_payoff_matrix(&mut a, &cfg, 50, 9, None).unwrap();
        let mut b = game();
        estimate_payoff_matrix(&mut b, &cfg, 50, 9, None).unwrap();
        assert_eq!(a.matrix().unwrap(), b.matrix().unwrap());
        let before = a.matrix().unwrap();
        a.add_attacker(Strategy::new("still", PurePolicy::Stationary(Side::Attacker)))
            .unwrap();
        assert!(!a.is_complete());
        estimate_payoff_matrix(&mut a, &cfg, 50, 9, None).unwrap();
        let after = a.matrix().unwrap();
        assert_eq!(after[0][0], before[0][0]);
        assert_eq!(after[1][1], 0.0);
        let mut buf = Vec::new();
        write_payoff_csv(&mut buf, &a).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn empty_lists_are_rejected() {
        let cfg = GameConfig::preset(3, MapKind::Uniform, 2).unwrap();
        let mut g = RestrictedGame::new(vec![], vec![]).unwrap();
        assert!(estimate_payoff_matrix(&mut g, &cfg, 10, 0, None).is_err());
    }
}
