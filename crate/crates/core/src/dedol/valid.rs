use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GsgiError, Result};
use crate::game::{GameConfig, Side};
use crate::metagame::{
    entry_seed, estimate_pair, estimate_payoff_matrix, MixedStrategy, PayoffEstimate, RestrictedGame,
};
use crate::policies::Strategy;

/// How the improvement margin δ is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Margin {
    /// δ in utility units.
    Fixed { delta: f64 },
    /// δ = k times the largest standard error among the payoff estimates
    /// a comparison uses.
    StdErrors { k: f64 },
}

impl Default for Margin {
    fn default() -> Self {
        Margin::StdErrors { k: 3.0 }
    }
}

impl Margin {
    pub fn delta(&self, max_std_error: f64) -> f64 {
        match self {
            Margin::Fixed { delta } => *delta,
            Margin::StdErrors { k } => k * max_std_error,
        }
    }
}

/// A pair of freshly trained strategies.
#[derive(Clone, Debug)]
pub struct Candidates {
    pub defender: Strategy,
    pub attacker: Strategy,
}

/// Outcome of checking one candidate against the NE it was trained for.
/// Utilities are in the candidate's own terms, so `margin = utility -
/// best_existing` for both sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideCheck {
    pub candidate: String,
    pub side: Side,
    pub utility: f64,
    pub best_existing: f64,
    pub margin: f64,
    pub delta: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub checks: Vec<SideCheck>,
    pub added: Vec<String>,
    pub retrained: Option<(String, String)>,
    pub terminate: bool,
}

fn dot(p: &[f64], e: &[PayoffEstimate]) -> f64 {
    p.iter().zip(e).map(|(p, e)| p * e.mean).sum()
}

fn max_se(e: &[PayoffEstimate]) -> f64 {
    e.iter().map(|e| e.std_error).fold(0.0, f64::max)
}

struct Estimated {
    row: Vec<PayoffEstimate>,
    col: Vec<PayoffEstimate>,
    checks: [SideCheck; 2],
}

#[allow(clippy::too_many_arguments)]
fn check_pair(
    cfg: &GameConfig,
    game: &RestrictedGame,
    sd: &MixedStrategy,
    sa: &MixedStrategy,
    cand: &Candidates,
    margin: Margin,
    episodes: usize,
    seed: u64,
) -> Result<Estimated> {
    let g = game.matrix()?;
    if sd.ids != game.defender_ids() || sa.ids != game.attacker_ids() {
        return Err(GsgiError::InvalidArgument(
            "NE does not match the restricted game".into(),
        ));
    }
    let row: Vec<PayoffEstimate> = game
        .attackers
        .par_iter()
        .map(|a| {
            let s = entry_seed(seed, &cand.defender.id, &a.id);
            estimate_pair(cfg, &cand.defender.policy, &a.policy, episodes, s, None)
        })
        .collect::<Result<_>>()?;
    let col: Vec<PayoffEstimate> = game
        .defenders
        .par_iter()
        .map(|d| {
            let s = entry_seed(seed, &d.id, &cand.attacker.id);
            estimate_pair(cfg, &d.policy, &cand.attacker.policy, episodes, s, None)
        })
        .collect::<Result<_>>()?;
    let existing = game.max_std_error();

    let d_util = dot(&sa.probs, &row);
    let d_best = g
        .iter()
        .map(|r| r.iter().zip(&sa.probs).map(|(v, p)| v * p).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let d_delta = margin.delta(existing.max(max_se(&row)));
    let d_margin = d_util - d_best;

    // the attacker's utility is the negated defender payoff
    let a_util = -dot(&sd.probs, &col);
    let a_best = (0..sa.len())
        .map(|j| -g.iter().zip(&sd.probs).map(|(r, p)| r[j] * p).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let a_delta = margin.delta(existing.max(max_se(&col)));
    let a_margin = a_util - a_best;

    let side_check = |c: &Strategy, side, utility, best, margin: f64, delta: f64| SideCheck {
        candidate: c.id.clone(),
        side,
        utility,
        best_existing: best,
        margin,
        delta,
        valid: margin > 0.0 && margin >= delta,
    };
    Ok(Estimated {
        checks: [
            side_check(&cand.defender, Side::Defender, d_util, d_best, d_margin, d_delta),
            side_check(&cand.attacker, Side::Attacker, a_util, a_best, a_margin, a_delta),
        ],
        row,
        col,
    })
}

/// Add the candidates that beat every existing strategy of their side
/// against the NE by at least δ. When neither does, `retrain` supplies a
/// second pair (trained without exploration) that gets the same check; a
/// second double failure signals termination. Accepted strategies enter the
/// game with their estimated payoffs and the missing cross entry is filled.
#[allow(clippy::too_many_arguments)]
pub fn validate_best_responses<F>(
    cfg: &GameConfig,
    game: &mut RestrictedGame,
    sd: &MixedStrategy,
    sa: &MixedStrategy,
    first: Candidates,
    margin: Margin,
    episodes: usize,
    seed: u64,
    retrain: F,
) -> Result<Validation>
where
    F: FnOnce() -> Result<Candidates>,
{
    let mut est = check_pair(cfg, game, sd, sa, &first, margin, episodes, seed)?;
    let mut checks: Vec<SideCheck> = est.checks.to_vec();
    let mut cand = first;
    let mut retrained = None;
    if !est.checks.iter().any(|c| c.valid) {
        cand = retrain()?;
        retrained = Some((cand.defender.id.clone(), cand.attacker.id.clone()));
        est = check_pair(cfg, game, sd, sa, &cand, margin, episodes, seed)?;
        checks.extend(est.checks.iter().cloned());
    }
    let mut added = Vec::new();
    if est.checks[0].valid {
        game.add_defender(cand.defender.clone())?;
        let d = game.defenders.len() - 1;
        for (a, e) in est.row.iter().enumerate() {
            game.set_entry(d, a, *e);
        }
        added.push(cand.defender.id.clone());
    }
    if est.checks[1].valid {
        game.add_attacker(cand.attacker.clone())?;
        let a = game.attackers.len() - 1;
        for (d, e) in est.col.iter().enumerate() {
            game.set_entry(d, a, *e);
        }
        added.push(cand.attacker.id.clone());
    }
    if added.len() == 2 {
        estimate_payoff_matrix(game, cfg, episodes, seed, None)?;
    }
    let terminate = added.is_empty();
    Ok(Validation {
        checks,
        added,
        retrained,
        terminate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Cell, MapKind};
    use crate::policies::{HeuristicAttackerParams, HeuristicDefenderParams, PurePolicy};

    fn cfg() -> GameConfig {
        let mut c = GameConfig::preset(3, MapKind::Uniform, 2).unwrap();
        c.horizon = 3;
        c
    }

    fn game(c: &GameConfig) -> RestrictedGame {
        let mut g = RestrictedGame::new(
            vec![Strategy::new("stay", PurePolicy::Stationary(Side::Defender))],
            vec![Strategy::new(
                "heur",
                PurePolicy::HeuristicAttacker(HeuristicAttackerParams::default()),
            )],
        )
        .unwrap();
        estimate_payoff_matrix(&mut g, c, 400, 5, None).unwrap();
        g
    }

    fn ne(g: &RestrictedGame) -> (MixedStrategy, MixedStrategy) {
        let (d, a, _) = g.solve().unwrap();
        (d, a)
    }

    #[test]
    fn identical_candidates_are_rejected_and_terminate() {
        let c = cfg();
        let mut g = game(&c);
        let (sd, sa) = ne(&g);
        let same = || Candidates {
            defender: Strategy::new("stay-2", PurePolicy::Stationary(Side::Defender)),
            attacker: Strategy::new(
                "heur-2",
                PurePolicy::HeuristicAttacker(HeuristicAttackerParams::default()),
            ),
        };
        let mut retrained = false;
        let v = validate_best_responses(&c, &mut g, &sd, &sa, same(), Margin::default(), 400, 5, || {
            retrained = true;
            Ok(Candidates {
                defender: Strategy::new("stay-3", PurePolicy::Stationary(Side::Defender)),
                attacker: Strategy::new(
                    "heur-3",
                    PurePolicy::HeuristicAttacker(HeuristicAttackerParams::default()),
                ),
            })
        })
        .unwrap();
        assert!(retrained);
        assert!(v.terminate);
        assert!(v.added.is_empty());
        assert_eq!(v.checks.len(), 4);
        assert_eq!(g.defenders.len(), 1);
        assert_eq!(g.attackers.len(), 1);
    }

    #[test]
    fn clearly_better_defender_is_added_without_retraining() {
        let c = cfg();
        let mut g = game(&c);
        let (sd, sa) = ne(&g);
        let cand = Candidates {
            defender: Strategy::new("sweep", PurePolicy::RandomSweep),
            attacker: Strategy::new("stay-a", PurePolicy::Stationary(Side::Attacker)),
        };
        let v = validate_best_responses(
            &c,
            &mut g,
            &sd,
            &sa,
            cand,
            Margin::Fixed { delta: 0.05 },
            400,
            5,
            || panic!("no retraining expected"),
        )
        .unwrap();
        let d = &v.checks[0];
        assert!(d.valid && d.margin >= d.delta, "{d:?}");
        assert!(v.added.contains(&"sweep".to_string()));
        assert!(!v.terminate);
        assert!(g.is_complete());
        assert_eq!(g.defenders.len(), 2);
    }

    #[test]
    fn margin_is_strict_even_when_delta_is_zero() {
        let c = GameConfig::new(2, 2, vec![0.0; 4], vec![Cell::new(0, 0)], Cell::new(1, 1), 2, 0, 0).unwrap();
        let stay = |id: &str| Strategy::new(id, PurePolicy::Stationary(Side::Defender));
        let mut g = RestrictedGame::new(
            vec![stay("a")],
            vec![Strategy::new("x", PurePolicy::Stationary(Side::Attacker))],
        )
        .unwrap();
        estimate_payoff_matrix(&mut g, &c, 10, 1, None).unwrap();
        let (sd, sa) = ne(&g);
        let pair = |d: &str, a: &str| Candidates {
            defender: stay(d),
            attacker: Strategy::new(a, PurePolicy::Stationary(Side::Attacker)),
        };
        let v = validate_best_responses(&c, &mut g, &sd, &sa, pair("b", "y"), Margin::default(), 10, 1, || {
            Ok(pair("c", "z"))
        })
        .unwrap();
        assert!(v.checks.iter().all(|c| c.delta == 0.0 && !c.valid));
        assert!(v.terminate);
    }

    #[test]
    fn missing_estimates_are_an_error() {
        let c = cfg();
        let mut g = RestrictedGame::new(
            vec![Strategy::new(
                "h",
                PurePolicy::HeuristicDefender(HeuristicDefenderParams::default()),
            )],
            vec![Strategy::new("x", PurePolicy::Stationary(Side::Attacker))],
        )
        .unwrap();
        let sd = MixedStrategy::pure(vec!["h".into()], 0).unwrap();
        let sa = MixedStrategy::pure(vec!["x".into()], 0).unwrap();
        let cand = Candidates {
            defender: Strategy::new("d", PurePolicy::RandomSweep),
            attacker: Strategy::new("a", PurePolicy::Stationary(Side::Attacker)),
        };
        assert!(
            validate_best_responses(&c, &mut g, &sd, &sa, cand, Margin::default(), 10, 1, || unreachable!()).is_err()
        );
    }
}
