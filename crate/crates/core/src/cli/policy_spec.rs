use std::path::Path;

use crate::dedol::load_strategy_bundle;
use crate::error::{GsgiError, Result};
use crate::game::Side;
use crate::nn::load_checkpoint;
use crate::policies::{HeuristicAttackerParams, HeuristicDefenderParams, PurePolicy};

#[derive(Clone, Debug)]
pub struct WeightedPolicy {
    pub id: String,
    pub policy: PurePolicy,
    pub weight: f64,
}

fn numbers(s: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| GsgiError::Config(format!("bad parameters {s:?}: {e}")))?;
    if v.len() != n {
        return Err(GsgiError::Config(format!("expected {n} parameters in {s:?}")));
    }
    Ok(v)
}

/// Parse a policy spec for `side`:
///
/// - `random-sweep`, `heuristic-defender[:WP,WI,WO]` (defender)
/// - `heuristic-attacker[:WP,WI,WO,TAU]` (attacker)
/// - `uniform`, `stay` (either side)
/// - `net:PATH` a checkpoint, `bundle:DIR` a weighted strategy bundle
///
/// Relative paths resolve against `base`.
pub fn parse_policy(spec: &str, side: Side, base: &Path) -> Result<Vec<WeightedPolicy>> {
    let (head, arg) = match spec.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (spec, None),
    };
    let one = |policy: PurePolicy| -> Result<Vec<WeightedPolicy>> {
        if policy.side() != side {
            return Err(GsgiError::Config(format!("{spec} does not play the {side}")));
        }
        Ok(vec![WeightedPolicy {
            id: spec.to_string(),
            policy,
            weight: 1.0,
        }])
    };
    match (head, arg) {
        ("random-sweep", None) => one(PurePolicy::RandomSweep),
        ("heuristic-defender", None) => one(PurePolicy::HeuristicDefender(HeuristicDefenderParams::default())),
        ("heuristic-defender", Some(a)) => {
            let v = numbers(a, 3)?;
            one(PurePolicy::HeuristicDefender(HeuristicDefenderParams {
                w_p: v[0],
                w_i: v[1],
                w_o: v[2],
            }))
        }
        ("heuristic-attacker", None) => one(PurePolicy::HeuristicAttacker(HeuristicAttackerParams::default())),
        ("heuristic-attacker", Some(a)) => {
            let v = numbers(a, 4)?;
            let p = HeuristicAttackerParams {
                w_p: v[0],
                w_i: v[1],
                w_o: v[2],
                tau: v[3],
            };
            p.validate()?;
            one(PurePolicy::HeuristicAttacker(p))
        }
        ("uniform", None) => one(PurePolicy::UniformRandom(side)),
        ("stay", None) => one(PurePolicy::Stationary(side)),
        ("net", Some(p)) => one(PurePolicy::network(load_checkpoint(&base.join(p))?, side)?),
        ("bundle", Some(d)) => {
            let out: Vec<WeightedPolicy> = load_strategy_bundle(&base.join(d))?
                .into_iter()
                .map(|(id, policy, weight)| WeightedPolicy { id, policy, weight })
                .collect();
            if out.iter().any(|w| w.policy.side() != side) {
                return Err(GsgiError::Config(format!("bundle {d} does not play the {side}")));
            }
            Ok(out)
        }
        _ => Err(GsgiError::Config(format!("unknown policy spec {spec:?}"))),
    }
}
