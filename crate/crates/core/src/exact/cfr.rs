use std::io::Write;

use rand::Rng as _;
use serde::Serialize;

use super::br::{exploitability, BehavioralStrategy};
use super::tree::{GameTree, NodeKind};
use crate::error::{GsgiError, Result};
use crate::game::Side;
use crate::rng::{self, Rng};

/// Regret and average-strategy accumulators for one player.
#[derive(Clone, Debug)]
struct Accumulators {
    regrets: Vec<Vec<f64>>,
    strategy_sum: Vec<Vec<f64>>,
    current: Vec<Vec<f64>>,
    stamp: Vec<u64>,
}

impl Accumulators {
    fn new(tree: &GameTree, side: Side) -> Self {
        let sets = tree.infosets(side);
        let zeros = || sets.iter().map(|s| vec![0.0; s.num_actions]).collect::<Vec<_>>();
        Accumulators {
            regrets: zeros(),
            strategy_sum: zeros(),
            current: zeros(),
            stamp: vec![0; sets.len()],
        }
    }

    /// Regret-matching strategy for this iteration, fixed at first visit.
    fn strategy(&mut self, set: usize, iteration: u64) -> &[f64] {
        if self.stamp[set] != iteration {
            self.stamp[set] = iteration;
            regret_matching(&self.regrets[set], &mut self.current[set]);
        }
        &self.current[set]
    }

    fn average(&self, side: Side) -> BehavioralStrategy {
        let probs = self
            .strategy_sum
            .iter()
            .map(|s| {
                let total: f64 = s.iter().sum();
                if total > 0.0 {
                    s.iter().map(|v| v / total).collect()
                } else {
                    vec![1.0 / s.len() as f64; s.len()]
                }
            })
            .collect();
        BehavioralStrategy { side, probs }
    }
}

/// Positive regrets normalized, or uniform when none is positive.
pub fn regret_matching(regrets: &[f64], out: &mut [f64]) {
    let pos: f64 = regrets.iter().map(|r| r.max(0.0)).sum();
    if pos > 0.0 {
        for (o, r) in out.iter_mut().zip(regrets) {
            *o = r.max(0.0) / pos;
        }
    } else {
        let u = 1.0 / out.len() as f64;
        out.iter_mut().for_each(|o| *o = u);
    }
}

/// Average strategies after a CFR run, with an optional exploitability trace.
#[derive(Clone, Debug)]
pub struct CfrResult {
    pub defender: BehavioralStrategy,
    pub attacker: BehavioralStrategy,
    pub iterations: u64,
    pub trace: Vec<TracePoint>,
    /// Nodes touched per iteration, averaged.
    pub mean_nodes_per_iteration: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: u64,
    pub exploitability: f64,
}

struct Cfr<'a> {
    tree: &'a GameTree,
    acc: [Accumulators; 2],
    rng: Rng,
    iteration: u64,
    visited: u64,
}

impl Cfr<'_> {
    /// Defender utility of `node`; `reach` holds each player's own reach.
    fn traverse(&mut self, node: u32, reach: [f64; 2]) -> f64 {
        self.visited += 1;
        let tree = self.tree;
        match tree.kind(node) {
            NodeKind::Terminal => tree.utility(node),
            NodeKind::Chance => {
                let probs = tree.chance_probs(node);
                let u: f64 = self.rng.gen();
                let mut acc = 0.0;
                let mut pick = probs.len() - 1;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                self.traverse(tree.child(node, pick), reach)
            }
            NodeKind::Decision(side) => {
                let p = if side == Side::Defender { 0 } else { 1 };
                let set = tree.infoset_of(node);
                let sigma: Vec<f64> = self.acc[p].strategy(set, self.iteration).to_vec();
                let mut values = vec![0.0; sigma.len()];
                let mut value = 0.0;
                for (a, s) in sigma.iter().enumerate() {
                    let mut r = reach;
                    r[p] *= s;
                    values[a] = self.traverse(tree.child(node, a), r);
                    value += s * values[a];
                }
                let other = reach[1 - p];
                let sign = side.sign();
                let acc = &mut self.acc[p];
                for a in 0..sigma.len() {
                    acc.regrets[set][a] += other * sign * (values[a] - value);
                    acc.strategy_sum[set][a] += reach[p] * sigma[a];
                }
                value
            }
        }
    }
}

/// Chance-sampled CFR: every iteration samples one outcome at each chance
/// node and traverses all player actions, updating both players. When
/// `trace_every` is set, the exploitability of the running average is
/// recorded every that many iterations.
pub fn run_cfr(tree: &GameTree, iterations: u64, seed: u64, trace_every: Option<u64>) -> Result<CfrResult> {
    if iterations == 0 {
        return Err(GsgiError::InvalidArgument("iterations must be positive".into()));
    }
    let mut c = Cfr {
        tree,
        acc: [
            Accumulators::new(tree, Side::Defender),
            Accumulators::new(tree, Side::Attacker),
        ],
        rng: rng::stream(seed, "cfr", 0),
        iteration: 0,
        visited: 0,
    };
    let mut trace = Vec::new();
    for it in 1..=iterations {
        c.iteration = it;
        c.traverse(GameTree::ROOT, [1.0, 1.0]);
        if let Some(k) = trace_every {
            if k > 0 && it % k == 0 {
                let d = c.acc[0].average(Side::Defender);
                let a = c.acc[1].average(Side::Attacker);
                trace.push(TracePoint {
                    iteration: it,
                    exploitability: exploitability(tree, &d, &a)?,
                });
            }
        }
    }
    Ok(CfrResult {
        defender: c.acc[0].average(Side::Defender),
        attacker: c.acc[1].average(Side::Attacker),
        iterations,
        trace,
        mean_nodes_per_iteration: c.visited as f64 / iterations as f64,
    })
}

/// Average strategies as CSV: side, info set, action, probability.
pub fn write_strategy_csv<W: Write>(w: W, strategies: &[&BehavioralStrategy]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["side", "infoset", "action", "probability"])?;
    for s in strategies {
        for (i, probs) in s.probs.iter().enumerate() {
            for (a, p) in probs.iter().enumerate() {
                out.write_record([s.side.to_string(), i.to_string(), a.to_string(), p.to_string()])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(w: W, trace: &[TracePoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in trace {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::tree::TreeBuilder;

    fn pennies() -> GameTree {
        let mut b = TreeBuilder::new();
        let d = b.decision(0, Side::Defender, 0, 2).unwrap();
        for i in 0..2u32 {
            let a = b.decision(d + i, Side::Attacker, 0, 2).unwrap();
            for j in 0..2u32 {
                b.terminal(a + j, if i == j { 1.0 } else { -1.0 }).unwrap();
            }
        }
        b.finish().unwrap()
    }

    #[test]
    fn one_iteration_is_uniform() {
        let r = run_cfr(&pennies(), 1, 0, None).unwrap();
        assert_eq!(r.defender.probs, vec![vec![0.5, 0.5]]);
        assert_eq!(r.attacker.probs, vec![vec![0.5, 0.5]]);
        assert!(run_cfr(&pennies(), 0, 0, None).is_err());
    }

    #[test]
    fn pennies_converge() {
        let t = pennies();
        let r = run_cfr(&t, 10_000, 1, None).unwrap();
        for p in r.defender.probs[0].iter().chain(&r.attacker.probs[0]) {
            assert!((p - 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn regret_matching_cases() {
        let mut out = [0.0; 3];
        regret_matching(&[-1.0, 0.0, -2.0], &mut out);
        assert_eq!(out, [1.0 / 3.0; 3]);
        regret_matching(&[3.0, -1.0, 1.0], &mut out);
        assert_eq!(out, [0.75, 0.0, 0.25]);
    }
}
