use std::collections::BTreeMap;

use serde::Serialize;

use super::tree::{GameTree, NodeKind};
use crate::error::{GsgiError, Result};
use crate::game::Side;

/// Action probabilities for every info set of one player.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BehavioralStrategy {
    pub side: Side,
    pub probs: Vec<Vec<f64>>,
}

impl BehavioralStrategy {
    pub fn uniform(tree: &GameTree, side: Side) -> Self {
        let probs = tree
            .infosets(side)
            .iter()
            .map(|s| vec![1.0 / s.num_actions as f64; s.num_actions])
            .collect();
        BehavioralStrategy { side, probs }
    }

    /// Deterministic strategy picking `actions[i]` at info set `i`.
    pub fn pure(tree: &GameTree, side: Side, actions: &[usize]) -> Result<Self> {
        let sets = tree.infosets(side);
        if actions.len() != sets.len() || actions.iter().zip(sets).any(|(a, s)| *a >= s.num_actions) {
            return Err(GsgiError::InvalidArgument(
                "pure strategy does not fit the info sets".into(),
            ));
        }
        let probs = actions
            .iter()
            .zip(sets)
            .map(|(a, s)| (0..s.num_actions).map(|i| if i == *a { 1.0 } else { 0.0 }).collect())
            .collect();
        Ok(BehavioralStrategy { side, probs })
    }

    pub fn validate(&self, tree: &GameTree) -> Result<()> {
        let sets = tree.infosets(self.side);
        let ok = self.probs.len() == sets.len()
            && self.probs.iter().zip(sets).all(|(p, s)| {
                p.len() == s.num_actions && p.iter().all(|x| *x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() < 1e-9
            });
        if ok {
            Ok(())
        } else {
            Err(GsgiError::InvalidArgument(format!(
                "{} strategy is not defined on every info set",
                self.side
            )))
        }
    }
}

/// A best response: its value for the searching player and one action per
/// info set (the first legal action where the info set is unreachable).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestResponse {
    pub side: Side,
    pub value: f64,
    pub actions: Vec<usize>,
}

struct Search<'a> {
    tree: &'a GameTree,
    opponent: &'a BehavioralStrategy,
    side: Side,
    actions: Vec<usize>,
}

impl Search<'_> {
    /// Walk from `node` with opponent-and-chance reach `reach`, adding
    /// terminal contributions and collecting the searching player's next
    /// decision nodes by info set.
    fn walk(&self, node: u32, reach: f64, total: &mut f64, frontier: &mut BTreeMap<usize, Vec<(u32, f64)>>) {
        match self.tree.kind(node) {
            NodeKind::Terminal => *total += reach * self.side.sign() * self.tree.utility(node),
            NodeKind::Chance => {
                for (c, p) in self.tree.children(node).zip(self.tree.chance_probs(node)) {
                    if *p > 0.0 {
                        self.walk(c, reach * p, total, frontier);
                    }
                }
            }
            NodeKind::Decision(s) if s == self.side => {
                frontier
                    .entry(self.tree.infoset_of(node))
                    .or_default()
                    .push((node, reach));
            }
            NodeKind::Decision(_) => {
                let probs = &self.opponent.probs[self.tree.infoset_of(node)];
                for (c, p) in self.tree.children(node).zip(probs) {
                    if *p > 0.0 {
                        self.walk(c, reach * p, total, frontier);
                    }
                }
            }
        }
    }

    fn frontier_value(&mut self, frontier: BTreeMap<usize, Vec<(u32, f64)>>) -> f64 {
        frontier
            .into_iter()
            .map(|(set, members)| self.solve(set, &members))
            .sum()
    }

    /// Reach-weighted value of info set `set` under its best action.
    fn solve(&mut self, set: usize, members: &[(u32, f64)]) -> f64 {
        let n = self.tree.infosets(self.side)[set].num_actions;
        let mut best = f64::NEG_INFINITY;
        let mut best_a = 0;
        for a in 0..n {
            let mut total = 0.0;
            let mut frontier = BTreeMap::new();
            for &(node, reach) in members {
                self.walk(self.tree.child(node, a), reach, &mut total, &mut frontier);
            }
            let q = total + self.frontier_value(frontier);
            if q > best {
                best = q;
                best_a = a;
            }
        }
        self.actions[set] = best_a;
        best
    }
}

/// Best response of `side` to a fixed opponent behavioral strategy by
/// depth-first evaluation: each of the searching player's info sets takes the
/// action maximizing the reach-weighted value of its members, with reach
/// counting chance and opponent probabilities only. The value is in the
/// searching player's utility.
pub fn exact_best_response(tree: &GameTree, opponent: &BehavioralStrategy, side: Side) -> Result<BestResponse> {
    if opponent.side != side.opponent() {
        return Err(GsgiError::InvalidArgument(
            "opponent strategy belongs to the searching player".into(),
        ));
    }
    opponent.validate(tree)?;
    let mut s = Search {
        tree,
        opponent,
        side,
        actions: vec![0; tree.infosets(side).len()],
    };
    let mut total = 0.0;
    let mut frontier = BTreeMap::new();
    s.walk(GameTree::ROOT, 1.0, &mut total, &mut frontier);
    let value = total + s.frontier_value(frontier);
    Ok(BestResponse {
        side,
        value,
        actions: s.actions,
    })
}

/// Expected defender utility of a behavioral profile.
pub fn profile_value(tree: &GameTree, defender: &BehavioralStrategy, attacker: &BehavioralStrategy) -> Result<f64> {
    defender.validate(tree)?;
    attacker.validate(tree)?;
    fn go(t: &GameTree, n: u32, d: &BehavioralStrategy, a: &BehavioralStrategy) -> f64 {
        match t.kind(n) {
            NodeKind::Terminal => t.utility(n),
            NodeKind::Chance => t
                .children(n)
                .zip(t.chance_probs(n))
                .map(|(c, p)| p * go(t, c, d, a))
                .sum(),
            NodeKind::Decision(s) => {
                let probs = if s == Side::Defender { &d.probs } else { &a.probs };
                t.children(n)
                    .zip(&probs[t.infoset_of(n)])
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(c, p)| p * go(t, c, d, a))
                    .sum()
            }
        }
    }
    Ok(go(tree, GameTree::ROOT, defender, attacker))
}

/// Sum of both players' best-response values against the profile; zero
/// exactly at an equilibrium.
pub fn exploitability(tree: &GameTree, defender: &BehavioralStrategy, attacker: &BehavioralStrategy) -> Result<f64> {
    let bd = exact_best_response(tree, attacker, Side::Defender)?;
    let ba = exact_best_response(tree, defender, Side::Attacker)?;
    Ok(bd.value + ba.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::tree::TreeBuilder;

    /// Defender picks a side, attacker guesses it without seeing it;
    /// defender wins 1 on a match.
    pub(crate) fn matching_pennies() -> GameTree {
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
    fn pennies_values() {
        let t = matching_pennies();
        let ud = BehavioralStrategy::uniform(&t, Side::Defender);
        let ua = BehavioralStrategy::uniform(&t, Side::Attacker);
        assert!(exploitability(&t, &ud, &ua).unwrap().abs() < 1e-12);
        let br = exact_best_response(&t, &ua, Side::Defender).unwrap();
        assert!(br.value.abs() < 1e-12);
        let pd = BehavioralStrategy::pure(&t, Side::Defender, &[0]).unwrap();
        let pa = BehavioralStrategy::pure(&t, Side::Attacker, &[0]).unwrap();
        assert!((exploitability(&t, &pd, &pa).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(exact_best_response(&t, &pd, Side::Attacker).unwrap().actions, vec![1]);
    }

    #[test]
    fn relabeling_keeps_exploitability() {
        let t = matching_pennies();
        let d = BehavioralStrategy {
            side: Side::Defender,
            probs: vec![vec![0.3, 0.7]],
        };
        let a = BehavioralStrategy {
            side: Side::Attacker,
            probs: vec![vec![0.6, 0.4]],
        };
        let swapped = |s: &BehavioralStrategy| BehavioralStrategy {
            side: s.side,
            probs: vec![vec![s.probs[0][1], s.probs[0][0]]],
        };
        let e1 = exploitability(&t, &d, &a).unwrap();
        let e2 = exploitability(&t, &swapped(&d), &swapped(&a)).unwrap();
        assert!((e1 - e2).abs() < 1e-12);
        assert!(
            (profile_value(&t, &d, &a).unwrap() - profile_value(&t, &swapped(&d), &swapped(&a)).unwrap()).abs() < 1e-12
        );
    }

    #[test]
    fn one_step_uniform_opponent() {
        let mut b = TreeBuilder::new();
        let d = b.decision(0, Side::Defender, 0, 3).unwrap();
        let payoffs = [[1.0, 3.0], [2.0, 2.5], [0.0, 5.0]];
        for i in 0..3u32 {
            let a = b.decision(d + i, Side::Attacker, 0, 2).unwrap();
            for j in 0..2u32 {
                b.terminal(a + j, payoffs[i as usize][j as usize]).unwrap();
            }
        }
        let t = b.finish().unwrap();
        let br = exact_best_response(&t, &BehavioralStrategy::uniform(&t, Side::Attacker), Side::Defender).unwrap();
        assert!((br.value - 2.5).abs() < 1e-12);
        assert_eq!(br.actions, vec![2]);
    }
}
