#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use gsgi::game::{AttackerAction, Cell, GameConfig, GameState, Move, Side, StepEvents};
use gsgi::Result;
use rand::seq::SliceRandom;
use rand::Rng;

/// Random small instance: grid up to `max_side` per dimension, random success
/// map, one to three entry points.
pub fn random_config<R: Rng>(r: &mut R, max_side: usize, max_horizon: u32, max_tools: u32) -> GameConfig {
    let rows = r.gen_range(1..=max_side);
    let cols = r.gen_range(1..=max_side);
    let cells: Vec<Cell> = (0..rows * cols).map(|i| Cell::new(i / cols, i % cols)).collect();
    let n_entries = r.gen_range(1..=cells.len().min(3));
    let entries: Vec<Cell> = cells.choose_multiple(r, n_entries).copied().collect();
    let post = *cells.choose(r).unwrap();
    let map = (0..rows * cols).map(|_| r.gen_range(0.0..=1.0)).collect();
    GameConfig::new(
        rows,
        cols,
        map,
        entries,
        post,
        r.gen_range(1..=max_horizon),
        r.gen_range(0..=max_tools),
        r.gen(),
    )
    .unwrap()
}

/// Checks every simulator invariant across one step.
pub fn check_step(
    cfg: &GameConfig,
    before: &GameState,
    after: &GameState,
    ev: &StepEvents,
) -> std::result::Result<(), String> {
    macro_rules! ensure {
        ($c:expr, $($m:tt)*) => {
            if !$c {
                return Err(format!($($m)*));
            }
        };
    }
    // positions and movement
    ensure!(
        cfg.contains(after.defender_pos),
        "defender off grid at {}",
        after.defender_pos
    );
    ensure!(
        cfg.contains(after.attacker_pos),
        "attacker off grid at {}",
        after.attacker_pos
    );
    ensure!(after.t == before.t + 1, "time went from {} to {}", before.t, after.t);

    // footprint monotonicity
    ensure!(
        before.footprints_def.is_subset_of(&after.footprints_def),
        "defender footprints shrank"
    );
    ensure!(
        before.footprints_att.is_subset_of(&after.footprints_att),
        "attacker footprints shrank"
    );
    ensure!(
        before.memory_def.is_subset_of(&after.memory_def),
        "defender memory shrank"
    );
    ensure!(
        before.memory_att.is_subset_of(&after.memory_att),
        "attacker memory shrank"
    );
    if after.defender_pos != before.defender_pos {
        let mv = ev.defender_move;
        ensure!(
            after.footprints_def.leaving(cfg.index(before.defender_pos), mv)
                && after
                    .footprints_def
                    .entering(cfg.index(after.defender_pos), mv.opposite()),
            "defender move left no footprint"
        );
    }
    if after.attacker_pos != before.attacker_pos {
        let mv = ev.attacker_action.expect("moved without acting").mv;
        ensure!(
            after.footprints_att.leaving(cfg.index(before.attacker_pos), mv)
                && after
                    .footprints_att
                    .entering(cfg.index(after.attacker_pos), mv.opposite()),
            "attacker move left no footprint"
        );
    }
    for c in 0..cfg.num_cells() {
        let moved_from_or_to = |a: Cell, b: Cell| cfg.index(a) == c || cfg.index(b) == c;
        if !moved_from_or_to(before.defender_pos, after.defender_pos) {
            ensure!(
                before.footprints_def.get(c) == after.footprints_def.get(c),
                "defender footprint changed in cell {c}"
            );
        }
        if !moved_from_or_to(before.attacker_pos, after.attacker_pos) {
            ensure!(
                before.footprints_att.get(c) == after.footprints_att.get(c),
                "attacker footprint changed in cell {c}"
            );
        }
    }

    // tool conservation
    let accounted =
        |s: &GameState| s.tools_remaining + s.deployed_tools.len() as u32 + s.tools_removed + s.tools_triggered;
    ensure!(
        accounted(after) == cfg.num_tools,
        "tools not conserved: {}",
        accounted(after)
    );
    ensure!(
        after.tools_removed - before.tools_removed == ev.removed.len() as u32
            && after.tools_triggered - before.tools_triggered == ev.triggered.len() as u32,
        "tool counters disagree with events"
    );
    ensure!(
        after.deployed_tools.windows(2).all(|w| w[0] <= w[1]),
        "deployed tools unsorted"
    );
    ensure!(
        !after.deployed_tools.contains(&after.defender_pos),
        "tool survived the defender's visit"
    );

    // zero-sum bookkeeping
    let expected: f64 = ev.triggered.iter().map(|c| cfg.rewards.p_attack.at(*c)).sum::<f64>()
        + ev.removed.iter().map(|c| cfg.rewards.r_tool.at(*c)).sum::<f64>()
        + if ev.caught { cfg.rewards.r_catch } else { 0.0 };
    ensure!(
        (ev.defender_reward - expected).abs() < 1e-9,
        "reward {} != {}",
        ev.defender_reward,
        expected
    );
    let total = after.cumulative_defender_reward - before.cumulative_defender_reward;
    ensure!((total - ev.defender_reward).abs() < 1e-9, "cumulative reward drifted");
    ensure!(
        ev.caught == (after.attacker_caught && !before.attacker_caught),
        "capture flag mismatch"
    );

    // observation causality: memory only holds footprints that exist, and the
    // current cell is seen in full
    ensure!(
        after.memory_def.is_subset_of(&after.footprints_att),
        "defender remembers unseen footprints"
    );
    ensure!(
        after.memory_att.is_subset_of(&after.footprints_def),
        "attacker remembers unseen footprints"
    );
    let d = cfg.index(after.defender_pos);
    ensure!(
        after.memory_def.get(d) == after.footprints_att.get(d),
        "defender misses footprints in its cell"
    );
    if after.attacker_active() {
        let a = cfg.index(after.attacker_pos);
        ensure!(
            after.memory_att.get(a) == after.footprints_def.get(a),
            "attacker misses footprints in its cell"
        );
    }
    for c in 0..cfg.num_cells() {
        if c != d {
            ensure!(
                before.memory_def.get(c) == after.memory_def.get(c),
                "defender memory changed away from it"
            );
        }
        if !(after.attacker_active() && c == cfg.index(after.attacker_pos)) {
            ensure!(
                before.memory_att.get(c) == after.memory_att.get(c),
                "attacker memory changed away from it"
            );
        }
    }
    ensure!(
        after.visible_bits(cfg, Side::Defender) == after.footprints_att.get(d),
        "visible bits disagree"
    );

    // termination
    let done =
        after.t >= cfg.horizon || ((after.attacker_caught || after.attacker_home) && after.deployed_tools.is_empty());
    ensure!(after.terminal == done && ev.terminal == done, "terminal flag mismatch");
    Ok(())
}

/// One episode of uniformly random actions; returns the states and events.
pub fn random_episode(cfg: &GameConfig, seed: u64) -> Result<(Vec<GameState>, Vec<StepEvents>)> {
    let mut r = gsgi::rng::stream(seed, "invariants", 0);
    let entry = *cfg.entry_points.choose(&mut r).unwrap();
    let mut s = GameState::initial(cfg, entry);
    let mut states = vec![s.clone()];
    let mut events = Vec::new();
    while !s.terminal {
        let d = Move::ALL[r.gen_range(0..5)];
        let a = AttackerAction::from_index(r.gen_range(0..10)).unwrap();
        events.push(s.step(cfg, d, a, &mut r)?);
        states.push(s.clone());
    }
    Ok((states, events))
}

/// Run the full invariant suite until `steps` random steps have been checked.
/// Returns the number of steps checked.
pub fn invariant_suite(steps: usize, seed: u64) -> std::result::Result<usize, String> {
    let mut r = gsgi::rng::stream(seed, "instances", 0);
    let mut checked = 0;
    let mut episode = 0u64;
    while checked < steps {
        let cfg = random_config(&mut r, 6, 30, 4);
        let (states, events) = random_episode(&cfg, episode).map_err(|e| e.to_string())?;
        for (i, ev) in events.iter().enumerate() {
            check_step(&cfg, &states[i], &states[i + 1], ev).map_err(|e| format!("episode {episode} step {i}: {e}"))?;
        }
        // replay determinism
        let (states2, events2) = random_episode(&cfg, episode).map_err(|e| e.to_string())?;
        if states2 != states || events2 != events {
            return Err(format!("episode {episode} did not replay"));
        }
        checked += events.len();
        episode += 1;
    }
    Ok(checked)
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
