mod common;

use gsgi::game::{play_episode, rollout_episode, AttackerAction, GameConfig, GameState, MapKind, Move, Side};
use gsgi::policies::{
    direction_features, heuristic_move_distribution, HeuristicAttackerParams, HeuristicDefenderParams, PolicyState,
    PurePolicy,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn policy_episode(cfg: &GameConfig, d: &PurePolicy, a: &PurePolicy, seed: u64) -> Result<usize, String> {
    let mut r = gsgi::rng::stream(seed, "policy-test", 0);
    let entry = gsgi::game::sample_entry(cfg, seed);
    let mut s = GameState::initial(cfg, entry);
    let (mut ds, mut as_) = (PolicyState::Fresh, PolicyState::Fresh);
    let mut steps = 0;
    while !s.terminal {
        let di = d
            .act(&s.observation(cfg, Side::Defender), &mut ds, &mut r)
            .map_err(|e| e.to_string())?;
        let ai = a
            .act(&s.observation(cfg, Side::Attacker), &mut as_, &mut r)
            .map_err(|e| e.to_string())?;
        let before = s.clone();
        let ev = s
            .step(
                cfg,
                Move::from_index(di).unwrap(),
                AttackerAction::from_index(ai).unwrap(),
                &mut r,
            )
            .map_err(|e| e.to_string())?;
        common::check_step(cfg, &before, &s, &ev)?;
        steps += 1;
    }
    Ok(steps)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_play_keeps_invariants(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let cfg = common::random_config(&mut r, 5, 20, 4);
        let (states, events) = common::random_episode(&cfg, seed).unwrap();
        for (i, ev) in events.iter().enumerate() {
            if let Err(e) = common::check_step(&cfg, &states[i], &states[i + 1], ev) {
                return Err(TestCaseError::fail(e));
            }
        }
        prop_assert!(events.len() as u32 <= cfg.horizon);
    }

    #[test]
    fn heuristic_play_keeps_invariants(seed in any::<u64>(), wp in -3.0..3.0f64, wi in -3.0..3.0f64, wo in -3.0..3.0f64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let cfg = common::random_config(&mut r, 5, 20, 4);
        let d = PurePolicy::HeuristicDefender(HeuristicDefenderParams { w_p: wp, w_i: wi, w_o: wo });
        let a = PurePolicy::HeuristicAttacker(HeuristicAttackerParams::default());
        prop_assert!(policy_episode(&cfg, &d, &a, seed).is_ok());
    }

    #[test]
    fn sweep_never_leaves_the_grid(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let cfg = common::random_config(&mut r, 6, 30, 3);
        let a = PurePolicy::UniformRandom(Side::Attacker);
        if let Err(e) = policy_episode(&cfg, &PurePolicy::RandomSweep, &a, seed) {
            return Err(TestCaseError::fail(e));
        }
    }

    #[test]
    fn episodes_replay_from_their_seed(seed in any::<u64>()) {
        let cfg = GameConfig::preset(3, MapKind::GaussianMixture, seed % 7).unwrap();
        let d = PurePolicy::RandomSweep;
        let a = PurePolicy::HeuristicAttacker(HeuristicAttackerParams::default());
        let e1 = rollout_episode(&cfg, &d, &a, seed).unwrap();
        let e2 = rollout_episode(&cfg, &d, &a, seed).unwrap();
        prop_assert_eq!(&e1.replay, &e2.replay);
        prop_assert_eq!(e1.utility.to_bits(), e2.utility.to_bits());
        let sum: f64 = e1.replay.iter().map(|s| s.defender_reward).sum();
        prop_assert!((sum - e1.utility).abs() < 1e-9);
        let quiet = play_episode(&cfg, &d, &a, seed, None, false).unwrap();
        prop_assert_eq!(quiet.utility.to_bits(), e1.utility.to_bits());
        prop_assert!(quiet.replay.is_empty());
    }

    #[test]
    fn move_softmax_is_a_distribution(seed in any::<u64>(), wp in -20.0..20.0f64, wi in -20.0..20.0f64, wo in -20.0..20.0f64, shift in -5.0..5.0f64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let cfg = common::random_config(&mut r, 6, 5, 1);
        let (states, _) = common::random_episode(&cfg, seed).unwrap();
        let s = states.last().unwrap();
        let f = direction_features(&s.observation(&cfg, Side::Defender));
        let p = heuristic_move_distribution(&f, wp, wi, wo).unwrap();
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // a common offset on the success feature leaves the distribution alone
        let mut g = f;
        g.avg_success.iter_mut().for_each(|x| *x += shift);
        let q = heuristic_move_distribution(&g, wp, wi, wo).unwrap();
        for (x, y) in p.iter().zip(&q) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        // zero weights are uniform
        let u = heuristic_move_distribution(&f, 0.0, 0.0, 0.0).unwrap();
        prop_assert!(u.iter().all(|x| (x - 0.2).abs() < 1e-15));
    }
}

#[test]
fn invariant_suite_over_many_steps() {
    let n = common::invariant_suite(20_000, 3).unwrap();
    assert!(n >= 20_000);
}

#[test]
fn moves_into_walls_stay_put() {
    let cfg = GameConfig::preset(3, MapKind::Uniform, 0).unwrap();
    let mut s = GameState::initial(&cfg, cfg.entry_points[0]);
    let mut r = gsgi::rng::stream(0, "walls", 0);
    let start = s.attacker_pos;
    assert_eq!(start.row, 0);
    s.step(&cfg, Move::Stay, AttackerAction::new(Move::Up, false), &mut r)
        .unwrap();
    assert_eq!(s.attacker_pos, start);
    assert_eq!(s.footprints_att.count(), 0);
}
