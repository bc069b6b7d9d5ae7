use gsgi::dedol::{
    load_strategy_bundle, run_dedol, write_report_jsonl, write_strategy_bundle, DedolConfig, Margin, ModePlan,
};
use gsgi::game::{play_episode, Cell, GameConfig, MapKind};

fn small_run(plan: ModePlan) -> (GameConfig, gsgi::dedol::DedolReport) {
    let mut cfg = GameConfig::preset(3, MapKind::Uniform, 2).unwrap();
    cfg.horizon = 3;
    let mut d = DedolConfig::for_game(&cfg, 21);
    d.plan = plan;
    d.vanilla_psro = true;
    d.max_iterations = 2;
    d.local_iterations = 1;
    d.local_entries = vec![Cell::new(0, 0), Cell::new(2, 2)];
    d.margin = Margin::Fixed { delta: 0.0 };
    d.training.episodes = 80;
    d.training.epsilon.every = 4;
    d.training.curve_every = 40;
    d.episodes_per_entry = 20;
    let r = run_dedol(&cfg, &d).unwrap();
    (cfg, r)
}

#[test]
fn bundle_roundtrip_reproduces_the_final_mixture() {
    let (cfg, report) = small_run(ModePlan::PureGlobal);
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_strategy_bundle(dir.path(), &report).unwrap();
    let loaded = load_strategy_bundle(dir.path()).unwrap();
    assert_eq!(loaded.len(), manifest.strategies.len());
    let total: f64 = loaded.iter().map(|(_, _, p)| p).sum();
    assert!((total - 1.0).abs() < 1e-9);
    for ((id, _, p), e) in loaded.iter().zip(&manifest.strategies) {
        assert_eq!(id, &e.id);
        assert_eq!(*p, e.prob);
    }
    // the loaded policies play exactly like the originals
    let attacker = report.game.attackers[0].policy.clone();
    for (id, policy, _) in &loaded {
        let orig = report.game.defenders.iter().find(|s| &s.id == id).unwrap();
        for seed in 0..20 {
            let a = play_episode(&cfg, policy, &attacker, seed, None, false)
                .unwrap()
                .utility;
            let b = play_episode(&cfg, &orig.policy, &attacker, seed, None, false)
                .unwrap()
                .utility;
            assert_eq!(a.to_bits(), b.to_bits(), "{id} seed {seed}");
        }
    }
}

#[test]
fn report_lines_follow_the_records() {
    let (_, report) = small_run(ModePlan::PureGlobal);
    let mut buf = Vec::new();
    write_report_jsonl(&mut buf, &report).unwrap();
    let lines: Vec<serde_json::Value> = String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), report.records.len() + 1);
    assert_eq!(lines.last().unwrap()["type"], "final");
    for (l, r) in lines.iter().zip(&report.records) {
        assert_eq!(l["type"], "iteration");
        assert_eq!(l["iteration"], r.iteration);
    }
    let eus: Vec<f64> = report.records.iter().map(|r| r.defender_eu).collect();
    let best = eus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(report.final_strategy.eu, Some(best));
}

#[test]
fn runs_are_deterministic() {
    let (_, a) = small_run(ModePlan::PureGlobal);
    let (_, b) = small_run(ModePlan::PureGlobal);
    assert_eq!(a.final_strategy, b.final_strategy);
    assert_eq!(a.game.matrix().unwrap(), b.game.matrix().unwrap());
}

#[test]
fn local_phases_feed_the_global_game() {
    let (_, report) = small_run(ModePlan::LocalThenGlobal);
    assert_eq!(report.locals.len(), 2);
    let ids = report.game.defender_ids();
    for tag in ["l00", "l22"] {
        let local = report.locals.iter().find(|l| l.final_strategy.phase == tag).unwrap();
        assert!(local.global_eu.is_finite());
        for r in report.records.iter().filter(|r| r.phase == tag) {
            for id in r.validation.added.iter().filter(|id| id.contains("-d")) {
                assert!(ids.contains(id), "{id} missing from the global game");
            }
        }
    }
    assert!(report.records.iter().any(|r| r.phase == "g"));
    assert!(report.game.is_complete());
}
