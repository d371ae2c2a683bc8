use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsbg_bench::output::{write_results, RESULTS_FILE};
use rsbg_bench::{run_experiment_with_workers, ExperimentConfig, ResultsFile};
use rsbg_core::crossing::{CrossingParams, CrossingWorld, TrueBehaviorDraw};
use rsbg_core::Outcome;

const SMALL: &str = r#"
name = "small"
domain = "crossing"
trials = 4
master_seed = 11

[search]
iterations = 60

[[planners]]
mode = "RSBG"
k = 4

[[planners]]
mode = "SBG"
k = 4

[[planners]]
mode = "MDP"
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SMALL).unwrap()
}

#[test]
fn planners_share_each_trial_scenario() {
    let out = run_experiment_with_workers(&small(), 1).unwrap();
    assert_eq!(out.records.len(), 12);
    for trial in 0..4 {
        let hashes: Vec<&str> = out
            .records
            .iter()
            .filter(|r| r.trial == trial)
            .map(|r| r.scenario_hash.as_str())
            .collect();
        assert_eq!(hashes.len(), 3);
        assert!(hashes.iter().all(|h| *h == hashes[0]), "trial {trial}: {hashes:?}");
    }
    let distinct: std::collections::HashSet<_> = out.records.iter().map(|r| &r.scenario_hash).collect();
    assert_eq!(distinct.len(), 4);
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = small();
    let a = run_experiment_with_workers(&cfg, 1).unwrap();
    let b = run_experiment_with_workers(&cfg, 3).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.summaries, b.summaries);
}

#[test]
fn results_directory_round_trips() {
    let out = run_experiment_with_workers(&small(), 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = write_results(dir.path(), &out).unwrap();
    assert_eq!(path, dir.path().join(RESULTS_FILE));
    for f in ["records.csv", "summary.csv", "belief_std.csv", "timing.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let parsed = ResultsFile::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(parsed.records, out.records);
    assert_eq!(parsed.summaries, out.summaries);
    let records = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + out.records.len());
}

#[test]
fn results_with_broken_percentages_are_rejected() {
    let out = run_experiment_with_workers(&small(), 1).unwrap();
    let mut file = ResultsFile::from_output(&out);
    file.summaries[0].success_pct += 10.0;
    assert!(ResultsFile::from_json(&file.to_json()).is_err());
    let mut file = ResultsFile::from_output(&out);
    file.format = "other/9".into();
    assert!(ResultsFile::from_json(&file.to_json()).is_err());
}

#[test]
fn single_hypothesis_belief_std_is_zero() {
    let out = run_experiment_with_workers(&small(), 1).unwrap();
    for r in &out.records {
        assert!(!r.belief_std.is_empty() && r.belief_std.len() <= 10);
        if r.planner == "MDP" {
            assert!(r.belief_std.iter().all(|&x| x == 0.0));
        } else {
            assert!(r.belief_std[0] > 0.0, "{}", r.planner);
        }
    }
}

#[test]
fn give_way_others_let_a_greedy_ego_through() {
    // Every other agent wants to stay 5 units behind the ego.
    let params = CrossingParams::default();
    let draws = TrueBehaviorDraw::new(vec![(5.0, 5.0); params.n_agents - 1]).unwrap();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut world = CrossingWorld::new(params.clone()).unwrap();
        let outcome = loop {
            let others = world.simulate_others(&draws, &mut rng).unwrap();
            let report = world.step_index(3, &others).unwrap();
            if report.outcome.is_terminal() {
                break report.outcome;
            }
        };
        assert_eq!(outcome, Outcome::Success, "seed {seed}");
    }
}

#[test]
fn lanechange_experiment_runs() {
    let text = r#"
domain = "lanechange"
trials = 3
master_seed = 5
[search]
iterations = 20
[[planners]]
mode = "RSBG"
hypothesis_kind = "2D"
k = 16
[[planners]]
mode = "SBGFullInfo"
"#;
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    let out = run_experiment_with_workers(&cfg, 1).unwrap();
    assert_eq!(out.summaries.len(), 2);
    assert_eq!(out.summaries[0].planner, "RSBG-2D-K16");
    for r in &out.records {
        assert!(r.steps <= cfg.lanechange.max_steps());
    }
}
