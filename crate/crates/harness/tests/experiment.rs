use std::fs;
use std::path::Path;

use hyperttt_agent::records::{read_csv, CSV_HEADER};
use hyperttt_core::game::BotKind;
use hyperttt_core::policy::{read_checkpoint, write_checkpoint, HyperParams};
use hyperttt_harness::experiment::{
    evaluate_greedy, pretrain, run_experiment, AdvisorMode, Arm, ExperimentConfig, Mode, PretrainConfig,
    AGGREGATE_HEADER, SUMMARY_HEADER,
};
use hyperttt_harness::world::TransportMode;
use hyperttt_harness::HarnessError;

fn small(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        mode: Mode::Paired,
        episodes: 150,
        seeds: vec![3, 4],
        advisor_pretrain_episodes: 400,
        reward_window: 50,
        output_dir: Some(dir.to_path_buf()),
        advisor_checkpoint: Some(dir.join("advisor.ckpt")),
        ..ExperimentConfig::default()
    }
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_string).collect()
}

#[test]
fn csv_headers_are_pinned() {
    assert_eq!(
        CSV_HEADER,
        [
            "index",
            "outcome",
            "reward",
            "steps",
            "advice_asked",
            "advice_followed",
            "wall_ms"
        ]
    );
    assert_eq!(
        AGGREGATE_HEADER,
        [
            "seed",
            "arm",
            "episodes",
            "wins",
            "draws",
            "losses",
            "undiscounted_return",
            "discounted_return",
            "episodes_to_threshold",
            "advice_asked",
            "advice_followed",
            "advisor_informs",
            "wall_ms"
        ]
    );
    assert_eq!(SUMMARY_HEADER, ["arm", "metric", "n", "mean", "stddev"]);
}

#[test]
fn paired_run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.runs.len(), 4);

    for seed in [3, 4] {
        for arm in [Arm::Advisee, Arm::Solo] {
            let path = dir.path().join("episodes").join(format!("seed{seed}_{arm}.csv"));
            assert_eq!(header(&path), CSV_HEADER);
            let rows = read_csv(fs::File::open(&path).unwrap()).unwrap();
            assert_eq!(rows.len(), 150);
            assert!(rows.iter().enumerate().all(|(i, r)| r.index == i as u64));
            assert_eq!(rows, report.arm(seed, arm).unwrap().records);
            if arm == Arm::Solo {
                assert!(rows.iter().all(|r| r.advice_asked == 0));
            }
        }
    }
    let advisee = report.arm(3, Arm::Advisee).unwrap();
    let asked: u64 = advisee.records.iter().map(|r| u64::from(r.advice_asked)).sum();
    assert!(asked > 0 && asked <= cfg.transfer.ask_budget);
    assert_eq!(advisee.ask_budget_remaining, Some(cfg.transfer.ask_budget - asked));

    let aggregate = dir.path().join("aggregate.csv");
    assert_eq!(header(&aggregate), AGGREGATE_HEADER);
    assert_eq!(csv::Reader::from_path(&aggregate).unwrap().records().count(), 4);
    let summary = dir.path().join("summary.csv");
    assert_eq!(header(&summary), SUMMARY_HEADER);
    assert_eq!(csv::Reader::from_path(&summary).unwrap().records().count(), 8);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([3, 4]));
    assert_eq!(manifest["episodes"], 150);
    assert_eq!(manifest["transfer"]["askBudget"], 500);
    assert_eq!(manifest["hyperParams"]["alpha"], 0.1);

    let ckpt = read_checkpoint(&fs::read_to_string(dir.path().join("advisor.ckpt")).unwrap()).unwrap();
    assert_eq!(ckpt.table.episode_count(), 400);
}

#[test]
fn in_process_runs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&small(a.path())).unwrap();
    run_experiment(&small(b.path())).unwrap();
    for file in ["episodes/seed3_advisee.csv", "episodes/seed4_solo.csv", "advisor.ckpt"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn arms_share_the_service_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.transfer.ask_budget = 0;
    let report = run_experiment(&cfg).unwrap();
    // With no advice the two arms are the same learner.
    for seed in [3, 4] {
        let a = &report.arm(seed, Arm::Advisee).unwrap().records;
        let s = &report.arm(seed, Arm::Solo).unwrap().records;
        assert_eq!(a, s);
    }
}

#[test]
fn learning_advisor_mode_completes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        mode: Mode::Transfer,
        advisor_mode: AdvisorMode::Learning,
        seeds: vec![5],
        ..small(dir.path())
    };
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.runs.len(), 1);
    assert_eq!(report.runs[0].records.len(), 150);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        ExperimentConfig {
            reward_window: 0,
            ..ExperimentConfig::default()
        },
        ExperimentConfig {
            seeds: vec![],
            ..ExperimentConfig::default()
        },
        ExperimentConfig {
            eval_gamma: 1.5,
            ..ExperimentConfig::default()
        },
        ExperimentConfig {
            hyper_params: HyperParams {
                alpha: 0.0,
                ..HyperParams::default()
            },
            ..ExperimentConfig::default()
        },
    ];
    for cfg in bad {
        assert!(matches!(run_experiment(&cfg), Err(HarnessError::Config(_))));
    }
}

#[test]
fn checkpoint_reload_plays_the_same() {
    let hp = HyperParams::default();
    let table = pretrain(&PretrainConfig {
        episodes: 3_000,
        seed: 21,
        bot: BotKind::Random,
        hyper_params: hp,
        use_symmetry: false,
        transport: TransportMode::InProcess,
    })
    .unwrap();
    assert_eq!(table.episode_count(), 3_000);
    let text = write_checkpoint(&table, &hp, false);
    assert!(text.lines().all(|l| l.split_whitespace().count() == 3));
    let reloaded = read_checkpoint(&text).unwrap().table;
    let before = evaluate_greedy(&table, false, BotKind::Random, 100, 99).unwrap();
    let after = evaluate_greedy(&reloaded, false, BotKind::Random, 100, 99).unwrap();
    let rate = |m: &hyperttt_harness::metrics::MetricsSummary| m.wins as f64 / m.episodes as f64;
    assert!((rate(&before) - rate(&after)).abs() <= 0.05);
    assert!(rate(&before) > 0.5, "greedy win rate {}", rate(&before));
}
