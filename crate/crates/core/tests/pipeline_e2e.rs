//! Pipeline integration: the bundled corpus stays pinned to its generator,
//! completed runs are idempotent, degraded inputs degrade gracefully, and a
//! frozen small run reproduces its golden report byte-for-byte.

use panelsim::corpus::{Corpus, SourceId};
use panelsim::demo;
use panelsim::gateway::ModelPrices;
use panelsim::pipeline::{run_all, RunConfig, StageStatus};
use std::path::{Path, PathBuf};

fn demo_corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo/corpus")
}

/// The shipped demo corpus files must stay exactly what `demo::demo_corpus`
/// generates (regenerate with `panelsim demo --out demo`).
#[test]
fn bundled_corpus_matches_generator() {
    let loaded = Corpus::load(&demo_corpus_dir()).unwrap();
    assert_eq!(loaded, demo::demo_corpus());
}

#[test]
fn corpus_save_load_round_trip() {
    let corpus = demo::demo_corpus();
    let dir = tempfile::tempdir().unwrap();
    corpus.save(dir.path()).unwrap();
    let reloaded = Corpus::load(dir.path()).unwrap();
    assert_eq!(reloaded, corpus);
}

/// Rerunning a completed output directory performs no new gateway calls:
/// every stage is either skipped or free of backend traffic.
#[test]
fn completed_run_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::demo(&demo_corpus_dir(), &dir.path().join("out"));
    let first = run_all(&config).unwrap();
    assert!(!first.failed());
    assert!(first.cost.calls > 0);

    let second = run_all(&config).unwrap();
    assert!(!second.failed());
    assert_eq!(
        second.cost.calls, 0,
        "rerun must perform no new gateway calls, made {}",
        second.cost.calls
    );
    for stage in &second.stages {
        if stage.name.starts_with("simulate") || stage.name == "judge" || stage.name == "build_memories" {
            assert_eq!(
                stage.status,
                StageStatus::Skipped,
                "stage {} should be cached",
                stage.name
            );
        }
    }
}

/// Without session-2 responses the human-human rows are missing while agent
/// rows still come out.
#[test]
fn missing_session_two_still_produces_agent_rows() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    let mut corpus = demo::demo_corpus();
    corpus.response_sets.remove(&SourceId::HumanS2);
    corpus.save(&corpus_dir).unwrap();

    let config = RunConfig::demo(&corpus_dir, &dir.path().join("out"));
    let manifest = run_all(&config).unwrap();
    assert!(!manifest.failed(), "{manifest:?}");

    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/report.json")).unwrap(),
    )
    .unwrap();
    let cells = &report["individual"]["overall"]["cells"];
    assert!(cells.get("human-human2").is_none());
    assert!(cells["human-interview_based"]["mae"]["mean"].is_number());
    assert!(report["individual"]["overall"]["relative_accuracy_percent"]
        .as_object()
        .unwrap()
        .is_empty());
}

/// A mid-run budget blowout leaves a partial simulate stage; evaluation
/// proceeds over the participants that completed.
#[test]
fn cost_cap_yields_partial_simulate_and_partial_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::demo(&demo_corpus_dir(), &dir.path().join("out"));
    config.judge.enabled = false;
    config.gateway.max_in_flight = 1;
    for model in ["mock-chat", "mock-chat-b", "mock-embed"] {
        config.gateway.rate_card.insert(
            model.into(),
            ModelPrices {
                input_per_million: 2.0,
                output_per_million: 2.0,
            },
        );
    }
    // Enough budget for roughly two participants' worth of calls; the exact
    // cutoff doesn't matter, partial coverage does.
    config.gateway.cost_cap_dollars = Some(0.8);
    let manifest = run_all(&config).unwrap();

    let partial = manifest
        .stages
        .iter()
        .filter(|s| s.name.starts_with("simulate"))
        .any(|s| s.status == StageStatus::Partial || s.status == StageStatus::Failed);
    assert!(partial, "expected a partial simulate stage: {manifest:?}");

    let evaluate = manifest
        .stages
        .iter()
        .find(|s| s.name == "evaluate")
        .expect("evaluate stage present");
    assert_eq!(evaluate.status, StageStatus::Completed);

    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/report.json")).unwrap(),
    )
    .unwrap();
    // the human-human pair still covers everyone
    assert_eq!(
        report["individual"]["overall"]["cells"]["human-human2"]["mae"]["n_participants"],
        5
    );
}

/// Frozen golden report: a fixed small run must reproduce report.json
/// byte-for-byte. Regenerate with UPDATE_GOLDEN=1 after intentional format
/// changes.
#[test]
fn small_run_report_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    let mut corpus = demo::demo_corpus();
    corpus.participants.truncate(2);
    let keep: Vec<String> = corpus.participants.iter().map(|p| p.id.clone()).collect();
    for set in corpus.response_sets.values_mut() {
        set.cells.retain(|(p, _), _| keep.contains(p));
    }
    corpus.save(&corpus_dir).unwrap();

    let mut config = RunConfig::demo(&corpus_dir, &dir.path().join("out"));
    config.agents.variants = vec![panelsim::agent::Variant::ScratchpadOnly];
    config.metrics.bootstrap_resamples = 100;
    config.metrics.rematch = false;
    let manifest = run_all(&config).unwrap();
    assert!(!manifest.failed(), "{manifest:?}");

    let produced = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report_small.json");
    if std::env::var("UPDATE_GOLDEN").is_ok() {
        std::fs::write(&golden_path, &produced).unwrap();
        return;
    }
    let golden = std::fs::read_to_string(&golden_path).expect(
        "golden report missing; run with UPDATE_GOLDEN=1 to create it",
    );
    assert_eq!(produced, golden, "report.json drifted from the golden run");
}

/// Histogram CSVs load back to exactly the counts that were emitted.
#[test]
fn histogram_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::demo(&demo_corpus_dir(), &dir.path().join("out"));
    let manifest = run_all(&config).unwrap();
    assert!(!manifest.failed());

    let corpus = Corpus::load(&demo_corpus_dir()).unwrap();
    let s1 = &corpus.response_sets[&SourceId::HumanS1];
    let expected = panelsim::metrics::response_histograms(
        s1,
        &corpus,
        panelsim::metrics::GroupBy::Overall,
    )
    .remove("overall")
    .unwrap();

    let text =
        std::fs::read_to_string(dir.path().join("out/tables/histogram_likert.csv")).unwrap();
    let mut counts = vec![0u64; 7];
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells[0] == "overall" && cells[2] == "human_s1" {
            let category: i64 = cells[3].parse().unwrap();
            counts[(category - 1) as usize] = cells[4].parse().unwrap();
        }
    }
    assert_eq!(
        counts,
        expected[&panelsim::corpus::CategoricalKind::Likert7]
    );
}
