mod common;

use common::{coffee_config, coffee_dir, tree, ScriptedModel, CORE_COMPONENTS};
use sadgen::eval::ReportRow;
use sadgen::llm::{CassetteStore, ReplayClient};
use sadgen::pipeline::{run_pipeline, run_pipeline_with, InputSpec, Manifest, PipelineConfig, Typologies};
use sadgen::model::Typology;
use std::fs;

fn replay() -> ReplayClient {
    ReplayClient::new(CassetteStore::new(coffee_dir().join("cassettes")))
}

#[test]
fn replay_run_writes_every_artifact() {
    let out = tempfile::tempdir().unwrap();
    let manifest = run_pipeline_with(&coffee_config(out.path()), &replay()).unwrap();
    assert_eq!(manifest.stages, ["ingest", "emit-uml", "abstract", "gensm", "score", "report"]);
    assert_eq!(manifest.classes, 7);
    let mut components = manifest.components.clone();
    components.sort();
    let mut want = CORE_COMPONENTS.to_vec();
    want.sort();
    assert_eq!(components, want);
    assert_eq!(manifest.runs.len(), 15);
    assert_eq!(manifest.cards.len(), 15);
    assert!(manifest
        .notices
        .iter()
        .any(|n| n.starts_with("gensm: CoffeeMachine.general sample 1 dropped")));

    for rel in &manifest.artifacts {
        assert!(out.path().join(rel).is_file(), "{rel} listed but missing");
    }
    let on_disk: Vec<String> = tree(out.path()).into_iter().map(|(p, _)| p).collect();
    assert_eq!(on_disk, manifest.artifacts);

    let stored: Manifest = serde_json::from_str(&fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(stored, manifest);

    let row: ReportRow =
        serde_json::from_str(&fs::read_to_string(out.path().join("cards/CoffeeMachine.domain.card.json")).unwrap())
            .unwrap();
    assert_eq!(row.typology, Typology::Domain);
    assert_eq!(row.card.q9.triple.to_string(), "0/1 (0)");
    let report = fs::read_to_string(out.path().join("report.md")).unwrap();
    assert_eq!(report.lines().count(), 2 + 15);
}

#[test]
fn replay_matches_the_recording_model() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline_with(&coffee_config(a.path()), &replay()).unwrap();
    let live = ScriptedModel::new(coffee_dir().join("ground_truth"));
    run_pipeline_with(&coffee_config(b.path()), &live).unwrap();
    let strip = |t: Vec<(String, Vec<u8>)>| -> Vec<(String, Vec<u8>)> {
        // runs record the backend they came from
        t.into_iter().filter(|(p, _)| !p.starts_with("runs/") && p != "selection.json").collect()
    };
    assert!(strip(tree(a.path())) == strip(tree(b.path())));
}

#[test]
fn missing_input_is_a_config_error() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = coffee_config(out.path());
    cfg.input = InputSpec::Xmi(out.path().join("absent.xmi"));
    let path = out.path().join("pipeline.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let err = run_pipeline(&path).unwrap_err();
    assert_eq!(err.stage, "config");
    assert!(err.message.contains("absent.xmi"), "{err}");
    assert!(!out.path().join("model.json").exists());
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pipeline.json");
    fs::write(&path, r#"{"input": {"xmi": "m.xmi"}, "output_dir": "out", "typologies": "general"}"#).unwrap();
    let err = PipelineConfig::load(&path).unwrap_err();
    assert_eq!(err.stage, "config");
    assert!(err.message.contains("typologies"), "{err}");

    fs::write(&path, r#"{"input": {"xmi": "m.xmi"}, "output_dir": "out", "typology": "expert"}"#).unwrap();
    let (cfg, base) = PipelineConfig::load(&path).unwrap();
    assert_eq!(cfg.typology, Typologies::One(Typology::Expert));
    assert_eq!(cfg.resolved(&base).output_dir, dir.path().join("out"));
}

#[test]
fn without_ground_truth_scoring_is_skipped() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = coffee_config(out.path());
    cfg.ground_truth_dir = None;
    cfg.typology = Typologies::One(Typology::General);
    let manifest = run_pipeline_with(&cfg, &replay()).unwrap();
    assert_eq!(manifest.stages, ["ingest", "emit-uml", "abstract", "gensm"]);
    assert!(manifest.cards.is_empty());
    assert!(manifest
        .notices
        .contains(&"score: no ground-truth directory, scoring skipped".to_string()));
    assert!(!out.path().join("report.md").exists());
}

#[test]
fn missing_cassette_names_the_stage_and_what_was_written() {
    let out = tempfile::tempdir().unwrap();
    let empty = tempfile::tempdir().unwrap();
    let client = ReplayClient::new(CassetteStore::new(empty.path()));
    let err = run_pipeline_with(&coffee_config(out.path()), &client).unwrap_err();
    assert_eq!(err.stage, "abstract");
    assert!(err.artifacts.contains(&"model.json".to_string()));
    assert!(err.artifacts.contains(&"class_diagram.puml".to_string()));
    assert!(err.to_string().contains("written so far"), "{err}");
}
