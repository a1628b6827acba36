mod common;

use common::coffee_dir;
use sadgen::ingest::{
    load_class_model, model_from_json, model_to_json, parse_xmi, save_model, scan_cpp_sources, IngestError,
    ModelDocument, ScanOptions,
};
use sadgen::model::{validate_class_model, Association, AssociationKind};
use sadgen::plantuml::emit_class_plantuml;
use std::path::PathBuf;

fn xmi(name: &str) -> Vec<u8> {
    std::fs::read(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/xmi").join(name)).unwrap()
}

#[test]
fn two_class_export() {
    let parsed = parse_xmi(&xmi("coffee_box.xmi")).unwrap();
    assert!(parsed.warnings.is_empty(), "{:?}", parsed.warnings);
    let m = parsed.value;
    assert_eq!(m.class_names().collect::<Vec<_>>(), ["CoffeeMachine", "Boiler"]);
    let cm = m.class("CoffeeMachine").unwrap();
    assert_eq!(cm.attributes.len(), 1);
    assert_eq!(cm.attributes[0].name, "cups");
    assert_eq!(cm.operations.iter().map(|o| o.name.as_str()).collect::<Vec<_>>(), ["brew", "powerOn"]);
    assert_eq!(m.class("Boiler").unwrap().operations[0].parameters.len(), 1);
    assert_eq!(m.associations.len(), 1);
    let a = &m.associations[0];
    assert_eq!((a.source.as_str(), a.target.as_str()), ("CoffeeMachine", "Boiler"));
    assert_eq!(a.label.as_deref(), Some("itsBoiler"));
    assert_eq!(a.kind, AssociationKind::Composition);
    assert!(validate_class_model(&m).is_empty());

    let uml = emit_class_plantuml(&m);
    assert!(uml.contains("class CoffeeMachine"));
    assert!(uml.contains("CoffeeMachine *--"), "{uml}");
}

#[test]
fn dangling_member_end_is_dropped_with_a_warning() {
    let parsed = parse_xmi(&xmi("dangling_end.xmi")).unwrap();
    assert_eq!(parsed.value.classes.len(), 2);
    assert!(parsed.value.associations.is_empty());
    assert_eq!(parsed.warnings.len(), 1);
    assert!(parsed.warnings[0].contains("e9"), "{}", parsed.warnings[0]);
}

#[test]
fn truncated_export_is_an_error() {
    let bytes = xmi("coffee_box.xmi");
    let err = parse_xmi(&bytes[..bytes.len() / 2]).unwrap_err();
    assert!(matches!(err, IngestError::Xml { .. }), "{err}");
}

#[test]
fn coffee_sources() {
    let m = scan_cpp_sources(&coffee_dir().join("src"), &ScanOptions::default()).unwrap().value;
    let mut names: Vec<&str> = m.class_names().collect();
    names.sort();
    assert_eq!(
        names,
        ["Boiler", "Boiler_boilWater", "CoffeeMachine", "Controller", "Cup", "Display", "MachineTester"]
    );
    assert_eq!(m.associations.len(), 5);
    assert!(m.associations.iter().any(|a| a.source == "CoffeeMachine" && a.target == "Boiler"));
    assert!(!m.associations.iter().any(|a| a.source == "Controller" || a.target == "Controller"));
    assert!(validate_class_model(&m).is_empty());
    // operations defined out of line land on the declaring class
    assert!(m.class("CoffeeMachine").unwrap().source_path.is_some());
}

#[test]
fn include_and_exclude_globs() {
    let root = coffee_dir().join("src");
    let only = ScanOptions {
        include: vec!["Boiler*".into()],
        exclude: vec!["*_boilWater.h".into()],
    };
    let m = scan_cpp_sources(&root, &only).unwrap().value;
    assert_eq!(m.class_names().collect::<Vec<_>>(), ["Boiler"]);
    let bad = ScanOptions {
        include: vec!["[".into()],
        exclude: vec![],
    };
    assert!(matches!(scan_cpp_sources(&root, &bad), Err(IngestError::Glob { .. })));
    assert!(matches!(
        scan_cpp_sources(&root.join("nope"), &ScanOptions::default()),
        Err(IngestError::MissingRoot(_))
    ));
}

#[test]
fn documents_round_trip_through_disk() {
    let m = parse_xmi(&xmi("coffee_box.xmi")).unwrap().value;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&ModelDocument::ClassModel(m.clone()), &path).unwrap();
    assert_eq!(load_class_model(&path).unwrap(), m);

    let text = model_to_json(&ModelDocument::ClassModel(m.clone()));
    assert_eq!(model_from_json(&text).unwrap(), ModelDocument::ClassModel(m));

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["model"]["associations"][0]["kind"] = "friendship".into();
    assert!(matches!(model_from_json(&v.to_string()), Err(IngestError::Schema { .. })));
}

#[test]
fn association_helpers() {
    let a = Association::plain("A", "B").labeled("itsB");
    assert_eq!(a.kind, AssociationKind::Plain);
    assert_eq!(a.label.as_deref(), Some("itsB"));
}
