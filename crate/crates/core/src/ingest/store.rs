use super::IngestError;
use crate::model::{ClassModel, ComponentModel, StateMachine};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

/// A JSON interchange document: `{"kind": ..., "model": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelDocument {
    ClassModel(ClassModel),
    ComponentModel(ComponentModel),
    StateMachine(StateMachine),
}

impl ModelDocument {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelDocument::ClassModel(_) => "class_model",
            ModelDocument::ComponentModel(_) => "component_model",
            ModelDocument::StateMachine(_) => "state_machine",
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn model_to_json(doc: &ModelDocument) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("model types always serialize");
    text.push('\n');
    text
}

pub fn model_from_json(text: &str) -> Result<ModelDocument, IngestError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let doc: ModelDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        IngestError::Schema {
            field,
            message: e.into_inner().to_string(),
        }
    })?;
    de.end().map_err(|e| IngestError::Schema {
        field: ".".into(),
        message: e.to_string(),
    })?;
    Ok(doc)
}

pub fn load_model(path: &Path) -> Result<ModelDocument, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_json(&text)
}

/// Writes atomically: a temporary sibling is renamed over `path`.
pub fn save_model(doc: &ModelDocument, path: &Path) -> Result<(), IngestError> {
    let io = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(model_to_json(doc).as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn load_class_model(path: &Path) -> Result<ClassModel, IngestError> {
    match load_model(path)? {
        ModelDocument::ClassModel(m) => Ok(m),
        ModelDocument::ComponentModel(c) => Ok(c.model),
        other => Err(IngestError::WrongKind {
            expected: "class_model",
            found: other.kind(),
        }),
    }
}

pub fn load_component_model(path: &Path) -> Result<ComponentModel, IngestError> {
    match load_model(path)? {
        ModelDocument::ComponentModel(c) => Ok(c),
        other => Err(IngestError::WrongKind {
            expected: "component_model",
            found: other.kind(),
        }),
    }
}

pub fn load_state_machine(path: &Path) -> Result<StateMachine, IngestError> {
    match load_model(path)? {
        ModelDocument::StateMachine(m) => Ok(m),
        other => Err(IngestError::WrongKind {
            expected: "state_machine",
            found: other.kind(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Association, ClassDecl, Visibility};

    fn coffee() -> ClassModel {
        ClassModel {
            classes: vec![
                ClassDecl::new("CoffeeMachine")
                    .with_attribute("waterLevel", Visibility::Private)
                    .with_operation("startBrew", Visibility::Public),
                ClassDecl::new("Boiler"),
            ],
            associations: vec![Association::plain("CoffeeMachine", "Boiler")],
        }
    }

    #[test]
    fn roundtrip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let doc = ModelDocument::ClassModel(coffee());
        save_model(&doc, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), doc);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("{\n  \"kind\": \"class_model\",\n  \"model\": {"));
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn truncated_document_is_a_schema_error() {
        let text = model_to_json(&ModelDocument::ClassModel(coffee()));
        let cut = &text[..text.len() / 2];
        assert!(matches!(model_from_json(cut), Err(IngestError::Schema { .. })));
    }

    #[test]
    fn error_names_offending_field() {
        let text = r#"{"kind":"class_model","model":{"classes":[{"name":"A","attributes":[{"name":"x","visibility":"secret"}]}]}}"#;
        match model_from_json(text) {
            Err(IngestError::Schema { field, .. }) => assert_eq!(field, "model.classes[0].attributes[0].visibility"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kind_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&ModelDocument::ClassModel(coffee()), &path).unwrap();
        assert!(matches!(load_state_machine(&path), Err(IngestError::WrongKind { .. })));
    }
}
