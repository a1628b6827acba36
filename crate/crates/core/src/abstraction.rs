//! Ask the LLM for the core components of a class model and cut the model
//! down to them.

use crate::llm::{ChatMessage, ChatRequest};
use crate::model::{ClassModel, ComponentModel};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::sync::LazyLock;

pub const BEGIN_SENTINEL: &str = "BEGIN_COMPONENTS";
pub const END_SENTINEL: &str = "END_COMPONENTS";

const CORE_SYSTEM_PROMPT: &str = "<role>
You are an expert software engineer.
</role>
<goal>
Extract an abstract view from the classes keeping only the most important classes.
</goal>

<description>
You will receive a component diagram in PlantUML format highlighting all classes and their attributes and operations.
Additionally, the relationships between classes are also included in one form of association which is not influential but helps you know which class connected to which class.
</description>";

const OUTPUT_FORMAT: &str = "List the classes you keep, one class name per line, spelled exactly as in the diagram, between a line BEGIN_COMPONENTS and a line END_COMPONENTS.";

#[derive(Debug, thiserror::Error)]
pub enum AbstractionError {
    #[error("the class diagram text is empty")]
    EmptyDiagram,
    #[error("no core components recognized in the response")]
    NoCoreComponents { raw: String },
    #[error("the selection is empty")]
    EmptySelection,
}

/// Names picked by the LLM, split into model classes and everything else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreSelection {
    pub names: Vec<String>,
    pub raw_response: String,
    #[serde(default)]
    pub unmatched: Vec<String>,
}

/// Request asking for the core components of `plantuml_text`.
pub fn build_core_prompt(plantuml_text: &str, model: &str, temperature: f64) -> Result<ChatRequest, AbstractionError> {
    let diagram = plantuml_text.trim_end();
    if diagram.trim().is_empty() {
        return Err(AbstractionError::EmptyDiagram);
    }
    let user = format!("<plantuml>\n{diagram}\n</plantuml>\n\n{OUTPUT_FORMAT}");
    Ok(ChatRequest::new(
        model,
        temperature,
        vec![ChatMessage::system(CORE_SYSTEM_PROMPT), ChatMessage::user(user)],
    ))
}

static NAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[A-Za-z_][A-Za-z0-9_]*(?:::[A-Za-z_][A-Za-z0-9_]*)*").expect("name regex"));
static QUOTED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"["“`']([A-Za-z_][A-Za-z0-9_]*(?:::[A-Za-z_][A-Za-z0-9_]*)*)["”`']"#).expect("quoted regex")
});
static BULLET: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:[-*•+]|\d+[.)])\s*").expect("bullet regex"));

fn push_unique(list: &mut Vec<String>, name: &str) {
    if !list.iter().any(|n| n == name) {
        list.push(name.to_string());
    }
}

/// Picks class names out of an LLM response: the sentinel block when
/// present, otherwise every model class name mentioned, in order of first
/// appearance. Quoted or listed names the model does not know go to
/// `unmatched`.
pub fn parse_core_selection(response: &str, model: &ClassModel) -> Result<CoreSelection, AbstractionError> {
    let known: HashSet<&str> = model.class_names().collect();
    let mut names = Vec::new();
    let mut unmatched = Vec::new();

    let lines: Vec<&str> = response.lines().collect();
    let begin = lines.iter().position(|l| l.trim().trim_matches('`') == BEGIN_SENTINEL);
    let end = begin.and_then(|b| {
        lines[b + 1..]
            .iter()
            .position(|l| l.trim().trim_matches('`') == END_SENTINEL)
            .map(|e| b + 1 + e)
    });

    if let (Some(b), Some(e)) = (begin, end) {
        for line in &lines[b + 1..e] {
            let cleaned = BULLET.replace(line, "");
            let cleaned = cleaned.trim().trim_matches(|c: char| "\"'`“”*,;.".contains(c)).trim();
            if cleaned.is_empty() {
                continue;
            }
            if known.contains(cleaned) {
                push_unique(&mut names, cleaned);
                continue;
            }
            match NAME.find(cleaned) {
                Some(m) if known.contains(m.as_str()) => push_unique(&mut names, m.as_str()),
                Some(m) => push_unique(&mut unmatched, m.as_str()),
                None => push_unique(&mut unmatched, cleaned),
            }
        }
    } else {
        for m in NAME.find_iter(response) {
            if known.contains(m.as_str()) {
                push_unique(&mut names, m.as_str());
            }
        }
        for c in QUOTED.captures_iter(response) {
            let n = &c[1];
            if !known.contains(n) {
                push_unique(&mut unmatched, n);
            }
        }
    }

    if names.is_empty() {
        return Err(AbstractionError::NoCoreComponents {
            raw: response.to_string(),
        });
    }
    Ok(CoreSelection {
        names,
        raw_response: response.to_string(),
        unmatched,
    })
}

/// Induced sub-model on the selected classes. Classes keep their model order
/// and classes without associations stay in.
pub fn filter_model(model: &ClassModel, sel: &CoreSelection) -> Result<ComponentModel, AbstractionError> {
    let wanted: HashSet<&str> = sel.names.iter().map(String::as_str).collect();
    let classes: Vec<_> = model
        .classes
        .iter()
        .filter(|c| wanted.contains(c.name.as_str()))
        .cloned()
        .collect();
    if classes.is_empty() {
        return Err(AbstractionError::EmptySelection);
    }
    let associations = model
        .associations
        .iter()
        .filter(|a| wanted.contains(a.source.as_str()) && wanted.contains(a.target.as_str()))
        .cloned()
        .collect();
    Ok(ComponentModel {
        core: classes.iter().map(|c| c.name.clone()).collect(),
        model: ClassModel {
            classes,
            associations,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::fingerprint;
    use crate::model::{validate_component_model, Association, ClassDecl};

    fn model(names: &[&str], assocs: &[(&str, &str)]) -> ClassModel {
        ClassModel {
            classes: names.iter().map(|n| ClassDecl::new(*n)).collect(),
            associations: assocs.iter().map(|(a, b)| Association::plain(a, b)).collect(),
        }
    }

    #[test]
    fn prompt_embeds_diagram() {
        let text = "@startuml\nclass CoffeeMachine {\n}\nclass Boiler {\n}\nCoffeeMachine -- Boiler\n@enduml\n";
        let req = build_core_prompt(text, "m", 0.0).unwrap();
        assert!(req.messages[0].content.starts_with("<role>\nYou are an expert software engineer.\n</role>"));
        let user = &req.messages[1].content;
        assert!(user.starts_with("<plantuml>\n@startuml\nclass CoffeeMachine {"));
        assert!(user.contains("CoffeeMachine -- Boiler\n@enduml\n</plantuml>"));
        assert!(user.contains(BEGIN_SENTINEL));
        assert_eq!(
            fingerprint(&req),
            fingerprint(&build_core_prompt(text, "m", 0.0).unwrap())
        );
        assert!(matches!(build_core_prompt(" \n", "m", 0.0), Err(AbstractionError::EmptyDiagram)));
    }

    #[test]
    fn sentinel_block() {
        let m = model(&["CoffeeMachine", "Boiler", "Display", "MachineTester", "Controller", "Boiler_boilWater"], &[]);
        let resp = "Here you go:\nBEGIN_COMPONENTS\n- CoffeeMachine\n- Boiler\n* `Display`\n1. MachineTester\n\"Controller\"\n- Brewer\nEND_COMPONENTS\n";
        let sel = parse_core_selection(resp, &m).unwrap();
        assert_eq!(sel.names, ["CoffeeMachine", "Boiler", "Display", "MachineTester", "Controller"]);
        assert_eq!(sel.unmatched, ["Brewer"]);
    }

    #[test]
    fn free_text_fallback() {
        let m = model(&["AbstractFactory", "Dishwasher", "Heater", "Jet", "Tank", "Door"], &[]);
        let resp = "The core classes are \"AbstractFactory\", \"Dishwasher\", \"Heater\", \"Jet\" and \"Tank\". I also suggest \"Pump\".";
        let sel = parse_core_selection(resp, &m).unwrap();
        assert_eq!(sel.names, ["AbstractFactory", "Dishwasher", "Heater", "Jet", "Tank"]);
        assert_eq!(sel.unmatched, ["Pump"]);
        // an underscore name is one token, and a model class is never re-filtered
        let m = model(&["Boiler", "Boiler_boilWater"], &[]);
        let sel = parse_core_selection("Boiler_boilWater matters.", &m).unwrap();
        assert_eq!(sel.names, ["Boiler_boilWater"]);
    }

    #[test]
    fn nothing_recognized() {
        let m = model(&["A"], &[]);
        assert!(matches!(
            parse_core_selection("no idea", &m),
            Err(AbstractionError::NoCoreComponents { .. })
        ));
    }

    #[test]
    fn filtering_keeps_isolated_and_induces_edges() {
        let m = model(
            &["CoffeeMachine", "Boiler", "Controller", "Logger"],
            &[("CoffeeMachine", "Boiler"), ("CoffeeMachine", "Logger")],
        );
        let sel = CoreSelection {
            names: vec!["Controller".into(), "Boiler".into(), "CoffeeMachine".into()],
            raw_response: String::new(),
            unmatched: vec![],
        };
        let c = filter_model(&m, &sel).unwrap();
        assert_eq!(c.core, ["CoffeeMachine", "Boiler", "Controller"]);
        assert_eq!(c.model.associations, vec![Association::plain("CoffeeMachine", "Boiler")]);
        assert!(validate_component_model(&c).is_empty());
        let all = CoreSelection {
            names: m.class_names().map(str::to_string).collect(),
            ..sel.clone()
        };
        assert_eq!(filter_model(&m, &all).unwrap().model, m);
        let none = CoreSelection { names: vec![], ..sel };
        assert!(filter_model(&m, &none).is_err());
    }
}
