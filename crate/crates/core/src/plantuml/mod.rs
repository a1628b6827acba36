//! PlantUML in and out: class diagrams are emitted for the LLM, state
//! diagrams are parsed from LLM responses and emitted in a canonical form.

mod class_emit;
mod extract;
mod state_emit;
mod state_parse;

pub use class_emit::emit_class_plantuml;
pub use extract::extract_plantuml_block;
pub use state_emit::emit_state_plantuml;
pub use state_parse::parse_state_plantuml;

use crate::model::Violation;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PumlError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("no diagram found in response")]
    NoDiagram { raw: String },
    #[error("diagram describes an invalid state machine: {}", join(.0))]
    Invalid(Vec<Violation>),
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
