//! Recover a dual-view architecture description from C++ sources.
//!
//! The pipeline reverse-engineers a class model ([`ingest`]), renders it as
//! PlantUML ([`plantuml`]), lets an LLM pick the core components
//! ([`abstraction`]), generates a state machine per component from its code
//! with few-shot prompting ([`behavior`]) and scores generated machines
//! against ground truth ([`eval`]). [`llm`] provides live, record and replay
//! chat backends so every stage runs offline.

pub mod abstraction;
pub mod behavior;
pub mod eval;
pub mod ingest;
pub mod llm;
pub mod model;
pub mod pipeline;
pub mod plantuml;

/// A parse result together with the non-fatal problems met on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}
