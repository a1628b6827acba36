//! Build a [`ClassModel`](crate::model::ClassModel) from a UML XMI export or
//! straight from C++ sources, and read/write the JSON interchange documents.

mod cpp;
mod store;
mod xmi;

pub use cpp::{scan_cpp_sources, ScanOptions};
pub use store::{
    load_class_model, load_component_model, load_model, load_state_machine, model_from_json,
    model_to_json, save_model, ModelDocument,
};
pub use xmi::parse_xmi;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: usize, message: String },
    #[error("empty model: no classes found")]
    EmptyModel,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("expected a {expected} document, found {found}")]
    WrongKind { expected: &'static str, found: &'static str },
    #[error("invalid glob `{pattern}`: {message}")]
    Glob { pattern: String, message: String },
    #[error("source root {0} does not exist")]
    MissingRoot(PathBuf),
}
