use super::PumlError;

/// Returns the first `@startuml ... @enduml` span of an LLM response,
/// dropping any prose or markdown fences around it.
pub fn extract_plantuml_block(response: &str) -> Result<String, PumlError> {
    let no_diagram = || PumlError::NoDiagram {
        raw: response.to_string(),
    };
    let start = response.find("@startuml").ok_or_else(no_diagram)?;
    let rest = &response[start..];
    let end = rest.find("@enduml").ok_or_else(no_diagram)? + "@enduml".len();
    Ok(rest[..end].to_string())
}
