use super::{BehaviorError, ExampleDiagram, FewShotExample};
use crate::model::Typology;
use crate::plantuml::parse_state_plantuml;
use std::fs;
use std::path::Path;

const BUNDLED: [(&str, &str, &str); 3] = [
    (
        "car_door",
        include_str!("../../library/general/car_door/code.txt"),
        include_str!("../../library/general/car_door/diagram.puml"),
    ),
    (
        "freelance",
        include_str!("../../library/general/freelance/code.txt"),
        include_str!("../../library/general/freelance/diagram.puml"),
    ),
    (
        "online_retail",
        include_str!("../../library/general/online_retail/code.txt"),
        include_str!("../../library/general/online_retail/diagram.puml"),
    ),
];

/// The built-in general examples: car door, freelance order, online retail.
pub fn bundled_general_library() -> Vec<FewShotExample> {
    BUNDLED
        .iter()
        .map(|(label, code, diagram)| FewShotExample {
            label: (*label).to_string(),
            code: (*code).to_string(),
            diagram: ExampleDiagram::Text((*diagram).to_string()),
            typology: Typology::General,
        })
        .collect()
}

fn media_type(path: &Path) -> Option<&'static str> {
    match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
        "png" => Some("image/png"),
        "jpg" | "jpeg" => Some("image/jpeg"),
        "gif" => Some("image/gif"),
        "webp" => Some("image/webp"),
        _ => None,
    }
}

/// Examples from `dir/<label>/{code.txt, diagram.puml}` (or a `diagram.png`
/// / `.jpg` image instead of the PlantUML text), sorted by label.
pub fn load_example_dir(dir: &Path, typology: Typology) -> Result<Vec<FewShotExample>, BehaviorError> {
    let io = |path: &Path, e: std::io::Error| BehaviorError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut subdirs: Vec<_> = fs::read_dir(dir)
        .map_err(|e| io(dir, e))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    let mut out = Vec::new();
    for sub in subdirs {
        let label = sub.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let code_path = sub.join("code.txt");
        if !code_path.is_file() {
            log::warn!("{}: no code.txt, skipped", sub.display());
            continue;
        }
        let code = fs::read_to_string(&code_path).map_err(|e| io(&code_path, e))?;
        let puml = sub.join("diagram.puml");
        let diagram = if puml.is_file() {
            let text = fs::read_to_string(&puml).map_err(|e| io(&puml, e))?;
            parse_state_plantuml(&text).map_err(|e| BehaviorError::BadExample {
                label: label.clone(),
                message: e.to_string(),
            })?;
            ExampleDiagram::Text(text)
        } else {
            let image = fs::read_dir(&sub)
                .map_err(|e| io(&sub, e))?
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.file_stem().is_some_and(|s| s == "diagram"))
                .find_map(|p| media_type(&p).map(|m| (p, m)));
            let Some((path, media)) = image else {
                log::warn!("{}: no diagram, skipped", sub.display());
                continue;
            };
            ExampleDiagram::Image {
                media_type: media.to_string(),
                data: fs::read(&path).map_err(|e| io(&path, e))?,
            }
        };
        out.push(FewShotExample {
            label,
            code,
            diagram,
            typology,
        });
    }
    Ok(out)
}
