//! One-shot run of every stage from a JSON project configuration.
//!
//! Artifacts under the output directory:
//!
//! ```text
//! model.json                      class model
//! class_diagram.puml
//! selection.json                  LLM core-component selection
//! components.json                 component model
//! component_diagram.puml
//! runs/<C>.<typology>.run.json
//! state_machines/<C>.<typology>.puml
//! cards/<C>.<typology>.card.json  only with ground truth
//! report.md                       only with ground truth
//! manifest.json
//! ```

use crate::abstraction::{build_core_prompt, filter_model, parse_core_selection, CoreSelection};
use crate::behavior::{
    assemble_examples, bundled_general_library, load_example_dir, run_generation, FewShotExample, GenerationRun,
    GenerationSpec,
};
use crate::eval::{evaluate, render_report, ReportFormat, ReportRow, ScoreConfig};
use crate::ingest::{load_state_machine, model_to_json, parse_xmi, scan_cpp_sources, ModelDocument, ScanOptions};
use crate::llm::{ChatClient, LlmSettings};
use crate::model::{ClassModel, StateMachine, Typology};
use crate::plantuml::{emit_class_plantuml, emit_state_plantuml, parse_state_plantuml};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Xmi(PathBuf),
    SourceDir {
        path: PathBuf,
        #[serde(default)]
        include: Vec<String>,
        #[serde(default)]
        exclude: Vec<String>,
    },
}

/// One typology or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Typologies {
    One(Typology),
    Many(Vec<Typology>),
}

impl Typologies {
    pub fn to_vec(&self) -> Vec<Typology> {
        match self {
            Typologies::One(t) => vec![*t],
            Typologies::Many(v) => v.clone(),
        }
    }
}

impl Default for Typologies {
    fn default() -> Self {
        Typologies::One(Typology::General)
    }
}

/// Project configuration. Relative paths are resolved against the directory
/// of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputSpec,
    #[serde(default)]
    pub llm: LlmSettings,
    #[serde(default)]
    pub typology: Typologies,
    /// General examples directory; the bundled ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example_library: Option<PathBuf>,
    /// Ground truth of another system, for the expert typology.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert_dir: Option<PathBuf>,
    /// Per-component source files named `<Component>.<ext>`; otherwise the
    /// files the class was found in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_dir: Option<PathBuf>,
    /// `<Component>.puml` ground truth; scoring is skipped without it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub score: ScoreConfig,
    /// Hand-picked candidate per `<Component>.<typology>`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pick: BTreeMap<String, usize>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<(Self, PathBuf), PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::config(format!("{}: {e}", path.display())))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        let cfg: PipelineConfig = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| PipelineError::config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    /// Copy with every path made absolute against `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        let abs = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        let mut out = self.clone();
        out.input = match &self.input {
            InputSpec::Xmi(p) => InputSpec::Xmi(abs(p)),
            InputSpec::SourceDir { path, include, exclude } => InputSpec::SourceDir {
                path: abs(path),
                include: include.clone(),
                exclude: exclude.clone(),
            },
        };
        out.llm.cassette_dir = self.llm.cassette_dir.as_ref().map(abs);
        out.example_library = self.example_library.as_ref().map(abs);
        out.expert_dir = self.expert_dir.as_ref().map(abs);
        out.code_dir = self.code_dir.as_ref().map(abs);
        out.ground_truth_dir = self.ground_truth_dir.as_ref().map(abs);
        out.output_dir = abs(&self.output_dir);
        out
    }

    /// Checks that can fail before any stage runs.
    pub fn check(&self) -> Result<(), PipelineError> {
        let input = match &self.input {
            InputSpec::Xmi(p) => p,
            InputSpec::SourceDir { path, .. } => path,
        };
        if !input.exists() {
            return Err(PipelineError::config(format!("input {} does not exist", input.display())));
        }
        if self.typology.to_vec().is_empty() {
            return Err(PipelineError::config("no typology selected".into()));
        }
        for (name, dir) in [
            ("example_library", &self.example_library),
            ("expert_dir", &self.expert_dir),
            ("code_dir", &self.code_dir),
        ] {
            if let Some(d) = dir {
                if !d.is_dir() {
                    return Err(PipelineError::config(format!("{name} {} does not exist", d.display())));
                }
            }
        }
        if self.llm.samples == 0 {
            return Err(PipelineError::config("llm.samples must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {message}{}", written_hint(.artifacts))]
pub struct PipelineError {
    pub stage: String,
    pub message: String,
    /// Artifacts written before the failure, relative to the output dir.
    pub artifacts: Vec<String>,
}

fn written_hint(artifacts: &[String]) -> String {
    if artifacts.is_empty() {
        String::new()
    } else {
        format!(" (written so far: {})", artifacts.join(", "))
    }
}

impl PipelineError {
    fn config(message: String) -> Self {
        PipelineError {
            stage: "config".into(),
            message,
            artifacts: Vec::new(),
        }
    }
}

/// Summary written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub stages: Vec<String>,
    pub classes: usize,
    pub components: Vec<String>,
    pub runs: Vec<String>,
    pub cards: Vec<String>,
    pub artifacts: Vec<String>,
    pub notices: Vec<String>,
}

struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    fn write(&mut self, rel: &str, text: &str) -> Result<(), String> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
        }
        let dir = path.parent().unwrap_or(&self.dir);
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| format!("{rel}: {e}"))?;
        tmp.write_all(text.as_bytes()).map_err(|e| format!("{rel}: {e}"))?;
        tmp.persist(&path).map_err(|e| format!("{rel}: {}", e.error))?;
        self.written.push(rel.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), String> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
        text.push('\n');
        self.write(rel, &text)
    }
}

/// File-name form of a class name.
pub fn file_stem(component: &str) -> String {
    component.replace("::", "__")
}

const CODE_EXTENSIONS: [&str; 7] = ["h", "hh", "hpp", "hxx", "cc", "cpp", "cxx"];

/// Source text of one component: files `<stem>.<ext>` in `code_dir`, or else
/// the file the class was declared in plus same-stem siblings (header and
/// implementation), concatenated in name order.
pub fn component_code(model: &ClassModel, component: &str, code_dir: Option<&Path>, source_root: Option<&Path>) -> Option<String> {
    let with_stem = |dir: &Path, stem: &str| -> Vec<PathBuf> {
        let mut v: Vec<PathBuf> = CODE_EXTENSIONS
            .iter()
            .map(|ext| dir.join(format!("{stem}.{ext}")))
            .filter(|p| p.is_file())
            .collect();
        v.sort();
        v
    };
    let files = if let Some(dir) = code_dir {
        with_stem(dir, &file_stem(component))
    } else {
        let rel = model.class(component)?.source_path.as_ref()?;
        let path = source_root?.join(rel);
        let stem = path.file_stem()?.to_string_lossy().into_owned();
        with_stem(path.parent()?, &stem)
    };
    if files.is_empty() {
        return None;
    }
    let parts: Vec<String> = files.iter().filter_map(|p| fs::read_to_string(p).ok()).collect();
    Some(parts.join("\n"))
}

fn ground_truth(dir: &Path, component: &str) -> Option<Result<(String, StateMachine), String>> {
    let stem = file_stem(component);
    let puml = dir.join(format!("{stem}.puml"));
    if puml.is_file() {
        return Some(
            fs::read_to_string(&puml)
                .map_err(|e| e.to_string())
                .and_then(|t| {
                    parse_state_plantuml(&t)
                        .map(|p| (t, p.value))
                        .map_err(|e| format!("{}: {e}", puml.display()))
                }),
        );
    }
    let json = dir.join(format!("{stem}.json"));
    if json.is_file() {
        return Some(
            load_state_machine(&json)
                .map(|m| (emit_state_plantuml(&m), m))
                .map_err(|e| e.to_string()),
        );
    }
    None
}

/// Runs every stage with the given client. Paths in `cfg` must already be
/// resolved.
pub fn run_pipeline_with(cfg: &PipelineConfig, client: &dyn ChatClient) -> Result<Manifest, PipelineError> {
    cfg.check()?;
    let mut out = Output {
        dir: cfg.output_dir.clone(),
        written: Vec::new(),
    };
    let mut manifest = Manifest::default();
    let model_id = cfg.llm.model_id().map_err(|e| PipelineError::config(e.to_string()))?;

    macro_rules! stage {
        ($name:expr, $body:expr) => {{
            #[allow(clippy::redundant_closure_call)]
            let r: Result<_, String> = (|| $body)();
            match r {
                Ok(v) => {
                    manifest.stages.push($name.to_string());
                    v
                }
                Err(message) => {
                    return Err(PipelineError {
                        stage: $name.to_string(),
                        message,
                        artifacts: out.written.clone(),
                    })
                }
            }
        }};
    }

    let (model, source_root) = stage!("ingest", {
        let (parsed, root) = match &cfg.input {
            InputSpec::Xmi(p) => {
                let bytes = fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?;
                (parse_xmi(&bytes).map_err(|e| e.to_string())?, None)
            }
            InputSpec::SourceDir { path, include, exclude } => {
                let opts = ScanOptions {
                    include: include.clone(),
                    exclude: exclude.clone(),
                };
                (scan_cpp_sources(path, &opts).map_err(|e| e.to_string())?, Some(path.clone()))
            }
        };
        for w in &parsed.warnings {
            log::warn!("ingest: {w}");
            manifest.notices.push(format!("ingest: {w}"));
        }
        out.write("model.json", &model_to_json(&ModelDocument::ClassModel(parsed.value.clone())))?;
        Ok((parsed.value, root))
    });
    manifest.classes = model.classes.len();

    let class_puml = stage!("emit-uml", {
        let text = emit_class_plantuml(&model);
        out.write("class_diagram.puml", &text)?;
        Ok(text)
    });

    let components = stage!("abstract", {
        let req = build_core_prompt(&class_puml, &model_id, cfg.llm.selection_temperature).map_err(|e| e.to_string())?;
        let resp = client.complete(&req).map_err(|e| e.to_string())?;
        let sel: CoreSelection = parse_core_selection(&resp.content, &model).map_err(|e| e.to_string())?;
        if !sel.unmatched.is_empty() {
            manifest
                .notices
                .push(format!("abstract: names not in the model: {}", sel.unmatched.join(", ")));
        }
        out.json("selection.json", &sel)?;
        let comp = filter_model(&model, &sel).map_err(|e| e.to_string())?;
        out.write("components.json", &model_to_json(&ModelDocument::ComponentModel(comp.clone())))?;
        out.write("component_diagram.puml", &emit_class_plantuml(&comp.model))?;
        Ok(comp)
    });
    manifest.components = components.core.clone();

    let gt_dir = cfg.ground_truth_dir.as_ref().filter(|d| d.is_dir());
    if gt_dir.is_none() {
        manifest.notices.push("score: no ground-truth directory, scoring skipped".into());
    }

    let runs: Vec<GenerationRun> = stage!("gensm", {
        let mut library: Vec<FewShotExample> = match &cfg.example_library {
            Some(dir) => load_example_dir(dir, Typology::General).map_err(|e| e.to_string())?,
            None => bundled_general_library(),
        };
        if let Some(dir) = &cfg.expert_dir {
            library.extend(load_example_dir(dir, Typology::Expert).map_err(|e| e.to_string())?);
        }
        let code_of = |c: &str| component_code(&model, c, cfg.code_dir.as_deref(), source_root.as_deref());
        let mut peers: BTreeMap<String, (String, String)> = BTreeMap::new();
        if let Some(dir) = gt_dir {
            for c in &components.core {
                if let (Some(Ok((text, _))), Some(code)) = (ground_truth(dir, c), code_of(c)) {
                    peers.insert(c.clone(), (code, text));
                }
            }
        }
        let mut runs = Vec::new();
        for c in &components.core {
            let code = code_of(c).ok_or_else(|| format!("no source code found for `{c}`"))?;
            for typology in cfg.typology.to_vec() {
                let key = format!("{}.{typology}", file_stem(c));
                let examples = assemble_examples(typology, c, &library, &peers).map_err(|e| format!("{key}: {e}"))?;
                let spec = GenerationSpec {
                    component: c,
                    code: &code,
                    typology,
                    examples: &examples,
                    model: &model_id,
                    temperature: cfg.llm.temperature,
                    samples: cfg.llm.samples,
                    pick: cfg.pick.get(&key).copied(),
                };
                let run = run_generation(client, &spec).map_err(|e| format!("{key}: {e}"))?;
                for d in &run.dropped {
                    manifest
                        .notices
                        .push(format!("gensm: {key} sample {} dropped: {}", d.sample, d.reason));
                }
                let run_rel = format!("runs/{key}.run.json");
                out.json(&run_rel, &run)?;
                out.write(&format!("state_machines/{key}.puml"), &emit_state_plantuml(run.picked_machine()))?;
                manifest.runs.push(run_rel);
                runs.push(run);
            }
        }
        Ok(runs)
    });

    if let Some(dir) = gt_dir {
        let rows = stage!("score", {
            let mut rows = Vec::new();
            for run in &runs {
                let key = format!("{}.{}", file_stem(&run.component), run.typology);
                let gt = match ground_truth(dir, &run.component) {
                    Some(r) => r?.1,
                    None => {
                        manifest
                            .notices
                            .push(format!("score: no ground truth for `{}`, skipped", run.component));
                        continue;
                    }
                };
                let card = evaluate(&gt, run.picked_machine(), &cfg.score);
                let row = ReportRow {
                    component: run.component.clone(),
                    typology: run.typology,
                    card,
                };
                let rel = format!("cards/{key}.card.json");
                out.json(&rel, &row)?;
                manifest.cards.push(rel);
                rows.push(row);
            }
            Ok(rows)
        });
        stage!("report", {
            out.write("report.md", &render_report(&rows, ReportFormat::Markdown))?;
            Ok(())
        });
    }

    let mut artifacts = out.written.clone();
    artifacts.push("manifest.json".into());
    artifacts.sort();
    manifest.artifacts = artifacts;
    out.json("manifest.json", &manifest).map_err(|message| PipelineError {
        stage: "manifest".into(),
        message,
        artifacts: out.written.clone(),
    })?;
    Ok(manifest)
}

/// Loads the configuration, builds the configured LLM client and runs.
pub fn run_pipeline(config_path: &Path) -> Result<Manifest, PipelineError> {
    let (cfg, base) = PipelineConfig::load(config_path)?;
    let cfg = cfg.resolved(&base);
    cfg.check()?;
    let client = cfg.llm.build_client().map_err(|e| PipelineError::config(e.to_string()))?;
    run_pipeline_with(&cfg, client.as_ref())
}
