use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sadgen::abstraction::{build_core_prompt, filter_model, parse_core_selection, CoreSelection};
use sadgen::behavior::{
    assemble_examples, bundled_general_library, load_example_dir, run_generation, ExampleDiagram, GenerationRun,
    GenerationSpec,
};
use sadgen::eval::{evaluate, render_report, ReportFormat, ReportRow, ScoreConfig};
use sadgen::ingest::{
    load_class_model, load_model, model_to_json, parse_xmi, scan_cpp_sources, ModelDocument, ScanOptions,
};
use sadgen::llm::{Backend, ChatClient, LlmSettings};
use sadgen::model::{StateMachine, Typology};
use sadgen::pipeline::run_pipeline;
use sadgen::plantuml::{emit_class_plantuml, emit_state_plantuml, parse_state_plantuml};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sadgen", version, about = "Component and state machine views from C++ code")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a class model from an XMI export or a C++ source tree.
    Ingest(IngestArgs),
    /// Render a model JSON document as PlantUML.
    EmitUml(EmitArgs),
    /// Select core components with the LLM and write the component model.
    Abstract(AbstractArgs),
    /// Generate a state machine for one component.
    Gensm(GensmArgs),
    /// Score a generated state machine against ground truth.
    Score(ScoreArgs),
    /// Tabulate score cards.
    Report(ReportArgs),
    /// Run every stage from a project configuration file.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum InputFormat {
    Xmi,
    Cpp,
}

#[derive(Args)]
struct IngestArgs {
    /// XMI file or source directory.
    input: PathBuf,
    /// Defaults to cpp for directories and xmi otherwise.
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    /// Glob over paths relative to the source directory.
    #[arg(long)]
    include: Vec<String>,
    #[arg(long)]
    exclude: Vec<String>,
    /// Model JSON destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmitArgs {
    /// Model JSON document.
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LlmArgs {
    /// live, record or replay
    #[arg(long, default_value = "replay")]
    backend: String,
    #[arg(long)]
    cassettes: Option<PathBuf>,
    /// Model id; defaults to $SADGEN_MODEL.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_tokens: Option<u32>,
    #[arg(long, default_value_t = 120)]
    timeout_secs: u64,
}

impl LlmArgs {
    fn settings(&self) -> Result<LlmSettings> {
        let backend: Backend = serde_json::from_value(serde_json::Value::String(self.backend.to_ascii_lowercase()))
            .map_err(|_| anyhow!("unknown backend `{}` (expected live, record or replay)", self.backend))?;
        let mut s = LlmSettings {
            backend,
            cassette_dir: self.cassettes.clone(),
            model: self.model.clone(),
            max_tokens: self.max_tokens,
            timeout_secs: self.timeout_secs,
            ..LlmSettings::default()
        };
        if let Some(t) = self.temperature {
            s.temperature = t;
            s.selection_temperature = t;
        }
        Ok(s)
    }
}

#[derive(Args)]
struct AbstractArgs {
    #[arg(long)]
    model_json: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Selection cache: reused when present, written otherwise.
    #[arg(long)]
    selection_json: Option<PathBuf>,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct GensmArgs {
    /// Component source code.
    #[arg(long)]
    code: PathBuf,
    /// Component name; defaults to the code file stem.
    #[arg(long)]
    component: Option<String>,
    #[arg(long, default_value = "general")]
    typology: Typology,
    /// Samples to draw.
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Run JSON destination.
    #[arg(long)]
    out: PathBuf,
    /// Also write the picked machine as PlantUML.
    #[arg(long)]
    puml: Option<PathBuf>,
    /// Example directory `<name>/{code.txt,diagram.puml}`; bundled general
    /// examples when absent.
    #[arg(long)]
    examples: Option<PathBuf>,
    /// Peer components for the domain typology, same layout as --examples.
    #[arg(long)]
    peers: Option<PathBuf>,
    /// Candidate index to keep instead of the medoid.
    #[arg(long)]
    pick: Option<usize>,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct ScoreArgs {
    /// Ground truth: PlantUML or state machine JSON.
    #[arg(long)]
    gt: PathBuf,
    /// Generated machine: PlantUML, state machine JSON or run JSON.
    #[arg(long)]
    gen: PathBuf,
    /// ScoreConfig JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lenient_timeout: bool,
    /// Manual Q9 verdict.
    #[arg(long)]
    q9: Option<bool>,
    /// Card label; taken from a run JSON or the gt file stem otherwise.
    #[arg(long)]
    component: Option<String>,
    #[arg(long)]
    typology: Option<Typology>,
    /// Card JSON destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory searched recursively for `*.card.json`.
    #[arg(long)]
    runs: PathBuf,
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn client(settings: &LlmSettings) -> Result<Box<dyn ChatClient>> {
    Ok(settings.build_client()?)
}

fn ingest(a: IngestArgs) -> Result<()> {
    let format = a
        .format
        .unwrap_or(if a.input.is_dir() { InputFormat::Cpp } else { InputFormat::Xmi });
    let parsed = match format {
        InputFormat::Xmi => {
            let bytes = fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
            parse_xmi(&bytes)?
        }
        InputFormat::Cpp => {
            let opts = ScanOptions {
                include: a.include,
                exclude: a.exclude,
            };
            scan_cpp_sources(&a.input, &opts)?
        }
    };
    for w in &parsed.warnings {
        log::warn!("{w}");
    }
    eprintln!(
        "{} classes, {} associations",
        parsed.value.classes.len(),
        parsed.value.associations.len()
    );
    write_out(a.out.as_deref(), &model_to_json(&ModelDocument::ClassModel(parsed.value)))
}

fn emit_uml(a: EmitArgs) -> Result<()> {
    let text = match load_model(&a.input)? {
        ModelDocument::ClassModel(m) => emit_class_plantuml(&m),
        ModelDocument::ComponentModel(c) => emit_class_plantuml(&c.model),
        ModelDocument::StateMachine(m) => emit_state_plantuml(&m),
    };
    write_out(a.out.as_deref(), &text)
}

fn abstract_cmd(a: AbstractArgs) -> Result<()> {
    let model = load_class_model(&a.model_json)?;
    let cached = a.selection_json.as_ref().filter(|p| p.is_file());
    let sel: CoreSelection = match cached {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text).with_context(|| format!("reading selection {}", p.display()))?
        }
        None => {
            let settings = a.llm.settings()?;
            let req = build_core_prompt(&emit_class_plantuml(&model), &settings.model_id()?, settings.selection_temperature)?;
            let resp = client(&settings)?.complete(&req)?;
            let sel = parse_core_selection(&resp.content, &model)?;
            if let Some(p) = &a.selection_json {
                write_out(Some(p), &to_json(&sel)?)?;
            }
            sel
        }
    };
    if !sel.unmatched.is_empty() {
        log::warn!("names not in the model: {}", sel.unmatched.join(", "));
    }
    let comp = filter_model(&model, &sel)?;
    eprintln!("core components: {}", comp.core.join(", "));
    write_out(Some(&a.out), &model_to_json(&ModelDocument::ComponentModel(comp)))
}

fn gensm(a: GensmArgs) -> Result<()> {
    let code = fs::read_to_string(&a.code).with_context(|| format!("reading {}", a.code.display()))?;
    let component = match a.component {
        Some(c) => c,
        None => a
            .code
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| anyhow!("cannot derive a component name from {}", a.code.display()))?,
    };
    let library = match &a.examples {
        Some(dir) => {
            let as_typology = if a.typology == Typology::Expert { Typology::Expert } else { Typology::General };
            load_example_dir(dir, as_typology)?
        }
        None => bundled_general_library(),
    };
    if a.examples.is_none() && a.typology == Typology::Expert {
        bail!("the expert typology needs --examples");
    }
    let mut peers = BTreeMap::new();
    if let Some(dir) = &a.peers {
        for ex in load_example_dir(dir, Typology::Domain)? {
            if let ExampleDiagram::Text(t) = ex.diagram {
                peers.insert(ex.label, (ex.code, t));
            }
        }
    }
    if a.typology == Typology::Domain && a.peers.is_none() {
        bail!("the domain typology needs --peers");
    }
    let examples = assemble_examples(a.typology, &component, &library, &peers)?;
    let settings = a.llm.settings()?;
    let model = settings.model_id()?;
    let spec = GenerationSpec {
        component: &component,
        code: &code,
        typology: a.typology,
        examples: &examples,
        model: &model,
        temperature: settings.temperature,
        samples: a.n,
        pick: a.pick,
    };
    let run = run_generation(client(&settings)?.as_ref(), &spec)?;
    for d in &run.dropped {
        log::warn!("sample {} dropped: {}", d.sample, d.reason);
    }
    eprintln!(
        "{} of {} samples parsed, picked candidate {} ({:?})",
        run.candidates.len(),
        a.n,
        run.picked,
        run.pick_source
    );
    write_out(Some(&a.out), &to_json(&run)?)?;
    if let Some(p) = &a.puml {
        write_out(Some(p), &emit_state_plantuml(run.picked_machine()))?;
    }
    Ok(())
}

/// A machine from PlantUML, a state machine document or a run JSON; the run
/// is returned too when that is what the file held.
fn read_machine(path: &Path) -> Result<(StateMachine, Option<GenerationRun>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if !is_json {
        let parsed = parse_state_plantuml(&text).with_context(|| format!("parsing {}", path.display()))?;
        for w in &parsed.warnings {
            log::warn!("{}: {w}", path.display());
        }
        return Ok((parsed.value, None));
    }
    if let Ok(run) = serde_json::from_str::<GenerationRun>(&text) {
        if run.picked >= run.candidates.len() {
            bail!("{}: picked index out of range", path.display());
        }
        return Ok((run.picked_machine().clone(), Some(run)));
    }
    match load_model(path)? {
        ModelDocument::StateMachine(m) => Ok((m, None)),
        other => bail!("{}: expected a state machine, found {}", path.display(), other.kind()),
    }
}

fn score(a: ScoreArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<ScoreConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ScoreConfig::default(),
    };
    if a.lenient_timeout {
        cfg.lenient_timeout = true;
    }
    if a.q9.is_some() {
        cfg.q9_manual = a.q9;
    }
    let (gt, _) = read_machine(&a.gt)?;
    let (gen, run) = read_machine(&a.gen)?;
    let card = evaluate(&gt, &gen, &cfg);
    for issue in card.inconsistencies() {
        log::warn!("{issue}");
    }
    let component = a
        .component
        .or_else(|| run.as_ref().map(|r| r.component.clone()))
        .or_else(|| a.gt.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default();
    let typology = a
        .typology
        .or_else(|| run.as_ref().map(|r| r.typology))
        .unwrap_or(Typology::General);
    let row = ReportRow {
        component,
        typology,
        card,
    };
    eprint!("{}", render_report(std::slice::from_ref(&row), ReportFormat::Text));
    write_out(a.out.as_deref(), &to_json(&row)?)
}

fn report(a: ReportArgs) -> Result<()> {
    let mut paths: Vec<PathBuf> = walkdir::WalkDir::new(&a.runs)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.file_name().to_string_lossy().ends_with(".card.json"))
        .map(|e| e.into_path())
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no *.card.json under {}", a.runs.display());
    }
    let mut rows = Vec::new();
    for p in &paths {
        let text = fs::read_to_string(p)?;
        rows.push(serde_json::from_str::<ReportRow>(&text).with_context(|| format!("parsing {}", p.display()))?);
    }
    write_out(a.out.as_deref(), &render_report(&rows, a.format))
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let manifest = run_pipeline(&a.config)?;
    for n in &manifest.notices {
        eprintln!("notice: {n}");
    }
    eprintln!(
        "{} stages, {} components, {} runs, {} cards",
        manifest.stages.len(),
        manifest.components.len(),
        manifest.runs.len(),
        manifest.cards.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::EmitUml(a) => emit_uml(a),
        Command::Abstract(a) => abstract_cmd(a),
        Command::Gensm(a) => gensm(a),
        Command::Score(a) => score(a),
        Command::Report(a) => report(a),
        Command::Pipeline(a) => pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
