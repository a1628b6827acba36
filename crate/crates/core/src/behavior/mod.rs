//! Few-shot state machine generation for one component and the choice of a
//! representative among the sampled candidates.

mod library;

pub use library::{bundled_general_library, load_example_dir};

use crate::eval::{match_machines, ScoreConfig};
use crate::llm::{fingerprint, Attachment, ChatClient, ChatMessage, ChatRequest, LlmError};
use crate::model::{StateMachine, Typology};
use crate::plantuml::{extract_plantuml_block, parse_state_plantuml};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

const BEHAVIOR_SYSTEM_PROMPT: &str = "<Role>
You are an expert software engineer.
</Role>
<Goal>
Generate a state machine diagram for the c++ code in plantuml format.
</Goal>
<Solution Plan>
1. Understand the source code
2. Extract the candidate states
3. Provide small and summarized description of each state
4. Extract the transition from one state to another
5. What is the trigger that triggered the transition
6. Review the examples and how their corresponding state machine diagram
7. Construct the state machine diagram for the passed code
8. Review the order of the states based on normal logic and using the examples
</Solution Plan>
!! Important !!: The Controller example is customized to bring how parallel states are present. Do not use it for any other reason.";

const EXAMPLE_LEAD: &str = "Generate a state machine for the following code:";

/// Assistant turn after an image example, which carries the diagram itself.
const IMAGE_ACK: &str = "Understood.";

#[derive(Debug, thiserror::Error)]
pub enum BehaviorError {
    #[error("no {0} examples available")]
    NoExamples(Typology),
    #[error("domain examples for `{0}` need at least one other component with a ground truth")]
    NoPeers(String),
    #[error("the source code is empty")]
    EmptyCode,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("none of the {} samples contained a usable diagram", .raw.len())]
    AllSamplesUnparseable { raw: Vec<String> },
    #[error("example `{label}`: {message}")]
    BadExample { label: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExampleDiagram {
    /// PlantUML state machine text.
    Text(String),
    Image { media_type: String, data: Vec<u8> },
}

/// Source code paired with its state machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShotExample {
    pub label: String,
    pub code: String,
    pub diagram: ExampleDiagram,
    pub typology: Typology,
}

/// Examples for one generation. General and expert examples come from
/// `library`; domain examples are the other components' (code, ground-truth
/// diagram) pairs in `peers`, sorted by component name.
pub fn assemble_examples(
    typology: Typology,
    target: &str,
    library: &[FewShotExample],
    peers: &BTreeMap<String, (String, String)>,
) -> Result<Vec<FewShotExample>, BehaviorError> {
    match typology {
        Typology::General | Typology::Expert => {
            let out: Vec<FewShotExample> = library.iter().filter(|e| e.typology == typology).cloned().collect();
            if out.is_empty() {
                return Err(BehaviorError::NoExamples(typology));
            }
            Ok(out)
        }
        Typology::Domain => {
            let out: Vec<FewShotExample> = peers
                .iter()
                .filter(|(name, _)| name.as_str() != target)
                .map(|(name, (code, diagram))| FewShotExample {
                    label: name.clone(),
                    code: code.clone(),
                    diagram: ExampleDiagram::Text(diagram.clone()),
                    typology: Typology::Domain,
                })
                .collect();
            if out.is_empty() {
                return Err(BehaviorError::NoPeers(target.to_string()));
            }
            Ok(out)
        }
    }
}

fn lead(code: &str) -> String {
    format!("{EXAMPLE_LEAD}\n{code}")
}

/// System prompt, one user/assistant pair per example, then the target code.
pub fn build_behavior_prompt(
    code: &str,
    examples: &[FewShotExample],
    model: &str,
    temperature: f64,
) -> Result<ChatRequest, BehaviorError> {
    if code.trim().is_empty() {
        return Err(BehaviorError::EmptyCode);
    }
    let mut messages = vec![ChatMessage::system(BEHAVIOR_SYSTEM_PROMPT)];
    for ex in examples {
        match &ex.diagram {
            ExampleDiagram::Text(diagram) => {
                messages.push(ChatMessage::user(lead(&ex.code)));
                messages.push(ChatMessage::assistant(diagram.trim_end()));
            }
            ExampleDiagram::Image { media_type, data } => {
                let mut m = ChatMessage::user(lead(&ex.code));
                m.attachments.push(Attachment {
                    media_type: media_type.clone(),
                    data: data.clone(),
                });
                messages.push(m);
                messages.push(ChatMessage::assistant(IMAGE_ACK));
            }
        }
    }
    messages.push(ChatMessage::user(lead(code)));
    Ok(ChatRequest::new(model, temperature, messages))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Candidate {
    pub sample: usize,
    pub machine: StateMachine,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroppedSample {
    pub sample: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidates {
    pub candidates: Vec<Candidate>,
    pub dropped: Vec<DroppedSample>,
}

/// Requests `n` samples concurrently and keeps those holding a parseable
/// state machine, in sample order.
pub fn generate_candidates(client: &dyn ChatClient, req: &ChatRequest, n: usize) -> Result<Candidates, BehaviorError> {
    if n == 0 {
        return Err(BehaviorError::NoSamples);
    }
    let responses: Vec<Result<String, LlmError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..n)
            .map(|i| s.spawn(move || client.complete_sample(req, i).map(|r| r.content)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sample worker panicked"))
            .collect()
    });

    let mut out = Candidates {
        candidates: Vec::new(),
        dropped: Vec::new(),
    };
    let mut raw = Vec::new();
    for (sample, resp) in responses.into_iter().enumerate() {
        let text = resp?;
        let parsed = extract_plantuml_block(&text).and_then(|block| parse_state_plantuml(&block));
        match parsed {
            Ok(p) => out.candidates.push(Candidate {
                sample,
                machine: p.value,
                warnings: p.warnings,
            }),
            Err(e) => {
                log::warn!("sample {sample} dropped: {e}");
                out.dropped.push(DroppedSample {
                    sample,
                    reason: e.to_string(),
                });
            }
        }
        raw.push(text);
    }
    if out.candidates.is_empty() {
        return Err(BehaviorError::AllSamplesUnparseable { raw });
    }
    Ok(out)
}

/// Unmatched states and transitions on both sides when `a` is matched
/// against `b`, plus the same the other way round.
pub fn structural_distance(a: &StateMachine, b: &StateMachine) -> usize {
    let cfg = ScoreConfig::default();
    let one = |x: &StateMachine, y: &StateMachine| {
        let m = match_machines(x, y, &cfg);
        m.unmatched_gt_states.len()
            + m.unmatched_gen_states.len()
            + m.unmatched_gt_transitions.len()
            + m.unmatched_gen_transitions.len()
    };
    one(a, b) + one(b, a)
}

/// Medoid under [`structural_distance`]; the lowest index wins ties.
pub fn pick_representative(candidates: &[StateMachine]) -> usize {
    let n = candidates.len();
    let mut d = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = structural_distance(&candidates[i], &candidates[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    (0..n)
        .min_by_key(|&i| (d[i].iter().sum::<usize>(), i))
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PickSource {
    Medoid,
    Manual,
}

/// Everything about one component's generation, written as `*.run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationRun {
    pub component: String,
    pub typology: Typology,
    pub examples: Vec<String>,
    pub fingerprint: String,
    /// Cassette names `{fingerprint}_{sample}` of every requested sample.
    pub samples: Vec<String>,
    pub candidates: Vec<Candidate>,
    pub dropped: Vec<DroppedSample>,
    /// Index into `candidates`.
    pub picked: usize,
    pub pick_source: PickSource,
}

impl GenerationRun {
    pub fn picked_machine(&self) -> &StateMachine {
        &self.candidates[self.picked].machine
    }
}

/// Generation parameters for [`run_generation`].
#[derive(Debug, Clone)]
pub struct GenerationSpec<'a> {
    pub component: &'a str,
    pub code: &'a str,
    pub typology: Typology,
    pub examples: &'a [FewShotExample],
    pub model: &'a str,
    pub temperature: f64,
    pub samples: usize,
    /// Candidate index chosen by hand, bypassing the medoid.
    pub pick: Option<usize>,
}

/// Prompt, sample, parse and pick for one component.
pub fn run_generation(client: &dyn ChatClient, spec: &GenerationSpec) -> Result<GenerationRun, BehaviorError> {
    let req = build_behavior_prompt(spec.code, spec.examples, spec.model, spec.temperature)?;
    let fp = fingerprint(&req);
    let found = generate_candidates(client, &req, spec.samples)?;
    let (picked, pick_source) = match spec.pick {
        Some(i) if i < found.candidates.len() => (i, PickSource::Manual),
        Some(i) => {
            log::warn!("--pick {i} is out of range, using the medoid");
            (medoid(&found), PickSource::Medoid)
        }
        None => (medoid(&found), PickSource::Medoid),
    };
    Ok(GenerationRun {
        component: spec.component.to_string(),
        typology: spec.typology,
        examples: spec.examples.iter().map(|e| e.label.clone()).collect(),
        samples: (0..spec.samples).map(|i| format!("{fp}_{i}")).collect(),
        fingerprint: fp,
        candidates: found.candidates,
        dropped: found.dropped,
        picked,
        pick_source,
    })
}

fn medoid(found: &Candidates) -> usize {
    let machines: Vec<StateMachine> = found.candidates.iter().map(|c| c.machine.clone()).collect();
    pick_representative(&machines)
}
