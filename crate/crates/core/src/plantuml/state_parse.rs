use super::PumlError;
use crate::model::{
    validate_state_machine, Region, RegionKey, State, StateKind, StateMachine, Transition,
    TriggerLabel,
};
use crate::Parsed;
use regex::Regex;
use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

const ID: &str = r"[\p{L}\p{N}_][\p{L}\p{N}_.]*";

static DECL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r#"^state\s+(?:"(?P<qname>[^"]*)"\s+as\s+(?P<qid>{ID})|(?P<aid>{ID})\s+as\s+"(?P<aname>[^"]*)"|(?P<id>{ID})|"(?P<only>[^"]+)")(?P<rest>.*)$"#
    ))
    .expect("declaration regex")
});

static TRANSITION: LazyLock<Regex> = LazyLock::new(|| {
    let ep = format!(r"\[\*\]|\[H\*?\]|{ID}\[H\*?\]|{ID}");
    let dir = r"(?:\[[^\]]*\])?(?:up|down|left|right|u|d|l|r)?(?:\[[^\]]*\])?";
    Regex::new(&format!(
        r"^(?P<a>{ep})\s*(?P<arrow>-+{dir}-*>|<-+{dir}-*)\s*(?P<b>{ep})\s*(?::(?P<label>.*))?$"
    ))
    .expect("transition regex")
});

static DESCRIPTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"^(?P<id>{ID})\s*:.*$")).expect("description regex"));

static STEREOTYPE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"<<\s*(?P<s>[^>]*?)\s*>>").expect("stereotype regex"));

#[derive(Debug, Clone)]
enum Endpoint {
    State(usize),
    Named(String),
    HistoryOf { owner: String, deep: bool },
}

#[derive(Debug, Clone)]
struct Draft {
    line: usize,
    source: Endpoint,
    target: Endpoint,
    trigger: Option<TriggerLabel>,
    guard: Option<String>,
    effect: Option<String>,
}

#[derive(Debug)]
struct StateNode {
    id: String,
    name: String,
    kind: StateKind,
    regions: Vec<usize>,
}

#[derive(Debug)]
struct RegionNode {
    key: RegionKey,
    states: Vec<usize>,
    drafts: Vec<Draft>,
}

#[derive(Default)]
struct Builder {
    states: Vec<StateNode>,
    regions: Vec<RegionNode>,
    by_id: HashMap<String, usize>,
    aliased: HashSet<String>,
    warnings: Vec<String>,
}

impl Builder {
    fn new() -> Self {
        let mut b = Builder::default();
        b.regions.push(RegionNode {
            key: RegionKey::root(),
            states: Vec::new(),
            drafts: Vec::new(),
        });
        b
    }

    fn add_state(&mut self, region: usize, id: &str, name: &str, kind: StateKind) -> usize {
        let idx = self.states.len();
        self.states.push(StateNode {
            id: id.to_string(),
            name: name.to_string(),
            kind,
            regions: Vec::new(),
        });
        self.regions[region].states.push(idx);
        self.by_id.entry(id.to_string()).or_insert(idx);
        idx
    }

    fn add_region(&mut self, state: usize) -> usize {
        let owner = self.states[state].id.clone();
        let index = self.states[state].regions.len();
        let r = self.regions.len();
        self.regions.push(RegionNode {
            key: RegionKey {
                owner: Some(owner),
                index,
            },
            states: Vec::new(),
            drafts: Vec::new(),
        });
        self.states[state].regions.push(r);
        r
    }

    /// Finds or creates the `[*]`/`[H]`/`[H*]` pseudostate of `region`.
    fn pseudo(&mut self, region: usize, kind: StateKind) -> usize {
        let auto_id = self.regions[region].key.pseudo_id(kind);
        let existing = self.regions[region].states.iter().copied().find(|&s| {
            let node = &self.states[s];
            match kind {
                StateKind::Final => node.id == auto_id,
                _ => node.kind == kind,
            }
        });
        if let Some(s) = existing {
            return s;
        }
        self.add_state(region, &auto_id, &auto_id, kind)
    }

    fn declare(
        &mut self,
        region: usize,
        id: &str,
        display: Option<&str>,
        kind: Option<StateKind>,
        line: usize,
    ) -> Result<usize, PumlError> {
        if display.is_some() && !self.aliased.insert(id.to_string()) {
            return Err(PumlError::Syntax {
                line,
                message: format!("duplicate alias `{id}`"),
            });
        }
        if let Some(&idx) = self.by_id.get(id) {
            if let Some(name) = display {
                self.states[idx].name = name.to_string();
            }
            if let Some(kind) = kind {
                self.states[idx].kind = kind;
            }
            return Ok(idx);
        }
        Ok(self.add_state(region, id, display.unwrap_or(id), kind.unwrap_or(StateKind::Simple)))
    }

    fn open_composite(&mut self, state: usize) -> usize {
        self.states[state].kind = StateKind::Composite;
        match self.states[state].regions.last() {
            Some(&r) => r,
            None => self.add_region(state),
        }
    }

    fn endpoint(&mut self, region: usize, token: &str, is_source: bool) -> Endpoint {
        match token {
            "[*]" => {
                let kind = if is_source {
                    StateKind::Initial
                } else {
                    StateKind::Final
                };
                Endpoint::State(self.pseudo(region, kind))
            }
            "[H]" => Endpoint::State(self.pseudo(region, StateKind::ShallowHistory)),
            "[H*]" => Endpoint::State(self.pseudo(region, StateKind::DeepHistory)),
            _ => {
                if let Some(owner) = token.strip_suffix("[H]") {
                    Endpoint::HistoryOf {
                        owner: owner.to_string(),
                        deep: false,
                    }
                } else if let Some(owner) = token.strip_suffix("[H*]") {
                    Endpoint::HistoryOf {
                        owner: owner.to_string(),
                        deep: true,
                    }
                } else {
                    Endpoint::Named(token.to_string())
                }
            }
        }
    }

    fn resolve(&mut self, region: usize, ep: &Endpoint) -> usize {
        match ep {
            Endpoint::State(s) => *s,
            Endpoint::Named(id) => match self.by_id.get(id) {
                Some(&s) => s,
                None => self.add_state(region, id, id, StateKind::Simple),
            },
            Endpoint::HistoryOf { owner, deep } => {
                let kind = if *deep {
                    StateKind::DeepHistory
                } else {
                    StateKind::ShallowHistory
                };
                let owner_idx = match self.by_id.get(owner) {
                    Some(&s) => s,
                    None => self.add_state(region, owner, owner, StateKind::Composite),
                };
                self.states[owner_idx].kind = StateKind::Composite;
                let found = self.states[owner_idx]
                    .regions
                    .iter()
                    .flat_map(|&r| self.regions[r].states.iter().copied())
                    .find(|&s| self.states[s].kind == kind);
                if let Some(s) = found {
                    return s;
                }
                let first = match self.states[owner_idx].regions.first() {
                    Some(&r) => r,
                    None => self.add_region(owner_idx),
                };
                self.pseudo(first, kind)
            }
        }
    }

    fn finish(mut self, name: String) -> StateMachine {
        let mut order: Vec<(usize, usize, usize)> = Vec::new();
        for (r, region) in self.regions.iter().enumerate() {
            for (i, d) in region.drafts.iter().enumerate() {
                order.push((d.line, r, i));
            }
        }
        order.sort();
        let mut resolved: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for &(_, r, i) in &order {
            let draft = self.regions[r].drafts[i].clone();
            let s = self.resolve(r, &draft.source);
            let t = self.resolve(r, &draft.target);
            resolved.insert((r, i), (s, t));
        }
        let root = self.build_region(0, &resolved);
        StateMachine { name, root }
    }

    fn build_region(&self, r: usize, resolved: &HashMap<(usize, usize), (usize, usize)>) -> Region {
        let node = &self.regions[r];
        let states = node
            .states
            .iter()
            .map(|&s| {
                let st = &self.states[s];
                State {
                    id: st.id.clone(),
                    name: st.name.clone(),
                    kind: st.kind,
                    regions: st
                        .regions
                        .iter()
                        .map(|&child| self.build_region(child, resolved))
                        .collect(),
                }
            })
            .collect();
        let transitions = node
            .drafts
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let (s, t) = resolved[&(r, i)];
                Transition {
                    source: self.states[s].id.clone(),
                    target: self.states[t].id.clone(),
                    trigger: d.trigger.clone(),
                    guard: d.guard.clone(),
                    effect: d.effect.clone(),
                }
            })
            .collect();
        Region {
            states,
            transitions,
        }
    }
}

/// Splits a transition label into trigger, guard and effect:
/// `trigger [guard] / effect`.
pub(crate) fn split_label(label: &str) -> (Option<TriggerLabel>, Option<String>, Option<String>) {
    let (trigger_part, effect) = match label.split_once('/') {
        Some((t, e)) => (t, Some(e.trim())),
        None => (label, None),
    };
    let mut trigger_text = trigger_part.to_string();
    let mut guard = None;
    if let (Some(open), Some(close)) = (trigger_part.find('['), trigger_part.rfind(']')) {
        if open < close {
            guard = Some(trigger_part[open + 1..close].trim().to_string());
            trigger_text = format!("{}{}", &trigger_part[..open], &trigger_part[close + 1..]);
        }
    }
    let trigger_text = trigger_text.trim();
    let trigger = (!trigger_text.is_empty()).then(|| TriggerLabel::parse(trigger_text));
    let guard = guard.filter(|g| !g.is_empty());
    let effect = effect.filter(|e| !e.is_empty()).map(str::to_string);
    (trigger, guard, effect)
}

fn stereotype_kind(text: &str) -> Option<StateKind> {
    match text.to_ascii_lowercase().as_str() {
        "start" => Some(StateKind::Initial),
        "end" => Some(StateKind::Final),
        "history" => Some(StateKind::ShallowHistory),
        "history*" => Some(StateKind::DeepHistory),
        _ => None,
    }
}

enum Skip {
    None,
    BlockComment,
    Braces(usize),
    Until(&'static [&'static str]),
}

/// Parses the supported subset of PlantUML state diagram syntax.
///
/// States referenced only by transitions are created as simple states in the
/// region of their first reference. `[*]` on the left of an arrow is the
/// region's initial pseudostate, on the right its final state. Lines outside
/// the subset are skipped with one warning each.
pub fn parse_state_plantuml(text: &str) -> Result<Parsed<StateMachine>, PumlError> {
    let mut builder = Builder::new();
    let mut stack: Vec<usize> = vec![0];
    let mut name: Option<String> = None;
    let mut ended = false;
    let mut skip = Skip::None;

    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();

        match skip {
            Skip::BlockComment => {
                if line.contains("'/") {
                    skip = Skip::None;
                }
                continue;
            }
            Skip::Braces(depth) => {
                builder.warnings.push(format!("line {line_no}: skipped `{line}`"));
                let depth = depth + line.matches('{').count();
                let closes = line.matches('}').count();
                skip = if closes >= depth {
                    Skip::None
                } else {
                    Skip::Braces(depth - closes)
                };
                continue;
            }
            Skip::Until(ends) => {
                builder.warnings.push(format!("line {line_no}: skipped `{line}`"));
                if ends.iter().any(|e| line.eq_ignore_ascii_case(e)) {
                    skip = Skip::None;
                }
                continue;
            }
            Skip::None => {}
        }

        if line.is_empty() || line.starts_with('\'') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("/'") {
            if !rest.contains("'/") {
                skip = Skip::BlockComment;
            }
            continue;
        }

        if name.is_none() {
            if let Some(rest) = line.strip_prefix("@startuml") {
                name = Some(rest.trim().to_string());
                continue;
            }
            return Err(PumlError::Syntax {
                line: line_no,
                message: "text outside @startuml/@enduml".into(),
            });
        }
        if ended {
            return Err(PumlError::Syntax {
                line: line_no,
                message: "text outside @startuml/@enduml".into(),
            });
        }
        if line.starts_with("@enduml") {
            ended = true;
            continue;
        }

        let current = *stack.last().expect("stack never empty");

        if line == "}" {
            if stack.len() == 1 {
                return Err(PumlError::Syntax {
                    line: line_no,
                    message: "unbalanced `}`".into(),
                });
            }
            stack.pop();
            continue;
        }

        if line == "--" || line == "||" {
            if stack.len() == 1 {
                builder
                    .warnings
                    .push(format!("line {line_no}: region separator outside a composite state"));
                continue;
            }
            let owner_id = builder.regions[current]
                .key
                .owner
                .clone()
                .expect("nested region has an owner");
            let owner = builder.by_id[&owner_id];
            let next = builder.add_region(owner);
            *stack.last_mut().expect("stack never empty") = next;
            continue;
        }

        if let Some(caps) = TRANSITION.captures(line) {
            let reversed = caps["arrow"].starts_with('<');
            let (src, tgt) = if reversed {
                (&caps["b"], &caps["a"])
            } else {
                (&caps["a"], &caps["b"])
            };
            let source = builder.endpoint(current, src, true);
            let target = builder.endpoint(current, tgt, false);
            let (trigger, guard, effect) = caps
                .name("label")
                .map(|l| split_label(l.as_str()))
                .unwrap_or((None, None, None));
            builder.regions[current].drafts.push(Draft {
                line: line_no,
                source,
                target,
                trigger,
                guard,
                effect,
            });
            continue;
        }

        if let Some(caps) = DECL.captures(line) {
            let (id, display) = if let Some(qid) = caps.name("qid") {
                (qid.as_str(), Some(caps["qname"].to_string()))
            } else if let Some(aid) = caps.name("aid") {
                (aid.as_str(), Some(caps["aname"].to_string()))
            } else if let Some(id) = caps.name("id") {
                (id.as_str(), None)
            } else {
                (caps.name("only").map(|m| m.as_str()).unwrap_or_default(), None)
            };
            let rest = caps.name("rest").map(|m| m.as_str()).unwrap_or_default();
            let head = rest.split(':').next().unwrap_or_default();
            let mut kind = None;
            if let Some(st) = STEREOTYPE.captures(head) {
                kind = stereotype_kind(&st["s"]);
                if kind.is_none() {
                    builder.warnings.push(format!(
                        "line {line_no}: unsupported stereotype <<{}>> on `{id}`, treated as a simple state",
                        &st["s"]
                    ));
                }
            }
            let opens = head.trim_end().ends_with('{');
            let idx = builder.declare(current, id, display.as_deref(), kind, line_no)?;
            if opens {
                let region = builder.open_composite(idx);
                stack.push(region);
            }
            continue;
        }

        if let Some(caps) = DESCRIPTION.captures(line) {
            builder.declare(current, &caps["id"], None, None, line_no)?;
            continue;
        }

        builder.warnings.push(format!("line {line_no}: skipped `{line}`"));
        let lower = line.to_ascii_lowercase();
        if line.ends_with('{') {
            skip = Skip::Braces(1);
        } else if lower.starts_with("note") && !line.contains(':') {
            skip = Skip::Until(&["end note", "endnote"]);
        } else if lower == "legend" || lower.starts_with("legend ") {
            skip = Skip::Until(&["endlegend", "end legend"]);
        }
    }

    if name.is_none() {
        return Err(PumlError::Syntax {
            line: 1,
            message: "missing @startuml".into(),
        });
    }
    if stack.len() > 1 {
        return Err(PumlError::Syntax {
            line: text.lines().count(),
            message: "unbalanced `{`: composite state not closed".into(),
        });
    }
    if !ended {
        return Err(PumlError::Syntax {
            line: text.lines().count(),
            message: "missing @enduml".into(),
        });
    }

    let warnings = std::mem::take(&mut builder.warnings);
    let machine = builder.finish(name.unwrap_or_default());
    let violations = validate_state_machine(&machine);
    if !violations.is_empty() {
        return Err(PumlError::Invalid(violations));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Parsed {
        value: machine,
        warnings,
    })
}
