use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::LazyLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Simple,
    Composite,
    Initial,
    Final,
    ShallowHistory,
    DeepHistory,
}

impl StateKind {
    pub fn is_pseudo(self) -> bool {
        !self.is_named()
    }

    /// Simple and composite states; everything else is a pseudostate.
    pub fn is_named(self) -> bool {
        matches!(self, StateKind::Simple | StateKind::Composite)
    }

    pub fn is_history(self) -> bool {
        matches!(self, StateKind::ShallowHistory | StateKind::DeepHistory)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerFamily {
    Event,
    Timeout,
    Completion,
}

static TIMEOUT_CALL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:tm|timeout|after)\s*\(\s*(\d+(?:\.\d+)?)\s*(ms|msec|s|sec|min)?\s*\)$")
        .expect("timeout regex")
});

/// Transition trigger text together with its classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerLabel {
    pub raw: String,
    pub family: TriggerFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_ms: Option<u64>,
}

impl TriggerLabel {
    /// Classifies `raw`. Recognized timeout forms are `tm(n)`, `timeout(n)`,
    /// `after(n)` (optionally with a `ms`/`s`/`min` unit, milliseconds when
    /// absent) and bare `timeout`.
    pub fn parse(raw: &str) -> Self {
        let (family, timeout_ms) = classify(raw);
        TriggerLabel {
            raw: raw.to_string(),
            family,
            timeout_ms,
        }
    }

    /// True when `family` and `timeout_ms` agree with what `raw` classifies as.
    pub fn is_consistent(&self) -> bool {
        classify(&self.raw) == (self.family, self.timeout_ms)
    }
}

fn classify(raw: &str) -> (TriggerFamily, Option<u64>) {
    let text = raw.trim();
    if text.is_empty() || text.eq_ignore_ascii_case("completion") {
        return (TriggerFamily::Completion, None);
    }
    if text.eq_ignore_ascii_case("timeout") {
        return (TriggerFamily::Timeout, None);
    }
    if let Some(caps) = TIMEOUT_CALL.captures(text) {
        let amount: f64 = caps[1].parse().unwrap_or(0.0);
        let factor = match caps.get(2).map(|m| m.as_str().to_ascii_lowercase()) {
            Some(ref u) if u == "s" || u == "sec" => 1000.0,
            Some(ref u) if u == "min" => 60_000.0,
            _ => 1.0,
        };
        return (TriggerFamily::Timeout, Some((amount * factor).round() as u64));
    }
    (TriggerFamily::Event, None)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transition {
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<TriggerLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect: Option<String>,
}

impl Transition {
    pub fn new(source: &str, target: &str) -> Self {
        Transition {
            source: source.to_string(),
            target: target.to_string(),
            trigger: None,
            guard: None,
            effect: None,
        }
    }

    pub fn on(mut self, trigger: &str) -> Self {
        self.trigger = Some(TriggerLabel::parse(trigger));
        self
    }

    pub fn is_self(&self) -> bool {
        self.source == self.target
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    #[serde(default)]
    pub states: Vec<State>,
    #[serde(default)]
    pub transitions: Vec<Transition>,
}

impl Region {
    pub fn initial(&self) -> Option<&State> {
        self.states.iter().find(|s| s.kind == StateKind::Initial)
    }

    pub fn has_initial(&self) -> bool {
        self.initial().is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub id: String,
    pub name: String,
    pub kind: StateKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<Region>,
}

impl State {
    pub fn simple(id: &str) -> Self {
        State::with_kind(id, StateKind::Simple)
    }

    pub fn with_kind(id: &str, kind: StateKind) -> Self {
        State {
            id: id.to_string(),
            name: id.to_string(),
            kind,
            regions: Vec::new(),
        }
    }

    pub fn composite(id: &str, regions: Vec<Region>) -> Self {
        State {
            id: id.to_string(),
            name: id.to_string(),
            kind: StateKind::Composite,
            regions,
        }
    }

    pub fn is_orthogonal(&self) -> bool {
        self.kind == StateKind::Composite && self.regions.len() >= 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateMachine {
    pub name: String,
    pub root: Region,
}

/// Where a region sits: the owning composite (None for the root) and its
/// index among that composite's regions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionKey {
    pub owner: Option<String>,
    pub index: usize,
}

impl RegionKey {
    pub fn root() -> Self {
        RegionKey {
            owner: None,
            index: 0,
        }
    }

    /// Identifier stem for pseudostates created implicitly in this region.
    pub fn scope(&self) -> String {
        match (&self.owner, self.index) {
            (None, _) => String::new(),
            (Some(owner), 0) => owner.clone(),
            (Some(owner), i) => format!("{owner}__r{i}"),
        }
    }

    /// Identifier given to a `[*]`, `[H]` or `[H*]` pseudostate in this region.
    pub fn pseudo_id(&self, kind: StateKind) -> String {
        let suffix = match kind {
            StateKind::Initial => "initial",
            StateKind::Final => "final",
            StateKind::ShallowHistory => "H",
            StateKind::DeepHistory => "Hdeep",
            StateKind::Simple | StateKind::Composite => "state",
        };
        format!("{}__{suffix}", self.scope())
    }
}

/// A state visited by [`StateMachine::walk`].
#[derive(Debug, Clone, Copy)]
pub struct StateRef<'a> {
    pub state: &'a State,
    pub region: &'a Region,
    pub owner: Option<&'a State>,
    pub region_index: usize,
    pub depth: usize,
}

impl StateRef<'_> {
    pub fn region_key(&self) -> RegionKey {
        RegionKey {
            owner: self.owner.map(|o| o.id.clone()),
            index: self.region_index,
        }
    }
}

/// A transition visited by [`StateMachine::all_transitions`].
#[derive(Debug, Clone, Copy)]
pub struct TransitionRef<'a> {
    pub transition: &'a Transition,
    pub region: RegionRef<'a>,
}

#[derive(Debug, Clone, Copy)]
pub struct RegionRef<'a> {
    pub region: &'a Region,
    pub owner: Option<&'a State>,
    pub index: usize,
}

impl StateMachine {
    pub fn new(name: &str, root: Region) -> Self {
        StateMachine {
            name: name.to_string(),
            root,
        }
    }

    /// Every state in pre-order: a region's states in declaration order, each
    /// composite followed by the contents of its regions.
    pub fn walk(&self) -> Vec<StateRef<'_>> {
        let mut out = Vec::new();
        walk_region(&self.root, None, 0, 0, &mut out);
        out
    }

    /// Every region in pre-order, the root first.
    pub fn regions(&self) -> Vec<RegionRef<'_>> {
        let mut out = vec![RegionRef {
            region: &self.root,
            owner: None,
            index: 0,
        }];
        for s in self.walk() {
            for (index, region) in s.state.regions.iter().enumerate() {
                out.push(RegionRef {
                    region,
                    owner: Some(s.state),
                    index,
                });
            }
        }
        out
    }

    /// Transitions of every region, regions in pre-order.
    pub fn all_transitions(&self) -> Vec<TransitionRef<'_>> {
        self.regions()
            .into_iter()
            .flat_map(|r| {
                r.region
                    .transitions
                    .iter()
                    .map(move |t| TransitionRef { transition: t, region: r })
            })
            .collect()
    }

    pub fn state(&self, id: &str) -> Option<&State> {
        self.walk().into_iter().find(|s| s.state.id == id).map(|s| s.state)
    }

    /// Index from state id to its position, for lookups in hot loops.
    pub fn index(&self) -> BTreeMap<&str, StateRef<'_>> {
        let mut map = BTreeMap::new();
        for s in self.walk() {
            map.entry(s.state.id.as_str()).or_insert(s);
        }
        map
    }

    /// Ids of simple and composite states in pre-order.
    pub fn named_state_ids(&self) -> Vec<&str> {
        self.walk()
            .into_iter()
            .filter(|s| s.state.kind.is_named())
            .map(|s| s.state.id.as_str())
            .collect()
    }

    /// Structural equality: the containment tree, state attributes and the
    /// multiset of transitions per region must agree; declaration order does
    /// not matter.
    pub fn structurally_eq(&self, other: &StateMachine) -> bool {
        self.name == other.name && canonical_region(&self.root) == canonical_region(&other.root)
    }
}

fn walk_region<'a>(
    region: &'a Region,
    owner: Option<&'a State>,
    region_index: usize,
    depth: usize,
    out: &mut Vec<StateRef<'a>>,
) {
    for state in &region.states {
        out.push(StateRef {
            state,
            region,
            owner,
            region_index,
            depth,
        });
        for (i, child) in state.regions.iter().enumerate() {
            walk_region(child, Some(state), i, depth + 1, out);
        }
    }
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct CanonicalState {
    id: String,
    name: String,
    kind: StateKind,
    regions: Vec<CanonicalRegion>,
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct CanonicalRegion {
    states: Vec<CanonicalState>,
    transitions: Vec<String>,
}

fn canonical_region(region: &Region) -> CanonicalRegion {
    let mut states: Vec<CanonicalState> = region
        .states
        .iter()
        .map(|s| CanonicalState {
            id: s.id.clone(),
            name: s.name.clone(),
            kind: s.kind,
            regions: s.regions.iter().map(canonical_region).collect(),
        })
        .collect();
    states.sort();
    let mut transitions: Vec<String> = region
        .transitions
        .iter()
        .map(|t| serde_json::to_string(t).expect("transition serializes"))
        .collect();
    transitions.sort();
    CanonicalRegion {
        states,
        transitions,
    }
}
