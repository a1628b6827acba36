use crate::model::{Region, RegionKey, State, StateKind, StateMachine, Transition};
use std::collections::{HashMap, HashSet};
use std::fmt::Write;

struct Info {
    kind: StateKind,
    key: RegionKey,
    /// First history of its kind among the owner's regions, so `Owner[H]`
    /// resolves to it.
    first_history_of_owner: bool,
}

impl Info {
    fn is_auto(&self, id: &str) -> bool {
        self.kind.is_pseudo() && self.key.pseudo_id(self.kind) == id
    }
}

struct Plan<'a> {
    info: HashMap<&'a str, Info>,
    declared: HashSet<&'a str>,
}

enum Ref {
    Shorthand(String),
    Id,
}

impl<'a> Plan<'a> {
    fn new(machine: &'a StateMachine) -> Self {
        let mut info = HashMap::new();
        let mut seen_history: HashSet<(Option<String>, StateKind)> = HashSet::new();
        for s in machine.walk() {
            let key = s.region_key();
            let first = s.state.kind.is_history() && seen_history.insert((key.owner.clone(), s.state.kind));
            info.insert(
                s.state.id.as_str(),
                Info {
                    kind: s.state.kind,
                    key,
                    first_history_of_owner: first,
                },
            );
        }
        let mut plan = Plan {
            info,
            declared: HashSet::new(),
        };

        // A pseudostate needs an explicit declaration unless a shorthand
        // reference recreates it with the same id in the same region.
        let mut recreated: HashSet<&str> = HashSet::new();
        let mut by_id: HashSet<&str> = HashSet::new();
        for r in machine.regions() {
            let here = RegionKey {
                owner: r.owner.map(|o| o.id.clone()),
                index: r.index,
            };
            for t in &r.region.transitions {
                for (id, is_source) in [(t.source.as_str(), true), (t.target.as_str(), false)] {
                    match plan.reference(id, &here, is_source) {
                        Ref::Id => {
                            by_id.insert(id);
                        }
                        Ref::Shorthand(_) => {
                            let info = &plan.info[id];
                            let nonlocal_history = info.key != here;
                            if info.is_auto(id) && (!nonlocal_history || info.key.index == 0) {
                                recreated.insert(id);
                            }
                        }
                    }
                }
            }
        }
        for s in machine.walk() {
            let st = s.state;
            if st.kind.is_named() {
                continue;
            }
            let id = st.id.as_str();
            let auto = plan.info[id].is_auto(id);
            if !auto || st.name != st.id || by_id.contains(id) || !recreated.contains(id) {
                plan.declared.insert(id);
            }
        }
        plan
    }

    fn reference(&self, id: &str, here: &RegionKey, is_source: bool) -> Ref {
        let Some(info) = self.info.get(id) else {
            return Ref::Id;
        };
        let local = &info.key == here;
        match info.kind {
            StateKind::Initial if local && is_source => Ref::Shorthand("[*]".into()),
            StateKind::Final if local && !is_source && info.is_auto(id) => {
                Ref::Shorthand("[*]".into())
            }
            StateKind::ShallowHistory | StateKind::DeepHistory => {
                let mark = if info.kind == StateKind::DeepHistory {
                    "[H*]"
                } else {
                    "[H]"
                };
                if local {
                    Ref::Shorthand(mark.into())
                } else if let (Some(owner), true) = (&info.key.owner, info.first_history_of_owner) {
                    Ref::Shorthand(format!("{owner}{mark}"))
                } else {
                    Ref::Id
                }
            }
            _ => Ref::Id,
        }
    }

    fn endpoint(&self, id: &str, here: &RegionKey, is_source: bool) -> String {
        match self.reference(id, here, is_source) {
            Ref::Shorthand(text) => text,
            Ref::Id => id.to_string(),
        }
    }
}

/// Canonical PlantUML text for a state machine: within every region the
/// states are declared first (composites with their nested regions, `--`
/// between orthogonal regions), then the region's transitions, all in
/// declaration order.
pub fn emit_state_plantuml(machine: &StateMachine) -> String {
    let plan = Plan::new(machine);
    let mut out = String::new();
    if machine.name.is_empty() {
        out.push_str("@startuml\n");
    } else {
        let _ = writeln!(out, "@startuml {}", machine.name);
    }
    emit_region(&mut out, &plan, &machine.root, &RegionKey::root(), 0);
    out.push_str("@enduml\n");
    out
}

fn emit_region(out: &mut String, plan: &Plan, region: &Region, key: &RegionKey, depth: usize) {
    let pad = "  ".repeat(depth);
    for state in &region.states {
        emit_state(out, plan, state, depth);
    }
    for t in &region.transitions {
        let _ = writeln!(out, "{pad}{}", transition_line(plan, t, key));
    }
}

fn emit_state(out: &mut String, plan: &Plan, state: &State, depth: usize) {
    let pad = "  ".repeat(depth);
    let head = if state.name == state.id {
        format!("state {}", state.id)
    } else {
        format!("state \"{}\" as {}", state.name, state.id)
    };
    match state.kind {
        StateKind::Simple => {
            let _ = writeln!(out, "{pad}{head}");
        }
        StateKind::Composite => {
            let _ = writeln!(out, "{pad}{head} {{");
            for (i, region) in state.regions.iter().enumerate() {
                if i > 0 {
                    let _ = writeln!(out, "{pad}  --");
                }
                let key = RegionKey {
                    owner: Some(state.id.clone()),
                    index: i,
                };
                emit_region(out, plan, region, &key, depth + 1);
            }
            let _ = writeln!(out, "{pad}}}");
        }
        kind => {
            if plan.declared.contains(state.id.as_str()) {
                let stereotype = match kind {
                    StateKind::Initial => "start",
                    StateKind::Final => "end",
                    StateKind::ShallowHistory => "history",
                    _ => "history*",
                };
                let _ = writeln!(out, "{pad}{head} <<{stereotype}>>");
            }
        }
    }
}

fn transition_line(plan: &Plan, t: &Transition, here: &RegionKey) -> String {
    let mut line = format!(
        "{} --> {}",
        plan.endpoint(&t.source, here, true),
        plan.endpoint(&t.target, here, false)
    );
    let mut label = Vec::new();
    if let Some(trigger) = &t.trigger {
        if !trigger.raw.is_empty() {
            label.push(trigger.raw.clone());
        }
    }
    if let Some(guard) = &t.guard {
        label.push(format!("[{guard}]"));
    }
    if let Some(effect) = &t.effect {
        label.push(format!("/ {effect}"));
    }
    if !label.is_empty() {
        line.push_str(" : ");
        line.push_str(&label.join(" "));
    }
    line
}
