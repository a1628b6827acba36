use super::{ClassModel, ComponentModel, StateKind, StateMachine};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::fmt;

/// A broken invariant, naming the element it concerns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub element: String,
    pub message: String,
}

impl Violation {
    fn new(element: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            element: element.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.element, self.message)
    }
}

pub fn validate_class_model(model: &ClassModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut names = HashSet::new();
    for class in &model.classes {
        if class.name.trim().is_empty() {
            out.push(Violation::new("<unnamed class>", "class name is empty"));
        }
        if !names.insert(class.name.as_str()) {
            out.push(Violation::new(&class.name, "duplicate class name"));
        }
        let mut attrs = HashSet::new();
        for a in &class.attributes {
            if !attrs.insert(a.name.as_str()) {
                out.push(Violation::new(
                    format!("{}.{}", class.name, a.name),
                    "duplicate attribute name",
                ));
            }
        }
        let mut sigs = HashSet::new();
        for op in &class.operations {
            let sig = op.signature();
            if !sigs.insert(sig.clone()) {
                out.push(Violation::new(
                    format!("{}.{}", class.name, sig),
                    "duplicate operation signature",
                ));
            }
        }
    }

    let mut seen = HashSet::new();
    for assoc in &model.associations {
        let desc = format!("{} -- {}", assoc.source, assoc.target);
        for end in [&assoc.source, &assoc.target] {
            if !names.contains(end.as_str()) {
                out.push(Violation::new(
                    end,
                    format!("association `{desc}` names unknown class `{end}`"),
                ));
            }
        }
        if assoc.source == assoc.target && assoc.kind != super::AssociationKind::Plain {
            out.push(Violation::new(&desc, "self-association must be plain"));
        }
        if !seen.insert((&assoc.source, &assoc.target, &assoc.label)) {
            out.push(Violation::new(&desc, "duplicate association"));
        }
    }
    out
}

pub fn validate_component_model(component: &ComponentModel) -> Vec<Violation> {
    let mut out = validate_class_model(&component.model);
    let core: BTreeSet<&str> = component.core.iter().map(String::as_str).collect();
    let present: BTreeSet<&str> = component.model.class_names().collect();
    for missing in core.difference(&present) {
        out.push(Violation::new(*missing, "core component missing from model"));
    }
    for extra in present.difference(&core) {
        out.push(Violation::new(*extra, "class is not a core component"));
    }
    for assoc in &component.model.associations {
        if !core.contains(assoc.source.as_str()) || !core.contains(assoc.target.as_str()) {
            out.push(Violation::new(
                format!("{} -- {}", assoc.source, assoc.target),
                "association leaves the core component set",
            ));
        }
    }
    out
}

pub fn validate_state_machine(machine: &StateMachine) -> Vec<Violation> {
    let mut out = Vec::new();
    let walk = machine.walk();
    let mut ids = HashSet::new();
    for s in &walk {
        let state = s.state;
        if state.id.trim().is_empty() {
            out.push(Violation::new("<unnamed state>", "state id is empty"));
        }
        if !ids.insert(state.id.as_str()) {
            out.push(Violation::new(&state.id, "duplicate state id"));
        }
        match state.kind {
            StateKind::Composite => {
                if state.regions.is_empty() {
                    out.push(Violation::new(&state.id, "composite state has no region"));
                }
            }
            kind => {
                if !state.regions.is_empty() {
                    out.push(Violation::new(
                        &state.id,
                        format!("{kind:?} state must not contain regions"),
                    ));
                }
            }
        }
    }

    for r in machine.regions() {
        let scope = match r.owner {
            Some(owner) => format!("{}[{}]", owner.id, r.index),
            None => "<root>".to_string(),
        };
        let initials = r.region.states.iter().filter(|s| s.kind == StateKind::Initial).count();
        if initials > 1 {
            out.push(Violation::new(
                &scope,
                format!("region has {initials} initial pseudostates"),
            ));
        }
        let histories = r.region.states.iter().filter(|s| s.kind.is_history()).count();
        if histories > 1 {
            out.push(Violation::new(
                &scope,
                format!("region has {histories} history pseudostates"),
            ));
        }
        for t in &r.region.transitions {
            for end in [&t.source, &t.target] {
                if !ids.contains(end.as_str()) {
                    out.push(Violation::new(
                        format!("{} --> {}", t.source, t.target),
                        format!("transition references undeclared state `{end}`"),
                    ));
                }
            }
            if let Some(trigger) = &t.trigger {
                if !trigger.is_consistent() {
                    out.push(Violation::new(
                        format!("{} --> {}", t.source, t.target),
                        format!("trigger `{}` classification is inconsistent", trigger.raw),
                    ));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Association, ClassDecl, Region, State, Transition, Visibility};

    fn machine(states: Vec<State>, transitions: Vec<Transition>) -> StateMachine {
        StateMachine::new("m", Region { states, transitions })
    }

    #[test]
    fn empty_class_model_is_valid() {
        assert!(validate_class_model(&ClassModel::default()).is_empty());
    }

    #[test]
    fn dangling_association_names_missing_class() {
        let m = ClassModel {
            classes: vec![ClassDecl::new("CoffeeMachine")],
            associations: vec![Association::plain("CoffeeMachine", "Boiler")],
        };
        let v = validate_class_model(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].element, "Boiler");
    }

    #[test]
    fn duplicate_members_and_associations_flagged() {
        let c = ClassDecl::new("A")
            .with_attribute("x", Visibility::Private)
            .with_attribute("x", Visibility::Public)
            .with_operation("f", Visibility::Public)
            .with_operation("f", Visibility::Public);
        let mut composite_self = Association::plain("A", "A");
        composite_self.kind = crate::model::AssociationKind::Composition;
        let m = ClassModel {
            classes: vec![c, ClassDecl::new("A")],
            associations: vec![
                Association::plain("A", "A"),
                Association::plain("A", "A"),
                composite_self,
            ],
        };
        let msgs: Vec<String> = validate_class_model(&m).iter().map(|v| v.message.clone()).collect();
        assert!(msgs.contains(&"duplicate attribute name".to_string()));
        assert!(msgs.contains(&"duplicate operation signature".to_string()));
        assert!(msgs.contains(&"duplicate class name".to_string()));
        assert!(msgs.contains(&"duplicate association".to_string()));
        assert!(msgs.contains(&"self-association must be plain".to_string()));
    }

    #[test]
    fn minimal_machine_is_valid() {
        let m = machine(
            vec![State::with_kind("__initial", StateKind::Initial), State::simple("Off")],
            vec![Transition::new("__initial", "Off")],
        );
        assert!(validate_state_machine(&m).is_empty());
    }

    #[test]
    fn two_initials_in_region() {
        let m = machine(
            vec![
                State::with_kind("i1", StateKind::Initial),
                State::with_kind("i2", StateKind::Initial),
                State::simple("Off"),
            ],
            vec![Transition::new("i1", "Off")],
        );
        let v = validate_state_machine(&m);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("initial"));
    }

    #[test]
    fn undeclared_target() {
        let m = machine(
            vec![State::with_kind("i", StateKind::Initial), State::simple("Off")],
            vec![Transition::new("i", "Off"), Transition::new("Off", "Nowhere")],
        );
        let v = validate_state_machine(&m);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("Nowhere"));
    }

    #[test]
    fn region_and_kind_invariants() {
        let mut bad_initial = State::with_kind("i", StateKind::Initial);
        bad_initial.regions.push(Region::default());
        let empty_composite = State::composite("C", vec![]);
        let dup = State::simple("C");
        let h1 = State::with_kind("h1", StateKind::ShallowHistory);
        let h2 = State::with_kind("h2", StateKind::DeepHistory);
        let m = machine(vec![bad_initial, empty_composite, dup, h1, h2], vec![]);
        let v = validate_state_machine(&m);
        assert_eq!(v.len(), 4, "{v:?}");
    }

    #[test]
    fn validation_is_deterministic() {
        let m = machine(
            vec![State::simple("A"), State::simple("A")],
            vec![Transition::new("A", "X"), Transition::new("Y", "A")],
        );
        assert_eq!(validate_state_machine(&m), validate_state_machine(&m));
    }
}
