use super::{StateKind, StateMachine, StateRef};
use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReachError {
    #[error("no entry point: the top-level region has no initial pseudostate")]
    NoEntryPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Step<'a> {
    /// Default entry: composites enter each region through its initial.
    Enter(&'a str),
    /// The state becomes active because a descendant in region `.1` did.
    Ancestor(&'a str, usize),
}

/// Ids of simple and composite states reachable from the top-level initial
/// pseudostate.
///
/// Entering a composite enters every one of its regions through that
/// region's initial pseudostate; a region without one contributes nothing.
/// Targeting a nested state directly activates its ancestors and default-
/// enters their other regions. A history pseudostate makes every named
/// state of its region reachable (deep history: the region's whole subtree).
pub fn reachable_states(machine: &StateMachine) -> Result<BTreeSet<String>, ReachError> {
    let entry = machine
        .root
        .initial()
        .ok_or(ReachError::NoEntryPoint)?
        .id
        .as_str();

    let index = machine.index();
    let mut outgoing: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for t in machine.all_transitions() {
        outgoing
            .entry(t.transition.source.as_str())
            .or_default()
            .push(t.transition.target.as_str());
    }

    let mut active: HashSet<&str> = HashSet::new();
    let mut done: HashSet<Step> = HashSet::new();
    let mut queue = VecDeque::from([Step::Enter(entry)]);

    while let Some(step) = queue.pop_front() {
        if !done.insert(step) {
            continue;
        }
        let (id, skip_region) = match step {
            Step::Enter(id) => (id, None),
            Step::Ancestor(id, region) => (id, Some(region)),
        };
        let Some(sref) = index.get(id) else { continue };

        if active.insert(id) {
            for target in outgoing.get(id).into_iter().flatten() {
                queue.push_back(Step::Enter(target));
            }
            if let Some(owner) = sref.owner {
                queue.push_back(Step::Ancestor(owner.id.as_str(), sref.region_index));
            }
        }

        let state = sref.state;
        for (i, region) in state.regions.iter().enumerate() {
            if Some(i) == skip_region {
                continue;
            }
            if let Some(initial) = region.initial() {
                queue.push_back(Step::Enter(initial.id.as_str()));
            }
        }

        if skip_region.is_none() && state.kind.is_history() {
            enter_through_history(sref, &mut queue);
        }
    }

    Ok(active
        .into_iter()
        .filter(|id| index.get(id).is_some_and(|s| s.state.kind.is_named()))
        .map(str::to_string)
        .collect())
}

fn enter_through_history<'a>(history: &StateRef<'a>, queue: &mut VecDeque<Step<'a>>) {
    let deep = history.state.kind == StateKind::DeepHistory;
    let mut stack: Vec<&'a super::Region> = vec![history.region];
    while let Some(region) = stack.pop() {
        for s in &region.states {
            if s.kind.is_named() {
                queue.push_back(Step::Enter(s.id.as_str()));
            }
            if deep {
                stack.extend(s.regions.iter());
            }
        }
    }
}
