//! Random state machines for property tests.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use sadgen::model::{Region, RegionKey, State, StateKind, StateMachine, Transition, TriggerLabel};

const WORDS: [&str; 32] = [
    "Idle", "Heating", "Brewing", "Ready", "Paused", "Washing", "Rinsing", "Drying", "Locked", "Open", "Closed",
    "Waiting", "Serving", "Cooling", "Filling", "Draining", "Error", "Standby", "Active", "Grinding", "Pumping",
    "Cleaning", "Calibrating", "Booting", "Sleeping", "Charging", "Running", "Stopped", "Holding", "Dispensing",
    "Flushing", "Testing",
];

#[derive(Debug, Clone, Copy)]
pub struct MachineShape {
    pub max_states: usize,
    pub max_depth: usize,
    pub parallel: bool,
    pub history: bool,
    /// Every named state reachable from the top-level initial.
    pub connected: bool,
    /// Probability that a nested region gets an initial pseudostate.
    pub nested_initial: f64,
}

impl Default for MachineShape {
    fn default() -> Self {
        MachineShape {
            max_states: 12,
            max_depth: 3,
            parallel: true,
            history: true,
            connected: true,
            nested_initial: 0.8,
        }
    }
}

struct Gen {
    rng: StdRng,
    names: Vec<&'static str>,
    next: usize,
    budget: usize,
    shape: MachineShape,
}

impl Gen {
    fn name(&mut self) -> String {
        let n = self.names[self.next].to_string();
        self.next += 1;
        n
    }

    fn trigger(&mut self) -> Option<TriggerLabel> {
        let raw = match self.rng.gen_range(0..6) {
            0 => return None,
            1 => format!("tm({})", self.rng.gen_range(1..10) * 500),
            2 => "timeout".to_string(),
            _ => format!("ev{}", self.names[self.rng.gen_range(0..self.names.len())]),
        };
        Some(TriggerLabel::parse(&raw))
    }

    fn edge(&mut self, source: &str, target: &str) -> Transition {
        let mut t = Transition::new(source, target);
        t.trigger = self.trigger();
        if self.rng.gen_bool(0.15) {
            t.guard = Some("ready".into());
        }
        if self.rng.gen_bool(0.15) {
            t.effect = Some("log()".into());
        }
        t
    }

    /// `reserve` states stay in the budget for regions built later.
    fn region(&mut self, key: RegionKey, depth: usize, with_initial: bool, reserve: usize) -> Region {
        let room = (self.budget - reserve).min(4);
        let n = self.rng.gen_range(1..=room);
        self.budget -= n;
        let mut region = Region::default();
        let mut named = Vec::new();
        if with_initial {
            region
                .states
                .push(State::with_kind(&key.pseudo_id(StateKind::Initial), StateKind::Initial));
        }
        for _ in 0..n {
            let id = self.name();
            let spare = self.budget - reserve;
            let regions = if depth < self.shape.max_depth && spare >= 1 && self.rng.gen_bool(0.3) {
                let count = if self.shape.parallel && spare >= 2 && self.rng.gen_bool(0.4) { 2 } else { 1 };
                let mut rs = Vec::new();
                for index in 0..count {
                    let child_key = RegionKey {
                        owner: Some(id.clone()),
                        index,
                    };
                    let init = self.rng.gen_bool(self.shape.nested_initial);
                    rs.push(self.region(child_key, depth + 1, init, reserve + count - 1 - index));
                }
                rs
            } else {
                Vec::new()
            };
            if regions.is_empty() {
                region.states.push(State::simple(&id));
            } else {
                region.states.push(State::composite(&id, regions));
            }
            named.push(id);
        }

        if with_initial {
            region
                .transitions
                .push(Transition::new(&key.pseudo_id(StateKind::Initial), &named[0]));
        }
        if self.shape.connected {
            for w in named.windows(2) {
                let t = self.edge(&w[0], &w[1]);
                region.transitions.push(t);
            }
        }
        for _ in 0..self.rng.gen_range(0..=n) {
            let a = named[self.rng.gen_range(0..n)].clone();
            let b = named[self.rng.gen_range(0..n)].clone();
            let t = self.edge(&a, &b);
            region.transitions.push(t);
        }
        // composites whose regions lack an initial get a direct entry
        for s in region.states.clone() {
            for r in &s.regions {
                if !r.has_initial() && self.shape.connected {
                    let first = r.states.iter().find(|x| x.kind.is_named()).expect("region has a state");
                    let t = self.edge(&s.id, &first.id);
                    region.transitions.push(t);
                }
            }
        }
        if self.rng.gen_bool(0.3) {
            let fin = key.pseudo_id(StateKind::Final);
            region.states.push(State::with_kind(&fin, StateKind::Final));
            let from = named[self.rng.gen_range(0..n)].clone();
            let t = self.edge(&from, &fin);
            region.transitions.push(t);
        }
        if self.shape.history && key.owner.is_some() && self.rng.gen_bool(0.3) {
            let kind = if self.rng.gen_bool(0.5) {
                StateKind::ShallowHistory
            } else {
                StateKind::DeepHistory
            };
            let h = key.pseudo_id(kind);
            region.states.push(State::with_kind(&h, kind));
            let from = named[n - 1].clone();
            let t = self.edge(&from, &h);
            region.transitions.push(t);
        }
        region
    }
}

pub fn random_machine(seed: u64, shape: MachineShape) -> StateMachine {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut names = WORDS.to_vec();
    names.shuffle(&mut rng);
    let budget = rng.gen_range(1..=shape.max_states.min(WORDS.len()));
    let mut g = Gen {
        rng,
        names,
        next: 0,
        budget,
        shape,
    };
    let root = g.region(RegionKey::root(), 0, true, 0);
    StateMachine::new("Generated", root)
}

/// True when some composite has a region without an initial pseudostate.
pub fn has_composite_without_initial(m: &StateMachine) -> bool {
    m.walk().iter().any(|s| s.state.regions.iter().any(|r| !r.has_initial()))
}

const NAME_TOKENS: [&str; 8] = ["wait", "idle", "heat", "water", "brew", "ready", "door", "open"];

/// A flat machine whose state names share tokens, so similarities between
/// two such machines spread over the whole range.
pub fn overlapping_machine(seed: u64, max_states: usize) -> StateMachine {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_states);
    let mut region = Region::default();
    let mut used = std::collections::HashSet::new();
    region
        .states
        .push(State::with_kind(&RegionKey::root().pseudo_id(StateKind::Initial), StateKind::Initial));
    let mut i = 0;
    while region.states.len() <= n {
        let k = rng.gen_range(1..=3);
        let mut tokens: Vec<&str> = (0..k).map(|_| NAME_TOKENS[rng.gen_range(0..NAME_TOKENS.len())]).collect();
        tokens.dedup();
        let name = tokens.join(" ");
        if !used.insert(name.clone()) {
            continue;
        }
        let mut s = State::simple(&format!("s{i}"));
        s.name = name;
        region.states.push(s);
        i += 1;
    }
    region
        .transitions
        .push(Transition::new(&RegionKey::root().pseudo_id(StateKind::Initial), "s0"));
    StateMachine::new("Overlap", region)
}
