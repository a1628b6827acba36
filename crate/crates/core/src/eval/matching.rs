use super::assignment::max_weight_assignment;
use super::normalize::{label_similarity, normalize_label};
use super::ScoreConfig;
use crate::model::{RegionKey, State, StateKind, StateMachine, StateRef, TriggerFamily, TriggerLabel};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

/// Similarities are compared as integers so that the assignment is exact.
const WEIGHT_SCALE: f64 = 1_000_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePair {
    pub gt: String,
    pub gen: String,
    pub similarity: f64,
}

/// Indices refer to [`StateMachine::all_transitions`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionPair {
    pub gt: usize,
    pub gen: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Matching {
    /// Named states first (GT order), then pseudostates.
    pub states: Vec<StatePair>,
    pub transitions: Vec<TransitionPair>,
    pub unmatched_gt_states: Vec<String>,
    pub unmatched_gen_states: Vec<String>,
    pub unmatched_gt_transitions: Vec<usize>,
    pub unmatched_gen_transitions: Vec<usize>,
    /// Summed integer weight of the named-state assignment.
    pub named_weight: i64,
}

impl Matching {
    pub fn gen_of(&self, gt: &str) -> Option<&StatePair> {
        self.states.iter().find(|p| p.gt == gt)
    }

    pub fn gt_of(&self, gen: &str) -> Option<&StatePair> {
        self.states.iter().find(|p| p.gen == gen)
    }

    pub fn gen_transition_of(&self, gt: usize) -> Option<usize> {
        self.transitions.iter().find(|p| p.gt == gt).map(|p| p.gen)
    }

    pub fn gt_transition_of(&self, gen: usize) -> Option<usize> {
        self.transitions.iter().find(|p| p.gen == gen).map(|p| p.gt)
    }
}

/// Integer weight of pairing two named states; 0 when below the cut-off.
pub fn state_weight(gt_name: &str, gen_name: &str, min_similarity: f64) -> i64 {
    let sim = label_similarity(gt_name, gen_name);
    if sim < min_similarity {
        0
    } else {
        (sim * WEIGHT_SCALE).round() as i64
    }
}

/// Equal normalized text, or two timeouts with the same duration (or both
/// without one). In lenient mode any two timeouts agree.
pub fn triggers_equivalent(gt: Option<&TriggerLabel>, gen: Option<&TriggerLabel>, lenient_timeout: bool) -> bool {
    match (gt, gen) {
        (None, None) => true,
        (Some(a), Some(b)) => {
            if a.family == TriggerFamily::Timeout && b.family == TriggerFamily::Timeout {
                return lenient_timeout || a.timeout_ms == b.timeout_ms;
            }
            a.family == b.family && normalize_label(&a.raw) == normalize_label(&b.raw)
        }
        _ => false,
    }
}

/// Named states sorted by the tie-break key (display name, then id).
fn sorted_named<'a>(m: &'a StateMachine) -> Vec<StateRef<'a>> {
    let mut v: Vec<StateRef> = m.walk().into_iter().filter(|s| s.state.kind.is_named()).collect();
    v.sort_by(|a, b| (&a.state.name, &a.state.id).cmp(&(&b.state.name, &b.state.id)));
    v
}

/// Pair two machines: named states machine-wide by maximum-weight
/// assignment, pseudostates by kind inside corresponding regions, then
/// transitions whose endpoints are paired.
pub fn match_machines(gt: &StateMachine, gen: &StateMachine, cfg: &ScoreConfig) -> Matching {
    let gt_named = sorted_named(gt);
    let gen_named = sorted_named(gen);
    let weights: Vec<Vec<i64>> = gt_named
        .iter()
        .map(|a| {
            gen_named
                .iter()
                .map(|b| state_weight(&a.state.name, &b.state.name, cfg.min_similarity))
                .collect()
        })
        .collect();
    let assignment = max_weight_assignment(&weights, gen_named.len());

    let mut pairs: HashMap<String, (String, f64)> = HashMap::new();
    for (i, col) in assignment.rows.iter().enumerate() {
        if let Some(j) = *col {
            let sim = label_similarity(&gt_named[i].state.name, &gen_named[j].state.name);
            pairs.insert(gt_named[i].state.id.clone(), (gen_named[j].state.id.clone(), sim));
        }
    }

    let mut out = Matching {
        named_weight: assignment.total,
        ..Matching::default()
    };
    for s in gt.walk() {
        if let Some((g, sim)) = pairs.get(&s.state.id) {
            out.states.push(StatePair {
                gt: s.state.id.clone(),
                gen: g.clone(),
                similarity: *sim,
            });
        }
    }

    let region_map = map_regions(gt, gen, &pairs);
    pair_pseudostates(gt, gen, &region_map, &mut out);

    let paired_gt: HashSet<&str> = out.states.iter().map(|p| p.gt.as_str()).collect();
    let paired_gen: HashSet<&str> = out.states.iter().map(|p| p.gen.as_str()).collect();
    out.unmatched_gt_states = gt
        .walk()
        .iter()
        .map(|s| s.state.id.as_str())
        .filter(|id| !paired_gt.contains(id))
        .map(str::to_string)
        .collect();
    out.unmatched_gen_states = gen
        .walk()
        .iter()
        .map(|s| s.state.id.as_str())
        .filter(|id| !paired_gen.contains(id))
        .map(str::to_string)
        .collect();

    pair_transitions(gt, gen, cfg, &mut out);
    out
}

fn region_keys_of(state: &State) -> Vec<RegionKey> {
    (0..state.regions.len())
        .map(|index| RegionKey {
            owner: Some(state.id.clone()),
            index,
        })
        .collect()
}

/// Corresponding regions: root to root, and for every pair of composites an
/// assignment of their regions maximizing the number of paired direct
/// substates (same index wins ties).
fn map_regions(
    gt: &StateMachine,
    gen: &StateMachine,
    pairs: &HashMap<String, (String, f64)>,
) -> BTreeMap<RegionKey, RegionKey> {
    let mut map = BTreeMap::new();
    map.insert(RegionKey::root(), RegionKey::root());
    let gen_index = gen.index();
    for s in gt.walk() {
        if s.state.kind != StateKind::Composite {
            continue;
        }
        let Some((gen_id, _)) = pairs.get(&s.state.id) else {
            continue;
        };
        let Some(other) = gen_index.get(gen_id.as_str()) else {
            continue;
        };
        if other.state.kind != StateKind::Composite {
            continue;
        }
        let weights: Vec<Vec<i64>> = s
            .state
            .regions
            .iter()
            .enumerate()
            .map(|(i, ra)| {
                other
                    .state
                    .regions
                    .iter()
                    .enumerate()
                    .map(|(j, rb)| {
                        let direct: HashSet<&str> = rb.states.iter().map(|x| x.id.as_str()).collect();
                        let overlap = ra
                            .states
                            .iter()
                            .filter_map(|x| pairs.get(&x.id))
                            .filter(|(g, _)| direct.contains(g.as_str()))
                            .count() as i64;
                        overlap * 1000 + i64::from(i == j) + 1
                    })
                    .collect()
            })
            .collect();
        let a = max_weight_assignment(&weights, other.state.regions.len());
        let gt_keys = region_keys_of(s.state);
        let gen_keys = region_keys_of(other.state);
        for (i, col) in a.rows.iter().enumerate() {
            if let Some(j) = col {
                map.insert(gt_keys[i].clone(), gen_keys[*j].clone());
            }
        }
    }
    map
}

fn pseudostates_by_region(m: &StateMachine) -> BTreeMap<RegionKey, Vec<&State>> {
    let mut map: BTreeMap<RegionKey, Vec<&State>> = BTreeMap::new();
    for s in m.walk() {
        if s.state.kind.is_pseudo() {
            map.entry(s.region_key()).or_default().push(s.state);
        }
    }
    map
}

fn pair_pseudostates(
    gt: &StateMachine,
    gen: &StateMachine,
    region_map: &BTreeMap<RegionKey, RegionKey>,
    out: &mut Matching,
) {
    let gt_pseudo = pseudostates_by_region(gt);
    let gen_pseudo = pseudostates_by_region(gen);
    for (gt_key, gt_states) in &gt_pseudo {
        let Some(gen_states) = region_map.get(gt_key).and_then(|k| gen_pseudo.get(k)) else {
            continue;
        };
        for kind in [
            StateKind::Initial,
            StateKind::Final,
            StateKind::ShallowHistory,
            StateKind::DeepHistory,
        ] {
            let a = gt_states.iter().filter(|s| s.kind == kind);
            let b = gen_states.iter().filter(|s| s.kind == kind);
            for (x, y) in a.zip(b) {
                out.states.push(StatePair {
                    gt: x.id.clone(),
                    gen: y.id.clone(),
                    similarity: 1.0,
                });
            }
        }
    }
}

fn pair_transitions(gt: &StateMachine, gen: &StateMachine, cfg: &ScoreConfig, out: &mut Matching) {
    let gt_ts = gt.all_transitions();
    let gen_ts = gen.all_transitions();
    let to_gen: HashMap<&str, &str> = out.states.iter().map(|p| (p.gt.as_str(), p.gen.as_str())).collect();

    let mut gen_groups: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (j, t) in gen_ts.iter().enumerate() {
        gen_groups
            .entry((t.transition.source.as_str(), t.transition.target.as_str()))
            .or_default()
            .push(j);
    }
    let mut gt_groups: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (i, t) in gt_ts.iter().enumerate() {
        let (Some(s), Some(d)) = (
            to_gen.get(t.transition.source.as_str()),
            to_gen.get(t.transition.target.as_str()),
        ) else {
            continue;
        };
        gt_groups.entry((*s, *d)).or_default().push(i);
    }

    let mut taken_gen: HashSet<usize> = HashSet::new();
    let mut pairs: Vec<TransitionPair> = Vec::new();
    for (key, gt_idx) in &gt_groups {
        let Some(gen_idx) = gen_groups.get(key) else {
            continue;
        };
        let mut taken_gt: HashSet<usize> = HashSet::new();
        for &i in gt_idx {
            let found = gen_idx.iter().copied().find(|j| {
                !taken_gen.contains(j)
                    && triggers_equivalent(
                        gt_ts[i].transition.trigger.as_ref(),
                        gen_ts[*j].transition.trigger.as_ref(),
                        cfg.lenient_timeout,
                    )
            });
            if let Some(j) = found {
                taken_gen.insert(j);
                taken_gt.insert(i);
                pairs.push(TransitionPair { gt: i, gen: j });
            }
        }
        for &i in gt_idx {
            if taken_gt.contains(&i) {
                continue;
            }
            if let Some(j) = gen_idx.iter().copied().find(|j| !taken_gen.contains(j)) {
                taken_gen.insert(j);
                pairs.push(TransitionPair { gt: i, gen: j });
            }
        }
    }
    pairs.sort_by_key(|p| p.gt);
    let paired_gt: HashSet<usize> = pairs.iter().map(|p| p.gt).collect();
    out.unmatched_gt_transitions = (0..gt_ts.len()).filter(|i| !paired_gt.contains(i)).collect();
    out.unmatched_gen_transitions = (0..gen_ts.len()).filter(|j| !taken_gen.contains(j)).collect();
    out.transitions = pairs;
}
