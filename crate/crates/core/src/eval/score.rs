use super::matching::{triggers_equivalent, Matching};
use crate::model::{reachable_states, StateKind, StateMachine};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;

/// Matching and scoring thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    /// Pairs of named states below this similarity are never matched.
    pub min_similarity: f64,
    /// Paired states at or above this similarity count as correctly named.
    pub name_threshold: f64,
    /// Any two timeouts are equivalent triggers, durations ignored.
    pub lenient_timeout: bool,
    /// Manual verdict for the overall-quality question; auto when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q9_manual: Option<bool>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            min_similarity: 0.60,
            name_threshold: 0.90,
            lenient_timeout: false,
            q9_manual: None,
        }
    }
}

/// Matched X out of ground-truth total Y, with Z hallucinated elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreTriple {
    pub matched: usize,
    pub total: usize,
    pub hallucinated: usize,
}

impl ScoreTriple {
    pub fn new(matched: usize, total: usize, hallucinated: usize) -> Self {
        ScoreTriple {
            matched,
            total,
            hallucinated,
        }
    }

    /// X ≤ Y. Cards read from disk may violate it.
    pub fn is_consistent(&self) -> bool {
        self.matched <= self.total
    }

    pub fn is_perfect(&self) -> bool {
        self.matched == self.total && self.hallucinated == 0
    }
}

impl fmt::Display for ScoreTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} ({})", self.matched, self.total, self.hallucinated)
    }
}

/// `X/Y (Z)`.
pub fn format_triple(t: &ScoreTriple) -> String {
    t.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Q9Source {
    Auto,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Q9Score {
    #[serde(flatten)]
    pub triple: ScoreTriple,
    pub source: Q9Source,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreCard {
    pub q1: ScoreTriple,
    pub q2: ScoreTriple,
    pub q3: ScoreTriple,
    pub q4: ScoreTriple,
    pub q5: ScoreTriple,
    pub q6: ScoreTriple,
    pub q7: ScoreTriple,
    pub q8: ScoreTriple,
    pub q9: Q9Score,
    #[serde(default)]
    pub notes: String,
}

impl ScoreCard {
    pub fn triples(&self) -> [ScoreTriple; 9] {
        [
            self.q1,
            self.q2,
            self.q3,
            self.q4,
            self.q5,
            self.q6,
            self.q7,
            self.q8,
            self.q9.triple,
        ]
    }

    pub fn is_perfect(&self) -> bool {
        self.triples().iter().all(ScoreTriple::is_perfect)
    }

    /// Questions (1-based) whose X exceeds Y.
    pub fn inconsistencies(&self) -> Vec<usize> {
        self.triples()
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.is_consistent())
            .map(|(i, _)| i + 1)
            .collect()
    }
}

fn is_start_or_end(kind: StateKind) -> bool {
    matches!(kind, StateKind::Initial | StateKind::Final)
}

/// Score `gen` against `gt` using a matching of the two.
pub fn score(gt: &StateMachine, gen: &StateMachine, m: &Matching, cfg: &ScoreConfig) -> ScoreCard {
    let mut notes = vec![format!(
        "min_similarity={} name_threshold={} timeout={}",
        cfg.min_similarity,
        cfg.name_threshold,
        if cfg.lenient_timeout { "lenient" } else { "strict" }
    )];
    let gt_walk = gt.walk();
    let gen_walk = gen.walk();
    let kind_of_gt = |id: &str| gt_walk.iter().find(|s| s.state.id == id).map(|s| s.state.kind);
    let paired_gt: HashSet<&str> = m.states.iter().map(|p| p.gt.as_str()).collect();
    let paired_gen: HashSet<&str> = m.states.iter().map(|p| p.gen.as_str()).collect();

    let q1 = {
        let gt_ends: Vec<&str> = gt_walk
            .iter()
            .filter(|s| is_start_or_end(s.state.kind))
            .map(|s| s.state.id.as_str())
            .collect();
        let hallucinated = gen_walk
            .iter()
            .filter(|s| is_start_or_end(s.state.kind) && !paired_gen.contains(s.state.id.as_str()))
            .count();
        let matched = gt_ends.iter().filter(|id| paired_gt.contains(*id)).count();
        ScoreTriple::new(matched, gt_ends.len(), hallucinated)
    };

    let named_pairs: Vec<_> = m
        .states
        .iter()
        .filter(|p| kind_of_gt(&p.gt).is_some_and(StateKind::is_named))
        .collect();
    let gt_named = gt_walk.iter().filter(|s| s.state.kind.is_named()).count();
    let gen_named = gen_walk.iter().filter(|s| s.state.kind.is_named()).count();

    let q2 = ScoreTriple::new(named_pairs.len(), gt_named, gen_named - named_pairs.len());

    let q3 = {
        let good = named_pairs
            .iter()
            .filter(|p| p.similarity >= cfg.name_threshold)
            .count();
        ScoreTriple::new(good, gt_named, named_pairs.len() - good)
    };

    let gt_ts = gt.all_transitions();
    let gen_ts = gen.all_transitions();
    let q4 = ScoreTriple::new(m.transitions.len(), gt_ts.len(), m.unmatched_gen_transitions.len());

    let q5 = {
        let mut total = 0;
        let mut matched = 0;
        for p in &m.transitions {
            let a = gt_ts[p.gt].transition.trigger.as_ref();
            if a.is_none() {
                continue;
            }
            total += 1;
            let b = gen_ts[p.gen].transition.trigger.as_ref();
            if triggers_equivalent(a, b, cfg.lenient_timeout) {
                matched += 1;
            }
        }
        ScoreTriple::new(matched, total, 0)
    };

    let q6 = match reachable_states(gen) {
        Ok(reach) => {
            let reachable = gen_walk
                .iter()
                .filter(|s| s.state.kind.is_named() && reach.contains(&s.state.id))
                .count();
            ScoreTriple::new(reachable, gen_named, 0)
        }
        Err(e) => {
            notes.push(format!("generated machine: {e}"));
            ScoreTriple::new(0, gen_named, 0)
        }
    };

    let q7 = {
        let total = gt_ts.iter().filter(|t| t.transition.is_self()).count();
        let matched = m
            .transitions
            .iter()
            .filter(|p| gt_ts[p.gt].transition.is_self())
            .count();
        let hallucinated = m
            .unmatched_gen_transitions
            .iter()
            .filter(|&&j| gen_ts[j].transition.is_self())
            .count();
        ScoreTriple::new(matched, total, hallucinated)
    };

    let q8 = {
        let gen_orthogonal: HashSet<&str> = gen_walk
            .iter()
            .filter(|s| s.state.is_orthogonal())
            .map(|s| s.state.id.as_str())
            .collect();
        let gt_orthogonal: Vec<&str> = gt_walk
            .iter()
            .filter(|s| s.state.is_orthogonal())
            .map(|s| s.state.id.as_str())
            .collect();
        let mut matched = 0;
        let mut covered: HashSet<&str> = HashSet::new();
        for id in &gt_orthogonal {
            if let Some(p) = m.gen_of(id) {
                if gen_orthogonal.contains(p.gen.as_str()) {
                    matched += 1;
                    covered.insert(p.gen.as_str());
                }
            }
        }
        let hallucinated = gen_orthogonal.iter().filter(|id| !covered.contains(*id)).count();
        ScoreTriple::new(matched, gt_orthogonal.len(), hallucinated)
    };

    let q9 = match cfg.q9_manual {
        Some(ok) => Q9Score {
            triple: ScoreTriple::new(usize::from(ok), 1, 0),
            source: Q9Source::Manual,
        },
        None => {
            let missing: Vec<&str> = gen_walk
                .iter()
                .filter(|s| s.state.kind == StateKind::Composite && !s.state.regions.iter().all(|r| r.has_initial()))
                .map(|s| s.state.id.as_str())
                .collect();
            if !missing.is_empty() {
                notes.push(format!("composite without entry point: {}", missing.join(", ")));
            }
            let ok = missing.is_empty() && q6.matched == q6.total && q4.hallucinated == 0;
            Q9Score {
                triple: ScoreTriple::new(usize::from(ok), 1, 0),
                source: Q9Source::Auto,
            }
        }
    };

    ScoreCard {
        q1,
        q2,
        q3,
        q4,
        q5,
        q6,
        q7,
        q8,
        q9,
        notes: notes.join("; "),
    }
}
