//! Compare a generated state machine with its ground truth and score it on
//! nine questions, each as matched/total (hallucinated).

mod assignment;
mod matching;
mod normalize;
mod report;
mod score;

pub use assignment::{max_weight_assignment, Assignment};
pub use matching::{match_machines, state_weight, triggers_equivalent, Matching, StatePair, TransitionPair};
pub use normalize::{label_similarity, normalize_label};
pub use report::{render_report, ReportFormat, ReportRow};
pub use score::{format_triple, score, Q9Score, Q9Source, ScoreCard, ScoreConfig, ScoreTriple};

use crate::model::StateMachine;

/// Match then score.
pub fn evaluate(gt: &StateMachine, gen: &StateMachine, cfg: &ScoreConfig) -> ScoreCard {
    let m = match_machines(gt, gen, cfg);
    score(gt, gen, &m, cfg)
}
