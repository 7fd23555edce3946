//! Fidelity metrics: per-participant error/agreement measures with bootstrap
//! uncertainty and post-hoc tests, population-level distributional
//! comparison, and the optional optimal re-matching analysis.
//!
//! Every operation here is a pure function; anything stochastic takes an
//! explicit seed.

pub mod agreement;
pub mod assignment;
pub mod bootstrap;
pub mod distance;
pub mod rank;
pub mod tukey;

pub use agreement::{cohen_kappa, gwet_ac2};
pub use assignment::{kuhn_munkres, Assignment};
pub use bootstrap::{bootstrap_summary, BootstrapSummary, DEFAULT_RESAMPLES};
pub use distance::{
    is_degenerate, response_histograms, wasserstein_ordinal, wasserstein_samples, GroupBy,
    DEGENERATE_THRESHOLD,
};
pub use rank::spearman;
pub use tukey::{tukey_hsd, TukeyRow};

use crate::corpus::{normalize_response, CategoricalKind, Construct, Corpus, ResponseSet};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("need at least {needed} pair(s), got {got}")]
    EmptyPairs { needed: usize, got: usize },
    #[error("scale must have at least 2 categories, got {k}")]
    DegenerateScale { k: usize },
    #[error("scale mismatch: {message}")]
    ScaleMismatch { message: String },
    #[error("histogram has zero total mass")]
    EmptyHistogram,
    #[error("need at least {needed} participants, got {got}")]
    TooFewParticipants { needed: usize, got: usize },
    #[error("degenerate groups: {message}")]
    DegenerateGroups { message: String },
    #[error("cost matrix is not square ({rows} rows, {cols} columns in first row)")]
    NonSquare { rows: usize, cols: usize },
    #[error("{0}")]
    InvalidParameter(String),
}

/// One participant's aligned categorical answers from two sources, all on a
/// single native scale. Mixing scales inside one `AlignedPairs` is rejected
/// upstream by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPairs {
    pub participant_id: String,
    pub kind: CategoricalKind,
    /// (question_id, value_a, value_b) on the native scale.
    pub pairs: Vec<(String, i64, i64)>,
}

impl AlignedPairs {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn zero_based(&self) -> Vec<(usize, usize)> {
        let min = self.kind.min_value();
        self.pairs
            .iter()
            .map(|(_, a, b)| ((a - min) as usize, (b - min) as usize))
            .collect()
    }
}

/// Mean absolute error on the native scale.
pub fn mae(pairs: &AlignedPairs) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyPairs { needed: 1, got: 0 });
    }
    let total: i64 = pairs.pairs.iter().map(|(_, a, b)| (a - b).abs()).sum();
    Ok(total as f64 / pairs.len() as f64)
}

/// Fraction of exactly matching answers.
pub fn exact_match_accuracy(pairs: &AlignedPairs) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyPairs { needed: 1, got: 0 });
    }
    let hits = pairs.pairs.iter().filter(|(_, a, b)| a == b).count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Accuracy relative to the human-consistency baseline, as the rounded
/// integer percentage the reports quote.
pub fn relative_accuracy_percent(accuracy: f64, human_accuracy: f64) -> Option<i64> {
    if human_accuracy <= 0.0 {
        return None;
    }
    Some((accuracy / human_accuracy * 100.0).round() as i64)
}

/// A participant's aligned answers from one source pair, split by scale.
#[derive(Debug, Clone, Default)]
pub struct ParticipantAlignment {
    pub by_scale: BTreeMap<CategoricalKind, AlignedPairs>,
}

impl ParticipantAlignment {
    pub fn pair_count(&self) -> usize {
        self.by_scale.values().map(|p| p.len()).sum()
    }

    /// Item-weighted MAE pooled across scales.
    pub fn mae(&self) -> Option<f64> {
        self.pooled(|pairs| mae(pairs).ok())
    }

    /// Item-weighted exact-match accuracy pooled across scales.
    pub fn accuracy(&self) -> Option<f64> {
        self.pooled(|pairs| exact_match_accuracy(pairs).ok())
    }

    /// Item-weighted AC2 across scales; scales need at least two pairs to
    /// contribute.
    pub fn ac2(&self) -> Option<f64> {
        self.pooled(|pairs| {
            if pairs.len() < 2 {
                return None;
            }
            gwet_ac2(&pairs.zero_based(), pairs.kind.scale_size()).ok()
        })
    }

    /// Spearman over all categorical answers normalized onto [0, 1];
    /// `None` (missing, never zero) when either side is constant.
    pub fn spearman(&self) -> Option<f64> {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for pairs in self.by_scale.values() {
            for (_, va, vb) in &pairs.pairs {
                a.push(normalize_response(*va, pairs.kind).ok()?);
                b.push(normalize_response(*vb, pairs.kind).ok()?);
            }
        }
        spearman(&a, &b)
    }

    fn pooled(&self, per_scale: impl Fn(&AlignedPairs) -> Option<f64>) -> Option<f64> {
        let mut weighted = 0.0;
        let mut weight = 0usize;
        for pairs in self.by_scale.values() {
            if let Some(value) = per_scale(pairs) {
                weighted += value * pairs.len() as f64;
                weight += pairs.len();
            }
        }
        if weight == 0 {
            None
        } else {
            Some(weighted / weight as f64)
        }
    }
}

/// Restricts which questions participate in an alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    Overall,
    Construct(Construct),
    Concept(String),
}

impl Scope {
    pub fn label(&self) -> String {
        match self {
            Scope::Overall => "overall".into(),
            Scope::Construct(c) => c.label().into(),
            Scope::Concept(id) => id.clone(),
        }
    }
}

/// Aligns the categorical answers two sources share, per participant and
/// scale. Cells missing on either side are dropped pairwise; the dropped
/// count is reported alongside.
pub fn align_sources(
    set_a: &ResponseSet,
    set_b: &ResponseSet,
    corpus: &Corpus,
    scope: &Scope,
) -> (BTreeMap<String, ParticipantAlignment>, usize) {
    let mut alignments: BTreeMap<String, ParticipantAlignment> = BTreeMap::new();
    let mut dropped = 0usize;
    for participant in &corpus.participants {
        for question in &corpus.questions {
            let Some(kind) = question.kind.categorical() else {
                continue;
            };
            match scope {
                Scope::Overall => {}
                Scope::Construct(c) => {
                    if question.construct != *c {
                        continue;
                    }
                }
                Scope::Concept(id) => {
                    if &question.concept_id != id {
                        continue;
                    }
                }
            }
            let a = set_a
                .get(&participant.id, &question.id)
                .and_then(|r| r.value.category());
            let b = set_b
                .get(&participant.id, &question.id)
                .and_then(|r| r.value.category());
            match (a, b) {
                (Some(va), Some(vb)) => {
                    let alignment = alignments.entry(participant.id.clone()).or_default();
                    alignment
                        .by_scale
                        .entry(kind)
                        .or_insert_with(|| AlignedPairs {
                            participant_id: participant.id.clone(),
                            kind,
                            pairs: Vec::new(),
                        })
                        .pairs
                        .push((question.id.clone(), va, vb));
                }
                (None, None) => {}
                _ => dropped += 1,
            }
        }
    }
    (alignments, dropped)
}

/// The per-participant metric families computed for one source pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFamily {
    Mae,
    Accuracy,
    Ac2,
    Spearman,
}

impl MetricFamily {
    pub const ALL: [MetricFamily; 4] = [
        MetricFamily::Mae,
        MetricFamily::Accuracy,
        MetricFamily::Ac2,
        MetricFamily::Spearman,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MetricFamily::Mae => "mae",
            MetricFamily::Accuracy => "accuracy",
            MetricFamily::Ac2 => "ac2",
            MetricFamily::Spearman => "spearman",
        }
    }
}

/// Per-participant values for every metric family, with participants whose
/// value is undefined (missing) tracked separately.
#[derive(Debug, Clone, Default)]
pub struct PairValues {
    pub values: BTreeMap<MetricFamily, BTreeMap<String, f64>>,
    pub missing: BTreeMap<MetricFamily, usize>,
    pub dropped_cells: usize,
}

/// Computes every metric family per participant for one source pair within
/// `scope`.
pub fn per_participant_metrics(
    set_a: &ResponseSet,
    set_b: &ResponseSet,
    corpus: &Corpus,
    scope: &Scope,
) -> PairValues {
    let (alignments, dropped_cells) = align_sources(set_a, set_b, corpus, scope);
    let mut out = PairValues {
        dropped_cells,
        ..Default::default()
    };
    for family in MetricFamily::ALL {
        out.values.insert(family, BTreeMap::new());
        out.missing.insert(family, 0);
    }
    for (participant, alignment) in alignments {
        let computed = [
            (MetricFamily::Mae, alignment.mae()),
            (MetricFamily::Accuracy, alignment.accuracy()),
            (MetricFamily::Ac2, alignment.ac2()),
            (MetricFamily::Spearman, alignment.spearman()),
        ];
        for (family, value) in computed {
            match value {
                Some(v) => {
                    out.values
                        .get_mut(&family)
                        .expect("family present")
                        .insert(participant.clone(), v);
                }
                None => *out.missing.get_mut(&family).expect("family present") += 1,
            }
        }
    }
    out
}

/// Summary statistics for one metric of one source pair.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricCell {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub n_participants: usize,
    pub missing_participants: usize,
    pub dropped_cells: usize,
}

/// Full individual-level summary: source pair → metric → cell, plus the
/// relative-accuracy percentages and Tukey tables the reports print.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct MetricSummary {
    pub cells: BTreeMap<String, BTreeMap<String, MetricCell>>,
    pub relative_accuracy_percent: BTreeMap<String, i64>,
    pub tukey: BTreeMap<String, Vec<TukeyRow>>,
}

/// Builds the per-participant MAE cost matrix between the participants of
/// `human` and the agents of `agent` (both restricted to their shared
/// roster), then solves the optimal one-to-one re-matching.
pub fn rematch_optimal(
    human: &ResponseSet,
    agent: &ResponseSet,
    corpus: &Corpus,
) -> Result<RematchResult, MetricError> {
    let roster: Vec<String> = corpus
        .participants
        .iter()
        .map(|p| p.id.clone())
        .filter(|id| {
            corpus.categorical_questions().iter().any(|q| {
                human.get(id, &q.id).is_some() && agent.get(id, &q.id).is_some()
            })
        })
        .collect();
    if roster.len() < 2 {
        return Err(MetricError::TooFewParticipants {
            needed: 2,
            got: roster.len(),
        });
    }
    let questions = corpus.categorical_questions();
    let mut cost = vec![vec![0.0f64; roster.len()]; roster.len()];
    for (i, human_id) in roster.iter().enumerate() {
        for (j, agent_id) in roster.iter().enumerate() {
            let mut abs_sum = 0.0;
            let mut count = 0usize;
            for question in &questions {
                let (Some(a), Some(b)) = (
                    human.get(human_id, &question.id).and_then(|r| r.value.category()),
                    agent.get(agent_id, &question.id).and_then(|r| r.value.category()),
                ) else {
                    continue;
                };
                abs_sum += (a - b).abs() as f64;
                count += 1;
            }
            if count == 0 {
                return Err(MetricError::InvalidParameter(format!(
                    "no shared categorical answers between {human_id} and agent {agent_id}"
                )));
            }
            cost[i][j] = abs_sum / count as f64;
        }
    }
    let identity_cost: f64 = (0..roster.len()).map(|i| cost[i][i]).sum();
    let solution = kuhn_munkres(&cost)?;
    let pairs = roster
        .iter()
        .enumerate()
        .map(|(i, human_id)| RematchPair {
            participant_id: human_id.clone(),
            matched_agent_of: roster[solution.column_of_row[i]].clone(),
            pair_mae: cost[i][solution.column_of_row[i]],
        })
        .collect();
    Ok(RematchResult {
        pairs,
        total_cost: solution.total_cost,
        identity_cost,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RematchPair {
    pub participant_id: String,
    /// The participant whose agent was assigned to this human.
    pub matched_agent_of: String,
    pub pair_mae: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RematchResult {
    pub pairs: Vec<RematchPair>,
    pub total_cost: f64,
    /// Cost of keeping every agent with its own participant; the optimal
    /// total never exceeds this.
    pub identity_cost: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SourceId;
    use crate::demo;

    fn pairs(kind: CategoricalKind, values: &[(i64, i64)]) -> AlignedPairs {
        AlignedPairs {
            participant_id: "p".into(),
            kind,
            pairs: values
                .iter()
                .enumerate()
                .map(|(i, (a, b))| (format!("q{i}"), *a, *b))
                .collect(),
        }
    }

    #[test]
    fn mae_hand_computation() {
        let p = pairs(CategoricalKind::Likert7, &[(1, 2), (4, 4), (7, 5)]);
        assert!((mae(&p).unwrap() - 1.0).abs() < 1e-12);
        let same = pairs(CategoricalKind::Likert7, &[(3, 3), (6, 6)]);
        assert_eq!(mae(&same).unwrap(), 0.0);
        assert!(matches!(
            mae(&pairs(CategoricalKind::Likert7, &[])),
            Err(MetricError::EmptyPairs { .. })
        ));
    }

    #[test]
    fn accuracy_count() {
        let p = pairs(CategoricalKind::Likert7, &[(1, 2), (4, 4), (7, 5)]);
        assert!((exact_match_accuracy(&p).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let same = pairs(CategoricalKind::Likert7, &[(3, 3)]);
        assert_eq!(exact_match_accuracy(&same).unwrap(), 1.0);
    }

    #[test]
    fn relative_accuracy_rounds_like_the_reports() {
        assert_eq!(relative_accuracy_percent(0.300, 0.446), Some(67));
        assert_eq!(relative_accuracy_percent(0.259, 0.446), Some(58));
        assert_eq!(relative_accuracy_percent(0.256, 0.446), Some(57));
        assert_eq!(relative_accuracy_percent(0.5, 0.0), None);
    }

    #[test]
    fn alignment_drops_one_sided_cells_pairwise() {
        let corpus = demo::demo_corpus();
        let s1 = corpus.response_sets[&SourceId::HumanS1].clone();
        let mut s2 = corpus.response_sets[&SourceId::HumanS2].clone();
        // remove one categorical cell from s2
        let key = s2
            .cells
            .keys()
            .find(|(_, q)| q.ends_with("_nps"))
            .cloned()
            .unwrap();
        s2.cells.remove(&key);
        let (alignments, dropped) = align_sources(&s1, &s2, &corpus, &Scope::Overall);
        assert_eq!(dropped, 1);
        let total: usize = alignments.values().map(|a| a.pair_count()).sum();
        // 5 participants x 28 categorical questions, minus the dropped cell
        assert_eq!(total, 5 * 28 - 1);
    }

    #[test]
    fn identity_pair_metrics_are_perfect() {
        let corpus = demo::demo_corpus();
        let s1 = &corpus.response_sets[&SourceId::HumanS1];
        let values = per_participant_metrics(s1, s1, &corpus, &Scope::Overall);
        for (_, v) in &values.values[&MetricFamily::Mae] {
            assert_eq!(*v, 0.0);
        }
        for (_, v) in &values.values[&MetricFamily::Accuracy] {
            assert_eq!(*v, 1.0);
        }
        for (_, v) in &values.values[&MetricFamily::Ac2] {
            assert!((v - 1.0).abs() < 1e-12);
        }
        for (_, v) in &values.values[&MetricFamily::Spearman] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scope_restricts_questions() {
        let corpus = demo::demo_corpus();
        let s1 = &corpus.response_sets[&SourceId::HumanS1];
        let s2 = &corpus.response_sets[&SourceId::HumanS2];
        let (nps_only, _) =
            align_sources(s1, s2, &corpus, &Scope::Construct(Construct::Nps));
        let total: usize = nps_only.values().map(|a| a.pair_count()).sum();
        assert_eq!(total, 5 * 4); // one NPS question per concept
        let (one_concept, _) =
            align_sources(s1, s2, &corpus, &Scope::Concept("concept_qa".into()));
        let total: usize = one_concept.values().map(|a| a.pair_count()).sum();
        assert_eq!(total, 5 * 7);
    }

    #[test]
    fn rematch_identity_when_agents_copy_their_participants() {
        let corpus = demo::demo_corpus();
        let s1 = &corpus.response_sets[&SourceId::HumanS1];
        let result = rematch_optimal(s1, s1, &corpus).unwrap();
        assert_eq!(result.total_cost, 0.0);
        for pair in &result.pairs {
            assert_eq!(pair.participant_id, pair.matched_agent_of);
        }
    }

    #[test]
    fn rematch_total_never_exceeds_identity() {
        let corpus = demo::demo_corpus();
        let s1 = &corpus.response_sets[&SourceId::HumanS1];
        let s2 = &corpus.response_sets[&SourceId::HumanS2];
        let result = rematch_optimal(s1, s2, &corpus).unwrap();
        assert!(result.total_cost <= result.identity_cost + 1e-12);
    }
}
