//! LLM-as-judge comparison of paired open-ended answers on four similarity
//! dimensions, with multi-judge averaging and inter-judge agreement.
//!
//! The judge never learns which response came from which source: texts are
//! presented as "Response A" and "Response B" with the order randomized per
//! item, and the prompt carries no source labels at all.

use crate::gateway::{ChatRequest, Decoding, Gateway, GatewayError, ResponseContract};
use crate::metrics::{bootstrap_summary, cohen_kappa, MetricError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

const JUDGE_TEMPLATE: &str = include_str!("../assets/prompts/v1/judge.txt");

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("judge reply violated the contract: {0}")]
    ContractViolation(String),
    #[error("judge score {0} outside 1..=7")]
    ScoreOutOfRange(i64),
    #[error("inter-judge agreement needs exactly two judges, found {0:?}")]
    JudgeCountMismatch(Vec<String>),
    #[error("texts must be non-empty")]
    EmptyText,
}

/// The four similarity dimensions; the set is closed and unknown dimensions
/// are rejected at parse time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    SentimentDirection,
    ExplanationAlignment,
    TopicCoverage,
    VoiceTone,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::SentimentDirection,
        Dimension::ExplanationAlignment,
        Dimension::TopicCoverage,
        Dimension::VoiceTone,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Dimension::SentimentDirection => "sentiment_direction",
            Dimension::ExplanationAlignment => "explanation_alignment",
            Dimension::TopicCoverage => "topic_coverage",
            Dimension::VoiceTone => "voice_tone",
        }
    }

    fn rubric(self) -> &'static str {
        match self {
            Dimension::SentimentDirection => {
                "Do the two responses point the same way overall? Consider whether each is positive, negative, mixed, or neutral about the concept, and how strongly."
            }
            Dimension::ExplanationAlignment => {
                "Do the two responses justify their positions with the same reasons? Consider whether the underlying arguments and trade-offs match, not just the conclusions."
            }
            Dimension::TopicCoverage => {
                "Do the two responses talk about the same things? Consider the use cases, features, risks, and conditions each one brings up."
            }
            Dimension::VoiceTone => {
                "Do the two responses sound like the same speaker? Consider formality, phrasing habits, hedging, directness, and emotional register."
            }
        }
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Dimension {
    type Err = JudgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.label() == s)
            .ok_or_else(|| JudgeError::ContractViolation(format!("unknown dimension {s:?}")))
    }
}

/// One item to be judged: the question plus the two answers being compared.
/// `text_ref` / `text_alt` name the roles internally only; the rendered
/// prompt is blind to them.
#[derive(Debug, Clone)]
pub struct JudgeItem {
    /// Source-pair label the scores aggregate under, e.g. `human-interview_based`.
    pub pair: String,
    pub participant_id: String,
    pub question_id: String,
    pub question_text: String,
    pub text_ref: String,
    pub text_alt: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JudgeScore {
    pub pair: String,
    pub participant_id: String,
    pub question_id: String,
    pub dimension: Dimension,
    pub judge_id: String,
    pub score: i64,
    pub explanation: String,
}

#[derive(Debug, Deserialize)]
struct JudgeReply {
    score: i64,
    #[serde(default)]
    explanation: String,
}

/// Renders the judge prompt with the presentation order already decided.
fn render_judge_prompt(
    question: &str,
    response_a: &str,
    response_b: &str,
    dimension: Dimension,
) -> String {
    JUDGE_TEMPLATE
        .replace("{question}", question)
        .replace("{response_a}", response_a)
        .replace("{response_b}", response_b)
        .replace("{dimension}", dimension.label())
        .replace("{dimension_rubric}", dimension.rubric())
}

/// Scores one item on one dimension with one judge model. The A/B order is a
/// deterministic function of (seed, item, dimension) so reruns are identical
/// while position bias washes out across items.
pub fn judge_pair(
    item: &JudgeItem,
    dimension: Dimension,
    judge_id: &str,
    model: &str,
    seed: u64,
    decoding: Decoding,
    gateway: &Gateway,
) -> Result<(JudgeScore, ChatRequest, String), JudgeError> {
    if item.text_ref.trim().is_empty() || item.text_alt.trim().is_empty() {
        return Err(JudgeError::EmptyText);
    }
    let order_hash = crate::gateway::mock::stable_hash(&[
        &seed.to_le_bytes(),
        item.pair.as_bytes(),
        item.participant_id.as_bytes(),
        item.question_id.as_bytes(),
        dimension.label().as_bytes(),
    ]);
    let (a, b) = if order_hash % 2 == 0 {
        (&item.text_ref, &item.text_alt)
    } else {
        (&item.text_alt, &item.text_ref)
    };
    let prompt = render_judge_prompt(&item.question_text, a, b, dimension);
    let mut request = ChatRequest::new(prompt)
        .with_contract(ResponseContract::JsonObject)
        .with_trace_key(format!(
            "judge|{}|{}|{}|{}|{judge_id}",
            item.pair, item.participant_id, item.question_id, dimension
        ));
    request.model = Some(model.to_string());
    request.decoding = decoding;

    let outcome = gateway.complete_chat(&request)?;
    let reply: JudgeReply = serde_json::from_str(&outcome.text)
        .map_err(|e| JudgeError::ContractViolation(format!("judge schema: {e}")))?;
    if !(1..=7).contains(&reply.score) {
        return Err(JudgeError::ScoreOutOfRange(reply.score));
    }
    Ok((
        JudgeScore {
            pair: item.pair.clone(),
            participant_id: item.participant_id.clone(),
            question_id: item.question_id.clone(),
            dimension,
            judge_id: judge_id.to_string(),
            score: reply.score,
            explanation: reply.explanation,
        },
        request,
        outcome.text,
    ))
}

/// Aggregate row shaped like the qualitative-results chart: one mean + CI per
/// (dimension, source pair).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JudgeAggregateRow {
    pub dimension: Dimension,
    pub pair: String,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_participants: usize,
    /// Items covered by only one judge (pass-through mean, flagged for
    /// coverage).
    pub single_judge_items: usize,
}

/// Averages scores across judges per item, then across items per
/// participant, then bootstraps across participants. Aggregation is
/// invariant to input record order.
pub fn aggregate_judgments(
    scores: &[JudgeScore],
    resamples: usize,
    seed: u64,
) -> Result<Vec<JudgeAggregateRow>, JudgeError> {
    // (dimension, pair) → participant → item → scores
    type ItemMap = BTreeMap<String, BTreeMap<String, Vec<i64>>>;
    let mut grouped: BTreeMap<(Dimension, String), ItemMap> = BTreeMap::new();
    for s in scores {
        grouped
            .entry((s.dimension, s.pair.clone()))
            .or_default()
            .entry(s.participant_id.clone())
            .or_default()
            .entry(s.question_id.clone())
            .or_default()
            .push(s.score);
    }
    let mut rows = Vec::new();
    for ((dimension, pair), participants) in grouped {
        let mut per_participant = Vec::new();
        let mut single_judge_items = 0usize;
        for items in participants.values() {
            let mut item_means = Vec::new();
            for judge_scores in items.values() {
                if judge_scores.len() == 1 {
                    single_judge_items += 1;
                }
                // Sum is order independent; so is this mean.
                item_means
                    .push(judge_scores.iter().sum::<i64>() as f64 / judge_scores.len() as f64);
            }
            per_participant.push(item_means.iter().sum::<f64>() / item_means.len() as f64);
        }
        let (mean, ci_low, ci_high, n) = if per_participant.len() >= 2 {
            let summary = bootstrap_summary(&per_participant, resamples, seed, None)?;
            (summary.mean, summary.ci_low, summary.ci_high, summary.n)
        } else {
            let mean = per_participant[0];
            (mean, mean, mean, 1)
        };
        rows.push(JudgeAggregateRow {
            dimension,
            pair,
            mean,
            ci_low,
            ci_high,
            n_participants: n,
            single_judge_items,
        });
    }
    Ok(rows)
}

/// Cohen's kappa between the two judges per dimension, over the items both
/// scored. `None` marks dimensions where kappa is undefined (both judges
/// constant on one category).
pub fn inter_judge_agreement(
    scores: &[JudgeScore],
) -> Result<BTreeMap<Dimension, Option<f64>>, JudgeError> {
    let judges: BTreeSet<String> = scores.iter().map(|s| s.judge_id.clone()).collect();
    if judges.len() != 2 {
        return Err(JudgeError::JudgeCountMismatch(judges.into_iter().collect()));
    }
    let first = judges.iter().next().expect("two judges").clone();

    let mut out = BTreeMap::new();
    for dimension in Dimension::ALL {
        let mut by_item: BTreeMap<(String, String, String), (Option<i64>, Option<i64>)> =
            BTreeMap::new();
        for s in scores.iter().filter(|s| s.dimension == dimension) {
            let key = (s.pair.clone(), s.participant_id.clone(), s.question_id.clone());
            let entry = by_item.entry(key).or_default();
            if s.judge_id == first {
                entry.0 = Some(s.score);
            } else {
                entry.1 = Some(s.score);
            }
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y) in by_item.values() {
            if let (Some(x), Some(y)) = (x, y) {
                a.push(*x);
                b.push(*y);
            }
        }
        if a.is_empty() {
            out.insert(dimension, None);
            continue;
        }
        out.insert(dimension, cohen_kappa(&a, &b)?);
    }
    Ok(out)
}
