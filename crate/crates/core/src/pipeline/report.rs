//! Evaluation of response sets into the consolidated report artifacts:
//! `report.json`, CSV tables, plot-ready histograms, and `report.md`.
//!
//! Emission is fully deterministic: stable orderings everywhere, no
//! timestamps, and every artifact carries the config hash.

use super::{pair_label, PipelineError, RunConfig};
use crate::corpus::{
    normalize_response, score_tam_constructs, CategoricalKind, Corpus, ResponseSet, SourceId,
};
use crate::gateway::{mock::stable_hash, CostLedger};
use crate::judge::{aggregate_judgments, inter_judge_agreement, JudgeAggregateRow, JudgeScore};
use crate::metrics::{
    bootstrap_summary, is_degenerate, relative_accuracy_percent, rematch_optimal,
    response_histograms, tukey_hsd, wasserstein_ordinal, wasserstein_samples, GroupBy,
    MetricCell, MetricFamily, MetricSummary, PairValues, RematchResult, Scope,
    DEGENERATE_THRESHOLD,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WdRow {
    pub scope: String,
    pub source_pair: String,
    pub likert: Option<f64>,
    pub nps: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HistogramRow {
    pub group_by: String,
    pub group: String,
    pub source: String,
    pub category: i64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DegenerateFlag {
    pub source: String,
    pub scale: String,
    pub top_category_share: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConstructScoreRow {
    pub source: String,
    pub participant_id: String,
    pub concept_id: String,
    pub construct: String,
    pub score: f64,
}

/// Everything the quantitative stages computed, ready for emission.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evaluation {
    pub config_hash: String,
    pub prompt_version: String,
    pub ac2_weights: String,
    pub bootstrap_resamples: usize,
    pub sources: Vec<String>,
    /// Source-pair labels in report order (human consistency first).
    pub pairs: Vec<String>,
    /// scope label → summary (scopes: "overall", each construct, each concept).
    pub individual: BTreeMap<String, MetricSummary>,
    pub wd_overall: Vec<WdRow>,
    pub wd_by_construct: Vec<WdRow>,
    pub wd_by_concept: Vec<WdRow>,
    /// Supplementary: overall WD over normalized (unit-interval) responses.
    pub wd_normalized: Vec<(String, f64)>,
    pub histograms_likert: Vec<HistogramRow>,
    pub histograms_nps: Vec<HistogramRow>,
    pub degenerate_flags: Vec<DegenerateFlag>,
    pub construct_scores: Vec<ConstructScoreRow>,
    pub construct_score_errors: Vec<String>,
    pub rematch: BTreeMap<String, RematchResult>,
    pub judge_rows: Vec<JudgeAggregateRow>,
    pub judge_kappa: BTreeMap<String, Option<f64>>,
}

fn derive_seed(base: u64, parts: &[&str]) -> u64 {
    let mut bytes: Vec<&[u8]> = vec![];
    let base_bytes = base.to_le_bytes();
    bytes.push(&base_bytes);
    for p in parts {
        bytes.push(p.as_bytes());
    }
    stable_hash(&bytes)
}

const REFERENCE_PAIR: &str = "human-human2";

/// Computes the full quantitative evaluation for one run.
pub fn evaluate(
    config: &RunConfig,
    corpus: &Corpus,
    human_s1: &ResponseSet,
    human_s2: Option<&ResponseSet>,
    agent_sets: &[ResponseSet],
) -> Result<Evaluation, PipelineError> {
    let config_hash = config.config_hash();
    // Reject inputs produced under a different configuration.
    for set in agent_sets {
        if let Some(hash) = &set.meta.config_hash {
            if hash != &config_hash {
                return Err(PipelineError::Config(format!(
                    "response set {} was produced under config {hash}, current config is {config_hash}",
                    set.source
                )));
            }
        }
    }

    let mut others: Vec<&ResponseSet> = Vec::new();
    if let Some(s2) = human_s2 {
        others.push(s2);
    }
    others.extend(agent_sets.iter());
    let pairs: Vec<String> = others.iter().map(|s| pair_label(&s.source)).collect();

    let mut scopes: Vec<(String, Scope)> = vec![("overall".into(), Scope::Overall)];
    for construct in crate::metrics::distance::construct_groups() {
        scopes.push((construct.label().into(), Scope::Construct(construct)));
    }
    for concept in &corpus.concepts {
        scopes.push((concept.id.clone(), Scope::Concept(concept.id.clone())));
    }

    let resamples = config.metrics.bootstrap_resamples;
    let base_seed = config.metrics.seed;
    let mut individual = BTreeMap::new();
    for (scope_label, scope) in &scopes {
        let mut per_pair: BTreeMap<String, PairValues> = BTreeMap::new();
        for other in &others {
            let label = pair_label(&other.source);
            per_pair.insert(
                label,
                crate::metrics::per_participant_metrics(human_s1, other, corpus, scope),
            );
        }
        let mut summary = MetricSummary::default();
        for (pair, values) in &per_pair {
            let mut metrics_cells = BTreeMap::new();
            for family in MetricFamily::ALL {
                let by_participant = &values.values[&family];
                if by_participant.len() < 2 {
                    continue;
                }
                let ordered: Vec<(&String, f64)> =
                    by_participant.iter().map(|(p, v)| (p, *v)).collect();
                let sample: Vec<f64> = ordered.iter().map(|(_, v)| *v).collect();
                let seed = derive_seed(base_seed, &[scope_label, pair, family.label()]);
                let mut cell_summary = bootstrap_summary(&sample, resamples, seed, None)?;
                if pair != REFERENCE_PAIR {
                    if let Some(reference_values) =
                        per_pair.get(REFERENCE_PAIR).map(|v| &v.values[&family])
                    {
                        let mut paired = Vec::new();
                        let mut paired_ref = Vec::new();
                        for (p, v) in &ordered {
                            if let Some(r) = reference_values.get(p.as_str()) {
                                paired.push(*v);
                                paired_ref.push(*r);
                            }
                        }
                        if paired.len() >= 2 {
                            let p_seed =
                                derive_seed(base_seed, &[scope_label, pair, family.label(), "p"]);
                            cell_summary.p_value =
                                bootstrap_summary(&paired, resamples, p_seed, Some(&paired_ref))?
                                    .p_value;
                        }
                    }
                }
                metrics_cells.insert(
                    family.label().to_string(),
                    MetricCell {
                        mean: cell_summary.mean,
                        ci_low: cell_summary.ci_low,
                        ci_high: cell_summary.ci_high,
                        p_value: cell_summary.p_value,
                        n_participants: by_participant.len(),
                        missing_participants: values.missing[&family],
                        dropped_cells: values.dropped_cells,
                    },
                );
            }
            summary.cells.insert(pair.clone(), metrics_cells);
        }
        // relative accuracy against the human-consistency baseline
        let human_accuracy = summary
            .cells
            .get(REFERENCE_PAIR)
            .and_then(|m| m.get("accuracy"))
            .map(|c| c.mean);
        if let Some(human_accuracy) = human_accuracy {
            for (pair, metrics_cells) in &summary.cells {
                if let Some(cell) = metrics_cells.get("accuracy") {
                    if let Some(pct) = relative_accuracy_percent(cell.mean, human_accuracy) {
                        summary
                            .relative_accuracy_percent
                            .insert(pair.clone(), pct);
                    }
                }
            }
        }
        // Tukey across source pairs, overall scope only (the headline tables)
        if *scope_label == "overall" {
            for family in MetricFamily::ALL {
                let groups: BTreeMap<String, Vec<f64>> = per_pair
                    .iter()
                    .filter_map(|(pair, values)| {
                        let v: Vec<f64> = values.values[&family].values().copied().collect();
                        (v.len() >= 2).then(|| (pair.clone(), v))
                    })
                    .collect();
                if groups.len() >= 2 {
                    if let Ok(rows) = tukey_hsd(&groups) {
                        summary.tukey.insert(family.label().to_string(), rows);
                    }
                }
            }
        }
        individual.insert(scope_label.clone(), summary);
    }

    // population-level: Wasserstein tables and histograms
    let mut all_sets: Vec<&ResponseSet> = vec![human_s1];
    all_sets.extend(others.iter());

    let wd_overall = wd_rows(human_s1, &others, corpus, GroupBy::Overall);
    let wd_by_construct = wd_rows(human_s1, &others, corpus, GroupBy::Construct);
    let wd_by_concept = wd_rows(human_s1, &others, corpus, GroupBy::Concept);

    let mut wd_normalized = Vec::new();
    let s1_normalized = normalized_values(human_s1, corpus);
    for other in &others {
        let other_normalized = normalized_values(other, corpus);
        if !s1_normalized.is_empty() && !other_normalized.is_empty() {
            wd_normalized.push((
                pair_label(&other.source),
                wasserstein_samples(&s1_normalized, &other_normalized)
                    .map_err(PipelineError::Metric)?,
            ));
        }
    }

    let mut histograms_likert = Vec::new();
    let mut histograms_nps = Vec::new();
    let mut degenerate_flags = Vec::new();
    for set in &all_sets {
        let source = set.source.to_string();
        for group_by in [GroupBy::Overall, GroupBy::Construct, GroupBy::Concept] {
            let table = response_histograms(set, corpus, group_by);
            for (group, scales) in table {
                for (kind, counts) in scales {
                    let rows = match kind {
                        CategoricalKind::Likert7 => &mut histograms_likert,
                        CategoricalKind::Nps11 => &mut histograms_nps,
                    };
                    for (index, count) in counts.iter().enumerate() {
                        rows.push(HistogramRow {
                            group_by: group_by.label().into(),
                            group: group.clone(),
                            source: source.clone(),
                            category: kind.min_value() + index as i64,
                            count: *count,
                        });
                    }
                    if group_by == GroupBy::Overall {
                        let total: u64 = counts.iter().sum();
                        let top = counts.iter().max().copied().unwrap_or(0);
                        degenerate_flags.push(DegenerateFlag {
                            source: source.clone(),
                            scale: kind.label().into(),
                            top_category_share: if total > 0 {
                                top as f64 / total as f64
                            } else {
                                0.0
                            },
                            flagged: is_degenerate(&counts, DEGENERATE_THRESHOLD),
                        });
                    }
                }
            }
        }
    }

    // construct scores per source and concept
    let mut construct_scores = Vec::new();
    let mut construct_score_errors = Vec::new();
    for set in &all_sets {
        for concept in &corpus.concepts {
            match score_tam_constructs(set, corpus, concept) {
                Ok(scores) => {
                    for (participant, constructs) in scores {
                        for (construct, score) in constructs {
                            construct_scores.push(ConstructScoreRow {
                                source: set.source.to_string(),
                                participant_id: participant.clone(),
                                concept_id: concept.id.clone(),
                                construct: construct.label().into(),
                                score,
                            });
                        }
                    }
                }
                Err(e) => construct_score_errors.push(format!(
                    "{} / {}: {e}",
                    set.source, concept.id
                )),
            }
        }
    }

    // optional re-matching analysis
    let mut rematch = BTreeMap::new();
    if config.metrics.rematch {
        for set in agent_sets {
            if let SourceId::Agent { variant, .. } = &set.source {
                match rematch_optimal(human_s1, set, corpus) {
                    Ok(result) => {
                        rematch.insert(variant.clone(), result);
                    }
                    Err(e) => construct_score_errors
                        .push(format!("rematch {}: {e}", set.source)),
                }
            }
        }
    }

    Ok(Evaluation {
        config_hash,
        prompt_version: crate::agent::PROMPT_VERSION.into(),
        ac2_weights: "quadratic".into(),
        bootstrap_resamples: resamples,
        sources: all_sets.iter().map(|s| s.source.to_string()).collect(),
        pairs,
        individual,
        wd_overall,
        wd_by_construct,
        wd_by_concept,
        wd_normalized,
        histograms_likert,
        histograms_nps,
        degenerate_flags,
        construct_scores,
        construct_score_errors,
        rematch,
        judge_rows: Vec::new(),
        judge_kappa: BTreeMap::new(),
    })
}

fn normalized_values(set: &ResponseSet, corpus: &Corpus) -> Vec<f64> {
    let mut out = Vec::new();
    for r in set.responses() {
        let Some(question) = corpus.question(&r.question_id) else {
            continue;
        };
        let (Some(kind), Some(value)) = (question.kind.categorical(), r.value.category()) else {
            continue;
        };
        if let Ok(v) = normalize_response(value, kind) {
            out.push(v);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn wd_rows(
    human_s1: &ResponseSet,
    others: &[&ResponseSet],
    corpus: &Corpus,
    group_by: GroupBy,
) -> Vec<WdRow> {
    let base = response_histograms(human_s1, corpus, group_by);
    let mut rows = Vec::new();
    for other in others {
        let table = response_histograms(other, corpus, group_by);
        let groups: std::collections::BTreeSet<&String> =
            base.keys().chain(table.keys()).collect();
        for group in groups {
            let mut row = WdRow {
                scope: group.clone(),
                source_pair: pair_label(&other.source),
                likert: None,
                nps: None,
            };
            for kind in [CategoricalKind::Likert7, CategoricalKind::Nps11] {
                let (Some(a), Some(b)) = (
                    base.get(group).and_then(|g| g.get(&kind)),
                    table.get(group).and_then(|g| g.get(&kind)),
                ) else {
                    continue;
                };
                if let Ok(wd) = wasserstein_ordinal(a, b) {
                    match kind {
                        CategoricalKind::Likert7 => row.likert = Some(wd),
                        CategoricalKind::Nps11 => row.nps = Some(wd),
                    }
                }
            }
            rows.push(row);
        }
    }
    rows.sort_by(|a, b| (a.scope.clone(), a.source_pair.clone()).cmp(&(b.scope.clone(), b.source_pair.clone())));
    rows
}

/// Folds judge scores into the evaluation (aggregates plus inter-judge
/// agreement).
pub fn attach_judgments(
    evaluation: &mut Evaluation,
    scores: &[JudgeScore],
    config: &RunConfig,
) -> Result<(), PipelineError> {
    if scores.is_empty() {
        return Ok(());
    }
    evaluation.judge_rows = aggregate_judgments(
        scores,
        config.metrics.bootstrap_resamples,
        derive_seed(config.judge.seed, &["judge-aggregate"]),
    )?;
    let kappa = inter_judge_agreement(scores)?;
    evaluation.judge_kappa = kappa
        .into_iter()
        .map(|(dimension, value)| (dimension.label().to_string(), value))
        .collect();
    Ok(())
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| super::io_err(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| super::io_err(path, e))
}

fn csv_table(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        // Values never contain commas or quotes except free-text labels,
        // which stay within [a-z0-9_:-]; keep writing simple and stable.
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes every report artifact and returns their relative paths.
pub fn emit_report(
    evaluation: &Evaluation,
    ledger: &CostLedger,
    out_dir: &Path,
) -> Result<Vec<String>, PipelineError> {
    let tables = out_dir.join("tables");
    let mut artifacts = Vec::new();
    let push = |artifacts: &mut Vec<String>, name: &str| artifacts.push(name.to_string());

    // individual metrics per scope
    for (file, scopes) in [
        ("tables/individual_overall.csv", vec!["overall".to_string()]),
        (
            "tables/individual_by_construct.csv",
            crate::metrics::distance::construct_groups()
                .iter()
                .map(|c| c.label().to_string())
                .collect(),
        ),
        (
            "tables/individual_by_concept.csv",
            evaluation
                .individual
                .keys()
                .filter(|k| k.starts_with("concept_"))
                .cloned()
                .collect(),
        ),
    ] {
        let mut rows = Vec::new();
        for scope in &scopes {
            let Some(summary) = evaluation.individual.get(scope) else {
                continue;
            };
            for (pair, metrics_cells) in &summary.cells {
                for (metric, cell) in metrics_cells {
                    rows.push(vec![
                        scope.clone(),
                        pair.clone(),
                        metric.clone(),
                        cell.mean.to_string(),
                        cell.ci_low.to_string(),
                        cell.ci_high.to_string(),
                        fmt_opt(cell.p_value),
                        cell.n_participants.to_string(),
                        cell.missing_participants.to_string(),
                        cell.dropped_cells.to_string(),
                    ]);
                }
            }
        }
        let text = csv_table(
            &[
                "scope",
                "source_pair",
                "metric",
                "mean",
                "ci_low",
                "ci_high",
                "p_value",
                "n_participants",
                "missing_participants",
                "dropped_cells",
            ],
            rows,
        );
        write_file(&out_dir.join(file), &text)?;
        push(&mut artifacts, file);
    }

    // relative accuracy
    {
        let mut rows = Vec::new();
        for (scope, summary) in &evaluation.individual {
            for (pair, pct) in &summary.relative_accuracy_percent {
                rows.push(vec![scope.clone(), pair.clone(), pct.to_string()]);
            }
        }
        let text = csv_table(&["scope", "source_pair", "relative_accuracy_percent"], rows);
        write_file(&tables.join("relative_accuracy.csv"), &text)?;
        push(&mut artifacts, "tables/relative_accuracy.csv");
    }

    // tukey tables (overall scope)
    {
        let mut rows = Vec::new();
        if let Some(summary) = evaluation.individual.get("overall") {
            for (metric, tukey_rows) in &summary.tukey {
                for row in tukey_rows {
                    rows.push(vec![
                        metric.clone(),
                        row.comparison(),
                        row.statistic.to_string(),
                        row.p_value.to_string(),
                        row.ci_low.to_string(),
                        row.ci_high.to_string(),
                    ]);
                }
            }
        }
        let text = csv_table(
            &["metric", "comparison", "statistic", "p_value", "ci_low", "ci_high"],
            rows,
        );
        write_file(&tables.join("tukey.csv"), &text)?;
        push(&mut artifacts, "tables/tukey.csv");
    }

    // WD tables
    let wd_csv = |rows: &[WdRow], with_scope: bool| {
        let mut out = Vec::new();
        for row in rows {
            let mut cells = Vec::new();
            if with_scope {
                cells.push(row.scope.clone());
            }
            cells.push(row.source_pair.clone());
            cells.push(fmt_opt(row.likert));
            cells.push(fmt_opt(row.nps));
            out.push(cells);
        }
        out
    };
    write_file(
        &tables.join("wd_summary.csv"),
        &csv_table(
            &["source_pair", "likert", "nps"],
            wd_csv(&evaluation.wd_overall, false),
        ),
    )?;
    push(&mut artifacts, "tables/wd_summary.csv");
    write_file(
        &tables.join("wd_by_construct.csv"),
        &csv_table(
            &["construct", "source_pair", "likert", "nps"],
            wd_csv(&evaluation.wd_by_construct, true),
        ),
    )?;
    push(&mut artifacts, "tables/wd_by_construct.csv");
    write_file(
        &tables.join("wd_by_concept.csv"),
        &csv_table(
            &["concept", "source_pair", "likert", "nps"],
            wd_csv(&evaluation.wd_by_concept, true),
        ),
    )?;
    push(&mut artifacts, "tables/wd_by_concept.csv");
    {
        let rows = evaluation
            .wd_normalized
            .iter()
            .map(|(pair, wd)| vec![pair.clone(), wd.to_string()])
            .collect();
        write_file(
            &tables.join("wd_normalized_overall.csv"),
            &csv_table(&["source_pair", "wd"], rows),
        )?;
        push(&mut artifacts, "tables/wd_normalized_overall.csv");
    }

    // histograms
    let hist_csv = |rows: &[HistogramRow]| {
        rows.iter()
            .map(|r| {
                vec![
                    r.group_by.clone(),
                    r.group.clone(),
                    r.source.clone(),
                    r.category.to_string(),
                    r.count.to_string(),
                ]
            })
            .collect::<Vec<_>>()
    };
    write_file(
        &tables.join("histogram_likert.csv"),
        &csv_table(
            &["group_by", "group", "source", "category", "count"],
            hist_csv(&evaluation.histograms_likert),
        ),
    )?;
    push(&mut artifacts, "tables/histogram_likert.csv");
    write_file(
        &tables.join("histogram_nps.csv"),
        &csv_table(
            &["group_by", "group", "source", "category", "count"],
            hist_csv(&evaluation.histograms_nps),
        ),
    )?;
    push(&mut artifacts, "tables/histogram_nps.csv");

    // judge tables
    {
        let rows = evaluation
            .judge_rows
            .iter()
            .map(|r| {
                vec![
                    r.dimension.label().to_string(),
                    r.pair.clone(),
                    r.mean.to_string(),
                    r.ci_low.to_string(),
                    r.ci_high.to_string(),
                    r.n_participants.to_string(),
                    r.single_judge_items.to_string(),
                ]
            })
            .collect();
        write_file(
            &tables.join("judge_summary.csv"),
            &csv_table(
                &[
                    "dimension",
                    "source_pair",
                    "mean",
                    "ci_low",
                    "ci_high",
                    "n_participants",
                    "single_judge_items",
                ],
                rows,
            ),
        )?;
        push(&mut artifacts, "tables/judge_summary.csv");
        let rows = evaluation
            .judge_kappa
            .iter()
            .map(|(dimension, kappa)| vec![dimension.clone(), fmt_opt(*kappa)])
            .collect();
        write_file(
            &tables.join("judge_kappa.csv"),
            &csv_table(&["dimension", "kappa"], rows),
        )?;
        push(&mut artifacts, "tables/judge_kappa.csv");
    }

    // construct scores
    {
        let rows = evaluation
            .construct_scores
            .iter()
            .map(|r| {
                vec![
                    r.source.clone(),
                    r.participant_id.clone(),
                    r.concept_id.clone(),
                    r.construct.clone(),
                    r.score.to_string(),
                ]
            })
            .collect();
        write_file(
            &tables.join("construct_scores.csv"),
            &csv_table(
                &["source", "participant_id", "concept_id", "construct", "score"],
                rows,
            ),
        )?;
        push(&mut artifacts, "tables/construct_scores.csv");
    }

    // rematch
    for (variant, result) in &evaluation.rematch {
        let file = format!("tables/rematch_{variant}.csv");
        let rows = result
            .pairs
            .iter()
            .map(|p| {
                vec![
                    p.participant_id.clone(),
                    p.matched_agent_of.clone(),
                    p.pair_mae.to_string(),
                ]
            })
            .collect();
        write_file(
            &out_dir.join(&file),
            &csv_table(&["participant_id", "matched_agent_of", "pair_mae"], rows),
        )?;
        push(&mut artifacts, &file);
    }

    // cost ledger, aggregated per model for deterministic bytes
    {
        #[derive(Serialize)]
        struct ModelCost {
            calls: usize,
            input_tokens: u64,
            output_tokens: u64,
            dollars: f64,
        }
        let mut models: BTreeMap<String, ModelCost> = BTreeMap::new();
        for call in &ledger.calls {
            let entry = models.entry(call.model_id.clone()).or_insert(ModelCost {
                calls: 0,
                input_tokens: 0,
                output_tokens: 0,
                dollars: 0.0,
            });
            entry.calls += 1;
            entry.input_tokens += call.input_tokens;
            entry.output_tokens += call.output_tokens;
            entry.dollars += call.dollars;
        }
        let body = serde_json::json!({
            "config_hash": evaluation.config_hash,
            "models": models,
            "total": {
                "calls": ledger.calls.len(),
                "input_tokens": ledger.total_input_tokens(),
                "output_tokens": ledger.total_output_tokens(),
                "dollars": ledger.total_dollars(),
            },
        });
        write_file(
            &out_dir.join("cost_ledger.json"),
            &serde_json::to_string_pretty(&body).expect("ledger serializes"),
        )?;
        push(&mut artifacts, "cost_ledger.json");
    }

    // report.json: the full evaluation plus artifact index
    {
        let mut body = serde_json::to_value(evaluation).expect("evaluation serializes");
        body["artifacts"] = serde_json::json!(artifacts
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<String>>());
        body["cost_total_dollars"] = serde_json::json!(ledger.total_dollars());
        write_file(
            &out_dir.join("report.json"),
            &serde_json::to_string_pretty(&body).expect("report serializes"),
        )?;
        push(&mut artifacts, "report.json");
    }

    // report.md
    {
        let text = render_markdown(evaluation, ledger);
        write_file(&out_dir.join("report.md"), &text)?;
        push(&mut artifacts, "report.md");
    }

    Ok(artifacts)
}

fn render_markdown(evaluation: &Evaluation, ledger: &CostLedger) -> String {
    let mut md = String::new();
    let _ = writeln!(md, "# Simulation fidelity report\n");
    let _ = writeln!(md, "- config hash: `{}`", evaluation.config_hash);
    let _ = writeln!(md, "- prompt version: `{}`", evaluation.prompt_version);
    let _ = writeln!(
        md,
        "- AC2 weights: {}; bootstrap resamples: {}",
        evaluation.ac2_weights, evaluation.bootstrap_resamples
    );
    let _ = writeln!(
        md,
        "- total backend cost: ${:.4} over {} calls\n",
        ledger.total_dollars(),
        ledger.calls.len()
    );

    let _ = writeln!(md, "## Individual-level metrics (overall)\n");
    let _ = writeln!(
        md,
        "| source pair | metric | mean | 95% CI | p vs human-human | n | missing |"
    );
    let _ = writeln!(md, "|---|---|---|---|---|---|---|");
    if let Some(summary) = evaluation.individual.get("overall") {
        for (pair, metrics_cells) in &summary.cells {
            for (metric, cell) in metrics_cells {
                let _ = writeln!(
                    md,
                    "| {pair} | {metric} | {:.3} | [{:.3}, {:.3}] | {} | {} | {} |",
                    cell.mean,
                    cell.ci_low,
                    cell.ci_high,
                    cell.p_value
                        .map(|p| format!("{p:.3}"))
                        .unwrap_or_else(|| "—".into()),
                    cell.n_participants,
                    cell.missing_participants
                );
            }
        }
        if !summary.relative_accuracy_percent.is_empty() {
            let _ = writeln!(md, "\n### Accuracy relative to human consistency\n");
            for (pair, pct) in &summary.relative_accuracy_percent {
                let _ = writeln!(md, "- {pair}: {pct}%");
            }
        }
        if !summary.tukey.is_empty() {
            let _ = writeln!(md, "\n### Tukey HSD pairwise comparisons (95% CI)\n");
            let _ = writeln!(md, "| metric | comparison | statistic | p | lower | upper |");
            let _ = writeln!(md, "|---|---|---|---|---|---|");
            for (metric, rows) in &summary.tukey {
                for row in rows {
                    let _ = writeln!(
                        md,
                        "| {metric} | {} | {:.3} | {:.3} | {:.3} | {:.3} |",
                        row.comparison(),
                        row.statistic,
                        row.p_value,
                        row.ci_low,
                        row.ci_high
                    );
                }
            }
        }
    } else {
        let _ = writeln!(md, "| (no computable pairs) | | | | | | |");
    }

    let _ = writeln!(md, "\n## Population-level Wasserstein distance (overall)\n");
    let _ = writeln!(md, "| source pair | Likert | NPS |");
    let _ = writeln!(md, "|---|---|---|");
    for row in &evaluation.wd_overall {
        let _ = writeln!(
            md,
            "| {} | {} | {} |",
            row.source_pair,
            row.likert
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "—".into()),
            row.nps
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "—".into())
        );
    }

    if !evaluation.degenerate_flags.is_empty() {
        let _ = writeln!(md, "\n## Degenerate-distribution flags\n");
        for flag in &evaluation.degenerate_flags {
            let _ = writeln!(
                md,
                "- {} / {}: top category holds {:.1}% of mass{}",
                flag.source,
                flag.scale,
                flag.top_category_share * 100.0,
                if flag.flagged { " — FLAGGED" } else { "" }
            );
        }
    }

    if !evaluation.judge_rows.is_empty() {
        let _ = writeln!(md, "\n## Open-ended similarity (LLM judges)\n");
        let _ = writeln!(md, "| dimension | source pair | mean | 95% CI | n |");
        let _ = writeln!(md, "|---|---|---|---|---|");
        for row in &evaluation.judge_rows {
            let _ = writeln!(
                md,
                "| {} | {} | {:.3} | [{:.3}, {:.3}] | {} |",
                row.dimension.label(),
                row.pair,
                row.mean,
                row.ci_low,
                row.ci_high,
                row.n_participants
            );
        }
        let _ = writeln!(md, "\nInter-judge agreement (Cohen's kappa):\n");
        for (dimension, kappa) in &evaluation.judge_kappa {
            let _ = writeln!(
                md,
                "- {dimension}: {}",
                kappa
                    .map(|k| format!("{k:.3}"))
                    .unwrap_or_else(|| "undefined (both judges constant)".into())
            );
        }
    }

    if !evaluation.rematch.is_empty() {
        let _ = writeln!(md, "\n## Optimal re-matching (exploratory)\n");
        for (variant, result) in &evaluation.rematch {
            let _ = writeln!(
                md,
                "- {variant}: optimal total MAE {:.3} vs identity {:.3}",
                result.total_cost, result.identity_cost
            );
        }
    }
    md
}
