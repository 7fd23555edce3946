//! Python bindings for the panelsim metric suite, transcript segmentation,
//! and the in-memory participant store with the deterministic mock embedder.

use panelsim::corpus::{
    self, CategoricalKind, Participant, RawUtterance, Speaker, TurnPair,
};
use panelsim::gateway::{mock::MockBackend, Gateway, GatewayConfig};
use panelsim::memory::{build_memory, MemoryStore};
use panelsim::metrics::{self, AlignedPairs};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::collections::BTreeMap;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_kind(kind: &str) -> PyResult<CategoricalKind> {
    match kind {
        "likert7" => Ok(CategoricalKind::Likert7),
        "nps11" => Ok(CategoricalKind::Nps11),
        other => Err(value_err(format!(
            "unknown scale kind {other:?} (expected \"likert7\" or \"nps11\")"
        ))),
    }
}

fn aligned(pairs: Vec<(i64, i64)>, kind: &str) -> PyResult<AlignedPairs> {
    let kind = parse_kind(kind)?;
    for (a, b) in &pairs {
        if !kind.contains(*a) || !kind.contains(*b) {
            return Err(value_err(format!("pair ({a}, {b}) outside the {kind} scale")));
        }
    }
    Ok(AlignedPairs {
        participant_id: "py".into(),
        kind,
        pairs: pairs
            .into_iter()
            .enumerate()
            .map(|(i, (a, b))| (format!("q{i}"), a, b))
            .collect(),
    })
}

/// Maps a native categorical value onto [0, 1].
#[pyfunction]
fn normalize_response(value: i64, kind: &str) -> PyResult<f64> {
    corpus::normalize_response(value, parse_kind(kind)?).map_err(value_err)
}

/// Mean absolute error over (a, b) pairs on the named scale.
#[pyfunction]
fn mae(pairs: Vec<(i64, i64)>, kind: &str) -> PyResult<f64> {
    metrics::mae(&aligned(pairs, kind)?).map_err(value_err)
}

/// Fraction of exactly matching pairs.
#[pyfunction]
fn exact_match_accuracy(pairs: Vec<(i64, i64)>, kind: &str) -> PyResult<f64> {
    metrics::exact_match_accuracy(&aligned(pairs, kind)?).map_err(value_err)
}

/// Accuracy relative to the human-consistency baseline, rounded to integer
/// percent; None when the baseline is zero.
#[pyfunction]
fn relative_accuracy_percent(accuracy: f64, human_accuracy: f64) -> Option<i64> {
    metrics::relative_accuracy_percent(accuracy, human_accuracy)
}

/// Gwet's AC2 with quadratic ordinal weights over native-scale pairs.
#[pyfunction]
fn gwet_ac2(pairs: Vec<(i64, i64)>, kind: &str) -> PyResult<f64> {
    let kind = parse_kind(kind)?;
    let zero_based: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(a, b)| {
            if kind.contains(*a) && kind.contains(*b) {
                Ok((
                    (a - kind.min_value()) as usize,
                    (b - kind.min_value()) as usize,
                ))
            } else {
                Err(value_err(format!("pair ({a}, {b}) outside the {kind} scale")))
            }
        })
        .collect::<PyResult<_>>()?;
    metrics::gwet_ac2(&zero_based, kind.scale_size()).map_err(value_err)
}

/// Spearman correlation with average ranks for ties; None when undefined
/// (fewer than two pairs or a constant side).
#[pyfunction]
fn spearman(a: Vec<f64>, b: Vec<f64>) -> PyResult<Option<f64>> {
    if a.len() != b.len() {
        return Err(value_err("vectors differ in length"));
    }
    Ok(metrics::spearman(&a, &b))
}

/// Unweighted Cohen's kappa; None when both raters are constant on one
/// category.
#[pyfunction]
fn cohen_kappa(a: Vec<i64>, b: Vec<i64>) -> PyResult<Option<f64>> {
    metrics::cohen_kappa(&a, &b).map_err(value_err)
}

/// Ordinal Wasserstein distance between two same-scale histograms.
#[pyfunction]
fn wasserstein_ordinal(hist_a: Vec<u64>, hist_b: Vec<u64>) -> PyResult<f64> {
    metrics::wasserstein_ordinal(&hist_a, &hist_b).map_err(value_err)
}

/// True when one category holds more than `threshold` of the mass.
#[pyfunction]
#[pyo3(signature = (hist, threshold = 0.9))]
fn is_degenerate(hist: Vec<u64>, threshold: f64) -> bool {
    metrics::is_degenerate(&hist, threshold)
}

/// Participant-level bootstrap: dict with n, mean, ci_low, ci_high, and
/// p_value when a paired reference is given.
#[pyfunction]
#[pyo3(signature = (values, resamples = 2000, seed = 0, reference = None))]
fn bootstrap_summary(
    values: Vec<f64>,
    resamples: usize,
    seed: u64,
    reference: Option<Vec<f64>>,
) -> PyResult<BTreeMap<String, f64>> {
    let summary = metrics::bootstrap_summary(&values, resamples, seed, reference.as_deref())
        .map_err(value_err)?;
    let mut out = BTreeMap::new();
    out.insert("n".into(), summary.n as f64);
    out.insert("mean".into(), summary.mean);
    out.insert("ci_low".into(), summary.ci_low);
    out.insert("ci_high".into(), summary.ci_high);
    if let Some(p) = summary.p_value {
        out.insert("p_value".into(), p);
    }
    Ok(out)
}

/// Tukey HSD rows as (group_a, group_b, statistic, p_value, ci_low, ci_high)
/// tuples, groups ordered by label.
#[pyfunction]
fn tukey_hsd(
    groups: BTreeMap<String, Vec<f64>>,
) -> PyResult<Vec<(String, String, f64, f64, f64, f64)>> {
    let rows = metrics::tukey_hsd(&groups).map_err(value_err)?;
    Ok(rows
        .into_iter()
        .map(|row| {
            (
                row.group_a,
                row.group_b,
                row.statistic,
                row.p_value,
                row.ci_low,
                row.ci_high,
            )
        })
        .collect())
}

/// CDF of the studentized range statistic.
#[pyfunction]
fn studentized_range_cdf(q: f64, k: usize, nu: f64) -> f64 {
    metrics::tukey::studentized_range_cdf(q, k, nu)
}

/// Minimum-cost one-to-one assignment on a square cost matrix; returns
/// (column_of_row, total_cost).
#[pyfunction]
fn min_cost_assignment(cost: Vec<Vec<f64>>) -> PyResult<(Vec<usize>, f64)> {
    let solution = metrics::kuhn_munkres(&cost).map_err(value_err)?;
    Ok((solution.column_of_row, solution.total_cost))
}

/// Pairs (speaker, text) records into conversational turns; speakers are
/// "interviewer" or "participant". Returns (pairs, n_warnings).
#[pyfunction]
fn segment_transcript(
    records: Vec<(String, String)>,
) -> PyResult<(Vec<(String, String)>, usize)> {
    let raw: Vec<RawUtterance> = records
        .into_iter()
        .map(|(speaker, text)| {
            let speaker = match speaker.as_str() {
                "interviewer" => Ok(Speaker::Interviewer),
                "participant" => Ok(Speaker::Participant),
                other => Err(value_err(format!("unknown speaker {other:?}"))),
            }?;
            Ok(RawUtterance::new(speaker, text))
        })
        .collect::<PyResult<_>>()?;
    let (pairs, warnings) = corpus::segment_transcript(&raw).map_err(value_err)?;
    Ok((
        pairs
            .into_iter()
            .map(|t| (t.interviewer_text, t.participant_text))
            .collect(),
        warnings.len(),
    ))
}

/// Searchable per-participant memory backed by the deterministic mock
/// embedder: exact maximum-inner-product retrieval over embedded turn pairs
/// and reflections.
#[pyclass]
struct PyMemoryStore {
    store: MemoryStore,
    gateway: Gateway,
}

#[pymethods]
impl PyMemoryStore {
    /// Builds the store from (interviewer_text, participant_text) turns.
    #[new]
    #[pyo3(signature = (participant_id, turns, dimension = 64, seed = 0))]
    fn new(
        participant_id: String,
        turns: Vec<(String, String)>,
        dimension: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let gateway = Gateway::new(
            Box::new(MockBackend::new(seed, dimension)),
            GatewayConfig::default(),
        );
        let participant = Participant {
            id: participant_id,
            scratchpad: Default::default(),
            turns: turns
                .into_iter()
                .enumerate()
                .map(|(index, (interviewer_text, participant_text))| TurnPair {
                    index,
                    interviewer_text,
                    participant_text,
                    section_tag: None,
                })
                .collect(),
        };
        let store = build_memory(&participant, &gateway).map_err(value_err)?;
        Ok(PyMemoryStore { store, gateway })
    }

    fn add_reflection(&mut self, text: &str) -> PyResult<()> {
        self.store = self
            .store
            .add_reflection(text, &self.gateway)
            .map_err(value_err)?;
        Ok(())
    }

    /// Top-k records by inner product with the embedded query, as
    /// (record_id, rendered_text) tuples.
    fn retrieve(&self, query: &str, k: usize) -> PyResult<Vec<(String, String)>> {
        let records = self
            .store
            .retrieve(query, k, &self.gateway)
            .map_err(value_err)?;
        Ok(records
            .into_iter()
            .map(|r| (r.record_id.clone(), r.rendered()))
            .collect())
    }

    fn __len__(&self) -> usize {
        self.store.len()
    }
}

#[pymodule]
fn panelsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize_response, m)?)?;
    m.add_function(wrap_pyfunction!(mae, m)?)?;
    m.add_function(wrap_pyfunction!(exact_match_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(relative_accuracy_percent, m)?)?;
    m.add_function(wrap_pyfunction!(gwet_ac2, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(cohen_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein_ordinal, m)?)?;
    m.add_function(wrap_pyfunction!(is_degenerate, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_summary, m)?)?;
    m.add_function(wrap_pyfunction!(tukey_hsd, m)?)?;
    m.add_function(wrap_pyfunction!(studentized_range_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(min_cost_assignment, m)?)?;
    m.add_function(wrap_pyfunction!(segment_transcript, m)?)?;
    m.add_class::<PyMemoryStore>()?;
    Ok(())
}
