//! Construct scoring and scale normalization for categorical responses.

use super::{
    CategoricalKind, Concept, Construct, Corpus, CorpusError, QuestionKind, ResponseSet,
};
use std::collections::BTreeMap;

/// Per-participant construct scores for one concept: the three TAM constructs
/// (mean of their two items on 1..7) plus NPS passed through on 0..10.
pub type ConstructScores = BTreeMap<String, BTreeMap<Construct, f64>>;

/// Maps a native categorical value onto the unit interval.
///
/// Likert 1..7 maps to (v-1)/6 and NPS 0..10 to v/10, so both scales share
/// the endpoints 0 and 1.
pub fn normalize_response(value: i64, kind: CategoricalKind) -> Result<f64, CorpusError> {
    if !kind.contains(value) {
        return Err(CorpusError::OutOfScale { value, kind });
    }
    let span = (kind.scale_size() - 1) as f64;
    Ok((value - kind.min_value()) as f64 / span)
}

/// Computes construct scores for every participant with responses to
/// `concept`'s items in `responses`.
///
/// A construct with both items missing is simply absent for that participant;
/// exactly one missing item is an [`CorpusError::IncompleteConstruct`].
pub fn score_tam_constructs(
    responses: &ResponseSet,
    corpus: &Corpus,
    concept: &Concept,
) -> Result<ConstructScores, CorpusError> {
    let questions = corpus.questions_for_concept(&concept.id);
    let mut scores: ConstructScores = BTreeMap::new();

    for participant in &corpus.participants {
        let mut per_construct: BTreeMap<Construct, f64> = BTreeMap::new();
        for construct in Construct::TAM {
            let items: Vec<_> = questions
                .iter()
                .filter(|q| q.kind == QuestionKind::Likert7 && q.construct == construct)
                .collect();
            let values: Vec<i64> = items
                .iter()
                .filter_map(|q| {
                    responses
                        .get(&participant.id, &q.id)
                        .and_then(|r| r.value.category())
                })
                .collect();
            match values.len() {
                0 => {}
                n if n == items.len() => {
                    let mean = values.iter().sum::<i64>() as f64 / values.len() as f64;
                    per_construct.insert(construct, mean);
                }
                _ => {
                    return Err(CorpusError::IncompleteConstruct {
                        participant: participant.id.clone(),
                        construct,
                    })
                }
            }
        }
        if let Some(nps_q) = questions.iter().find(|q| q.kind == QuestionKind::Nps11) {
            if let Some(v) = responses
                .get(&participant.id, &nps_q.id)
                .and_then(|r| r.value.category())
            {
                per_construct.insert(Construct::Nps, v as f64);
            }
        }
        if !per_construct.is_empty() {
            scores.insert(participant.id.clone(), per_construct);
        }
    }
    Ok(scores)
}
