//! Turns a raw interview export into paired conversational turns.

use super::{CorpusError, TurnPair};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Interviewer,
    Participant,
}

/// One record of a raw interview export: who spoke and what they said.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RawUtterance {
    pub speaker: Speaker,
    pub text: String,
}

impl RawUtterance {
    pub fn new(speaker: Speaker, text: impl Into<String>) -> Self {
        RawUtterance {
            speaker,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentWarning {
    /// A trailing interviewer question had no participant answer and was dropped.
    DanglingQuestion { text: String },
    /// A participant answer arrived before any interviewer question and was dropped.
    LeadingAnswer { text: String },
    /// A record was empty after whitespace trimming and was skipped.
    EmptyUtterance { position: usize },
}

/// Pairs consecutive interviewer/participant records into [`TurnPair`]s.
///
/// Consecutive records by the same speaker are concatenated with a single
/// space before pairing, which preserves multi-part answers. A trailing
/// interviewer question with no answer is dropped with a warning, as is a
/// leading participant answer with no question.
pub fn segment_transcript(
    raw: &[RawUtterance],
) -> Result<(Vec<TurnPair>, Vec<SegmentWarning>), CorpusError> {
    if raw.is_empty() {
        return Err(CorpusError::EmptyTranscript);
    }
    let mut warnings = Vec::new();

    // Collapse same-speaker runs, skipping empty records.
    let mut runs: Vec<(Speaker, String)> = Vec::new();
    for (pos, u) in raw.iter().enumerate() {
        let text = u.text.trim();
        if text.is_empty() {
            warnings.push(SegmentWarning::EmptyUtterance { position: pos });
            continue;
        }
        match runs.last_mut() {
            Some((speaker, acc)) if *speaker == u.speaker => {
                acc.push(' ');
                acc.push_str(text);
            }
            _ => runs.push((u.speaker, text.to_string())),
        }
    }

    let mut pairs = Vec::new();
    let mut pending_question: Option<String> = None;
    for (speaker, text) in runs {
        match speaker {
            Speaker::Interviewer => {
                // Two interviewer runs can only meet here via an intervening
                // empty record; treat the earlier one as unanswered.
                if let Some(q) = pending_question.replace(text) {
                    warnings.push(SegmentWarning::DanglingQuestion { text: q });
                }
            }
            Speaker::Participant => match pending_question.take() {
                Some(question) => pairs.push(TurnPair {
                    index: pairs.len(),
                    interviewer_text: question,
                    participant_text: text,
                    section_tag: None,
                }),
                None => warnings.push(SegmentWarning::LeadingAnswer { text }),
            },
        }
    }
    if let Some(q) = pending_question {
        warnings.push(SegmentWarning::DanglingQuestion { text: q });
    }
    Ok((pairs, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i(text: &str) -> RawUtterance {
        RawUtterance::new(Speaker::Interviewer, text)
    }

    fn p(text: &str) -> RawUtterance {
        RawUtterance::new(Speaker::Participant, text)
    }

    #[test]
    fn single_pair() {
        let (pairs, warnings) = segment_transcript(&[i("role?"), p("manager")]).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].interviewer_text, "role?");
        assert_eq!(pairs[0].participant_text, "manager");
        assert_eq!(pairs[0].index, 0);
        assert!(warnings.is_empty());
    }

    #[test]
    fn same_speaker_runs_concatenate() {
        let (pairs, warnings) = segment_transcript(&[i("a"), i("b"), p("c")]).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].interviewer_text, "a b");
        assert_eq!(pairs[0].participant_text, "c");
        assert!(warnings.is_empty());

        let (pairs, _) = segment_transcript(&[i("q"), p("one"), p("two")]).unwrap();
        assert_eq!(pairs[0].participant_text, "one two");
    }

    #[test]
    fn dangling_question_dropped_with_warning() {
        let (pairs, warnings) = segment_transcript(&[i("a")]).unwrap();
        assert!(pairs.is_empty());
        assert_eq!(
            warnings,
            vec![SegmentWarning::DanglingQuestion { text: "a".into() }]
        );
    }

    #[test]
    fn leading_answer_dropped_with_warning() {
        let (pairs, warnings) = segment_transcript(&[p("hello"), i("q"), p("a")]).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!(matches!(
            warnings[0],
            SegmentWarning::LeadingAnswer { .. }
        ));
    }

    #[test]
    fn empty_transcript_is_an_error() {
        assert!(matches!(
            segment_transcript(&[]),
            Err(CorpusError::EmptyTranscript)
        ));
    }

    #[test]
    fn indices_strictly_increasing() {
        let (pairs, _) =
            segment_transcript(&[i("q1"), p("a1"), i("q2"), p("a2"), i("q3"), p("a3")]).unwrap();
        let indices: Vec<usize> = pairs.iter().map(|t| t.index).collect();
        assert_eq!(indices, vec![0, 1, 2]);
    }

    #[test]
    fn whitespace_only_records_skipped() {
        let (pairs, warnings) = segment_transcript(&[i("q"), i("  "), p("a")]).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].interviewer_text, "q");
        assert!(matches!(
            warnings[0],
            SegmentWarning::EmptyUtterance { position: 1 }
        ));
    }
}
