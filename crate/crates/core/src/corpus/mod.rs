//! Canonical data model for participants, concepts, survey instruments, and
//! response sets, plus loading/validation of the on-disk corpus layout.
//!
//! A corpus directory contains:
//! - `participants.jsonl` — one [`Participant`] per line
//! - `concepts.json` — array of [`Concept`]
//! - `questions.json` — array of [`Question`]
//! - `responses_*.jsonl` — zero or more response files, one [`Response`] per
//!   line, optionally preceded by a `{"_meta": ...}` header line
//!
//! Corpora are immutable after load and safe to share across threads.

mod segment;
mod scoring;

pub use segment::{segment_transcript, RawUtterance, SegmentWarning, Speaker};
pub use scoring::{normalize_response, score_tam_constructs, ConstructScores};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Scratchpad keys accepted by the default schema. Derived from the screening
/// survey fields; unknown keys are rejected in strict mode and warned
/// otherwise.
pub const SCRATCHPAD_SCHEMA: &[&str] = &[
    "job_division",
    "job_title",
    "software_tools",
    "tech_adoption",
    "pdf_frequency",
    "pdf_viewer",
    "document_types",
    "use_cases",
    "ai_familiarity",
    "ai_used_for_pdf",
    "ai_perception",
    "ai_usage_frequency",
    "ai_tools",
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing corpus file: {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{} corpus violation(s); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Validation(Vec<Violation>),
    #[error("empty transcript")]
    EmptyTranscript,
    #[error("value {value} out of scale for {kind}")]
    OutOfScale { value: i64, kind: CategoricalKind },
    #[error("construct {construct} for participant {participant} has one of two items missing")]
    IncompleteConstruct {
        participant: String,
        construct: Construct,
    },
}

/// A single field-level schema or reference problem, with enough location
/// context to print a per-record error table.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Violation {
    /// Which file the offending record came from.
    pub file: String,
    /// Record locator: line number for JSONL, array index or id for JSON.
    pub record: String,
    /// Field path within the record, e.g. `options` or `turns[3].index`.
    pub field: String,
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SchemaViolation,
    DanglingReference,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{} {}: {}",
            self.file, self.record, self.field, self.message
        )
    }
}

/// One interviewer question plus the participant's answer; the atomic memory
/// unit for simulation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TurnPair {
    pub index: usize,
    pub interviewer_text: String,
    pub participant_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section_tag: Option<String>,
}

/// Scratchpad values are either a single string or a list of strings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum ScratchValue {
    One(String),
    Many(Vec<String>),
}

impl ScratchValue {
    /// All string payloads carried by this value.
    pub fn items(&self) -> Vec<&str> {
        match self {
            ScratchValue::One(s) => vec![s.as_str()],
            ScratchValue::Many(v) => v.iter().map(|s| s.as_str()).collect(),
        }
    }

    pub fn render(&self) -> String {
        match self {
            ScratchValue::One(s) => s.clone(),
            ScratchValue::Many(v) => v.join(", "),
        }
    }
}

/// Key-value summary of a participant's screening attributes.
pub type Scratchpad = BTreeMap<String, ScratchValue>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Participant {
    pub id: String,
    #[serde(default)]
    pub scratchpad: Scratchpad,
    #[serde(default)]
    pub turns: Vec<TurnPair>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Concept {
    pub id: String,
    pub name: String,
    pub short_description: String,
    pub detailed_description: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<PathBuf>,
}

impl Concept {
    /// Text block used to fill the concept slot of the answering prompts.
    pub fn intro_text(&self) -> String {
        let mut out = format!("Concept: {}\n\n{}", self.name, self.short_description);
        if !self.detailed_description.is_empty() {
            out.push_str("\n\n");
            let bullets: Vec<String> = self
                .detailed_description
                .iter()
                .map(|b| format!("- {b}"))
                .collect();
            out.push_str(&bullets.join("\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    Likert7,
    Nps11,
    OpenEnded,
}

impl QuestionKind {
    pub fn categorical(self) -> Option<CategoricalKind> {
        match self {
            QuestionKind::Likert7 => Some(CategoricalKind::Likert7),
            QuestionKind::Nps11 => Some(CategoricalKind::Nps11),
            QuestionKind::OpenEnded => None,
        }
    }
}

/// The two categorical scales used by the instrument.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalKind {
    Likert7,
    Nps11,
}

impl CategoricalKind {
    /// Number of categories on the scale.
    pub fn scale_size(self) -> usize {
        match self {
            CategoricalKind::Likert7 => 7,
            CategoricalKind::Nps11 => 11,
        }
    }

    /// Smallest native value (Likert is 1-based, NPS 0-based).
    pub fn min_value(self) -> i64 {
        match self {
            CategoricalKind::Likert7 => 1,
            CategoricalKind::Nps11 => 0,
        }
    }

    pub fn max_value(self) -> i64 {
        self.min_value() + self.scale_size() as i64 - 1
    }

    pub fn contains(self, value: i64) -> bool {
        (self.min_value()..=self.max_value()).contains(&value)
    }

    pub fn label(self) -> &'static str {
        match self {
            CategoricalKind::Likert7 => "likert",
            CategoricalKind::Nps11 => "nps",
        }
    }
}

impl fmt::Display for CategoricalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Construct {
    Usefulness,
    EaseOfUse,
    BehavioralIntention,
    Nps,
    Qualitative,
}

impl Construct {
    pub const TAM: [Construct; 3] = [
        Construct::Usefulness,
        Construct::EaseOfUse,
        Construct::BehavioralIntention,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Construct::Usefulness => "usefulness",
            Construct::EaseOfUse => "ease_of_use",
            Construct::BehavioralIntention => "behavioral_intention",
            Construct::Nps => "nps",
            Construct::Qualitative => "qualitative",
        }
    }
}

impl fmt::Display for Construct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Question {
    pub id: String,
    pub concept_id: String,
    pub kind: QuestionKind,
    pub construct: Construct,
    pub prompt_text: String,
    /// Ordered answer labels; present iff the question is categorical.
    /// Labels map positionally onto the native scale (Likert 1..7, NPS 0..10).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
}

impl Question {
    /// Native value for a positional option index (0-based).
    pub fn value_for_option(&self, position: usize) -> Option<i64> {
        let kind = self.kind.categorical()?;
        if position < kind.scale_size() {
            Some(kind.min_value() + position as i64)
        } else {
            None
        }
    }
}

/// Who produced a response set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[serde(try_from = "String", into = "String")]
pub enum SourceId {
    HumanS1,
    HumanS2,
    Agent { variant: String, run: String },
}

impl SourceId {
    /// File-name-safe rendering, used for `responses_<slug>.jsonl`.
    pub fn slug(&self) -> String {
        match self {
            SourceId::HumanS1 => "human_s1".into(),
            SourceId::HumanS2 => "human_s2".into(),
            SourceId::Agent { variant, run } => format!("agent_{variant}_{run}"),
        }
    }

    pub fn is_agent(&self) -> bool {
        matches!(self, SourceId::Agent { .. })
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceId::HumanS1 => f.write_str("human_s1"),
            SourceId::HumanS2 => f.write_str("human_s2"),
            SourceId::Agent { variant, run } => write!(f, "agent:{variant}:{run}"),
        }
    }
}

impl TryFrom<String> for SourceId {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        match s.as_str() {
            "human_s1" => Ok(SourceId::HumanS1),
            "human_s2" => Ok(SourceId::HumanS2),
            other => {
                let mut parts = other.splitn(3, ':');
                match (parts.next(), parts.next(), parts.next()) {
                    (Some("agent"), Some(variant), Some(run))
                        if !variant.is_empty() && !run.is_empty() =>
                    {
                        Ok(SourceId::Agent {
                            variant: variant.to_string(),
                            run: run.to_string(),
                        })
                    }
                    _ => Err(format!(
                        "invalid source id {other:?} (expected human_s1, human_s2, or agent:<variant>:<run>)"
                    )),
                }
            }
        }
    }
}

impl From<SourceId> for String {
    fn from(s: SourceId) -> String {
        s.to_string()
    }
}

/// Either a categorical index on the question's native scale or free text.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum ResponseValue {
    Category { category: i64 },
    Text { text: String },
}

impl ResponseValue {
    pub fn category(&self) -> Option<i64> {
        match self {
            ResponseValue::Category { category } => Some(*category),
            ResponseValue::Text { .. } => None,
        }
    }

    pub fn text(&self) -> Option<&str> {
        match self {
            ResponseValue::Text { text } => Some(text),
            ResponseValue::Category { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Response {
    pub source: SourceId,
    pub participant_id: String,
    pub question_id: String,
    pub value: ResponseValue,
}

/// Metadata header persisted as the first `{"_meta": ...}` line of a
/// response JSONL file.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct ResponseSetMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_version: Option<String>,
}

/// Aligned answers from one source over participants and questions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ResponseSet {
    pub source: SourceId,
    pub meta: ResponseSetMeta,
    /// Keyed by (participant_id, question_id); absent cells mean missing,
    /// never sentinel values.
    pub cells: BTreeMap<(String, String), Response>,
}

impl ResponseSet {
    pub fn new(source: SourceId) -> Self {
        ResponseSet {
            source,
            meta: ResponseSetMeta::default(),
            cells: BTreeMap::new(),
        }
    }

    /// Inserts a response; returns false when the (participant, question)
    /// cell was already occupied.
    pub fn insert(&mut self, response: Response) -> bool {
        let key = (
            response.participant_id.clone(),
            response.question_id.clone(),
        );
        self.cells.insert(key, response).is_none()
    }

    pub fn get(&self, participant_id: &str, question_id: &str) -> Option<&Response> {
        self.cells
            .get(&(participant_id.to_string(), question_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn responses(&self) -> impl Iterator<Item = &Response> {
        self.cells.values()
    }

    /// Participants that answered every question in `questions`.
    pub fn complete_participants<'a>(
        &self,
        participants: impl IntoIterator<Item = &'a str>,
        questions: &[&Question],
    ) -> Vec<String> {
        participants
            .into_iter()
            .filter(|p| questions.iter().all(|q| self.get(p, &q.id).is_some()))
            .map(|p| p.to_string())
            .collect()
    }

    /// Splits the participants × questions grid into present and missing
    /// cells. The two lists partition the grid exactly.
    pub fn coverage(
        &self,
        participants: &[&Participant],
        questions: &[&Question],
    ) -> CoverageMask {
        let mut present = Vec::new();
        let mut missing = Vec::new();
        for p in participants {
            for q in questions {
                let key = (p.id.clone(), q.id.clone());
                if self.cells.contains_key(&key) {
                    present.push(key);
                } else {
                    missing.push(key);
                }
            }
        }
        CoverageMask { present, missing }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMask {
    pub present: Vec<(String, String)>,
    pub missing: Vec<(String, String)>,
}

/// Fully validated, immutable corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub participants: Vec<Participant>,
    pub concepts: Vec<Concept>,
    pub questions: Vec<Question>,
    pub response_sets: BTreeMap<SourceId, ResponseSet>,
}

impl PartialEq for Corpus {
    /// Order-insensitive equality: collections are compared as keyed sets.
    fn eq(&self, other: &Self) -> bool {
        let by_id = |ps: &[Participant]| -> BTreeMap<String, Participant> {
            ps.iter().map(|p| (p.id.clone(), p.clone())).collect()
        };
        let concepts = |cs: &[Concept]| -> BTreeMap<String, Concept> {
            cs.iter().map(|c| (c.id.clone(), c.clone())).collect()
        };
        let questions = |qs: &[Question]| -> BTreeMap<String, Question> {
            qs.iter().map(|q| (q.id.clone(), q.clone())).collect()
        };
        by_id(&self.participants) == by_id(&other.participants)
            && concepts(&self.concepts) == concepts(&other.concepts)
            && questions(&self.questions) == questions(&other.questions)
            && self.response_sets == other.response_sets
    }
}

impl Corpus {
    pub fn participant(&self, id: &str) -> Option<&Participant> {
        self.participants.iter().find(|p| p.id == id)
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.concepts.iter().find(|c| c.id == id)
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn questions_for_concept(&self, concept_id: &str) -> Vec<&Question> {
        self.questions
            .iter()
            .filter(|q| q.concept_id == concept_id)
            .collect()
    }

    pub fn open_ended_questions(&self) -> Vec<&Question> {
        self.questions
            .iter()
            .filter(|q| q.kind == QuestionKind::OpenEnded)
            .collect()
    }

    pub fn categorical_questions(&self) -> Vec<&Question> {
        self.questions
            .iter()
            .filter(|q| q.kind != QuestionKind::OpenEnded)
            .collect()
    }

    /// Loads and fully validates a corpus directory. Every violation found is
    /// reported, not just the first.
    pub fn load(dir: &Path) -> Result<Corpus, CorpusError> {
        Self::load_with_mode(dir, true)
    }

    /// As [`Corpus::load`], but unknown scratchpad keys only warn when
    /// `strict` is false.
    pub fn load_with_mode(dir: &Path, strict: bool) -> Result<Corpus, CorpusError> {
        let participants_path = dir.join("participants.jsonl");
        let concepts_path = dir.join("concepts.json");
        let questions_path = dir.join("questions.json");
        for p in [&participants_path, &concepts_path, &questions_path] {
            if !p.exists() {
                return Err(CorpusError::MissingFile(p.clone()));
            }
        }

        let mut violations = Vec::new();

        let participants: Vec<Participant> =
            read_jsonl(&participants_path, &mut violations)?;
        let concepts: Vec<Concept> = read_json(&concepts_path)?;
        let questions: Vec<Question> = read_json(&questions_path)?;

        let mut response_sets: BTreeMap<SourceId, ResponseSet> = BTreeMap::new();
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| CorpusError::Io {
                path: dir.to_path_buf(),
                message: e.to_string(),
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .map(|n| n.starts_with("responses_") && n.ends_with(".jsonl"))
                    .unwrap_or(false)
            })
            .collect();
        entries.sort();
        for path in entries {
            load_response_file(&path, &mut response_sets, &mut violations)?;
        }

        let corpus = Corpus {
            participants,
            concepts,
            questions,
            response_sets,
        };
        corpus.validate(strict, &mut violations);
        if violations.is_empty() {
            Ok(corpus)
        } else {
            Err(CorpusError::Validation(violations))
        }
    }

    /// Structural validation; appends every violation found.
    pub fn validate(&self, strict: bool, out: &mut Vec<Violation>) {
        let mut seen_participants = BTreeSet::new();
        for p in &self.participants {
            let record = p.id.clone();
            if !seen_participants.insert(p.id.clone()) {
                out.push(violation(
                    "participants.jsonl",
                    &record,
                    "id",
                    ViolationKind::SchemaViolation,
                    format!("duplicate participant id {:?}", p.id),
                ));
            }
            if p.id.trim().is_empty() {
                out.push(violation(
                    "participants.jsonl",
                    &record,
                    "id",
                    ViolationKind::SchemaViolation,
                    "participant id is empty".into(),
                ));
            }
            let mut last_index: Option<usize> = None;
            for (i, t) in p.turns.iter().enumerate() {
                if t.interviewer_text.trim().is_empty() || t.participant_text.trim().is_empty() {
                    out.push(violation(
                        "participants.jsonl",
                        &record,
                        &format!("turns[{i}]"),
                        ViolationKind::SchemaViolation,
                        "turn texts must be non-empty after trim".into(),
                    ));
                }
                if let Some(prev) = last_index {
                    if t.index <= prev {
                        out.push(violation(
                            "participants.jsonl",
                            &record,
                            &format!("turns[{i}].index"),
                            ViolationKind::SchemaViolation,
                            format!("turn index {} not strictly increasing after {}", t.index, prev),
                        ));
                    }
                }
                last_index = Some(t.index);
            }
            if strict {
                for key in p.scratchpad.keys() {
                    if !SCRATCHPAD_SCHEMA.contains(&key.as_str()) {
                        out.push(violation(
                            "participants.jsonl",
                            &record,
                            &format!("scratchpad.{key}"),
                            ViolationKind::SchemaViolation,
                            format!("unknown scratchpad key {key:?}"),
                        ));
                    }
                }
            }
        }

        let mut concept_ids = BTreeSet::new();
        for c in &self.concepts {
            if !concept_ids.insert(c.id.clone()) {
                out.push(violation(
                    "concepts.json",
                    &c.id,
                    "id",
                    ViolationKind::SchemaViolation,
                    format!("duplicate concept id {:?}", c.id),
                ));
            }
        }

        let mut question_ids = BTreeSet::new();
        // (concept, construct) → number of likert7 items, for the
        // two-items-per-TAM-construct rule.
        let mut tam_items: BTreeMap<(String, Construct), usize> = BTreeMap::new();
        for q in &self.questions {
            let record = q.id.clone();
            if !question_ids.insert(q.id.clone()) {
                out.push(violation(
                    "questions.json",
                    &record,
                    "id",
                    ViolationKind::SchemaViolation,
                    format!("duplicate question id {:?}", q.id),
                ));
            }
            if !concept_ids.contains(&q.concept_id) {
                out.push(violation(
                    "questions.json",
                    &record,
                    "concept_id",
                    ViolationKind::DanglingReference,
                    format!("unknown concept id {:?}", q.concept_id),
                ));
            }
            match (q.kind, &q.options) {
                (QuestionKind::OpenEnded, Some(_)) => out.push(violation(
                    "questions.json",
                    &record,
                    "options",
                    ViolationKind::SchemaViolation,
                    "open-ended questions must not declare options".into(),
                )),
                (QuestionKind::OpenEnded, None) => {}
                (kind, None) => out.push(violation(
                    "questions.json",
                    &record,
                    "options",
                    ViolationKind::SchemaViolation,
                    format!("{kind:?} questions must declare options"),
                )),
                (kind, Some(options)) => {
                    let expected = kind.categorical().map(|k| k.scale_size()).unwrap_or(0);
                    if options.len() != expected {
                        out.push(violation(
                            "questions.json",
                            &record,
                            "options",
                            ViolationKind::SchemaViolation,
                            format!("expected {expected} options, found {}", options.len()),
                        ));
                    }
                }
            }
            match (q.kind, q.construct) {
                (QuestionKind::Likert7, c) if Construct::TAM.contains(&c) => {
                    *tam_items.entry((q.concept_id.clone(), c)).or_default() += 1;
                }
                (QuestionKind::Likert7, other) => out.push(violation(
                    "questions.json",
                    &record,
                    "construct",
                    ViolationKind::SchemaViolation,
                    format!("likert7 question must use a TAM construct, found {other}"),
                )),
                (QuestionKind::Nps11, Construct::Nps) => {}
                (QuestionKind::Nps11, other) => out.push(violation(
                    "questions.json",
                    &record,
                    "construct",
                    ViolationKind::SchemaViolation,
                    format!("nps11 question must use the nps construct, found {other}"),
                )),
                (QuestionKind::OpenEnded, Construct::Qualitative) => {}
                (QuestionKind::OpenEnded, other) => out.push(violation(
                    "questions.json",
                    &record,
                    "construct",
                    ViolationKind::SchemaViolation,
                    format!("open-ended question must use the qualitative construct, found {other}"),
                )),
            }
        }
        for ((concept, construct), count) in &tam_items {
            if *count != 2 && concept_ids.contains(concept) {
                out.push(violation(
                    "questions.json",
                    concept,
                    "construct",
                    ViolationKind::SchemaViolation,
                    format!("construct {construct} has {count} likert7 items for concept {concept:?}, expected exactly 2"),
                ));
            }
        }

        for (source, set) in &self.response_sets {
            let file = format!("responses_{}.jsonl", source.slug());
            for r in set.responses() {
                let record = format!("{}/{}", r.participant_id, r.question_id);
                if !seen_participants.contains(&r.participant_id) {
                    out.push(violation(
                        &file,
                        &record,
                        "participant_id",
                        ViolationKind::DanglingReference,
                        format!("unknown participant id {:?}", r.participant_id),
                    ));
                }
                let Some(q) = self.question(&r.question_id) else {
                    out.push(violation(
                        &file,
                        &record,
                        "question_id",
                        ViolationKind::DanglingReference,
                        format!("unknown question id {:?}", r.question_id),
                    ));
                    continue;
                };
                match (q.kind.categorical(), &r.value) {
                    (Some(kind), ResponseValue::Category { category }) => {
                        if !kind.contains(*category) {
                            out.push(violation(
                                &file,
                                &record,
                                "value.category",
                                ViolationKind::SchemaViolation,
                                format!(
                                    "value {category} outside {}..={} for {kind}",
                                    kind.min_value(),
                                    kind.max_value()
                                ),
                            ));
                        }
                    }
                    (None, ResponseValue::Text { text }) => {
                        if text.trim().is_empty() {
                            out.push(violation(
                                &file,
                                &record,
                                "value.text",
                                ViolationKind::SchemaViolation,
                                "open-ended response text is empty".into(),
                            ));
                        }
                    }
                    (Some(_), ResponseValue::Text { .. }) => out.push(violation(
                        &file,
                        &record,
                        "value",
                        ViolationKind::SchemaViolation,
                        "categorical question answered with text".into(),
                    )),
                    (None, ResponseValue::Category { .. }) => out.push(violation(
                        &file,
                        &record,
                        "value",
                        ViolationKind::SchemaViolation,
                        "open-ended question answered with a category".into(),
                    )),
                }
            }
        }
    }

    /// Writes the corpus back out in the canonical layout. Reloading the
    /// written directory yields an equal corpus.
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        std::fs::create_dir_all(dir).map_err(|e| CorpusError::Io {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
        let io_err = |path: &Path, e: std::io::Error| CorpusError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        };

        let participants_path = dir.join("participants.jsonl");
        let mut lines = String::new();
        for p in &self.participants {
            lines.push_str(&serde_json::to_string(p).expect("participant serializes"));
            lines.push('\n');
        }
        std::fs::write(&participants_path, lines).map_err(|e| io_err(&participants_path, e))?;

        let concepts_path = dir.join("concepts.json");
        std::fs::write(
            &concepts_path,
            serde_json::to_string_pretty(&self.concepts).expect("concepts serialize"),
        )
        .map_err(|e| io_err(&concepts_path, e))?;

        let questions_path = dir.join("questions.json");
        std::fs::write(
            &questions_path,
            serde_json::to_string_pretty(&self.questions).expect("questions serialize"),
        )
        .map_err(|e| io_err(&questions_path, e))?;

        for (source, set) in &self.response_sets {
            let path = dir.join(format!("responses_{}.jsonl", source.slug()));
            write_response_set(&path, set)?;
        }
        Ok(())
    }
}

/// Writes a response set as JSONL with a `{"_meta": ...}` header line.
pub fn write_response_set(path: &Path, set: &ResponseSet) -> Result<(), CorpusError> {
    let mut lines = String::new();
    let header = serde_json::json!({ "_meta": set.meta, "source": set.source.to_string() });
    lines.push_str(&header.to_string());
    lines.push('\n');
    for r in set.responses() {
        lines.push_str(&serde_json::to_string(r).expect("response serializes"));
        lines.push('\n');
    }
    std::fs::write(path, lines).map_err(|e| CorpusError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads a single response JSONL file into a [`ResponseSet`].
pub fn read_response_set(path: &Path) -> Result<ResponseSet, CorpusError> {
    let mut sets = BTreeMap::new();
    let mut violations = Vec::new();
    load_response_file(path, &mut sets, &mut violations)?;
    if !violations.is_empty() {
        return Err(CorpusError::Validation(violations));
    }
    let mut iter = sets.into_values();
    match (iter.next(), iter.next()) {
        (Some(set), None) => Ok(set),
        (None, _) => Err(CorpusError::Validation(vec![violation(
            &path.display().to_string(),
            "-",
            "source",
            ViolationKind::SchemaViolation,
            "response file contains no responses".into(),
        )])),
        (Some(_), Some(extra)) => Err(CorpusError::Validation(vec![violation(
            &path.display().to_string(),
            "-",
            "source",
            ViolationKind::SchemaViolation,
            format!("response file mixes multiple sources (also found {})", extra.source),
        )])),
    }
}

fn load_response_file(
    path: &Path,
    sets: &mut BTreeMap<SourceId, ResponseSet>,
    violations: &mut Vec<Violation>,
) -> Result<(), CorpusError> {
    let file_label = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("responses.jsonl")
        .to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut pending_meta: Option<ResponseSetMeta> = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 0 {
            if let Ok(v) = serde_json::from_str::<serde_json::Value>(line) {
                if let Some(meta) = v.get("_meta") {
                    pending_meta = serde_json::from_value(meta.clone()).ok();
                    continue;
                }
            }
        }
        match serde_json::from_str::<Response>(line) {
            Ok(response) => {
                let set = sets
                    .entry(response.source.clone())
                    .or_insert_with(|| ResponseSet::new(response.source.clone()));
                if let Some(meta) = pending_meta.take() {
                    set.meta = meta;
                }
                if !set.insert(response) {
                    violations.push(violation(
                        &file_label,
                        &(lineno + 1).to_string(),
                        "-",
                        ViolationKind::SchemaViolation,
                        "duplicate (participant, question) cell".into(),
                    ));
                }
            }
            Err(e) => violations.push(violation(
                &file_label,
                &(lineno + 1).to_string(),
                &field_path_of(&e),
                ViolationKind::SchemaViolation,
                e.to_string(),
            )),
        }
    }
    Ok(())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(
    path: &Path,
    violations: &mut Vec<Violation>,
) -> Result<Vec<T>, CorpusError> {
    let file_label = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("file.jsonl")
        .to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(line) {
            Ok(v) => out.push(v),
            Err(e) => violations.push(violation(
                &file_label,
                &(lineno + 1).to_string(),
                &field_path_of(&e),
                ViolationKind::SchemaViolation,
                e.to_string(),
            )),
        }
    }
    Ok(out)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| {
        CorpusError::Validation(vec![violation(
            &path.display().to_string(),
            &e.line().to_string(),
            "-",
            ViolationKind::SchemaViolation,
            e.to_string(),
        )])
    })
}

fn field_path_of(err: &serde_json::Error) -> String {
    // serde_json reports line/column, not field paths; the message itself
    // names the offending field for missing/unknown-field errors.
    format!("col {}", err.column())
}

fn violation(
    file: &str,
    record: &str,
    field: &str,
    kind: ViolationKind,
    message: String,
) -> Violation {
    Violation {
        file: file.to_string(),
        record: record.to_string(),
        field: field.to_string(),
        kind,
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;

    #[test]
    fn demo_corpus_loads_and_matches_manifest() {
        let dir = tempfile::tempdir().unwrap();
        demo::demo_corpus().save(dir.path()).unwrap();
        let corpus = Corpus::load(dir.path()).unwrap();
        assert_eq!(corpus.participants.len(), 5);
        assert_eq!(corpus.concepts.len(), 4);
        assert_eq!(corpus.questions.len(), 60);
        assert_eq!(corpus.response_sets.len(), 2);
    }

    #[test]
    fn two_participant_fixture_matches_its_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut corpus = demo::demo_corpus();
        corpus.participants.truncate(2);
        let keep: BTreeSet<String> =
            corpus.participants.iter().map(|p| p.id.clone()).collect();
        for set in corpus.response_sets.values_mut() {
            set.cells.retain(|(p, _), _| keep.contains(p));
        }
        corpus.save(dir.path()).unwrap();
        let loaded = Corpus::load(dir.path()).unwrap();
        assert_eq!(loaded.participants.len(), 2);
        assert_eq!(loaded.concepts.len(), 4);
        assert_eq!(loaded.questions.len(), 60);
    }

    #[test]
    fn dangling_question_reference_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut corpus = demo::demo_corpus();
        let first = corpus.response_sets.values_mut().next().unwrap();
        let mut bogus = first.responses().next().unwrap().clone();
        bogus.question_id = "no_such_question".into();
        bogus.participant_id = "p01".into();
        first.cells.insert(
            (bogus.participant_id.clone(), bogus.question_id.clone()),
            bogus,
        );
        corpus.save(dir.path()).unwrap();
        let err = Corpus::load(dir.path()).unwrap_err();
        match err {
            CorpusError::Validation(violations) => {
                assert!(violations
                    .iter()
                    .any(|v| v.kind == ViolationKind::DanglingReference
                        && v.message.contains("no_such_question")));
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn likert_with_six_options_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut corpus = demo::demo_corpus();
        let q = corpus
            .questions
            .iter_mut()
            .find(|q| q.kind == QuestionKind::Likert7)
            .unwrap();
        q.options.as_mut().unwrap().pop();
        corpus.save(dir.path()).unwrap();
        let err = Corpus::load(dir.path()).unwrap_err();
        match err {
            CorpusError::Validation(violations) => {
                assert!(violations.iter().any(|v| {
                    v.kind == ViolationKind::SchemaViolation
                        && v.message.contains("expected 7 options, found 6")
                }));
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn missing_file_reported() {
        let dir = tempfile::tempdir().unwrap();
        match Corpus::load(dir.path()) {
            Err(CorpusError::MissingFile(p)) => {
                assert!(p.ends_with("participants.jsonl"));
            }
            other => panic!("expected MissingFile, got {other:?}"),
        }
    }

    #[test]
    fn source_id_round_trips() {
        for s in [
            SourceId::HumanS1,
            SourceId::HumanS2,
            SourceId::Agent {
                variant: "interview_based".into(),
                run: "run1".into(),
            },
        ] {
            let text = s.to_string();
            let back = SourceId::try_from(text).unwrap();
            assert_eq!(back, s);
        }
        assert!(SourceId::try_from("agent:x".to_string()).is_err());
        assert!(SourceId::try_from("martian".to_string()).is_err());
    }

    #[test]
    fn coverage_partitions_grid() {
        let corpus = demo::demo_corpus();
        let set = corpus.response_sets.get(&SourceId::HumanS1).unwrap();
        let participants: Vec<&Participant> = corpus.participants.iter().collect();
        let questions: Vec<&Question> = corpus.questions.iter().collect();
        let mask = set.coverage(&participants, &questions);
        assert_eq!(
            mask.present.len() + mask.missing.len(),
            participants.len() * questions.len()
        );
        let all: BTreeSet<_> = mask.present.iter().chain(mask.missing.iter()).collect();
        assert_eq!(all.len(), participants.len() * questions.len());
    }

    #[test]
    fn unknown_scratchpad_key_rejected_in_strict_mode() {
        let dir = tempfile::tempdir().unwrap();
        let mut corpus = demo::demo_corpus();
        corpus.participants[0]
            .scratchpad
            .insert("shoe_size".into(), ScratchValue::One("11".into()));
        corpus.save(dir.path()).unwrap();
        assert!(Corpus::load(dir.path()).is_err());
        assert!(Corpus::load_with_mode(dir.path(), false).is_ok());
    }
}
