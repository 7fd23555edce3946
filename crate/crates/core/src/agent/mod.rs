//! Simulated participants: prompt assembly, the reflection and answering
//! stages, and the three grounding variants.

pub mod answers;
pub mod prompts;

pub use answers::{match_option, CategoricalAnswer, OpenEndedAnswer};
pub use prompts::PROMPT_VERSION;

use crate::corpus::{
    Concept, Corpus, Participant, Question, QuestionKind, Response, ResponseValue, SourceId,
};
use crate::gateway::{ChatRequest, Decoding, Gateway, GatewayError, ResponseContract, UserPart};
use crate::memory::{MemoryError, MemoryStore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Interview protocol section headings; the default anchoring topics for
/// reflection generation.
pub const DEFAULT_ANCHOR_TOPICS: &[&str] = &[
    "Background & Context",
    "Overview Working with documents",
    "AI Usage & Perceptions",
    "Perceptions on risk and trust",
    "Expectations and potential",
    "Current Workflow / Use Case with PDF",
    "Reflection",
];

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("[{context}] answer contract violated: {message}")]
    ContractViolation { context: String, message: String },
    #[error("[{context}] response {response:?} matches no answer option")]
    UnmappableOption { context: String, response: String },
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    InterviewBased,
    ScratchpadOnly,
    NoInformation,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::InterviewBased => "interview_based",
            Variant::ScratchpadOnly => "scratchpad_only",
            Variant::NoInformation => "no_information",
        }
    }

    pub const ALL: [Variant; 3] = [
        Variant::InterviewBased,
        Variant::ScratchpadOnly,
        Variant::NoInformation,
    ];
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "interview_based" => Ok(Variant::InterviewBased),
            "scratchpad_only" => Ok(Variant::ScratchpadOnly),
            "no_information" => Ok(Variant::NoInformation),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AgentConfig {
    pub variant: Variant,
    /// Memories retrieved per query. Forced to 0 for the scratchpad-only and
    /// no-information variants.
    pub k_memories: usize,
    /// Reflections requested per anchor topic; reflections only run for the
    /// interview-based variant, which is the only one with a memory store to
    /// draw observations from and write back into.
    pub n_reflections: usize,
    pub include_image: bool,
    pub persist_reflections: bool,
    pub decoding: Decoding,
    pub anchor_topics: Vec<String>,
    /// Run label folded into the response source id (`agent:<variant>:<run>`).
    pub run_label: String,
}

impl AgentConfig {
    pub fn new(variant: Variant) -> Self {
        AgentConfig {
            variant,
            k_memories: 16,
            n_reflections: 8,
            include_image: false,
            persist_reflections: true,
            decoding: Decoding::default(),
            anchor_topics: DEFAULT_ANCHOR_TOPICS.iter().map(|s| s.to_string()).collect(),
            run_label: "run1".into(),
        }
    }

    /// Applies the variant invariants: non-interview variants retrieve
    /// nothing and generate no reflections.
    pub fn normalized(&self) -> AgentConfig {
        let mut cfg = self.clone();
        if cfg.variant != Variant::InterviewBased {
            cfg.k_memories = 0;
            cfg.n_reflections = 0;
        }
        cfg
    }

    pub fn source_id(&self) -> SourceId {
        SourceId::Agent {
            variant: self.variant.label().to_string(),
            run: self.run_label.clone(),
        }
    }
}

/// One logged gateway call.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CallLogRecord {
    pub participant_id: String,
    pub stage: String,
    pub key: String,
    pub system_text: Option<String>,
    pub user_text: String,
    pub image_ref: Option<String>,
    pub response_text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub attempts: usize,
}

/// Everything produced by simulating one participant.
#[derive(Debug, Clone)]
pub struct ParticipantRun {
    pub participant_id: String,
    pub responses: Vec<Response>,
    pub log: Vec<CallLogRecord>,
    pub retrieve_calls: usize,
    pub reflections_generated: usize,
}

fn log_call(
    log: &mut Vec<CallLogRecord>,
    participant_id: &str,
    stage: &str,
    key: &str,
    request: &ChatRequest,
    response_text: &str,
    input_tokens: u64,
    output_tokens: u64,
    attempts: usize,
) {
    let user_text = request
        .user_parts
        .iter()
        .filter_map(|p| match p {
            UserPart::Text(t) => Some(t.as_str()),
            UserPart::ImageRef(_) => None,
        })
        .collect::<Vec<_>>()
        .join("\n\n");
    let image_ref = request.user_parts.iter().find_map(|p| match p {
        UserPart::ImageRef(path) => Some(path.display().to_string()),
        UserPart::Text(_) => None,
    });
    log.push(CallLogRecord {
        participant_id: participant_id.to_string(),
        stage: stage.to_string(),
        key: key.to_string(),
        system_text: request.system_text.clone(),
        user_text,
        image_ref,
        response_text: response_text.to_string(),
        input_tokens,
        output_tokens,
        attempts,
    });
}

/// Runs a JSON-contract request and validates the parsed schema, retrying
/// with the violation appended up to the same budget the gateway uses for
/// raw JSON violations.
fn call_with_schema<T>(
    gateway: &Gateway,
    request: &ChatRequest,
    parse: impl Fn(&str) -> Result<T, AgentError>,
) -> Result<(T, String, u64, u64, usize), AgentError> {
    let mut attempt_request = request.clone();
    let mut attempts_used = 0;
    let mut last_err = None;
    for _ in 0..crate::gateway::JSON_RETRY_BUDGET {
        let outcome = gateway.complete_chat(&attempt_request)?;
        attempts_used += outcome.attempts;
        match parse(&outcome.text) {
            Ok(value) => {
                return Ok((
                    value,
                    outcome.text,
                    outcome.input_tokens,
                    outcome.output_tokens,
                    attempts_used,
                ))
            }
            Err(err) => {
                attempt_request = request.clone();
                attempt_request.user_parts.push(UserPart::Text(format!(
                    "Your previous reply did not follow the required schema ({err}). Reply again following the output format exactly."
                )));
                last_err = Some(err);
            }
        }
    }
    Err(last_err.expect("retry loop ran at least once"))
}

/// Generates `n` reflections per anchor topic from the retrieved
/// observations and scratchpad. One gateway call per topic; every call must
/// yield exactly `n` reflection strings.
pub fn generate_reflections(
    store: &MemoryStore,
    participant: &Participant,
    anchor_topics: &[String],
    n: usize,
    k_memories: usize,
    decoding: Decoding,
    gateway: &Gateway,
    log: &mut Vec<CallLogRecord>,
    retrieve_calls: &mut usize,
) -> Result<Vec<String>, AgentError> {
    let mut all = Vec::with_capacity(n * anchor_topics.len());
    for topic in anchor_topics {
        let retrieved = if k_memories > 0 {
            *retrieve_calls += 1;
            store.retrieve(topic, k_memories, gateway)?
        } else {
            Vec::new()
        };
        let observations = prompts::render_interview_block(&participant.scratchpad, &retrieved);
        let prompt = prompts::render_reflection_prompt(&observations, n, topic);
        let mut request = ChatRequest::new(prompt)
            .with_contract(ResponseContract::JsonObject)
            .with_trace_key(format!("{}|reflect|{topic}", participant.id));
        request.decoding = decoding;
        let context = format!("reflection for {} on topic {topic:?}", participant.id);
        let (reflections, raw, tokens_in, tokens_out, attempts) =
            call_with_schema(gateway, &request, |text| {
                answers::parse_reflections(text, n, &context)
            })?;
        log_call(
            log,
            &participant.id,
            "reflection",
            topic,
            &request,
            &raw,
            tokens_in,
            tokens_out,
            attempts,
        );
        all.extend(reflections);
    }
    Ok(all)
}

fn transcript_block(
    variant: Variant,
    participant: &Participant,
    retrieved: &[crate::memory::MemoryRecord],
) -> String {
    match variant {
        Variant::InterviewBased => {
            prompts::render_interview_block(&participant.scratchpad, retrieved)
        }
        Variant::ScratchpadOnly => prompts::render_scratchpad_block(&participant.scratchpad),
        Variant::NoInformation => prompts::render_no_information_block(),
    }
}

/// Administers the full instrument (every concept, every question) to one
/// simulated participant and returns its responses with a complete call log.
///
/// Questions run sequentially so persisted reflections see a consistent
/// memory snapshot; parallelism belongs at the participant level.
pub fn run_concept_test(
    participant: &Participant,
    config: &AgentConfig,
    corpus: &Corpus,
    gateway: &Gateway,
    store: Option<MemoryStore>,
) -> Result<ParticipantRun, AgentError> {
    let config = config.normalized();
    if config.variant == Variant::InterviewBased && store.is_none() {
        return Err(AgentError::InvalidConfig(
            "interview_based agents require a memory store".into(),
        ));
    }
    let source = config.source_id();
    let mut store = store;
    let mut log = Vec::new();
    let mut retrieve_calls = 0;
    let mut reflections_generated = 0;
    let mut responses = Vec::new();

    for concept in &corpus.concepts {
        if config.n_reflections > 0 {
            let current = store.as_ref().expect("interview variant has a store");
            let reflections = generate_reflections(
                current,
                participant,
                &config.anchor_topics,
                config.n_reflections,
                config.k_memories,
                config.decoding,
                gateway,
                &mut log,
                &mut retrieve_calls,
            )?;
            reflections_generated += reflections.len();
            if config.persist_reflections {
                let mut grown = current.clone();
                for text in &reflections {
                    grown = grown.add_reflection(text, gateway)?;
                }
                store = Some(grown);
            }
        }

        for question in corpus.questions_for_concept(&concept.id) {
            let retrieved = match (&store, config.k_memories) {
                (Some(s), k) if k > 0 => {
                    retrieve_calls += 1;
                    let query = format!("{}: {}", concept.name, question.prompt_text);
                    s.retrieve(&query, k, gateway)?
                }
                _ => Vec::new(),
            };
            let response = answer_question(
                participant,
                &config,
                concept,
                question,
                &retrieved,
                gateway,
                &source,
                &mut log,
            )?;
            responses.push(response);
        }
    }

    Ok(ParticipantRun {
        participant_id: participant.id.clone(),
        responses,
        log,
        retrieve_calls,
        reflections_generated,
    })
}

fn answer_question(
    participant: &Participant,
    config: &AgentConfig,
    concept: &Concept,
    question: &Question,
    retrieved: &[crate::memory::MemoryRecord],
    gateway: &Gateway,
    source: &SourceId,
    log: &mut Vec<CallLogRecord>,
) -> Result<Response, AgentError> {
    let block = transcript_block(config.variant, participant, retrieved);
    let system = prompts::render_system_prompt(&block, concept);
    let context = format!("{} answering {}", participant.id, question.id);

    let user_prompt = match question.kind {
        QuestionKind::OpenEnded => prompts::render_open_ended_prompt(&question.prompt_text),
        _ => {
            let options = question.options.as_ref().ok_or_else(|| {
                AgentError::InvalidConfig(format!("question {} lacks options", question.id))
            })?;
            prompts::render_categorical_prompt(&question.prompt_text, options)
        }
    };
    let mut request = ChatRequest::new(user_prompt)
        .with_system(system)
        .with_contract(ResponseContract::JsonObject)
        .with_trace_key(format!(
            "{}|{}|{}",
            participant.id,
            question.id,
            config.variant.label()
        ));
    request.decoding = config.decoding;
    if config.include_image {
        if let Some(image) = &concept.image_ref {
            request = request.with_image(image.clone());
        }
    }

    let value = match question.kind {
        QuestionKind::OpenEnded => {
            let (answer, raw, tin, tout, attempts) = call_with_schema(gateway, &request, |text| {
                answers::parse_open_ended(text, &context)
            })?;
            log_call(
                log,
                &participant.id,
                "answer",
                &question.id,
                &request,
                &raw,
                tin,
                tout,
                attempts,
            );
            ResponseValue::Text {
                text: answer.response,
            }
        }
        _ => {
            let options = question.options.as_ref().expect("checked above");
            let (answer, raw, tin, tout, attempts) = call_with_schema(gateway, &request, |text| {
                answers::parse_categorical(text, &context)
            })?;
            log_call(
                log,
                &participant.id,
                "answer",
                &question.id,
                &request,
                &raw,
                tin,
                tout,
                attempts,
            );
            let position = match_option(&answer.response, options).ok_or_else(|| {
                AgentError::UnmappableOption {
                    context: context.clone(),
                    response: answer.response.clone(),
                }
            })?;
            let category = question
                .value_for_option(position)
                .expect("position bounded by options length");
            ResponseValue::Category { category }
        }
    };

    Ok(Response {
        source: source.clone(),
        participant_id: participant.id.clone(),
        question_id: question.id.clone(),
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::gateway::{mock::MockBackend, GatewayConfig};
    use crate::memory::build_memory;

    fn gateway() -> Gateway {
        Gateway::new(Box::new(MockBackend::new(11, 32)), GatewayConfig::default())
    }

    fn small_config(variant: Variant) -> AgentConfig {
        let mut cfg = AgentConfig::new(variant);
        cfg.k_memories = 4;
        cfg.n_reflections = 2;
        cfg.anchor_topics = vec!["AI Usage & Perceptions".into()];
        cfg
    }

    #[test]
    fn full_instrument_yields_sixty_responses() {
        let corpus = demo::demo_corpus();
        let gw = gateway();
        let participant = &corpus.participants[0];
        let store = build_memory(participant, &gw).unwrap();
        let cfg = small_config(Variant::InterviewBased);
        let run = run_concept_test(participant, &cfg, &corpus, &gw, Some(store)).unwrap();
        assert_eq!(run.responses.len(), 60);
        assert!(run.reflections_generated > 0);
        // every response validates against the corpus
        let mut set = crate::corpus::ResponseSet::new(cfg.source_id());
        for r in &run.responses {
            assert!(set.insert(r.clone()), "no duplicate cells");
        }
        let mut corpus_with = corpus.clone();
        corpus_with.response_sets.insert(cfg.source_id(), set);
        let mut violations = Vec::new();
        corpus_with.validate(true, &mut violations);
        assert!(violations.is_empty(), "violations: {violations:?}");
    }

    #[test]
    fn identical_config_and_seed_identical_responses() {
        let corpus = demo::demo_corpus();
        let participant = &corpus.participants[1];
        let cfg = small_config(Variant::InterviewBased);
        let run = |seed| {
            let gw = Gateway::new(Box::new(MockBackend::new(seed, 32)), GatewayConfig::default());
            let store = build_memory(participant, &gw).unwrap();
            run_concept_test(participant, &cfg, &corpus, &gw, Some(store))
                .unwrap()
                .responses
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn scratchpad_only_never_retrieves() {
        let corpus = demo::demo_corpus();
        let gw = gateway();
        let participant = &corpus.participants[0];
        let mut cfg = small_config(Variant::ScratchpadOnly);
        cfg.k_memories = 16; // must be forced back to zero
        let run = run_concept_test(participant, &cfg, &corpus, &gw, None).unwrap();
        assert_eq!(run.retrieve_calls, 0);
        assert_eq!(run.reflections_generated, 0);
        assert_eq!(run.responses.len(), 60);
    }

    #[test]
    fn interview_variant_requires_store() {
        let corpus = demo::demo_corpus();
        let gw = gateway();
        let cfg = small_config(Variant::InterviewBased);
        let err = run_concept_test(&corpus.participants[0], &cfg, &corpus, &gw, None).unwrap_err();
        assert!(matches!(err, AgentError::InvalidConfig(_)));
    }

    #[test]
    fn no_information_prompts_carry_no_participant_bytes() {
        let corpus = demo::demo_corpus();
        let gw = gateway();
        let participant = &corpus.participants[0];
        let cfg = small_config(Variant::NoInformation);
        let run = run_concept_test(participant, &cfg, &corpus, &gw, None).unwrap();
        let mut needles: Vec<String> = Vec::new();
        for turn in &participant.turns {
            needles.push(turn.interviewer_text.clone());
            needles.push(turn.participant_text.clone());
        }
        for value in participant.scratchpad.values() {
            for item in value.items() {
                needles.push(item.to_string());
            }
        }
        for record in &run.log {
            let prompt = format!(
                "{}\n{}",
                record.system_text.as_deref().unwrap_or(""),
                record.user_text
            );
            for needle in &needles {
                assert!(
                    !prompt.contains(needle.as_str()),
                    "participant-derived text {needle:?} leaked into a no_information prompt"
                );
            }
        }
    }

    #[test]
    fn include_image_controls_image_parts() {
        let corpus = demo::demo_corpus();
        let gw = gateway();
        let participant = &corpus.participants[0];
        let mut cfg = small_config(Variant::ScratchpadOnly);
        cfg.include_image = false;
        let run = run_concept_test(participant, &cfg, &corpus, &gw, None).unwrap();
        assert!(run.log.iter().all(|r| r.image_ref.is_none()));
    }

    #[test]
    fn reflection_retry_exhaustion_surfaces_topic() {
        use crate::gateway::mock::ScriptedBackend;
        let gw = Gateway::new(
            Box::new(ScriptedBackend::new(vec![
                "{\"reflection\": [\"only one\"]}".into(); 9
            ])),
            GatewayConfig::default(),
        );
        let corpus = demo::demo_corpus();
        let participant = &corpus.participants[0];
        let store = {
            let mock_gw = gateway();
            build_memory(participant, &mock_gw).unwrap()
        };
        let mut log = Vec::new();
        let mut retrieves = 0;
        let err = generate_reflections(
            &store,
            participant,
            &["Expectations and potential".to_string()],
            3,
            0,
            Decoding::default(),
            &gw,
            &mut log,
            &mut retrieves,
        )
        .unwrap_err();
        match err {
            AgentError::ContractViolation { context, message } => {
                assert!(context.contains("Expectations and potential"));
                assert!(message.contains("expected exactly 3"));
            }
            other => panic!("expected ContractViolation, got {other}"),
        }
    }
}
