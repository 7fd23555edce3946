//! End-to-end orchestration: validate corpus → build memories → simulate
//! variants → evaluate → judge → emit the consolidated report.
//!
//! A single declarative config drives everything; every artifact is stamped
//! with the config hash, and stages whose artifacts already exist under the
//! same hash are skipped, so rerunning a completed manifest performs no new
//! gateway calls.

pub mod report;

use crate::agent::{self, AgentConfig, CallLogRecord, Variant, PROMPT_VERSION};
use crate::corpus::{
    read_response_set, write_response_set, Corpus, CorpusError, Participant, ResponseSet,
    ResponseSetMeta, SourceId,
};
use crate::gateway::{
    http::{HttpBackend, HttpBackendConfig},
    mock::MockBackend,
    Decoding, Gateway, GatewayConfig, GatewayError, ModelPrices, RateCard,
};
use crate::judge::{self, Dimension, JudgeError, JudgeItem, JudgeScore};
use crate::memory::{build_memory, MemoryError, MemoryStore};
use crate::metrics::MetricError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Agent(#[from] agent::AgentError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl PipelineError {
    /// Process exit code: 2 config, 3 data, 4 backend, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Corpus(_) | PipelineError::Metric(_) => 3,
            PipelineError::Gateway(_) => 4,
            PipelineError::Agent(agent::AgentError::Gateway(_)) => 4,
            PipelineError::Judge(JudgeError::Gateway(_)) => 4,
            _ => 1,
        }
    }
}

pub fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSection,
    #[serde(default)]
    pub gateway: GatewaySection,
    #[serde(default)]
    pub agents: AgentsSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub judge: JudgeSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    #[serde(default = "default_true")]
    pub strict: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GatewaySection {
    /// "mock" or "http".
    pub backend: String,
    pub chat_model: String,
    pub embed_model: String,
    pub embed_dimension: usize,
    pub seed: u64,
    pub max_in_flight: usize,
    pub cost_cap_dollars: Option<f64>,
    pub endpoint: Option<String>,
    pub api_key_env: String,
    /// model id → per-million-token prices
    pub rate_card: BTreeMap<String, ModelPrices>,
}

impl Default for GatewaySection {
    fn default() -> Self {
        let mut rate_card = BTreeMap::new();
        for model in ["mock-chat", "mock-chat-b", "mock-embed"] {
            rate_card.insert(
                model.to_string(),
                ModelPrices {
                    input_per_million: 0.0,
                    output_per_million: 0.0,
                },
            );
        }
        GatewaySection {
            backend: "mock".into(),
            chat_model: "mock-chat".into(),
            embed_model: "mock-embed".into(),
            embed_dimension: 64,
            seed: 42,
            max_in_flight: 4,
            cost_cap_dollars: None,
            endpoint: None,
            api_key_env: "PANELSIM_API_KEY".into(),
            rate_card,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AgentsSection {
    pub variants: Vec<Variant>,
    pub k_memories: usize,
    pub n_reflections: usize,
    pub include_image: bool,
    pub persist_reflections: bool,
    pub temperature: f64,
    pub max_tokens: u32,
    pub run_label: String,
    /// Defaults to the interview protocol's section headings.
    pub anchor_topics: Option<Vec<String>>,
}

impl Default for AgentsSection {
    fn default() -> Self {
        AgentsSection {
            variants: Variant::ALL.to_vec(),
            k_memories: 16,
            n_reflections: 8,
            include_image: false,
            persist_reflections: true,
            temperature: 0.0,
            max_tokens: 1024,
            run_label: "run1".into(),
            anchor_topics: None,
        }
    }
}

impl AgentsSection {
    pub fn agent_config(&self, variant: Variant, seed: u64) -> AgentConfig {
        let mut cfg = AgentConfig::new(variant);
        cfg.k_memories = self.k_memories;
        cfg.n_reflections = self.n_reflections;
        cfg.include_image = self.include_image;
        cfg.persist_reflections = self.persist_reflections;
        cfg.decoding = Decoding {
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            seed: Some(seed),
        };
        if let Some(topics) = &self.anchor_topics {
            cfg.anchor_topics = topics.clone();
        }
        cfg.run_label = self.run_label.clone();
        cfg
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    pub bootstrap_resamples: usize,
    pub seed: u64,
    /// Also run the optimal re-matching analysis per agent variant.
    pub rematch: bool,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            bootstrap_resamples: crate::metrics::DEFAULT_RESAMPLES,
            seed: 7,
            rematch: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct JudgeSection {
    pub enabled: bool,
    pub judge_a_model: String,
    pub judge_b_model: String,
    pub seed: u64,
}

impl Default for JudgeSection {
    fn default() -> Self {
        JudgeSection {
            enabled: true,
            judge_a_model: "mock-chat".into(),
            judge_b_model: "mock-chat-b".into(),
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        config.validated()
    }

    pub fn validated(self) -> Result<RunConfig, PipelineError> {
        if !matches!(self.gateway.backend.as_str(), "mock" | "http") {
            return Err(PipelineError::Config(format!(
                "unknown backend {:?} (expected \"mock\" or \"http\")",
                self.gateway.backend
            )));
        }
        if self.gateway.backend == "http" && self.gateway.endpoint.is_none() {
            return Err(PipelineError::Config(
                "http backend requires gateway.endpoint".into(),
            ));
        }
        if self.agents.variants.is_empty() {
            return Err(PipelineError::Config("agents.variants is empty".into()));
        }
        if self.metrics.bootstrap_resamples < crate::metrics::bootstrap::MIN_RESAMPLES {
            return Err(PipelineError::Config(format!(
                "metrics.bootstrap_resamples must be at least {}",
                crate::metrics::bootstrap::MIN_RESAMPLES
            )));
        }
        for model in [
            &self.gateway.chat_model,
            &self.gateway.embed_model,
            &self.judge.judge_a_model,
            &self.judge.judge_b_model,
        ] {
            if !self.gateway.rate_card.contains_key(model) {
                return Err(PipelineError::Config(format!(
                    "rate card has no entry for model {model:?}"
                )));
            }
        }
        Ok(self)
    }

    /// Hash over the behavioral settings and prompt version; stamped into
    /// every artifact so mixed-provenance inputs are caught.
    ///
    /// Settings that cannot change what a run computes stay out of the
    /// hash: corpus/output paths, the cost cap, and the in-flight limit.
    /// Raising the cap after a budget abort therefore resumes a partial run
    /// instead of re-paying for completed participants.
    pub fn config_hash(&self) -> String {
        let mut gateway = serde_json::to_value(&self.gateway).expect("gateway serializes");
        gateway["cost_cap_dollars"] = serde_json::Value::Null;
        gateway["max_in_flight"] = serde_json::Value::Null;
        let semantic = serde_json::json!([
            self.corpus.strict,
            gateway,
            self.agents,
            self.metrics,
            self.judge,
        ]);
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&semantic).expect("config serializes"));
        hasher.update(PROMPT_VERSION.as_bytes());
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build_gateway(&self) -> Result<Gateway, PipelineError> {
        let gw_config = GatewayConfig {
            default_chat_model: self.gateway.chat_model.clone(),
            embed_model: self.gateway.embed_model.clone(),
            rate_card: RateCard {
                models: self.gateway.rate_card.clone(),
            },
            cost_cap_dollars: self.gateway.cost_cap_dollars,
            max_in_flight: self.gateway.max_in_flight,
        };
        let backend: Box<dyn crate::gateway::Backend> = match self.gateway.backend.as_str() {
            "mock" => Box::new(MockBackend::new(
                self.gateway.seed,
                self.gateway.embed_dimension,
            )),
            "http" => Box::new(HttpBackend::new(
                HttpBackendConfig {
                    endpoint: self.gateway.endpoint.clone().unwrap_or_default(),
                    api_key_env: self.gateway.api_key_env.clone(),
                    ..Default::default()
                },
                self.gateway.embed_model.clone(),
            )?),
            other => return Err(PipelineError::Config(format!("unknown backend {other:?}"))),
        };
        Ok(Gateway::new(backend, gw_config))
    }

    /// Config for the bundled demo corpus with the mock backend, sized so the
    /// full pipeline finishes quickly offline.
    pub fn demo(corpus_dir: &Path, out_dir: &Path) -> RunConfig {
        RunConfig {
            corpus: CorpusSection {
                path: corpus_dir.to_path_buf(),
                strict: true,
            },
            gateway: GatewaySection::default(),
            agents: AgentsSection {
                k_memories: 6,
                n_reflections: 2,
                anchor_topics: Some(vec![
                    "AI Usage & Perceptions".into(),
                    "Current Workflow / Use Case with PDF".into(),
                ]),
                ..Default::default()
            },
            metrics: MetricsSection {
                bootstrap_resamples: 500,
                rematch: true,
                ..Default::default()
            },
            judge: JudgeSection::default(),
            output: OutputSection {
                dir: out_dir.to_path_buf(),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    Partial,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub detail: String,
    pub wall_ms: u128,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct CostTotals {
    pub dollars: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub calls: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub prompt_version: String,
    pub stages: Vec<StageRecord>,
    pub cost: CostTotals,
}

impl RunManifest {
    pub fn failed(&self) -> bool {
        self.stages.iter().any(|s| s.status == StageStatus::Failed)
    }

    fn push(&mut self, record: StageRecord) {
        self.stages.push(record);
    }
}

// ---------------------------------------------------------------------------
// Stage: memories
// ---------------------------------------------------------------------------

fn memory_path(out_dir: &Path, participant_id: &str) -> PathBuf {
    out_dir.join("memory").join(format!("{participant_id}.json"))
}

/// Builds (or loads cached) memory stores for every participant with turns.
/// The cache is keyed by the config hash via a sidecar file.
pub fn build_memories(
    corpus: &Corpus,
    gateway: &Gateway,
    out_dir: &Path,
    config_hash: &str,
) -> Result<(BTreeMap<String, MemoryStore>, bool), PipelineError> {
    let dir = out_dir.join("memory");
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let hash_file = dir.join(".config_hash");
    let cached = std::fs::read_to_string(&hash_file)
        .map(|h| h.trim() == config_hash)
        .unwrap_or(false);
    let mut stores = BTreeMap::new();
    let mut reused = true;
    for participant in &corpus.participants {
        if participant.turns.is_empty() {
            continue;
        }
        let path = memory_path(out_dir, &participant.id);
        if cached && path.exists() {
            stores.insert(participant.id.clone(), MemoryStore::load(&path)?);
            continue;
        }
        reused = false;
        let store = build_memory(participant, gateway)?;
        store.save(&path)?;
        stores.insert(participant.id.clone(), store);
    }
    std::fs::write(&hash_file, config_hash).map_err(|e| io_err(&hash_file, e))?;
    let reused = reused && !stores.is_empty();
    Ok((stores, reused))
}

// ---------------------------------------------------------------------------
// Stage: simulate
// ---------------------------------------------------------------------------

fn responses_path(out_dir: &Path, source: &SourceId) -> PathBuf {
    out_dir.join(format!("responses_{}.jsonl", source.slug()))
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub set: ResponseSet,
    pub completed_participants: Vec<String>,
    pub failed_participants: Vec<(String, String)>,
    /// False when the cached artifact was reused untouched.
    pub ran_calls: bool,
}

/// Simulates one variant over every corpus participant, resuming from any
/// existing artifact with a matching config hash. Participants run
/// concurrently, bounded by the gateway's in-flight limit.
pub fn simulate_variant(
    corpus: &Corpus,
    config: &RunConfig,
    variant: Variant,
    stores: &BTreeMap<String, MemoryStore>,
    gateway: &Gateway,
    out_dir: &Path,
) -> Result<SimulateOutcome, PipelineError> {
    let agent_config = config.agents.agent_config(variant, config.gateway.seed);
    let source = agent_config.source_id();
    let config_hash = config.config_hash();
    let path = responses_path(out_dir, &source);
    let questions: Vec<&crate::corpus::Question> = corpus.questions.iter().collect();

    let mut set = ResponseSet::new(source.clone());
    set.meta = ResponseSetMeta {
        config_hash: Some(config_hash.clone()),
        created_at: None,
        prompt_version: Some(PROMPT_VERSION.into()),
    };
    let mut already_complete: Vec<String> = Vec::new();
    if path.exists() {
        if let Ok(existing) = read_response_set(&path) {
            if existing.meta.config_hash.as_deref() == Some(config_hash.as_str())
                && existing.source == source
            {
                already_complete = existing.complete_participants(
                    corpus.participants.iter().map(|p| p.id.as_str()),
                    &questions,
                );
                for r in existing.responses() {
                    if already_complete.contains(&r.participant_id) {
                        set.insert(r.clone());
                    }
                }
            }
        }
    }

    let pending: Vec<&Participant> = corpus
        .participants
        .iter()
        .filter(|p| !already_complete.contains(&p.id))
        .collect();
    if pending.is_empty() {
        return Ok(SimulateOutcome {
            set,
            completed_participants: already_complete,
            failed_participants: Vec::new(),
            ran_calls: false,
        });
    }

    struct Done {
        participant_id: String,
        result: Result<agent::ParticipantRun, String>,
    }
    let next = Mutex::new(0usize);
    let results: Mutex<Vec<Done>> = Mutex::new(Vec::new());
    let workers = config.gateway.max_in_flight.clamp(1, pending.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = {
                    let mut guard = next.lock().unwrap();
                    let i = *guard;
                    *guard += 1;
                    i
                };
                let Some(participant) = pending.get(index) else {
                    break;
                };
                let store = stores.get(&participant.id).cloned();
                let result =
                    agent::run_concept_test(participant, &agent_config, corpus, gateway, store)
                        .map_err(|e| e.to_string());
                results.lock().unwrap().push(Done {
                    participant_id: participant.id.clone(),
                    result,
                });
            });
        }
    });

    let mut done = results.into_inner().unwrap();
    done.sort_by(|a, b| a.participant_id.cmp(&b.participant_id));
    let mut completed = already_complete;
    let mut failed = Vec::new();
    let runlog_dir = out_dir.join("runlog").join("simulate").join(variant.label());
    std::fs::create_dir_all(&runlog_dir).map_err(|e| io_err(&runlog_dir, e))?;
    for outcome in done {
        match outcome.result {
            Ok(run) => {
                write_call_log(&runlog_dir.join(format!("{}.jsonl", run.participant_id)), &run.log)?;
                for response in run.responses {
                    set.insert(response);
                }
                completed.push(run.participant_id);
            }
            Err(message) => failed.push((outcome.participant_id, message)),
        }
    }
    completed.sort();
    write_response_set(&path, &set)?;
    Ok(SimulateOutcome {
        set,
        completed_participants: completed,
        failed_participants: failed,
        ran_calls: true,
    })
}

fn write_call_log(path: &Path, records: &[CallLogRecord]) -> Result<(), PipelineError> {
    let mut lines = String::new();
    for record in records {
        lines.push_str(&serde_json::to_string(record).expect("log record serializes"));
        lines.push('\n');
    }
    std::fs::write(path, lines).map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------------
// Stage: judge
// ---------------------------------------------------------------------------

/// Source pair label used across evaluation and judging.
pub fn pair_label(source: &SourceId) -> String {
    match source {
        SourceId::HumanS1 => "human".into(),
        SourceId::HumanS2 => "human-human2".into(),
        SourceId::Agent { variant, .. } => format!("human-{variant}"),
    }
}

pub struct JudgeOutcome {
    pub scores: Vec<JudgeScore>,
    pub ran_calls: bool,
}

/// Judges every open-ended item of every (human, other-source) pair on all
/// four dimensions with both judges.
pub fn judge_pairs(
    corpus: &Corpus,
    config: &RunConfig,
    human: &ResponseSet,
    others: &[&ResponseSet],
    gateway: &Gateway,
    out_dir: &Path,
) -> Result<JudgeOutcome, PipelineError> {
    let config_hash = config.config_hash();
    let scores_path = out_dir.join("judge_scores.jsonl");
    if scores_path.exists() {
        if let Ok((meta, cached)) = read_judge_scores(&scores_path) {
            if meta.config_hash.as_deref() == Some(config_hash.as_str()) {
                return Ok(JudgeOutcome {
                    scores: cached,
                    ran_calls: false,
                });
            }
        }
    }

    let judges = [
        ("judge_a".to_string(), config.judge.judge_a_model.clone()),
        ("judge_b".to_string(), config.judge.judge_b_model.clone()),
    ];
    let decoding = Decoding {
        temperature: 0.0,
        max_tokens: 512,
        seed: Some(config.judge.seed),
    };

    // Build the item list per participant so participants can run in
    // parallel with deterministic per-participant logs.
    let mut items_by_participant: BTreeMap<String, Vec<JudgeItem>> = BTreeMap::new();
    for other in others {
        let pair = pair_label(&other.source);
        for question in corpus.open_ended_questions() {
            for participant in &corpus.participants {
                let (Some(text_ref), Some(text_alt)) = (
                    human
                        .get(&participant.id, &question.id)
                        .and_then(|r| r.value.text()),
                    other
                        .get(&participant.id, &question.id)
                        .and_then(|r| r.value.text()),
                ) else {
                    continue;
                };
                items_by_participant
                    .entry(participant.id.clone())
                    .or_default()
                    .push(JudgeItem {
                        pair: pair.clone(),
                        participant_id: participant.id.clone(),
                        question_id: question.id.clone(),
                        question_text: question.prompt_text.clone(),
                        text_ref: text_ref.to_string(),
                        text_alt: text_alt.to_string(),
                    });
            }
        }
    }

    let participants: Vec<(String, Vec<JudgeItem>)> = items_by_participant.into_iter().collect();
    struct Done {
        participant_id: String,
        scores: Vec<JudgeScore>,
        log: Vec<serde_json::Value>,
        error: Option<String>,
    }
    let next = Mutex::new(0usize);
    let collected: Mutex<Vec<Done>> = Mutex::new(Vec::new());
    let workers = config.gateway.max_in_flight.clamp(1, participants.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = {
                    let mut guard = next.lock().unwrap();
                    let i = *guard;
                    *guard += 1;
                    i
                };
                let Some((participant_id, items)) = participants.get(index) else {
                    break;
                };
                let mut scores = Vec::new();
                let mut log = Vec::new();
                let mut error = None;
                'outer: for item in items {
                    for dimension in Dimension::ALL {
                        for (judge_id, model) in &judges {
                            match judge::judge_pair(
                                item,
                                dimension,
                                judge_id,
                                model,
                                config.judge.seed,
                                decoding,
                                gateway,
                            ) {
                                Ok((score, request, raw)) => {
                                    log.push(serde_json::json!({
                                        "participant_id": item.participant_id,
                                        "pair": item.pair,
                                        "question_id": item.question_id,
                                        "dimension": dimension.label(),
                                        "judge_id": judge_id,
                                        "user_text": request.full_text(),
                                        "response_text": raw,
                                    }));
                                    scores.push(score);
                                }
                                Err(e) => {
                                    error = Some(e.to_string());
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
                collected.lock().unwrap().push(Done {
                    participant_id: participant_id.clone(),
                    scores,
                    log,
                    error,
                });
            });
        }
    });

    let mut done = collected.into_inner().unwrap();
    done.sort_by(|a, b| a.participant_id.cmp(&b.participant_id));
    let runlog_dir = out_dir.join("runlog").join("judge");
    std::fs::create_dir_all(&runlog_dir).map_err(|e| io_err(&runlog_dir, e))?;
    let mut scores = Vec::new();
    let mut first_error = None;
    for d in done {
        let log_path = runlog_dir.join(format!("{}.jsonl", d.participant_id));
        let mut lines = String::new();
        for entry in &d.log {
            lines.push_str(&entry.to_string());
            lines.push('\n');
        }
        std::fs::write(&log_path, lines).map_err(|e| io_err(&log_path, e))?;
        scores.extend(d.scores);
        if first_error.is_none() {
            first_error = d.error;
        }
    }
    if let Some(message) = first_error {
        return Err(PipelineError::Judge(JudgeError::ContractViolation(message)));
    }

    write_judge_scores(&scores_path, &config_hash, &scores)?;
    Ok(JudgeOutcome {
        scores,
        ran_calls: true,
    })
}

fn write_judge_scores(
    path: &Path,
    config_hash: &str,
    scores: &[JudgeScore],
) -> Result<(), PipelineError> {
    let mut lines = String::new();
    let meta = ResponseSetMeta {
        config_hash: Some(config_hash.to_string()),
        created_at: None,
        prompt_version: Some(PROMPT_VERSION.into()),
    };
    lines.push_str(&serde_json::json!({ "_meta": meta }).to_string());
    lines.push('\n');
    let mut sorted: Vec<&JudgeScore> = scores.iter().collect();
    sorted.sort_by_key(|s| {
        (
            s.pair.clone(),
            s.participant_id.clone(),
            s.question_id.clone(),
            s.dimension,
            s.judge_id.clone(),
        )
    });
    for score in sorted {
        lines.push_str(&serde_json::to_string(score).expect("score serializes"));
        lines.push('\n');
    }
    std::fs::write(path, lines).map_err(|e| io_err(path, e))
}

pub fn read_judge_scores(path: &Path) -> Result<(ResponseSetMeta, Vec<JudgeScore>), PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut meta = ResponseSetMeta::default();
    let mut scores = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 0 {
            if let Ok(v) = serde_json::from_str::<serde_json::Value>(line) {
                if let Some(m) = v.get("_meta") {
                    meta = serde_json::from_value(m.clone()).unwrap_or_default();
                    continue;
                }
            }
        }
        let score: JudgeScore = serde_json::from_str(line).map_err(|e| PipelineError::Io {
            path: path.display().to_string(),
            message: format!("line {}: {e}", lineno + 1),
        })?;
        scores.push(score);
    }
    Ok((meta, scores))
}

// ---------------------------------------------------------------------------
// run_all
// ---------------------------------------------------------------------------

fn record_stage(
    manifest: &mut RunManifest,
    name: &str,
    started: Instant,
    status: StageStatus,
    detail: impl Into<String>,
    artifacts: Vec<String>,
) {
    manifest.push(StageRecord {
        name: name.into(),
        status,
        detail: detail.into(),
        wall_ms: started.elapsed().as_millis(),
        artifacts,
    });
}

/// Runs the whole pipeline per the config. Stage errors are recorded in the
/// manifest and downstream stages are skipped; the function itself only
/// errors when the output directory cannot be used at all.
pub fn run_all(config: &RunConfig) -> Result<RunManifest, PipelineError> {
    let out_dir = &config.output.dir;
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let config_hash = config.config_hash();
    let mut manifest = RunManifest {
        config_hash: config_hash.clone(),
        prompt_version: PROMPT_VERSION.into(),
        stages: Vec::new(),
        cost: CostTotals::default(),
    };

    // validate
    let started = Instant::now();
    let corpus = match Corpus::load_with_mode(&config.corpus.path, config.corpus.strict) {
        Ok(corpus) => {
            record_stage(
                &mut manifest,
                "validate",
                started,
                StageStatus::Completed,
                format!(
                    "{} participants, {} concepts, {} questions, {} response sets",
                    corpus.participants.len(),
                    corpus.concepts.len(),
                    corpus.questions.len(),
                    corpus.response_sets.len()
                ),
                vec![],
            );
            corpus
        }
        Err(e) => {
            record_stage(
                &mut manifest,
                "validate",
                started,
                StageStatus::Failed,
                e.to_string(),
                vec![],
            );
            write_manifest(out_dir, &manifest)?;
            return Ok(manifest);
        }
    };

    let gateway = match config.build_gateway() {
        Ok(gw) => gw,
        Err(e) => {
            record_stage(
                &mut manifest,
                "gateway",
                Instant::now(),
                StageStatus::Failed,
                e.to_string(),
                vec![],
            );
            write_manifest(out_dir, &manifest)?;
            return Ok(manifest);
        }
    };

    // build memories (only needed when the interview variant runs)
    let started = Instant::now();
    let needs_memory = config.agents.variants.contains(&Variant::InterviewBased);
    let stores = if needs_memory {
        match build_memories(&corpus, &gateway, out_dir, &config_hash) {
            Ok((stores, reused)) => {
                record_stage(
                    &mut manifest,
                    "build_memories",
                    started,
                    if reused { StageStatus::Skipped } else { StageStatus::Completed },
                    format!("{} stores{}", stores.len(), if reused { " (cached)" } else { "" }),
                    vec!["memory/".into()],
                );
                stores
            }
            Err(e) => {
                record_stage(
                    &mut manifest,
                    "build_memories",
                    started,
                    StageStatus::Failed,
                    e.to_string(),
                    vec![],
                );
                write_manifest(out_dir, &manifest)?;
                return Ok(manifest);
            }
        }
    } else {
        BTreeMap::new()
    };

    // simulate each variant
    let mut agent_sets: Vec<ResponseSet> = Vec::new();
    let mut simulate_failed = false;
    for &variant in &config.agents.variants {
        let started = Instant::now();
        match simulate_variant(&corpus, config, variant, &stores, &gateway, out_dir) {
            Ok(outcome) => {
                let artifact = responses_path(out_dir, &outcome.set.source)
                    .file_name()
                    .unwrap()
                    .to_string_lossy()
                    .to_string();
                let status = if !outcome.failed_participants.is_empty() {
                    if outcome.completed_participants.is_empty() {
                        StageStatus::Failed
                    } else {
                        StageStatus::Partial
                    }
                } else if outcome.ran_calls {
                    StageStatus::Completed
                } else {
                    StageStatus::Skipped
                };
                let detail = if outcome.failed_participants.is_empty() {
                    format!(
                        "{} participants{}",
                        outcome.completed_participants.len(),
                        if outcome.ran_calls { "" } else { " (cached)" }
                    )
                } else {
                    format!(
                        "{} completed, failed: {}",
                        outcome.completed_participants.len(),
                        outcome
                            .failed_participants
                            .iter()
                            .map(|(p, e)| format!("{p} ({e})"))
                            .collect::<Vec<_>>()
                            .join("; ")
                    )
                };
                if status == StageStatus::Failed {
                    simulate_failed = true;
                } else {
                    agent_sets.push(outcome.set.clone());
                }
                record_stage(
                    &mut manifest,
                    &format!("simulate:{variant}"),
                    started,
                    status,
                    detail,
                    vec![artifact],
                );
            }
            Err(e) => {
                simulate_failed = true;
                record_stage(
                    &mut manifest,
                    &format!("simulate:{variant}"),
                    started,
                    StageStatus::Failed,
                    e.to_string(),
                    vec![],
                );
            }
        }
    }
    if simulate_failed && agent_sets.is_empty() {
        write_manifest(out_dir, &manifest)?;
        return Ok(manifest);
    }

    let Some(human_s1) = corpus.response_sets.get(&SourceId::HumanS1).cloned() else {
        record_stage(
            &mut manifest,
            "evaluate",
            Instant::now(),
            StageStatus::Failed,
            "corpus has no human_s1 response set",
            vec![],
        );
        write_manifest(out_dir, &manifest)?;
        return Ok(manifest);
    };
    let human_s2 = corpus.response_sets.get(&SourceId::HumanS2).cloned();

    // evaluate
    let started = Instant::now();
    let evaluation = match report::evaluate(config, &corpus, &human_s1, human_s2.as_ref(), &agent_sets)
    {
        Ok(eval) => {
            record_stage(
                &mut manifest,
                "evaluate",
                started,
                StageStatus::Completed,
                format!("{} source pairs", eval.pairs.len()),
                vec![],
            );
            Some(eval)
        }
        Err(e) => {
            record_stage(
                &mut manifest,
                "evaluate",
                started,
                StageStatus::Failed,
                e.to_string(),
                vec![],
            );
            None
        }
    };

    // judge
    let mut judge_scores: Vec<JudgeScore> = Vec::new();
    if config.judge.enabled && evaluation.is_some() {
        let started = Instant::now();
        let mut others: Vec<&ResponseSet> = Vec::new();
        if let Some(s2) = &human_s2 {
            others.push(s2);
        }
        others.extend(agent_sets.iter());
        match judge_pairs(&corpus, config, &human_s1, &others, &gateway, out_dir) {
            Ok(outcome) => {
                record_stage(
                    &mut manifest,
                    "judge",
                    started,
                    if outcome.ran_calls { StageStatus::Completed } else { StageStatus::Skipped },
                    format!(
                        "{} scores{}",
                        outcome.scores.len(),
                        if outcome.ran_calls { "" } else { " (cached)" }
                    ),
                    vec!["judge_scores.jsonl".into()],
                );
                judge_scores = outcome.scores;
            }
            Err(e) => {
                record_stage(
                    &mut manifest,
                    "judge",
                    started,
                    StageStatus::Failed,
                    e.to_string(),
                    vec![],
                );
            }
        }
    }

    // report
    if let Some(mut evaluation) = evaluation {
        let started = Instant::now();
        match report::attach_judgments(&mut evaluation, &judge_scores, config) {
            Ok(()) => {}
            Err(e) => {
                record_stage(
                    &mut manifest,
                    "report",
                    started,
                    StageStatus::Failed,
                    e.to_string(),
                    vec![],
                );
                write_manifest(out_dir, &manifest)?;
                return Ok(manifest);
            }
        }
        let ledger = gateway.ledger_snapshot();
        manifest.cost = CostTotals {
            dollars: ledger.total_dollars(),
            input_tokens: ledger.total_input_tokens(),
            output_tokens: ledger.total_output_tokens(),
            calls: ledger.calls.len(),
        };
        match report::emit_report(&evaluation, &ledger, out_dir) {
            Ok(artifacts) => record_stage(
                &mut manifest,
                "report",
                started,
                StageStatus::Completed,
                format!("{} artifacts", artifacts.len()),
                artifacts,
            ),
            Err(e) => record_stage(
                &mut manifest,
                "report",
                started,
                StageStatus::Failed,
                e.to_string(),
                vec![],
            ),
        }
    }

    write_manifest(out_dir, &manifest)?;
    Ok(manifest)
}

fn write_manifest(out_dir: &Path, manifest: &RunManifest) -> Result<(), PipelineError> {
    let path = out_dir.join("run_manifest.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(manifest).expect("manifest serializes"),
    )
    .map_err(|e| io_err(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;

    fn demo_setup() -> (tempfile::TempDir, RunConfig) {
        let dir = tempfile::tempdir().unwrap();
        let corpus_dir = dir.path().join("corpus");
        demo::demo_corpus().save(&corpus_dir).unwrap();
        let out_dir = dir.path().join("out");
        let config = RunConfig::demo(&corpus_dir, &out_dir);
        (dir, config)
    }

    #[test]
    fn config_round_trips_through_toml() {
        let (_dir, config) = demo_setup();
        let text = toml::to_string_pretty(&config).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.config_hash(), config.config_hash());
    }

    #[test]
    fn config_hash_changes_with_settings() {
        let (_dir, config) = demo_setup();
        let mut other = config.clone();
        other.agents.k_memories += 1;
        assert_ne!(config.config_hash(), other.config_hash());
    }

    #[test]
    fn unknown_backend_rejected() {
        let (_dir, mut config) = demo_setup();
        config.gateway.backend = "carrier-pigeon".into();
        assert!(matches!(
            config.validated(),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn simulate_resumes_from_cached_artifact() {
        let (_dir, config) = demo_setup();
        let corpus = Corpus::load(&config.corpus.path).unwrap();
        std::fs::create_dir_all(&config.output.dir).unwrap();
        let gateway = config.build_gateway().unwrap();
        let (stores, _) = build_memories(
            &corpus,
            &gateway,
            &config.output.dir,
            &config.config_hash(),
        )
        .unwrap();
        let first = simulate_variant(
            &corpus,
            &config,
            Variant::ScratchpadOnly,
            &stores,
            &gateway,
            &config.output.dir,
        )
        .unwrap();
        assert!(first.ran_calls);
        assert_eq!(first.completed_participants.len(), 5);
        let second = simulate_variant(
            &corpus,
            &config,
            Variant::ScratchpadOnly,
            &stores,
            &gateway,
            &config.output.dir,
        )
        .unwrap();
        assert!(!second.ran_calls, "cached artifact must be reused");
        assert_eq!(second.set, first.set);
    }
}
