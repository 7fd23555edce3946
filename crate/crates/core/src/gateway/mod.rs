//! Single abstraction over chat-completion and text-embedding backends, with
//! a deterministic offline mock and a token/cost ledger.
//!
//! The [`Gateway`] owns a backend, enforces the JSON response contract with a
//! bounded retry budget, checks the cost cap before dispatch, and records
//! every call in a [`CostLedger`].

pub mod http;
pub mod mock;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use thiserror::Error;

/// Attempts allowed per request when the JSON contract is violated.
pub const JSON_RETRY_BUDGET: usize = 3;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("response contract violated after {attempts} attempt(s): {message}")]
    ContractViolation { attempts: usize, message: String },
    #[error("cost cap {cap_dollars} USD would be exceeded (ledger at {spent_dollars} USD)")]
    BudgetExceeded {
        cap_dollars: f64,
        spent_dollars: f64,
    },
    #[error("no rate card entry for model {0:?}")]
    UnknownModel(String),
    #[error("unsupported request: {0}")]
    UnsupportedRequest(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum UserPart {
    Text(String),
    ImageRef(PathBuf),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Decoding {
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for Decoding {
    fn default() -> Self {
        // Temperature 0 with a fixed seed maximizes reproducibility where the
        // backend honors it.
        Decoding {
            temperature: 0.0,
            max_tokens: 1024,
            seed: Some(0),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ResponseContract {
    FreeText,
    JsonObject,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChatRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_text: Option<String>,
    pub user_parts: Vec<UserPart>,
    pub decoding: Decoding,
    pub response_contract: ResponseContract,
    /// Model override; the gateway's default chat model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Caller-supplied identity for logs and for the mock backend's answer
    /// distribution. Never rendered into the prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_key: Option<String>,
}

impl ChatRequest {
    pub fn new(user_text: impl Into<String>) -> Self {
        ChatRequest {
            system_text: None,
            user_parts: vec![UserPart::Text(user_text.into())],
            decoding: Decoding::default(),
            response_contract: ResponseContract::FreeText,
            model: None,
            trace_key: None,
        }
    }

    pub fn with_system(mut self, system: impl Into<String>) -> Self {
        self.system_text = Some(system.into());
        self
    }

    pub fn with_contract(mut self, contract: ResponseContract) -> Self {
        self.response_contract = contract;
        self
    }

    pub fn with_trace_key(mut self, key: impl Into<String>) -> Self {
        self.trace_key = Some(key.into());
        self
    }

    pub fn with_image(mut self, path: PathBuf) -> Self {
        self.user_parts.push(UserPart::ImageRef(path));
        self
    }

    /// All text content, system first, parts joined by blank lines.
    pub fn full_text(&self) -> String {
        let mut chunks: Vec<&str> = Vec::new();
        if let Some(s) = &self.system_text {
            chunks.push(s);
        }
        for part in &self.user_parts {
            if let UserPart::Text(t) = part {
                chunks.push(t);
            }
        }
        chunks.join("\n\n")
    }

    pub fn has_image(&self) -> bool {
        self.user_parts
            .iter()
            .any(|p| matches!(p, UserPart::ImageRef(_)))
    }
}

/// What a backend returns for one completion call.
#[derive(Debug, Clone)]
pub struct BackendResponse {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

/// A chat completion + embedding provider.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<BackendResponse, GatewayError>;
    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError>;
    fn supports_images(&self) -> bool;
    fn name(&self) -> &str;
}

/// Per-million-token prices for one model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ModelPrices {
    pub input_per_million: f64,
    pub output_per_million: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct RateCard {
    pub models: BTreeMap<String, ModelPrices>,
}

impl RateCard {
    pub fn free(models: &[&str]) -> RateCard {
        RateCard {
            models: models
                .iter()
                .map(|m| {
                    (
                        m.to_string(),
                        ModelPrices {
                            input_per_million: 0.0,
                            output_per_million: 0.0,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn prices(&self, model: &str) -> Result<ModelPrices, GatewayError> {
        self.models
            .get(model)
            .copied()
            .ok_or_else(|| GatewayError::UnknownModel(model.to_string()))
    }
}

/// One priced backend call.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CallRecord {
    pub model_id: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub unit_prices: ModelPrices,
    pub dollars: f64,
}

impl CallRecord {
    pub fn new(model_id: &str, input_tokens: u64, output_tokens: u64, prices: ModelPrices) -> Self {
        CallRecord {
            model_id: model_id.to_string(),
            input_tokens,
            output_tokens,
            unit_prices: prices,
            dollars: dollars_for(input_tokens, output_tokens, prices),
        }
    }
}

fn dollars_for(input_tokens: u64, output_tokens: u64, prices: ModelPrices) -> f64 {
    input_tokens as f64 * prices.input_per_million / 1e6
        + output_tokens as f64 * prices.output_per_million / 1e6
}

/// Append-only record of backend calls with running totals.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct CostLedger {
    pub calls: Vec<CallRecord>,
}

impl CostLedger {
    pub fn record(&mut self, call: CallRecord) {
        self.calls.push(call);
    }

    pub fn total_dollars(&self) -> f64 {
        self.calls.iter().map(|c| c.dollars).sum()
    }

    pub fn total_input_tokens(&self) -> u64 {
        self.calls.iter().map(|c| c.input_tokens).sum()
    }

    pub fn total_output_tokens(&self) -> u64 {
        self.calls.iter().map(|c| c.output_tokens).sum()
    }

    pub fn merge(&mut self, other: &CostLedger) {
        self.calls.extend(other.calls.iter().cloned());
    }
}

/// Re-prices a ledger against `rate_card` and returns the exact total.
pub fn estimate_cost(ledger: &CostLedger, rate_card: &RateCard) -> Result<f64, GatewayError> {
    let mut total = 0.0;
    for call in &ledger.calls {
        let prices = rate_card.prices(&call.model_id)?;
        total += dollars_for(call.input_tokens, call.output_tokens, prices);
    }
    Ok(total)
}

/// Rough token estimate used for pre-dispatch budget checks: one token per
/// four bytes, at least one for non-empty text.
pub fn approx_tokens(text: &str) -> u64 {
    if text.is_empty() {
        0
    } else {
        (text.len() as u64).div_ceil(4)
    }
}

/// Successful completion outcome.
#[derive(Debug, Clone)]
pub struct ChatOutcome {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// How many backend calls it took (>1 only after contract retries).
    pub attempts: usize,
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub default_chat_model: String,
    pub embed_model: String,
    pub rate_card: RateCard,
    /// Total spend allowed across the gateway's lifetime; `None` disables the cap.
    pub cost_cap_dollars: Option<f64>,
    pub max_in_flight: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            default_chat_model: "mock-chat".into(),
            embed_model: "mock-embed".into(),
            rate_card: RateCard::free(&["mock-chat", "mock-chat-b", "mock-embed"]),
            cost_cap_dollars: None,
            max_in_flight: 4,
        }
    }
}

struct InFlightGate {
    limit: usize,
    state: Mutex<usize>,
    cv: Condvar,
}

impl InFlightGate {
    fn new(limit: usize) -> Self {
        InFlightGate {
            limit: limit.max(1),
            state: Mutex::new(0),
            cv: Condvar::new(),
        }
    }

    fn enter(&self) -> InFlightGuard<'_> {
        let mut n = self.state.lock().unwrap();
        while *n >= self.limit {
            n = self.cv.wait(n).unwrap();
        }
        *n += 1;
        InFlightGuard { gate: self }
    }
}

struct InFlightGuard<'a> {
    gate: &'a InFlightGate,
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut n = self.gate.state.lock().unwrap();
        *n -= 1;
        self.gate.cv.notify_one();
    }
}

/// Thread-safe front door for all model calls.
pub struct Gateway {
    backend: Box<dyn Backend>,
    config: GatewayConfig,
    ledger: Mutex<CostLedger>,
    gate: InFlightGate,
}

impl Gateway {
    pub fn new(backend: Box<dyn Backend>, config: GatewayConfig) -> Self {
        let gate = InFlightGate::new(config.max_in_flight);
        Gateway {
            backend,
            config,
            ledger: Mutex::new(CostLedger::default()),
            gate,
        }
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub fn ledger_snapshot(&self) -> CostLedger {
        self.ledger.lock().unwrap().clone()
    }

    pub fn total_spent(&self) -> f64 {
        self.ledger.lock().unwrap().total_dollars()
    }

    fn check_budget(&self, request: &ChatRequest, prices: ModelPrices) -> Result<(), GatewayError> {
        let Some(cap) = self.config.cost_cap_dollars else {
            return Ok(());
        };
        let spent = self.total_spent();
        // Projection uses input tokens only; it is a floor on what the call
        // will cost, so exceeding it here means the cap is certainly blown.
        let projected =
            spent + approx_tokens(&request.full_text()) as f64 * prices.input_per_million / 1e6;
        if projected > cap {
            return Err(GatewayError::BudgetExceeded {
                cap_dollars: cap,
                spent_dollars: spent,
            });
        }
        Ok(())
    }

    /// Runs one chat completion, enforcing image support, the cost cap, and
    /// (for [`ResponseContract::JsonObject`]) that the reply parses as a
    /// single JSON object, retrying up to [`JSON_RETRY_BUDGET`] attempts with
    /// the violation message appended.
    pub fn complete_chat(&self, request: &ChatRequest) -> Result<ChatOutcome, GatewayError> {
        if request.user_parts.is_empty() {
            return Err(GatewayError::UnsupportedRequest(
                "request has no user parts".into(),
            ));
        }
        if request.has_image() && !self.backend.supports_images() {
            return Err(GatewayError::UnsupportedRequest(format!(
                "backend {:?} does not accept image parts",
                self.backend.name()
            )));
        }
        let model = request
            .model
            .clone()
            .unwrap_or_else(|| self.config.default_chat_model.clone());
        let prices = self.config.rate_card.prices(&model)?;

        let mut attempt_request = request.clone();
        attempt_request.model = Some(model.clone());
        let mut last_violation = String::new();
        let mut total_in = 0;
        let mut total_out = 0;

        for attempt in 1..=JSON_RETRY_BUDGET {
            self.check_budget(&attempt_request, prices)?;
            let response = {
                let _guard = self.gate.enter();
                self.backend.complete(&attempt_request)?
            };
            {
                let mut ledger = self.ledger.lock().unwrap();
                ledger.record(CallRecord::new(
                    &model,
                    response.input_tokens,
                    response.output_tokens,
                    prices,
                ));
            }
            total_in += response.input_tokens;
            total_out += response.output_tokens;

            match request.response_contract {
                ResponseContract::FreeText => {
                    return Ok(ChatOutcome {
                        text: response.text,
                        input_tokens: total_in,
                        output_tokens: total_out,
                        attempts: attempt,
                    })
                }
                ResponseContract::JsonObject => match extract_json_object(&response.text) {
                    Ok(clean) => {
                        return Ok(ChatOutcome {
                            text: clean,
                            input_tokens: total_in,
                            output_tokens: total_out,
                            attempts: attempt,
                        })
                    }
                    Err(message) => {
                        last_violation = message;
                        attempt_request = request.clone();
                        attempt_request.model = Some(model.clone());
                        attempt_request.user_parts.push(UserPart::Text(format!(
                            "Your previous reply was not a single valid JSON object ({last_violation}). Reply again with exactly one JSON object and nothing else."
                        )));
                    }
                },
            }
        }
        Err(GatewayError::ContractViolation {
            attempts: JSON_RETRY_BUDGET,
            message: last_violation,
        })
    }

    /// Embeds non-empty text into a unit-norm vector. Normalization is
    /// applied locally regardless of what the backend returns.
    pub fn embed_text(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::UnsupportedRequest(
                "cannot embed empty text".into(),
            ));
        }
        let raw = {
            let _guard = self.gate.enter();
            self.backend.embed(text)?
        };
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(GatewayError::BackendUnavailable(
                "embedding backend returned a zero vector".into(),
            ));
        }
        Ok(raw.into_iter().map(|x| x / norm).collect())
    }
}

/// Accepts a bare JSON object, optionally wrapped in Markdown code fences,
/// and returns it re-verified as a single object.
fn extract_json_object(text: &str) -> Result<String, String> {
    let mut body = text.trim();
    if body.starts_with("```") {
        body = body.trim_start_matches("```json").trim_start_matches("```");
        if let Some(end) = body.rfind("```") {
            body = &body[..end];
        }
        body = body.trim();
    }
    match serde_json::from_str::<serde_json::Value>(body) {
        Ok(serde_json::Value::Object(_)) => Ok(body.to_string()),
        Ok(other) => Err(format!(
            "expected a JSON object, got {}",
            match other {
                serde_json::Value::Array(_) => "an array",
                serde_json::Value::String(_) => "a string",
                serde_json::Value::Number(_) => "a number",
                serde_json::Value::Bool(_) => "a boolean",
                serde_json::Value::Null => "null",
                serde_json::Value::Object(_) => unreachable!(),
            }
        )),
        Err(e) => Err(format!("invalid JSON: {e}")),
    }
}
