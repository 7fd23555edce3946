//! Remote chat/embedding backend speaking the common OpenAI-style HTTPS JSON
//! protocol (`/chat/completions` and `/embeddings`).

use super::{Backend, BackendResponse, ChatRequest, GatewayError, ResponseContract, UserPart};
use serde::Deserialize;

#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    /// Base URL, e.g. `https://api.example.com/v1`.
    pub endpoint: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub supports_images: bool,
    pub timeout_secs: u64,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        HttpBackendConfig {
            endpoint: String::new(),
            api_key_env: "PANELSIM_API_KEY".into(),
            supports_images: true,
            timeout_secs: 120,
        }
    }
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    embed_model: String,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig, embed_model: String) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        Ok(HttpBackend {
            config,
            embed_model,
            client,
        })
    }

    fn api_key(&self) -> Result<String, GatewayError> {
        std::env::var(&self.config.api_key_env).map_err(|_| {
            GatewayError::BackendUnavailable(format!(
                "API key environment variable {} is not set",
                self.config.api_key_env
            ))
        })
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.config.endpoint.trim_end_matches('/'), path)
    }
}

/// Builds the wire payload for a chat completion. Split out so the request
/// shape is testable without a live endpoint.
pub fn chat_payload(request: &ChatRequest) -> serde_json::Value {
    let mut messages = Vec::new();
    if let Some(system) = &request.system_text {
        messages.push(serde_json::json!({ "role": "system", "content": system }));
    }
    let content: Vec<serde_json::Value> = request
        .user_parts
        .iter()
        .map(|part| match part {
            UserPart::Text(t) => serde_json::json!({ "type": "text", "text": t }),
            UserPart::ImageRef(path) => serde_json::json!({
                "type": "image_url",
                "image_url": { "url": format!("file://{}", path.display()) },
            }),
        })
        .collect();
    messages.push(serde_json::json!({ "role": "user", "content": content }));

    let mut payload = serde_json::json!({
        "model": request.model,
        "messages": messages,
        "temperature": request.decoding.temperature,
        "max_tokens": request.decoding.max_tokens,
    });
    if let Some(seed) = request.decoding.seed {
        payload["seed"] = serde_json::json!(seed);
    }
    if request.response_contract == ResponseContract::JsonObject {
        payload["response_format"] = serde_json::json!({ "type": "json_object" });
    }
    payload
}

#[derive(Deserialize)]
struct ChatCompletion {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

#[derive(Deserialize, Default)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

#[derive(Deserialize)]
struct EmbeddingReply {
    data: Vec<EmbeddingRow>,
}

#[derive(Deserialize)]
struct EmbeddingRow {
    embedding: Vec<f64>,
}

impl Backend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<BackendResponse, GatewayError> {
        let key = self.api_key()?;
        let payload = chat_payload(request);
        let reply = self
            .client
            .post(self.url("chat/completions"))
            .bearer_auth(key)
            .json(&payload)
            .send()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        if !reply.status().is_success() {
            return Err(GatewayError::BackendUnavailable(format!(
                "chat endpoint returned {}",
                reply.status()
            )));
        }
        let parsed: ChatCompletion = reply
            .json()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| GatewayError::BackendUnavailable("no choices returned".into()))?;
        let usage = parsed.usage.unwrap_or_default();
        Ok(BackendResponse {
            input_tokens: if usage.prompt_tokens > 0 {
                usage.prompt_tokens
            } else {
                super::approx_tokens(&request.full_text())
            },
            output_tokens: if usage.completion_tokens > 0 {
                usage.completion_tokens
            } else {
                super::approx_tokens(&choice.message.content)
            },
            text: choice.message.content,
        })
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        let key = self.api_key()?;
        let reply = self
            .client
            .post(self.url("embeddings"))
            .bearer_auth(key)
            .json(&serde_json::json!({ "model": self.embed_model, "input": text }))
            .send()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        if !reply.status().is_success() {
            return Err(GatewayError::BackendUnavailable(format!(
                "embeddings endpoint returned {}",
                reply.status()
            )));
        }
        let parsed: EmbeddingReply = reply
            .json()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        parsed
            .data
            .into_iter()
            .next()
            .map(|row| row.embedding)
            .ok_or_else(|| GatewayError::BackendUnavailable("no embedding returned".into()))
    }

    fn supports_images(&self) -> bool {
        self.config.supports_images
    }

    fn name(&self) -> &str {
        "http"
    }
}
