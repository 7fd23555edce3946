//! Parsing and validation of the structured answers the agent must emit.

use super::AgentError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Step-structured reply to a multiple-choice question.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CategoricalAnswer {
    #[serde(rename = "Q", default)]
    pub question_echo: String,
    #[serde(rename = "Option Interpretation", default)]
    pub option_interpretation: BTreeMap<String, String>,
    #[serde(rename = "Option Choice", default)]
    pub option_choice: BTreeMap<String, String>,
    #[serde(rename = "Reasoning", default)]
    pub reasoning: String,
    #[serde(rename = "Response")]
    pub response: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OpenEndedAnswer {
    #[serde(rename = "Reasoning", default)]
    pub reasoning: String,
    #[serde(rename = "Response")]
    pub response: String,
}

/// The reflection call's `{"reflection": [...]}` payload.
#[derive(Debug, Clone, Deserialize)]
pub struct ReflectionReply {
    pub reflection: Vec<String>,
}

pub fn parse_categorical(text: &str, context: &str) -> Result<CategoricalAnswer, AgentError> {
    let answer: CategoricalAnswer =
        serde_json::from_str(text).map_err(|e| AgentError::ContractViolation {
            context: context.to_string(),
            message: format!("categorical answer schema: {e}"),
        })?;
    if answer.response.trim().is_empty() {
        return Err(AgentError::ContractViolation {
            context: context.to_string(),
            message: "Response field is empty".into(),
        });
    }
    Ok(answer)
}

pub fn parse_open_ended(text: &str, context: &str) -> Result<OpenEndedAnswer, AgentError> {
    let answer: OpenEndedAnswer =
        serde_json::from_str(text).map_err(|e| AgentError::ContractViolation {
            context: context.to_string(),
            message: format!("open-ended answer schema: {e}"),
        })?;
    if answer.response.trim().is_empty() {
        return Err(AgentError::ContractViolation {
            context: context.to_string(),
            message: "Response field is empty".into(),
        });
    }
    Ok(answer)
}

pub fn parse_reflections(
    text: &str,
    expected: usize,
    context: &str,
) -> Result<Vec<String>, AgentError> {
    let reply: ReflectionReply =
        serde_json::from_str(text).map_err(|e| AgentError::ContractViolation {
            context: context.to_string(),
            message: format!("reflection schema: {e}"),
        })?;
    if reply.reflection.len() != expected {
        return Err(AgentError::ContractViolation {
            context: context.to_string(),
            message: format!(
                "expected exactly {expected} reflections, got {}",
                reply.reflection.len()
            ),
        });
    }
    if reply.reflection.iter().any(|r| r.trim().is_empty()) {
        return Err(AgentError::ContractViolation {
            context: context.to_string(),
            message: "reflection list contains an empty string".into(),
        });
    }
    Ok(reply.reflection)
}

/// Maps a free-form response label onto an option position: exact match
/// first, then trim + case-fold, never fuzzy. Silent mis-binning would
/// corrupt every downstream metric, so anything else fails.
pub fn match_option(response: &str, options: &[String]) -> Option<usize> {
    if let Some(i) = options.iter().position(|o| o == response) {
        return Some(i);
    }
    let folded = response.trim().to_lowercase();
    options
        .iter()
        .position(|o| o.trim().to_lowercase() == folded)
}
