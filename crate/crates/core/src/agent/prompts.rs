//! Versioned prompt templates and their rendering.
//!
//! Templates are frozen assets; rendering only substitutes the declared
//! placeholders. Any template change requires a new version directory so
//! config hashes distinguish runs.

use crate::corpus::{Concept, Scratchpad};
use crate::memory::MemoryRecord;

/// Version stamp recorded in config hashes and run metadata.
pub const PROMPT_VERSION: &str = "v1";

const SYSTEM_TEMPLATE: &str = include_str!("../../assets/prompts/v1/system.txt");
const REFLECTION_TEMPLATE: &str = include_str!("../../assets/prompts/v1/reflection.txt");
const CATEGORICAL_TEMPLATE: &str = include_str!("../../assets/prompts/v1/categorical.txt");
const OPEN_ENDED_TEMPLATE: &str = include_str!("../../assets/prompts/v1/open_ended.txt");

/// Renders the scratchpad as a sorted attribute list.
pub fn render_scratchpad(scratchpad: &Scratchpad) -> String {
    let mut out = String::from("Participant attributes:");
    for (key, value) in scratchpad {
        out.push_str(&format!("\n- {key}: {}", value.render()));
    }
    out
}

/// The `{transcript_and_reflections}` block for an interview-based agent:
/// scratchpad first, then each retrieved record, blank-line separated.
pub fn render_interview_block(scratchpad: &Scratchpad, retrieved: &[MemoryRecord]) -> String {
    let mut blocks = Vec::new();
    if !scratchpad.is_empty() {
        blocks.push(render_scratchpad(scratchpad));
    }
    for record in retrieved {
        blocks.push(record.rendered());
    }
    if blocks.is_empty() {
        blocks.push("(no retrieved memories)".to_string());
    }
    blocks.join("\n\n")
}

/// The block for a scratchpad-only agent: the scratchpad rendering alone.
pub fn render_scratchpad_block(scratchpad: &Scratchpad) -> String {
    render_scratchpad(scratchpad)
}

/// The block for a no-information agent; contains no participant-derived bytes.
pub fn render_no_information_block() -> String {
    "No participant attributes are available.\n\nNo interview transcript or reflections are available.".to_string()
}

/// Fills the system template with a pre-rendered transcript block and the
/// concept introduction.
pub fn render_system_prompt(transcript_and_reflections: &str, concept: &Concept) -> String {
    SYSTEM_TEMPLATE
        .replace("{transcript_and_reflections}", transcript_and_reflections)
        .replace("{concept_intro}", &concept.intro_text())
}

/// Observations followed by the reflection task with the count and anchoring
/// topic substituted.
pub fn render_reflection_prompt(observations: &str, n: usize, topic: &str) -> String {
    let task = REFLECTION_TEMPLATE
        .replace("!<INPUT 1>!", &n.to_string())
        .replace("!<INPUT 2>!", topic);
    format!("{observations}\n\n{task}")
}

pub fn render_categorical_prompt(question_text: &str, options: &[String]) -> String {
    let options_json = serde_json::to_string(options).expect("options serialize");
    CATEGORICAL_TEMPLATE
        .replace("{question}", question_text)
        .replace("{options}", &options_json)
}

pub fn render_open_ended_prompt(question_text: &str) -> String {
    OPEN_ENDED_TEMPLATE.replace("{question}", question_text)
}
