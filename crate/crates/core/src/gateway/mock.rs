//! Deterministic offline backends.
//!
//! [`MockBackend`] is a pure function of (request bytes, seed): identical
//! requests always produce identical replies, which makes every downstream
//! pipeline test reproducible without network access. It recognizes the
//! harness's own prompt shapes (reflection, multiple-choice, open-ended,
//! pairwise judging) and answers each with schema-valid JSON.

use super::{Backend, BackendResponse, ChatRequest, GatewayError};
use sha2::{Digest, Sha256};
use std::collections::VecDeque;
use std::sync::Mutex;

/// Stable 64-bit hash used everywhere determinism matters.
pub fn stable_hash(parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update((p.len() as u64).to_le_bytes());
        hasher.update(p);
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

const OPEN_ENDED_POOL: &[&str] = &[
    "I could see this fitting into my document reviews, though I would want to check its output against the original text before relying on it.",
    "This would mostly help on the days when I have a stack of long reports to get through and not enough time to read each one closely.",
    "My main hesitation is accuracy. If it misreads a key figure or clause, the time it saves up front gets lost in rework later.",
    "I would try it on low-stakes material first, like internal summaries, before letting it anywhere near client-facing documents.",
    "It sounds useful, but it would need to plug into the tools my team already uses or it becomes one more window to manage.",
    "For my routine work this feels like overkill, but for quarter-end crunch weeks I would absolutely give it a shot.",
    "Privacy is the sticking point. A lot of what I handle is confidential, so I would need clear guarantees about where the data goes.",
    "Honestly, I am not sure this matches how I work. I tend to read things end to end and make my own notes as I go.",
    "If it cut the time I spend hunting for specific numbers across files, that alone would justify learning yet another tool.",
    "I like the idea, but someone on my team would have to vet it first. We do not adopt new software without a review.",
    "It would help most with the dense technical sections where I currently slow down and reread paragraphs several times.",
    "I would want an easy way to see why it produced a given result, so I can defend the conclusion if anyone asks.",
];

const REFLECTION_POOL: &[&str] = &[
    "The subject works with long, dense documents daily and measures success by accuracy rather than speed.",
    "The subject is cautious about adopting new tools and prefers to see colleagues use them first.",
    "The subject's biggest pain point is locating specific information buried deep in large files.",
    "The subject values integration with existing software over standalone features.",
    "The subject worries about confidentiality when uploading work material to external services.",
    "The subject is open to automation for repetitive steps but wants to keep final judgment calls.",
    "The subject reads critically and double-checks computed figures against the source text.",
    "The subject's workload spikes around reporting deadlines, which is when tooling matters most.",
    "The subject prefers concise summaries that link back to the original passage.",
    "The subject has tried AI features casually but has not built them into a routine.",
    "The subject collaborates closely with a small team and shares annotated documents with them.",
    "The subject is skeptical of marketing claims and wants evidence of time savings.",
];

const JUDGE_EXPLANATION_POOL: &[&str] = &[
    "Both responses take a broadly similar position with overlapping emphasis.",
    "The two responses differ in emphasis and only partially overlap on this dimension.",
    "There is limited overlap between the two responses on this dimension.",
    "The two responses are close in substance with minor differences in framing.",
];

/// Deterministic chat + embedding backend.
pub struct MockBackend {
    seed: u64,
    embed_dimension: usize,
}

impl MockBackend {
    pub fn new(seed: u64, embed_dimension: usize) -> Self {
        MockBackend {
            seed,
            embed_dimension,
        }
    }

    fn hash_request(&self, request: &ChatRequest) -> u64 {
        let bytes = serde_json::to_vec(request).expect("request serializes");
        let seed = request.decoding.seed.unwrap_or(self.seed);
        stable_hash(&[&bytes, &seed.to_le_bytes()])
    }

    fn reply_text(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let prompt = request.full_text();
        let h = self.hash_request(request);

        if prompt.contains("reflections about the interviewee") {
            return Ok(reflection_reply(&prompt, h));
        }
        if prompt.contains("please answer the following multiple-choice question") {
            return categorical_reply(&prompt, request);
        }
        if prompt.contains("please answer the following open-ended question") {
            let response = OPEN_ENDED_POOL[(h % OPEN_ENDED_POOL.len() as u64) as usize];
            return Ok(serde_json::json!({
                "Reasoning": "Drawing on what the interview material suggests about this person's routine and priorities.",
                "Response": response,
            })
            .to_string());
        }
        if prompt.contains("Evaluation dimension:") {
            return Ok(judge_reply(&prompt, h));
        }
        Ok(format!("mock reply {h:016x}"))
    }
}

fn reflection_reply(prompt: &str, h: u64) -> String {
    let n = parse_after(prompt, "Write a list of ")
        .and_then(|rest| rest.split_whitespace().next().map(|w| w.to_string()))
        .and_then(|w| w.parse::<usize>().ok())
        .unwrap_or(1)
        .max(1);
    let topic = parse_after(prompt, "anchoring topic/phrase: \"")
        .and_then(|rest| rest.split('"').next().map(|s| s.to_string()))
        .unwrap_or_else(|| "work".to_string());
    let reflections: Vec<String> = (0..n)
        .map(|i| {
            let base = REFLECTION_POOL
                [((h.wrapping_add(i as u64 * 0x9E37_79B9)) % REFLECTION_POOL.len() as u64) as usize];
            format!("{base} (noted while reviewing: {topic})")
        })
        .collect();
    serde_json::json!({ "reflection": reflections }).to_string()
}

fn categorical_reply(prompt: &str, request: &ChatRequest) -> Result<String, GatewayError> {
    let options_line = parse_after(prompt, "Answer options: ")
        .and_then(|rest| rest.lines().next().map(|l| l.to_string()))
        .ok_or_else(|| {
            GatewayError::BackendUnavailable("mock could not find the answer options line".into())
        })?;
    let options: Vec<String> = serde_json::from_str(&options_line).map_err(|e| {
        GatewayError::BackendUnavailable(format!("mock could not parse options: {e}"))
    })?;
    if options.is_empty() {
        return Err(GatewayError::BackendUnavailable(
            "mock received an empty options list".into(),
        ));
    }
    let question = parse_after(prompt, "multiple-choice question:\n\n")
        .and_then(|rest| rest.split("\n\n").next().map(|s| s.to_string()))
        .unwrap_or_default();

    // Answers spread over the full option range as a function of
    // (participant, question, variant) so population-level metrics see
    // non-degenerate histograms.
    let choice_hash = match &request.trace_key {
        Some(key) => stable_hash(&[key.as_bytes()]),
        None => stable_hash(&[request.full_text().as_bytes()]),
    };
    let chosen = &options[(choice_hash % options.len() as u64) as usize];

    let interpretation: serde_json::Map<String, serde_json::Value> = options
        .iter()
        .map(|o| {
            (
                o.clone(),
                serde_json::Value::String(format!(
                    "Someone whose work experience points them toward \"{o}\"."
                )),
            )
        })
        .collect();
    let choice: serde_json::Map<String, serde_json::Value> = options
        .iter()
        .map(|o| {
            (
                o.clone(),
                serde_json::Value::String(if o == chosen {
                    "The interview material is most consistent with this option.".to_string()
                } else {
                    "Possible, but less consistent with the interview material.".to_string()
                }),
            )
        })
        .collect();
    Ok(serde_json::json!({
        "Q": question,
        "Option Interpretation": interpretation,
        "Option Choice": choice,
        "Reasoning": "Weighing the options against what is known about this person's priorities.",
        "Response": chosen,
    })
    .to_string())
}

fn judge_reply(prompt: &str, h: u64) -> String {
    let a = between(prompt, "<<<A\n", "\nA>>>");
    let b = between(prompt, "<<<B\n", "\nB>>>");
    let score = match (a, b) {
        (Some(a), Some(b)) if a == b => 7,
        _ => 1 + (h % 7) as i64,
    };
    let explanation = if score == 7 {
        "The two responses are effectively identical on this dimension.".to_string()
    } else {
        JUDGE_EXPLANATION_POOL[(h % JUDGE_EXPLANATION_POOL.len() as u64) as usize].to_string()
    };
    serde_json::json!({ "score": score, "explanation": explanation }).to_string()
}

fn parse_after<'a>(text: &'a str, marker: &str) -> Option<&'a str> {
    text.find(marker).map(|i| &text[i + marker.len()..])
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let rest = parse_after(text, start)?;
    rest.find(end).map(|i| &rest[..i])
}

impl Backend for MockBackend {
    fn complete(&self, request: &ChatRequest) -> Result<BackendResponse, GatewayError> {
        let text = self.reply_text(request)?;
        Ok(BackendResponse {
            input_tokens: super::approx_tokens(&request.full_text()),
            output_tokens: super::approx_tokens(&text),
            text,
        })
    }

    /// Hashed bag-of-words embedding: tokens are lowercased, hashed into
    /// `embed_dimension` signed buckets, and the counts are returned raw (the
    /// gateway normalizes). Identical texts embed identically; texts sharing
    /// vocabulary land near each other.
    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        let mut v = vec![0.0f64; self.embed_dimension];
        for token in text
            .to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let h = stable_hash(&[token.as_bytes(), &self.seed.to_le_bytes()]);
            let bucket = (h % self.embed_dimension as u64) as usize;
            let sign = if (h >> 32) & 1 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        if v.iter().all(|x| *x == 0.0) {
            // Token set hashed to perfect cancellation; fall back to a
            // whole-text bucket so the vector stays usable.
            let h = stable_hash(&[text.as_bytes()]);
            v[(h % self.embed_dimension as u64) as usize] = 1.0;
        }
        Ok(v)
    }

    fn supports_images(&self) -> bool {
        true
    }

    fn name(&self) -> &str {
        "mock"
    }
}

/// Replays a fixed sequence of canned replies; for exercising retry and
/// failure paths in tests.
pub struct ScriptedBackend {
    replies: Mutex<VecDeque<String>>,
}

impl ScriptedBackend {
    pub fn new(replies: Vec<String>) -> Self {
        ScriptedBackend {
            replies: Mutex::new(replies.into()),
        }
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<BackendResponse, GatewayError> {
        let text = self
            .replies
            .lock()
            .unwrap()
            .pop_front()
            .ok_or_else(|| GatewayError::BackendUnavailable("script exhausted".into()))?;
        Ok(BackendResponse {
            input_tokens: super::approx_tokens(&request.full_text()),
            output_tokens: super::approx_tokens(&text),
            text,
        })
    }

    fn embed(&self, _text: &str) -> Result<Vec<f64>, GatewayError> {
        Ok(vec![1.0, 0.0, 0.0, 0.0])
    }

    fn supports_images(&self) -> bool {
        true
    }

    fn name(&self) -> &str {
        "scripted"
    }
}
