//! Byte-for-byte golden tests of the rendered prompts, including the step
//! structure of the categorical answer format.

use panelsim::agent::prompts;
use panelsim::corpus::{Concept, ScratchValue, Scratchpad};
use panelsim::memory::{MemoryKind, MemoryRecord};

fn fixture_scratchpad() -> Scratchpad {
    let mut pad = Scratchpad::new();
    pad.insert("job_division".into(), ScratchValue::One("Legal".into()));
    pad.insert(
        "job_title".into(),
        ScratchValue::One("Senior Contracts Analyst".into()),
    );
    pad
}

fn fixture_records() -> Vec<MemoryRecord> {
    vec![
        MemoryRecord {
            record_id: "turn-000".into(),
            kind: MemoryKind::Interview,
            text: "Q: What's your role?\nA: I review vendor contracts.".into(),
            embedding: vec![1.0],
            created_at_step: 0,
        },
        MemoryRecord {
            record_id: "refl-001".into(),
            kind: MemoryKind::Reflection,
            text: "The subject reads contracts daily.".into(),
            embedding: vec![1.0],
            created_at_step: 1,
        },
    ]
}

fn fixture_concept() -> Concept {
    Concept {
        id: "concept_qa".into(),
        name: "Q&A".into(),
        short_description:
            "An AI assistant that answers questions across several uploaded sources at once."
                .into(),
        detailed_description: vec![
            "Upload several documents and related links into one workspace".into(),
            "Ask questions in plain language about any of the uploaded material".into(),
        ],
        image_ref: None,
    }
}

const LIKERT: [&str; 7] = [
    "Strongly Disagree",
    "Moderately Disagree",
    "Somewhat Disagree",
    "Neither Agree nor Disagree",
    "Somewhat Agree",
    "Moderately Agree",
    "Strongly Agree",
];

#[test]
fn system_prompt_matches_golden_bytes() {
    let block = prompts::render_interview_block(&fixture_scratchpad(), &fixture_records());
    let rendered = prompts::render_system_prompt(&block, &fixture_concept());
    let expected = include_str!("golden/system_prompt.txt");
    assert_eq!(rendered, expected);
}

#[test]
fn reflection_prompt_matches_golden_bytes() {
    let observations = prompts::render_interview_block(&fixture_scratchpad(), &fixture_records());
    let rendered = prompts::render_reflection_prompt(&observations, 8, "AI Usage & Perceptions");
    let expected = include_str!("golden/reflection_prompt.txt");
    assert_eq!(rendered, expected);
}

#[test]
fn categorical_prompt_matches_golden_bytes() {
    let options: Vec<String> = LIKERT.iter().map(|s| s.to_string()).collect();
    let rendered = prompts::render_categorical_prompt(
        "I would find this AI Assistant useful in my job",
        &options,
    );
    let expected = include_str!("golden/categorical_prompt.txt");
    assert_eq!(rendered, expected);
    // the four-step structure is part of the frozen contract
    for step in [
        "(\"Option Interpretation\")",
        "(\"Option Choice\")",
        "(\"Reasoning\")",
        "(\"Response\")",
    ] {
        assert!(rendered.contains(step), "missing step marker {step}");
    }
}

#[test]
fn open_ended_prompt_matches_golden_bytes() {
    let rendered = prompts::render_open_ended_prompt(
        "How would this fit into your current document workflow, if at all?",
    );
    let expected = include_str!("golden/open_ended_prompt.txt");
    assert_eq!(rendered, expected);
    assert!(rendered.contains("(\"Reasoning\")"));
    assert!(rendered.contains("(\"Response\")"));
}
