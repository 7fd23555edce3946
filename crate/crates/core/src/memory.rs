//! Per-participant searchable memory: embedded turn pairs plus any
//! reflections written back during a session.
//!
//! Retrieval is an exact maximum-inner-product scan. Stores are a few hundred
//! records at most, so exactness is free and directly testable against a
//! brute-force oracle. Stores are immutable snapshots; [`add_reflection`]
//! returns a new snapshot, and concurrent retrieval on a snapshot is safe.

use crate::corpus::{CorpusError, Participant};
use crate::gateway::{Gateway, GatewayError};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("memory store rejected: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Interview,
    Reflection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MemoryRecord {
    pub record_id: String,
    pub kind: MemoryKind,
    pub text: String,
    pub embedding: Vec<f64>,
    pub created_at_step: usize,
}

impl MemoryRecord {
    /// Rendering used when the record is placed into a prompt.
    pub fn rendered(&self) -> String {
        match self.kind {
            MemoryKind::Interview => self.text.clone(),
            MemoryKind::Reflection => format!("Reflection: {}", self.text),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MemoryStore {
    pub participant_id: String,
    pub dimension: usize,
    pub records: Vec<MemoryRecord>,
    next_step: usize,
}

/// Prompt-facing rendering of one turn pair; keeps the question context the
/// retriever matches on.
pub fn render_turn(interviewer_text: &str, participant_text: &str) -> String {
    format!("Q: {interviewer_text}\nA: {participant_text}")
}

/// Embeds every turn pair of `participant` into a fresh store, one interview
/// record per pair, order preserved.
pub fn build_memory(
    participant: &Participant,
    gateway: &Gateway,
) -> Result<MemoryStore, MemoryError> {
    if participant.turns.is_empty() {
        return Err(MemoryError::Corpus(CorpusError::EmptyTranscript));
    }
    let mut records = Vec::with_capacity(participant.turns.len());
    let mut dimension = 0;
    for (step, turn) in participant.turns.iter().enumerate() {
        let text = render_turn(&turn.interviewer_text, &turn.participant_text);
        let embedding = gateway.embed_text(&text)?;
        dimension = embedding.len();
        records.push(MemoryRecord {
            record_id: format!("turn-{:03}", turn.index),
            kind: MemoryKind::Interview,
            text,
            embedding,
            created_at_step: step,
        });
    }
    Ok(MemoryStore {
        participant_id: participant.id.clone(),
        dimension,
        next_step: records.len(),
        records,
    })
}

impl MemoryStore {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Returns a new snapshot with one extra reflection record, retrievable
    /// in subsequent calls.
    pub fn add_reflection(
        &self,
        reflection_text: &str,
        gateway: &Gateway,
    ) -> Result<MemoryStore, MemoryError> {
        if reflection_text.trim().is_empty() {
            return Err(MemoryError::Invalid("reflection text is empty".into()));
        }
        let embedding = gateway.embed_text(reflection_text)?;
        if embedding.len() != self.dimension {
            return Err(MemoryError::Invalid(format!(
                "embedding dimension {} does not match store dimension {}",
                embedding.len(),
                self.dimension
            )));
        }
        let mut next = self.clone();
        next.records.push(MemoryRecord {
            record_id: format!("refl-{:03}", self.next_step),
            kind: MemoryKind::Reflection,
            text: reflection_text.to_string(),
            embedding,
            created_at_step: self.next_step,
        });
        next.next_step += 1;
        Ok(next)
    }

    /// Top-k records by inner product with the embedded query, ties broken by
    /// ascending creation step then record id. Returns the whole store sorted
    /// when k exceeds the store size; an empty store yields an empty list.
    pub fn retrieve(
        &self,
        query_text: &str,
        k: usize,
        gateway: &Gateway,
    ) -> Result<Vec<MemoryRecord>, MemoryError> {
        if k == 0 || self.records.is_empty() {
            return Ok(Vec::new());
        }
        let query = gateway.embed_text(query_text)?;
        Ok(self.rank_by_inner_product(&query, k))
    }

    /// Exact scan against a pre-embedded query.
    pub fn rank_by_inner_product(&self, query: &[f64], k: usize) -> Vec<MemoryRecord> {
        let mut scored: Vec<(f64, &MemoryRecord)> = self
            .records
            .iter()
            .map(|r| (inner_product(query, &r.embedding), r))
            .collect();
        scored.sort_by(|(sa, ra), (sb, rb)| {
            sb.partial_cmp(sa)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ra.created_at_step.cmp(&rb.created_at_step))
                .then(ra.record_id.cmp(&rb.record_id))
        });
        scored
            .into_iter()
            .take(k)
            .map(|(_, r)| r.clone())
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), MemoryError> {
        let json = serde_json::to_string(self).expect("store serializes");
        std::fs::write(path, json).map_err(|e| MemoryError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<MemoryStore, MemoryError> {
        let text = std::fs::read_to_string(path).map_err(|e| MemoryError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let store: MemoryStore = serde_json::from_str(&text).map_err(|e| MemoryError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        for r in &store.records {
            if r.embedding.len() != store.dimension {
                return Err(MemoryError::Invalid(format!(
                    "record {} has dimension {} but store declares {}",
                    r.record_id,
                    r.embedding.len(),
                    store.dimension
                )));
            }
        }
        Ok(store)
    }
}

pub fn inner_product(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TurnPair;
    use crate::gateway::{mock::MockBackend, Gateway, GatewayConfig};
    use proptest::prelude::*;

    fn gateway() -> Gateway {
        Gateway::new(Box::new(MockBackend::new(3, 32)), GatewayConfig::default())
    }

    fn participant(n: usize) -> Participant {
        Participant {
            id: "p-test".into(),
            scratchpad: Default::default(),
            turns: (0..n)
                .map(|i| TurnPair {
                    index: i,
                    interviewer_text: format!("question number {i} about workflows"),
                    participant_text: format!("answer number {i} with distinct words item{i}"),
                    section_tag: None,
                })
                .collect(),
        }
    }

    #[test]
    fn one_record_per_turn_pair() {
        let gw = gateway();
        let store = build_memory(&participant(40), &gw).unwrap();
        assert_eq!(store.len(), 40);
        assert_eq!(store.dimension, 32);
        assert!(store
            .records
            .iter()
            .all(|r| r.kind == MemoryKind::Interview));
    }

    #[test]
    fn stores_are_independent_per_participant() {
        let gw = gateway();
        let mut a = participant(3);
        a.id = "p-a".into();
        let mut b = participant(3);
        b.id = "p-b".into();
        b.turns[0].participant_text = "completely different content".into();
        let sa = build_memory(&a, &gw).unwrap();
        let sb = build_memory(&b, &gw).unwrap();
        assert_eq!(sa.participant_id, "p-a");
        assert_eq!(sb.participant_id, "p-b");
        assert_ne!(sa.records[0].text, sb.records[0].text);
    }

    #[test]
    fn empty_turns_is_empty_transcript() {
        let gw = gateway();
        assert!(matches!(
            build_memory(&participant(0), &gw),
            Err(MemoryError::Corpus(CorpusError::EmptyTranscript))
        ));
    }

    #[test]
    fn self_query_ranks_first() {
        let gw = gateway();
        let store = build_memory(&participant(10), &gw).unwrap();
        let target = store.records[4].text.clone();
        let top = store.retrieve(&target, 1, &gw).unwrap();
        assert_eq!(top[0].record_id, store.records[4].record_id);
    }

    #[test]
    fn k_larger_than_store_returns_all_sorted() {
        let gw = gateway();
        let store = build_memory(&participant(5), &gw).unwrap();
        let all = store.retrieve("anything at all", 50, &gw).unwrap();
        assert_eq!(all.len(), 5);
    }

    #[test]
    fn reflections_append_and_are_retrievable() {
        let gw = gateway();
        let mut store = build_memory(&participant(40), &gw).unwrap();
        for i in 0..8 {
            store = store
                .add_reflection(&format!("reflection text number {i} zebra{i}"), &gw)
                .unwrap();
        }
        assert_eq!(store.len(), 48);
        let top = store.retrieve("reflection text number 3 zebra3", 1, &gw).unwrap();
        assert_eq!(top[0].kind, MemoryKind::Reflection);
        assert!(top[0].rendered().starts_with("Reflection: "));
        assert!(store.add_reflection("  ", &gw).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let gw = gateway();
        let store = build_memory(&participant(6), &gw).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mem.json");
        store.save(&path).unwrap();
        assert_eq!(MemoryStore::load(&path).unwrap(), store);
    }

    #[test]
    fn unit_norm_makes_inner_product_cosine() {
        let gw = gateway();
        let store = build_memory(&participant(4), &gw).unwrap();
        for r in &store.records {
            let norm: f64 = r.embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
    }

    /// Brute-force oracle: score every record, stable-sort by (-score, step,
    /// id) using full precision, take k.
    fn brute_force_top_k(
        records: &[(usize, String, Vec<f64>)],
        query: &[f64],
        k: usize,
    ) -> Vec<String> {
        let mut scored: Vec<(f64, usize, String)> = records
            .iter()
            .map(|(step, id, emb)| (inner_product(query, emb), *step, id.clone()))
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        scored.into_iter().take(k).map(|(_, _, id)| id).collect()
    }

    fn unit_vector(dims: usize, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..dims).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        v.into_iter().map(|x| x / norm).collect()
    }

    #[test]
    fn eight_record_store_matches_brute_force_argmax3() {
        let records: Vec<(usize, String, Vec<f64>)> = (0..8)
            .map(|i| (i, format!("r{i}"), unit_vector(16, 100 + i as u64)))
            .collect();
        let store = MemoryStore {
            participant_id: "p".into(),
            dimension: 16,
            next_step: 8,
            records: records
                .iter()
                .map(|(step, id, emb)| MemoryRecord {
                    record_id: id.clone(),
                    kind: MemoryKind::Interview,
                    text: id.clone(),
                    embedding: emb.clone(),
                    created_at_step: *step,
                })
                .collect(),
        };
        let query = unit_vector(16, 7);
        let got: Vec<String> = store
            .rank_by_inner_product(&query, 3)
            .into_iter()
            .map(|r| r.record_id)
            .collect();
        assert_eq!(got, brute_force_top_k(&records, &query, 3));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn retrieval_matches_exhaustive_scan(
            n in 1usize..=256,
            dims in 1usize..=64,
            k in 1usize..=16,
            seed in 0u64..10_000,
        ) {
            let records: Vec<(usize, String, Vec<f64>)> = (0..n)
                .map(|i| (i, format!("r{i:03}"), unit_vector(dims, seed.wrapping_add(i as u64))))
                .collect();
            let store = MemoryStore {
                participant_id: "p".into(),
                dimension: dims,
                next_step: n,
                records: records
                    .iter()
                    .map(|(step, id, emb)| MemoryRecord {
                        record_id: id.clone(),
                        kind: MemoryKind::Interview,
                        text: id.clone(),
                        embedding: emb.clone(),
                        created_at_step: *step,
                    })
                    .collect(),
            };
            let query = unit_vector(dims, seed.wrapping_mul(31).wrapping_add(1));
            let got: Vec<String> = store
                .rank_by_inner_product(&query, k)
                .into_iter()
                .map(|r| r.record_id)
                .collect();
            prop_assert_eq!(got, brute_force_top_k(&records, &query, k));
        }
    }
}
