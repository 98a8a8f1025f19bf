//! Fixture-backed reading-comprehension backend for tests and offline runs.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use bpb_core::{BackendError, RcBackend, RcReply};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::DataError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    pub question: String,
    pub context_sha256: String,
    pub answer: String,
}

/// Hex SHA-256 of a context, the fixture lookup key.
pub fn context_digest(context: &str) -> String {
    hex::encode(Sha256::digest(context.as_bytes()))
}

/// Lookup form of a question: lowercase, single spaces, no trailing "?".
pub fn normalize_question(question: &str) -> String {
    let lower = question.trim().to_lowercase();
    let collapsed = lower.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.trim_end_matches('?').trim_end().to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissMode {
    /// Misses answer with the default answer.
    Lenient,
    /// Misses fail with [`BackendError::FixtureMissing`].
    Strict,
}

#[derive(Debug)]
pub struct StubBackend {
    table: HashMap<(String, String), String>,
    mode: MissMode,
    default_answer: String,
    misses: Mutex<Vec<(String, String)>>,
}

impl StubBackend {
    pub fn new(fixtures: Vec<Fixture>, mode: MissMode) -> Self {
        let table = fixtures
            .into_iter()
            .map(|f| {
                let key = (normalize_question(&f.question), f.context_sha256.to_ascii_lowercase());
                (key, f.answer)
            })
            .collect();
        StubBackend {
            table,
            mode,
            default_answer: String::new(),
            misses: Mutex::new(Vec::new()),
        }
    }

    pub fn from_file(path: &Path, mode: MissMode) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        let fixtures: Vec<Fixture> = serde_json::from_str(&text).map_err(|e| DataError::schema(path, e.line(), e))?;
        Ok(Self::new(fixtures, mode))
    }

    pub fn with_default_answer(mut self, answer: impl Into<String>) -> Self {
        self.default_answer = answer.into();
        self
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// (question, context digest) pairs that had no fixture, in query order.
    pub fn misses(&self) -> Vec<(String, String)> {
        self.misses.lock().expect("miss log poisoned").clone()
    }

    pub fn lookup(&self, question: &str, context: &str) -> Option<&str> {
        let key = (normalize_question(question), context_digest(context));
        self.table.get(&key).map(String::as_str)
    }
}

impl RcBackend for StubBackend {
    fn answer(&self, question: &str, context: &str) -> Result<RcReply, BackendError> {
        if let Some(answer) = self.lookup(question, context) {
            return Ok(RcReply {
                answer: answer.to_string(),
                score: 1.0,
            });
        }
        self.misses
            .lock()
            .expect("miss log poisoned")
            .push((question.to_string(), context_digest(context)));
        match self.mode {
            MissMode::Strict => Err(BackendError::FixtureMissing(question.to_string())),
            MissMode::Lenient => Ok(RcReply {
                answer: self.default_answer.clone(),
                score: 0.0,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONTEXT: &str = "Madrugada played their final concert in 2007.";

    fn stub(mode: MissMode) -> StubBackend {
        StubBackend::new(
            vec![Fixture {
                question: "What is year of Madrugada's final concert?".into(),
                context_sha256: context_digest(CONTEXT),
                answer: "2007".into(),
            }],
            mode,
        )
    }

    #[test]
    fn hit_returns_fixture() {
        let reply = stub(MissMode::Strict)
            .answer("what is  year of Madrugada's final concert", CONTEXT)
            .unwrap();
        assert_eq!(
            reply,
            RcReply {
                answer: "2007".into(),
                score: 1.0
            }
        );
    }

    #[test]
    fn lenient_miss_is_default_answer() {
        let s = stub(MissMode::Lenient);
        assert_eq!(s.answer("who?", CONTEXT).unwrap().answer, "");
        assert_eq!(s.misses().len(), 1);
        let s = s.with_default_answer("unknown");
        assert_eq!(s.answer("who?", CONTEXT).unwrap().answer, "unknown");
    }

    #[test]
    fn strict_miss_fails() {
        let s = stub(MissMode::Strict);
        assert!(matches!(
            s.answer("who?", CONTEXT),
            Err(BackendError::FixtureMissing(_))
        ));
        // Same question, other context.
        assert!(s.answer("What is year of Madrugada's final concert?", "other").is_err());
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(
            context_digest(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
