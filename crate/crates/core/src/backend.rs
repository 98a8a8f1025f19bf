//! Interfaces to the neural components that stay outside this crate: the
//! single-step reading-comprehension model, the question generator and the
//! question-to-QDMR parser.

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("malformed backend reply: {0}")]
    Malformed(String),
    #[error("no fixture for question {0:?}")]
    FixtureMissing(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcReply {
    pub answer: String,
    pub score: f64,
}

/// Answers one natural-language question against a context.
pub trait RcBackend {
    fn answer(&self, question: &str, context: &str) -> Result<RcReply, BackendError>;
}

/// Generates a question from the step texts of a decomposition.
pub trait QgBackend {
    fn generate_question(&self, steps: &[String]) -> Result<String, BackendError>;
}

/// Parses a question into QDMR step texts.
pub trait QdmrParser {
    fn parse_question(&self, question: &str) -> Result<Vec<String>, BackendError>;
}

impl<T: RcBackend + ?Sized> RcBackend for &T {
    fn answer(&self, question: &str, context: &str) -> Result<RcReply, BackendError> {
        (**self).answer(question, context)
    }
}

impl<T: QgBackend + ?Sized> QgBackend for &T {
    fn generate_question(&self, steps: &[String]) -> Result<String, BackendError> {
        (**self).generate_question(steps)
    }
}

impl<T: QdmrParser + ?Sized> QdmrParser for &T {
    fn parse_question(&self, question: &str) -> Result<Vec<String>, BackendError> {
        (**self).parse_question(question)
    }
}
