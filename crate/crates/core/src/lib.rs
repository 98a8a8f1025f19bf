//! Contrast-set generation over QDMR decompositions: parsing, rewrite rules,
//! question realization, answer computation and scoring. Neural components
//! (reading comprehension, question generation, QDMR parsing) are reached
//! through the traits in [`backend`].

#![no_std]

extern crate alloc;

pub mod answer;
pub mod answer_gen;
pub mod backend;
pub mod evaluator;
pub mod lexicon;
pub mod metrics;
pub mod numbers;
pub mod perturb;
pub mod qdmr;
pub mod realize;

pub use answer::{Answer, AnswerType, Constraint, Date};
pub use backend::{BackendError, QdmrParser, QgBackend, RcBackend, RcReply};
pub use evaluator::{evaluate, Discard, EvaluatorConfig};
pub use perturb::{perturb_all, PerturbationKind, RewriteCandidate};
pub use qdmr::{Decomposition, Operator, QdmrError, Step};
pub use realize::{realize, RealizationMethod, RealizationResult};
