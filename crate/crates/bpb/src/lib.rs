//! Dataset IO, backend clients, the generation pipeline, augmentation and
//! validation export around [`bpb_core`].

pub mod augment;
pub mod dataset;
pub mod error;
pub mod export;
pub mod http;
pub mod pipeline;
pub mod stub;

pub use bpb_core as core;
pub use error::DataError;
