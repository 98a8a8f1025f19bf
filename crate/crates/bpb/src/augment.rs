//! Training-set augmentation capped at a fraction of the training size per
//! perturbation kind.

use std::collections::BTreeMap;

use bpb_core::{Decomposition, PerturbationKind};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{DatasetTag, InputRecord};
use crate::error::DataError;
use crate::pipeline::GeneratedRecord;

/// Added to `tau * n` before flooring so that products such as
/// 0.05 * 1000 land on the intended integer.
const CAP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    tau: f64,
    pub seed: u64,
}

impl AugmentConfig {
    pub fn new(tau: f64, seed: u64) -> Result<Self, DataError> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(DataError::Config(format!("tau must be in (0, 1], got {tau}")));
        }
        Ok(AugmentConfig { tau, seed })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Per-kind sample cap for a training set of `n` examples.
    pub fn cap(&self, n: usize) -> usize {
        (self.tau * n as f64 + CAP_SLACK).floor() as usize
    }
}

fn stratified(
    generated: &[GeneratedRecord],
    cap: usize,
    seed: u64,
    include: impl Fn(&GeneratedRecord) -> bool,
) -> Vec<usize> {
    let mut pools: BTreeMap<PerturbationKind, Vec<usize>> = BTreeMap::new();
    for (i, g) in generated.iter().enumerate() {
        if include(g) {
            pools.entry(g.perturbation).or_default().push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::new();
    for kind in PerturbationKind::ALL {
        let Some(pool) = pools.get(&kind) else {
            continue;
        };
        if pool.len() <= cap {
            chosen.extend_from_slice(pool);
        } else {
            chosen.extend(index::sample(&mut rng, pool.len(), cap).into_iter().map(|i| pool[i]));
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Indices of answered records chosen per kind: all of them when a kind has
/// at most `cap`, otherwise `cap` drawn uniformly. Sorted ascending.
pub fn sample_indices(generated: &[GeneratedRecord], cap: usize, seed: u64) -> Vec<usize> {
    stratified(generated, cap, seed, |g| g.answer.is_some())
}

/// As [`sample_indices`], constraint-only records included.
pub fn sample_indices_any(generated: &[GeneratedRecord], cap: usize, seed: u64) -> Vec<usize> {
    stratified(generated, cap, seed, |_| true)
}

fn to_input(g: &GeneratedRecord, dataset: DatasetTag) -> Option<InputRecord> {
    Some(InputRecord {
        id: g.id.clone(),
        question: g.question.clone(),
        context: g.context.clone(),
        answer: g.answer.clone()?,
        qdmr: Decomposition::parse(&g.decomposition).ok(),
        dataset,
    })
}

/// The training records followed by the sampled generated records, in
/// generated-file order. Constraint-only records are never sampled.
pub fn augment(train: &[InputRecord], generated: &[GeneratedRecord], cfg: &AugmentConfig) -> Vec<InputRecord> {
    let cap = cfg.cap(train.len());
    let tags: BTreeMap<&str, DatasetTag> = train.iter().map(|r| (r.id.as_str(), r.dataset)).collect();
    let mut out = train.to_vec();
    for i in sample_indices(generated, cap, cfg.seed) {
        let g = &generated[i];
        let tag = tags.get(g.source_id.as_str()).copied().unwrap_or(DatasetTag::Generic);
        out.extend(to_input(g, tag));
    }
    out
}
