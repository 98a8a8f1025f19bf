//! Stratified validation samples for manual review.

use std::io::Write;

use crate::augment::sample_indices_any;
use crate::error::DataError;
use crate::pipeline::GeneratedRecord;

pub const HEADER: [&str; 5] = ["source_id", "perturbation", "context", "question", "proposed answer"];

/// Answer text, or the constraints for constraint-only records.
pub fn proposed_answer(g: &GeneratedRecord) -> String {
    match &g.answer {
        Some(a) => a.to_text(),
        None => g
            .constraints
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" "),
    }
}

/// Up to `cap` records per kind, drawn uniformly with `seed`, grouped by
/// kind in rule order.
pub fn validation_sample(generated: &[GeneratedRecord], cap: usize, seed: u64) -> Vec<&GeneratedRecord> {
    let mut chosen = sample_indices_any(generated, cap, seed);
    chosen.sort_by_key(|&i| (generated[i].perturbation, i));
    chosen.into_iter().map(|i| &generated[i]).collect()
}

pub fn write_validation_csv<W: Write>(out: W, rows: &[&GeneratedRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for g in rows {
        w.write_record([
            g.source_id.as_str(),
            g.perturbation.name(),
            g.context.as_str(),
            g.question.as_str(),
            proposed_answer(g).as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_validation(
    path: &std::path::Path,
    generated: &[GeneratedRecord],
    cap: usize,
    seed: u64,
) -> Result<usize, DataError> {
    let rows = validation_sample(generated, cap, seed);
    let file = std::fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    write_validation_csv(file, &rows).map_err(|e| DataError::schema(path, 0, e))?;
    Ok(rows.len())
}
