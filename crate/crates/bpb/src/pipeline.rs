//! Generation: perturb each record's decomposition, realize a question for
//! every candidate, then answer it by rule, by the step evaluator, or with
//! constraints only.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use bpb_core::answer_gen::{self, ConstraintDetail};
use bpb_core::metrics::{
    constraint_satisfied, normalize_answer, ConstraintEntry, ContrastGroup, GenerationLog, GroupMember,
};
use bpb_core::perturb::RewriteCandidate;
use bpb_core::realize::RealizeError;
use bpb_core::{
    evaluate, perturb_all, realize, Answer, Constraint, Decomposition, EvaluatorConfig, PerturbationKind, QdmrParser,
    QgBackend, RcBackend, RealizationMethod,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::InputRecord;
use crate::error::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AnswerMethod {
    Rule,
    Evaluator,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedRecord {
    pub id: String,
    pub source_id: String,
    pub perturbation: PerturbationKind,
    pub question: String,
    pub context: String,
    pub decomposition: String,
    pub answer: Option<Answer>,
    pub constraints: Vec<Constraint>,
    pub answer_method: AnswerMethod,
    pub realization_method: RealizationMethod,
}

/// Backends used during generation. Only the RC backend is required.
#[derive(Clone, Copy)]
pub struct Backends<'a> {
    pub rc: &'a (dyn RcBackend + Sync),
    pub qg: Option<&'a (dyn QgBackend + Sync)>,
    pub parser: Option<&'a (dyn QdmrParser + Sync)>,
}

#[derive(Debug, Clone)]
pub struct GenerateConfig {
    pub kinds: BTreeSet<PerturbationKind>,
    pub evaluator: EvaluatorConfig,
    pub seed: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            kinds: PerturbationKind::ALL.into_iter().collect(),
            evaluator: EvaluatorConfig::default(),
            seed: 0,
        }
    }
}

/// Parses a `--perturbations` value: `all` or a comma list of kind names.
pub fn parse_kinds(spec: &str) -> Result<BTreeSet<PerturbationKind>, DataError> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(PerturbationKind::ALL.into_iter().collect());
    }
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            PerturbationKind::from_name(s)
                .ok_or_else(|| DataError::Config(format!("unknown perturbation {:?}", s.trim())))
        })
        .collect()
}

struct Outcome {
    answer: Option<Answer>,
    constraints: Vec<Constraint>,
    method: AnswerMethod,
}

fn rule_answer(record: &InputRecord, cand: &RewriteCandidate) -> (Option<Answer>, ConstraintDetail) {
    let a = &record.answer;
    let mut detail = ConstraintDetail {
        flip: cand.flip,
        operands: None,
    };
    let answer = match cand.kind {
        PerturbationKind::AppendBool => match (a.as_number(), cand.condition) {
            (Some(v), Some(cond)) => Some(answer_gen::answer_append_bool(v, cond)),
            _ => None,
        },
        PerturbationKind::ReplaceArith => {
            let (Some(v), Some(flip)) = (a.as_number(), cand.flip) else {
                return (None, detail);
            };
            let numbers = answer_gen::context_numbers(&record.context);
            let pairs = answer_gen::arith_pairs(v, &numbers, flip);
            detail.operands = pairs
                .iter()
                .copied()
                .find(|(x, y)| *x < 0.0 || *y < 0.0)
                .or_else(|| pairs.first().copied());
            answer_gen::answer_replace_arith(v, &numbers, flip)
        }
        PerturbationKind::ReplaceBool => answer_gen::answer_replace_bool(a).ok().flatten(),
        PerturbationKind::ReplaceComp => answer_gen::answer_replace_comp(&record.question, a),
        _ => None,
    };
    (answer, detail)
}

fn satisfies_all(answer: &Answer, constraints: &[Constraint]) -> bool {
    let text = answer.to_text();
    constraints.iter().all(|c| constraint_satisfied(&text, c))
}

fn kind_slug(kind: PerturbationKind) -> String {
    kind.name().to_ascii_lowercase()
}

/// Runs the full flow for one record. The returned log covers this record
/// only.
pub fn generate_record(
    record: &InputRecord,
    backends: Backends<'_>,
    cfg: &GenerateConfig,
) -> (Vec<GeneratedRecord>, GenerationLog) {
    let mut log = GenerationLog {
        seed: cfg.seed,
        records: 1,
        ..GenerationLog::default()
    };
    let mut out = Vec::new();
    let d = match resolve_qdmr(record, backends) {
        Ok(d) => d,
        Err(reason) => {
            log.records_skipped += 1;
            log.record_event(&record.id, None, "qdmr", reason);
            return (out, log);
        }
    };
    let candidates: Vec<RewriteCandidate> = perturb_all(&d, &record.answer)
        .into_iter()
        .filter(|c| cfg.kinds.contains(&c.kind))
        .collect();
    if !candidates.is_empty() {
        log.records_with_candidates += 1;
        log.kind_applications += candidates.iter().map(|c| c.kind).collect::<BTreeSet<_>>().len();
    }
    let mut seen_questions = BTreeSet::new();
    seen_questions.insert(normalize_answer(&record.question));
    let mut per_kind_index = std::collections::BTreeMap::<PerturbationKind, usize>::new();
    for cand in &candidates {
        let kind = cand.kind;
        log.kind_mut(kind).candidates += 1;
        let realized = match realize(&record.question, cand, backends.qg) {
            Ok(r) => r,
            Err(e) => {
                let reason = match e {
                    RealizeError::NoRealization => "no_realization",
                    RealizeError::BackendUnavailable(_) => "qg_unavailable",
                    RealizeError::BackendMalformedReply(_) => "qg_malformed_reply",
                };
                log.record_event(&record.id, Some(kind), "realize", reason);
                continue;
            }
        };
        log.kind_mut(kind).realized += 1;
        if !seen_questions.insert(normalize_answer(&realized.question)) {
            log.kind_mut(kind).discarded += 1;
            log.record_event(&record.id, Some(kind), "dedup", "duplicate_question");
            continue;
        }
        let outcome = match answer_candidate(record, cand, backends, cfg) {
            Ok(o) => o,
            Err(reason) => {
                log.kind_mut(kind).discarded += 1;
                log.record_event(&record.id, Some(kind), "answer", reason);
                continue;
            }
        };
        let counts = log.kind_mut(kind);
        match outcome.method {
            AnswerMethod::Rule => counts.answered_rule += 1,
            AnswerMethod::Evaluator => counts.answered_evaluator += 1,
            AnswerMethod::None => counts.constraint_only += 1,
        }
        let n = per_kind_index.entry(kind).or_default();
        *n += 1;
        out.push(GeneratedRecord {
            id: format!("{}-{}-{}", record.id, kind_slug(kind), n),
            source_id: record.id.clone(),
            perturbation: kind,
            question: realized.question,
            context: record.context.clone(),
            decomposition: cand.decomposition.serialize(),
            answer: outcome.answer,
            constraints: outcome.constraints,
            answer_method: outcome.method,
            realization_method: realized.method,
        });
    }
    (out, log)
}

fn resolve_qdmr(record: &InputRecord, backends: Backends<'_>) -> Result<Decomposition, &'static str> {
    if let Some(d) = &record.qdmr {
        return Ok(d.clone());
    }
    let parser = backends.parser.ok_or("no_decomposition")?;
    let steps = parser.parse_question(&record.question).map_err(|_| "parser_error")?;
    let d = Decomposition::from_texts(steps).map_err(|_| "parser_invalid_decomposition")?;
    if d.is_valid() {
        Ok(d)
    } else {
        Err("parser_invalid_decomposition")
    }
}

fn answer_candidate(
    record: &InputRecord,
    cand: &RewriteCandidate,
    backends: Backends<'_>,
    cfg: &GenerateConfig,
) -> Result<Outcome, &'static str> {
    let (rule, detail) = rule_answer(record, cand);
    let constraints = answer_gen::constraints_for(cand.kind, detail, &record.answer);
    if let Some(answer) = rule {
        return Ok(Outcome {
            answer: Some(answer),
            constraints,
            method: AnswerMethod::Rule,
        });
    }
    let evaluated = evaluate(&cand.decomposition, &record.context, backends.rc, &cfg.evaluator);
    let reason = match evaluated {
        Ok(answer) if satisfies_all(&answer, &constraints) => {
            return Ok(Outcome {
                answer: Some(answer),
                constraints,
                method: AnswerMethod::Evaluator,
            });
        }
        Ok(_) => "constraint_violation",
        Err(discard) => discard.reason(),
    };
    if constraints.is_empty() {
        Err(reason)
    } else {
        Ok(Outcome {
            answer: None,
            constraints,
            method: AnswerMethod::None,
        })
    }
}

/// Generates over all records in parallel. Output keeps input order.
pub fn generate(
    records: &[InputRecord],
    backends: Backends<'_>,
    cfg: &GenerateConfig,
) -> (Vec<GeneratedRecord>, GenerationLog) {
    let per_record: Vec<(Vec<GeneratedRecord>, GenerationLog)> =
        records.par_iter().map(|r| generate_record(r, backends, cfg)).collect();
    let mut log = GenerationLog {
        seed: cfg.seed,
        ..GenerationLog::default()
    };
    let mut out = Vec::new();
    for (recs, l) in per_record {
        out.extend(recs);
        log.merge(l);
    }
    (out, log)
}

/// One contrast group per source record, original first.
pub fn contrast_groups(records: &[InputRecord], generated: &[GeneratedRecord]) -> Vec<ContrastGroup> {
    let mut by_source: std::collections::HashMap<&str, Vec<&GeneratedRecord>> = Default::default();
    for g in generated {
        by_source.entry(g.source_id.as_str()).or_default().push(g);
    }
    records
        .iter()
        .map(|r| {
            let mut members = vec![GroupMember {
                id: r.id.clone(),
                gold: r.answer.clone(),
                perturbation: None,
                valid: None,
            }];
            let mut constraints = Vec::new();
            for g in by_source.get(r.id.as_str()).into_iter().flatten() {
                match &g.answer {
                    Some(a) => members.push(GroupMember {
                        id: g.id.clone(),
                        gold: a.clone(),
                        perturbation: Some(g.perturbation),
                        valid: None,
                    }),
                    None => constraints.extend(g.constraints.iter().map(|c| ConstraintEntry {
                        id: g.id.clone(),
                        constraint: *c,
                        perturbation: g.perturbation,
                        valid: None,
                    })),
                }
            }
            ContrastGroup {
                original: r.id.clone(),
                members,
                constraints,
            }
        })
        .collect()
}

/// Writes one JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), DataError> {
    let file = fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| DataError::schema(path, 0, e))?;
        w.write_all(b"\n").map_err(|e| DataError::io(path, e))?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, DataError> {
    let file = fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DataError::schema(path, i + 1, e))?);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DataError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| DataError::schema(path, 0, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| DataError::io(path, e))
}
