//! Step-by-step execution of a decomposition.
//!
//! Retrieval-style steps (select, filter, project) are answered by an
//! [`RcBackend`] after their `#k` placeholders are filled in; counting,
//! arithmetic, comparison, boolean and set steps are computed directly. Any
//! step whose inputs have the wrong type, whose backend answer is too long, or
//! which hits the noisy-operation blocklist discards the whole candidate.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::answer::Answer;
use crate::backend::{BackendError, RcBackend};
use crate::metrics::normalize_answer;
use crate::numbers::{self, approx_eq};
use crate::qdmr::{self, Aggregate, Arithmetic, BooleanCheck, Decomposition, Extremum, Operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum ValueKind {
    Number,
    Text,
    TextList,
    YesNo,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Number(f64),
    Text(String),
    TextList(Vec<String>),
    YesNo(bool),
}

/// The result of one step, with the selection text it descends from.
#[derive(Debug, Clone, PartialEq)]
pub struct StepValue {
    pub payload: Payload,
    pub provenance: Option<String>,
}

impl StepValue {
    pub fn kind(&self) -> ValueKind {
        match self.payload {
            Payload::Number(_) => ValueKind::Number,
            Payload::Text(_) => ValueKind::Text,
            Payload::TextList(_) => ValueKind::TextList,
            Payload::YesNo(_) => ValueKind::YesNo,
        }
    }

    /// Text substituted for a `#k` placeholder.
    pub fn render(&self) -> String {
        match &self.payload {
            Payload::Number(v) => numbers::format_number(*v),
            Payload::Text(t) => t.clone(),
            Payload::TextList(items) => items.join(", "),
            Payload::YesNo(b) => (if *b { "yes" } else { "no" }).to_string(),
        }
    }

    fn into_answer(self) -> Answer {
        match self.payload {
            Payload::Number(v) => Answer::number(v),
            Payload::Text(t) => Answer::span(t),
            Payload::TextList(texts) => Answer::Spans { texts },
            Payload::YesNo(b) => Answer::yes_no(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluatorConfig {
    max_answer_words: usize,
    /// (producer operator, produced value kind) pairs that are discarded when
    /// they feed an arithmetic or aggregate step.
    pub noisy_op_blocklist: BTreeSet<(Operator, ValueKind)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("max_answer_words must be at least 1")]
    ZeroAnswerWords,
}

impl EvaluatorConfig {
    pub const DEFAULT_MAX_ANSWER_WORDS: usize = 8;

    pub fn new(max_answer_words: usize) -> Result<Self, ConfigError> {
        if max_answer_words == 0 {
            return Err(ConfigError::ZeroAnswerWords);
        }
        let mut noisy_op_blocklist = BTreeSet::new();
        noisy_op_blocklist.insert((Operator::Project, ValueKind::Text));
        noisy_op_blocklist.insert((Operator::Project, ValueKind::TextList));
        Ok(EvaluatorConfig {
            max_answer_words,
            noisy_op_blocklist,
        })
    }

    pub fn max_answer_words(&self) -> usize {
        self.max_answer_words
    }

    pub fn with_blocklist(mut self, blocklist: BTreeSet<(Operator, ValueKind)>) -> Self {
        self.noisy_op_blocklist = blocklist;
        self
    }
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        Self::new(Self::DEFAULT_MAX_ANSWER_WORDS).expect("default is positive")
    }
}

/// Why a candidate was discarded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Discard {
    InvalidDecomposition,
    TypeMismatch { step: usize },
    AnswerTooLong { step: usize, words: usize },
    EmptyAnswer { step: usize },
    NoisyOperation { step: usize, input: usize },
    Tie { step: usize },
    MissingValue { step: usize, reference: usize },
    Backend { step: usize, error: BackendError },
}

impl Discard {
    /// Short stable label for logs and reports.
    pub fn reason(&self) -> &'static str {
        match self {
            Discard::InvalidDecomposition => "invalid_decomposition",
            Discard::TypeMismatch { .. } => "type_mismatch",
            Discard::AnswerTooLong { .. } => "answer_too_long",
            Discard::EmptyAnswer { .. } => "empty_answer",
            Discard::NoisyOperation { .. } => "noisy_operation",
            Discard::Tie { .. } => "comparison_tie",
            Discard::MissingValue { .. } => "missing_value",
            Discard::Backend { .. } => "backend_error",
        }
    }
}

impl fmt::Display for Discard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Discard::InvalidDecomposition => f.write_str("decomposition failed validation"),
            Discard::TypeMismatch { step } => write!(f, "step {step}: argument type mismatch"),
            Discard::AnswerTooLong { step, words } => {
                write!(f, "step {step}: answer has {words} words")
            }
            Discard::EmptyAnswer { step } => write!(f, "step {step}: empty answer"),
            Discard::NoisyOperation { step, input } => {
                write!(f, "step {step}: noisy input from step {input}")
            }
            Discard::Tie { step } => write!(f, "step {step}: comparison tie"),
            Discard::MissingValue { step, reference } => {
                write!(f, "step {step}: no value for #{reference}")
            }
            Discard::Backend { step, error } => write!(f, "step {step}: {error}"),
        }
    }
}

const INTERROGATIVES: &[&str] = &[
    "what", "which", "who", "whom", "whose", "when", "where", "why", "how", "is", "are", "was", "were", "do", "does",
    "did", "can", "could", "has", "have", "had", "will", "would", "if",
];

/// Fills `#k` placeholders with step values and phrases the result as a
/// question: "What is <text>?" unless it already opens with an interrogative.
pub fn substitute_refs(step_text: &str, values: &BTreeMap<usize, StepValue>) -> Result<String, usize> {
    let filled = qdmr::rewrite_refs_with(step_text, |k| values.get(&k).map(StepValue::render))?;
    let filled = filled.trim().trim_end_matches('?').trim_end();
    let first = filled.split_whitespace().next().unwrap_or("");
    if INTERROGATIVES.iter().any(|w| w.eq_ignore_ascii_case(first)) {
        Ok(format!("{filled}?"))
    } else {
        Ok(format!("What is {filled}?"))
    }
}

fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Splits a backend answer into list items on ", ", ";" and " and ".
pub fn split_list(text: &str) -> Vec<String> {
    let mut items = Vec::new();
    for part in text.split([';', '|']) {
        for piece in part.split(", ") {
            for item in split_on_and(piece) {
                let item = item.trim().trim_end_matches(',').trim();
                if !item.is_empty() {
                    items.push(item.to_string());
                }
            }
        }
    }
    items
}

fn split_on_and(text: &str) -> Vec<&str> {
    let lower = text.to_ascii_lowercase();
    let mut out = Vec::new();
    let mut last = 0;
    let mut from = 0;
    while let Some(pos) = lower[from..].find(" and ") {
        let at = from + pos;
        out.push(&text[last..at]);
        last = at + " and ".len();
        from = last;
    }
    out.push(&text[last..]);
    out
}

/// Types a backend answer: yes/no, list, leading number, or plain text.
pub fn classify_answer(text: &str) -> Payload {
    let t = text.trim();
    match t.to_ascii_lowercase().trim_end_matches('.') {
        "yes" => return Payload::YesNo(true),
        "no" => return Payload::YesNo(false),
        _ => {}
    }
    let items = split_list(t);
    if items.len() >= 2 {
        return Payload::TextList(items);
    }
    if let Some((v, _unit)) = numbers::parse_leading_number(t) {
        return Payload::Number(v);
    }
    Payload::Text(t.to_string())
}

struct Run<'a, B: ?Sized> {
    d: &'a Decomposition,
    context: &'a str,
    backend: &'a B,
    cfg: &'a EvaluatorConfig,
    values: BTreeMap<usize, StepValue>,
}

impl<B: RcBackend + ?Sized> Run<'_, B> {
    fn value(&self, step: usize, reference: usize) -> Result<&StepValue, Discard> {
        self.values
            .get(&reference)
            .ok_or(Discard::MissingValue { step, reference })
    }

    /// Distinct references in textual order.
    fn args(&self, index: usize) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        self.d
            .step(index)
            .map(|s| s.refs_in_order())
            .unwrap_or_default()
            .into_iter()
            .filter(|r| seen.insert(*r))
            .collect()
    }

    fn first_provenance(&self, args: &[usize]) -> Option<String> {
        args.first()
            .and_then(|r| self.values.get(r))
            .and_then(|v| v.provenance.clone())
    }

    fn query(&self, index: usize) -> Result<StepValue, Discard> {
        let step = self.d.step(index).expect("index in range");
        let question = substitute_refs(step.text(), &self.values)
            .map_err(|reference| Discard::MissingValue { step: index, reference })?;
        let reply = self
            .backend
            .answer(&question, self.context)
            .map_err(|error| Discard::Backend { step: index, error })?;
        let answer = reply.answer.trim();
        if answer.is_empty() {
            return Err(Discard::EmptyAnswer { step: index });
        }
        let words = word_count(answer);
        if words > self.cfg.max_answer_words {
            return Err(Discard::AnswerTooLong { step: index, words });
        }
        let args = self.args(index);
        let provenance = if args.is_empty() {
            Some(step.text().to_string())
        } else {
            self.first_provenance(&args)
        };
        Ok(StepValue {
            payload: classify_answer(answer),
            provenance,
        })
    }

    fn check_noisy(&self, index: usize, args: &[usize]) -> Result<(), Discard> {
        for &input in args {
            let producer = self.d.step(input).map(|s| s.operator());
            let kind = self.value(index, input)?.kind();
            if let Some(op) = producer {
                if self.cfg.noisy_op_blocklist.contains(&(op, kind)) {
                    return Err(Discard::NoisyOperation { step: index, input });
                }
            }
        }
        Ok(())
    }

    fn number(&self, index: usize, reference: usize) -> Result<f64, Discard> {
        match self.value(index, reference)?.payload {
            Payload::Number(v) => Ok(v),
            _ => Err(Discard::TypeMismatch { step: index }),
        }
    }

    fn numbers_of(&self, index: usize, reference: usize) -> Result<Vec<f64>, Discard> {
        match &self.value(index, reference)?.payload {
            Payload::Number(v) => Ok(alloc::vec![*v]),
            Payload::TextList(items) => items
                .iter()
                .map(|i| numbers::parse_leading_number(i).map(|(v, _)| v))
                .collect::<Option<Vec<_>>>()
                .ok_or(Discard::TypeMismatch { step: index }),
            _ => Err(Discard::TypeMismatch { step: index }),
        }
    }

    fn items(&self, index: usize, reference: usize) -> Result<Vec<String>, Discard> {
        match &self.value(index, reference)?.payload {
            Payload::Number(v) => Ok(alloc::vec![numbers::format_number(*v)]),
            Payload::Text(t) => Ok(alloc::vec![t.clone()]),
            Payload::TextList(items) => Ok(items.clone()),
            Payload::YesNo(_) => Err(Discard::TypeMismatch { step: index }),
        }
    }

    fn yes_no(&self, index: usize, reference: usize) -> Result<bool, Discard> {
        match self.value(index, reference)?.payload {
            Payload::YesNo(b) => Ok(b),
            _ => Err(Discard::TypeMismatch { step: index }),
        }
    }

    fn pair(&self, args: &[usize]) -> Result<(usize, usize), Discard> {
        match args {
            &[a, b] => Ok((a, b)),
            _ => Err(Discard::InvalidDecomposition),
        }
    }

    fn compute(&mut self, index: usize) -> Result<StepValue, Discard> {
        let step = self.d.step(index).expect("index in range");
        let op = step.operator();
        let args = self.args(index);
        let provenance = self.first_provenance(&args);
        let payload = match op {
            Operator::Select | Operator::Filter | Operator::Project | Operator::Other => {
                return self.query(index);
            }
            Operator::Intersection | Operator::Discard if args.len() < 2 => {
                return self.query(index);
            }
            Operator::Aggregate(agg) => {
                self.check_noisy(index, &args)?;
                let &[input] = args.as_slice() else {
                    return Err(Discard::InvalidDecomposition);
                };
                match agg {
                    Aggregate::Count => match &self.value(index, input)?.payload {
                        Payload::TextList(items) => Payload::Number(items.len() as f64),
                        Payload::Text(_) => Payload::Number(1.0),
                        Payload::Number(v) => Payload::Number(*v),
                        Payload::YesNo(_) => return Err(Discard::TypeMismatch { step: index }),
                    },
                    Aggregate::Sum | Aggregate::Max | Aggregate::Min | Aggregate::Avg => {
                        let xs = self.numbers_of(index, input)?;
                        if xs.is_empty() && agg != Aggregate::Sum {
                            return Err(Discard::EmptyAnswer { step: index });
                        }
                        let v = match agg {
                            Aggregate::Sum => xs.iter().sum(),
                            Aggregate::Max => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                            Aggregate::Min => xs.iter().copied().fold(f64::INFINITY, f64::min),
                            _ => xs.iter().sum::<f64>() / xs.len() as f64,
                        };
                        Payload::Number(v)
                    }
                }
            }
            Operator::Arithmetic(kind) => {
                self.check_noisy(index, &args)?;
                let (a, b) = self.pair(&args)?;
                let (x, y) = (self.number(index, a)?, self.number(index, b)?);
                Payload::Number(match kind {
                    Arithmetic::Sum => x + y,
                    Arithmetic::Difference => (x - y).abs(),
                })
            }
            Operator::Comparison(extremum) => {
                let mut best: Option<(f64, usize)> = None;
                let mut tie = false;
                for &r in &args {
                    let v = self.number(index, r)?;
                    match best {
                        None => best = Some((v, r)),
                        Some((b, _)) if approx_eq(v, b) => tie = true,
                        Some((b, _)) => {
                            let better = match extremum {
                                Extremum::Highest => v > b,
                                Extremum::Lowest => v < b,
                            };
                            if better {
                                best = Some((v, r));
                                tie = false;
                            }
                        }
                    }
                }
                let (_, winner) = best.ok_or(Discard::InvalidDecomposition)?;
                if tie {
                    return Err(Discard::Tie { step: index });
                }
                let won = self.value(index, winner)?;
                let label = won.provenance.clone().unwrap_or_else(|| won.render());
                return Ok(StepValue {
                    payload: Payload::Text(label.clone()),
                    provenance: Some(label),
                });
            }
            Operator::Boolean(check) => match check {
                BooleanCheck::CompareToValue => {
                    let clause = qdmr::compare_clause(step.text()).ok_or(Discard::InvalidDecomposition)?;
                    let v = self.number(index, clause.reference)?;
                    Payload::YesNo(clause.op.holds(v, clause.value))
                }
                BooleanCheck::SameAs => {
                    let (a, b) = self.pair(&args)?;
                    let (va, vb) = (self.value(index, a)?, self.value(index, b)?);
                    Payload::YesNo(same_value(va, vb))
                }
                BooleanCheck::BothTrue | BooleanCheck::BothFalse => {
                    let (a, b) = self.pair(&args)?;
                    let (x, y) = (self.yes_no(index, a)?, self.yes_no(index, b)?);
                    Payload::YesNo(if check == BooleanCheck::BothTrue {
                        x && y
                    } else {
                        !x && !y
                    })
                }
            },
            Operator::Union => {
                let mut out: Vec<String> = Vec::new();
                let mut seen = BTreeSet::new();
                for &r in &args {
                    for item in self.items(index, r)? {
                        if seen.insert(normalize_answer(&item)) {
                            out.push(item);
                        }
                    }
                }
                Payload::TextList(out)
            }
            Operator::Intersection | Operator::Discard => {
                let first = self.items(index, args[0])?;
                let mut others = Vec::new();
                for &r in &args[1..] {
                    let set: BTreeSet<String> = self.items(index, r)?.iter().map(|i| normalize_answer(i)).collect();
                    others.push(set);
                }
                let keep_present = op == Operator::Intersection;
                let kept: Vec<String> = first
                    .into_iter()
                    .filter(|item| {
                        let key = normalize_answer(item);
                        if keep_present {
                            others.iter().all(|s| s.contains(&key))
                        } else {
                            !others.iter().any(|s| s.contains(&key))
                        }
                    })
                    .collect();
                Payload::TextList(kept)
            }
        };
        Ok(StepValue { payload, provenance })
    }
}

fn value_number(v: &StepValue) -> Option<f64> {
    match &v.payload {
        Payload::Number(x) => Some(*x),
        Payload::Text(t) => numbers::parse_leading_number(t).map(|(x, _)| x),
        _ => None,
    }
}

/// Equality after normalization: numerically when both sides are numbers
/// (units ignored), otherwise on normalized text or item sets.
pub fn same_value(a: &StepValue, b: &StepValue) -> bool {
    if let (Some(x), Some(y)) = (value_number(a), value_number(b)) {
        return approx_eq(x, y);
    }
    match (&a.payload, &b.payload) {
        (Payload::YesNo(x), Payload::YesNo(y)) => x == y,
        (Payload::TextList(xs), Payload::TextList(ys)) => {
            let xs: BTreeSet<String> = xs.iter().map(|s| normalize_answer(s)).collect();
            let ys: BTreeSet<String> = ys.iter().map(|s| normalize_answer(s)).collect();
            xs == ys
        }
        _ => normalize_answer(&a.render()) == normalize_answer(&b.render()),
    }
}

/// Executes `d` over `context`. `Err` means the candidate is discarded.
pub fn evaluate<B: RcBackend + ?Sized>(
    d: &Decomposition,
    context: &str,
    backend: &B,
    cfg: &EvaluatorConfig,
) -> Result<Answer, Discard> {
    if !d.is_valid() {
        return Err(Discard::InvalidDecomposition);
    }
    let mut run = Run {
        d,
        context,
        backend,
        cfg,
        values: BTreeMap::new(),
    };
    for index in 1..=d.len() {
        let value = run.compute(index)?;
        run.values.insert(index, value);
    }
    let root = run.values.remove(&d.root_index()).expect("root evaluated");
    let answer = root.into_answer();
    let words = word_count(&answer.to_text());
    if words > cfg.max_answer_words {
        return Err(Discard::AnswerTooLong {
            step: d.root_index(),
            words,
        });
    }
    if let Answer::Spans { texts } = &answer {
        if texts.is_empty() {
            return Err(Discard::EmptyAnswer { step: d.root_index() });
        }
    }
    Ok(answer)
}
