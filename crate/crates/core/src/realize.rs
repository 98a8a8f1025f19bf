//! Turning a perturbed decomposition back into a question.
//!
//! Four surface patterns rewrite the original question directly; anything
//! else goes to a question-generation backend. Patterns are tried first.

use alloc::format;
use alloc::string::{String, ToString};

use crate::backend::{BackendError, QgBackend};
use crate::lexicon;
use crate::numbers;
use crate::perturb::{PerturbationKind, RewriteCandidate};
use crate::qdmr::CompareOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum RealizationMethod {
    Pattern,
    Backend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum PatternId {
    HowmanyDid,
    HowmanyWere,
    BothToNeither,
    SuperlativeAntonym,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizationResult {
    pub question: String,
    pub method: RealizationMethod,
    pub pattern_id: Option<PatternId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RealizeError {
    #[error("question generator unavailable: {0}")]
    BackendUnavailable(String),
    #[error("question generator returned a malformed reply: {0}")]
    BackendMalformedReply(String),
    #[error("no pattern matched and no question generator is configured")]
    NoRealization,
}

impl From<BackendError> for RealizeError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Malformed(m) => RealizeError::BackendMalformedReply(m),
            other => RealizeError::BackendUnavailable(other.to_string()),
        }
    }
}

/// Antonym of a comparative or superlative token, lowercase.
pub fn antonym(word: &str) -> Option<&'static str> {
    lexicon::ANTONYM_PAIRS.iter().find_map(|&(a, b)| {
        if a.eq_ignore_ascii_case(word) {
            Some(b)
        } else if b.eq_ignore_ascii_case(word) {
            Some(a)
        } else {
            None
        }
    })
}

/// How a comparison reads inside a realized question. `>=` reads as the bare
/// numeral ("if there were two touchdowns"), under the at-least reading of
/// English numerals.
pub fn question_phrase(op: CompareOp) -> &'static str {
    match op {
        CompareOp::Gt => "more than",
        CompareOp::Lt => "less than",
        CompareOp::Ge => "",
        CompareOp::Le => "at most",
        CompareOp::Ne => "other than",
    }
}

fn with_phrase(op: CompareOp, value: &str) -> String {
    match question_phrase(op) {
        "" => value.to_string(),
        phrase => format!("{phrase} {value}"),
    }
}

/// Splits "How ...?" into the body without the question mark.
fn question_body(q: &str) -> Option<&str> {
    let q = q.trim();
    let body = q.strip_suffix('?')?.trim_end();
    (!body.is_empty()).then_some(body)
}

fn find_ci(haystack_lower: &str, needle: &str, from: usize) -> Option<usize> {
    haystack_lower.get(from..)?.find(needle).map(|p| p + from)
}

const HOW_MANY: &str = "how many ";

fn howmany_did(q: &str, op: CompareOp, value: f64) -> Option<String> {
    let body = question_body(q)?;
    let lower = body.to_ascii_lowercase();
    if !lower.starts_with(HOW_MANY) {
        return None;
    }
    let did = find_ci(&lower, " did ", HOW_MANY.len())?;
    let things = body[HOW_MANY.len()..did].trim();
    let clause = body[did + " did ".len()..].trim();
    if things.is_empty() || clause.is_empty() {
        return None;
    }
    let value = numbers::format_number(value);
    Some(format!("If {clause} {} {things}?", with_phrase(op, &value)))
}

fn howmany_were(q: &str, op: CompareOp, value: f64) -> Option<String> {
    let body = question_body(q)?;
    let lower = body.to_ascii_lowercase();
    if !lower.starts_with(HOW_MANY) {
        return None;
    }
    let were = find_ci(&lower, " were there", HOW_MANY.len())?;
    let things = body[HOW_MANY.len()..were].trim();
    let tail = &body[were + " were there".len()..];
    if things.is_empty() || !(tail.is_empty() || tail.starts_with(' ')) {
        return None;
    }
    let value = spelled_number(value);
    Some(format!("If there were {} {things}{tail}?", with_phrase(op, &value)))
}

/// Numbers one to ten are spelled out, others are digits.
fn spelled_number(value: f64) -> String {
    if numbers::is_integer(value) && (1.0..=10.0).contains(&value) {
        if let Some(word) = lexicon::number_to_word(value as u32) {
            return word.to_string();
        }
    }
    numbers::format_number(value)
}

fn both_to_neither(q: &str) -> Option<String> {
    let body = question_body(q)?;
    let (aux, rest) = body.split_once(' ')?;
    if !lexicon::YES_NO_AUXILIARIES.iter().any(|a| a.eq_ignore_ascii_case(aux)) {
        return None;
    }
    let lower = rest.to_ascii_lowercase();
    let and = find_ci(&lower, " and ", 0)?;
    let both = find_ci(&lower, " both ", and + " and ".len() - 1)?;
    let first = rest[..and].trim();
    let second = rest[and + " and ".len()..both].trim();
    let predicate = rest[both + " both ".len()..].trim();
    if first.is_empty() || second.is_empty() || predicate.is_empty() {
        return None;
    }
    Some(format!("{aux} neither {first} nor {second} {predicate}?"))
}

fn match_case(template: &str, word: &str) -> String {
    let mut chars = template.chars();
    match chars.next() {
        Some(c) if c.is_uppercase() && chars.all(char::is_uppercase) && template.len() > 1 => word.to_ascii_uppercase(),
        Some(c) if c.is_uppercase() => {
            let mut out = word.to_string();
            if let Some(first) = out.get_mut(..1) {
                first.make_ascii_uppercase();
            }
            out
        }
        _ => word.to_string(),
    }
}

fn superlative_antonym(q: &str) -> Option<String> {
    question_body(q)?;
    let q = q.trim();
    let bytes = q.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if !bytes[i].is_ascii_alphabetic() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
            i += 1;
        }
        let word = &q[start..i];
        if let Some(replacement) = antonym(word) {
            return Some(format!("{}{}{}", &q[..start], match_case(word, replacement), &q[i..]));
        }
    }
    None
}

/// Rule-based realization for APPEND_BOOL, REPLACE_BOOL and REPLACE_COMP.
/// `None` means no pattern applies and the caller should fall through to a
/// question-generation backend.
pub fn realize_pattern(question: &str, candidate: &RewriteCandidate) -> Option<RealizationResult> {
    let (text, pattern) = match candidate.kind {
        PerturbationKind::AppendBool => {
            let cond = candidate.condition?;
            howmany_did(question, cond.op, cond.value)
                .map(|t| (t, PatternId::HowmanyDid))
                .or_else(|| howmany_were(question, cond.op, cond.value).map(|t| (t, PatternId::HowmanyWere)))?
        }
        PerturbationKind::ReplaceBool => (both_to_neither(question)?, PatternId::BothToNeither),
        PerturbationKind::ReplaceComp => (superlative_antonym(question)?, PatternId::SuperlativeAntonym),
        _ => return None,
    };
    Some(RealizationResult {
        question: text,
        method: RealizationMethod::Pattern,
        pattern_id: Some(pattern),
    })
}

/// Asks the question generator to realize the perturbed decomposition.
pub fn realize_backend<Q: QgBackend + ?Sized>(
    candidate: &RewriteCandidate,
    qg: &Q,
) -> Result<RealizationResult, RealizeError> {
    let reply = qg.generate_question(&candidate.decomposition.texts())?;
    let question = reply.trim();
    if question.is_empty() {
        return Err(RealizeError::BackendMalformedReply("empty question".into()));
    }
    let question = if question.ends_with('?') {
        question.to_string()
    } else {
        format!("{question}?")
    };
    Ok(RealizationResult {
        question,
        method: RealizationMethod::Backend,
        pattern_id: None,
    })
}

/// Pattern first, then the backend when one is supplied.
pub fn realize<Q: QgBackend + ?Sized>(
    question: &str,
    candidate: &RewriteCandidate,
    qg: Option<&Q>,
) -> Result<RealizationResult, RealizeError> {
    if let Some(result) = realize_pattern(question, candidate) {
        return Ok(result);
    }
    match qg {
        Some(qg) => realize_backend(candidate, qg),
        None => Err(RealizeError::NoRealization),
    }
}
