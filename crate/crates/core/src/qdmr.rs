//! Typed IR for QDMR decompositions.
//!
//! A [`Decomposition`] is an ordered list of natural-language [`Step`]s. Steps
//! refer to earlier results with `#k` tokens (1-indexed, backward only) and
//! carry an [`Operator`] label derived from their text by a keyword table.
//! The textual format is the public Break layout: steps joined by `;`, each
//! optionally prefixed with `return `.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::lexicon;
use crate::numbers;

const DELIMITER: char = ';';
const RETURN_PREFIX: &str = "return ";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QdmrError {
    #[error("decomposition has no steps")]
    EmptyDecomposition,
    #[error("step {0} is empty")]
    EmptyStep(usize),
    #[error("step {step} references #{reference}, which is not an earlier step")]
    ForwardReference { step: usize, reference: usize },
    #[error("step {step} contains malformed reference {token:?}")]
    MalformedReference { step: usize, token: String },
    #[error("step {step} references deleted step #{reference}")]
    DanglingReference { step: usize, reference: usize },
    #[error("step text contains the step delimiter: {0:?}")]
    DelimiterInStep(String),
}

/// Structural problems reported by [`Decomposition::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    ForwardReference { step: usize, reference: usize },
    Unreachable(usize),
    Arity { step: usize, expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ForwardReference { step, reference } => {
                write!(f, "step {step} references #{reference} out of order")
            }
            Violation::Unreachable(step) => write!(f, "step {step} is unreachable from the root"),
            Violation::Arity { step, expected, found } => {
                write!(f, "step {step} takes {expected} references, found {found}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Aggregate {
    Count,
    Sum,
    Max,
    Min,
    Avg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Arithmetic {
    Sum,
    Difference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Extremum {
    Highest,
    Lowest,
}

impl Extremum {
    pub fn flipped(self) -> Self {
        match self {
            Extremum::Highest => Extremum::Lowest,
            Extremum::Lowest => Extremum::Highest,
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            Extremum::Highest => "highest",
            Extremum::Lowest => "lowest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BooleanCheck {
    CompareToValue,
    SameAs,
    BothTrue,
    BothFalse,
}

/// Logical operation of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Operator {
    Select,
    Filter,
    Project,
    Aggregate(Aggregate),
    Arithmetic(Arithmetic),
    Comparison(Extremum),
    Boolean(BooleanCheck),
    Union,
    Intersection,
    Discard,
    Other,
}

impl Operator {
    /// Exact number of references the operator takes, when fixed.
    pub fn arity(self) -> Option<usize> {
        match self {
            Operator::Arithmetic(_) | Operator::Comparison(_) => Some(2),
            Operator::Boolean(BooleanCheck::CompareToValue) => Some(1),
            Operator::Boolean(_) => Some(2),
            _ => None,
        }
    }

    /// Operators answered by querying the reading-comprehension backend.
    pub fn queries_backend(self) -> bool {
        matches!(
            self,
            Operator::Select | Operator::Filter | Operator::Project | Operator::Other
        )
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::Select => f.write_str("SELECT"),
            Operator::Filter => f.write_str("FILTER"),
            Operator::Project => f.write_str("PROJECT"),
            Operator::Aggregate(a) => write!(f, "AGGREGATE({a:?})"),
            Operator::Arithmetic(a) => write!(f, "ARITHMETIC({a:?})"),
            Operator::Comparison(e) => write!(f, "COMPARISON({})", e.word()),
            Operator::Boolean(b) => write!(f, "BOOLEAN({b:?})"),
            Operator::Union => f.write_str("UNION"),
            Operator::Intersection => f.write_str("INTERSECTION"),
            Operator::Discard => f.write_str("DISCARD"),
            Operator::Other => f.write_str("OTHER"),
        }
    }
}

/// The five comparison operators used by appended yes/no steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CompareOp {
    #[cfg_attr(feature = "serde", serde(rename = ">"))]
    Gt,
    #[cfg_attr(feature = "serde", serde(rename = "<"))]
    Lt,
    #[cfg_attr(feature = "serde", serde(rename = "<="))]
    Le,
    #[cfg_attr(feature = "serde", serde(rename = ">="))]
    Ge,
    #[cfg_attr(feature = "serde", serde(rename = "!="))]
    Ne,
}

impl CompareOp {
    pub const ALL: [CompareOp; 5] = [
        CompareOp::Gt,
        CompareOp::Lt,
        CompareOp::Le,
        CompareOp::Ge,
        CompareOp::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Gt => ">",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Ge => ">=",
            CompareOp::Ne => "!=",
        }
    }

    /// Phrase used inside QDMR step text ("if #3 is higher than 2").
    pub fn step_phrase(self) -> &'static str {
        match self {
            CompareOp::Gt => "higher than",
            CompareOp::Lt => "lower than",
            CompareOp::Ge => "at least",
            CompareOp::Le => "at most",
            CompareOp::Ne => "not equal to",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        let eq = numbers::approx_eq(lhs, rhs);
        match self {
            CompareOp::Gt => lhs > rhs && !eq,
            CompareOp::Lt => lhs < rhs && !eq,
            CompareOp::Le => lhs < rhs || eq,
            CompareOp::Ge => lhs > rhs || eq,
            CompareOp::Ne => !eq,
        }
    }

    /// Logical complement, defined for the two complementary pairs.
    pub fn complement(self) -> Option<CompareOp> {
        match self {
            CompareOp::Gt => Some(CompareOp::Le),
            CompareOp::Le => Some(CompareOp::Gt),
            CompareOp::Lt => Some(CompareOp::Ge),
            CompareOp::Ge => Some(CompareOp::Lt),
            CompareOp::Ne => None,
        }
    }
}

/// A `#k` token found in step text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RefToken {
    pub span: Range<usize>,
    pub index: usize,
}

/// Locates every `#k` token. `step` is only used for error reporting.
pub(crate) fn scan_refs(text: &str, step: usize) -> Result<Vec<RefToken>, QdmrError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'#' {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i + 1;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        let malformed = || {
            let tail = text[start..].split_whitespace().next().unwrap_or("#").to_string();
            QdmrError::MalformedReference { step, token: tail }
        };
        if end == start + 1 {
            return Err(malformed());
        }
        let index: usize = text[start + 1..end].parse().map_err(|_| malformed())?;
        if index == 0 {
            return Err(malformed());
        }
        out.push(RefToken {
            span: start..end,
            index,
        });
        i = end;
    }
    Ok(out)
}

/// Rewrites every `#k` token through `map`. Tokens the map rejects are
/// reported as the returned error index.
pub(crate) fn rewrite_refs(text: &str, mut map: impl FnMut(usize) -> Option<usize>) -> Result<String, usize> {
    let tokens = scan_refs(text, 0).unwrap_or_default();
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for tok in tokens {
        out.push_str(&text[last..tok.span.start]);
        let new = map(tok.index).ok_or(tok.index)?;
        out.push('#');
        out.push_str(&new.to_string());
        last = tok.span.end;
    }
    out.push_str(&text[last..]);
    Ok(out)
}

/// Replaces every `#k` token with the text `fill` returns for it.
pub(crate) fn rewrite_refs_with(text: &str, mut fill: impl FnMut(usize) -> Option<String>) -> Result<String, usize> {
    let tokens = scan_refs(text, 0).unwrap_or_default();
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for tok in tokens {
        out.push_str(&text[last..tok.span.start]);
        out.push_str(&fill(tok.index).ok_or(tok.index)?);
        last = tok.span.end;
    }
    out.push_str(&text[last..]);
    Ok(out)
}

fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// One reasoning step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    text: String,
    refs: Vec<usize>,
    operator: Operator,
}

impl Step {
    /// Builds a step from its text, extracting references and classifying the
    /// operator. Whitespace runs are collapsed.
    pub fn new(text: &str) -> Result<Self, QdmrError> {
        Self::at(text, 0)
    }

    fn at(text: &str, index: usize) -> Result<Self, QdmrError> {
        let text = collapse_whitespace(text);
        if text.is_empty() {
            return Err(QdmrError::EmptyStep(index));
        }
        if text.contains(DELIMITER) {
            return Err(QdmrError::DelimiterInStep(text));
        }
        let refs: BTreeSet<usize> = scan_refs(&text, index)?.into_iter().map(|t| t.index).collect();
        let refs: Vec<usize> = refs.into_iter().collect();
        let operator = classify_operator(&text, refs.len());
        Ok(Step { text, refs, operator })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Distinct referenced step indices, ascending.
    pub fn refs(&self) -> &[usize] {
        &self.refs
    }

    /// Referenced indices in textual order, duplicates kept.
    pub fn refs_in_order(&self) -> Vec<usize> {
        scan_refs(&self.text, 0)
            .map(|toks| toks.into_iter().map(|t| t.index).collect())
            .unwrap_or_default()
    }

    pub fn operator(&self) -> Operator {
        self.operator
    }
}

/// A validated-on-construction QDMR decomposition: non-empty, and every
/// reference points to an earlier step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    steps: Vec<Step>,
    source_question: Option<String>,
}

impl Decomposition {
    pub fn new(steps: Vec<Step>) -> Result<Self, QdmrError> {
        if steps.is_empty() {
            return Err(QdmrError::EmptyDecomposition);
        }
        for (i, step) in steps.iter().enumerate() {
            let index = i + 1;
            if let Some(&bad) = step.refs.iter().find(|&&r| r >= index) {
                return Err(QdmrError::ForwardReference {
                    step: index,
                    reference: bad,
                });
            }
        }
        Ok(Decomposition {
            steps,
            source_question: None,
        })
    }

    pub fn from_texts<I, S>(texts: I) -> Result<Self, QdmrError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let steps = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| Step::at(t.as_ref(), i + 1))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(steps)
    }

    /// Parses the `;`-delimited Break layout.
    pub fn parse(text: &str) -> Result<Self, QdmrError> {
        if text.trim().is_empty() {
            return Err(QdmrError::EmptyDecomposition);
        }
        let texts: Vec<&str> = text
            .split(DELIMITER)
            .map(|part| {
                let part = part.trim();
                match part.get(..RETURN_PREFIX.len()) {
                    Some(prefix) if prefix.eq_ignore_ascii_case(RETURN_PREFIX) => {
                        part[RETURN_PREFIX.len()..].trim_start()
                    }
                    _ => part,
                }
            })
            .collect();
        Self::from_texts(texts)
    }

    pub fn with_source_question(mut self, question: impl Into<String>) -> Self {
        self.source_question = Some(question.into());
        self
    }

    pub fn source_question(&self) -> Option<&str> {
        self.source_question.as_deref()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// 1-indexed access.
    pub fn step(&self, index: usize) -> Option<&Step> {
        index.checked_sub(1).and_then(|i| self.steps.get(i))
    }

    pub fn root_index(&self) -> usize {
        self.steps.len()
    }

    pub fn root(&self) -> &Step {
        self.steps.last().expect("decomposition is never empty")
    }

    pub fn texts(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.text.clone()).collect()
    }

    /// Canonical Break-layout string.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                out.push_str(" ;");
            }
            out.push_str(RETURN_PREFIX);
            out.push_str(&step.text);
        }
        out
    }

    /// Steps reachable from the root through references, root included.
    pub fn reachable(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = alloc::vec![self.root_index()];
        while let Some(i) = stack.pop() {
            if !seen.insert(i) {
                continue;
            }
            if let Some(step) = self.step(i) {
                stack.extend(step.refs.iter().copied());
            }
        }
        seen
    }

    /// Checks backward references, reachability from the root and operator
    /// arity. Reports every violation instead of stopping at the first.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut violations = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            let index = i + 1;
            for &r in &step.refs {
                if r == 0 || r >= index {
                    violations.push(Violation::ForwardReference {
                        step: index,
                        reference: r,
                    });
                }
            }
            if let Some(expected) = step.operator.arity() {
                if step.refs.len() != expected {
                    violations.push(Violation::Arity {
                        step: index,
                        expected,
                        found: step.refs.len(),
                    });
                }
            }
        }
        let reachable = self.reachable();
        for index in 1..=self.steps.len() {
            if !reachable.contains(&index) {
                violations.push(Violation::Unreachable(index));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Step texts keyed by their current index, the input shape of
    /// [`renumber`].
    pub fn to_step_map(&self) -> BTreeMap<usize, String> {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, s)| (i + 1, s.text.clone()))
            .collect()
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

pub fn parse_decomposition(text: &str) -> Result<Decomposition, QdmrError> {
    Decomposition::parse(text)
}

pub fn serialize(d: &Decomposition) -> String {
    d.serialize()
}

/// Compacts a step map with gaps to indices `1..=n`, preserving order and
/// rewriting every `#k` token. References to missing steps are an error; the
/// caller must rewire them first.
pub fn renumber(steps: &BTreeMap<usize, String>) -> Result<Decomposition, QdmrError> {
    let mapping: BTreeMap<usize, usize> = steps.keys().enumerate().map(|(new, &old)| (old, new + 1)).collect();
    let mut texts = Vec::with_capacity(steps.len());
    for (&old, text) in steps {
        let rewritten = rewrite_refs(text, |r| mapping.get(&r).copied())
            .map_err(|reference| QdmrError::DanglingReference { step: old, reference })?;
        texts.push(rewritten);
    }
    Decomposition::from_texts(texts)
}

// ---------------------------------------------------------------------------
// Operator classification
// ---------------------------------------------------------------------------

fn normalize_for_matching(text: &str) -> String {
    let lower = collapse_whitespace(&text.to_ascii_lowercase());
    lower.trim_end_matches('?').trim_end().to_string()
}

fn has_word_phrase(haystack: &str, phrase: &str) -> bool {
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(phrase) {
        let start = from + pos;
        let end = start + phrase.len();
        let before_ok = start == 0 || !haystack.as_bytes()[start - 1].is_ascii_alphanumeric();
        let after_ok = end == haystack.len() || !haystack.as_bytes()[end].is_ascii_alphanumeric();
        if before_ok && after_ok {
            return true;
        }
        from = start + 1;
    }
    false
}

/// Classifies a step by keyword. Pure: the same text and reference count
/// always yield the same label.
pub fn classify_operator(step_text: &str, ref_count: usize) -> Operator {
    let text = normalize_for_matching(step_text);

    if let Some(rest) = text.strip_prefix("if ") {
        return classify_boolean(rest, ref_count);
    }
    if has_word_phrase(&text, "number of") {
        return Operator::Aggregate(Aggregate::Count);
    }
    if has_word_phrase(&text, "sum of") || has_word_phrase(&text, "total of") {
        return if ref_count == 2 {
            Operator::Arithmetic(Arithmetic::Sum)
        } else {
            Operator::Aggregate(Aggregate::Sum)
        };
    }
    if has_word_phrase(&text, "difference of") || has_word_phrase(&text, "difference between") {
        return Operator::Arithmetic(Arithmetic::Difference);
    }
    if let Some(extremum) = comparison_extremum(&text) {
        return if text.starts_with("which ") || ref_count >= 2 {
            Operator::Comparison(extremum)
        } else {
            match extremum {
                Extremum::Highest => Operator::Aggregate(Aggregate::Max),
                Extremum::Lowest => Operator::Aggregate(Aggregate::Min),
            }
        };
    }
    if ["average of", "mean of", "avg of"]
        .iter()
        .any(|p| has_word_phrase(&text, p))
    {
        return Operator::Aggregate(Aggregate::Avg);
    }
    if ref_count >= 2 && is_union(&text) {
        return Operator::Union;
    }
    if ref_count >= 1 && has_word_phrase(&text, "in both") {
        return Operator::Intersection;
    }
    if ref_count >= 1
        && ["besides", "excluding", "except"]
            .iter()
            .any(|p| has_word_phrase(&text, p))
    {
        return Operator::Discard;
    }
    if ref_count >= 1 && text.starts_with('#') {
        return Operator::Filter;
    }
    if ref_count >= 1 {
        return Operator::Project;
    }
    Operator::Select
}

/// The extremum word directly before "of #k", e.g. "which is smaller of #1".
fn comparison_extremum(text: &str) -> Option<Extremum> {
    let pos = text.find(" of #")?;
    let word = text[..pos].rsplit(' ').next()?;
    lexicon::extremum_of(word)
}

fn is_union(text: &str) -> bool {
    let tokens = scan_refs(text, 0).unwrap_or_default();
    let mut stripped = String::new();
    let mut last = 0;
    for tok in &tokens {
        stripped.push_str(&text[last..tok.span.start]);
        stripped.push(' ');
        last = tok.span.end;
    }
    stripped.push_str(&text[last..]);
    stripped
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|w| !w.is_empty())
        .all(|w| w == "or" || w == "and")
}

fn classify_boolean(rest: &str, ref_count: usize) -> Operator {
    let both = rest.starts_with("both ") || has_word_phrase(rest, "both");
    if both && (rest.ends_with(" true") || rest.ends_with(" correct")) {
        return Operator::Boolean(BooleanCheck::BothTrue);
    }
    if both && (rest.ends_with(" false") || rest.ends_with(" incorrect")) {
        return Operator::Boolean(BooleanCheck::BothFalse);
    }
    if has_word_phrase(rest, "the same as") || has_word_phrase(rest, "are the same") {
        return Operator::Boolean(BooleanCheck::SameAs);
    }
    if parse_compare_clause(rest).is_some() {
        return Operator::Boolean(BooleanCheck::CompareToValue);
    }
    if ref_count == 0 {
        Operator::Select
    } else {
        Operator::Other
    }
}

/// A parsed "#k is <phrase> <number>" clause.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareClause {
    pub reference: usize,
    pub op: CompareOp,
    pub value: f64,
}

fn parse_compare_clause(rest: &str) -> Option<CompareClause> {
    let tokens = scan_refs(rest, 0).ok()?;
    let first = tokens.first()?;
    let after = rest[first.span.end..].trim_start();
    let after = after
        .strip_prefix("is ")
        .or_else(|| after.strip_prefix("are "))
        .or_else(|| after.strip_prefix("was "))?;
    let (phrase, op) = lexicon::COMPARE_PHRASES
        .iter()
        .find(|(p, _)| after.starts_with(p) && after[p.len()..].starts_with(' '))?;
    let value_text = after[phrase.len()..].trim();
    if value_text.starts_with('#') {
        return None;
    }
    let (value, _) = numbers::parse_leading_number(value_text)?;
    Some(CompareClause {
        reference: first.index,
        op: *op,
        value,
    })
}

/// Extracts the comparison from a compare-to-value step such as
/// "if #3 is higher than 2".
pub fn compare_clause(step_text: &str) -> Option<CompareClause> {
    let text = normalize_for_matching(step_text);
    let rest = text.strip_prefix("if ").unwrap_or(&text);
    parse_compare_clause(rest)
}
