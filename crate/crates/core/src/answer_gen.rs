//! Rule-based answers for perturbed questions and the answer constraints
//! attached when no exact answer can be derived.

use alloc::vec;
use alloc::vec::Vec;

use crate::answer::{Answer, Constraint};
use crate::metrics::normalize_answer;
use crate::numbers::{self, approx_eq};
use crate::perturb::{ArithFlip, ComparisonCondition, PerturbationKind};

/// Original answers below this value are too ambiguous to flip.
pub const MIN_ARITH_ANSWER: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnswerGenError {
    #[error("rule does not apply to a {0} answer")]
    NotApplicable(&'static str),
}

/// Whether the appended comparison holds for the original answer.
pub fn answer_append_bool(a: f64, cond: ComparisonCondition) -> Answer {
    Answer::yes_no(cond.op.holds(a, cond.value))
}

/// The distinct unordered value pairs `(x, y)`, `x <= y`, drawn from two
/// different positions of `numbers`, that combine to `a`.
pub fn arith_pairs(a: f64, numbers: &[f64], flip: ArithFlip) -> Vec<(f64, f64)> {
    let mut sorted: Vec<f64> = numbers.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let n = sorted.len();
    // Two pointers over the sorted values for each combination rule.
    match flip {
        ArithFlip::SumToDifference => {
            let (mut lo, mut hi) = (0usize, n.saturating_sub(1));
            while lo < hi {
                let s = sorted[lo] + sorted[hi];
                if approx_eq(s, a) {
                    pairs.push((sorted[lo], sorted[hi]));
                    lo += 1;
                    hi -= 1;
                } else if s < a {
                    lo += 1;
                } else {
                    hi -= 1;
                }
            }
        }
        ArithFlip::DifferenceToSum => {
            let mut hi = 0usize;
            for lo in 0..n {
                hi = hi.max(lo + 1);
                while hi < n && sorted[hi] - sorted[lo] < a && !approx_eq(sorted[hi] - sorted[lo], a) {
                    hi += 1;
                }
                let mut k = hi;
                while k < n && approx_eq(sorted[k] - sorted[lo], a) {
                    pairs.push((sorted[lo], sorted[k]));
                    k += 1;
                }
            }
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    pairs.dedup_by(|p, q| approx_eq(p.0, q.0) && approx_eq(p.1, q.1));
    pairs
}

/// Flips sum and difference over numbers found in the context. Only answers
/// at least [`MIN_ARITH_ANSWER`] with exactly one matching pair are kept.
pub fn answer_replace_arith(a: f64, context_numbers: &[f64], flip: ArithFlip) -> Option<Answer> {
    if !a.is_finite() || a < MIN_ARITH_ANSWER {
        return None;
    }
    match arith_pairs(a, context_numbers, flip).as_slice() {
        &[(x, y)] => Some(Answer::number(match flip {
            ArithFlip::SumToDifference => (x - y).abs(),
            ArithFlip::DifferenceToSum => x + y,
        })),
        _ => None,
    }
}

/// "Both" turned to "neither": a yes becomes a no; a no stays undetermined.
pub fn answer_replace_bool(a: &Answer) -> Result<Option<Answer>, AnswerGenError> {
    match a.as_yes_no() {
        Some(true) => Ok(Some(Answer::yes_no(false))),
        Some(false) => Ok(None),
        None => Err(AnswerGenError::NotApplicable("non yes/no")),
    }
}

fn strip_determiner(s: &str) -> &str {
    let s = s.trim();
    for det in ["the ", "a ", "an "] {
        if s.len() > det.len() && s[..det.len()].eq_ignore_ascii_case(det) {
            return s[det.len()..].trim_start();
        }
    }
    s
}

fn clean_candidate(s: &str) -> &str {
    strip_determiner(s.trim().trim_end_matches(['?', '.', '!', ',']).trim())
}

/// The two compared entities in a two-way comparison question, as verbatim
/// substrings of `question`.
pub fn comparison_candidates(question: &str) -> Option<(&str, &str)> {
    let body = question.trim().trim_end_matches(['?', '.', '!']).trim_end();
    let lower = body.to_ascii_lowercase();

    // ", X or Y" / ": X or Y" at the end of the question.
    if let Some(or) = lower.rfind(" or ") {
        let head = &lower[..or];
        if let Some(sep) = head.rfind([',', ':']) {
            let x = clean_candidate(&body[sep + 1..or]);
            let y = clean_candidate(&body[or + 4..]);
            if !x.is_empty() && !y.is_empty() {
                return Some((x, y));
            }
        }
        // "of X or Y"
        if let Some(of) = head.rfind(" of ") {
            let x = clean_candidate(&body[of + 4..or]);
            let y = clean_candidate(&body[or + 4..]);
            if !x.is_empty() && !y.is_empty() {
                return Some((x, y));
            }
        }
    }
    // "between X and Y"
    if let Some(between) = lower.rfind("between ") {
        let tail_start = between + "between ".len();
        if let Some(and) = lower[tail_start..].find(" and ") {
            let x = clean_candidate(&body[tail_start..tail_start + and]);
            let y = clean_candidate(&body[tail_start + and + 5..]);
            if !x.is_empty() && !y.is_empty() {
                return Some((x, y));
            }
        }
    }
    None
}

/// For a flipped comparison, the answer is the other compared entity.
pub fn answer_replace_comp(question: &str, a: &Answer) -> Option<Answer> {
    let (x, y) = comparison_candidates(question)?;
    let gold = match a {
        Answer::Span { text } => normalize_answer(text),
        Answer::Spans { texts } if texts.len() == 1 => normalize_answer(&texts[0]),
        _ => return None,
    };
    let (nx, ny) = (normalize_answer(x), normalize_answer(y));
    match (nx == gold, ny == gold) {
        (true, false) => Some(Answer::span(y)),
        (false, true) => Some(Answer::span(x)),
        _ => None,
    }
}

/// Extra facts about a candidate that constraint generation may use.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConstraintDetail {
    pub flip: Option<ArithFlip>,
    /// The operand pair found in the context, when known.
    pub operands: Option<(f64, f64)>,
}

/// Constraints implied by a perturbation on the new answer.
pub fn constraints_for(kind: PerturbationKind, detail: ConstraintDetail, a: &Answer) -> Vec<Constraint> {
    match kind {
        PerturbationKind::ChangeLastToArith => vec![Constraint::Numeric],
        PerturbationKind::ChangeLastToBool | PerturbationKind::AppendBool | PerturbationKind::ReplaceBool => {
            vec![Constraint::Boolean]
        }
        PerturbationKind::ReplaceArith => {
            let Some(reference) = a.as_number() else {
                return Vec::new();
            };
            let operands_ok = detail.operands.is_none_or(|(x, y)| x >= 0.0 && y >= 0.0);
            if reference < 0.0 || !operands_ok {
                return Vec::new();
            }
            match detail.flip {
                Some(ArithFlip::SumToDifference) => vec![Constraint::Leq(reference)],
                Some(ArithFlip::DifferenceToSum) => vec![Constraint::Geq(reference)],
                None => Vec::new(),
            }
        }
        PerturbationKind::ReplaceComp | PerturbationKind::PruneStep => Vec::new(),
    }
}

/// Numbers in `context`, values only.
pub fn context_numbers(context: &str) -> Vec<f64> {
    numbers::extract_numbers(context).into_iter().map(|(v, _)| v).collect()
}
