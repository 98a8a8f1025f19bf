//! The seven decomposition rewrite rules. Each rule is a pure function from a
//! decomposition to zero or more tagged candidates; every emitted candidate
//! holds a decomposition that passes [`Decomposition::validate`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::answer::Answer;
use crate::numbers;
use crate::qdmr::{self, Arithmetic, BooleanCheck, CompareOp, Decomposition, Extremum, Operator, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum PerturbationKind {
    AppendBool,
    ChangeLastToArith,
    ChangeLastToBool,
    ReplaceArith,
    ReplaceBool,
    ReplaceComp,
    PruneStep,
}

impl PerturbationKind {
    /// Rule-library order.
    pub const ALL: [PerturbationKind; 7] = [
        PerturbationKind::AppendBool,
        PerturbationKind::ChangeLastToArith,
        PerturbationKind::ChangeLastToBool,
        PerturbationKind::ReplaceArith,
        PerturbationKind::ReplaceBool,
        PerturbationKind::ReplaceComp,
        PerturbationKind::PruneStep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PerturbationKind::AppendBool => "APPEND_BOOL",
            PerturbationKind::ChangeLastToArith => "CHANGE_LAST_TO_ARITH",
            PerturbationKind::ChangeLastToBool => "CHANGE_LAST_TO_BOOL",
            PerturbationKind::ReplaceArith => "REPLACE_ARITH",
            PerturbationKind::ReplaceBool => "REPLACE_BOOL",
            PerturbationKind::ReplaceComp => "REPLACE_COMP",
            PerturbationKind::PruneStep => "PRUNE_STEP",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(name.trim()))
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The comparison appended by an APPEND_BOOL rewrite.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonCondition {
    pub op: CompareOp,
    pub value: f64,
}

/// Direction of a REPLACE_ARITH rewrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ArithFlip {
    SumToDifference,
    DifferenceToSum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteCandidate {
    pub kind: PerturbationKind,
    pub decomposition: Decomposition,
    pub condition: Option<ComparisonCondition>,
    pub pruned_step: Option<usize>,
    pub flip: Option<ArithFlip>,
    /// Steps of the source decomposition the rule touched.
    pub provenance: Vec<usize>,
}

impl RewriteCandidate {
    fn new(kind: PerturbationKind, decomposition: Decomposition, provenance: Vec<usize>) -> Self {
        RewriteCandidate {
            kind,
            decomposition,
            condition: None,
            pruned_step: None,
            flip: None,
            provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PerturbError {
    #[error("{kind} does not apply: {reason}")]
    NotApplicable {
        kind: PerturbationKind,
        reason: &'static str,
    },
}

fn not_applicable(kind: PerturbationKind, reason: &'static str) -> PerturbError {
    PerturbError::NotApplicable { kind, reason }
}

fn with_root(d: &Decomposition, root_text: &str) -> Option<Decomposition> {
    let mut texts = d.texts();
    *texts.last_mut()? = root_text.into();
    let out = Decomposition::from_texts(texts).ok()?;
    out.is_valid().then_some(out)
}

/// Integer comparison values derived from answer `a`: a±k, a/k and a·k for
/// k in {1,2,3}, fractional values dropped, deduplicated and sorted. For a
/// non-negative answer, negative values are dropped as well.
pub fn append_bool_values(a: f64) -> Vec<f64> {
    let mut values: Vec<f64> = Vec::new();
    for k in [1.0, 2.0, 3.0] {
        values.extend([a + k, a - k, a / k, a * k]);
    }
    values.retain(|&v| numbers::is_integer(v) && (a < 0.0 || v >= 0.0));
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

/// APPEND_BOOL: appends "if #n is <op> <v>" for every operator and value.
pub fn append_bool(d: &Decomposition, answer: &Answer) -> Result<Vec<RewriteCandidate>, PerturbError> {
    const KIND: PerturbationKind = PerturbationKind::AppendBool;
    let a = answer
        .as_number()
        .filter(|a| a.is_finite())
        .ok_or_else(|| not_applicable(KIND, "answer is not numeric"))?;
    let root = d.root_index();
    let values = append_bool_values(a);
    let mut out = Vec::with_capacity(values.len() * CompareOp::ALL.len());
    for op in CompareOp::ALL {
        for &value in &values {
            let step = format!("if #{root} is {} {}", op.step_phrase(), numbers::format_number(value));
            let mut texts = d.texts();
            texts.push(step);
            let Ok(perturbed) = Decomposition::from_texts(texts) else {
                continue;
            };
            if !perturbed.is_valid() {
                continue;
            }
            let mut c = RewriteCandidate::new(KIND, perturbed, vec![root]);
            c.condition = Some(ComparisonCondition { op, value });
            out.push(c);
        }
    }
    if out.is_empty() {
        return Err(not_applicable(KIND, "no valid comparison values"));
    }
    Ok(out)
}

fn binary_root(d: &Decomposition) -> Option<(usize, usize)> {
    match d.root().refs() {
        &[i, j] => Some((i, j)),
        _ => None,
    }
}

/// CHANGE_LAST: retypes a two-argument ARITHMETIC or COMPARISON root.
pub fn change_last(d: &Decomposition) -> Result<Vec<RewriteCandidate>, PerturbError> {
    const KIND: PerturbationKind = PerturbationKind::ChangeLastToArith;
    let root = d.root_index();
    let (i, j) = binary_root(d).ok_or_else(|| not_applicable(KIND, "root does not reference two steps"))?;
    let to_arith = format!("the difference of #{i} and #{j}");
    let to_bool = format!("if #{i} is the same as #{j}");
    let targets: Vec<(PerturbationKind, &str)> = match d.root().operator() {
        Operator::Comparison(_) => vec![
            (PerturbationKind::ChangeLastToArith, to_arith.as_str()),
            (PerturbationKind::ChangeLastToBool, to_bool.as_str()),
        ],
        Operator::Arithmetic(_) => vec![(PerturbationKind::ChangeLastToBool, to_bool.as_str())],
        _ => return Err(not_applicable(KIND, "root is not arithmetic or comparison")),
    };
    let out: Vec<_> = targets
        .into_iter()
        .filter_map(|(kind, text)| with_root(d, text).map(|p| RewriteCandidate::new(kind, p, vec![root])))
        .collect();
    if out.is_empty() {
        return Err(not_applicable(KIND, "rewritten decomposition is invalid"));
    }
    Ok(out)
}

/// Replaces the first whole-word, case-insensitive occurrence of `from`.
fn replace_phrase(text: &str, from: &str, to: &str) -> Option<String> {
    let lower = text.to_ascii_lowercase();
    let mut search = 0;
    while let Some(pos) = lower[search..].find(from) {
        let start = search + pos;
        let end = start + from.len();
        let before_ok = start == 0 || !lower.as_bytes()[start - 1].is_ascii_alphanumeric();
        let after_ok = end == lower.len() || !lower.as_bytes()[end].is_ascii_alphanumeric();
        if before_ok && after_ok {
            return Some(format!("{}{}{}", &text[..start], to, &text[end..]));
        }
        search = start + 1;
    }
    None
}

/// REPLACE_ARITH: swaps sum and difference in the root.
pub fn replace_arith(d: &Decomposition) -> Result<RewriteCandidate, PerturbError> {
    const KIND: PerturbationKind = PerturbationKind::ReplaceArith;
    let text = d.root().text();
    let (new_text, flip) = match d.root().operator() {
        Operator::Arithmetic(Arithmetic::Difference) => (
            replace_phrase(text, "difference of", "sum of")
                .or_else(|| replace_phrase(text, "difference between", "sum of")),
            ArithFlip::DifferenceToSum,
        ),
        Operator::Arithmetic(Arithmetic::Sum) => (
            replace_phrase(text, "sum of", "difference of")
                .or_else(|| replace_phrase(text, "total of", "difference of")),
            ArithFlip::SumToDifference,
        ),
        _ => return Err(not_applicable(KIND, "root is not sum or difference")),
    };
    let perturbed = new_text
        .and_then(|t| with_root(d, &t))
        .ok_or_else(|| not_applicable(KIND, "rewritten decomposition is invalid"))?;
    let mut c = RewriteCandidate::new(KIND, perturbed, vec![d.root_index()]);
    c.flip = Some(flip);
    Ok(c)
}

/// REPLACE_BOOL: "both ... are true" becomes "both ... are false".
pub fn replace_bool(d: &Decomposition) -> Result<RewriteCandidate, PerturbError> {
    const KIND: PerturbationKind = PerturbationKind::ReplaceBool;
    if d.root().operator() != Operator::Boolean(BooleanCheck::BothTrue) {
        return Err(not_applicable(KIND, "root is not a both-true check"));
    }
    let text = d.root().text();
    let new_text = text
        .rfind("true")
        .map(|pos| format!("{}false{}", &text[..pos], &text[pos + 4..]))
        .or_else(|| {
            text.rfind("correct")
                .map(|pos| format!("{}incorrect{}", &text[..pos], &text[pos + 7..]))
        });
    let perturbed = new_text
        .and_then(|t| with_root(d, &t))
        .ok_or_else(|| not_applicable(KIND, "rewritten decomposition is invalid"))?;
    Ok(RewriteCandidate::new(KIND, perturbed, vec![d.root_index()]))
}

/// REPLACE_COMP: flips highest and lowest in a comparison root.
pub fn replace_comp(d: &Decomposition) -> Result<RewriteCandidate, PerturbError> {
    const KIND: PerturbationKind = PerturbationKind::ReplaceComp;
    let Operator::Comparison(extremum) = d.root().operator() else {
        return Err(not_applicable(KIND, "root is not a comparison"));
    };
    let text = d.root().text();
    let args = text
        .find(" of #")
        .map(|pos| &text[pos + 4..])
        .ok_or_else(|| not_applicable(KIND, "comparison arguments not found"))?;
    let new_text = format!("which is {} of {}", Extremum::flipped(extremum).word(), args);
    let perturbed =
        with_root(d, &new_text).ok_or_else(|| not_applicable(KIND, "rewritten decomposition is invalid"))?;
    Ok(RewriteCandidate::new(KIND, perturbed, vec![d.root_index()]))
}

fn is_prunable(step: &Step) -> bool {
    step.refs().len() == 1
        && matches!(
            step.operator(),
            Operator::Filter | Operator::Project | Operator::Discard
        )
}

/// Removes `pruned`, rewiring its consumers to its single input, drops steps
/// no longer reachable from the root, and renumbers.
fn prune_one(d: &Decomposition, pruned: usize) -> Option<Decomposition> {
    let input = *d.step(pruned)?.refs().first()?;
    let mut map: BTreeMap<usize, String> = BTreeMap::new();
    for (i, step) in d.steps().iter().enumerate() {
        let index = i + 1;
        if index == pruned {
            continue;
        }
        let text = qdmr::rewrite_refs(step.text(), |r| Some(if r == pruned { input } else { r })).ok()?;
        map.insert(index, text);
    }
    // Dead-step elimination from the root.
    let root = d.root_index();
    let mut live = BTreeSet::new();
    let mut stack = vec![root];
    while let Some(i) = stack.pop() {
        if !live.insert(i) {
            continue;
        }
        let text = map.get(&i)?;
        for tok in qdmr::scan_refs(text, i).ok()? {
            stack.push(tok.index);
        }
    }
    map.retain(|k, _| live.contains(k));
    let out = qdmr::renumber(&map).ok()?;
    out.is_valid().then_some(out)
}

/// PRUNE_STEP: one candidate per prunable non-root step.
pub fn prune_step(d: &Decomposition) -> Result<Vec<RewriteCandidate>, PerturbError> {
    const KIND: PerturbationKind = PerturbationKind::PruneStep;
    if d.len() < 2 {
        return Err(not_applicable(KIND, "decomposition has a single step"));
    }
    let mut out = Vec::new();
    for index in 1..d.root_index() {
        let step = d.step(index).expect("index in range");
        if !is_prunable(step) {
            continue;
        }
        if let Some(perturbed) = prune_one(d, index) {
            let mut c = RewriteCandidate::new(KIND, perturbed, vec![index]);
            c.pruned_step = Some(index);
            out.push(c);
        }
    }
    if out.is_empty() {
        return Err(not_applicable(KIND, "no prunable step"));
    }
    Ok(out)
}

/// Every applicable rule's output, in rule-library order, then step index,
/// then operator/value order.
pub fn perturb_all(d: &Decomposition, answer: &Answer) -> Vec<RewriteCandidate> {
    let mut out = Vec::new();
    out.extend(append_bool(d, answer).unwrap_or_default());
    let mut changed = change_last(d).unwrap_or_default();
    changed.sort_by_key(|c| c.kind);
    out.extend(changed);
    out.extend(replace_arith(d).ok());
    out.extend(replace_bool(d).ok());
    out.extend(replace_comp(d).ok());
    out.extend(prune_step(d).unwrap_or_default());
    out.retain(|c| c.decomposition.is_valid());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(texts: &[&str]) -> Decomposition {
        Decomposition::from_texts(texts).unwrap()
    }

    fn kadeem() -> Decomposition {
        d(&[
            "league that Kadeem Jack is a player in",
            "teams that #1 started with",
            "number of #2",
        ])
    }

    #[test]
    fn value_set_for_twelve() {
        assert_eq!(
            append_bool_values(12.0),
            vec![4.0, 6.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 24.0, 36.0]
        );
    }

    #[test]
    fn value_set_drops_negatives_for_small_answers() {
        assert_eq!(append_bool_values(1.0), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn append_bool_appends_comparison_step() {
        let cands = append_bool(&kadeem(), &Answer::number(4.0)).unwrap();
        let hit = cands
            .iter()
            .find(|c| {
                c.condition
                    == Some(ComparisonCondition {
                        op: CompareOp::Gt,
                        value: 2.0,
                    })
            })
            .unwrap();
        assert_eq!(hit.decomposition.root().text(), "if #3 is higher than 2");
        assert_eq!(hit.decomposition.len(), 4);
        assert_eq!(cands.len(), 5 * append_bool_values(4.0).len());
    }

    #[test]
    fn append_bool_needs_numeric_answer() {
        assert!(matches!(
            append_bool(&kadeem(), &Answer::span("Spain")),
            Err(PerturbError::NotApplicable { .. })
        ));
    }

    #[test]
    fn change_last_from_comparison() {
        let src = d(&[
            "when was Hughes-Donahue Gallery founded",
            "when was Art Euphoric founded",
            "which was first of #1 , #2",
        ]);
        let out = change_last(&src).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].kind, PerturbationKind::ChangeLastToArith);
        assert_eq!(out[0].decomposition.root().text(), "the difference of #1 and #2");
        assert_eq!(out[1].kind, PerturbationKind::ChangeLastToBool);
        assert_eq!(out[1].decomposition.root().text(), "if #1 is the same as #2");
    }

    #[test]
    fn change_last_from_arithmetic() {
        let src = d(&[
            "year of Madrugada's final concert",
            "year when Sunday Driver become popular",
            "the difference of #2 and #1",
        ]);
        let out = change_last(&src).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].decomposition.root().text(), "if #1 is the same as #2");
    }

    #[test]
    fn change_last_rejects_select_root() {
        assert!(change_last(&d(&["x"])).is_err());
    }

    #[test]
    fn replace_arith_both_directions() {
        let src = d(&["a", "b", "number of #1", "number of #2", "difference of #3 and #4"]);
        let c = replace_arith(&src).unwrap();
        assert_eq!(c.decomposition.root().text(), "sum of #3 and #4");
        assert_eq!(c.flip, Some(ArithFlip::DifferenceToSum));
        let back = replace_arith(&c.decomposition).unwrap();
        assert_eq!(back.decomposition.root().text(), "difference of #3 and #4");
        assert_eq!(back.flip, Some(ArithFlip::SumToDifference));
        assert!(replace_arith(&d(&["a", "b", "which is highest of #1, #2"])).is_err());
    }

    #[test]
    fn replace_bool_true_to_false_only() {
        let src = d(&["if a", "if b", "if both #1 and #2 are true"]);
        let c = replace_bool(&src).unwrap();
        assert_eq!(c.decomposition.root().text(), "if both #1 and #2 are false");
        assert!(replace_bool(&c.decomposition).is_err());
        assert!(replace_bool(&d(&["a", "b", "sum of #1 and #2"])).is_err());
    }

    #[test]
    fn replace_comp_flips() {
        let src = d(&["a", "b", "which is smaller of #1, #2"]);
        let c = replace_comp(&src).unwrap();
        assert_eq!(c.decomposition.root().text(), "which is highest of #1, #2");
        let back = replace_comp(&c.decomposition).unwrap();
        assert_eq!(back.decomposition.root().text(), "which is lowest of #1, #2");
        assert!(replace_comp(&d(&["if a", "if b", "if both #1 and #2 are true"])).is_err());
    }

    #[test]
    fn prune_cunter() {
        let src = d(&["adult population of Cunter", "#1 excluding seniors", "number of #2"]);
        let out = prune_step(&src).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].pruned_step, Some(2));
        assert_eq!(
            out[0].decomposition.serialize(),
            "return adult population of Cunter ;return number of #1"
        );
    }

    #[test]
    fn prune_single_step_not_applicable() {
        assert!(prune_step(&d(&["x"])).is_err());
    }

    #[test]
    fn prune_rewires_every_reference() {
        let src = d(&[
            "players",
            "#1 on the team",
            "number of #2",
            "#2 that scored",
            "if #3 is the same as #4",
        ]);
        let out = prune_step(&src).unwrap();
        let pruned_two = out.iter().find(|c| c.pruned_step == Some(2)).unwrap();
        assert_eq!(
            pruned_two.decomposition.texts(),
            vec!["players", "number of #1", "#1 that scored", "if #2 is the same as #3"]
        );
    }

    #[test]
    fn prune_drops_dead_steps() {
        let src = d(&["a", "stray", "#1 near b", "number of #3"]);
        let out = prune_step(&src).unwrap();
        let c = out.iter().find(|c| c.pruned_step == Some(3)).unwrap();
        assert_eq!(c.decomposition.texts(), vec!["a", "number of #1"]);
    }

    #[test]
    fn perturb_all_on_comparison_root() {
        let src = d(&["a", "b", "which is highest of #1, #2"]);
        let kinds: Vec<_> = perturb_all(&src, &Answer::span("a")).iter().map(|c| c.kind).collect();
        assert_eq!(
            kinds,
            vec![
                PerturbationKind::ChangeLastToArith,
                PerturbationKind::ChangeLastToBool,
                PerturbationKind::ReplaceComp
            ]
        );
    }

    #[test]
    fn perturb_all_numeric_has_append_bool() {
        let out = perturb_all(&kadeem(), &Answer::number(3.0));
        assert!(out.iter().any(|c| c.kind == PerturbationKind::AppendBool));
    }

    #[test]
    fn perturb_all_empty_for_plain_select() {
        assert!(perturb_all(&d(&["x"]), &Answer::span("Spain")).is_empty());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in PerturbationKind::ALL {
            assert_eq!(PerturbationKind::from_name(k.name()), Some(k));
        }
    }
}
