use std::collections::BTreeMap;

use bpb_core::answer_gen::{answer_append_bool, comparison_candidates, constraints_for, ConstraintDetail};
use bpb_core::lexicon::ANTONYM_PAIRS;
use bpb_core::metrics::{consistency, constraint_satisfied, text_f1, tokens, ContrastGroup, GroupMember};
use bpb_core::perturb::{prune_step, ArithFlip, ComparisonCondition};
use bpb_core::qdmr::{classify_operator, CompareOp};
use bpb_core::realize::antonym;
use bpb_core::{perturb_all, Answer, Constraint, Decomposition, PerturbationKind};
use proptest::prelude::*;
use proptest::sample::Index;

const WORDS: &[&str] = &[
    "players", "team", "the", "red", "goals", "scored", "season", "city", "river", "from",
];

fn free_texts() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        (
            prop::collection::vec(0..WORDS.len(), 1..5),
            any::<Index>(),
            any::<bool>(),
        ),
        1..9,
    )
    .prop_map(|steps| {
        steps
            .into_iter()
            .enumerate()
            .map(|(i, (words, extra, two))| {
                let mut parts: Vec<String> = words.iter().map(|&w| WORDS[w].to_string()).collect();
                if i > 0 {
                    parts.push(format!("#{i}"));
                }
                if i > 1 && two {
                    parts.insert(0, format!("#{}", extra.index(i - 1) + 1));
                }
                parts.join(" ")
            })
            .collect()
    })
}

/// Chains whose later steps use operator vocabulary, so that every rule has
/// a chance to fire.
fn operator_texts() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec((0usize..12, 0usize..40, any::<Index>()), 2..8).prop_map(|steps| {
        let mut out: Vec<String> = Vec::new();
        for (i, (template, k, other)) in steps.into_iter().enumerate() {
            let a = i;
            let b = if i >= 2 { other.index(i - 1) + 1 } else { 0 };
            let text = match (template, i) {
                (_, 0) | (0, _) => format!("item {k}"),
                (1, _) => format!("number of #{a}"),
                (2, _) => format!("score of #{a}"),
                (3, _) => format!("#{a} excluding red ones"),
                (4, _) => format!("#{a} that won"),
                (5, _) if b > 0 => format!("the difference of #{a} and #{b}"),
                (6, _) if b > 0 => format!("sum of #{b} and #{a}"),
                (7, _) if b > 0 => format!("which is larger of #{b} , #{a}"),
                (8, _) if b > 0 => format!("if both #{b} and #{a} are true"),
                (9, _) if b > 0 => format!("if #{a} is the same as #{b}"),
                (10, _) => format!("if #{a} is at least {k}"),
                _ => format!("year of #{a}"),
            };
            out.push(text);
        }
        out
    })
}

proptest! {
    #[test]
    fn parse_serialize_round_trip(texts in free_texts()) {
        let d = Decomposition::from_texts(&texts).unwrap();
        prop_assume!(d.is_valid());
        let s = d.serialize();
        let back = Decomposition::parse(&s).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(back.serialize(), s);
    }

    #[test]
    fn every_candidate_is_valid(texts in operator_texts(), a in 0u32..60) {
        let d = Decomposition::from_texts(&texts).unwrap();
        prop_assume!(d.is_valid());
        for c in perturb_all(&d, &Answer::number(f64::from(a))) {
            prop_assert!(c.decomposition.is_valid(), "{:?} produced {:?}", c.kind, c.decomposition.texts());
            let again = Decomposition::parse(&c.decomposition.serialize()).unwrap();
            prop_assert_eq!(&again, &c.decomposition);
        }
    }

    #[test]
    fn pruning_shrinks(texts in operator_texts()) {
        let d = Decomposition::from_texts(&texts).unwrap();
        prop_assume!(d.is_valid());
        for c in prune_step(&d).unwrap_or_default() {
            prop_assert!(c.decomposition.len() < d.len());
            prop_assert_eq!(c.decomposition.reachable().len(), c.decomposition.len());
        }
    }

    #[test]
    fn classification_is_pure(texts in operator_texts()) {
        for t in &texts {
            let refs = t.matches('#').count();
            prop_assert_eq!(classify_operator(t, refs), classify_operator(t, refs));
        }
    }

    #[test]
    fn complementary_operators_disagree(a in -50i32..50, v in -50i32..50) {
        let (a, v) = (f64::from(a), f64::from(v));
        for (op, other) in [(CompareOp::Gt, CompareOp::Le), (CompareOp::Lt, CompareOp::Ge)] {
            prop_assert_ne!(op.holds(a, v), other.holds(a, v));
            let yes = answer_append_bool(a, ComparisonCondition { op, value: v });
            let no = answer_append_bool(a, ComparisonCondition { op: other, value: v });
            prop_assert_ne!(yes, no);
        }
    }

    #[test]
    fn geq_and_leq_meet_only_at_equality(p in -1000i32..1000, r in -1000i32..1000) {
        let text = p.to_string();
        let both = constraint_satisfied(&text, &Constraint::Geq(f64::from(r)))
            && constraint_satisfied(&text, &Constraint::Leq(f64::from(r)));
        prop_assert_eq!(both, p == r);
    }

    #[test]
    fn never_both_bounds(
        kind in 0usize..7,
        flip in prop::option::of(prop::bool::ANY),
        operands in prop::option::of((-100i32..100, -100i32..100)),
        a in -100i32..100,
    ) {
        let detail = ConstraintDetail {
            flip: flip.map(|f| if f { ArithFlip::SumToDifference } else { ArithFlip::DifferenceToSum }),
            operands: operands.map(|(x, y)| (f64::from(x), f64::from(y))),
        };
        let cs = constraints_for(PerturbationKind::ALL[kind], detail, &Answer::number(f64::from(a)));
        let geq = cs.iter().any(|c| matches!(c, Constraint::Geq(_)));
        let leq = cs.iter().any(|c| matches!(c, Constraint::Leq(_)));
        prop_assert!(!(geq && leq));
    }

    #[test]
    fn f1_is_symmetric(a in prop::collection::vec(0..WORDS.len(), 0..6), b in prop::collection::vec(0..WORDS.len(), 0..6)) {
        let a: Vec<&str> = a.into_iter().map(|i| WORDS[i]).collect();
        let b: Vec<&str> = b.into_iter().map(|i| WORDS[i]).collect();
        let (sa, sb) = (a.join(" "), b.join(" "));
        prop_assert_eq!(text_f1(&sa, &sb), text_f1(&sb, &sa));
        let mut ta = tokens(&sa);
        let mut tb = tokens(&sb);
        ta.sort();
        tb.sort();
        let same = !ta.is_empty() && ta == tb;
        prop_assert_eq!(text_f1(&sa, &sb) == 1.0, same);
    }

    #[test]
    fn comparison_candidates_are_verbatim(
        x in "[A-Z][a-z]{1,8}( [A-Z][a-z]{1,8})?",
        y in "[A-Z][a-z]{1,8}( [A-Z][a-z]{1,8})?",
        form in 0usize..3,
    ) {
        let determiner = |s: &str| ["The", "An"].contains(&s.split(' ').next().unwrap_or(""));
        prop_assume!(!determiner(&x) && !determiner(&y));
        let q = match form {
            0 => format!("Which singer is younger, {x} or {y}?"),
            1 => format!("Who was born first between {x} and {y}?"),
            _ => format!("Which is taller of {x} or {y}?"),
        };
        let (cx, cy) = comparison_candidates(&q).expect("candidates found");
        prop_assert!(q.contains(cx) && q.contains(cy));
        prop_assert_eq!((cx, cy), (x.as_str(), y.as_str()));
    }

    #[test]
    fn adding_a_member_never_raises_consistency(
        golds in prop::collection::vec((0..WORDS.len(), 0..WORDS.len()), 1..5),
        extra_gold in 0..WORDS.len(),
        extra_pred in 0..WORDS.len(),
        target in any::<Index>(),
    ) {
        let mut groups = Vec::new();
        let mut preds = BTreeMap::new();
        for (i, (gold, pred)) in golds.iter().enumerate() {
            let id = format!("o{i}");
            preds.insert(id.clone(), WORDS[*pred].to_string());
            groups.push(ContrastGroup::new(id.clone(), vec![GroupMember {
                id,
                gold: Answer::span(WORDS[*gold]),
                perturbation: None,
                valid: None,
            }], vec![]).unwrap());
        }
        let before = consistency(&groups, &preds).unwrap();
        let t = target.index(groups.len());
        groups[t].members.push(GroupMember {
            id: "extra".into(),
            gold: Answer::span(WORDS[extra_gold]),
            perturbation: Some(PerturbationKind::PruneStep),
            valid: None,
        });
        preds.insert("extra".into(), WORDS[extra_pred].to_string());
        prop_assert!(consistency(&groups, &preds).unwrap() <= before);
    }
}

#[test]
fn antonyms_are_an_involution() {
    for &(a, b) in ANTONYM_PAIRS {
        assert_eq!(antonym(a), Some(b));
        assert_eq!(antonym(b), Some(a));
        assert_eq!(antonym(antonym(a).unwrap()), Some(a));
    }
}

#[test]
fn append_bool_values_come_from_the_formula_set() {
    for a in 0..40 {
        let a = f64::from(a);
        for v in bpb_core::perturb::append_bool_values(a) {
            let from_formula = [1.0, 2.0, 3.0]
                .iter()
                .any(|k| [a + k, a - k, a / k, a * k].contains(&v));
            assert!(from_formula && v.fract() == 0.0 && v >= 0.0, "a={a} v={v}");
        }
    }
}
