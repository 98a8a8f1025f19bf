//! Prediction scoring: token F1, group consistency, constraint satisfaction,
//! and the aggregated report.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::answer::{Answer, Constraint};
use crate::lexicon;
use crate::numbers;
use crate::perturb::PerturbationKind;

/// Name of the scorer recorded in every report.
pub const F1_VARIANT: &str = "squad-token-f1+greedy-multispan";

/// A member counts as correct when its F1 is at least this value.
pub const CORRECT_F1: f64 = 0.8;

/// Slack under [`CORRECT_F1`] so that an F1 of exactly 0.8 computed through
/// floating point is never rejected.
pub const CORRECT_F1_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no prediction for example {0:?}")]
    MissingPrediction(String),
    #[error("group {0:?} does not list its original as a member")]
    OriginalNotMember(String),
    #[error("example id {0:?} appears twice in one group")]
    DuplicateMember(String),
    #[error("generation log counts do not reconcile")]
    LogDoesNotReconcile,
}

/// Canonical form of a numeric token: "23.0" to "23", "1,234" to "1234".
fn normalize_number_token(token: &str) -> Option<String> {
    let body = token.strip_prefix('-').unwrap_or(token);
    if body.is_empty()
        || !body.as_bytes()[0].is_ascii_digit()
        || !body.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.')
    {
        return None;
    }
    let value = numbers::parse_number(token)?;
    Some(numbers::format_number(value))
}

/// Normalized tokens: lowercase, numbers canonicalized, punctuation removed,
/// articles dropped.
pub fn tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    for raw in lower.split_whitespace() {
        let trimmed = raw.trim_matches(|c: char| c.is_ascii_punctuation() && c != '-');
        let trimmed = trimmed.trim_end_matches('-');
        let token = match normalize_number_token(trimmed) {
            Some(n) => n,
            None => raw.chars().filter(|c| !c.is_ascii_punctuation()).collect(),
        };
        if token.is_empty() || lexicon::ARTICLES.contains(&token.as_str()) {
            continue;
        }
        out.push(token);
    }
    out
}

/// Normalized text: the tokens joined by single spaces.
pub fn normalize_answer(text: &str) -> String {
    tokens(text).join(" ")
}

fn f1_tokens(pred: &[String], gold: &[String]) -> f64 {
    if pred.is_empty() || gold.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in gold {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut common = 0usize;
    for t in pred {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    (2 * common) as f64 / (pred.len() + gold.len()) as f64
}

/// Bag-of-tokens F1 between two texts.
pub fn text_f1(prediction: &str, gold: &str) -> f64 {
    f1_tokens(&tokens(prediction), &tokens(gold))
}

/// Splits a multi-answer prediction on "|", ";" and ", ".
pub fn split_prediction(prediction: &str) -> Vec<String> {
    prediction
        .split(['|', ';'])
        .flat_map(|p| p.split(", "))
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(ToString::to_string)
        .collect()
}

/// Greedy one-to-one alignment maximizing summed F1, averaged over the
/// larger side.
fn multi_span_f1(predicted: &[String], gold: &[String]) -> f64 {
    if predicted.is_empty() || gold.is_empty() {
        return 0.0;
    }
    let pt: Vec<Vec<String>> = predicted.iter().map(|p| tokens(p)).collect();
    let gt: Vec<Vec<String>> = gold.iter().map(|g| tokens(g)).collect();
    let mut pairs = Vec::with_capacity(pt.len() * gt.len());
    for (i, p) in pt.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            pairs.push((f1_tokens(p, g), i, j));
        }
    }
    // Highest score first; index order breaks ties.
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; pt.len()];
    let mut used_g = vec![false; gt.len()];
    let mut total = 0.0;
    for (score, i, j) in pairs {
        if used_p[i] || used_g[j] {
            continue;
        }
        used_p[i] = true;
        used_g[j] = true;
        total += score;
    }
    total / pt.len().max(gt.len()) as f64
}

/// F1 of a prediction against a gold answer.
pub fn token_f1(prediction: &str, gold: &Answer) -> f64 {
    match gold {
        Answer::YesNo { yes } => {
            let want = if *yes { "yes" } else { "no" };
            if normalize_answer(prediction) == want {
                1.0
            } else {
                0.0
            }
        }
        Answer::Number { value, .. } => text_f1(prediction, &numbers::format_number(*value)),
        Answer::Span { text } => text_f1(prediction, text),
        Answer::Spans { texts } if texts.len() == 1 => text_f1(prediction, &texts[0]),
        Answer::Spans { texts } => multi_span_f1(&split_prediction(prediction), texts),
        Answer::Date(d) => text_f1(prediction, &d.to_string()),
    }
}

pub fn is_correct(f1: f64) -> bool {
    f1 >= CORRECT_F1 - CORRECT_F1_SLACK
}

/// Whether a prediction meets a constraint.
pub fn constraint_satisfied(prediction: &str, c: &Constraint) -> bool {
    let number = || numbers::parse_leading_number(prediction).map(|(v, _)| v);
    match c {
        Constraint::Numeric => number().is_some(),
        Constraint::Boolean => matches!(normalize_answer(prediction).as_str(), "yes" | "no"),
        Constraint::Geq(r) => number().is_some_and(|v| v >= *r),
        Constraint::Leq(r) => number().is_some_and(|v| v <= *r),
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupMember {
    pub id: String,
    pub gold: Answer,
    /// `None` for the original example.
    pub perturbation: Option<PerturbationKind>,
    /// Manual validation label, when one exists.
    #[cfg_attr(feature = "serde", serde(default))]
    pub valid: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstraintEntry {
    pub id: String,
    pub constraint: Constraint,
    pub perturbation: PerturbationKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub valid: Option<bool>,
}

/// An original example together with everything generated from it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContrastGroup {
    pub original: String,
    pub members: Vec<GroupMember>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub constraints: Vec<ConstraintEntry>,
}

impl ContrastGroup {
    pub fn new(
        original: impl Into<String>,
        members: Vec<GroupMember>,
        constraints: Vec<ConstraintEntry>,
    ) -> Result<Self, MetricsError> {
        let group = ContrastGroup {
            original: original.into(),
            members,
            constraints,
        };
        group.check()?;
        Ok(group)
    }

    pub fn check(&self) -> Result<(), MetricsError> {
        let mut seen = BTreeSet::new();
        for m in &self.members {
            if !seen.insert(m.id.as_str()) {
                return Err(MetricsError::DuplicateMember(m.id.clone()));
            }
        }
        if !seen.contains(self.original.as_str()) {
            return Err(MetricsError::OriginalNotMember(self.original.clone()));
        }
        Ok(())
    }

    pub fn original_member(&self) -> Option<&GroupMember> {
        self.members.iter().find(|m| m.id == self.original)
    }
}

fn prediction<'a>(predictions: &'a BTreeMap<String, String>, id: &str) -> Result<&'a str, MetricsError> {
    predictions
        .get(id)
        .map(String::as_str)
        .ok_or_else(|| MetricsError::MissingPrediction(id.to_string()))
}

fn group_correct<'a>(
    members: impl Iterator<Item = &'a GroupMember>,
    predictions: &BTreeMap<String, String>,
) -> Result<bool, MetricsError> {
    let mut all = true;
    for m in members {
        let p = prediction(predictions, &m.id)?;
        all &= is_correct(token_f1(p, &m.gold));
    }
    Ok(all)
}

/// Fraction of groups whose every member is answered correctly. Zero groups
/// score 0.
pub fn consistency(groups: &[ContrastGroup], predictions: &BTreeMap<String, String>) -> Result<f64, MetricsError> {
    if groups.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for g in groups {
        g.check()?;
        if group_correct(g.members.iter(), predictions)? {
            correct += 1;
        }
    }
    Ok(correct as f64 / groups.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KindCounts {
    pub candidates: usize,
    pub realized: usize,
    pub answered_rule: usize,
    pub answered_evaluator: usize,
    pub constraint_only: usize,
    pub discarded: usize,
}

impl KindCounts {
    pub fn answered(&self) -> usize {
        self.answered_rule + self.answered_evaluator
    }

    pub fn reconciles(&self) -> bool {
        self.realized == self.answered() + self.constraint_only + self.discarded && self.realized <= self.candidates
    }

    fn add(&mut self, other: &KindCounts) {
        self.candidates += other.candidates;
        self.realized += other.realized;
        self.answered_rule += other.answered_rule;
        self.answered_evaluator += other.answered_evaluator;
        self.constraint_only += other.constraint_only;
        self.discarded += other.discarded;
    }
}

/// What happened to one candidate that produced no record.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogEvent {
    pub source_id: String,
    pub perturbation: Option<PerturbationKind>,
    pub stage: String,
    pub reason: String,
}

/// Counts collected while generating; the only source of generation
/// statistics in reports.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenerationLog {
    pub seed: u64,
    pub records: usize,
    pub records_skipped: usize,
    pub records_with_candidates: usize,
    /// Sum over records of the number of distinct rules that applied.
    pub kind_applications: usize,
    pub per_kind: BTreeMap<PerturbationKind, KindCounts>,
    pub reasons: BTreeMap<String, usize>,
    pub events: Vec<LogEvent>,
}

impl GenerationLog {
    pub fn totals(&self) -> KindCounts {
        let mut t = KindCounts::default();
        for c in self.per_kind.values() {
            t.add(c);
        }
        t
    }

    pub fn reconciles(&self) -> bool {
        self.per_kind.values().all(KindCounts::reconciles)
    }

    pub fn record_event(&mut self, source_id: &str, perturbation: Option<PerturbationKind>, stage: &str, reason: &str) {
        *self.reasons.entry(reason.to_string()).or_default() += 1;
        self.events.push(LogEvent {
            source_id: source_id.to_string(),
            perturbation,
            stage: stage.to_string(),
            reason: reason.to_string(),
        });
    }

    pub fn kind_mut(&mut self, kind: PerturbationKind) -> &mut KindCounts {
        self.per_kind.entry(kind).or_default()
    }

    /// Folds another log (from a disjoint set of records) into this one.
    pub fn merge(&mut self, other: GenerationLog) {
        self.records += other.records;
        self.records_skipped += other.records_skipped;
        self.records_with_candidates += other.records_with_candidates;
        self.kind_applications += other.kind_applications;
        for (k, c) in &other.per_kind {
            self.kind_mut(*k).add(c);
        }
        for (r, n) in other.reasons {
            *self.reasons.entry(r).or_default() += n;
        }
        self.events.extend(other.events);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Split {
    Dev,
    Cont,
    ContValid,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Dev, Split::Cont, Split::ContValid];

    pub fn name(self) -> &'static str {
        match self {
            Split::Dev => "DEV",
            Split::Cont => "CONT",
            Split::ContValid => "CONT-valid",
        }
    }

    fn includes(self, perturbation: Option<PerturbationKind>, valid: Option<bool>) -> bool {
        match (self, perturbation) {
            (Split::Dev, p) => p.is_none(),
            (Split::Cont, p) => p.is_some(),
            (Split::ContValid, p) => p.is_some() && valid == Some(true),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KindRow {
    pub perturbation: PerturbationKind,
    pub count: usize,
    pub mean_f1: f64,
    pub constraint_count: usize,
    pub constraint_rate: f64,
}

/// Scores for one split. Rates over an empty subset are 0.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitReport {
    pub split: Split,
    pub count: usize,
    pub mean_f1: f64,
    /// Over groups restricted to the original plus this split's members;
    /// groups with no such member are skipped, except in DEV.
    pub consistency: f64,
    pub groups: usize,
    pub constraint_count: usize,
    pub constraint_rate: f64,
    pub per_kind: Vec<KindRow>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenerationStats {
    pub records: usize,
    pub records_skipped: usize,
    pub totals: KindCounts,
    pub per_kind: Vec<(PerturbationKind, KindCounts)>,
    pub discard_reasons: BTreeMap<String, usize>,
    pub candidates_per_record: f64,
    pub kinds_per_record: f64,
}

impl GenerationStats {
    pub fn from_log(log: &GenerationLog) -> Self {
        let totals = log.totals();
        let per_record = |n: usize| {
            if log.records_with_candidates == 0 {
                0.0
            } else {
                n as f64 / log.records_with_candidates as f64
            }
        };
        GenerationStats {
            records: log.records,
            records_skipped: log.records_skipped,
            totals,
            per_kind: PerturbationKind::ALL
                .into_iter()
                .filter_map(|k| log.per_kind.get(&k).map(|c| (k, *c)))
                .collect(),
            discard_reasons: log.reasons.clone(),
            candidates_per_record: per_record(totals.candidates),
            kinds_per_record: per_record(log.kind_applications),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Report {
    pub f1_variant: String,
    pub groups: usize,
    pub splits: Vec<SplitReport>,
    pub generation: GenerationStats,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn split_report(
    split: Split,
    groups: &[ContrastGroup],
    predictions: &BTreeMap<String, String>,
) -> Result<SplitReport, MetricsError> {
    let mut f1s = Vec::new();
    let mut kind_f1: BTreeMap<PerturbationKind, Vec<f64>> = BTreeMap::new();
    let mut kind_cons: BTreeMap<PerturbationKind, Vec<f64>> = BTreeMap::new();
    let mut cons = Vec::new();
    let mut group_scores = Vec::new();
    for g in groups {
        g.check()?;
        let mut any = false;
        for m in g.members.iter().filter(|m| split.includes(m.perturbation, m.valid)) {
            any = true;
            let f1 = token_f1(prediction(predictions, &m.id)?, &m.gold);
            f1s.push(f1);
            if let Some(k) = m.perturbation {
                kind_f1.entry(k).or_default().push(f1);
            }
        }
        if any {
            let restricted = g
                .members
                .iter()
                .filter(|m| m.id == g.original || split.includes(m.perturbation, m.valid));
            let ok = group_correct(restricted, predictions)?;
            group_scores.push(if ok { 1.0 } else { 0.0 });
        }
        for c in g
            .constraints
            .iter()
            .filter(|c| split.includes(Some(c.perturbation), c.valid))
        {
            let ok = constraint_satisfied(prediction(predictions, &c.id)?, &c.constraint);
            let score = if ok { 1.0 } else { 0.0 };
            cons.push(score);
            kind_cons.entry(c.perturbation).or_default().push(score);
        }
    }
    let per_kind = PerturbationKind::ALL
        .into_iter()
        .filter(|k| kind_f1.contains_key(k) || kind_cons.contains_key(k))
        .map(|k| {
            let f = kind_f1.get(&k).map(Vec::as_slice).unwrap_or(&[]);
            let c = kind_cons.get(&k).map(Vec::as_slice).unwrap_or(&[]);
            KindRow {
                perturbation: k,
                count: f.len(),
                mean_f1: mean(f),
                constraint_count: c.len(),
                constraint_rate: mean(c),
            }
        })
        .collect();
    Ok(SplitReport {
        split,
        count: f1s.len(),
        mean_f1: mean(&f1s),
        consistency: mean(&group_scores),
        groups: group_scores.len(),
        constraint_count: cons.len(),
        constraint_rate: mean(&cons),
        per_kind,
    })
}

/// Aggregates scores over DEV (originals), CONT (generated) and CONT-valid
/// (generated and validated) subsets.
pub fn build_report(
    groups: &[ContrastGroup],
    predictions: &BTreeMap<String, String>,
    log: &GenerationLog,
) -> Result<Report, MetricsError> {
    if !log.reconciles() {
        return Err(MetricsError::LogDoesNotReconcile);
    }
    let splits = Split::ALL
        .into_iter()
        .map(|s| split_report(s, groups, predictions))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Report {
        f1_variant: F1_VARIANT.to_string(),
        groups: groups.len(),
        splits,
        generation: GenerationStats::from_log(log),
    })
}

impl Report {
    /// Plain-text rendering.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scorer: {}  groups: {}", self.f1_variant, self.groups);
        let _ = writeln!(
            s,
            "{:<12} {:>7} {:>7} {:>7} {:>7} {:>7}",
            "split", "n", "F1", "cons", "cnst_n", "cnst"
        );
        for sp in &self.splits {
            let _ = writeln!(
                s,
                "{:<12} {:>7} {:>7.4} {:>7.4} {:>7} {:>7.4}",
                sp.split.name(),
                sp.count,
                sp.mean_f1,
                sp.consistency,
                sp.constraint_count,
                sp.constraint_rate
            );
            for row in &sp.per_kind {
                let _ = writeln!(
                    s,
                    "  {:<22} {:>7} {:>7.4} {:>7} {:>7.4}",
                    row.perturbation.name(),
                    row.count,
                    row.mean_f1,
                    row.constraint_count,
                    row.constraint_rate
                );
            }
        }
        let g = &self.generation;
        let _ = writeln!(
            s,
            "generation: records {} skipped {} candidates {} realized {} answered {} constraint-only {} discarded {}",
            g.records,
            g.records_skipped,
            g.totals.candidates,
            g.totals.realized,
            g.totals.answered(),
            g.totals.constraint_only,
            g.totals.discarded
        );
        let _ = writeln!(
            s,
            "per record: {:.2} candidates, {:.2} rules",
            g.candidates_per_record, g.kinds_per_record
        );
        for (k, c) in &g.per_kind {
            let _ = writeln!(
                s,
                "  {:<22} cand {:>6} real {:>6} rule {:>6} eval {:>6} cnst {:>6} disc {:>6}",
                k.name(),
                c.candidates,
                c.realized,
                c.answered_rule,
                c.answered_evaluator,
                c.constraint_only,
                c.discarded
            );
        }
        if !g.discard_reasons.is_empty() {
            let _ = writeln!(s, "dropped candidates by reason:");
        }
        for (reason, n) in &g.discard_reasons {
            let _ = writeln!(s, "  {reason}: {n}");
        }
        s
    }
}
