//! Independent oracles shared by the integration tests and the acceptance
//! binary. Nothing here calls into the code it checks, apart from data types.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use bpb_core::answer::Answer;
use bpb_core::backend::{BackendError, RcBackend, RcReply};
use bpb_core::perturb::ArithFlip;
use rand::Rng;

// ---------------------------------------------------------------------------
// REPLACE_ARITH brute force
// ---------------------------------------------------------------------------

/// Every position pair, every rule, no sorting tricks.
pub fn brute_force_replace_arith(a: f64, numbers: &[f64], flip: ArithFlip) -> Option<f64> {
    if a < 10.0 {
        return None;
    }
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for i in 0..numbers.len() {
        for j in 0..numbers.len() {
            if i == j {
                continue;
            }
            let (x, y) = (numbers[i], numbers[j]);
            let hit = match flip {
                ArithFlip::SumToDifference => x + y == a,
                ArithFlip::DifferenceToSum => y - x == a,
            };
            let pair = (x.min(y), x.max(y));
            if hit && !pairs.contains(&pair) {
                pairs.push(pair);
            }
        }
    }
    match pairs.as_slice() {
        [(x, y)] => Some(match flip {
            ArithFlip::SumToDifference => y - x,
            ArithFlip::DifferenceToSum => x + y,
        }),
        _ => None,
    }
}

/// Writes `numbers` into filler prose the way a passage would.
pub fn render_context(numbers: &[f64]) -> String {
    const FILLER: [&str; 5] = [
        "the team scored",
        "a crowd of",
        "in the quarter there were",
        "he ran for",
        "they counted",
    ];
    let mut out = String::new();
    for (i, v) in numbers.iter().enumerate() {
        let text = if v.fract() == 0.0 {
            let n = *v as u64;
            if n >= 1000 {
                format!("{},{:03}", n / 1000, n % 1000)
            } else {
                n.to_string()
            }
        } else {
            format!("{v}")
        };
        out.push_str(&format!("Later {} {text} points. ", FILLER[i % FILLER.len()]));
    }
    out
}

// ---------------------------------------------------------------------------
// Synthetic decompositions and a naive interpreter
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cmp {
    Gt,
    Lt,
    Ge,
    Le,
    Ne,
}

pub const COMPARE_PHRASES: [(&str, Cmp); 7] = [
    ("higher than", Cmp::Gt),
    ("more than", Cmp::Gt),
    ("lower than", Cmp::Lt),
    ("less than", Cmp::Lt),
    ("at least", Cmp::Ge),
    ("at most", Cmp::Le),
    ("not equal to", Cmp::Ne),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Leaf(u32),
    Project(&'static str),
    Filter,
    Count,
    Sum,
    Max,
    Min,
    Avg,
    Add,
    Diff,
    Highest,
    Lowest,
    Compare(usize, i64),
    Same,
    BothTrue,
    BothFalse,
    Union,
    Both,
    Besides,
}

impl Op {
    fn arity(&self) -> usize {
        match self {
            Op::Leaf(_) => 0,
            Op::Project(_) | Op::Filter | Op::Count | Op::Sum | Op::Max | Op::Min | Op::Avg | Op::Compare(..) => 1,
            _ => 2,
        }
    }

    fn is_backend(&self) -> bool {
        matches!(self, Op::Leaf(_) | Op::Project(_) | Op::Filter)
    }
}

/// One step of a linearized tree: operator and 1-based child indices.
#[derive(Debug, Clone)]
pub struct Node {
    pub op: Op,
    pub args: Vec<usize>,
}

const ATTRS: [&str; 4] = ["size", "score", "year", "length"];

fn random_op(rng: &mut impl Rng) -> Op {
    match rng.gen_range(0..18) {
        0 => Op::Project(ATTRS[rng.gen_range(0..ATTRS.len())]),
        1 => Op::Filter,
        2 => Op::Count,
        3 => Op::Sum,
        4 => Op::Max,
        5 => Op::Min,
        6 => Op::Avg,
        7 => Op::Add,
        8 => Op::Diff,
        9 => Op::Highest,
        10 => Op::Lowest,
        11 => Op::Compare(rng.gen_range(0..COMPARE_PHRASES.len()), rng.gen_range(0..16)),
        12 => Op::Same,
        13 => Op::BothTrue,
        14 => Op::BothFalse,
        15 => Op::Union,
        16 => Op::Both,
        _ => Op::Besides,
    }
}

fn grow(rng: &mut impl Rng, depth: usize, out: &mut Vec<Node>) -> usize {
    let op = if depth <= 1 || rng.gen_bool(0.25) {
        Op::Leaf(rng.gen_range(1..=40))
    } else {
        random_op(rng)
    };
    let args = (0..op.arity()).map(|_| grow(rng, depth - 1, out)).collect();
    out.push(Node { op, args });
    out.len()
}

/// A random tree of at most `max_depth` levels, children before parents.
pub fn random_tree(rng: &mut impl Rng, max_depth: usize) -> Vec<Node> {
    let mut out = Vec::new();
    grow(rng, max_depth, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Want {
    Num,
    Text,
    List,
    Bool,
    /// A PROJECT step, whatever it answers.
    Projected,
}

const WANTS: [Want; 4] = [Want::Num, Want::Text, Want::List, Want::Bool];

fn meaning_fits(m: Meaning, want: Want) -> bool {
    matches!(
        (m, want),
        (Meaning::Num(_), Want::Num)
            | (Meaning::Text, Want::Text)
            | (Meaning::List(_), Want::List)
            | (Meaning::Bool(_), Want::Bool)
    )
}

/// A leaf id whose fixture answer has the wanted kind.
fn leaf_for(rng: &mut impl Rng, want: Want) -> u32 {
    let start = rng.gen_range(1..=400u32);
    (start..start + 400)
        .find(|k| meaning_fits(pool_entry(&format!("What is item {k}?")).meaning, want))
        .unwrap_or(start)
}

fn any_kind(rng: &mut impl Rng) -> Want {
    [Want::Num, Want::Text, Want::List][rng.gen_range(0..3)]
}

fn grow_typed(rng: &mut impl Rng, want: Want, depth: usize, out: &mut Vec<Node>) -> usize {
    // Occasionally ignore the wanted kind so mismatches still occur.
    let want = if rng.gen_bool(0.08) {
        WANTS[rng.gen_range(0..4)]
    } else {
        want
    };
    let (op, kids): (Op, Vec<Want>) = if want == Want::Projected && depth > 1 {
        (Op::Project(ATTRS[rng.gen_range(0..ATTRS.len())]), vec![any_kind(rng)])
    } else if depth <= 1 || rng.gen_bool(0.2) {
        (Op::Leaf(leaf_for(rng, want)), vec![])
    } else {
        match want {
            Want::Num => match rng.gen_range(0..8) {
                0 => (
                    Op::Count,
                    vec![[Want::List, Want::Text, Want::Num][rng.gen_range(0..3)]],
                ),
                7 => (Op::Count, vec![Want::Projected]),
                1 => (Op::Sum, vec![Want::List]),
                2 => (Op::Max, vec![Want::List]),
                3 => (Op::Min, vec![Want::List]),
                4 => (Op::Avg, vec![Want::List]),
                5 => (Op::Add, vec![Want::Num, Want::Num]),
                _ => (Op::Diff, vec![Want::Num, Want::Num]),
            },
            Want::Text | Want::Projected => match rng.gen_range(0..3) {
                0 => (Op::Highest, vec![Want::Num, Want::Num]),
                1 => (Op::Lowest, vec![Want::Num, Want::Num]),
                _ => (Op::Project(ATTRS[rng.gen_range(0..ATTRS.len())]), vec![any_kind(rng)]),
            },
            Want::List => match rng.gen_range(0..4) {
                0 => (Op::Union, vec![any_kind(rng), any_kind(rng)]),
                1 => (Op::Both, vec![Want::List, Want::List]),
                2 => (Op::Besides, vec![Want::List, any_kind(rng)]),
                _ => (Op::Filter, vec![any_kind(rng)]),
            },
            Want::Bool => match rng.gen_range(0..4) {
                0 => (
                    Op::Compare(rng.gen_range(0..COMPARE_PHRASES.len()), rng.gen_range(0..16)),
                    vec![Want::Num],
                ),
                1 => (Op::Same, vec![any_kind(rng), any_kind(rng)]),
                2 => (Op::BothTrue, vec![Want::Bool, Want::Bool]),
                _ => (Op::BothFalse, vec![Want::Bool, Want::Bool]),
            },
        }
    };
    let args = kids.into_iter().map(|k| grow_typed(rng, k, depth - 1, out)).collect();
    out.push(Node { op, args });
    out.len()
}

/// Like [`random_tree`], but children are mostly chosen to fit their
/// parent, so that most trees evaluate to an answer.
pub fn random_typed_tree(rng: &mut impl Rng, max_depth: usize) -> Vec<Node> {
    let mut out = Vec::new();
    let want = WANTS[rng.gen_range(0..4)];
    grow_typed(rng, want, max_depth, &mut out);
    out
}

pub fn step_text(node: &Node) -> String {
    let a = node.args.first().copied().unwrap_or(0);
    let b = node.args.get(1).copied().unwrap_or(0);
    match &node.op {
        Op::Leaf(k) => format!("item {k}"),
        Op::Project(attr) => format!("{attr} of #{a}"),
        Op::Filter => format!("#{a} that is red"),
        Op::Count => format!("number of #{a}"),
        Op::Sum => format!("sum of #{a}"),
        Op::Max => format!("max of #{a}"),
        Op::Min => format!("min of #{a}"),
        Op::Avg => format!("average of #{a}"),
        Op::Add => format!("sum of #{a} and #{b}"),
        Op::Diff => format!("difference of #{a} and #{b}"),
        Op::Highest => format!("which is highest of #{a} , #{b}"),
        Op::Lowest => format!("which is lowest of #{a} , #{b}"),
        Op::Compare(p, v) => format!("if #{a} is {} {v}", COMPARE_PHRASES[*p].0),
        Op::Same => format!("if #{a} is the same as #{b}"),
        Op::BothTrue => format!("if both #{a} and #{b} are true"),
        Op::BothFalse => format!("if both #{a} and #{b} are false"),
        Op::Union => format!("#{a} , #{b}"),
        Op::Both => format!("#{a} in both #{b}"),
        Op::Besides => format!("#{a} besides #{b}"),
    }
}

pub fn tree_texts(nodes: &[Node]) -> Vec<String> {
    nodes.iter().map(step_text).collect()
}

pub fn backend_step_count(nodes: &[Node]) -> usize {
    nodes.iter().filter(|n| n.op.is_backend()).count()
}

/// What a pool answer means, written out by hand.
#[derive(Debug, Clone, Copy)]
pub enum Meaning {
    Num(f64),
    Text,
    List(&'static [&'static str]),
    Bool(bool),
    Empty,
    Fail,
}

pub struct PoolEntry {
    pub text: &'static str,
    pub words: usize,
    pub meaning: Meaning,
}

const fn entry(text: &'static str, words: usize, meaning: Meaning) -> PoolEntry {
    PoolEntry { text, words, meaning }
}

pub const POOL: [PoolEntry; 20] = [
    entry("3", 1, Meaning::Num(3.0)),
    entry("12", 1, Meaning::Num(12.0)),
    entry("7 yards", 2, Meaning::Num(7.0)),
    entry("1,200", 1, Meaning::Num(1200.0)),
    entry("2.5", 1, Meaning::Num(2.5)),
    entry("12", 1, Meaning::Num(12.0)),
    entry("5", 1, Meaning::Num(5.0)),
    entry("Alice", 1, Meaning::Text),
    entry("Bob", 1, Meaning::Text),
    entry("Alice, Bob and Carol", 4, Meaning::List(&["Alice", "Bob", "Carol"])),
    entry("3, 4 and 5", 4, Meaning::List(&["3", "4", "5"])),
    entry("Bob and Dana", 3, Meaning::List(&["Bob", "Dana"])),
    entry("12, 5", 2, Meaning::List(&["12", "5"])),
    entry("yes", 1, Meaning::Bool(true)),
    entry("no", 1, Meaning::Bool(false)),
    entry("yes", 1, Meaning::Bool(true)),
    entry("no", 1, Meaning::Bool(false)),
    entry(
        "a very long answer that keeps going well past limits",
        10,
        Meaning::Text,
    ),
    entry("", 0, Meaning::Empty),
    entry("<unavailable>", 1, Meaning::Fail),
];

/// FNV-1a, so fixture choice is stable across platforms and runs.
pub fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn pool_entry(question: &str) -> &'static PoolEntry {
    &POOL[(fnv1a(question) % POOL.len() as u64) as usize]
}

/// Answers every question from [`POOL`] by hash; counts calls.
#[derive(Default)]
pub struct HashBackend {
    pub calls: AtomicUsize,
}

impl RcBackend for HashBackend {
    fn answer(&self, question: &str, _context: &str) -> Result<RcReply, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let e = pool_entry(question);
        match e.meaning {
            Meaning::Fail => Err(BackendError::Unavailable("pool says no".into())),
            _ => Ok(RcReply {
                answer: e.text.to_string(),
                score: 1.0,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum V {
    Num(f64),
    Text(String),
    List(Vec<String>),
    Bool(bool),
}

#[derive(Debug, Clone)]
struct Val {
    v: V,
    label: String,
}

fn render(v: &V) -> String {
    match v {
        V::Num(x) => format!("{x}"),
        V::Text(t) => t.clone(),
        V::List(items) => items.join(", "),
        V::Bool(b) => if *b { "yes" } else { "no" }.to_string(),
    }
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()))
}

/// Reason label and step of a discard.
pub type Fail = (&'static str, usize);

struct Interp<'a> {
    nodes: &'a [Node],
    max_words: usize,
}

impl Interp<'_> {
    fn ask(&self, step: usize, body: String, label: String) -> Result<Val, Fail> {
        let question = format!("What is {}?", body.trim());
        let e = pool_entry(&question);
        let v = match e.meaning {
            Meaning::Fail => return Err(("backend_error", step)),
            Meaning::Empty => return Err(("empty_answer", step)),
            _ if e.words > self.max_words => return Err(("answer_too_long", step)),
            Meaning::Num(x) => V::Num(x),
            Meaning::Text => V::Text(e.text.to_string()),
            Meaning::List(items) => V::List(items.iter().map(|s| s.to_string()).collect()),
            Meaning::Bool(b) => V::Bool(b),
        };
        Ok(Val { v, label })
    }

    fn eval(&self, step: usize) -> Result<Val, Fail> {
        let node = &self.nodes[step - 1];
        let mut args = Vec::new();
        for &c in &node.args {
            args.push(self.eval(c)?);
        }
        let mismatch = ("type_mismatch", step);
        let first_label = args.first().map(|a| a.label.clone()).unwrap_or_default();
        let num = |a: &Val| match a.v {
            V::Num(x) => Ok(x),
            _ => Err(mismatch),
        };
        let boolean = |a: &Val| match a.v {
            V::Bool(b) => Ok(b),
            _ => Err(mismatch),
        };
        let items = |a: &Val| match &a.v {
            V::Num(_) | V::Text(_) => Ok(vec![render(&a.v)]),
            V::List(xs) => Ok(xs.clone()),
            V::Bool(_) => Err(mismatch),
        };
        let numeric_consumer = matches!(
            node.op,
            Op::Count | Op::Sum | Op::Max | Op::Min | Op::Avg | Op::Add | Op::Diff
        );
        if numeric_consumer {
            for (a, &c) in args.iter().zip(&node.args) {
                let from_project = matches!(self.nodes[c - 1].op, Op::Project(_));
                if from_project && matches!(a.v, V::Text(_) | V::List(_)) {
                    return Err(("noisy_operation", step));
                }
            }
        }
        let v = match &node.op {
            Op::Leaf(k) => return self.ask(step, format!("item {k}"), format!("item {k}")),
            Op::Project(attr) => return self.ask(step, format!("{attr} of {}", render(&args[0].v)), first_label),
            Op::Filter => return self.ask(step, format!("{} that is red", render(&args[0].v)), first_label),
            Op::Count => match &args[0].v {
                V::List(xs) => V::Num(xs.len() as f64),
                V::Text(_) => V::Num(1.0),
                V::Num(x) => V::Num(*x),
                V::Bool(_) => return Err(mismatch),
            },
            Op::Sum | Op::Max | Op::Min | Op::Avg => {
                let xs: Vec<f64> = match &args[0].v {
                    V::Num(x) => vec![*x],
                    V::List(items) => {
                        let mut xs = Vec::new();
                        for i in items {
                            xs.push(i.parse::<f64>().map_err(|_| mismatch)?);
                        }
                        xs
                    }
                    _ => return Err(mismatch),
                };
                if xs.is_empty() && node.op != Op::Sum {
                    return Err(("empty_answer", step));
                }
                let mut total = 0.0;
                for x in &xs {
                    total += x;
                }
                V::Num(match node.op {
                    Op::Sum => total,
                    Op::Max => xs.iter().cloned().fold(f64::MIN, f64::max),
                    Op::Min => xs.iter().cloned().fold(f64::MAX, f64::min),
                    _ => total / xs.len() as f64,
                })
            }
            Op::Add => V::Num(num(&args[0])? + num(&args[1])?),
            Op::Diff => {
                let (x, y) = (num(&args[0])?, num(&args[1])?);
                V::Num(if x > y { x - y } else { y - x })
            }
            Op::Highest | Op::Lowest => {
                let (x, y) = (num(&args[0])?, num(&args[1])?);
                if close(x, y) {
                    return Err(("comparison_tie", step));
                }
                let first_wins = (node.op == Op::Highest) == (x > y);
                let label = if first_wins { &args[0].label } else { &args[1].label }.clone();
                return Ok(Val {
                    v: V::Text(label.clone()),
                    label,
                });
            }
            Op::Compare(p, value) => {
                let x = num(&args[0])?;
                let value = *value as f64;
                V::Bool(match COMPARE_PHRASES[*p].1 {
                    Cmp::Gt => x > value,
                    Cmp::Lt => x < value,
                    Cmp::Ge => x >= value,
                    Cmp::Le => x <= value,
                    Cmp::Ne => x != value,
                })
            }
            Op::Same => V::Bool(match (&args[0].v, &args[1].v) {
                (V::Num(x), V::Num(y)) => close(*x, *y),
                (V::List(xs), V::List(ys)) => {
                    let xs: BTreeSet<String> = xs.iter().map(|s| s.to_lowercase()).collect();
                    let ys: BTreeSet<String> = ys.iter().map(|s| s.to_lowercase()).collect();
                    xs == ys
                }
                (a, b) => render(a).to_lowercase() == render(b).to_lowercase(),
            }),
            Op::BothTrue => {
                let (x, y) = (boolean(&args[0])?, boolean(&args[1])?);
                V::Bool(x && y)
            }
            Op::BothFalse => {
                let (x, y) = (boolean(&args[0])?, boolean(&args[1])?);
                V::Bool(!x && !y)
            }
            Op::Union => {
                let mut out: Vec<String> = Vec::new();
                for a in &args {
                    for item in items(a)? {
                        if !out.iter().any(|o| o.to_lowercase() == item.to_lowercase()) {
                            out.push(item);
                        }
                    }
                }
                V::List(out)
            }
            Op::Both | Op::Besides => {
                let left = items(&args[0])?;
                let right: Vec<String> = items(&args[1])?.iter().map(|s| s.to_lowercase()).collect();
                let keep_present = node.op == Op::Both;
                V::List(
                    left.into_iter()
                        .filter(|i| right.contains(&i.to_lowercase()) == keep_present)
                        .collect(),
                )
            }
        };
        Ok(Val { v, label: first_label })
    }
}

/// The answer a correct evaluator gives for `nodes` (root last).
pub fn reference_evaluate(nodes: &[Node], max_words: usize) -> Result<Answer, Fail> {
    let root = nodes.len();
    let interp = Interp { nodes, max_words };
    let v = interp.eval(root)?.v;
    let words = render(&v).split_whitespace().count();
    if words > max_words {
        return Err(("answer_too_long", root));
    }
    Ok(match v {
        V::Num(x) => Answer::number(x),
        V::Text(t) => Answer::span(t),
        V::List(texts) if texts.is_empty() => return Err(("empty_answer", root)),
        V::List(texts) => Answer::Spans { texts },
        V::Bool(b) => Answer::yes_no(b),
    })
}

/// Step index carried by a discard, for comparison with [`Fail`].
pub fn discard_step(d: &bpb_core::Discard) -> usize {
    use bpb_core::Discard::*;
    match d {
        InvalidDecomposition => 0,
        TypeMismatch { step }
        | AnswerTooLong { step, .. }
        | EmptyAnswer { step }
        | NoisyOperation { step, .. }
        | Tie { step }
        | MissingValue { step, .. }
        | Backend { step, .. } => *step,
    }
}

// ---------------------------------------------------------------------------
// Free-form decompositions for round-trip checks
// ---------------------------------------------------------------------------

const WORDS: [&str; 14] = [
    "players", "team", "the", "red", "goals", "scored", "season", "city", "river", "near", "from", "O'Neil", "1,200",
    "won",
];

/// A random chained decomposition; not every draw is valid.
pub fn random_texts(rng: &mut impl Rng) -> Vec<String> {
    let n = rng.gen_range(1..=8);
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut refs = Vec::new();
        if i > 1 {
            refs.push(i - 1);
            if i > 2 && rng.gen_bool(0.4) {
                refs.push(rng.gen_range(1..i - 1));
            }
        }
        let mut parts: Vec<String> = (0..rng.gen_range(1..5))
            .map(|_| WORDS[rng.gen_range(0..WORDS.len())].to_string())
            .collect();
        for r in refs {
            let at = rng.gen_range(0..=parts.len());
            parts.insert(at, format!("#{r}"));
        }
        out.push(parts.join(" "));
    }
    out
}
