//! Dataset ingestion. Every supported format is normalized to
//! [`InputRecord`]s; Break-style QDMR CSV files are attached to loaded
//! records by id.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use bpb_core::answer::{month_from_name, Date};
use bpb_core::{numbers, Answer, Decomposition};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetTag {
    Drop,
    Hotpotqa,
    Iirc,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Drop,
    Hotpotqa,
    Iirc,
    GenericJsonl,
    BreakCsv,
}

impl FromStr for Format {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop" => Ok(Format::Drop),
            "hotpotqa" => Ok(Format::Hotpotqa),
            "iirc" => Ok(Format::Iirc),
            "generic-jsonl" | "generic" | "jsonl" => Ok(Format::GenericJsonl),
            "break-csv" => Ok(Format::BreakCsv),
            other => Err(DataError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Drop => "drop",
            Format::Hotpotqa => "hotpotqa",
            Format::Iirc => "iirc",
            Format::GenericJsonl => "generic-jsonl",
            Format::BreakCsv => "break-csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputRecord {
    pub id: String,
    pub question: String,
    pub context: String,
    pub answer: Answer,
    pub qdmr: Option<Decomposition>,
    pub dataset: DatasetTag,
}

/// A decomposition as it appears in JSON: a list of steps or one serialized
/// string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawQdmr {
    Steps(Vec<String>),
    Text(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawAnswer {
    Typed(Answer),
    Text(String),
    Number(f64),
    Bool(bool),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenericRow {
    id: String,
    question: String,
    context: String,
    answer: RawAnswer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    qdmr: Option<RawQdmr>,
    #[serde(default = "generic_tag")]
    dataset: DatasetTag,
}

fn generic_tag() -> DatasetTag {
    DatasetTag::Generic
}

/// Types a bare answer string: yes/no, a number, otherwise a span.
pub fn answer_from_text(text: &str) -> Answer {
    let t = text.trim();
    match t.to_ascii_lowercase().as_str() {
        "yes" => return Answer::yes_no(true),
        "no" => return Answer::yes_no(false),
        _ => {}
    }
    match numbers::parse_number(t) {
        Some(v) => Answer::number(v),
        None => Answer::span(t),
    }
}

fn parse_qdmr(raw: RawQdmr) -> Result<Decomposition, String> {
    match raw {
        RawQdmr::Steps(steps) => Decomposition::from_texts(steps),
        RawQdmr::Text(text) => Decomposition::parse(&text),
    }
    .map_err(|e| e.to_string())
}

impl GenericRow {
    fn into_record(self) -> Result<InputRecord, String> {
        let answer = match self.answer {
            RawAnswer::Typed(a) => a,
            RawAnswer::Text(t) => answer_from_text(&t),
            RawAnswer::Number(v) => Answer::number(v),
            RawAnswer::Bool(b) => Answer::yes_no(b),
        };
        answer.check().map_err(|e| e.to_string())?;
        let qdmr = self.qdmr.map(parse_qdmr).transpose()?;
        Ok(InputRecord {
            id: self.id,
            question: self.question,
            context: self.context,
            answer,
            qdmr,
            dataset: self.dataset,
        })
    }
}

impl InputRecord {
    /// One generic-jsonl line.
    pub fn to_json_line(&self) -> String {
        let row = GenericRow {
            id: self.id.clone(),
            question: self.question.clone(),
            context: self.context.clone(),
            answer: RawAnswer::Typed(self.answer.clone()),
            qdmr: self.qdmr.as_ref().map(|d| RawQdmr::Steps(d.texts())),
            dataset: self.dataset,
        };
        serde_json::to_string(&row).expect("record serializes")
    }
}

fn read(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|e| DataError::io(path, e))
}

fn read_json(path: &Path) -> Result<Value, DataError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| DataError::schema(path, e.line(), e))
}

fn str_field<'a>(v: &'a Value, key: &str) -> Option<&'a str> {
    v.get(key).and_then(Value::as_str)
}

fn require_str<'a>(path: &Path, v: &'a Value, key: &str) -> Result<&'a str, DataError> {
    str_field(v, key).ok_or_else(|| DataError::schema(path, 0, format!("missing string field {key:?}")))
}

/// Reads a generic JSONL file: one `{"id","question","context","answer"}`
/// object per line, with optional `"qdmr"` and `"dataset"`.
pub fn load_generic_jsonl(path: &Path) -> Result<Vec<InputRecord>, DataError> {
    let file = fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: GenericRow = serde_json::from_str(&line).map_err(|e| DataError::schema(path, i + 1, e))?;
        out.push(row.into_record().map_err(|e| DataError::schema(path, i + 1, e))?);
    }
    Ok(out)
}

fn drop_answer(v: &Value) -> Option<Answer> {
    if let Some(n) = v.get("number") {
        let text = match n {
            Value::String(s) => s.clone(),
            Value::Number(x) => x.to_string(),
            _ => String::new(),
        };
        if let Some(x) = numbers::parse_number(&text) {
            return Some(Answer::number(x));
        }
    }
    if let Some(spans) = v.get("spans").and_then(Value::as_array) {
        let texts: Vec<String> = spans.iter().filter_map(Value::as_str).map(str::to_string).collect();
        match texts.len() {
            0 => {}
            1 => return Some(Answer::span(texts[0].clone())),
            _ => return Some(Answer::Spans { texts }),
        }
    }
    let d = v.get("date")?;
    let field = |k: &str| str_field(d, k).map(str::trim).filter(|s| !s.is_empty());
    let date = Date {
        day: field("day").and_then(|s| s.parse().ok()),
        month: field("month").and_then(|s| s.parse().ok().or_else(|| month_from_name(s))),
        year: field("year").and_then(|s| s.parse().ok()),
    };
    (!date.is_empty()).then_some(Answer::Date(date))
}

/// DROP: `{passage_id: {"passage", "qa_pairs": [{"query_id", "question",
/// "answer"}]}}`. Questions whose answer is empty are skipped.
pub fn load_drop(path: &Path) -> Result<Vec<InputRecord>, DataError> {
    let root = read_json(path)?;
    let passages = root
        .as_object()
        .ok_or_else(|| DataError::schema(path, 1, "top level must be an object"))?;
    let mut out = Vec::new();
    for (pid, p) in passages {
        let passage = require_str(path, p, "passage")?;
        let pairs = p
            .get("qa_pairs")
            .and_then(Value::as_array)
            .ok_or_else(|| DataError::schema(path, 0, format!("{pid}: missing qa_pairs")))?;
        for qa in pairs {
            let Some(answer) = qa.get("answer").and_then(drop_answer) else {
                continue;
            };
            out.push(InputRecord {
                id: require_str(path, qa, "query_id")?.to_string(),
                question: require_str(path, qa, "question")?.to_string(),
                context: passage.to_string(),
                answer,
                qdmr: None,
                dataset: DatasetTag::Drop,
            });
        }
    }
    Ok(out)
}

/// HotpotQA: a list of `{"_id", "question", "answer", "supporting_facts",
/// "context"}`. The context is the gold paragraphs only, in context order.
pub fn load_hotpotqa(path: &Path) -> Result<Vec<InputRecord>, DataError> {
    let root = read_json(path)?;
    let items = root
        .as_array()
        .ok_or_else(|| DataError::schema(path, 1, "top level must be a list"))?;
    let mut out = Vec::new();
    for item in items {
        let id = require_str(path, item, "_id")?;
        let gold: BTreeSet<&str> = item
            .get("supporting_facts")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
            .filter_map(|f| f.get(0).and_then(Value::as_str))
            .collect();
        let mut paragraphs = Vec::new();
        for para in item.get("context").and_then(Value::as_array).into_iter().flatten() {
            let Some(title) = para.get(0).and_then(Value::as_str) else {
                return Err(DataError::schema(path, 0, format!("{id}: malformed context entry")));
            };
            if !gold.contains(title) {
                continue;
            }
            let sentences: Vec<&str> = para
                .get(1)
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
                .filter_map(Value::as_str)
                .collect();
            paragraphs.push(format!("{title}: {}", sentences.concat().trim()));
        }
        out.push(InputRecord {
            id: id.to_string(),
            question: require_str(path, item, "question")?.to_string(),
            context: paragraphs.join("\n"),
            answer: answer_from_text(require_str(path, item, "answer")?),
            qdmr: None,
            dataset: DatasetTag::Hotpotqa,
        });
    }
    Ok(out)
}

fn iirc_answer(a: &Value) -> Option<Answer> {
    match str_field(a, "type")? {
        "span" => {
            let texts: Vec<String> = a
                .get("answer_spans")?
                .as_array()?
                .iter()
                .filter_map(|s| str_field(s, "text"))
                .map(str::to_string)
                .collect();
            match texts.len() {
                0 => None,
                1 => Some(Answer::span(texts[0].clone())),
                _ => Some(Answer::Spans { texts }),
            }
        }
        "value" => {
            let value = numbers::parse_number(str_field(a, "answer_value")?)?;
            let unit = str_field(a, "answer_unit").map(str::trim).filter(|u| !u.is_empty());
            Some(Answer::Number {
                value,
                unit: unit.map(str::to_string),
            })
        }
        "binary" => match str_field(a, "answer_value")?.trim().to_ascii_lowercase().as_str() {
            "yes" => Some(Answer::yes_no(true)),
            "no" => Some(Answer::yes_no(false)),
            _ => None,
        },
        _ => None,
    }
}

/// IIRC: a list of articles `{"title", "text", "questions": [{"qid",
/// "question", "answer", "context": [{"text"}]}]}`. The context is the
/// paragraph followed by the gold evidence pieces. Unanswerable questions are
/// skipped.
pub fn load_iirc(path: &Path) -> Result<Vec<InputRecord>, DataError> {
    let root = read_json(path)?;
    let items = root
        .as_array()
        .ok_or_else(|| DataError::schema(path, 1, "top level must be a list"))?;
    let mut out = Vec::new();
    for article in items {
        let paragraph = require_str(path, article, "text")?;
        for q in article.get("questions").and_then(Value::as_array).into_iter().flatten() {
            let Some(answer) = q.get("answer").and_then(iirc_answer) else {
                continue;
            };
            let mut context = vec![paragraph.trim().to_string()];
            for piece in q.get("context").and_then(Value::as_array).into_iter().flatten() {
                if let Some(text) = str_field(piece, "text") {
                    if !text.trim().is_empty() && text.trim() != paragraph.trim() {
                        context.push(text.trim().to_string());
                    }
                }
            }
            out.push(InputRecord {
                id: require_str(path, q, "qid")?.to_string(),
                question: require_str(path, q, "question")?.to_string(),
                context: context.join(" "),
                answer,
                qdmr: None,
                dataset: DatasetTag::Iirc,
            });
        }
    }
    Ok(out)
}

fn check_unique(records: &[InputRecord]) -> Result<(), DataError> {
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(DataError::DuplicateId(r.id.clone()));
        }
    }
    Ok(())
}

/// Loads and normalizes a dataset. Break CSV files carry no contexts or
/// answers; load them with [`load_break_csv`] and attach them instead.
pub fn load_dataset(path: &Path, format: Format) -> Result<Vec<InputRecord>, DataError> {
    let records = match format {
        Format::Drop => load_drop(path)?,
        Format::Hotpotqa => load_hotpotqa(path)?,
        Format::Iirc => load_iirc(path)?,
        Format::GenericJsonl => load_generic_jsonl(path)?,
        Format::BreakCsv => {
            return Err(DataError::Config(
                "break-csv holds decompositions only; pass it with --break-csv".into(),
            ))
        }
    };
    check_unique(&records)?;
    Ok(records)
}

#[derive(Debug, Deserialize)]
struct BreakRow {
    question_id: String,
    #[serde(default)]
    #[allow(dead_code)]
    question_text: String,
    decomposition: String,
}

/// Reads a Break-style CSV (`question_id,question_text,decomposition,...`)
/// into decompositions keyed by question id.
pub fn load_break_csv(path: &Path) -> Result<BTreeMap<String, Decomposition>, DataError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => DataError::io(path, io),
        other => DataError::schema(path, 0, format!("{other:?}")),
    })?;
    let mut out = BTreeMap::new();
    for (i, row) in reader.deserialize::<BreakRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| DataError::schema(path, line, e))?;
        let d = Decomposition::parse(&row.decomposition).map_err(|e| DataError::schema(path, line, e))?;
        if out.insert(row.question_id.clone(), d).is_some() {
            return Err(DataError::DuplicateId(row.question_id));
        }
    }
    Ok(out)
}

/// Attaches decompositions to records that lack one. A Break id matches a
/// record when equal to its id or ending in `_<id>`. Returns how many
/// records were attached.
pub fn attach_qdmr(records: &mut [InputRecord], qdmr: &BTreeMap<String, Decomposition>) -> usize {
    let mut by_suffix: BTreeMap<&str, &Decomposition> = BTreeMap::new();
    for (id, d) in qdmr {
        if let Some(pos) = id.rfind('_') {
            by_suffix.entry(&id[pos + 1..]).or_insert(d);
        }
    }
    let mut attached = 0;
    for r in records.iter_mut().filter(|r| r.qdmr.is_none()) {
        let found = qdmr
            .get(&r.id)
            .or_else(|| by_suffix.get(r.id.as_str()).copied())
            .or_else(|| {
                qdmr.iter()
                    .find(|(k, _)| k.ends_with(&format!("_{}", r.id)))
                    .map(|(_, d)| d)
            });
        if let Some(d) = found {
            r.qdmr = Some(d.clone().with_source_question(r.question.clone()));
            attached += 1;
        }
    }
    attached
}

/// Writes records as generic JSONL.
pub fn write_generic_jsonl(path: &Path, records: &[InputRecord]) -> Result<(), DataError> {
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(|e| DataError::io(path, e))?);
    for r in records {
        writeln!(file, "{}", r.to_json_line()).map_err(|e| DataError::io(path, e))?;
    }
    file.flush().map_err(|e| DataError::io(path, e))
}
