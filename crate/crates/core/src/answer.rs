use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::numbers;

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

/// Parses an English month name or its three-letter abbreviation.
pub fn month_from_name(name: &str) -> Option<u8> {
    let name = name.trim().trim_end_matches('.');
    MONTHS
        .iter()
        .position(|m| m.eq_ignore_ascii_case(name) || (name.len() == 3 && m[..3].eq_ignore_ascii_case(name)))
        .map(|i| i as u8 + 1)
}

/// A partially specified calendar date, as DROP answers carry them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Date {
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub day: Option<u8>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub month: Option<u8>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub year: Option<i32>,
}

impl Date {
    pub fn is_empty(&self) -> bool {
        self.day.is_none() && self.month.is_none() && self.year.is_none()
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if let Some(m) = self.month.and_then(|m| MONTHS.get(usize::from(m).wrapping_sub(1))) {
            parts.push(m.to_string());
        }
        if let Some(d) = self.day {
            parts.push(d.to_string());
        }
        if let Some(y) = self.year {
            parts.push(y.to_string());
        }
        f.write_str(&parts.join(" "))
    }
}

/// A typed gold or generated answer.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "lowercase"))]
pub enum Answer {
    Number {
        value: f64,
        #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
        unit: Option<String>,
    },
    Span {
        text: String,
    },
    Spans {
        texts: Vec<String>,
    },
    #[cfg_attr(feature = "serde", serde(rename = "yesno"))]
    YesNo {
        yes: bool,
    },
    Date(Date),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum AnswerType {
    Number,
    Span,
    Spans,
    YesNo,
    Date,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnswerError {
    #[error("number answer is not finite")]
    NonFinite,
    #[error("multi-span answer has no spans")]
    EmptySpans,
}

impl Answer {
    pub fn number(value: f64) -> Self {
        Answer::Number { value, unit: None }
    }

    pub fn span(text: impl Into<String>) -> Self {
        Answer::Span { text: text.into() }
    }

    pub fn yes_no(yes: bool) -> Self {
        Answer::YesNo { yes }
    }

    pub fn answer_type(&self) -> AnswerType {
        match self {
            Answer::Number { .. } => AnswerType::Number,
            Answer::Span { .. } => AnswerType::Span,
            Answer::Spans { .. } => AnswerType::Spans,
            Answer::YesNo { .. } => AnswerType::YesNo,
            Answer::Date(_) => AnswerType::Date,
        }
    }

    pub fn check(&self) -> Result<(), AnswerError> {
        match self {
            Answer::Number { value, .. } if !value.is_finite() => Err(AnswerError::NonFinite),
            Answer::Spans { texts } if texts.is_empty() => Err(AnswerError::EmptySpans),
            _ => Ok(()),
        }
    }

    /// Numeric value of the answer: a NUMBER, or a span that is entirely a
    /// number ("12", "twelve").
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Answer::Number { value, .. } => Some(*value),
            Answer::Span { text } => numbers::parse_number(text),
            _ => None,
        }
    }

    pub fn as_yes_no(&self) -> Option<bool> {
        match self {
            Answer::YesNo { yes } => Some(*yes),
            Answer::Span { text } => match text.trim().to_ascii_lowercase().as_str() {
                "yes" => Some(true),
                "no" => Some(false),
                _ => None,
            },
            _ => None,
        }
    }

    /// Surface text used for scoring and display.
    pub fn to_text(&self) -> String {
        match self {
            Answer::Number { value, .. } => numbers::format_number(*value),
            Answer::Span { text } => text.clone(),
            Answer::Spans { texts } => texts.join(", "),
            Answer::YesNo { yes } => (if *yes { "yes" } else { "no" }).to_string(),
            Answer::Date(d) => d.to_string(),
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A constraint a prediction must satisfy when no exact answer is known.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "kind", content = "reference", rename_all = "UPPERCASE")
)]
pub enum Constraint {
    Numeric,
    Boolean,
    Geq(f64),
    Leq(f64),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Numeric => f.write_str("NUMERIC"),
            Constraint::Boolean => f.write_str("BOOLEAN"),
            Constraint::Geq(r) => write!(f, "GEQ({})", numbers::format_number(*r)),
            Constraint::Leq(r) => write!(f, "LEQ({})", numbers::format_number(*r)),
        }
    }
}
