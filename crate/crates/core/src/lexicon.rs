//! Word lists consulted by the classifier, the rewrite rules and the question
//! realizer. Everything here is data: extending a table never requires a code
//! change elsewhere.

use crate::qdmr::{CompareOp, Extremum};

/// Comparative and superlative words mapped to the extremum they select.
///
/// Ages are ordered by magnitude, so "older" selects the highest value.
/// Time words select by date value, so "first" and "earliest" are the lowest.
pub const EXTREMUM_WORDS: &[(&str, Extremum)] = &[
    ("highest", Extremum::Highest),
    ("higher", Extremum::Highest),
    ("largest", Extremum::Highest),
    ("larger", Extremum::Highest),
    ("biggest", Extremum::Highest),
    ("bigger", Extremum::Highest),
    ("greatest", Extremum::Highest),
    ("greater", Extremum::Highest),
    ("most", Extremum::Highest),
    ("more", Extremum::Highest),
    ("longest", Extremum::Highest),
    ("longer", Extremum::Highest),
    ("tallest", Extremum::Highest),
    ("taller", Extremum::Highest),
    ("oldest", Extremum::Highest),
    ("older", Extremum::Highest),
    ("latest", Extremum::Highest),
    ("later", Extremum::Highest),
    ("last", Extremum::Highest),
    ("heaviest", Extremum::Highest),
    ("heavier", Extremum::Highest),
    ("max", Extremum::Highest),
    ("maximum", Extremum::Highest),
    ("lowest", Extremum::Lowest),
    ("lower", Extremum::Lowest),
    ("smallest", Extremum::Lowest),
    ("smaller", Extremum::Lowest),
    ("least", Extremum::Lowest),
    ("less", Extremum::Lowest),
    ("fewest", Extremum::Lowest),
    ("fewer", Extremum::Lowest),
    ("shortest", Extremum::Lowest),
    ("shorter", Extremum::Lowest),
    ("youngest", Extremum::Lowest),
    ("younger", Extremum::Lowest),
    ("earliest", Extremum::Lowest),
    ("earlier", Extremum::Lowest),
    ("first", Extremum::Lowest),
    ("lightest", Extremum::Lowest),
    ("lighter", Extremum::Lowest),
    ("min", Extremum::Lowest),
    ("minimum", Extremum::Lowest),
];

/// Antonym pairs for comparative and superlative tokens. Each word occurs in
/// at most one pair so that lookup is an involution.
pub const ANTONYM_PAIRS: &[(&str, &str)] = &[
    ("younger", "older"),
    ("youngest", "oldest"),
    ("smaller", "larger"),
    ("smallest", "largest"),
    ("shorter", "longer"),
    ("shortest", "longest"),
    ("fewer", "more"),
    ("least", "most"),
    ("first", "last"),
    ("earliest", "latest"),
    ("earlier", "later"),
    ("highest", "lowest"),
    ("higher", "lower"),
    ("before", "after"),
    ("closer", "farther"),
    ("closest", "farthest"),
    ("heavier", "lighter"),
    ("heaviest", "lightest"),
    ("faster", "slower"),
    ("fastest", "slowest"),
    ("warmer", "colder"),
    ("warmest", "coldest"),
    ("wider", "narrower"),
    ("widest", "narrowest"),
];

/// Phrases recognised after "is" in a compare-to-value step, longest first so
/// that "not equal to" wins over "equal to" style prefixes.
pub const COMPARE_PHRASES: &[(&str, CompareOp)] = &[
    ("not equal to", CompareOp::Ne),
    ("different from", CompareOp::Ne),
    ("higher than", CompareOp::Gt),
    ("more than", CompareOp::Gt),
    ("larger than", CompareOp::Gt),
    ("greater than", CompareOp::Gt),
    ("bigger than", CompareOp::Gt),
    ("over", CompareOp::Gt),
    ("lower than", CompareOp::Lt),
    ("less than", CompareOp::Lt),
    ("smaller than", CompareOp::Lt),
    ("fewer than", CompareOp::Lt),
    ("under", CompareOp::Lt),
    ("at least", CompareOp::Ge),
    ("at most", CompareOp::Le),
];

/// English number words accepted as numbers in contexts and answers.
pub const NUMBER_WORDS: &[(&str, u32)] = &[
    ("zero", 0),
    ("one", 1),
    ("two", 2),
    ("three", 3),
    ("four", 4),
    ("five", 5),
    ("six", 6),
    ("seven", 7),
    ("eight", 8),
    ("nine", 9),
    ("ten", 10),
    ("eleven", 11),
    ("twelve", 12),
    ("thirteen", 13),
    ("fourteen", 14),
    ("fifteen", 15),
    ("sixteen", 16),
    ("seventeen", 17),
    ("eighteen", 18),
    ("nineteen", 19),
    ("twenty", 20),
];

/// Auxiliary verbs that can open a "both ... ?" yes/no question.
pub const YES_NO_AUXILIARIES: &[&str] = &[
    "are", "is", "were", "was", "do", "does", "did", "can", "could", "have", "has", "had", "will", "would", "should",
];

pub const ARTICLES: &[&str] = &["a", "an", "the"];

pub fn extremum_of(word: &str) -> Option<Extremum> {
    EXTREMUM_WORDS
        .iter()
        .find(|(w, _)| w.eq_ignore_ascii_case(word))
        .map(|&(_, e)| e)
}

pub fn number_word(word: &str) -> Option<u32> {
    NUMBER_WORDS
        .iter()
        .find(|(w, _)| w.eq_ignore_ascii_case(word))
        .map(|&(_, n)| n)
}

pub fn number_to_word(n: u32) -> Option<&'static str> {
    NUMBER_WORDS.iter().find(|&&(_, v)| v == n).map(|&(w, _)| w)
}
