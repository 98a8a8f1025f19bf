//! Number recognition shared by answer generation, the evaluator and the
//! metrics: comma grouping, decimals, small number words and unit tails.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::lexicon;

const EXACT_INT_LIMIT: f64 = 9_007_199_254_740_992.0;

pub(crate) const EPSILON: f64 = 1e-9;

pub fn is_integer(x: f64) -> bool {
    x.is_finite() && x.abs() < EXACT_INT_LIMIT && x == (x as i64) as f64
}

pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= EPSILON * (1.0 + a.abs().max(b.abs()))
}

/// Canonical text for a number: integral values print without a fractional
/// part ("23.0" becomes "23").
pub fn format_number(x: f64) -> String {
    if is_integer(x) {
        (x as i64).to_string()
    } else {
        x.to_string()
    }
}

/// Scans a numeral starting at byte `start`, which must be an ASCII digit.
/// Returns the value and the byte offset one past the numeral.
fn scan_numeral(s: &str, start: usize) -> Option<(f64, usize)> {
    let bytes = s.as_bytes();
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return None;
    }
    let mut digits = String::from(&s[start..end]);
    // Comma grouping only counts when the lead group has at most three digits
    // and every following group has exactly three.
    if end - start <= 3 {
        loop {
            let group_ok = end + 4 <= bytes.len()
                && bytes[end] == b','
                && bytes[end + 1..end + 4].iter().all(u8::is_ascii_digit)
                && bytes.get(end + 4).is_none_or(|b| !b.is_ascii_digit());
            if !group_ok {
                break;
            }
            digits.push_str(&s[end + 1..end + 4]);
            end += 4;
        }
    }
    if end + 1 < bytes.len() && bytes[end] == b'.' && bytes[end + 1].is_ascii_digit() {
        let frac_start = end + 1;
        let mut frac_end = frac_start;
        while frac_end < bytes.len() && bytes[frac_end].is_ascii_digit() {
            frac_end += 1;
        }
        digits.push('.');
        digits.push_str(&s[frac_start..frac_end]);
        end = frac_end;
    }
    digits.parse::<f64>().ok().map(|v| (v, end))
}

fn strip_sign_and_currency(s: &str) -> (bool, &str) {
    let s = s.trim_start_matches(['$', '£', '€']);
    match s.strip_prefix('-') {
        Some(rest) => (true, rest.trim_start_matches(['$', '£', '€'])),
        None => (false, s),
    }
}

/// Parses text that is entirely a number: "23", "23.0", "1,234", "-4",
/// "twelve". Trailing sentence punctuation is tolerated.
pub fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim().trim_end_matches(['.', '?', '!', ',']);
    let (negative, body) = strip_sign_and_currency(t);
    if body.is_empty() {
        return None;
    }
    let value = if body.as_bytes()[0].is_ascii_digit() {
        let (v, end) = scan_numeral(body, 0)?;
        let rest = body[end..].trim_start_matches('%');
        if !rest.is_empty() {
            return None;
        }
        v
    } else {
        f64::from(lexicon::number_word(body)?)
    };
    Some(if negative { -value } else { value })
}

/// Parses a leading numeral followed by an optional unit tail:
/// "25 yards" yields `(25, Some("yards"))`, "7" yields `(7, None)`.
pub fn parse_leading_number(text: &str) -> Option<(f64, Option<String>)> {
    let t = text.trim();
    let (negative, body) = strip_sign_and_currency(t);
    if body.is_empty() {
        return None;
    }
    let (value, rest) = if body.as_bytes()[0].is_ascii_digit() {
        let (v, end) = scan_numeral(body, 0)?;
        let rest = body[end..].trim_start_matches('%');
        if rest.chars().next().is_some_and(char::is_alphanumeric) {
            return None;
        }
        (v, rest)
    } else {
        let word_end = body.find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(body.len());
        (f64::from(lexicon::number_word(&body[..word_end])?), &body[word_end..])
    };
    let unit = rest.trim().trim_end_matches(['.', '?', '!']).trim();
    let value = if negative { -value } else { value };
    Some((value, (!unit.is_empty()).then(|| unit.to_string())))
}

/// All numbers in `context` with their character offsets: base-10 integers
/// and decimals (comma grouping allowed) plus the number words zero to twenty.
pub fn extract_numbers(context: &str) -> Vec<(f64, usize)> {
    let mut out = Vec::new();
    let bytes = context.as_bytes();
    let mut char_index = 0;
    let mut iter = context.char_indices().peekable();
    let mut prev: Option<char> = None;
    while let Some((byte_pos, c)) = iter.next() {
        let boundary = prev.is_none_or(|p| !p.is_alphanumeric() && p != '.');
        if c.is_ascii_digit() && boundary {
            if let Some((value, end)) = scan_numeral(context, byte_pos) {
                let alnum_tail = context[end..].chars().next().is_some_and(char::is_alphabetic);
                let start_char = char_index;
                // Advance past the numeral.
                let consumed = context[byte_pos..end].chars().count();
                for _ in 1..consumed {
                    iter.next();
                }
                char_index += consumed;
                prev = context[..end].chars().next_back();
                if !alnum_tail || is_ordinal_free_unit(&context[end..]) {
                    out.push((value, start_char));
                }
                continue;
            }
        }
        if c.is_ascii_alphabetic() && prev.is_none_or(|p| !p.is_alphanumeric()) {
            let word_end = context[byte_pos..]
                .find(|ch: char| !ch.is_ascii_alphabetic())
                .map_or(bytes.len(), |i| byte_pos + i);
            let word = &context[byte_pos..word_end];
            let consumed = word.len();
            if let Some(n) = lexicon::number_word(word) {
                out.push((f64::from(n), char_index));
            }
            for _ in 1..consumed {
                iter.next();
            }
            char_index += consumed;
            prev = word.chars().next_back();
            continue;
        }
        char_index += 1;
        prev = Some(c);
    }
    out
}

// "1990s" and "3rd" are not quantities; "10km" is.
fn is_ordinal_free_unit(tail: &str) -> bool {
    let word: String = tail.chars().take_while(|c| c.is_alphabetic()).collect();
    !matches!(word.as_str(), "s" | "st" | "nd" | "rd" | "th")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn values(s: &str) -> Vec<f64> {
        extract_numbers(s).into_iter().map(|(v, _)| v).collect()
    }

    #[test]
    fn extracts_plain_integers() {
        assert_eq!(
            values("He threw 10 passes and 15 runs for 25 yards"),
            vec![10.0, 15.0, 25.0]
        );
    }

    #[test]
    fn extracts_comma_grouped() {
        assert_eq!(values("a crowd of 1,234"), vec![1234.0]);
        assert_eq!(values("1,234,567 people, 12,5 odd"), vec![1_234_567.0, 12.0, 5.0]);
    }

    #[test]
    fn no_digits_means_nothing() {
        assert!(values("no digits here").is_empty());
    }

    #[test]
    fn extracts_words_and_decimals() {
        assert_eq!(values("twelve apples cost 3.5 dollars"), vec![12.0, 3.5]);
        assert_eq!(values("someone went"), Vec::<f64>::new());
    }

    #[test]
    fn offsets_are_char_offsets() {
        let found = extract_numbers("é 12 and two");
        assert_eq!(found, vec![(12.0, 2), (2.0, 9)]);
    }

    #[test]
    fn skips_decades_and_ordinals() {
        assert_eq!(values("the 1990s and the 3rd quarter, 10km"), vec![10.0]);
    }

    #[test]
    fn parses_whole_numbers() {
        assert_eq!(parse_number("23.0"), Some(23.0));
        assert_eq!(parse_number("1,234"), Some(1234.0));
        assert_eq!(parse_number("twelve"), Some(12.0));
        assert_eq!(parse_number("-4"), Some(-4.0));
        assert_eq!(parse_number("25 yards"), None);
        assert_eq!(parse_number("Spain"), None);
        assert_eq!(parse_number(""), None);
    }

    #[test]
    fn parses_unit_tails() {
        assert_eq!(parse_leading_number("25 yards"), Some((25.0, Some("yards".into()))));
        assert_eq!(parse_leading_number("7"), Some((7.0, None)));
        assert_eq!(
            parse_leading_number("two touchdowns"),
            Some((2.0, Some("touchdowns".into())))
        );
        assert_eq!(parse_leading_number("3rd"), None);
        assert_eq!(parse_leading_number("the Seahawks"), None);
    }

    #[test]
    fn formats_integral_without_fraction() {
        assert_eq!(format_number(23.0), "23");
        assert_eq!(format_number(2.5), "2.5");
        assert_eq!(format_number(-3.0), "-3");
    }
}
