//! Sentence tokenizer and number resolution for answer coding.
//!
//! Produces per-sentence token streams where digit tokens and pivot-language
//! number words (zero through one hundred, tens composable with units) are
//! resolved to numbers. Ranges collapse to their arithmetic midpoint:
//! "10-12", "10 to 12", and "between 10 and 12" all become 11. Date-like
//! tokens are demoted to plain words so answers that echo the queried date do
//! not contaminate extraction: a number adjacent to a month name, a number
//! followed by an ordinal suffix (st/nd/rd/th), and four-digit integers in
//! 1900..=2100 are never casualty candidates.

/// One token of a sentence.
#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Word(String),
    Number(f64),
}

impl Item {
    pub fn as_word(&self) -> Option<&str> {
        match self {
            Item::Word(w) => Some(w),
            Item::Number(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum RawTok {
    Word(String),
    Number(f64),
    Dash,
}

const MONTHS: [&str; 12] = [
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

const ORDINAL_SUFFIXES: [&str; 4] = ["st", "nd", "rd", "th"];

fn unit_value(word: &str) -> Option<f64> {
    let v = match word {
        "zero" => 0.0,
        "one" => 1.0,
        "two" => 2.0,
        "three" => 3.0,
        "four" => 4.0,
        "five" => 5.0,
        "six" => 6.0,
        "seven" => 7.0,
        "eight" => 8.0,
        "nine" => 9.0,
        _ => return None,
    };
    Some(v)
}

fn teen_value(word: &str) -> Option<f64> {
    let v = match word {
        "ten" => 10.0,
        "eleven" => 11.0,
        "twelve" => 12.0,
        "thirteen" => 13.0,
        "fourteen" => 14.0,
        "fifteen" => 15.0,
        "sixteen" => 16.0,
        "seventeen" => 17.0,
        "eighteen" => 18.0,
        "nineteen" => 19.0,
        _ => return None,
    };
    Some(v)
}

fn tens_value(word: &str) -> Option<f64> {
    let v = match word {
        "twenty" => 20.0,
        "thirty" => 30.0,
        "forty" => 40.0,
        "fifty" => 50.0,
        "sixty" => 60.0,
        "seventy" => 70.0,
        "eighty" => 80.0,
        "ninety" => 90.0,
        _ => return None,
    };
    Some(v)
}

/// Splits lowercased text into sentences of resolved tokens.
pub fn sentence_items(text: &str) -> Vec<Vec<Item>> {
    let lower = text.to_lowercase();
    let mut sentences = Vec::new();
    let mut current: Vec<RawTok> = Vec::new();
    let chars: Vec<char> = lower.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_alphabetic() {
                i += 1;
            }
            current.push(RawTok::Word(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit() {
            let mut digits = String::new();
            while i < chars.len() {
                let c = chars[i];
                if c.is_ascii_digit() {
                    digits.push(c);
                    i += 1;
                } else if (c == ',' || c == '.')
                    && i + 1 < chars.len()
                    && chars[i + 1].is_ascii_digit()
                    && (c == ',' || !digits.contains('.'))
                {
                    if c == '.' {
                        digits.push('.');
                    }
                    i += 1;
                } else {
                    break;
                }
            }
            if let Ok(value) = digits.parse::<f64>() {
                current.push(RawTok::Number(value));
            }
        } else if c == '-' || c == '\u{2013}' || c == '\u{2014}' {
            current.push(RawTok::Dash);
            i += 1;
        } else if c == '.' || c == '!' || c == '?' {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            i += 1;
        } else {
            i += 1;
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
        .into_iter()
        .map(|raw| resolve_ranges(resolve_number_words(raw)))
        .collect()
}

/// Replaces number-word sequences with numbers. "no one" stays words.
fn resolve_number_words(raw: Vec<RawTok>) -> Vec<RawTok> {
    let mut out: Vec<RawTok> = Vec::new();
    let mut i = 0;
    while i < raw.len() {
        let word = match &raw[i] {
            RawTok::Word(w) => w.clone(),
            other => {
                out.push(other.clone());
                i += 1;
                continue;
            }
        };
        let after_no = matches!(
            out.iter().rev().find(|t| !matches!(t, RawTok::Dash)),
            Some(RawTok::Word(prev)) if prev == "no"
        );
        if word == "one" && !after_no {
            // "one hundred" / "one-hundred" compose to 100.
            let mut j = i + 1;
            if matches!(raw.get(j), Some(RawTok::Dash)) {
                j += 1;
            }
            if matches!(raw.get(j), Some(RawTok::Word(w)) if w == "hundred") {
                out.push(RawTok::Number(100.0));
                i = j + 1;
                continue;
            }
            out.push(RawTok::Number(1.0));
            i += 1;
            continue;
        }
        if word == "hundred" {
            out.push(RawTok::Number(100.0));
            i += 1;
            continue;
        }
        if let Some(tens) = tens_value(&word) {
            let mut j = i + 1;
            if matches!(raw.get(j), Some(RawTok::Dash)) {
                j += 1;
            }
            if let Some(RawTok::Word(next)) = raw.get(j) {
                if let Some(unit) = unit_value(next) {
                    if unit > 0.0 {
                        out.push(RawTok::Number(tens + unit));
                        i = j + 1;
                        continue;
                    }
                }
            }
            out.push(RawTok::Number(tens));
            i += 1;
            continue;
        }
        if let Some(value) = teen_value(&word).or_else(|| unit_value(&word)) {
            if word == "one" && after_no {
                out.push(RawTok::Word(word));
            } else {
                out.push(RawTok::Number(value));
            }
            i += 1;
            continue;
        }
        out.push(RawTok::Word(word));
        i += 1;
    }
    out
}

/// Collapses ranges to midpoints, demotes date-like numbers to words, and
/// drops remaining dashes.
fn resolve_ranges(raw: Vec<RawTok>) -> Vec<Item> {
    let mut out: Vec<Item> = Vec::new();
    let mut i = 0;
    while i < raw.len() {
        match &raw[i] {
            RawTok::Dash => {
                i += 1;
            }
            RawTok::Word(w) => {
                out.push(Item::Word(w.clone()));
                i += 1;
            }
            RawTok::Number(a) => {
                // N - M  |  N to M  |  between N and M
                let (separator_len, pair) = match (raw.get(i + 1), raw.get(i + 2)) {
                    (Some(RawTok::Dash), Some(RawTok::Number(b))) => (2, Some(*b)),
                    (Some(RawTok::Word(sep)), Some(RawTok::Number(b))) if sep == "to" => {
                        (2, Some(*b))
                    }
                    (Some(RawTok::Word(sep)), Some(RawTok::Number(b)))
                        if sep == "and"
                            && matches!(out.last(), Some(Item::Word(prev)) if prev == "between") =>
                    {
                        (2, Some(*b))
                    }
                    _ => (0, None),
                };
                match pair {
                    Some(b) if b >= *a => {
                        out.push(demote_if_datelike(&raw, i, (*a + b) / 2.0, true));
                        i += separator_len + 1;
                    }
                    _ => {
                        out.push(demote_if_datelike(&raw, i, *a, false));
                        i += 1;
                    }
                }
            }
        }
    }
    out
}

fn demote_if_datelike(raw: &[RawTok], index: usize, value: f64, is_range: bool) -> Item {
    if !is_range && looks_like_date(raw, index, value) {
        return Item::Word(format_number_word(value));
    }
    Item::Number(value)
}

fn looks_like_date(raw: &[RawTok], index: usize, value: f64) -> bool {
    let is_month =
        |tok: Option<&RawTok>| matches!(tok, Some(RawTok::Word(w)) if MONTHS.contains(&w.as_str()));
    if is_month(index.checked_sub(1).and_then(|p| raw.get(p))) || is_month(raw.get(index + 1)) {
        return true;
    }
    if matches!(raw.get(index + 1), Some(RawTok::Word(w)) if ORDINAL_SUFFIXES.contains(&w.as_str()))
    {
        return true;
    }
    value.fract() == 0.0 && (1900.0..=2100.0).contains(&value)
}

fn format_number_word(value: f64) -> String {
    if value.fract() == 0.0 {
        format!("{}", value as i64)
    } else {
        format!("{value}")
    }
}
