//! Population thresholds in statute tests ("not less than 335,000 nor more
//! than 336,000", "above 10,000", "5,000 or more").

use serde::{Deserialize, Serialize};

use crate::corpus::tokenize;

/// A population range. Both bounds are inclusive as written in the statute;
/// `None` means unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationInterval {
    pub lower: Option<u64>,
    pub upper: Option<u64>,
    /// Char offsets of the matched phrase within the source text.
    pub start: usize,
    pub end: usize,
}

impl PopulationInterval {
    /// `upper - lower` when both bounds are present.
    pub fn width(&self) -> Option<u64> {
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => Some(u - l),
            _ => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_some() && self.upper.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Word(String),
    Num(u64),
}

/// Word or number with the char range it came from.
#[derive(Debug, Clone)]
struct Located {
    item: Item,
    start: usize,
    end: usize,
}

fn unit_value(w: &str) -> Option<u64> {
    const UNITS: [&str; 20] = [
        "zero",
        "one",
        "two",
        "three",
        "four",
        "five",
        "six",
        "seven",
        "eight",
        "nine",
        "ten",
        "eleven",
        "twelve",
        "thirteen",
        "fourteen",
        "fifteen",
        "sixteen",
        "seventeen",
        "eighteen",
        "nineteen",
    ];
    const TENS: [&str; 8] = ["twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"];
    if let Some(i) = UNITS.iter().position(|u| *u == w) {
        return Some(i as u64);
    }
    TENS.iter().position(|t| *t == w).map(|i| 20 + 10 * i as u64)
}

fn scale_value(w: &str) -> Option<u64> {
    match w {
        "thousand" => Some(1_000),
        "million" => Some(1_000_000),
        _ => None,
    }
}

fn is_number_word(w: &str) -> bool {
    unit_value(w).is_some() || w == "hundred" || scale_value(w).is_some()
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

/// `335`, `,`, `000` ... at `i`; returns the value and the index after it.
fn digit_run(toks: &[(String, usize, usize)], i: usize) -> Option<(u64, usize)> {
    let first = &toks.get(i)?.0;
    if !is_digits(first) {
        return None;
    }
    let mut digits = first.clone();
    let mut j = i + 1;
    while j + 1 < toks.len()
        && toks[j].0 == ","
        && toks[j + 1].0.len() == 3
        && is_digits(&toks[j + 1].0)
        && toks[j].1 == toks[j - 1].2
        && toks[j + 1].1 == toks[j].2
    {
        digits.push_str(&toks[j + 1].0);
        j += 2;
    }
    let mut value: u64 = digits.parse().ok()?;
    if let Some(scale) = toks.get(j).and_then(|t| scale_value(&t.0)) {
        value = value.checked_mul(scale)?;
        j += 1;
    }
    Some((value, j))
}

/// "thirty-five", "hundred and six": joiners only inside a numeral.
fn joins(prev: Option<&str>, w: &str) -> bool {
    match (prev, w) {
        (Some(p), "-") => unit_value(p).is_some_and(|v| v >= 20),
        (Some(p), "and") => p == "hundred" || scale_value(p).is_some(),
        _ => false,
    }
}

/// Compositional English numeral at `i` ("three hundred thirty-five thousand").
fn word_run(toks: &[(String, usize, usize)], i: usize) -> Option<(u64, usize)> {
    let mut total = 0u64;
    let mut current = 0u64;
    let mut j = i;
    let mut last_word = None;
    while j < toks.len() {
        let w = toks[j].0.as_str();
        if let Some(v) = unit_value(w) {
            current += v;
        } else if w == "hundred" {
            current = current.max(1) * 100;
        } else if let Some(s) = scale_value(w) {
            total += current.max(1) * s;
            current = 0;
        } else if joins(last_word.map(|k: usize| toks[k].0.as_str()), w) && toks.get(j + 1).is_some_and(|t| is_number_word(&t.0)) {
            j += 1;
            continue;
        } else {
            break;
        }
        last_word = Some(j);
        j += 1;
    }
    last_word.map(|k| (total + current, k + 1))
}

/// Lowercased tokens collapsed into words and numbers. A parenthesized
/// numeral right after a spelled-out one replaces it.
fn items(text: &str) -> Vec<Located> {
    let toks: Vec<(String, usize, usize)> = tokenize(text)
        .into_iter()
        .map(|t| (t.surface.to_lowercase(), t.start, t.end))
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let start = toks[i].1;
        let parsed = digit_run(&toks, i).or_else(|| word_run(&toks, i));
        if let Some((mut value, mut next)) = parsed {
            if toks.get(next).is_some_and(|t| t.0 == "(") {
                if let Some((v, after)) = digit_run(&toks, next + 1) {
                    if toks.get(after).is_some_and(|t| t.0 == ")") {
                        value = v;
                        next = after + 1;
                    }
                }
            }
            out.push(Located {
                item: Item::Num(value),
                start,
                end: toks[next - 1].2,
            });
            i = next;
        } else if toks[i].0.chars().any(char::is_alphanumeric) {
            out.push(Located {
                item: Item::Word(toks[i].0.clone()),
                start,
                end: toks[i].2,
            });
            i += 1;
        } else {
            // bare "(335,000)" with no spelled-out numeral before it
            if toks[i].0 == "(" {
                if let Some((v, after)) = digit_run(&toks, i + 1) {
                    if toks.get(after).is_some_and(|t| t.0 == ")") {
                        out.push(Located {
                            item: Item::Num(v),
                            start,
                            end: toks[after].2,
                        });
                        i = after + 1;
                        continue;
                    }
                }
            }
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bound {
    Lower,
    Upper,
}

// longest phrases first so "not less than" wins over "less than"
const PREFIX_PHRASES: &[(&str, Bound)] = &[
    ("not less than", Bound::Lower),
    ("not fewer than", Bound::Lower),
    ("not below", Bound::Lower),
    ("not under", Bound::Lower),
    ("in excess of", Bound::Lower),
    ("greater than", Bound::Lower),
    ("more than", Bound::Lower),
    ("at least", Bound::Lower),
    ("exceeding", Bound::Lower),
    ("exceeds", Bound::Lower),
    ("above", Bound::Lower),
    ("over", Bound::Lower),
    ("not more than", Bound::Upper),
    ("not greater than", Bound::Upper),
    ("not in excess of", Bound::Upper),
    ("not exceeding", Bound::Upper),
    ("not to exceed", Bound::Upper),
    ("not over", Bound::Upper),
    ("not above", Bound::Upper),
    ("fewer than", Bound::Upper),
    ("less than", Bound::Upper),
    ("at most", Bound::Upper),
    ("below", Bound::Upper),
    ("under", Bound::Upper),
];

const SUFFIX_PHRASES: &[(&str, Bound)] = &[
    ("or more", Bound::Lower),
    ("or over", Bound::Lower),
    ("or greater", Bound::Lower),
    ("or above", Bound::Lower),
    ("and over", Bound::Lower),
    ("and above", Bound::Lower),
    ("or less", Bound::Upper),
    ("or fewer", Bound::Upper),
    ("or under", Bound::Upper),
    ("or below", Bound::Upper),
    ("and under", Bound::Upper),
    ("and below", Bound::Upper),
];

/// Connectors and whether they negate the phrase after them ("nor more
/// than" reads as "not more than").
const CONNECTORS: &[(&str, bool)] = &[
    ("and not", true),
    ("but not", true),
    ("nor", true),
    ("and", false),
    ("but", false),
    ("or", false),
];

fn words_at(items: &[Located], i: usize, phrase: &str) -> Option<usize> {
    let mut j = i;
    for w in phrase.split(' ') {
        match items.get(j).map(|l| &l.item) {
            Some(Item::Word(x)) if x == w => j += 1,
            _ => return None,
        }
    }
    Some(j)
}

fn num_at(items: &[Located], i: usize) -> Option<u64> {
    match items.get(i).map(|l| &l.item) {
        Some(Item::Num(n)) => Some(*n),
        _ => None,
    }
}

/// Comparator phrase followed by a number at `i`: (bound, value, index after).
fn prefixed(items: &[Located], i: usize) -> Option<(Bound, u64, usize)> {
    PREFIX_PHRASES.iter().find_map(|(p, b)| {
        let j = words_at(items, i, p)?;
        num_at(items, j).map(|n| (*b, n, j + 1))
    })
}

fn connector(items: &[Located], i: usize) -> Option<(usize, bool)> {
    CONNECTORS
        .iter()
        .find_map(|(c, negates)| words_at(items, i, c).map(|j| (j, *negates)))
}

fn flip(b: Bound) -> Bound {
    match b {
        Bound::Lower => Bound::Upper,
        Bound::Upper => Bound::Lower,
    }
}

fn interval(items: &[Located], from: usize, to: usize, a: Option<u64>, b: Option<u64>) -> PopulationInterval {
    let (lower, upper) = match (a, b) {
        (Some(x), Some(y)) if x > y => (Some(y), Some(x)),
        other => other,
    };
    PopulationInterval {
        lower,
        upper,
        start: items[from].start,
        end: items[to - 1].end,
    }
}

/// Every population interval stated in `text`, in order of appearance.
///
/// Two-sided forms ("not less than X nor more than Y", "between X and Y")
/// produce one bounded interval; one-sided forms ("above X", "fewer than X",
/// "X or more") leave the other side open. Numerals may be digits with
/// thousands separators or spelled out; a parenthesized numeral following
/// spelled-out words takes precedence.
pub fn extract_population_threshold(text: &str) -> Vec<PopulationInterval> {
    let items = items(text);
    let mut out = Vec::new();
    let mut i = 0;
    while i < items.len() {
        if let Some(j) = words_at(&items, i, "between") {
            if let (Some(x), Some(k)) = (num_at(&items, j), words_at(&items, j + 1, "and")) {
                if let Some(y) = num_at(&items, k) {
                    out.push(interval(&items, i, k + 1, Some(x), Some(y)));
                    i = k + 1;
                    continue;
                }
            }
        }
        if let Some((bound, x, j)) = prefixed(&items, i) {
            let second = connector(&items, j)
                .and_then(|(k, negates)| {
                    let already_negated = words_at(&items, k, "not").is_some();
                    prefixed(&items, k).map(|(b, y, after)| (if negates && !already_negated { flip(b) } else { b }, y, after))
                })
                .filter(|(b, _, _)| *b != bound);
            if let Some((_, y, k)) = second {
                let (lo, hi) = if bound == Bound::Lower { (x, y) } else { (y, x) };
                out.push(interval(&items, i, k, Some(lo), Some(hi)));
                i = k;
            } else {
                let (lo, hi) = if bound == Bound::Lower { (Some(x), None) } else { (None, Some(x)) };
                out.push(interval(&items, i, j, lo, hi));
                i = j;
            }
            continue;
        }
        if let Some(x) = num_at(&items, i) {
            let suffix = SUFFIX_PHRASES.iter().find_map(|(p, b)| words_at(&items, i + 1, p).map(|j| (*b, j)));
            if let Some((bound, j)) = suffix {
                let (lo, hi) = if bound == Bound::Lower { (Some(x), None) } else { (None, Some(x)) };
                out.push(interval(&items, i, j, lo, hi));
                i = j;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Value of a numeral phrase on its own, e.g. "three hundred (400)".
pub fn parse_numeral(text: &str) -> Option<u64> {
    match items(text).as_slice() {
        [Located { item: Item::Num(n), .. }] => Some(*n),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds(text: &str) -> Vec<(Option<u64>, Option<u64>)> {
        extract_population_threshold(text).iter().map(|i| (i.lower, i.upper)).collect()
    }

    #[test]
    fn two_sided_spelled_out_range() {
        let t = "in counties having a population of not less than three hundred thirty-five thousand (335,000) \
                 nor more than three hundred thirty-six thousand (336,000), according to the 1990 federal census \
                 or any subsequent federal census";
        let found = extract_population_threshold(t);
        assert_eq!(found.len(), 1);
        assert_eq!((found[0].lower, found[0].upper), (Some(335_000), Some(336_000)));
        assert_eq!(found[0].width(), Some(1_000));
        let chars: Vec<char> = t.chars().collect();
        let matched: String = chars[found[0].start..found[0].end].iter().collect();
        assert!(matched.starts_with("not less than"));
        assert!(matched.ends_with("(336,000)"));
    }

    #[test]
    fn one_sided_forms() {
        assert_eq!(bounds("with a population above 10,000"), vec![(Some(10_000), None)]);
        assert_eq!(bounds("more than 2,500 inhabitants"), vec![(Some(2_500), None)]);
        assert_eq!(bounds("counties of 50,000 or more"), vec![(Some(50_000), None)]);
        assert_eq!(bounds("fewer than five thousand people"), vec![(None, Some(5_000))]);
        assert_eq!(bounds("below 700"), vec![(None, Some(700))]);
        assert_eq!(bounds("less than 1 million"), vec![(None, Some(1_000_000))]);
        assert_eq!(bounds("not more than 9,999"), vec![(None, Some(9_999))]);
    }

    #[test]
    fn no_numbers_no_intervals() {
        assert!(bounds("having a metropolitan form of government").is_empty());
        assert!(bounds("according to the 1990 federal census").is_empty());
        assert!(bounds("").is_empty());
    }

    #[test]
    fn parenthesized_numeral_wins() {
        assert_eq!(parse_numeral("three hundred (400)"), Some(400));
        assert_eq!(bounds("more than three hundred (400)"), vec![(Some(400), None)]);
    }

    #[test]
    fn numerals() {
        assert_eq!(parse_numeral("three hundred thirty-five thousand"), Some(335_000));
        assert_eq!(parse_numeral("one million two hundred fifty thousand and six"), Some(1_250_006));
        assert_eq!(parse_numeral("ninety-nine"), Some(99));
        assert_eq!(parse_numeral("10,000"), Some(10_000));
        assert_eq!(parse_numeral("1,234,567"), Some(1_234_567));
        assert_eq!(parse_numeral("(335,000)"), Some(335_000));
        assert_eq!(parse_numeral("ten"), Some(10));
        // a space breaks the thousands group
        assert_eq!(parse_numeral("10, 000"), None);
    }

    #[test]
    fn two_sided_variants() {
        assert_eq!(bounds("between 8,000 and 8,400"), vec![(Some(8_000), Some(8_400))]);
        assert_eq!(
            bounds("not more than 20,000 nor less than 19,500"),
            vec![(Some(19_500), Some(20_000))]
        );
        assert_eq!(bounds("more than 1,000 but less than 1,050"), vec![(Some(1_000), Some(1_050))]);
        assert_eq!(bounds("between five and ten"), vec![(Some(5), Some(10))]);
        // two lower bounds stay separate
        assert_eq!(bounds("over 10 and over 20"), vec![(Some(10), None), (Some(20), None)]);
    }
}
