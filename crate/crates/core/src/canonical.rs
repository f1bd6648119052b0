//! Scientific-notation rewriting of numerals in free text.
//!
//! Every numeric literal is replaced by `<significand>[EXP]<exponent>`, where
//! the significand is the digit string with the decimal point removed and the
//! exponent is the power of ten of its leading digit: `314.1` becomes
//! `3141[EXP]2`. Digits glued to letters (`3D`, `H768`) are left alone, as are
//! the digits on either side of an existing `[EXP]` marker, so the rewrite is
//! idempotent.

use std::io::{BufRead, Write};
use std::ops::AddAssign;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marker token separating significand and exponent.
pub const EXP_TOKEN: &str = "[EXP]";

/// Literals whose decimal exponent exceeds this magnitude are left verbatim.
pub const MAX_ABS_EXPONENT: i64 = 308;

/// One numeral found in text, in normalized scientific form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericLiteral {
    /// Byte offset of the first character of the match.
    pub start: usize,
    /// Byte offset one past the match.
    pub end: usize,
    pub raw: String,
    pub negative: bool,
    /// Digits without leading or trailing zeros; `"0"` for zero.
    pub significand: String,
    /// `floor(log10(|value|))`, or 0 for zero.
    pub exponent: i64,
}

impl NumericLiteral {
    pub fn is_zero(&self) -> bool {
        self.significand == "0"
    }

    /// Exact value of the literal.
    pub fn value(&self) -> BigRational {
        let digits: BigInt = self.significand.parse().expect("significand is all digits");
        let shift = self.exponent - (self.significand.len() as i64 - 1);
        let v = scale_pow10(digits, shift);
        if self.negative {
            -v
        } else {
            v
        }
    }
}

/// Running counters for a canonicalization job. Merging is associative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalizationStats {
    pub literals_rewritten: u64,
    pub literals_skipped: u64,
    pub bytes_in: u64,
    pub bytes_out: u64,
}

impl AddAssign for CanonicalizationStats {
    fn add_assign(&mut self, rhs: Self) {
        self.literals_rewritten += rhs.literals_rewritten;
        self.literals_skipped += rhs.literals_skipped;
        self.bytes_in += rhs.bytes_in;
        self.bytes_out += rhs.bytes_out;
    }
}

/// Result of scanning one piece of text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scan {
    pub literals: Vec<NumericLiteral>,
    /// Digit runs that looked numeric but could not be rewritten
    /// (dotted runs such as `1.2.3`, exponents out of range).
    pub skipped: u64,
}

/// Returns every rewritable literal in `text`, left to right.
pub fn scan_numbers(text: &str) -> Vec<NumericLiteral> {
    scan(text).literals
}

/// Like [`scan_numbers`] but also reports how many numeric-looking runs were skipped.
pub fn scan(text: &str) -> Scan {
    let bytes = text.as_bytes();
    let mut out = Scan::default();
    let mut i = 0;
    while i < bytes.len() {
        if !starts_literal(bytes, i) {
            i += 1;
            continue;
        }
        if blocked_left(text, i) {
            i = match bytes[i] {
                b'+' | b'-' => i + 1,
                _ => skip_run(text, i),
            };
            continue;
        }
        let lex = lex_literal(text, i);
        let j = lex.end;
        let rest = &text[j..];
        if rest.starts_with(EXP_TOKEN) {
            // Already canonical.
            i = j;
            continue;
        }
        match rest.chars().next() {
            Some(c) if is_word_char(c) => {
                i = skip_run(text, j);
                continue;
            }
            Some('.') if next_is_digit(bytes, j + 1) => {
                out.skipped += 1;
                i = skip_run(text, j);
                continue;
            }
            _ => {}
        }
        match lex.normalize(text, i) {
            Some(lit) => out.literals.push(lit),
            None => out.skipped += 1,
        }
        i = j;
    }
    out
}

/// Formats a literal as `<sign?><significand>[EXP]<exponent>`.
pub fn to_scientific(lit: &NumericLiteral) -> String {
    let sign = if lit.negative && !lit.is_zero() {
        "-"
    } else {
        ""
    };
    format!("{sign}{}{EXP_TOKEN}{}", lit.significand, lit.exponent)
}

/// Parses the emitted format back into an exact rational value.
pub fn from_scientific(s: &str) -> Result<BigRational> {
    let malformed = |reason| Error::Scientific {
        input: s.to_string(),
        reason,
    };
    let (mantissa, exponent) = s
        .split_once(EXP_TOKEN)
        .ok_or_else(|| malformed("missing [EXP] marker"))?;
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(d) => (true, d),
        None => (false, mantissa),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed("significand must be a non-empty digit string"));
    }
    let exp_digits = exponent.strip_prefix('-').unwrap_or(exponent);
    if exp_digits.is_empty() || !exp_digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed("exponent must be an integer"));
    }
    let exponent: i64 = exponent
        .parse()
        .map_err(|_| malformed("exponent out of range"))?;
    if exponent.abs() > 100_000 {
        return Err(malformed("exponent out of range"));
    }
    let significand: BigInt = digits.parse().expect("checked digits");
    let value = scale_pow10(significand, exponent - (digits.len() as i64 - 1));
    Ok(if negative { -value } else { value })
}

/// Rewrites every literal in `text`.
pub fn canonicalize_str(text: &str) -> (String, CanonicalizationStats) {
    let scan = scan(text);
    let mut out = String::with_capacity(text.len() + scan.literals.len() * 6);
    let mut cursor = 0;
    for lit in &scan.literals {
        out.push_str(&text[cursor..lit.start]);
        out.push_str(&to_scientific(lit));
        cursor = lit.end;
    }
    out.push_str(&text[cursor..]);
    let stats = CanonicalizationStats {
        literals_rewritten: scan.literals.len() as u64,
        literals_skipped: scan.skipped,
        bytes_in: text.len() as u64,
        bytes_out: out.len() as u64,
    };
    (out, stats)
}

/// Streams `input` to `output` line by line, rewriting numerals.
///
/// Literals never span a newline, so lines are independent units.
pub fn canonicalize_stream<R: BufRead, W: Write>(
    mut input: R,
    mut output: W,
) -> Result<CanonicalizationStats> {
    let mut stats = CanonicalizationStats::default();
    let mut line = Vec::new();
    let mut offset: u64 = 0;
    loop {
        line.clear();
        let n = input
            .read_until(b'\n', &mut line)
            .map_err(|source| Error::StreamIo { offset, source })?;
        if n == 0 {
            break;
        }
        let text = std::str::from_utf8(&line).map_err(|e| Error::InvalidUtf8 {
            offset: offset + e.valid_up_to() as u64,
        })?;
        let (rewritten, line_stats) = canonicalize_str(text);
        output
            .write_all(rewritten.as_bytes())
            .map_err(|source| Error::StreamIo { offset, source })?;
        stats += line_stats;
        offset += n as u64;
    }
    output
        .flush()
        .map_err(|source| Error::StreamIo { offset, source })?;
    Ok(stats)
}

fn scale_pow10(v: BigInt, shift: i64) -> BigRational {
    let ten = BigInt::from(10u32);
    let p = num_traits::pow(ten, shift.unsigned_abs() as usize);
    if shift >= 0 {
        BigRational::from_integer(v * p)
    } else {
        BigRational::new(v, p)
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn next_is_digit(bytes: &[u8], i: usize) -> bool {
    bytes.get(i).is_some_and(u8::is_ascii_digit)
}

fn starts_literal(bytes: &[u8], i: usize) -> bool {
    match bytes[i] {
        b'0'..=b'9' => true,
        b'.' => next_is_digit(bytes, i + 1),
        b'+' | b'-' => {
            next_is_digit(bytes, i + 1)
                || (bytes.get(i + 1) == Some(&b'.') && next_is_digit(bytes, i + 2))
        }
        _ => false,
    }
}

fn blocked_left(text: &str, i: usize) -> bool {
    let before = &text[..i];
    if before.ends_with(EXP_TOKEN) || before.ends_with("[EXP]-") || before.ends_with("[EXP]+") {
        return true;
    }
    match before.chars().next_back() {
        Some(c) => is_word_char(c) || c == '.',
        None => false,
    }
}

/// Advances past an identifier-like run: word characters plus `,`/`.`
/// directly followed by a digit.
fn skip_run(text: &str, mut i: usize) -> usize {
    let bytes = text.as_bytes();
    while let Some(c) = text[i..].chars().next() {
        let take = is_word_char(c) || ((c == ',' || c == '.') && next_is_digit(bytes, i + 1));
        if !take {
            break;
        }
        i += c.len_utf8();
    }
    i
}

struct Lexed<'a> {
    end: usize,
    negative: bool,
    int_digits: String,
    frac_digits: &'a str,
    exp_part: Option<&'a str>,
}

fn digit_run(bytes: &[u8], mut i: usize) -> usize {
    while next_is_digit(bytes, i) {
        i += 1;
    }
    i
}

fn lex_literal(text: &str, start: usize) -> Lexed<'_> {
    let bytes = text.as_bytes();
    let mut j = start;
    let mut negative = false;
    if bytes[j] == b'+' || bytes[j] == b'-' {
        negative = bytes[j] == b'-';
        j += 1;
    }

    let lead_end = digit_run(bytes, j);
    let mut int_digits = text[j..lead_end].to_string();
    j = lead_end;
    // Thousands groups are only recognized after a 1-3 digit leading group.
    if (1..=3).contains(&int_digits.len()) {
        while bytes.get(j) == Some(&b',') && digit_run(bytes, j + 1) == j + 4 {
            int_digits.push_str(&text[j + 1..j + 4]);
            j += 4;
        }
    }

    let mut frac_digits = "";
    if bytes.get(j) == Some(&b'.') && next_is_digit(bytes, j + 1) {
        let end = digit_run(bytes, j + 1);
        frac_digits = &text[j + 1..end];
        j = end;
    }

    let mut exp_part = None;
    if matches!(bytes.get(j), Some(b'e' | b'E')) {
        let mut k = j + 1;
        if matches!(bytes.get(k), Some(b'+' | b'-')) {
            k += 1;
        }
        if next_is_digit(bytes, k) {
            let end = digit_run(bytes, k);
            exp_part = Some(&text[j + 1..end]);
            j = end;
        }
    }

    Lexed {
        end: j,
        negative,
        int_digits,
        frac_digits,
        exp_part,
    }
}

impl Lexed<'_> {
    fn normalize(&self, text: &str, start: usize) -> Option<NumericLiteral> {
        let explicit_exp: i64 = match self.exp_part {
            None => 0,
            Some(e) => {
                let (neg, digits) = match e.as_bytes()[0] {
                    b'-' => (true, &e[1..]),
                    b'+' => (false, &e[1..]),
                    _ => (false, e),
                };
                let digits = digits.trim_start_matches('0');
                if digits.len() > 6 {
                    return None;
                }
                let v: i64 = if digits.is_empty() {
                    0
                } else {
                    digits.parse().ok()?
                };
                if neg {
                    -v
                } else {
                    v
                }
            }
        };

        let all: String = [self.int_digits.as_str(), self.frac_digits].concat();
        let raw = text[start..self.end].to_string();
        let Some(first_nonzero) = all.bytes().position(|b| b != b'0') else {
            return Some(NumericLiteral {
                start,
                end: self.end,
                raw,
                negative: false,
                significand: "0".to_string(),
                exponent: 0,
            });
        };
        let exponent = self.int_digits.len() as i64 - 1 - first_nonzero as i64 + explicit_exp;
        if exponent.abs() > MAX_ABS_EXPONENT {
            return None;
        }
        let significand = all[first_nonzero..].trim_end_matches('0').to_string();
        Some(NumericLiteral {
            start,
            end: self.end,
            raw,
            negative: self.negative,
            significand,
            exponent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    fn canon(s: &str) -> String {
        canonicalize_str(s).0
    }

    fn rational(num: i64, den: i64) -> BigRational {
        BigRational::new(num.into(), den.into())
    }

    #[test]
    fn paper_example() {
        let lits = scan_numbers("It weighs 314.1 grams");
        assert_eq!(lits.len(), 1);
        assert_eq!(lits[0].significand, "3141");
        assert_eq!(lits[0].exponent, 2);
        assert_eq!(to_scientific(&lits[0]), "3141[EXP]2");
        assert_eq!(canon("costs 314.1 now"), "costs 3141[EXP]2 now");
    }

    #[test]
    fn no_digits() {
        assert!(scan_numbers("no digits here").is_empty());
        assert_eq!(canon(""), "");
    }

    #[test]
    fn thousands_separator() {
        let lits = scan_numbers("1,234 items");
        assert_eq!(lits.len(), 1);
        assert_eq!(lits[0].significand, "1234");
        assert_eq!(lits[0].exponent, 3);
        assert_eq!(
            canon("1,234,567 and 12,34"),
            "1234567[EXP]6 and 12[EXP]1,34[EXP]1"
        );
    }

    #[test]
    fn to_scientific_examples() {
        let one = |s: &str| to_scientific(&scan_numbers(s)[0]);
        assert_eq!(one("7"), "7[EXP]0");
        assert_eq!(one("0.25"), "25[EXP]-1");
        assert_eq!(one("0"), "0[EXP]0");
        assert_eq!(one("-0.000"), "0[EXP]0");
        assert_eq!(one("1000"), "1[EXP]3");
        assert_eq!(one("-42.50"), "-425[EXP]1");
        assert_eq!(one(".5"), "5[EXP]-1");
        assert_eq!(one("6.02e23"), "602[EXP]23");
        assert_eq!(one("1E-3"), "1[EXP]-3");
        assert_eq!(one("007"), "7[EXP]0");
    }

    #[test]
    fn stream_example() {
        assert_eq!(canon("a 2 b 30 c"), "a 2[EXP]0 b 3[EXP]1 c");
    }

    #[test]
    fn from_scientific_examples() {
        assert_eq!(from_scientific("3141[EXP]2").unwrap(), rational(3141, 10));
        assert_eq!(from_scientific("0[EXP]0").unwrap(), BigRational::zero());
        assert_eq!(from_scientific("25[EXP]-1").unwrap(), rational(1, 4));
        assert_eq!(from_scientific("-1[EXP]3").unwrap(), rational(-1000, 1));
        assert_eq!(from_scientific("1[EXP]0").unwrap(), BigRational::one());
    }

    #[test]
    fn from_scientific_rejects_garbage() {
        for bad in [
            "",
            "3141",
            "[EXP]2",
            "31a[EXP]2",
            "3[EXP]",
            "3[EXP]x",
            "3[EXP]--1",
            "--3[EXP]1",
        ] {
            assert!(from_scientific(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn identifiers_left_alone() {
        assert_eq!(canon("BERT-Base 3D H768 x2"), "BERT-Base 3D H768 x2");
        assert_eq!(canon("H=768"), "H=768[EXP]2");
        assert_eq!(canon("5kg"), "5kg");
        assert_eq!(canon("GPT-2"), "GPT-2[EXP]0");
    }

    #[test]
    fn sentence_punctuation() {
        assert_eq!(canon("it was 7."), "it was 7[EXP]0.");
        assert_eq!(canon("(3), [4]"), "(3[EXP]0), [4[EXP]0]");
        assert_eq!(canon("5-3"), "5[EXP]0-3[EXP]0");
    }

    #[test]
    fn dotted_runs_are_skipped() {
        let (out, stats) = canonicalize_str("ip 192.168.0.1 v 1.2.3");
        assert_eq!(out, "ip 192.168.0.1 v 1.2.3");
        assert_eq!(stats.literals_skipped, 2);
        assert_eq!(stats.literals_rewritten, 0);
    }

    #[test]
    fn huge_exponents_are_skipped() {
        let (out, stats) = canonicalize_str("x 1e400 y 1e308 z 1e-309");
        assert_eq!(out, "x 1e400 y 1[EXP]308 z 1e-309");
        assert_eq!(stats.literals_skipped, 2);
        assert_eq!(stats.literals_rewritten, 1);
        let (_, stats) = canonicalize_str("1e99999999999999999999999");
        assert_eq!(stats.literals_skipped, 1);
    }

    #[test]
    fn dates_are_rewritten() {
        assert_eq!(canon("on 2020-01-05"), "on 202[EXP]3-1[EXP]0-5[EXP]0");
    }

    #[test]
    fn idempotent_on_examples() {
        for s in [
            "costs 314.1 now",
            "-0.25 and 1,000",
            "x -.5e-2, y",
            "12,34 1,2,3",
        ] {
            let once = canon(s);
            assert_eq!(canon(&once), once);
        }
    }

    #[test]
    fn stats_track_bytes() {
        let (out, stats) = canonicalize_str("a 10 b");
        assert_eq!(stats.bytes_in, 6);
        assert_eq!(stats.bytes_out, out.len() as u64);
        assert_eq!(stats.literals_rewritten, 1);
    }

    #[test]
    fn stream_reports_utf8_offset() {
        let input: &[u8] = b"ok 1\nbad \xff here\n";
        let err = canonicalize_stream(input, Vec::new()).unwrap_err();
        match err {
            Error::InvalidUtf8 { offset } => assert_eq!(offset, 9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stream_preserves_lines() {
        let input = "first 1.5\n\nno newline at end 20";
        let mut out = Vec::new();
        let stats = canonicalize_stream(input.as_bytes(), &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "first 15[EXP]0\n\nno newline at end 2[EXP]1"
        );
        assert_eq!(stats.literals_rewritten, 2);
        assert_eq!(stats.bytes_in, input.len() as u64);
    }

    #[test]
    fn literal_value_matches_raw() {
        let lit = &scan_numbers("-1,250.50")[0];
        assert_eq!(lit.raw, "-1,250.50");
        assert_eq!(lit.value(), rational(-12505, 10));
    }
}
