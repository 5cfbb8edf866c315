//! The digit grid: normalization, half-up quantization and the textual form
//! of scores as digit-token strings.
//!
//! A score with `m` digits lives on the grid `{k / 10^(m-1) : 0 <= k < 10^m}`.
//! Values are stored as their exact digit sequence; the `f64` view is derived.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported digit count. `10^15` grid indices still convert to
/// `f64` without loss.
pub const MAX_DIGITS: usize = 15;

fn check_digit_count(m: usize) -> Result<()> {
    if m == 0 || m > MAX_DIGITS {
        return Err(Error::Config(format!(
            "digit count must be in 1..={MAX_DIGITS}, got {m}"
        )));
    }
    Ok(())
}

/// Largest grid value for `m` digits, `10 - 10^(1-m)` (9.99 for `m = 3`).
pub fn grid_max(m: usize) -> f64 {
    let scale = 10f64.powi(m as i32 - 1);
    (10f64.powi(m as i32) - 1.0) / scale
}

/// A score on the `m`-digit grid. `digits[0]` is the integer part, the rest
/// are successive decimals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScoreValue {
    digits: Vec<u8>,
}

impl ScoreValue {
    pub fn from_digits(digits: Vec<u8>) -> Result<Self> {
        check_digit_count(digits.len())?;
        if let Some(&d) = digits.iter().find(|&&d| d > 9) {
            return Err(Error::Config(format!("digit {d} is not in 0..=9")));
        }
        Ok(Self { digits })
    }

    /// Builds the grid point `k / 10^(m-1)`.
    pub fn from_grid_index(k: u64, m: usize) -> Result<Self> {
        check_digit_count(m)?;
        let limit = 10u64.pow(m as u32);
        if k >= limit {
            return Err(Error::ScoreDomain {
                value: k as f64 / 10f64.powi(m as i32 - 1),
            });
        }
        let mut digits = vec![0u8; m];
        let mut rest = k;
        for slot in digits.iter_mut().rev() {
            *slot = (rest % 10) as u8;
            rest /= 10;
        }
        Ok(Self { digits })
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn m(&self) -> usize {
        self.digits.len()
    }

    pub fn grid_index(&self) -> u64 {
        self.digits.iter().fold(0u64, |acc, &d| acc * 10 + d as u64)
    }

    pub fn value(&self) -> f64 {
        self.grid_index() as f64 / 10f64.powi(self.m() as i32 - 1)
    }

    /// Re-expresses the score with `m` digits (exact padding or half-up rounding).
    pub fn with_digits(&self, m: usize) -> Result<Self> {
        check_digit_count(m)?;
        Ok(round_decimal(self.digits[0], &self.digits[1..], m))
    }
}

impl fmt::Display for ScoreValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.digits[0])?;
        if self.digits.len() > 1 {
            f.write_str(".")?;
            for d in &self.digits[1..] {
                write!(f, "{d}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for ScoreValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_score_native(s)
    }
}

impl Serialize for ScoreValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScoreValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_score_native(&text).map_err(serde::de::Error::custom)
    }
}

/// Dataset range mapping onto the digit grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerConfig {
    pub m: usize,
    pub source_lo: f64,
    pub source_hi: f64,
}

impl QuantizerConfig {
    pub fn new(m: usize, source_lo: f64, source_hi: f64) -> Result<Self> {
        check_digit_count(m)?;
        if !source_lo.is_finite() || !source_hi.is_finite() {
            return Err(Error::NonFinite("source range"));
        }
        if source_hi <= source_lo {
            return Err(Error::Config(format!(
                "source range [{source_lo}, {source_hi}] is empty"
            )));
        }
        Ok(Self {
            m,
            source_lo,
            source_hi,
        })
    }

    /// Normalizes then quantizes a raw dataset score.
    pub fn to_grid(&self, raw: f64) -> Result<ScoreValue> {
        quantize(normalize(raw, self)?, self.m)
    }
}

/// Affine map of `[source_lo, source_hi]` onto `[0, grid_max(m)]`.
pub fn normalize(raw: f64, cfg: &QuantizerConfig) -> Result<f64> {
    if !raw.is_finite() || raw < cfg.source_lo || raw > cfg.source_hi {
        return Err(Error::OutOfRange {
            value: raw,
            lo: cfg.source_lo,
            hi: cfg.source_hi,
        });
    }
    let unit = (raw - cfg.source_lo) / (cfg.source_hi - cfg.source_lo);
    Ok(unit * grid_max(cfg.m))
}

/// Nearest `m`-digit grid point, ties rounded up.
///
/// Rounding is carried out on the shortest decimal representation of `s`,
/// so `2.675` rounds to `2.68` even though its binary value is slightly
/// below the tie. Inputs in `(grid_max, 10)` saturate at the grid maximum.
pub fn quantize(s: f64, m: usize) -> Result<ScoreValue> {
    check_digit_count(m)?;
    if !s.is_finite() {
        return Err(Error::NonFinite("score"));
    }
    if !(0.0..10.0).contains(&s) {
        return Err(Error::ScoreDomain { value: s });
    }
    // f64 Display never uses exponent notation and yields the shortest
    // round-trip digits.
    let text = s.to_string();
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    debug_assert_eq!(int_part.len(), 1);
    let int_digit = int_part.as_bytes()[0] - b'0';
    let frac: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
    Ok(round_decimal(int_digit, &frac, m))
}

fn round_decimal(int_digit: u8, frac: &[u8], m: usize) -> ScoreValue {
    let keep = m - 1;
    let mut k = int_digit as u64;
    for i in 0..keep {
        k = k * 10 + frac.get(i).copied().unwrap_or(0) as u64;
    }
    if frac.get(keep).is_some_and(|&d| d >= 5) {
        k += 1;
    }
    let limit = 10u64.pow(m as u32);
    ScoreValue::from_grid_index(k.min(limit - 1), m).expect("index clamped to grid")
}

/// Text form of a score: `"4"` for one digit, otherwise `"3.98"`.
pub fn render(v: &ScoreValue) -> String {
    v.to_string()
}

/// Parses the render grammar and returns the score at `m` digits.
pub fn parse_score(text: &str, m: usize) -> Result<ScoreValue> {
    check_digit_count(m)?;
    let (int_digit, frac) = scan(text)?;
    Ok(round_decimal(int_digit, &frac, m))
}

/// Parses the render grammar at the precision written in the text.
pub fn parse_score_native(text: &str) -> Result<ScoreValue> {
    let (int_digit, frac) = scan(text)?;
    let m = (frac.len() + 1).min(MAX_DIGITS);
    Ok(round_decimal(int_digit, &frac, m))
}

fn scan(text: &str) -> Result<(u8, Vec<u8>)> {
    let bad = |offset: usize, reason: &'static str| Error::Parse {
        input: text.to_string(),
        offset,
        reason,
    };
    let bytes = text.as_bytes();
    let int_len = bytes.iter().take_while(|b| b.is_ascii_digit()).count();
    if int_len == 0 {
        return Err(bad(0, "expected a digit"));
    }
    let mut pos = int_len;
    let mut frac = Vec::new();
    if pos < bytes.len() {
        if bytes[pos] != b'.' {
            return Err(bad(pos, "expected '.' or end of input"));
        }
        pos += 1;
        let frac_len = bytes[pos..]
            .iter()
            .take_while(|b| b.is_ascii_digit())
            .count();
        if frac_len == 0 {
            return Err(bad(pos, "expected a digit after '.'"));
        }
        frac.extend(bytes[pos..pos + frac_len].iter().map(|b| b - b'0'));
        pos += frac_len;
        if pos < bytes.len() {
            return Err(bad(pos, "unexpected trailing character"));
        }
    }
    if int_len > 1 {
        if bytes[0] == b'0' {
            return Err(bad(1, "leading zero in integer part"));
        }
        let value: f64 = text.parse().unwrap_or(f64::INFINITY);
        return Err(Error::ScoreDomain { value });
    }
    Ok((bytes[0] - b'0', frac))
}
