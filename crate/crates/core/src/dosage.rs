//! Dosage-string parsing: strength (value + unit) and package quantity.
//!
//! A raw dosage like `0.3g*12粒*2板` is split on `*`/`×` after dropping
//! bracketed fragments. The first `<number><unit>` token becomes the
//! strength, `<integer><count word>` tokens become package factors, and
//! everything else lands in the residue. Values are exact decimals.

use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::textnorm::BRACKET_PAIRS;

pub const SEPARATORS: [char; 2] = ['*', '×'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Mass,
    Volume,
    Activity,
    Fraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "mg")]
    Mg,
    #[serde(rename = "g")]
    G,
    #[serde(rename = "ug")]
    Ug,
    #[serde(rename = "kg")]
    Kg,
    #[serde(rename = "ml")]
    Ml,
    #[serde(rename = "l")]
    L,
    #[serde(rename = "IU")]
    Iu,
    #[serde(rename = "percent")]
    Percent,
}

impl Unit {
    pub fn dimension(self) -> Dimension {
        match self {
            Unit::Mg | Unit::G | Unit::Ug | Unit::Kg => Dimension::Mass,
            Unit::Ml | Unit::L => Dimension::Volume,
            Unit::Iu => Dimension::Activity,
            Unit::Percent => Dimension::Fraction,
        }
    }

    pub fn canonical(self) -> Unit {
        match self.dimension() {
            Dimension::Mass => Unit::Mg,
            Dimension::Volume => Unit::Ml,
            Dimension::Activity => Unit::Iu,
            Dimension::Fraction => Unit::Percent,
        }
    }

    /// Multiplier into the canonical unit of the dimension.
    fn to_canonical(self) -> Decimal {
        match self {
            Unit::G | Unit::L => Decimal::ONE_THOUSAND,
            Unit::Kg => Decimal::from(1_000_000),
            Unit::Ug => Decimal::new(1, 3),
            Unit::Mg | Unit::Ml | Unit::Iu | Unit::Percent => Decimal::ONE,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Mg => "mg",
            Unit::G => "g",
            Unit::Ug => "ug",
            Unit::Kg => "kg",
            Unit::Ml => "ml",
            Unit::L => "l",
            Unit::Iu => "IU",
            Unit::Percent => "%",
        }
    }

    /// Case-insensitive unit lookup, including micro-sign and Chinese
    /// spellings.
    pub fn lookup(suffix: &str) -> Option<Unit> {
        let unit = match suffix.to_lowercase().as_str() {
            "mg" | "毫克" => Unit::Mg,
            "g" | "克" => Unit::G,
            "ug" | "μg" | "µg" | "mcg" | "微克" => Unit::Ug,
            "kg" | "千克" => Unit::Kg,
            "ml" | "毫升" => Unit::Ml,
            "l" | "升" => Unit::L,
            "iu" => Unit::Iu,
            "%" | "percent" => Unit::Percent,
            _ => return None,
        };
        Some(unit)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strength {
    value: Decimal,
    unit: Unit,
}

impl Strength {
    /// `None` unless `value > 0` and the value survives rescaling to the
    /// canonical unit without overflow.
    pub fn new(value: Decimal, unit: Unit) -> Option<Self> {
        if value <= Decimal::ZERO {
            return None;
        }
        value.checked_mul(unit.to_canonical())?;
        Some(Self { value, unit })
    }

    pub fn value(&self) -> Decimal {
        self.value
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn dimension(&self) -> Dimension {
        self.unit.dimension()
    }
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.value.normalize(), self.unit)
    }
}

impl FromStr for Strength {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (number, suffix) = split_number(s).ok_or_else(|| format!("no number in {s:?}"))?;
        let unit = Unit::lookup(suffix).ok_or_else(|| format!("unknown unit in {s:?}"))?;
        let value = parse_decimal(number).ok_or_else(|| format!("bad number in {s:?}"))?;
        Strength::new(value, unit).ok_or_else(|| format!("strength out of range: {s:?}"))
    }
}

/// Rescales to mg, ml, IU or percent. Exact.
pub fn normalize_strength(s: Strength) -> Strength {
    Strength {
        value: (s.value * s.unit.to_canonical()).normalize(),
        unit: s.unit.canonical(),
    }
}

pub fn default_rel_tol() -> Decimal {
    Decimal::new(1, 9)
}

pub fn strength_equal(a: Strength, b: Strength, rel_tol: Decimal) -> bool {
    if a.dimension() != b.dimension() {
        return false;
    }
    let (x, y) = (normalize_strength(a).value, normalize_strength(b).value);
    (x - y).abs() <= rel_tol * x.max(y)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PackageFactor {
    pub count: u64,
    pub count_word: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PackageQuantity {
    factors: Vec<PackageFactor>,
    total: u64,
}

impl PackageQuantity {
    /// `None` for an empty factor list, a zero count, or an overflowing
    /// product.
    pub fn new(factors: Vec<PackageFactor>) -> Option<Self> {
        if factors.is_empty() {
            return None;
        }
        let total = factors.iter().try_fold(1u64, |acc, f| {
            (f.count > 0).then_some(())?;
            acc.checked_mul(f.count)
        })?;
        Some(Self { factors, total })
    }

    pub fn factors(&self) -> &[PackageFactor] {
        &self.factors
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Count words are ignored; only the unit totals are compared.
pub fn package_equal(a: &PackageQuantity, b: &PackageQuantity) -> bool {
    a.total == b.total
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedDosage {
    pub strength: Option<Strength>,
    pub package: Option<PackageQuantity>,
    pub residue: Vec<String>,
}

impl ParsedDosage {
    /// Number of split tokens this parse accounts for.
    pub fn token_count(&self) -> usize {
        usize::from(self.strength.is_some()) + self.package.as_ref().map_or(0, |p| p.factors.len()) + self.residue.len()
    }
}

/// Splits a leading `digits[.digits]` off `token`.
fn split_number(token: &str) -> Option<(&str, &str)> {
    let int_end = token.find(|c: char| !c.is_ascii_digit()).unwrap_or(token.len());
    if int_end == 0 {
        return None;
    }
    let rest = &token[int_end..];
    if let Some(frac) = rest.strip_prefix('.') {
        let frac_len = frac.find(|c: char| !c.is_ascii_digit()).unwrap_or(frac.len());
        if frac_len > 0 {
            let end = int_end + 1 + frac_len;
            return Some((&token[..end], &token[end..]));
        }
    }
    Some((&token[..int_end], rest))
}

fn parse_decimal(number: &str) -> Option<Decimal> {
    Decimal::from_str_exact(number).ok()
}

enum Token {
    Strength(Strength),
    Factor(PackageFactor),
    Residue,
}

fn classify(token: &str) -> Token {
    let Some((number, suffix)) = split_number(token) else {
        return Token::Residue;
    };
    let Some(value) = parse_decimal(number) else {
        return Token::Residue;
    };

    if let Some(unit) = Unit::lookup(suffix) {
        return Strength::new(value, unit).map_or(Token::Residue, Token::Strength);
    }
    // "0.25g/片" is a per-unit strength; "5mg/ml" is a concentration.
    if let Some((unit, per)) = suffix.split_once('/') {
        if let Some(unit) = Unit::lookup(unit) {
            let per_unit = split_number(per).map_or(per, |(_, s)| s);
            if per.is_empty() || Unit::lookup(per_unit).is_some() || has_digit(per) {
                return Token::Residue;
            }
            return Strength::new(value, unit).map_or(Token::Residue, Token::Strength);
        }
    }

    let looks_numeric = suffix.starts_with(['.', ',', '，', '+']) || suffix.contains('+') || has_digit(suffix);
    if looks_numeric || number.contains('.') {
        return Token::Residue;
    }
    match number.parse::<u64>() {
        Ok(count) if count > 0 => Token::Factor(PackageFactor {
            count,
            count_word: suffix.to_string(),
        }),
        _ => Token::Residue,
    }
}

fn has_digit(s: &str) -> bool {
    s.chars().any(|c| c.is_ascii_digit())
}

/// Drops bracketed fragments (brackets included, unmatched brackets alone).
pub fn strip_brackets(raw: &str) -> String {
    let chars: Vec<char> = raw.chars().collect();
    let mut out = String::with_capacity(raw.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if let Some(&(open, close)) = BRACKET_PAIRS.iter().find(|(o, _)| *o == c) {
            let mut depth = 0usize;
            let mut end = i;
            for (k, &d) in chars.iter().enumerate().skip(i) {
                if d == open {
                    depth += 1;
                } else if d == close {
                    depth -= 1;
                    if depth == 0 {
                        end = k;
                        break;
                    }
                }
            }
            i = end + 1;
        } else {
            if !BRACKET_PAIRS.iter().any(|(_, cl)| *cl == c) {
                out.push(c);
            }
            i += 1;
        }
    }
    out
}

/// Whitespace-free, non-empty tokens of a dosage string after bracket removal.
pub fn split_tokens(raw: &str) -> Vec<String> {
    strip_brackets(raw)
        .split(SEPARATORS)
        .map(|t| t.chars().filter(|c| !c.is_whitespace()).collect::<String>())
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn parse_dosage(raw: &str) -> ParsedDosage {
    let mut parsed = ParsedDosage::default();
    let mut factors = Vec::new();
    let mut total: u64 = 1;
    for token in split_tokens(raw) {
        match classify(&token) {
            Token::Strength(s) if parsed.strength.is_none() => parsed.strength = Some(s),
            Token::Factor(f) => match total.checked_mul(f.count) {
                Some(t) => {
                    total = t;
                    factors.push(f);
                }
                None => parsed.residue.push(token),
            },
            _ => parsed.residue.push(token),
        }
    }
    parsed.package = PackageQuantity::new(factors);
    parsed
}
