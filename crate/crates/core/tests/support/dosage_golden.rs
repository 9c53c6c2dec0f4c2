//! Curated dosage strings with hand-written expected parses.

use std::str::FromStr;

use drugmatch::dosage::{parse_dosage, ParsedDosage, Unit};
use rust_decimal::Decimal;

pub struct Golden {
    pub input: &'static str,
    /// (value, unit) of the strength.
    pub strength: Option<(&'static str, Unit)>,
    /// (count, count word) per package factor; empty means no package.
    pub factors: &'static [(u64, &'static str)],
    pub total: Option<u64>,
    pub residue: &'static [&'static str],
}

const fn g(
    input: &'static str,
    strength: Option<(&'static str, Unit)>,
    factors: &'static [(u64, &'static str)],
    total: Option<u64>,
    residue: &'static [&'static str],
) -> Golden {
    Golden {
        input,
        strength,
        factors,
        total,
        residue,
    }
}

#[rustfmt::skip]
pub const TABLE: &[Golden] = &[
    g("0.3g*12粒*2板", Some(("0.3", Unit::G)), &[(12, "粒"), (2, "板")], Some(24), &[]),
    g("300mg*24s", Some(("300", Unit::Mg)), &[(24, "s")], Some(24), &[]),
    g("45s", None, &[(45, "s")], Some(45), &[]),
    g("0.35g*45s", Some(("0.35", Unit::G)), &[(45, "s")], Some(45), &[]),
    g("", None, &[], None, &[]),
    g("5ml*10支*4盒", Some(("5", Unit::Ml)), &[(10, "支"), (4, "盒")], Some(40), &[]),
    g("10mg×30片", Some(("10", Unit::Mg)), &[(30, "片")], Some(30), &[]),
    g("1g*10袋(复方)", Some(("1", Unit::G)), &[(10, "袋")], Some(10), &[]),
    g("（薄膜衣）0.5g*12片", Some(("0.5", Unit::G)), &[(12, "片")], Some(12), &[]),
    g("0.3g【铝塑】*24s", Some(("0.3", Unit::G)), &[(24, "s")], Some(24), &[]),
    g("4g (acid) *31 tablet", Some(("4", Unit::G)), &[(31, "tablet")], Some(31), &[]),
    g("400mg*31 tablet", Some(("400", Unit::Mg)), &[(31, "tablet")], Some(31), &[]),
    g("100IU*1支", Some(("100", Unit::Iu)), &[(1, "支")], Some(1), &[]),
    g("200μg*30粒", Some(("200", Unit::Ug)), &[(30, "粒")], Some(30), &[]),
    g("20mcg*7粒", Some(("20", Unit::Ug)), &[(7, "粒")], Some(7), &[]),
    g("2.5MG*14S", Some(("2.5", Unit::Mg)), &[(14, "S")], Some(14), &[]),
    g("500毫克*20片", Some(("500", Unit::Mg)), &[(20, "片")], Some(20), &[]),
    g("1kg", Some(("1", Unit::Kg)), &[], None, &[]),
    g("0.3 g * 24 s", Some(("0.3", Unit::G)), &[(24, "s")], Some(24), &[]),
    g("0.3g*0.5g*24s", Some(("0.3", Unit::G)), &[(24, "s")], Some(24), &["0.5g"]),
    g("10%*100ml", Some(("10", Unit::Percent)), &[], None, &["100ml"]),
    g("5mg/ml*10支", None, &[(10, "支")], Some(10), &["5mg/ml"]),
    g("0.25g/片*24片", Some(("0.25", Unit::G)), &[(24, "片")], Some(24), &[]),
    g("片剂", None, &[], None, &["片剂"]),
    g("24", None, &[(24, "")], Some(24), &[]),
    g("3*2", None, &[(3, ""), (2, "")], Some(6), &[]),
    g("1.5粒", None, &[], None, &["1.5粒"]),
    g("0g*10片", None, &[(10, "片")], Some(10), &["0g"]),
    g("**", None, &[], None, &[]),
    g("10片*", None, &[(10, "片")], Some(10), &[]),
    g("2ml*5支*1盒", Some(("2", Unit::Ml)), &[(5, "支"), (1, "盒")], Some(5), &[]),
    g("1L", Some(("1", Unit::L)), &[], None, &[]),
];

/// `None` when the parse matches, otherwise a description of the difference.
pub fn check(row: &Golden) -> Option<String> {
    let got = parse_dosage(row.input);
    let want_strength = row
        .strength
        .map(|(v, u)| (Decimal::from_str(v).expect("golden decimal"), u));
    let got_strength = got.strength.map(|s| (s.value().normalize(), s.unit()));
    let got_factors: Vec<(u64, String)> = got
        .package
        .as_ref()
        .map(|p| p.factors().iter().map(|f| (f.count, f.count_word.clone())).collect())
        .unwrap_or_default();
    let want_factors: Vec<(u64, String)> = row.factors.iter().map(|(c, w)| (*c, w.to_string())).collect();
    let got_total = got.package.as_ref().map(|p| p.total());

    let ok = got_strength == want_strength.map(|(v, u)| (v.normalize(), u))
        && got_factors == want_factors
        && got_total == row.total
        && got.residue == row.residue;
    (!ok).then(|| describe(row.input, &got))
}

fn describe(input: &str, got: &ParsedDosage) -> String {
    format!(
        "{input:?} parsed as strength {:?}, package {:?}, residue {:?}",
        got.strength.map(|s| s.to_string()),
        got.package.as_ref().map(|p| (p.factors(), p.total())),
        got.residue
    )
}
