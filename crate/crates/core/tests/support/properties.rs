//! Property suites. Each runs its own proptest runner so it can be driven
//! from `#[test]` functions and from the acceptance runner alike.

use std::fmt::Debug;
use std::str::FromStr;

use drugmatch::bayes::{build_vocabulary, fit, LabeledName, NBModel};
use drugmatch::correction::{correct, detect_inconsistency, run_pipeline};
use drugmatch::dosage::{parse_dosage, split_tokens, strength_equal, strip_brackets, Strength, Unit};
use drugmatch::druginfo::build_index;
use drugmatch::fuzzy::{levenshtein, similarity_ratio};
use drugmatch::matcher::{predict_label, MatcherConfig};
use drugmatch::records::{load_dataset, parse_approval_number, write_dataset};
use drugmatch::textnorm::{clean_name, tokenize, BrandLexicon, TokenMode};
use drugmatch::{ApprovalNumber, DrugRecord, DrugType, RecordPair};
use proptest::prelude::*;
use proptest::sample::select;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rust_decimal::Decimal;

pub type Suite = (&'static str, fn(u32) -> Result<(), String>);

pub const SUITES: &[Suite] = &[
    ("cleaning idempotence", cleaning_idempotence),
    ("cleaning reconstructs its input", cleaning_lossless),
    ("ratio symmetry and bounds", ratio_symmetry_bounds),
    ("edit distance triangle inequality", triangle_inequality),
    ("matcher source-swap symmetry", matcher_swap_symmetry),
    ("matcher threshold monotonicity", threshold_monotonicity),
    ("correction never fabricates identifiers", correction_no_fabrication),
    ("index count conservation", index_conservation),
    ("dataset loading is total", load_totality),
    ("dataset write/load round trip", dataset_round_trip),
    ("approval number round trip", approval_round_trip),
    ("dosage token accounting", dosage_token_accounting),
    ("grams equal 1000 milligrams", gram_milligram_equality),
];

fn check<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: Debug,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

const NAME_POOL: &[char] = &[
    '阿', '莫', '西', '林', '胶', '囊', '片', '叶', '酸', '联', '环', '丹', '参', '(', ')', '（', '）', '【', '】',
    '[', ']', '「', '」', ' ', ' ', '\u{3000}', '*', '-', '·', '/', '+', ',', '，', '.', '。', ':', ';', 'a', 'B', '1',
];
const BRAND_POOL: &[char] = &['联', '环', '三', '九', '白', '云', '山', '阿'];
const DOSAGE_POOL: &[&str] = &[
    "0.3g*12粒*2板",
    "300mg*24s",
    "45s",
    "0.35g*45s",
    "",
    "0.3g*24s",
    "300mg*12s",
    "0.3g",
    "24s",
    "5mg/ml*10支",
    "1g*10袋",
    "1000mg*10袋",
    "片剂",
];

fn text(pool: &'static [char], len: std::ops::Range<usize>) -> impl Strategy<Value = String> {
    prop::collection::vec(select(pool), len).prop_map(|cs| cs.into_iter().collect())
}

fn lexicon() -> impl Strategy<Value = BrandLexicon> {
    prop::collection::vec(text(BRAND_POOL, 1..3), 0..3).prop_map(BrandLexicon::new)
}

fn approval_text() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => (select(&['H', 'Z', 'S', 'J', 'B', 'h', 'z'][..]), 0u32..100_000_000)
            .prop_map(|(l, d)| format!("{l}{d:08}")),
        1 => "[A-Z0-9 ]{0,10}",
    ]
}

fn record() -> impl Strategy<Value = DrugRecord> {
    (
        text(NAME_POOL, 0..10),
        select(DOSAGE_POOL),
        text(BRAND_POOL, 0..4),
        approval_text(),
    )
        .prop_map(|(n, d, m, a)| DrugRecord::new(n, d, m, a))
}

/// Pairs whose names often clean to near-identical strings.
fn pair() -> impl Strategy<Value = RecordPair> {
    (
        record(),
        text(NAME_POOL, 0..3),
        select(DOSAGE_POOL),
        approval_text(),
        any::<bool>(),
    )
        .prop_map(|(r1, suffix, d2, a2, reuse)| {
            let name2 = if reuse { format!("{}{suffix}", r1.name) } else { suffix };
            let r2 = DrugRecord::new(name2, d2, r1.manufacturer.clone(), a2);
            RecordPair::new(r1, r2, None)
        })
}

pub fn cleaning_idempotence(cases: u32) -> Result<(), String> {
    check(cases, (text(NAME_POOL, 0..16), lexicon()), |(raw, lex)| {
        if let Ok(once) = clean_name(&raw, &lex) {
            let twice = clean_name(&once.text, &lex).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(twice.text, once.text);
        }
        Ok(())
    })
}

pub fn cleaning_lossless(cases: u32) -> Result<(), String> {
    check(cases, (text(NAME_POOL, 0..16), lexicon()), |(raw, lex)| {
        if let Ok(c) = clean_name(&raw, &lex) {
            prop_assert_eq!(c.reconstruct(), raw.trim());
        }
        Ok(())
    })
}

pub fn ratio_symmetry_bounds(cases: u32) -> Result<(), String> {
    check(cases, (text(NAME_POOL, 0..12), text(NAME_POOL, 0..12)), |(a, b)| {
        let ab = similarity_ratio(&a, &b).value();
        prop_assert_eq!(ab, similarity_ratio(&b, &a).value());
        prop_assert!(ab <= 100);
        prop_assert_eq!(ab == 100, a == b);
        prop_assert_eq!(similarity_ratio(&a, &a).value(), 100);
        Ok(())
    })
}

pub fn triangle_inequality(cases: u32) -> Result<(), String> {
    let s = || text(NAME_POOL, 0..10);
    check(cases, (s(), s(), s()), |(a, b, c)| {
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
        Ok(())
    })
}

fn matcher_config() -> impl Strategy<Value = MatcherConfig> {
    (0u8..=100, any::<bool>()).prop_map(|(t, req)| MatcherConfig {
        name_threshold: t,
        require_quantity_evidence: req,
        ..MatcherConfig::default()
    })
}

pub fn matcher_swap_symmetry(cases: u32) -> Result<(), String> {
    check(cases, (pair(), matcher_config(), lexicon()), |(p, cfg, lex)| {
        let there = predict_label(&p, &cfg, &lex);
        let back = predict_label(&p.swapped(), &cfg, &lex);
        prop_assert_eq!(there.label, back.label);
        prop_assert_eq!(there.reason, back.reason);
        prop_assert_eq!(there.label, there.reason.label());
        Ok(())
    })
}

pub fn threshold_monotonicity(cases: u32) -> Result<(), String> {
    check(cases, (pair(), 0u8..=100, 0u8..=100, lexicon()), |(p, t1, t2, lex)| {
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let at = |t| {
            let cfg = MatcherConfig {
                name_threshold: t,
                ..MatcherConfig::default()
            };
            predict_label(&p, &cfg, &lex).label
        };
        if at(hi).is_match() {
            prop_assert!(at(lo).is_match());
        }
        Ok(())
    })
}

fn toy_model() -> NBModel {
    let docs = [
        ("丹参片", DrugType::TraditionalChinese),
        ("板蓝根颗粒", DrugType::TraditionalChinese),
        ("阿莫西林胶囊", DrugType::Western),
        ("布洛芬片", DrugType::Western),
    ];
    let data: Vec<LabeledName> = docs
        .iter()
        .map(|(n, t)| LabeledName {
            tokens: tokenize(n, TokenMode::CharUnigram),
            klass: *t,
        })
        .collect();
    fit(&data, build_vocabulary(&data).expect("vocab"), 1.0).expect("fit")
}

pub fn correction_no_fabrication(cases: u32) -> Result<(), String> {
    let model = toy_model();
    let own = |p: &RecordPair| -> Vec<ApprovalNumber> {
        [p.source1.approval(), p.source2.approval()]
            .into_iter()
            .flatten()
            .collect()
    };
    check(
        cases,
        (prop::collection::vec(pair(), 1..8), 0.0f64..=1.0, lexicon()),
        |(pairs, min_conf, lex)| {
            for p in &pairs {
                if let Ok(Some(kind)) = detect_inconsistency(p, drugmatch::MatchLabel::Match) {
                    let r = correct(p, kind, &model, &lex, min_conf);
                    if let Some(chosen) = r.chosen {
                        prop_assert!(own(p).contains(&chosen));
                    }
                }
            }
            let cfg = MatcherConfig {
                name_threshold: 0,
                require_quantity_evidence: false,
                ..MatcherConfig::default()
            };
            let report = run_pipeline(&pairs, &cfg, &model, &lex, min_conf);
            for e in &report.entries {
                if let Some(chosen) = e.correction.as_ref().and_then(|c| c.chosen) {
                    prop_assert!(own(&pairs[e.index]).contains(&chosen));
                }
            }
            Ok(())
        },
    )
}

pub fn index_conservation(cases: u32) -> Result<(), String> {
    check(
        cases,
        (prop::collection::vec(record(), 0..24), 0u8..=100, lexicon()),
        |(records, threshold, lex)| {
            let index = build_index(&records, threshold, &lex);
            prop_assert_eq!(index.indexed_records() + index.skipped, records.len() as u64);
            for entry in index.entries.values() {
                prop_assert!(entry.count >= 1);
                prop_assert!(entry.manufacturers.member_count() as u64 <= entry.count);
            }
            Ok(())
        },
    )
}

pub fn load_totality(cases: u32) -> Result<(), String> {
    let header =
        "name_1,dosage_1,manufacturer_1,approval_number_1,name_2,dosage_2,manufacturer_2,approval_number_2,label\n";
    let bytes = prop_oneof![
        prop::collection::vec(any::<u8>(), 0..256),
        "[a-z0-9,\"\n 阿片]{0,200}".prop_map(move |body| format!("{header}{body}").into_bytes()),
    ];
    check(cases, bytes, |input| {
        if let Ok(ds) = load_dataset(input.as_slice()) {
            prop_assert_eq!(ds.data_rows(), ds.pairs.len() + ds.rejected.len());
            for p in &ds.pairs {
                prop_assert!(!p.source1.name.is_empty() && !p.source2.name.is_empty());
            }
        }
        Ok(())
    })
}

pub fn dataset_round_trip(cases: u32) -> Result<(), String> {
    let labeled = (pair(), prop::option::of(any::<bool>())).prop_map(|(mut p, l)| {
        p.gold_label = l.map(drugmatch::MatchLabel::from);
        p
    });
    check(cases, prop::collection::vec(labeled, 0..12), |pairs| {
        let kept: Vec<RecordPair> = pairs
            .into_iter()
            .filter(|p| !p.source1.name.trim().is_empty() && !p.source2.name.trim().is_empty())
            .collect();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &kept).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let ds = load_dataset(buf.as_slice()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(ds.rejected.is_empty(), "rejected {:?}", ds.rejected);
        prop_assert_eq!(ds.pairs.len(), kept.len());
        prop_assert_eq!(&ds.pairs, &kept);
        Ok(())
    })
}

pub fn approval_round_trip(cases: u32) -> Result<(), String> {
    check(
        cases,
        (prop::char::range('A', 'Z'), 0u32..100_000_000, any::<bool>()),
        |(l, d, lower)| {
            let digits = format!("{d:08}");
            let a = ApprovalNumber::new(l, &digits).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let shown = a.to_string();
            prop_assert_eq!(parse_approval_number(&shown), Ok(a));
            let typed = if lower {
                shown.to_lowercase()
            } else {
                format!(" {shown} ")
            };
            prop_assert_eq!(parse_approval_number(&typed), Ok(a));
            prop_assert_eq!(ApprovalNumber::from_str(&shown), Ok(a));
            Ok(())
        },
    )
}

pub fn dosage_token_accounting(cases: u32) -> Result<(), String> {
    let piece = prop_oneof![
        select(DOSAGE_POOL).prop_map(str::to_string),
        "[0-9]{1,3}(\\.[0-9]{1,2})?(g|mg|ml|s|片|粒|IU|%|/ml|)",
        "[(（][a-z0-9*]{0,4}[)）]",
        "[ *×a-z]{0,3}",
    ];
    check(cases, prop::collection::vec(piece, 0..5), |pieces| {
        let raw = pieces.join("*");
        let parsed = parse_dosage(&raw);
        prop_assert_eq!(parsed.token_count(), split_tokens(&strip_brackets(&raw)).len());
        if let Some(p) = &parsed.package {
            prop_assert_eq!(p.total(), p.factors().iter().map(|f| f.count).product::<u64>());
        }
        Ok(())
    })
}

pub fn gram_milligram_equality(cases: u32) -> Result<(), String> {
    check(cases, (1u64..10_000_000, 0u32..6), |(mantissa, scale)| {
        let grams = Decimal::new(mantissa as i64, scale);
        let g = Strength::new(grams, Unit::G).expect("positive");
        let mg = Strength::new(grams * Decimal::from(1000), Unit::Mg).expect("positive");
        let tol = drugmatch::dosage::default_rel_tol();
        prop_assert!(strength_equal(g, mg, tol));
        prop_assert!(strength_equal(mg, g, tol));
        let off = Strength::new(grams * Decimal::from(1001), Unit::Mg).expect("positive");
        prop_assert!(!strength_equal(g, off, tol));
        Ok(())
    })
}
