//! Seeded synthetic two-source corpus with known ground truth.
//!
//! Products are drawn from a generated catalog. Matching pairs show the same
//! product twice, with source 2 perturbed in ways cleaning and unit
//! normalization can undo: brand prefixes, brackets and symbols, g/mg
//! rescaling, refactored pack sizes, and a dropped strength. Non-matching
//! pairs differ in strength, pack total, or product name. Some matching pairs
//! get one approval number corrupted, either in the type letter (Z versus
//! non-Z) or in a digit, and the true number is recorded.

use std::collections::HashSet;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::similarity_ratio;
use crate::records::{ApprovalNumber, DrugRecord, DrugType, MatchLabel, RecordPair};

pub const TRUTH_FORMAT: &str = "drugmatch.truth/1";

const TCM_CHARS: &str =
    "丹参芪归芍苓术草桂枝麻杏姜枣柴胡芩连柏栀翘银菊荷葛藿砂仁蔻陈夏茯泽泻牡蛎龙骨蒲黄芎芷羌独防风苍薏";
const WESTERN_CHARS: &str =
    "阿莫西林头孢拉定氨氯平布洛芬美托尔硝苯缬沙坦奥唑双胍左氧氟星替丁吡嗪罗红霉素克硫酸钠铵酯胺醇酮";
const SHARED_CHARS: &str = "复方维生口服";
const FORMS: [&str; 8] = ["片", "胶囊", "颗粒", "丸", "口服液", "注射液", "软膏", "滴丸"];
const BRANDS: [&str; 10] = [
    "联环",
    "悦康",
    "修正",
    "仁和",
    "白云山",
    "哈药",
    "石药",
    "同仁堂",
    "三九",
    "华润",
];
const NAME_NOISE: [&str; 6] = ["(盒)", "（OTC）", "【进口】", "[新]", "「薄膜衣」", "(0.5g)"];
const NAME_SYMBOLS: [char; 4] = ['-', '*', '·', '/'];
const DOSAGE_NOISE: [&str; 4] = [" (acid)", "(薄膜衣)", "【铝塑】", " (进口)"];
const REGIONS: [&str; 10] = [
    "江苏", "浙江", "广东", "北京", "上海", "山东", "四川", "湖北", "河南", "吉林",
];
const MAKERS: [&str; 10] = [
    "联环", "悦康", "康恩", "华润", "恒瑞", "海正", "仁和", "修正", "天士", "华北",
];
const MAKER_SUFFIXES: [&str; 3] = ["药业股份有限公司", "药业有限公司", "制药集团有限公司"];
const MASS_MG: [u32; 16] = [
    5, 10, 20, 25, 50, 100, 125, 150, 200, 250, 300, 400, 500, 600, 750, 1000,
];
const VOLUME_ML: [u32; 5] = [5, 10, 20, 100, 250];
const PACK_COUNTS: [u64; 11] = [6, 8, 10, 12, 15, 20, 24, 30, 36, 48, 60];

// Per-pair rates of each enabled perturbation.
const BRAND_RATE: f64 = 0.3;
const SYMBOL_RATE: f64 = 0.3;
const RESCALE_RATE: f64 = 0.5;
const REFACTOR_RATE: f64 = 0.5;
const DROP_RATE: f64 = 0.15;
const MAKER_RATE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_pairs: usize,
    pub match_fraction: f64,
    pub unit_rescale: bool,
    pub package_refactor: bool,
    pub brand_prefix: bool,
    pub symbol_noise: bool,
    pub dosage_drop: bool,
    pub manufacturer_noise: bool,
    pub znz_flip_fraction: f64,
    pub digit_flip_fraction: f64,
    /// Probability that a name character comes from the pool shared by both
    /// drug types.
    pub name_overlap: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_pairs: 1000,
            match_fraction: 0.5,
            unit_rescale: true,
            package_refactor: true,
            brand_prefix: true,
            symbol_noise: true,
            dosage_drop: true,
            manufacturer_noise: true,
            znz_flip_fraction: 0.05,
            digit_flip_fraction: 0.02,
            name_overlap: 0.1,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    /// Every perturbation off and no approval corruption.
    pub fn clean(n_pairs: usize, seed: u64) -> Self {
        Self {
            n_pairs,
            unit_rescale: false,
            package_refactor: false,
            brand_prefix: false,
            symbol_noise: false,
            dosage_drop: false,
            manufacturer_noise: false,
            znz_flip_fraction: 0.0,
            digit_flip_fraction: 0.0,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let fraction = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(GeneratorError::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {v}"
                )))
            }
        };
        if self.n_pairs == 0 {
            return Err(GeneratorError::InvalidConfig("n_pairs must be at least 1".into()));
        }
        fraction("match_fraction", self.match_fraction)?;
        fraction("znz_flip_fraction", self.znz_flip_fraction)?;
        fraction("digit_flip_fraction", self.digit_flip_fraction)?;
        fraction("name_overlap", self.name_overlap)?;
        fraction(
            "znz_flip_fraction + digit_flip_fraction",
            self.znz_flip_fraction + self.digit_flip_fraction,
        )
    }
}

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("truth file: {0}")]
    Truth(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipKind {
    Znz,
    Digit,
}

impl FlipKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FlipKind::Znz => "znz",
            FlipKind::Digit => "digit",
        }
    }
}

/// A matching pair whose approval number was corrupted on one side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedFlip {
    pub pair_index: usize,
    pub kind: FlipKind,
    pub true_approval: ApprovalNumber,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub pairs: Vec<RecordPair>,
    pub planted: Vec<PlantedFlip>,
}

#[derive(Debug, Clone)]
struct Product {
    drug_type: DrugType,
    name: String,
    strength: Amount,
    package: Vec<(u64, String)>,
    manufacturer: (usize, usize, usize),
    approval: ApprovalNumber,
}

/// Strength in its canonical unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Amount {
    Mg(u32),
    Ml(u32),
}

struct Generator<'a> {
    cfg: &'a GeneratorConfig,
    rng: ChaCha8Rng,
    tcm: Vec<char>,
    western: Vec<char>,
    shared: Vec<char>,
    names: HashSet<String>,
}

pub fn generate(cfg: &GeneratorConfig) -> Result<SyntheticCorpus, GeneratorError> {
    cfg.validate()?;
    let mut g = Generator {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        tcm: TCM_CHARS.chars().collect(),
        western: WESTERN_CHARS.chars().collect(),
        shared: SHARED_CHARS.chars().collect(),
        names: HashSet::new(),
    };
    let catalog: Vec<Product> = (0..cfg.n_pairs.max(16)).map(|_| g.product()).collect();

    let mut pairs = Vec::with_capacity(cfg.n_pairs);
    let mut planted = Vec::new();
    for index in 0..cfg.n_pairs {
        let base = catalog[g.rng.gen_range(0..catalog.len())].clone();
        let is_match = g.rng.gen_bool(cfg.match_fraction);
        let pair = if is_match {
            g.matching_pair(&base, index, &mut planted)
        } else {
            g.non_matching_pair(&base, &catalog)
        };
        pairs.push(pair);
    }
    Ok(SyntheticCorpus { pairs, planted })
}

impl Generator<'_> {
    fn chance(&mut self, enabled: bool, rate: f64) -> bool {
        // Always draw, so toggles do not shift the random stream.
        let roll = self.rng.gen_bool(rate);
        enabled && roll
    }

    fn product(&mut self) -> Product {
        let drug_type = if self.rng.gen_bool(0.5) {
            DrugType::TraditionalChinese
        } else {
            DrugType::Western
        };
        let name = loop {
            let len = self.rng.gen_range(2..=4);
            let mut name: String = (0..len).map(|_| self.name_char(drug_type)).collect();
            name.push_str(FORMS.choose(&mut self.rng).unwrap());
            if self.names.insert(name.clone()) {
                break name;
            }
        };
        let liquid = name.ends_with("液");
        let strength = self.amount(liquid);
        let package = self.package(liquid);
        let manufacturer = (
            self.rng.gen_range(0..REGIONS.len()),
            self.rng.gen_range(0..MAKERS.len()),
            self.rng.gen_range(0..MAKER_SUFFIXES.len()),
        );
        let approval = self.approval(drug_type);
        Product {
            drug_type,
            name,
            strength,
            package,
            manufacturer,
            approval,
        }
    }

    fn name_char(&mut self, t: DrugType) -> char {
        let pool = if self.rng.gen_bool(self.cfg.name_overlap) {
            &self.shared
        } else if t == DrugType::TraditionalChinese {
            &self.tcm
        } else {
            &self.western
        };
        pool[self.rng.gen_range(0..pool.len())]
    }

    fn amount(&mut self, liquid: bool) -> Amount {
        if liquid {
            Amount::Ml(*VOLUME_ML.choose(&mut self.rng).unwrap())
        } else {
            Amount::Mg(*MASS_MG.choose(&mut self.rng).unwrap())
        }
    }

    fn package(&mut self, liquid: bool) -> Vec<(u64, String)> {
        let word = if liquid {
            *["支", "瓶"].choose(&mut self.rng).unwrap()
        } else {
            *["片", "粒", "袋", "丸"].choose(&mut self.rng).unwrap()
        };
        let count = *PACK_COUNTS.choose(&mut self.rng).unwrap();
        let mut factors = vec![(count, word.to_string())];
        if self.rng.gen_bool(0.4) {
            let boards = self.rng.gen_range(2..=4);
            factors.push((boards, (*["板", "盒"].choose(&mut self.rng).unwrap()).to_string()));
        }
        factors
    }

    fn approval(&mut self, t: DrugType) -> ApprovalNumber {
        let letter = match t {
            DrugType::TraditionalChinese => 'Z',
            DrugType::Western => *['H', 'H', 'H', 'H', 'S', 'J'].choose(&mut self.rng).unwrap(),
        };
        let digits: String = (0..8).map(|_| char::from(b'0' + self.rng.gen_range(0..10u8))).collect();
        ApprovalNumber::new(letter, &digits).expect("generated approval is well formed")
    }

    fn manufacturer(&self, (r, m, s): (usize, usize, usize), variant: bool) -> String {
        let s = if variant { (s + 1) % MAKER_SUFFIXES.len() } else { s };
        format!("{}{}{}", REGIONS[r], MAKERS[m], MAKER_SUFFIXES[s])
    }

    /// Source-1 rendering of a product: plain name, strength in g for round
    /// values of at least 100 mg, full factor list.
    fn plain(&self, p: &Product) -> DrugRecord {
        DrugRecord::new(
            p.name.clone(),
            format!("{}*{}", render_amount(p.strength, false), render_factors(&p.package)),
            self.manufacturer(p.manufacturer, false),
            p.approval.to_string(),
        )
    }

    /// Source-2 rendering with cosmetic noise. `drop_strength` omits the
    /// strength entirely.
    fn noisy(&mut self, p: &Product, drop_strength: bool) -> DrugRecord {
        let cfg = self.cfg;
        let mut name = p.name.clone();
        if self.chance(cfg.symbol_noise, SYMBOL_RATE) {
            if self.rng.gen_bool(0.5) {
                name.push_str(NAME_NOISE.choose(&mut self.rng).unwrap());
            } else {
                let chars: Vec<char> = name.chars().collect();
                let at = self.rng.gen_range(1..chars.len());
                let sym = *NAME_SYMBOLS.choose(&mut self.rng).unwrap();
                name = chars[..at].iter().chain([&sym]).chain(&chars[at..]).collect();
            }
        }
        if self.chance(cfg.brand_prefix, BRAND_RATE) {
            name = format!("{} {}", BRANDS.choose(&mut self.rng).unwrap(), name);
        }

        let rescale = self.chance(cfg.unit_rescale, RESCALE_RATE);
        let strength = render_amount(p.strength, rescale);
        let package = if self.chance(cfg.package_refactor, REFACTOR_RATE) {
            let total: u64 = p.package.iter().map(|(c, _)| c).product();
            let word = if self.rng.gen_bool(0.5) {
                "s"
            } else {
                p.package[0].1.as_str()
            };
            format!("{total}{word}")
        } else {
            render_factors(&p.package)
        };
        let dosage_noise = self.chance(cfg.symbol_noise, SYMBOL_RATE);
        let mut dosage = if drop_strength {
            package
        } else {
            format!("{strength}*{package}")
        };
        if dosage_noise {
            let noise = DOSAGE_NOISE.choose(&mut self.rng).unwrap();
            dosage = match dosage.split_once('*') {
                Some((head, tail)) => format!("{head}{noise}*{tail}"),
                None => format!("{dosage}{noise}"),
            };
        }

        let variant = self.chance(cfg.manufacturer_noise, MAKER_RATE);
        DrugRecord::new(
            name,
            dosage,
            self.manufacturer(p.manufacturer, variant),
            p.approval.to_string(),
        )
    }

    fn matching_pair(&mut self, p: &Product, index: usize, planted: &mut Vec<PlantedFlip>) -> RecordPair {
        let drop = self.chance(self.cfg.dosage_drop, DROP_RATE);
        let drop_on_first = self.rng.gen_bool(0.5);
        let mut s1 = self.plain(p);
        let s2 = self.noisy(p, drop && !drop_on_first);
        if drop && drop_on_first {
            s1.dosage_raw = render_factors(&p.package);
        }
        let mut pair = RecordPair::new(s1, s2, Some(MatchLabel::Match));

        let roll: f64 = self.rng.gen();
        let flip_first = self.rng.gen_bool(0.5);
        let kind = if roll < self.cfg.znz_flip_fraction {
            Some(FlipKind::Znz)
        } else if roll < self.cfg.znz_flip_fraction + self.cfg.digit_flip_fraction {
            Some(FlipKind::Digit)
        } else {
            None
        };
        if let Some(kind) = kind {
            let corrupted = match kind {
                FlipKind::Znz => {
                    let letter = if p.drug_type == DrugType::TraditionalChinese {
                        'H'
                    } else {
                        'Z'
                    };
                    p.approval.with_letter(letter).expect("valid letter")
                }
                FlipKind::Digit => {
                    let mut digits: Vec<u8> = p.approval.digits().bytes().collect();
                    let at = self.rng.gen_range(0..digits.len());
                    let shift = self.rng.gen_range(1..10u8);
                    digits[at] = b'0' + (digits[at] - b'0' + shift) % 10;
                    ApprovalNumber::new(p.approval.letter(), std::str::from_utf8(&digits).unwrap())
                        .expect("digits stay digits")
                }
            };
            let side = if flip_first {
                &mut pair.source1
            } else {
                &mut pair.source2
            };
            side.approval_raw = corrupted.to_string();
            planted.push(PlantedFlip {
                pair_index: index,
                kind,
                true_approval: p.approval,
            });
        }
        pair
    }

    fn non_matching_pair(&mut self, p: &Product, catalog: &[Product]) -> RecordPair {
        let mut other = p.clone();
        let perturbation = self.rng.gen_range(0..3);
        match perturbation {
            0 => {
                let liquid = matches!(p.strength, Amount::Ml(_));
                while other.strength == p.strength {
                    other.strength = self.amount(liquid);
                }
            }
            1 => {
                let total = |f: &[(u64, String)]| f.iter().map(|(c, _)| c).product::<u64>();
                let liquid = matches!(p.strength, Amount::Ml(_));
                while total(&other.package) == total(&p.package) {
                    other.package = self.package(liquid);
                }
            }
            _ => {
                other = loop {
                    let candidate = &catalog[self.rng.gen_range(0..catalog.len())];
                    if similarity_ratio(&candidate.name, &p.name).value() < 90 {
                        break candidate.clone();
                    }
                };
            }
        }
        if perturbation != 2 {
            other.approval = self.approval(p.drug_type);
        }
        // A dropped strength would erase the only difference between the two.
        let drop = self.chance(self.cfg.dosage_drop, DROP_RATE) && perturbation != 0;
        let s1 = self.plain(p);
        let s2 = self.noisy(&other, drop);
        RecordPair::new(s1, s2, Some(MatchLabel::NoMatch))
    }
}

fn render_amount(a: Amount, alternate_unit: bool) -> String {
    let (value, small, big) = match a {
        Amount::Mg(v) => (v, "mg", "g"),
        Amount::Ml(v) => (v, "ml", "l"),
    };
    // Source 1 prints round values of at least 100 in the larger unit;
    // the alternate rendering flips that choice.
    let big_by_default = value >= 100 && value % 50 == 0;
    if big_by_default != alternate_unit {
        let whole = value / 1000;
        let frac = value % 1000;
        if frac == 0 {
            format!("{whole}{big}")
        } else {
            let frac = format!("{frac:03}");
            format!("{whole}.{}{big}", frac.trim_end_matches('0'))
        }
    } else {
        format!("{value}{small}")
    }
}

fn render_factors(factors: &[(u64, String)]) -> String {
    factors
        .iter()
        .map(|(c, w)| format!("{c}{w}"))
        .collect::<Vec<_>>()
        .join("*")
}

pub fn write_truth<W: Write>(out: W, planted: &[PlantedFlip]) -> Result<(), GeneratorError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["format", "pair_index", "kind", "true_approval"])?;
    for p in planted {
        w.write_record([
            TRUTH_FORMAT,
            &p.pair_index.to_string(),
            p.kind.as_str(),
            &p.true_approval.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_truth<R: Read>(input: R) -> Result<Vec<PlantedFlip>, GeneratorError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let bad = |what: &str| GeneratorError::Truth(format!("{what} in row {:?}", row));
        if row.get(0) != Some(TRUTH_FORMAT) {
            return Err(bad("unsupported format tag"));
        }
        let pair_index = row
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad pair_index"))?;
        let kind = match row.get(2) {
            Some("znz") => FlipKind::Znz,
            Some("digit") => FlipKind::Digit,
            _ => return Err(bad("bad kind")),
        };
        let true_approval = row
            .get(3)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad approval"))?;
        out.push(PlantedFlip {
            pair_index,
            kind,
            true_approval,
        });
    }
    Ok(out)
}
