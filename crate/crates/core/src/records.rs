//! Drug records, aligned two-source record pairs, approval numbers, and CSV
//! ingestion of the nine-column pair table.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One product's raw attributes as they appear in a source. Nothing is
/// normalized at ingest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrugRecord {
    pub name: String,
    pub dosage_raw: String,
    pub manufacturer: String,
    pub approval_raw: String,
}

impl DrugRecord {
    pub fn new(
        name: impl Into<String>,
        dosage_raw: impl Into<String>,
        manufacturer: impl Into<String>,
        approval_raw: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            dosage_raw: dosage_raw.into(),
            manufacturer: manufacturer.into(),
            approval_raw: approval_raw.into(),
        }
    }

    /// Lazily parsed approval number; `None` when the raw field is malformed.
    pub fn approval(&self) -> Option<ApprovalNumber> {
        parse_approval_number(&self.approval_raw).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatchLabel {
    NoMatch,
    Match,
}

impl MatchLabel {
    pub fn as_int(self) -> u8 {
        match self {
            MatchLabel::NoMatch => 0,
            MatchLabel::Match => 1,
        }
    }

    pub fn is_match(self) -> bool {
        self == MatchLabel::Match
    }
}

impl From<bool> for MatchLabel {
    fn from(matched: bool) -> Self {
        if matched {
            MatchLabel::Match
        } else {
            MatchLabel::NoMatch
        }
    }
}

/// Two records, one per source, believed to describe candidate-equal products.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordPair {
    pub source1: DrugRecord,
    pub source2: DrugRecord,
    pub gold_label: Option<MatchLabel>,
}

impl RecordPair {
    pub fn new(source1: DrugRecord, source2: DrugRecord, gold_label: Option<MatchLabel>) -> Self {
        Self {
            source1,
            source2,
            gold_label,
        }
    }

    /// The same pair with the two sources exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            source1: self.source2.clone(),
            source2: self.source1.clone(),
            gold_label: self.gold_label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrugType {
    Western,
    TraditionalChinese,
}

impl DrugType {
    pub const ALL: [DrugType; 2] = [DrugType::Western, DrugType::TraditionalChinese];

    /// Dense class index: 0 = western, 1 = traditional Chinese.
    pub fn index(self) -> usize {
        match self {
            DrugType::Western => 0,
            DrugType::TraditionalChinese => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DrugType::Western => "western",
            DrugType::TraditionalChinese => "traditional_chinese",
        }
    }
}

impl fmt::Display for DrugType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A CFDA approval number: one type letter followed by eight digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ApprovalNumber {
    letter: char,
    digits: [u8; 8],
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed approval number {0:?}")]
pub struct MalformedApproval(pub String);

impl ApprovalNumber {
    pub fn new(letter: char, digits: &str) -> Result<Self, MalformedApproval> {
        let malformed = || MalformedApproval(format!("{letter}{digits}"));
        if !letter.is_ascii_uppercase() || digits.len() != 8 {
            return Err(malformed());
        }
        let mut out = [0u8; 8];
        for (slot, b) in out.iter_mut().zip(digits.bytes()) {
            if !b.is_ascii_digit() {
                return Err(malformed());
            }
            *slot = b;
        }
        Ok(Self { letter, digits: out })
    }

    pub fn letter(&self) -> char {
        self.letter
    }

    pub fn digits(&self) -> &str {
        // Only ASCII digits are ever stored.
        std::str::from_utf8(&self.digits).expect("ascii digits")
    }

    pub fn drug_type(&self) -> DrugType {
        drug_type_of(self)
    }

    /// Same digits under a different type letter.
    pub fn with_letter(&self, letter: char) -> Result<Self, MalformedApproval> {
        Self::new(letter, self.digits())
    }
}

impl fmt::Display for ApprovalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.letter, self.digits())
    }
}

impl FromStr for ApprovalNumber {
    type Err = MalformedApproval;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_approval_number(s)
    }
}

impl Serialize for ApprovalNumber {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ApprovalNumber {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        parse_approval_number(&raw).map_err(serde::de::Error::custom)
    }
}

/// Parses `raw` after trimming whitespace and upper-casing a leading ASCII
/// letter.
pub fn parse_approval_number(raw: &str) -> Result<ApprovalNumber, MalformedApproval> {
    let malformed = || MalformedApproval(raw.to_string());
    let trimmed = raw.trim();
    let mut chars = trimmed.chars();
    let letter = chars
        .next()
        .filter(char::is_ascii_alphabetic)
        .ok_or_else(malformed)?
        .to_ascii_uppercase();
    ApprovalNumber::new(letter, chars.as_str()).map_err(|_| malformed())
}

pub fn drug_type_of(approval: &ApprovalNumber) -> DrugType {
    if approval.letter == 'Z' {
        DrugType::TraditionalChinese
    } else {
        DrugType::Western
    }
}

pub const COLUMNS: [&str; 9] = [
    "name_1",
    "dosage_1",
    "manufacturer_1",
    "approval_number_1",
    "name_2",
    "dosage_2",
    "manufacturer_2",
    "approval_number_2",
    "label",
];

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

/// A data row that was rejected during ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadRow {
    /// 1-based line number in the input where the row starts.
    pub line_no: u64,
    pub reason: String,
}

impl fmt::Display for BadRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line_no, self.reason)
    }
}

#[derive(Debug, Default)]
pub struct Dataset {
    pub pairs: Vec<RecordPair>,
    pub rejected: Vec<BadRow>,
    pub has_labels: bool,
}

impl Dataset {
    pub fn data_rows(&self) -> usize {
        self.pairs.len() + self.rejected.len()
    }
}

/// Reads the nine-column pair table. Column order in the header is free;
/// `label` may be omitted for unlabeled inference input. Malformed rows are
/// collected in [`Dataset::rejected`] and never abort ingestion.
pub fn load_dataset<R: Read>(input: R) -> Result<Dataset, LoadError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);

    let mut records = reader.byte_records();
    let header = match records.next() {
        None => return Err(LoadError::BadHeader("empty input".into())),
        Some(Err(e)) => return Err(csv_to_load_error(e)),
        Some(Ok(h)) => h,
    };
    let layout = HeaderLayout::parse(&header)?;

    let mut dataset = Dataset {
        has_labels: layout.positions[8].is_some(),
        ..Default::default()
    };
    for row in records {
        match row {
            Ok(row) => {
                let line_no = row.position().map_or(0, |p| p.line());
                match layout.read_pair(&row) {
                    Ok(pair) => dataset.pairs.push(pair),
                    Err(reason) => dataset.rejected.push(BadRow { line_no, reason }),
                }
            }
            Err(e) => {
                let line_no = e.position().map_or(0, |p| p.line());
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(csv_to_load_error(e));
                }
                dataset.rejected.push(BadRow {
                    line_no,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(dataset)
}

fn csv_to_load_error(e: csv::Error) -> LoadError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => LoadError::Io(io),
        other => LoadError::BadHeader(format!("{other:?}")),
    }
}

struct HeaderLayout {
    width: usize,
    /// Field index of each entry of [`COLUMNS`].
    positions: [Option<usize>; 9],
}

impl HeaderLayout {
    fn parse(header: &csv::ByteRecord) -> Result<Self, LoadError> {
        let mut positions = [None; 9];
        for (i, raw) in header.iter().enumerate() {
            let name =
                std::str::from_utf8(raw).map_err(|_| LoadError::BadHeader("header is not valid UTF-8".into()))?;
            let name = name.trim_start_matches('\u{feff}').trim().to_ascii_lowercase();
            let slot = COLUMNS
                .iter()
                .position(|c| *c == name)
                .ok_or_else(|| LoadError::BadHeader(format!("unknown column {name:?}")))?;
            if positions[slot].replace(i).is_some() {
                return Err(LoadError::BadHeader(format!("duplicate column {name:?}")));
            }
        }
        if let Some(missing) = COLUMNS[..8]
            .iter()
            .zip(&positions)
            .find_map(|(c, p)| p.is_none().then_some(*c))
        {
            return Err(LoadError::BadHeader(format!("missing column {missing:?}")));
        }
        Ok(Self {
            width: header.len(),
            positions,
        })
    }

    fn read_pair(&self, row: &csv::ByteRecord) -> Result<RecordPair, String> {
        if row.len() != self.width {
            return Err(format!("expected {} fields, found {}", self.width, row.len()));
        }
        let field = |slot: usize| -> Result<String, String> {
            let idx = self.positions[slot].expect("required column");
            std::str::from_utf8(&row[idx])
                .map(str::to_owned)
                .map_err(|_| format!("column {} is not valid UTF-8", COLUMNS[slot]))
        };
        let record = |base: usize| -> Result<DrugRecord, String> {
            let rec = DrugRecord::new(field(base)?, field(base + 1)?, field(base + 2)?, field(base + 3)?);
            if rec.name.trim().is_empty() {
                return Err(format!("column {} is empty", COLUMNS[base]));
            }
            Ok(rec)
        };
        let source1 = record(0)?;
        let source2 = record(4)?;
        let gold_label = match self.positions[8] {
            None => None,
            Some(_) => match field(8)?.trim() {
                "" => None,
                "0" => Some(MatchLabel::NoMatch),
                "1" => Some(MatchLabel::Match),
                other => return Err(format!("label {other:?} is not 0, 1 or empty")),
            },
        };
        Ok(RecordPair::new(source1, source2, gold_label))
    }
}

/// Writes pairs in the canonical nine-column layout.
pub fn write_dataset<W: std::io::Write>(out: W, pairs: &[RecordPair]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(COLUMNS)?;
    for p in pairs {
        let label = p.gold_label.map(|l| l.as_int().to_string()).unwrap_or_default();
        writer.write_record([
            p.source1.name.as_str(),
            &p.source1.dosage_raw,
            &p.source1.manufacturer,
            &p.source1.approval_raw,
            &p.source2.name,
            &p.source2.dosage_raw,
            &p.source2.manufacturer,
            &p.source2.approval_raw,
            &label,
        ])?;
    }
    writer.flush()?;
    Ok(())
}
