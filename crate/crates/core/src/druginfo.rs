//! Drug lookup: how often a cleaned drug name appears, and which
//! (deduplicated) manufacturers make it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::fuzzy::{dedup_manufacturers, Cluster, ManufacturerClusters};
use crate::records::{DrugRecord, RecordPair};
use crate::textnorm::{clean_name, BrandLexicon};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub count: u64,
    pub manufacturers: ManufacturerClusters,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrugIndex {
    pub entries: BTreeMap<String, IndexEntry>,
    /// Records whose name cleaned to nothing.
    pub skipped: u64,
}

impl DrugIndex {
    pub fn get(&self, clean_name: &str) -> Option<&IndexEntry> {
        self.entries.get(clean_name)
    }

    pub fn indexed_records(&self) -> u64 {
        self.entries.values().map(|e| e.count).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfoReport {
    pub name: String,
    /// The query after cleaning; absent when it cleaned to nothing.
    pub clean_name: Option<String>,
    pub popularity: u64,
    /// Distinct manufacturer clusters.
    pub manufacturer_count: usize,
    /// Distinct raw manufacturer strings.
    pub raw_manufacturer_count: usize,
    pub duplicated_groups: Vec<Cluster>,
    pub manufacturers: Vec<String>,
}

/// Both records of every pair, source 1 first.
pub fn records_of(pairs: &[RecordPair]) -> Vec<DrugRecord> {
    pairs
        .iter()
        .flat_map(|p| [p.source1.clone(), p.source2.clone()])
        .collect()
}

pub fn build_index(records: &[DrugRecord], threshold: u8, lexicon: &BrandLexicon) -> DrugIndex {
    let mut groups: BTreeMap<String, (u64, BTreeSet<&str>)> = BTreeMap::new();
    let mut skipped = 0;
    for r in records {
        let Ok(clean) = clean_name(&r.name, lexicon) else {
            skipped += 1;
            continue;
        };
        let group = groups.entry(clean.text).or_default();
        group.0 += 1;
        if !r.manufacturer.trim().is_empty() {
            group.1.insert(r.manufacturer.as_str());
        }
    }
    let entries = groups
        .into_iter()
        .map(|(name, (count, makers))| {
            let manufacturers = dedup_manufacturers(makers, threshold);
            (name, IndexEntry { count, manufacturers })
        })
        .collect();
    DrugIndex { entries, skipped }
}

/// Exact lookup of the cleaned query name.
pub fn query(index: &DrugIndex, name: &str, lexicon: &BrandLexicon) -> InfoReport {
    let clean = clean_name(name, lexicon).ok().map(|c| c.text);
    let entry = clean.as_deref().and_then(|c| index.get(c));
    let mut report = InfoReport {
        name: name.to_string(),
        clean_name: clean,
        popularity: 0,
        manufacturer_count: 0,
        raw_manufacturer_count: 0,
        duplicated_groups: Vec::new(),
        manufacturers: Vec::new(),
    };
    if let Some(e) = entry {
        report.popularity = e.count;
        report.manufacturer_count = e.manufacturers.len();
        report.raw_manufacturer_count = e.manufacturers.member_count();
        report.duplicated_groups = e.manufacturers.duplicates().cloned().collect();
        report.manufacturers = e.manufacturers.unique().map(str::to_string).collect();
    }
    report
}
