//! Drug-product record linkage across two catalog sources.
//!
//! - [`matcher`] predicts whether a pair of records describes the same
//!   product, from cleaned names, parsed strengths and pack sizes.
//! - [`correction`] resolves conflicting approval numbers on matched pairs,
//!   using the [`bayes`] name classifier for Z versus non-Z conflicts.
//! - [`druginfo`] answers "how common is this drug, and who makes it".
//!
//! [`synth`] generates seeded corpora with known ground truth.

pub mod bayes;
pub mod correction;
pub mod dosage;
pub mod druginfo;
pub mod fuzzy;
pub mod matcher;
pub mod records;
pub mod synth;
pub mod textnorm;

pub use records::{ApprovalNumber, DrugRecord, DrugType, MatchLabel, RecordPair};
