//! Approval-number consistency checks on matched pairs.
//!
//! A matched pair should carry one approval number. When the two sides
//! disagree only on whether the type letter is `Z`, the name classifier
//! decides which side is right. Every other disagreement goes to manual
//! review.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::NBModel;
use crate::matcher::{predict_batch, MatchDecision, MatcherConfig};
use crate::records::{drug_type_of, ApprovalNumber, DrugType, MatchLabel, RecordPair};
use crate::textnorm::BrandLexicon;

pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InconsistencyKind {
    /// Exactly one side has a `Z` letter.
    Znz,
    SameLetterDigitMismatch,
    /// Two different non-`Z` letters.
    OtherLetterMismatch,
    /// At least one side fails to parse.
    Unparseable,
}

impl InconsistencyKind {
    pub const ALL: [InconsistencyKind; 4] = [
        InconsistencyKind::Znz,
        InconsistencyKind::SameLetterDigitMismatch,
        InconsistencyKind::OtherLetterMismatch,
        InconsistencyKind::Unparseable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InconsistencyKind::Znz => "znz",
            InconsistencyKind::SameLetterDigitMismatch => "same_letter_digit_mismatch",
            InconsistencyKind::OtherLetterMismatch => "other_letter_mismatch",
            InconsistencyKind::Unparseable => "unparseable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    AutoCorrected,
    ManualReview,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionResult {
    pub kind: InconsistencyKind,
    pub action: Action,
    pub chosen: Option<ApprovalNumber>,
    /// Classifier posterior of the predicted type; 0 when the classifier was
    /// not consulted.
    pub confidence: f64,
    pub predicted_type: Option<DrugType>,
}

impl CorrectionResult {
    fn manual(kind: InconsistencyKind) -> Self {
        Self {
            kind,
            action: Action::ManualReview,
            chosen: None,
            confidence: 0.0,
            predicted_type: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrectionError {
    #[error("approval consistency is only checked on matched pairs")]
    NotAMatch,
}

/// Classifies how the two approval numbers of a matched pair disagree;
/// `None` when they parse and are identical.
pub fn detect_inconsistency(
    pair: &RecordPair,
    label: MatchLabel,
) -> Result<Option<InconsistencyKind>, CorrectionError> {
    if !label.is_match() {
        return Err(CorrectionError::NotAMatch);
    }
    let (Some(a), Some(b)) = (pair.source1.approval(), pair.source2.approval()) else {
        return Ok(Some(InconsistencyKind::Unparseable));
    };
    Ok(classify_pair(a, b))
}

fn classify_pair(a: ApprovalNumber, b: ApprovalNumber) -> Option<InconsistencyKind> {
    if a == b {
        None
    } else if drug_type_of(&a) != drug_type_of(&b) {
        Some(InconsistencyKind::Znz)
    } else if a.letter() == b.letter() {
        Some(InconsistencyKind::SameLetterDigitMismatch)
    } else {
        Some(InconsistencyKind::OtherLetterMismatch)
    }
}

/// Resolves an inconsistency found by [`detect_inconsistency`]. Only `Z`
/// versus non-`Z` conflicts are ever auto-corrected, and the chosen number is
/// always one of the pair's own.
pub fn correct(
    pair: &RecordPair,
    kind: InconsistencyKind,
    model: &NBModel,
    lexicon: &BrandLexicon,
    min_confidence: f64,
) -> CorrectionResult {
    if kind != InconsistencyKind::Znz {
        return CorrectionResult::manual(kind);
    }
    let (Some(a), Some(b)) = (pair.source1.approval(), pair.source2.approval()) else {
        return CorrectionResult::manual(InconsistencyKind::Unparseable);
    };
    let prediction = model
        .predict_name(&pair.source1.name, lexicon)
        .or_else(|| model.predict_name(&pair.source2.name, lexicon));
    let Some(prediction) = prediction else {
        return CorrectionResult::manual(kind);
    };

    let predicted = prediction.drug_type;
    let confidence = prediction.confidence();
    let agreeing = if drug_type_of(&a) == predicted { a } else { b };
    let confident = confidence >= min_confidence;
    CorrectionResult {
        kind,
        action: if confident {
            Action::AutoCorrected
        } else {
            Action::ManualReview
        },
        chosen: confident.then_some(agreeing),
        confidence,
        predicted_type: Some(predicted),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineEntry {
    pub index: usize,
    pub decision: MatchDecision,
    /// Set only for predicted matches.
    pub inconsistency: Option<InconsistencyKind>,
    pub correction: Option<CorrectionResult>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub znz: usize,
    pub same_letter_digit_mismatch: usize,
    pub other_letter_mismatch: usize,
    pub unparseable: usize,
}

impl KindCounts {
    fn bump(&mut self, kind: InconsistencyKind) {
        match kind {
            InconsistencyKind::Znz => self.znz += 1,
            InconsistencyKind::SameLetterDigitMismatch => self.same_letter_digit_mismatch += 1,
            InconsistencyKind::OtherLetterMismatch => self.other_letter_mismatch += 1,
            InconsistencyKind::Unparseable => self.unparseable += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.znz + self.same_letter_digit_mismatch + self.other_letter_mismatch + self.unparseable
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub pairs: usize,
    pub matches: usize,
    pub inconsistencies: usize,
    pub by_kind: KindCounts,
    pub auto_corrected: usize,
    pub manual_review: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub entries: Vec<PipelineEntry>,
    pub summary: PipelineSummary,
}

/// Match prediction over every pair, then consistency checking and
/// correction on the predicted matches.
pub fn run_pipeline(
    pairs: &[RecordPair],
    matcher_cfg: &MatcherConfig,
    model: &NBModel,
    lexicon: &BrandLexicon,
    min_confidence: f64,
) -> PipelineReport {
    let decisions = predict_batch(pairs, matcher_cfg, lexicon);
    let entries: Vec<PipelineEntry> = pairs
        .par_iter()
        .zip(decisions)
        .enumerate()
        .map(|(index, (pair, decision))| {
            let inconsistency = detect_inconsistency(pair, decision.label).ok().flatten();
            let correction = inconsistency.map(|kind| correct(pair, kind, model, lexicon, min_confidence));
            PipelineEntry {
                index,
                decision,
                inconsistency,
                correction,
            }
        })
        .collect();

    let mut summary = PipelineSummary {
        pairs: pairs.len(),
        ..Default::default()
    };
    for e in &entries {
        if e.decision.label.is_match() {
            summary.matches += 1;
        }
        if let Some(c) = &e.correction {
            summary.inconsistencies += 1;
            summary.by_kind.bump(c.kind);
            match c.action {
                Action::AutoCorrected => summary.auto_corrected += 1,
                Action::ManualReview => summary.manual_review += 1,
            }
        }
    }
    PipelineReport { entries, summary }
}
