//! Rule-based match prediction for record pairs and evaluation metrics.
//!
//! Rules, in order: cleaned names must be similar; strengths must agree when
//! both sides state one; package totals must agree when both sides state
//! one. A missing strength (or package) on one side falls back to the other
//! axis.

use rayon::prelude::*;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dosage::{self, normalize_strength, package_equal, parse_dosage, strength_equal, Strength};
use crate::fuzzy::similarity_ratio;
use crate::records::{MatchLabel, RecordPair};
use crate::textnorm::{clean_name, BrandLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    AllRulesPass,
    DosageFallbackPass,
    StrengthMismatch,
    PackageMismatch,
    NameDissimilar,
    InsufficientEvidence,
}

impl Reason {
    pub fn label(self) -> MatchLabel {
        MatchLabel::from(matches!(self, Reason::AllRulesPass | Reason::DosageFallbackPass))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Reason::AllRulesPass => "all_rules_pass",
            Reason::DosageFallbackPass => "dosage_fallback_pass",
            Reason::StrengthMismatch => "strength_mismatch",
            Reason::PackageMismatch => "package_mismatch",
            Reason::NameDissimilar => "name_dissimilar",
            Reason::InsufficientEvidence => "insufficient_evidence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatcherConfig {
    pub name_threshold: u8,
    pub require_quantity_evidence: bool,
    pub strength_rel_tol: Decimal,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self {
            name_threshold: 90,
            require_quantity_evidence: true,
            strength_rel_tol: dosage::default_rel_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("name threshold {0} is outside 0..=100")]
    NameThreshold(u8),
    #[error("strength tolerance must be non-negative")]
    Tolerance,
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name_threshold > 100 {
            return Err(ConfigError::NameThreshold(self.name_threshold));
        }
        if self.strength_rel_tol < Decimal::ZERO {
            return Err(ConfigError::Tolerance);
        }
        Ok(())
    }
}

/// What the rules looked at for one side of a pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideEvidence {
    pub clean_name: Option<String>,
    /// Strength rescaled to its canonical unit.
    pub strength: Option<Strength>,
    pub package_total: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchDecision {
    pub label: MatchLabel,
    pub reason: Reason,
    pub name_ratio: Option<u8>,
    pub source1: SideEvidence,
    pub source2: SideEvidence,
}

impl MatchDecision {
    fn new(reason: Reason, name_ratio: Option<u8>, source1: SideEvidence, source2: SideEvidence) -> Self {
        Self {
            label: reason.label(),
            reason,
            name_ratio,
            source1,
            source2,
        }
    }
}

pub fn predict_label(pair: &RecordPair, cfg: &MatcherConfig, lexicon: &BrandLexicon) -> MatchDecision {
    let clean1 = clean_name(&pair.source1.name, lexicon).ok();
    let clean2 = clean_name(&pair.source2.name, lexicon).ok();
    let mut ev1 = SideEvidence {
        clean_name: clean1.map(|c| c.text),
        ..Default::default()
    };
    let mut ev2 = SideEvidence {
        clean_name: clean2.map(|c| c.text),
        ..Default::default()
    };

    let ratio = match (&ev1.clean_name, &ev2.clean_name) {
        (Some(a), Some(b)) => similarity_ratio(a, b).value(),
        _ => return MatchDecision::new(Reason::NameDissimilar, None, ev1, ev2),
    };
    if ratio < cfg.name_threshold {
        return MatchDecision::new(Reason::NameDissimilar, Some(ratio), ev1, ev2);
    }

    let d1 = parse_dosage(&pair.source1.dosage_raw);
    let d2 = parse_dosage(&pair.source2.dosage_raw);
    ev1.strength = d1.strength.map(normalize_strength);
    ev2.strength = d2.strength.map(normalize_strength);
    ev1.package_total = d1.package.as_ref().map(|p| p.total());
    ev2.package_total = d2.package.as_ref().map(|p| p.total());

    let strengths = match (d1.strength, d2.strength) {
        (Some(a), Some(b)) => Some(strength_equal(a, b, cfg.strength_rel_tol)),
        _ => None,
    };
    let packages = match (&d1.package, &d2.package) {
        (Some(a), Some(b)) => Some(package_equal(a, b)),
        _ => None,
    };

    let reason = match (strengths, packages) {
        (Some(false), _) => Reason::StrengthMismatch,
        (_, Some(false)) => Reason::PackageMismatch,
        (Some(true), Some(true)) => Reason::AllRulesPass,
        (None, Some(true)) | (Some(true), None) => Reason::DosageFallbackPass,
        (None, None) if cfg.require_quantity_evidence => Reason::InsufficientEvidence,
        (None, None) => Reason::DosageFallbackPass,
    };
    MatchDecision::new(reason, Some(ratio), ev1, ev2)
}

/// Element-wise [`predict_label`], in input order.
pub fn predict_batch(pairs: &[RecordPair], cfg: &MatcherConfig, lexicon: &BrandLexicon) -> Vec<MatchDecision> {
    pairs.par_iter().map(|p| predict_label(p, cfg, lexicon)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn record(&mut self, predicted_positive: bool, actual_positive: bool) {
        match (predicted_positive, actual_positive) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Absent when nothing was predicted positive.
    pub precision: Option<f64>,
    /// Absent when there are no actual positives.
    pub recall: Option<f64>,
    pub confusion: Confusion,
}

impl Metrics {
    pub fn from_confusion(confusion: Confusion) -> Self {
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        let c = confusion;
        Self {
            accuracy: ratio(c.tp + c.tn, c.total()).unwrap_or(0.0),
            precision: ratio(c.tp, c.tp + c.fp),
            recall: ratio(c.tp, c.tp + c.fn_),
            confusion,
        }
    }

    /// From `(predicted_positive, actual_positive)` outcomes.
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Confusion::default();
        for (p, a) in outcomes {
            c.record(p, a);
        }
        Self::from_confusion(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{pred} predictions but {gold} gold labels")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("nothing to evaluate")]
    Empty,
}

/// Metrics with `Match` as the positive class.
pub fn evaluate(pred: &[MatchLabel], gold: &[MatchLabel]) -> Result<Metrics, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(Metrics::from_outcomes(
        pred.iter().zip(gold).map(|(p, g)| (p.is_match(), g.is_match())),
    ))
}
