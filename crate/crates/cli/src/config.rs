//! Optional JSON configuration file. Every key mirrors a command-line flag;
//! flags win when both are given.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use drugmatch::synth::GeneratorConfig;
use drugmatch::textnorm::TokenMode;
use rust_decimal::Decimal;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub brands: Option<PathBuf>,
    pub name_threshold: Option<u8>,
    pub require_quantity_evidence: Option<bool>,
    pub strength_rel_tol: Option<Decimal>,
    pub threshold: Option<u8>,
    pub alpha: Option<f64>,
    pub test_fraction: Option<f64>,
    pub seed: Option<u64>,
    pub token_mode: Option<TokenMode>,
    pub top_tokens: Option<usize>,
    pub min_confidence: Option<f64>,
    pub generator: Option<GeneratorConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
