//! Multinomial Naive Bayes over tokenized drug names, classifying traditional
//! Chinese versus western drugs.
//!
//! Likelihoods use additive (Laplace) smoothing:
//!
//! ```text
//! P(t | c) = (N_tc + alpha) / (N_c + alpha * |V|)
//! ```
//!
//! and scoring is done in log space. The persisted model stores raw counts
//! and recomputes probabilities on load.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{drug_type_of, DrugRecord, DrugType, RecordPair};
use crate::textnorm::{clean_name, BrandLexicon, TokenMode, TokenSeq};

pub const MODEL_FORMAT: &str = "drugmatch.nb-model/1";
const NUM_CLASSES: usize = 2;

#[derive(Debug, Error)]
pub enum BayesError {
    #[error("no training data")]
    Empty,
    #[error("class {0} has no training documents")]
    MissingClass(DrugType),
    #[error("smoothing alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("need at least 2 items to split, got {0}")]
    TooSmall(usize),
    #[error("invalid model file: {0}")]
    InvalidModel(String),
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// A drug name's tokens with the class read off its approval letter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabeledName {
    pub tokens: TokenSeq,
    pub klass: DrugType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let index: BTreeMap<String, usize> = tokens
            .into_iter()
            .map(|t| (t.into(), 0))
            .collect::<BTreeMap<_, _>>()
            .into_keys()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        let tokens = index.keys().cloned().collect();
        Self { tokens, index }
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Counts of in-vocabulary tokens; unknown tokens are dropped.
    pub fn vectorize(&self, tokens: &TokenSeq) -> CountVector {
        let mut counts = BTreeMap::new();
        for id in tokens.iter().filter_map(|t| self.id(t)) {
            *counts.entry(id).or_insert(0u64) += 1;
        }
        CountVector { counts }
    }
}

/// Sparse feature counts for one document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountVector {
    pub counts: BTreeMap<usize, u64>,
}

pub fn build_vocabulary(data: &[LabeledName]) -> Result<Vocabulary, BayesError> {
    if data.is_empty() {
        return Err(BayesError::Empty);
    }
    Ok(Vocabulary::from_tokens(data.iter().flat_map(|d| d.tokens.iter())))
}

#[derive(Debug, Clone)]
pub struct NBModel {
    vocab: Vocabulary,
    alpha: f64,
    token_mode: TokenMode,
    doc_counts: [u64; NUM_CLASSES],
    token_counts: [Vec<u64>; NUM_CLASSES],
    log_prior: [f64; NUM_CLASSES],
    log_likelihood: [Vec<f64>; NUM_CLASSES],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub drug_type: DrugType,
    /// Posterior per class, indexed by [`DrugType::index`].
    pub posterior: [f64; NUM_CLASSES],
}

impl Prediction {
    pub fn posterior_of(&self, t: DrugType) -> f64 {
        self.posterior[t.index()]
    }

    pub fn confidence(&self) -> f64 {
        self.posterior_of(self.drug_type)
    }
}

pub fn fit(data: &[LabeledName], vocab: Vocabulary, alpha: f64) -> Result<NBModel, BayesError> {
    if data.is_empty() {
        return Err(BayesError::Empty);
    }
    let mut doc_counts = [0u64; NUM_CLASSES];
    let mut token_counts = [vec![0u64; vocab.size()], vec![0u64; vocab.size()]];
    for doc in data {
        let c = doc.klass.index();
        doc_counts[c] += 1;
        for (id, n) in vocab.vectorize(&doc.tokens).counts {
            token_counts[c][id] += n;
        }
    }
    NBModel::from_counts(vocab, alpha, doc_counts, token_counts)
}

impl NBModel {
    fn from_counts(
        vocab: Vocabulary,
        alpha: f64,
        doc_counts: [u64; NUM_CLASSES],
        token_counts: [Vec<u64>; NUM_CLASSES],
    ) -> Result<Self, BayesError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(BayesError::InvalidAlpha(alpha));
        }
        if let Some(t) = DrugType::ALL.into_iter().find(|t| doc_counts[t.index()] == 0) {
            return Err(BayesError::MissingClass(t));
        }
        let n_docs: u64 = doc_counts.iter().sum();
        let log_prior = doc_counts.map(|n| (n as f64 / n_docs as f64).ln());
        let v = vocab.size() as f64;
        let log_likelihood = token_counts.clone().map(|counts| {
            let class_total: u64 = counts.iter().sum();
            let log_denom = (class_total as f64 + alpha * v).ln();
            counts.iter().map(|&n| (n as f64 + alpha).ln() - log_denom).collect()
        });
        Ok(Self {
            vocab,
            alpha,
            token_mode: TokenMode::default(),
            doc_counts,
            token_counts,
            log_prior,
            log_likelihood,
        })
    }

    /// Records how names should be tokenized before [`NBModel::predict`].
    pub fn with_token_mode(mut self, mode: TokenMode) -> Self {
        self.token_mode = mode;
        self
    }

    pub fn token_mode(&self) -> TokenMode {
        self.token_mode
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn doc_counts(&self) -> [u64; NUM_CLASSES] {
        self.doc_counts
    }

    pub fn token_count(&self, t: DrugType, feature: usize) -> u64 {
        self.token_counts[t.index()][feature]
    }

    pub fn log_prior(&self, t: DrugType) -> f64 {
        self.log_prior[t.index()]
    }

    pub fn log_likelihood(&self, t: DrugType, feature: usize) -> f64 {
        self.log_likelihood[t.index()][feature]
    }

    /// Joint log score per class; tokens outside the vocabulary are ignored.
    pub fn scores(&self, tokens: &TokenSeq) -> [f64; NUM_CLASSES] {
        let counts = self.vocab.vectorize(tokens).counts;
        std::array::from_fn(|c| {
            self.log_prior[c]
                + counts
                    .iter()
                    .map(|(&id, &n)| n as f64 * self.log_likelihood[c][id])
                    .sum::<f64>()
        })
    }

    /// Argmax class (ties go to traditional Chinese) with softmax posteriors.
    pub fn predict(&self, tokens: &TokenSeq) -> Prediction {
        let scores = self.scores(tokens);
        let wc = DrugType::Western.index();
        let tc = DrugType::TraditionalChinese.index();
        let drug_type = if scores[tc] >= scores[wc] {
            DrugType::TraditionalChinese
        } else {
            DrugType::Western
        };
        let max = scores[0].max(scores[1]);
        let exp = scores.map(|s| (s - max).exp());
        let z: f64 = exp.iter().sum();
        Prediction {
            drug_type,
            posterior: exp.map(|e| e / z),
        }
    }

    /// Cleans and tokenizes a raw name with the model's token mode. `None`
    /// when cleaning leaves nothing.
    pub fn predict_name(&self, raw: &str, lexicon: &BrandLexicon) -> Option<Prediction> {
        let clean = clean_name(raw, lexicon).ok()?;
        Some(self.predict(&clean.tokens(self.token_mode)))
    }

    pub fn to_json(&self) -> Result<String, BayesError> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            alpha: self.alpha,
            token_mode: self.token_mode,
            classes: DrugType::ALL.to_vec(),
            doc_counts: self.doc_counts.to_vec(),
            vocabulary: self.vocab.tokens.clone(),
            token_counts: self.token_counts.to_vec(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self, BayesError> {
        let file: ModelFile = serde_json::from_str(text)?;
        let invalid = |m: &str| BayesError::InvalidModel(m.to_string());
        if file.format != MODEL_FORMAT {
            return Err(BayesError::InvalidModel(format!(
                "unsupported format tag {:?}",
                file.format
            )));
        }
        if file.classes != DrugType::ALL {
            return Err(invalid("unexpected class list"));
        }
        let vocab = Vocabulary::from_tokens(file.vocabulary.iter().cloned());
        if vocab.tokens != file.vocabulary {
            return Err(invalid("vocabulary must be sorted and duplicate-free"));
        }
        let doc_counts: [u64; NUM_CLASSES] = file
            .doc_counts
            .try_into()
            .map_err(|_| invalid("doc_counts needs two entries"))?;
        let token_counts: [Vec<u64>; NUM_CLASSES] = file
            .token_counts
            .try_into()
            .map_err(|_| invalid("token_counts needs two rows"))?;
        if token_counts.iter().any(|row| row.len() != vocab.size()) {
            return Err(invalid("token_counts rows must match the vocabulary size"));
        }
        Ok(Self::from_counts(vocab, file.alpha, doc_counts, token_counts)?.with_token_mode(file.token_mode))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    alpha: f64,
    token_mode: TokenMode,
    classes: Vec<DrugType>,
    doc_counts: Vec<u64>,
    vocabulary: Vec<String>,
    token_counts: Vec<Vec<u64>>,
}

fn labeled(record: &DrugRecord, lexicon: &BrandLexicon, mode: TokenMode) -> Option<LabeledName> {
    let approval = record.approval()?;
    let clean = clean_name(&record.name, lexicon).ok()?;
    Some(LabeledName {
        tokens: clean.tokens(mode),
        klass: drug_type_of(&approval),
    })
}

/// Training examples from both sides of every pair, classed by approval
/// letter. Pairs whose letters disagree on Z versus non-Z are skipped unless
/// they are known non-matches; exact duplicates are kept once.
pub fn derive_training_labels(pairs: &[RecordPair], lexicon: &BrandLexicon, mode: TokenMode) -> Vec<LabeledName> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for pair in pairs {
        let types = (pair.source1.approval(), pair.source2.approval());
        if let (Some(a), Some(b)) = types {
            let disputed = drug_type_of(&a) != drug_type_of(&b);
            let known_distinct = pair.gold_label.is_some_and(|l| !l.is_match());
            if disputed && !known_distinct {
                continue;
            }
        }
        for record in [&pair.source1, &pair.source2] {
            if let Some(item) = labeled(record, lexicon, mode) {
                if seen.insert(item.clone()) {
                    out.push(item);
                }
            }
        }
    }
    out
}

/// Seeded shuffle, then the first `round(fraction * n)` items (at least one,
/// at most `n - 1`) become the test set.
pub fn train_test_split<T: Clone>(data: &[T], test_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), BayesError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(BayesError::InvalidFraction(test_fraction));
    }
    let n = data.len();
    if n < 2 {
        return Err(BayesError::TooSmall(n));
    }
    let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order[..n_test].iter().map(|&i| data[i].clone()).collect();
    let train = order[n_test..].iter().map(|&i| data[i].clone()).collect();
    Ok((train, test))
}

/// The `k` most frequent tokens per class, by count descending then token
/// ascending.
pub fn top_tokens(data: &[LabeledName], k: usize) -> Vec<(DrugType, Vec<(String, u64)>)> {
    DrugType::ALL
        .into_iter()
        .rev()
        .map(|t| {
            let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
            for doc in data.iter().filter(|d| d.klass == t) {
                for tok in doc.tokens.iter() {
                    *counts.entry(tok).or_default() += 1;
                }
            }
            let mut ranked: Vec<(String, u64)> = counts.into_iter().map(|(s, n)| (s.to_string(), n)).collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ranked.truncate(k);
            (t, ranked)
        })
        .collect()
}
