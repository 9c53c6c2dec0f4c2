//! Exact rational-arithmetic oracle for the multinomial Naive Bayes model.
//!
//! Corpora are drawn from a fixed enumeration over five tokens: every
//! two-document corpus exhaustively, then a deterministic sweep of corpora
//! with three to eight documents. Each is fitted at several smoothing values
//! and every posterior is compared with the exact value.

use std::collections::BTreeMap;

use drugmatch::bayes::{build_vocabulary, fit, LabeledName, NBModel};
use drugmatch::textnorm::TokenSeq;
use drugmatch::DrugType;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

pub const TOKENS: [&str; 5] = ["a", "b", "c", "d", "e"];
/// Smoothing values exactly representable as both f64 and rationals.
pub const ALPHAS: [(i64, i64); 3] = [(1, 1), (1, 2), (2, 1)];
pub const TOL: f64 = 1e-9;

pub struct NbReport {
    pub corpora: usize,
    pub fits: usize,
    pub posteriors_checked: usize,
    pub max_posterior_error: f64,
    pub failures: Vec<String>,
}

/// Every non-empty multiset of at most two tokens: 5 singles and 15 pairs.
pub fn document_catalog() -> Vec<Vec<&'static str>> {
    let mut docs: Vec<Vec<&str>> = TOKENS.iter().map(|t| vec![*t]).collect();
    for (i, a) in TOKENS.iter().enumerate() {
        for b in &TOKENS[i..] {
            docs.push(vec![*a, *b]);
        }
    }
    docs
}

fn labeled(doc: &[&str], klass: DrugType) -> LabeledName {
    LabeledName {
        tokens: TokenSeq(doc.iter().map(|t| t.to_string()).collect()),
        klass,
    }
}

/// Deterministic 64-bit mixer used to walk the corpus space.
fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// The fixed corpus enumeration. Every corpus has both classes.
pub fn corpora(per_size: usize) -> Vec<Vec<LabeledName>> {
    let catalog = document_catalog();
    let labeled_docs: Vec<LabeledName> = catalog
        .iter()
        .flat_map(|d| DrugType::ALL.map(|t| labeled(d, t)))
        .collect();
    let has_both = |c: &[LabeledName]| DrugType::ALL.iter().all(|t| c.iter().any(|d| d.klass == *t));

    let mut out = Vec::new();
    for a in &labeled_docs {
        for b in &labeled_docs {
            let c = vec![a.clone(), b.clone()];
            if has_both(&c) {
                out.push(c);
            }
        }
    }
    for size in 3..=8u64 {
        let mut k = 0u64;
        let mut made = 0;
        while made < per_size {
            let c: Vec<LabeledName> = (0..size)
                .map(|slot| {
                    let h = splitmix(size << 48 ^ k << 8 ^ slot);
                    labeled_docs[(h % labeled_docs.len() as u64) as usize].clone()
                })
                .collect();
            k += 1;
            if has_both(&c) {
                out.push(c);
                made += 1;
            }
        }
    }
    out
}

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite rational")
}

/// Exact class-conditional model: priors and smoothed likelihoods per class.
struct ExactModel {
    vocab: Vec<String>,
    prior: [BigRational; 2],
    likelihood: [BTreeMap<String, BigRational>; 2],
}

fn exact_fit(corpus: &[LabeledName], alpha: &BigRational) -> ExactModel {
    let mut vocab: Vec<String> = corpus.iter().flat_map(|d| d.tokens.0.iter().cloned()).collect();
    vocab.sort();
    vocab.dedup();
    let v = BigRational::from_integer(BigInt::from(vocab.len()));
    let n = corpus.len() as i64;
    let prior = DrugType::ALL.map(|t| {
        let nc = corpus.iter().filter(|d| d.klass == t).count() as i64;
        rational(nc, n)
    });
    let likelihood = DrugType::ALL.map(|t| {
        let mut counts: BTreeMap<&str, i64> = BTreeMap::new();
        for d in corpus.iter().filter(|d| d.klass == t) {
            for tok in &d.tokens.0 {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let total: i64 = counts.values().sum();
        let denom = BigRational::from_integer(BigInt::from(total)) + alpha * &v;
        vocab
            .iter()
            .map(|tok| {
                let c = BigRational::from_integer(BigInt::from(*counts.get(tok.as_str()).unwrap_or(&0)));
                (tok.clone(), (c + alpha) / &denom)
            })
            .collect()
    });
    ExactModel {
        vocab,
        prior,
        likelihood,
    }
}

fn exact_posterior(m: &ExactModel, query: &[&str]) -> [BigRational; 2] {
    let joint = DrugType::ALL.map(|t| {
        let c = t.index();
        let mut p = m.prior[c].clone();
        for tok in query {
            if let Some(l) = m.likelihood[c].get(*tok) {
                p *= l;
            }
        }
        p
    });
    let z = &joint[0] + &joint[1];
    joint.map(|j| j / &z)
}

fn check_invariants(model: &NBModel, exact: &ExactModel, failures: &mut Vec<String>, tag: &str) {
    let prior_sum: f64 = DrugType::ALL.iter().map(|t| model.log_prior(*t).exp()).sum();
    if (prior_sum - 1.0).abs() > 1e-12 {
        failures.push(format!("{tag}: priors sum to {prior_sum}"));
    }
    let vocab = model.vocabulary();
    if vocab.tokens() != exact.vocab.as_slice() {
        failures.push(format!("{tag}: vocabulary {:?} != {:?}", vocab.tokens(), exact.vocab));
        return;
    }
    for t in DrugType::ALL {
        let c = t.index();
        if (model.log_prior(t) - to_f64(&exact.prior[c]).ln()).abs() > 1e-12 {
            failures.push(format!("{tag}: log prior of {t} off"));
        }
        let mut sum = 0.0;
        for (id, tok) in exact.vocab.iter().enumerate() {
            let ll = model.log_likelihood(t, id);
            sum += ll.exp();
            if (ll - to_f64(&exact.likelihood[c][tok]).ln()).abs() > 1e-12 {
                failures.push(format!("{tag}: log likelihood of {tok} in {t} off"));
            }
        }
        if (sum - 1.0).abs() > 1e-12 {
            failures.push(format!("{tag}: likelihoods of {t} sum to {sum}"));
        }
    }
}

/// Queries: every catalog document, the empty document, and one holding a
/// token the vocabulary never saw.
fn queries() -> Vec<Vec<&'static str>> {
    let mut q = document_catalog();
    q.push(vec![]);
    q.push(vec!["zz", "a"]);
    q.push(vec!["a", "a", "b", "c", "c", "c"]);
    q
}

pub fn run(per_size: usize) -> NbReport {
    let corpora = corpora(per_size);
    let queries = queries();
    let mut report = NbReport {
        corpora: corpora.len(),
        fits: 0,
        posteriors_checked: 0,
        max_posterior_error: 0.0,
        failures: Vec::new(),
    };
    for (ci, corpus) in corpora.iter().enumerate() {
        for &(an, ad) in &ALPHAS {
            let tag = format!("corpus {ci} alpha {an}/{ad}");
            let vocab = build_vocabulary(corpus).expect("non-empty corpus");
            let model = match fit(corpus, vocab, an as f64 / ad as f64) {
                Ok(m) => m,
                Err(e) => {
                    report.failures.push(format!("{tag}: fit failed: {e}"));
                    continue;
                }
            };
            report.fits += 1;
            let exact = exact_fit(corpus, &rational(an, ad));
            check_invariants(&model, &exact, &mut report.failures, &tag);

            for q in &queries {
                let want = exact_posterior(&exact, q);
                let got = model.predict(&TokenSeq(q.iter().map(|t| t.to_string()).collect()));
                for t in DrugType::ALL {
                    let err = (got.posterior_of(t) - to_f64(&want[t.index()])).abs();
                    report.max_posterior_error = report.max_posterior_error.max(err);
                    if err > TOL {
                        report
                            .failures
                            .push(format!("{tag} query {q:?}: posterior of {t} off by {err:e}"));
                    }
                }
                let diff = &want[DrugType::TraditionalChinese.index()] - &want[DrugType::Western.index()];
                let expected = if diff >= BigRational::zero() {
                    DrugType::TraditionalChinese
                } else {
                    DrugType::Western
                };
                // Exact ties may land either way once logs are rounded.
                let decisive = to_f64(&diff).abs() > TOL;
                if decisive && got.drug_type != expected {
                    report
                        .failures
                        .push(format!("{tag} query {q:?}: predicted {}", got.drug_type));
                }
                report.posteriors_checked += 1;
            }
        }
    }
    report
}
