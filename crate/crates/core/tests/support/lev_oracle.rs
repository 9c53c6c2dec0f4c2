//! Exhaustive check of `levenshtein` against the textbook recursive
//! definition, memoized over string ids.
//!
//! Strings are ordered by length, so the tail of every string (all but its
//! first character) has a smaller id and is already filled in the table.

use drugmatch::fuzzy::levenshtein;

pub struct LevReport {
    pub strings: usize,
    pub pairs: u64,
    pub mismatches: u64,
    /// First few disagreements as (a, b, got, want).
    pub examples: Vec<(String, String, usize, usize)>,
}

/// All strings over `alphabet` of length `0..=max_len`, shortest first.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut start = 0;
    for _ in 0..max_len {
        let end = out.len();
        for i in start..end {
            for &c in alphabet {
                let mut s = String::with_capacity(max_len);
                s.push(c);
                s.push_str(&out[i]);
                out.push(s);
            }
        }
        start = end;
    }
    out
}

/// Table of recursive edit distances between every pair of `strings`.
fn recursive_table(strings: &[String]) -> Vec<u8> {
    let n = strings.len();
    let index: std::collections::HashMap<&str, usize> =
        strings.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let head: Vec<Option<char>> = strings.iter().map(|s| s.chars().next()).collect();
    let tail: Vec<usize> = strings
        .iter()
        .map(|s| {
            let mut cs = s.chars();
            cs.next();
            index[cs.as_str()]
        })
        .collect();
    let len: Vec<u8> = strings.iter().map(|s| s.chars().count() as u8).collect();

    let mut d = vec![0u8; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = match (head[i], head[j]) {
                (None, _) => len[j],
                (_, None) => len[i],
                (Some(a), Some(b)) => {
                    let (ti, tj) = (tail[i], tail[j]);
                    if a == b {
                        d[ti * n + tj]
                    } else {
                        1 + d[ti * n + j].min(d[i * n + tj]).min(d[ti * n + tj])
                    }
                }
            };
        }
    }
    d
}

pub fn run(alphabet: &[char], max_len: usize) -> LevReport {
    let strings = all_strings(alphabet, max_len);
    let n = strings.len();
    let table = recursive_table(&strings);
    let mut mismatches = 0;
    let mut examples = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let got = levenshtein(&strings[i], &strings[j]);
            let want = table[i * n + j] as usize;
            if got != want {
                mismatches += 1;
                if examples.len() < 10 {
                    examples.push((strings[i].clone(), strings[j].clone(), got, want));
                }
            }
        }
    }
    LevReport {
        strings: n,
        pairs: (n * n) as u64,
        mismatches,
        examples,
    }
}
