//! Edit distance, a 0-100 similarity ratio, and manufacturer deduplication.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_THRESHOLD: u8 = 90;

/// Levenshtein distance over Unicode code points, unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

pub fn levenshtein_chars<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[b.len()]
}

/// Similarity in `[0, 100]`, 100 only for equal strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimilarityRatio(u8);

impl SimilarityRatio {
    pub fn value(self) -> u8 {
        self.0
    }
}

/// `round(100 * (1 - d / max(|a|, |b|)))`, rounding half away from zero,
/// computed in integers.
pub fn similarity_ratio(a: &str, b: &str) -> SimilarityRatio {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    ratio_chars(&a, &b)
}

fn ratio_chars(a: &[char], b: &[char]) -> SimilarityRatio {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return SimilarityRatio(100);
    }
    let same = longest - levenshtein_chars(a, b);
    let mut value = (200 * same + longest) / (2 * longest);
    // Rounding can lift 99.5 and above to 100 for long, unequal strings.
    if value == 100 && same != longest {
        value = 99;
    }
    SimilarityRatio(value as u8)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    /// Lexicographically smallest member.
    pub representative: String,
    /// Sorted members, representative first.
    pub members: Vec<String>,
}

impl Cluster {
    pub fn is_duplicate_group(&self) -> bool {
        self.members.len() > 1
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManufacturerClusters {
    pub clusters: Vec<Cluster>,
}

impl ManufacturerClusters {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Clusters with at least two spellings.
    pub fn duplicates(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.is_duplicate_group())
    }

    /// One representative per cluster.
    pub fn unique(&self) -> impl Iterator<Item = &str> {
        self.clusters.iter().map(|c| c.representative.as_str())
    }

    pub fn member_count(&self) -> usize {
        self.clusters.iter().map(|c| c.members.len()).sum()
    }
}

/// Disjoint-set forest with path compression and union by rank.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] = self.rank[a].saturating_add(1);
        }
        true
    }
}

/// Clusters names whose pairwise ratio is strictly greater than `threshold`,
/// closing transitively. Output is sorted by representative.
pub fn dedup_manufacturers<I, S>(names: I, threshold: u8) -> ManufacturerClusters
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let names: Vec<String> = names
        .into_iter()
        .map(|s| s.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let chars: Vec<Vec<char>> = names.iter().map(|n| n.chars().collect()).collect();

    let edges: Vec<(usize, usize)> = (0..names.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let chars = &chars;
            ((i + 1)..chars.len())
                .filter_map(move |j| (ratio_chars(&chars[i], &chars[j]).value() > threshold).then_some((i, j)))
        })
        .collect();

    let mut sets = DisjointSet::new(names.len());
    for (i, j) in edges {
        sets.union(i, j);
    }

    // Names are sorted, so each group's first member is its smallest.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root = vec![usize::MAX; names.len()];
    for i in 0..names.len() {
        let root = sets.find(i);
        if group_of_root[root] == usize::MAX {
            group_of_root[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[group_of_root[root]].push(i);
    }
    let clusters = groups
        .into_iter()
        .map(|idx| {
            let members: Vec<String> = idx.into_iter().map(|i| names[i].clone()).collect();
            Cluster {
                representative: members[0].clone(),
                members,
            }
        })
        .collect();
    ManufacturerClusters { clusters }
}
