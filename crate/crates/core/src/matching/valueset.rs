//! Value-set similarity via a greedy one-to-one value mapping and its
//! monogamy score.
//!
//! Candidate value pairs are all exact matches plus fuzzy pairs
//! (`lev_sim >= tau_value_pair`) between values that have no exact
//! counterpart on the other side. Exact pairs are always accepted first;
//! fuzzy pairs are then taken greedily by descending similarity with a
//! lexicographic tie-break on the unordered pair. The score is
//! `coverage × monogamy` with `coverage = 2|M| / (|v1| + |v2|)` and
//! `monogamy = |M| / |P|`.

use std::cmp::Ordering;

use crate::corpus::ValueSet;

use super::kernels::{levenshtein_within, max_distance_for, sim_from_distance};

/// A value set preprocessed for repeated comparisons.
#[derive(Clone, Debug)]
pub struct PreparedValues {
    /// Canonical values in ascending order.
    values: Vec<String>,
    chars: Vec<Box<[char]>>,
    masks: Vec<u64>,
}

impl PreparedValues {
    pub fn new(vs: &ValueSet) -> Self {
        Self::from_sorted(vs.values.iter().cloned().collect())
    }

    fn from_sorted(values: Vec<String>) -> Self {
        let chars: Vec<Box<[char]>> = values.iter().map(|v| v.chars().collect()).collect();
        let masks = chars.iter().map(|c| char_mask(c)).collect();
        PreparedValues {
            values,
            chars,
            masks,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }
}

/// Bit per character bucket. One edit changes at most two buckets, so
/// `popcount(a ^ b) / 2` bounds the edit distance from below.
fn char_mask(chars: &[char]) -> u64 {
    chars.iter().fold(0u64, |m, &c| m | 1u64 << (c as u32 % 64))
}

/// Breakdown of one value-set comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ValueSetScore {
    /// `|P|`: exact plus fuzzy candidate pairs.
    pub candidate_pairs: usize,
    pub exact_pairs: usize,
    /// `|M|`: size of the one-to-one mapping.
    pub mapped: usize,
    pub coverage: f64,
    pub monogamy: f64,
    pub similarity: f64,
}

/// A fuzzy value pair: indices into the two sorted value lists.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Fuzzy {
    pub sim: f64,
    pub i: usize,
    pub j: usize,
}

pub fn value_set_similarity(v1: &ValueSet, v2: &ValueSet, tau_value_pair: f64) -> f64 {
    score(&PreparedValues::new(v1), &PreparedValues::new(v2), tau_value_pair).similarity
}

pub fn value_set_score(v1: &ValueSet, v2: &ValueSet, tau_value_pair: f64) -> ValueSetScore {
    score(&PreparedValues::new(v1), &PreparedValues::new(v2), tau_value_pair)
}

pub fn score(a: &PreparedValues, b: &PreparedValues, tau: f64) -> ValueSetScore {
    if a.is_empty() || b.is_empty() {
        return ValueSetScore::default();
    }
    let (used_a, used_b, exact) = exact_pairs(a, b);

    let mut rest_b: Vec<usize> = (0..b.len()).filter(|&j| !used_b[j]).collect();
    rest_b.sort_by_key(|&j| b.chars[j].len());
    let mut fuzzy = Vec::new();
    if !rest_b.is_empty() {
        for i in (0..a.len()).filter(|&i| !used_a[i]) {
            let x = &a.chars[i];
            let lx = x.len();
            let start = rest_b.partition_point(|&j| {
                let ly = b.chars[j].len();
                ly < lx && !length_ok(tau, lx, ly)
            });
            for &j in &rest_b[start..] {
                let y = &b.chars[j];
                let ly = y.len();
                if ly > lx && !length_ok(tau, lx, ly) {
                    break;
                }
                let max_len = lx.max(ly);
                let Some(k) = max_distance_for(tau, max_len) else {
                    continue;
                };
                let lower = ((a.masks[i] ^ b.masks[j]).count_ones() as usize).div_ceil(2);
                if lower > k || lx.abs_diff(ly) > k {
                    continue;
                }
                if let Some(d) = levenshtein_within(x, y, k) {
                    fuzzy.push(Fuzzy {
                        sim: sim_from_distance(d, max_len),
                        i,
                        j,
                    });
                }
            }
        }
    }
    finish(a, b, used_a, used_b, exact, fuzzy)
}

/// Scores with fuzzy pairs supplied by the caller, e.g. from a corpus-wide
/// join. `candidates` may include pairs touching exactly matched values;
/// those are dropped here. The result equals [`score`] whenever
/// `candidates` holds every pair above the threshold.
pub(crate) fn score_with_candidates(a: &PreparedValues, b: &PreparedValues, candidates: &[Fuzzy]) -> ValueSetScore {
    if a.is_empty() || b.is_empty() {
        return ValueSetScore::default();
    }
    let (used_a, used_b, exact) = exact_pairs(a, b);
    let fuzzy = candidates
        .iter()
        .filter(|f| !used_a[f.i] && !used_b[f.j])
        .copied()
        .collect();
    finish(a, b, used_a, used_b, exact, fuzzy)
}

fn exact_pairs(a: &PreparedValues, b: &PreparedValues) -> (Vec<bool>, Vec<bool>, usize) {
    let (n1, n2) = (a.len(), b.len());
    let mut used_a = vec![false; n1];
    let mut used_b = vec![false; n2];
    let (mut i, mut j, mut exact) = (0, 0, 0);
    while i < n1 && j < n2 {
        match a.values[i].cmp(&b.values[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                used_a[i] = true;
                used_b[j] = true;
                exact += 1;
                i += 1;
                j += 1;
            }
        }
    }
    (used_a, used_b, exact)
}

fn finish(
    a: &PreparedValues,
    b: &PreparedValues,
    mut used_a: Vec<bool>,
    mut used_b: Vec<bool>,
    exact: usize,
    mut fuzzy: Vec<Fuzzy>,
) -> ValueSetScore {
    let (n1, n2) = (a.len(), b.len());
    let candidates = exact + fuzzy.len();
    fuzzy.sort_by(|p, q| {
        q.sim
            .total_cmp(&p.sim)
            .then_with(|| unordered_key(a, b, p).cmp(&unordered_key(a, b, q)))
            .then_with(|| (p.i, p.j).cmp(&(q.i, q.j)))
    });
    let mut mapped = exact;
    for f in &fuzzy {
        if !used_a[f.i] && !used_b[f.j] {
            used_a[f.i] = true;
            used_b[f.j] = true;
            mapped += 1;
        }
    }

    let coverage = 2.0 * mapped as f64 / (n1 + n2) as f64;
    let monogamy = if candidates == 0 {
        0.0
    } else {
        mapped as f64 / candidates as f64
    };
    ValueSetScore {
        candidate_pairs: candidates,
        exact_pairs: exact,
        mapped,
        coverage,
        monogamy,
        similarity: coverage * monogamy,
    }
}

/// Could strings of these lengths be within the fuzzy threshold at all?
fn length_ok(tau: f64, lx: usize, ly: usize) -> bool {
    max_distance_for(tau, lx.max(ly)).is_some_and(|k| lx.abs_diff(ly) <= k)
}

fn unordered_key<'a>(a: &'a PreparedValues, b: &'a PreparedValues, f: &Fuzzy) -> (&'a str, &'a str) {
    let (x, y) = (a.values[f.i].as_str(), b.values[f.j].as_str());
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}
