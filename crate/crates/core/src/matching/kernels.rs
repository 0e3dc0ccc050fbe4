//! Set and string similarity kernels. All return values in `[0, 1]` and are
//! symmetric in their arguments.

use std::collections::BTreeSet;

use crate::canon::tokens;
use crate::corpus::{Attribute, ValueSet};

/// `|a ∩ b| / |a ∪ b|`, or 0 when both sets are empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = intersection_size(a, b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Fraction of `a` contained in `b`; 0 when `a` is empty.
pub fn containment_of<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a.is_empty() {
        0.0
    } else {
        intersection_size(a, b) as f64 / a.len() as f64
    }
}

/// Fraction of `v1`'s canonical values present in `v2`.
pub fn containment(v1: &ValueSet, v2: &ValueSet) -> f64 {
    containment_of(&v1.values, &v2.values)
}

/// Merge-walk over two ordered sets.
pub fn intersection_size<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> usize {
    let (mut ia, mut ib) = (a.iter(), b.iter());
    let (mut x, mut y) = (ia.next(), ib.next());
    let mut n = 0;
    while let (Some(p), Some(q)) = (x, y) {
        match p.cmp(q) {
            std::cmp::Ordering::Less => x = ia.next(),
            std::cmp::Ordering::Greater => y = ib.next(),
            std::cmp::Ordering::Equal => {
                n += 1;
                x = ia.next();
                y = ib.next();
            }
        }
    }
    n
}

/// Edit distance over Unicode scalar values.
pub fn levenshtein(s: &str, t: &str) -> usize {
    let a: Vec<char> = s.chars().collect();
    let b: Vec<char> = t.chars().collect();
    levenshtein_chars(&a, &b)
}

pub fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (diag + usize::from(ca != cb)).min(up + 1).min(row[j] + 1);
            diag = up;
        }
    }
    row[b.len()]
}

/// Edit distance if it is at most `k`, computed on a diagonal band of
/// width `2k + 1`.
pub fn levenshtein_within(a: &[char], b: &[char], k: usize) -> Option<usize> {
    let (n, m) = (a.len(), b.len());
    if n.abs_diff(m) > k {
        return None;
    }
    if n == 0 || m == 0 {
        return Some(n.max(m));
    }
    let inf = k + 1;
    let mut prev: Vec<usize> = (0..=m).map(|j| if j <= k { j } else { inf }).collect();
    let mut cur = vec![inf; m + 1];
    for i in 1..=n {
        let lo = i.saturating_sub(k).max(1);
        let hi = (i + k).min(m);
        cur[0] = if i <= k { i } else { inf };
        cur[lo - 1] = if lo == 1 { cur[0] } else { inf };
        let mut row_min = cur[lo - 1];
        let ca = a[i - 1];
        for j in lo..=hi {
            let sub = prev[j - 1] + usize::from(ca != b[j - 1]);
            let v = sub.min(prev[j] + 1).min(cur[j - 1] + 1).min(inf);
            cur[j] = v;
            row_min = row_min.min(v);
        }
        if hi < m {
            cur[hi + 1] = inf;
        }
        if row_min > k {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[m];
    (d <= k).then_some(d)
}

/// `1 − d / max(|s|, |t|)`, and 1 when both strings are empty.
pub fn lev_sim(s: &str, t: &str) -> f64 {
    let a: Vec<char> = s.chars().collect();
    let b: Vec<char> = t.chars().collect();
    sim_from_distance(levenshtein_chars(&a, &b), a.len().max(b.len()))
}

pub(crate) fn sim_from_distance(d: usize, max_len: usize) -> f64 {
    if max_len == 0 {
        1.0
    } else {
        1.0 - d as f64 / max_len as f64
    }
}

/// Largest edit distance `d` for which `1 − d / max_len >= tau` holds,
/// evaluated with the same floating-point expression as [`lev_sim`].
pub(crate) fn max_distance_for(tau: f64, max_len: usize) -> Option<usize> {
    if max_len == 0 {
        return (1.0 >= tau).then_some(0);
    }
    let mut d = (((1.0 - tau) * max_len as f64).floor().max(0.0) as usize).min(max_len);
    while d < max_len && sim_from_distance(d + 1, max_len) >= tau {
        d += 1;
    }
    loop {
        if sim_from_distance(d, max_len) >= tau {
            return Some(d);
        }
        if d == 0 {
            return None;
        }
        d -= 1;
    }
}

/// `max(token Jaccard, lev_sim)` over canonical attribute names.
pub fn name_similarity(a1: &Attribute, a2: &Attribute) -> f64 {
    canonical_name_similarity(&a1.canonical_name, &a2.canonical_name)
}

pub fn canonical_name_similarity(n1: &str, n2: &str) -> f64 {
    let t1: BTreeSet<String> = tokens(n1).into_iter().collect();
    let t2: BTreeSet<String> = tokens(n2).into_iter().collect();
    jaccard(&t1, &t2).max(lev_sim(n1, n2))
}
