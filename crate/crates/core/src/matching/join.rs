//! Corpus-wide fuzzy self-join over distinct values.
//!
//! Comparing every value of every attribute pair costs `O(n1 * n2)` edit
//! distance checks per pair, which dominates matching time. Instead, every
//! distinct value is split into `k + 1` segments and indexed; two strings
//! within edit distance `k` always share one segment at a position shifted
//! by at most `k`, so probing the index with substrings of each value finds
//! all fuzzy partners. Candidates are verified with the banded edit
//! distance and regrouped per attribute pair.

use std::collections::{BTreeMap, HashMap};
use std::hash::{BuildHasherDefault, Hasher};

use rayon::prelude::*;

use super::kernels::{levenshtein_within, max_distance_for, sim_from_distance};
use super::valueset::{Fuzzy, PreparedValues};

/// Keys are already well-mixed hashes.
#[derive(Default)]
struct PassThrough(u64);

impl Hasher for PassThrough {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ u64::from(b)).wrapping_mul(0x100_0000_01b3);
        }
    }

    fn write_u64(&mut self, x: u64) {
        self.0 = x;
    }
}

type FastMap<K, V> = HashMap<K, V, BuildHasherDefault<PassThrough>>;

fn segment_key(len: usize, seg: usize, chars: &[char]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in [len as u64, seg as u64].into_iter().chain(chars.iter().map(|&c| u64::from(c))) {
        h ^= x;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    // splitmix64 finalizer
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Per-length thresholds.
struct Bounds {
    /// Largest admissible distance for a pair whose longer string has this
    /// length.
    k: Vec<Option<usize>>,
    /// Largest distance any partner of a string of this length can be at;
    /// the number of index segments is this plus one.
    reach: Vec<usize>,
}

impl Bounds {
    fn new(tau: f64, max_len: usize) -> Self {
        let k: Vec<Option<usize>> = (0..=max_len).map(|l| max_distance_for(tau, l)).collect();
        let reach = (0..=max_len)
            .map(|ly| {
                (ly..=max_len)
                    .filter_map(|l| k[l].filter(|&d| l - ly <= d))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        Bounds { k, reach }
    }

    fn segments(&self, ly: usize) -> usize {
        self.reach[ly] + 1
    }
}

/// Start and length of each segment of an even partition.
fn partition(len: usize, parts: usize) -> impl Iterator<Item = (usize, usize)> {
    let (base, rem) = (len / parts, len % parts);
    (0..parts).scan(0, move |start, i| {
        let l = base + usize::from(i >= parts - rem);
        let s = *start;
        *start += l;
        Some((s, l))
    })
}

/// Fuzzy candidate pairs grouped by attribute pair. Attribute indices are
/// global positions in the slice given to [`fuzzy_join`].
#[derive(Default)]
pub(crate) struct Candidates {
    by_pair: FastMap<(u32, u32), Vec<Fuzzy>>,
}

impl Candidates {
    pub fn get(&self, left: usize, right: usize) -> &[Fuzzy] {
        self.by_pair.get(&(left as u32, right as u32)).map_or(&[], Vec::as_slice)
    }

    #[cfg(test)]
    pub fn pair_count(&self) -> usize {
        self.by_pair.len()
    }
}

/// All value pairs with `lev_sim >= tau` between attributes of different
/// datasets. `attrs[g] = (dataset index, values)`; pairs are reported for
/// `(left, right)` with the left attribute in the lower dataset index.
pub(crate) fn fuzzy_join(attrs: &[(usize, &PreparedValues)], tau: f64) -> Candidates {
    // Distinct strings and where they occur.
    let mut occ: BTreeMap<&str, Vec<(u32, u32)>> = BTreeMap::new();
    for (g, (_, pv)) in attrs.iter().enumerate() {
        for (i, v) in pv.values().iter().enumerate() {
            occ.entry(v.as_str()).or_default().push((g as u32, i as u32));
        }
    }
    let strings: Vec<&str> = occ.keys().copied().collect();
    let occurrences: Vec<Vec<(u32, u32)>> = occ.into_values().collect();
    let chars: Vec<Box<[char]>> = strings.iter().map(|s| s.chars().collect()).collect();
    let masks: Vec<u64> = chars
        .iter()
        .map(|c| c.iter().fold(0u64, |m, &ch| m | 1u64 << (ch as u32 % 64)))
        .collect();
    let max_len = chars.iter().map(|c| c.len()).max().unwrap_or(0);
    let bounds = Bounds::new(tau, max_len);
    let mut present = vec![false; max_len + 1];

    // Index every string that can have a partner other than itself.
    let mut index: FastMap<u64, Vec<u32>> = FastMap::default();
    let mut loose: Vec<u32> = Vec::new();
    for (s, c) in chars.iter().enumerate() {
        let ly = c.len();
        present[ly] = true;
        if bounds.reach[ly] == 0 {
            continue;
        }
        let parts = bounds.segments(ly);
        if parts > ly {
            // Too short to split; compared directly.
            loose.push(s as u32);
            continue;
        }
        for (seg, (start, l)) in partition(ly, parts).enumerate() {
            index
                .entry(segment_key(ly, seg, &c[start..start + l]))
                .or_default()
                .push(s as u32);
        }
    }

    let probe = |sx: usize| -> Vec<(u32, u32, f64)> {
        let x = &chars[sx];
        let lx = x.len();
        let reach = bounds.reach[lx];
        let mut hits: Vec<u32> = Vec::new();
        for ly in lx.saturating_sub(reach)..=(lx + reach).min(max_len) {
            if !present[ly] {
                continue;
            }
            let Some(k) = bounds.k[lx.max(ly)] else {
                continue;
            };
            if k == 0 || lx.abs_diff(ly) > k {
                continue;
            }
            let parts = bounds.segments(ly);
            if parts > ly {
                continue;
            }
            for (seg, (start, l)) in partition(ly, parts).enumerate() {
                let lo = start.saturating_sub(k);
                let hi = (start + k).min(lx.saturating_sub(l));
                if l > lx || lo > hi {
                    continue;
                }
                for st in lo..=hi {
                    if let Some(list) = index.get(&segment_key(ly, seg, &x[st..st + l])) {
                        hits.extend(list.iter().copied().filter(|&sy| sy as usize > sx));
                    }
                }
            }
        }
        hits.extend(loose.iter().copied().filter(|&sy| sy as usize > sx));
        hits.sort_unstable();
        hits.dedup();

        let mut out = Vec::new();
        for sy in hits {
            let y = &chars[sy as usize];
            let ly = y.len();
            let max_len = lx.max(ly);
            let Some(k) = bounds.k[max_len] else {
                continue;
            };
            if lx.abs_diff(ly) > k || ((masks[sx] ^ masks[sy as usize]).count_ones() as usize).div_ceil(2) > k {
                continue;
            }
            if let Some(d) = levenshtein_within(x, y, k) {
                out.push((sx as u32, sy, sim_from_distance(d, max_len)));
            }
        }
        out
    };
    let pairs: Vec<(u32, u32, f64)> = (0..strings.len()).into_par_iter().flat_map_iter(probe).collect();

    let mut by_pair: FastMap<(u32, u32), Vec<Fuzzy>> = FastMap::default();
    for (sx, sy, sim) in pairs {
        for &(ax, ix) in &occurrences[sx as usize] {
            for &(ay, iy) in &occurrences[sy as usize] {
                let (dx, dy) = (attrs[ax as usize].0, attrs[ay as usize].0);
                if dx == dy {
                    continue;
                }
                let (key, f) = if dx < dy {
                    ((ax, ay), Fuzzy { sim, i: ix as usize, j: iy as usize })
                } else {
                    ((ay, ax), Fuzzy { sim, i: iy as usize, j: ix as usize })
                };
                by_pair.entry(key).or_default().push(f);
            }
        }
    }
    Candidates { by_pair }
}
