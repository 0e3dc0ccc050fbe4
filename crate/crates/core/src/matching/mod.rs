//! Construction of the matches relation: every dataset is compared with
//! every other dataset on attribute names, value sets and metadata
//! properties.

mod join;
pub mod kernels;
pub mod tfidf;
pub mod valueset;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dataset};
use crate::error::{Error, Result};

pub use kernels::{containment, jaccard, lev_sim, name_similarity};
pub use tfidf::{build_all_idf, build_idf, property_similarity, IdfTable, IdfTables};
pub use valueset::{value_set_score, value_set_similarity, PreparedValues, ValueSetScore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    AttributeMatch,
    ValueSetMatch,
    PropertyMatch,
}

impl MatchKind {
    pub const ALL: [MatchKind; 3] = [
        MatchKind::AttributeMatch,
        MatchKind::ValueSetMatch,
        MatchKind::PropertyMatch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MatchKind::AttributeMatch => "attribute_match",
            MatchKind::ValueSetMatch => "value_set_match",
            MatchKind::PropertyMatch => "property_match",
        }
    }
}

/// A scored candidate correspondence between two same-kind elements of two
/// datasets. `left_dataset < right_dataset` always holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub kind: MatchKind,
    pub left: String,
    pub right: String,
    pub left_dataset: String,
    pub right_dataset: String,
    #[serde(serialize_with = "crate::io::six_decimals")]
    pub confidence: f64,
}

impl Match {
    /// Confidences are stored at the 6-decimal precision they are written
    /// with, so reloaded match files reproduce in-memory results exactly.
    pub fn new(
        kind: MatchKind,
        left: String,
        right: String,
        left_dataset: &str,
        right_dataset: &str,
        confidence: f64,
    ) -> Self {
        Match {
            kind,
            left,
            right,
            left_dataset: left_dataset.to_owned(),
            right_dataset: right_dataset.to_owned(),
            confidence: quantize(confidence),
        }
    }

    pub fn sort_key(&self) -> (&str, &str, MatchKind, &str, &str) {
        (
            &self.left_dataset,
            &self.right_dataset,
            self.kind,
            &self.left,
            &self.right,
        )
    }

    pub fn pair(&self) -> (&str, &str) {
        (&self.left_dataset, &self.right_dataset)
    }
}

pub fn quantize(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

pub fn property_element_id(dataset_id: &str, key: &str) -> String {
    format!("{dataset_id}@{key}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    pub tau_attr: f64,
    pub tau_value: f64,
    pub tau_prop: f64,
    pub tau_value_pair: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            tau_attr: 0.5,
            tau_value: 0.3,
            tau_prop: 0.3,
            tau_value_pair: 0.8,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau_attr", self.tau_attr),
            ("tau_value", self.tau_value),
            ("tau_prop", self.tau_prop),
            ("tau_value_pair", self.tau_value_pair),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Counters reported in `stats.json`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchStats {
    pub datasets: usize,
    pub pairs_examined: usize,
    pub edges_by_kind: BTreeMap<MatchKind, usize>,
    pub total_edges: usize,
}

/// Value sets of one dataset, prepared once per run.
pub struct PreparedDataset<'a> {
    pub dataset: &'a Dataset,
    pub values: Vec<PreparedValues>,
}

impl<'a> PreparedDataset<'a> {
    pub fn new(dataset: &'a Dataset) -> Self {
        PreparedDataset {
            dataset,
            values: dataset.value_sets.iter().map(PreparedValues::new).collect(),
        }
    }
}

/// All matches between two datasets given in canonical order.
pub fn match_dataset_pair(d1: &Dataset, d2: &Dataset, cfg: &MatchConfig, idfs: &IdfTables) -> Vec<Match> {
    let (p1, p2) = (PreparedDataset::new(d1), PreparedDataset::new(d2));
    match_prepared_pair(&p1, &p2, cfg, idfs)
}

pub fn match_prepared_pair(
    p1: &PreparedDataset<'_>,
    p2: &PreparedDataset<'_>,
    cfg: &MatchConfig,
    idfs: &IdfTables,
) -> Vec<Match> {
    match_pair_with(p1, p2, cfg, idfs, |_, _, pv1, pv2| {
        valueset::score(pv1, pv2, cfg.tau_value_pair)
    })
}

/// `value_score(i, j, ..)` scores attribute `i` of `p1` against attribute
/// `j` of `p2`.
fn match_pair_with(
    p1: &PreparedDataset<'_>,
    p2: &PreparedDataset<'_>,
    cfg: &MatchConfig,
    idfs: &IdfTables,
    value_score: impl Fn(usize, usize, &PreparedValues, &PreparedValues) -> ValueSetScore,
) -> Vec<Match> {
    let (d1, d2) = (p1.dataset, p2.dataset);
    debug_assert!(d1.dataset_id < d2.dataset_id, "pair not in canonical order");
    let mut out = Vec::new();

    for (i, (a1, pv1)) in d1.attributes.iter().zip(&p1.values).enumerate() {
        for (j, (a2, pv2)) in d2.attributes.iter().zip(&p2.values).enumerate() {
            let ns = name_similarity(a1, a2);
            if ns >= cfg.tau_attr {
                out.push(Match::new(
                    MatchKind::AttributeMatch,
                    a1.attr_id.clone(),
                    a2.attr_id.clone(),
                    &d1.dataset_id,
                    &d2.dataset_id,
                    ns,
                ));
            }
            if pv1.is_empty() || pv2.is_empty() {
                continue;
            }
            // Coverage bounds the score from above; skip hopeless pairs.
            let best = 2.0 * pv1.len().min(pv2.len()) as f64 / (pv1.len() + pv2.len()) as f64;
            if best < cfg.tau_value {
                continue;
            }
            let vs = value_score(i, j, pv1, pv2).similarity;
            if vs >= cfg.tau_value {
                out.push(Match::new(
                    MatchKind::ValueSetMatch,
                    a1.attr_id.clone(),
                    a2.attr_id.clone(),
                    &d1.dataset_id,
                    &d2.dataset_id,
                    vs,
                ));
            }
        }
    }

    for (key, text1) in d1.properties.iter() {
        let Some(text2) = d2.properties.get(key) else {
            continue;
        };
        let Some(idf) = idfs.get(key) else {
            continue;
        };
        let ps = property_similarity(text1, text2, idf);
        if ps >= cfg.tau_prop && ps > 0.0 {
            out.push(Match::new(
                MatchKind::PropertyMatch,
                property_element_id(&d1.dataset_id, key),
                property_element_id(&d2.dataset_id, key),
                &d1.dataset_id,
                &d2.dataset_id,
                ps,
            ));
        }
    }
    out
}

/// Compares all `n(n-1)/2` dataset pairs. `workers` bounds the thread pool;
/// the result is sorted canonically and does not depend on it.
///
/// Fuzzy value pairs come from one corpus-wide join instead of a scan per
/// attribute pair; the scores are identical to [`match_prepared_pair`].
pub fn generate_matches(
    corpus: &Corpus,
    cfg: &MatchConfig,
    workers: Option<usize>,
) -> Result<(Vec<Match>, MatchStats)> {
    cfg.validate()?;
    let idfs = build_all_idf(corpus);
    let prepared: Vec<PreparedDataset<'_>> = corpus.datasets().iter().map(PreparedDataset::new).collect();
    let examined = AtomicUsize::new(0);
    let n = prepared.len();

    let mut offsets = Vec::with_capacity(n);
    let mut attrs = Vec::new();
    for (d, p) in prepared.iter().enumerate() {
        offsets.push(attrs.len());
        attrs.extend(p.values.iter().map(|pv| (d, pv)));
    }

    let run = || -> Vec<Match> {
        let fuzzy = join::fuzzy_join(&attrs, cfg.tau_value_pair);
        let (fuzzy, offsets) = (&fuzzy, &offsets);
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let (prepared, idfs, examined) = (&prepared, &idfs, &examined);
                (i + 1..n).flat_map(move |j| {
                    examined.fetch_add(1, Ordering::Relaxed);
                    match_pair_with(&prepared[i], &prepared[j], cfg, idfs, move |a, b, pv1, pv2| {
                        let cands = fuzzy.get(offsets[i] + a, offsets[j] + b);
                        valueset::score_with_candidates(pv1, pv2, cands)
                    })
                })
            })
            .collect()
    };
    let mut matches = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    matches.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));

    let mut stats = MatchStats {
        datasets: n,
        pairs_examined: examined.into_inner(),
        edges_by_kind: MatchKind::ALL.iter().map(|&k| (k, 0)).collect(),
        total_edges: matches.len(),
    };
    for m in &matches {
        *stats.edges_by_kind.entry(m.kind).or_default() += 1;
    }
    Ok((matches, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{FilterConfig, PropertyMap, Provenance};

    fn dataset(id: &str, header: &[&str], rows: &[Vec<&str>], title: &str) -> Dataset {
        Dataset::from_rows(id, header, rows, PropertyMap::new(title), 10_000)
    }

    fn corpus(ds: Vec<Dataset>) -> Corpus {
        Corpus::new(
            ds,
            Provenance {
                source: None,
                filter: FilterConfig::default(),
            },
        )
        .unwrap()
    }

    #[test]
    fn copy_with_new_title() {
        let rows = vec![vec!["ny", "1"], vec!["nj", "2"], vec!["ca", "3"]];
        let d1 = dataset("a", &["state", "count"], &rows, "state counts");
        let d2 = dataset("b", &["state", "count"], &rows, "population figures");
        let c = corpus(vec![d1.clone(), d2.clone()]);
        let idfs = build_all_idf(&c);
        let ms = match_dataset_pair(&d1, &d2, &MatchConfig::default(), &idfs);
        let self_pairs = |kind| {
            ms.iter()
                .filter(|m| m.kind == kind && m.left.ends_with(&m.right[1..]))
                .count()
        };
        assert_eq!(self_pairs(MatchKind::AttributeMatch), 2);
        assert_eq!(self_pairs(MatchKind::ValueSetMatch), 2);
        for m in ms.iter().filter(|m| m.kind != MatchKind::PropertyMatch) {
            if m.left.ends_with(&m.right[1..]) {
                assert_eq!(m.confidence, 1.0);
            }
        }
        assert!(ms.iter().all(|m| m.kind != MatchKind::PropertyMatch));
    }

    #[test]
    fn disjoint_pair_has_no_edges() {
        let d1 = dataset("a", &["alpha"], &[vec!["x1"], vec!["x2"]], "river levels");
        let d2 = dataset("b", &["omega"], &[vec!["qq"], vec!["rr"]], "school lunches");
        let c = corpus(vec![d1.clone(), d2.clone()]);
        assert!(match_dataset_pair(&d1, &d2, &MatchConfig::default(), &build_all_idf(&c)).is_empty());
    }

    #[test]
    fn grid_of_two_by_two() {
        // Oracle: evaluate both kernels on all four attribute pairs directly.
        let d1 = dataset("a", &["county", "budget"], &[vec!["kent", "10"], vec!["york", "20"]], "t1");
        let d2 = dataset("b", &["county name", "zzzz"], &[vec!["kent", "99"], vec!["york", "98"]], "t2");
        let c = corpus(vec![d1.clone(), d2.clone()]);
        let cfg = MatchConfig::default();
        let ms = match_dataset_pair(&d1, &d2, &cfg, &build_all_idf(&c));

        let mut expected = Vec::new();
        for a in &d1.attributes {
            for b in &d2.attributes {
                let t1: std::collections::BTreeSet<_> = a.canonical_name.split(' ').collect();
                let t2: std::collections::BTreeSet<_> = b.canonical_name.split(' ').collect();
                let j = t1.intersection(&t2).count() as f64 / t1.union(&t2).count() as f64;
                let l = 1.0
                    - strsim::levenshtein(&a.canonical_name, &b.canonical_name) as f64
                        / a.canonical_name.chars().count().max(b.canonical_name.chars().count()) as f64;
                if j.max(l) >= cfg.tau_attr {
                    expected.push((a.attr_id.clone(), b.attr_id.clone(), quantize(j.max(l))));
                }
            }
        }
        let got: Vec<_> = ms
            .iter()
            .filter(|m| m.kind == MatchKind::AttributeMatch)
            .map(|m| (m.left.clone(), m.right.clone(), m.confidence))
            .collect();
        assert_eq!(got, expected);
        assert_eq!(got, [("a#0".to_string(), "b#0".to_string(), 0.545455)]);

        let values: Vec<_> = ms.iter().filter(|m| m.kind == MatchKind::ValueSetMatch).collect();
        assert_eq!(values.len(), 1);
        assert_eq!((values[0].left.as_str(), values[0].right.as_str()), ("a#0", "b#0"));
    }

    #[test]
    fn generation_counts_pairs() {
        let mk = |id: &str, word: &str| dataset(id, &[word], &[vec![word]], word);
        let c = corpus(vec![mk("a", "apple"), mk("b", "zebra"), mk("c", "quilt"), mk("d", "mop")]);
        let (ms, stats) = generate_matches(&c, &MatchConfig::default(), Some(2)).unwrap();
        assert!(ms.is_empty());
        assert_eq!(stats.pairs_examined, 6);

        let single = corpus(vec![mk("a", "apple")]);
        let (ms, stats) = generate_matches(&single, &MatchConfig::default(), None).unwrap();
        assert!(ms.is_empty());
        assert_eq!(stats.pairs_examined, 0);
    }

    #[test]
    fn config_validation() {
        let bad = MatchConfig {
            tau_prop: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
