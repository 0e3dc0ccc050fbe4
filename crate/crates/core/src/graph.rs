//! The content graph: datasets as nodes, the matches relation as edges,
//! grouped into one bundle per dataset pair with precomputed evidence.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::{Corpus, Dataset, ValueSet};
use crate::error::{Error, Result};
use crate::matching::kernels::{containment_of, jaccard};
use crate::matching::{build_all_idf, IdfTables, Match, MatchKind};

pub type PairKey = (String, String);

/// One attribute pair of a greedy one-to-one schema alignment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignedPair {
    pub left: String,
    pub right: String,
    pub name_conf: f64,
    /// Confidence of the value edge on the same pair, 0 if there is none.
    pub value_conf: f64,
    pub jaccard: f64,
    /// Fraction of the left value set found in the right one.
    pub containment_lr: f64,
    pub containment_rl: f64,
}

/// All edges between one dataset pair plus the statistics the detectors
/// consume.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairBundle {
    pub d1: String,
    pub d2: String,
    pub attr_edges: Vec<Match>,
    pub value_edges: Vec<Match>,
    pub prop_edges: Vec<Match>,
    pub attr_coverage_1: f64,
    pub attr_coverage_2: f64,
    pub mean_value_conf: f64,
    pub max_value_conf: f64,
    pub mean_prop_conf: f64,
    /// Mean exact-set Jaccard over attribute pairs joined by attribute edges.
    pub mean_value_jaccard: f64,
    pub alignment: Vec<AlignedPair>,
}

/// Derived statistics, recomputable from a bundle's edges.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleStats {
    pub attr_coverage_1: f64,
    pub attr_coverage_2: f64,
    pub mean_value_conf: f64,
    pub max_value_conf: f64,
    pub mean_prop_conf: f64,
    pub mean_value_jaccard: f64,
}

impl PairBundle {
    pub fn len(&self) -> usize {
        self.attr_edges.len() + self.value_edges.len() + self.prop_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn key(&self) -> PairKey {
        (self.d1.clone(), self.d2.clone())
    }

    pub fn edges(&self) -> impl Iterator<Item = &Match> {
        self.attr_edges
            .iter()
            .chain(&self.value_edges)
            .chain(&self.prop_edges)
    }

    pub fn min_coverage(&self) -> f64 {
        self.attr_coverage_1.min(self.attr_coverage_2)
    }

    pub fn max_coverage(&self) -> f64 {
        self.attr_coverage_1.max(self.attr_coverage_2)
    }

    pub fn stats(&self) -> BundleStats {
        BundleStats {
            attr_coverage_1: self.attr_coverage_1,
            attr_coverage_2: self.attr_coverage_2,
            mean_value_conf: self.mean_value_conf,
            max_value_conf: self.max_value_conf,
            mean_prop_conf: self.mean_prop_conf,
            mean_value_jaccard: self.mean_value_jaccard,
        }
    }

    fn build(corpus: &Corpus, d1: &Dataset, d2: &Dataset, edges: Vec<Match>) -> Self {
        let mut attr_edges = Vec::new();
        let mut value_edges = Vec::new();
        let mut prop_edges = Vec::new();
        for m in edges {
            match m.kind {
                MatchKind::AttributeMatch => attr_edges.push(m),
                MatchKind::ValueSetMatch => value_edges.push(m),
                MatchKind::PropertyMatch => prop_edges.push(m),
            }
        }
        let stats = compute_stats(corpus, d1, d2, &attr_edges, &value_edges, &prop_edges);
        let alignment = align(corpus, &attr_edges, &value_edges);
        PairBundle {
            d1: d1.dataset_id.clone(),
            d2: d2.dataset_id.clone(),
            attr_edges,
            value_edges,
            prop_edges,
            attr_coverage_1: stats.attr_coverage_1,
            attr_coverage_2: stats.attr_coverage_2,
            mean_value_conf: stats.mean_value_conf,
            max_value_conf: stats.max_value_conf,
            mean_prop_conf: stats.mean_prop_conf,
            mean_value_jaccard: stats.mean_value_jaccard,
            alignment,
        }
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Recomputes bundle statistics from raw edge lists.
pub fn compute_stats(
    corpus: &Corpus,
    d1: &Dataset,
    d2: &Dataset,
    attr_edges: &[Match],
    value_edges: &[Match],
    prop_edges: &[Match],
) -> BundleStats {
    let covered_left: BTreeSet<&str> = attr_edges.iter().map(|m| m.left.as_str()).collect();
    let covered_right: BTreeSet<&str> = attr_edges.iter().map(|m| m.right.as_str()).collect();
    let coverage = |covered: usize, d: &Dataset| {
        if d.attributes.is_empty() {
            0.0
        } else {
            covered as f64 / d.attributes.len() as f64
        }
    };
    let jaccards = attr_edges.iter().map(|m| {
        match (corpus.value_set(&m.left), corpus.value_set(&m.right)) {
            (Some(a), Some(b)) => jaccard(&a.values, &b.values),
            _ => 0.0,
        }
    });
    BundleStats {
        attr_coverage_1: coverage(covered_left.len(), d1),
        attr_coverage_2: coverage(covered_right.len(), d2),
        mean_value_conf: mean(value_edges.iter().map(|m| m.confidence)),
        max_value_conf: value_edges.iter().map(|m| m.confidence).fold(0.0, f64::max),
        mean_prop_conf: mean(prop_edges.iter().map(|m| m.confidence)),
        mean_value_jaccard: mean(jaccards),
    }
}

/// Greedy one-to-one alignment of attributes along attribute edges, by
/// descending confidence and then by attribute ids.
fn align(corpus: &Corpus, attr_edges: &[Match], value_edges: &[Match]) -> Vec<AlignedPair> {
    let mut order: Vec<&Match> = attr_edges.iter().collect();
    order.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| (&a.left, &a.right).cmp(&(&b.left, &b.right)))
    });
    let value_conf: BTreeMap<(&str, &str), f64> = value_edges
        .iter()
        .map(|m| ((m.left.as_str(), m.right.as_str()), m.confidence))
        .collect();
    let mut used_left = BTreeSet::new();
    let mut used_right = BTreeSet::new();
    let mut out = Vec::new();
    let empty = ValueSet {
        attr_id: String::new(),
        values: BTreeSet::new(),
        raw_count: 0,
        sampled: false,
    };
    for m in order {
        if used_left.contains(&m.left) || used_right.contains(&m.right) {
            continue;
        }
        used_left.insert(&m.left);
        used_right.insert(&m.right);
        let a = corpus.value_set(&m.left).unwrap_or(&empty);
        let b = corpus.value_set(&m.right).unwrap_or(&empty);
        out.push(AlignedPair {
            left: m.left.clone(),
            right: m.right.clone(),
            name_conf: m.confidence,
            value_conf: value_conf
                .get(&(m.left.as_str(), m.right.as_str()))
                .copied()
                .unwrap_or(0.0),
            jaccard: jaccard(&a.values, &b.values),
            containment_lr: containment_of(&a.values, &b.values),
            containment_rl: containment_of(&b.values, &a.values),
        });
    }
    out
}

/// Immutable graph over a corpus.
pub struct ContentGraph<'a> {
    pub corpus: &'a Corpus,
    edges: Vec<Match>,
    bundles: BTreeMap<PairKey, PairBundle>,
    adjacency: BTreeMap<String, BTreeSet<String>>,
    pub idfs: IdfTables,
}

impl<'a> ContentGraph<'a> {
    pub fn edges(&self) -> &[Match] {
        &self.edges
    }

    pub fn bundles(&self) -> impl Iterator<Item = &PairBundle> {
        self.bundles.values()
    }

    pub fn bundle(&self, d1: &str, d2: &str) -> Option<&PairBundle> {
        let key = if d1 <= d2 {
            (d1.to_owned(), d2.to_owned())
        } else {
            (d2.to_owned(), d1.to_owned())
        };
        self.bundles.get(&key)
    }

    pub fn pair_count(&self) -> usize {
        self.bundles.len()
    }

    /// Datasets sharing at least one edge with `dataset_id`.
    pub fn neighbors(&self, dataset_id: &str) -> Result<BTreeSet<String>> {
        if self.corpus.get(dataset_id).is_none() {
            return Err(Error::UnknownDataset(dataset_id.to_owned()));
        }
        Ok(self.adjacency.get(dataset_id).cloned().unwrap_or_default())
    }

    pub fn dump(&self) -> GraphDump<'_> {
        GraphDump {
            datasets: self
                .corpus
                .datasets()
                .iter()
                .map(|d| d.dataset_id.as_str())
                .collect(),
            stats: GraphStats {
                datasets: self.corpus.len(),
                pairs: self.bundles.len(),
                edges: self.edges.len(),
            },
            bundles: self.bundles.values().collect(),
        }
    }
}

#[derive(Serialize)]
pub struct GraphDump<'g> {
    pub datasets: Vec<&'g str>,
    pub stats: GraphStats,
    pub bundles: Vec<&'g PairBundle>,
}

#[derive(Debug, Serialize)]
pub struct GraphStats {
    pub datasets: usize,
    pub pairs: usize,
    pub edges: usize,
}

fn element_dataset(element: &str) -> Option<&str> {
    element
        .rsplit_once('#')
        .or_else(|| element.rsplit_once('@'))
        .map(|(d, _)| d)
}

pub fn build_graph(corpus: &Corpus, matches: Vec<Match>) -> Result<ContentGraph<'_>> {
    let mut grouped: BTreeMap<PairKey, Vec<Match>> = BTreeMap::new();
    for m in &matches {
        if m.left_dataset >= m.right_dataset {
            return Err(Error::Integrity(format!(
                "match {} -> {} is not in canonical dataset order",
                m.left, m.right
            )));
        }
        for (d, element) in [(&m.left_dataset, &m.left), (&m.right_dataset, &m.right)] {
            if corpus.get(d).is_none() {
                return Err(Error::Integrity(format!("match references unknown dataset {d}")));
            }
            if element_dataset(element) != Some(d.as_str()) {
                return Err(Error::Integrity(format!(
                    "element {element} does not belong to dataset {d}"
                )));
            }
        }
        grouped
            .entry((m.left_dataset.clone(), m.right_dataset.clone()))
            .or_default()
            .push(m.clone());
    }

    let mut adjacency: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let bundles = grouped
        .into_iter()
        .map(|((a, b), edges)| {
            adjacency.entry(a.clone()).or_default().insert(b.clone());
            adjacency.entry(b.clone()).or_default().insert(a.clone());
            let d1 = corpus.get(&a).expect("checked above");
            let d2 = corpus.get(&b).expect("checked above");
            ((a, b), PairBundle::build(corpus, d1, d2, edges))
        })
        .collect();

    Ok(ContentGraph {
        corpus,
        edges: matches,
        bundles,
        adjacency,
        idfs: build_all_idf(corpus),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{FilterConfig, PropertyMap, Provenance};

    fn corpus4() -> Corpus {
        let mk = |id: &str, header: &[&str], vals: &[&str]| {
            let rows: Vec<Vec<&str>> = vals.iter().map(|v| vec![*v; header.len()]).collect();
            Dataset::from_rows(id, header, rows, PropertyMap::new(id), 100)
        };
        Corpus::new(
            vec![
                mk("a", &["x", "y"], &["1", "2"]),
                mk("b", &["x", "z"], &["1", "3"]),
                mk("c", &["q"], &["9"]),
                mk("d", &["x", "y", "w"], &["1", "2"]),
            ],
            Provenance {
                source: None,
                filter: FilterConfig::default(),
            },
        )
        .unwrap()
    }

    fn m(kind: MatchKind, l: &str, r: &str, c: f64) -> Match {
        let ld = element_dataset(l).unwrap();
        let rd = element_dataset(r).unwrap();
        Match::new(kind, l.into(), r.into(), ld, rd, c)
    }

    /// Figure-1-like toy: four datasets with mixed edge types.
    fn fixture() -> Vec<Match> {
        vec![
            m(MatchKind::AttributeMatch, "a#0", "b#0", 1.0),
            m(MatchKind::ValueSetMatch, "a#0", "b#0", 0.5),
            m(MatchKind::PropertyMatch, "a@title", "b@title", 0.4),
            m(MatchKind::AttributeMatch, "a#0", "d#0", 1.0),
            m(MatchKind::AttributeMatch, "a#1", "d#1", 1.0),
            m(MatchKind::ValueSetMatch, "a#0", "d#0", 1.0),
            m(MatchKind::ValueSetMatch, "a#1", "d#1", 1.0),
            m(MatchKind::AttributeMatch, "b#0", "d#0", 1.0),
        ]
    }

    #[test]
    fn empty_graph() {
        let c = corpus4();
        let g = build_graph(&c, vec![]).unwrap();
        assert_eq!(g.pair_count(), 0);
        assert!(g.neighbors("c").unwrap().is_empty());
    }

    #[test]
    fn one_pair_bundle() {
        let c = corpus4();
        let g = build_graph(&c, fixture()[..3].to_vec()).unwrap();
        assert_eq!(g.pair_count(), 1);
        assert_eq!(g.bundle("b", "a").unwrap().len(), 3);
    }

    #[test]
    fn fixture_partition_and_stats() {
        let c = corpus4();
        let edges = fixture();
        let g = build_graph(&c, edges.clone()).unwrap();
        let sizes: Vec<(String, String, usize)> = g.bundles().map(|b| (b.d1.clone(), b.d2.clone(), b.len())).collect();
        // Counted by hand from the fixture.
        assert_eq!(
            sizes,
            [
                ("a".into(), "b".into(), 3),
                ("a".into(), "d".into(), 4),
                ("b".into(), "d".into(), 1)
            ]
        );
        assert_eq!(g.bundles().map(PairBundle::len).sum::<usize>(), edges.len());

        let ab = g.bundle("a", "b").unwrap();
        assert_eq!(ab.attr_coverage_1, 0.5);
        assert_eq!(ab.attr_coverage_2, 0.5);
        assert_eq!(ab.mean_value_conf, 0.5);
        assert_eq!(ab.mean_prop_conf, 0.4);
        // a#0 = {1,2}, b#0 = {1,3}
        assert!((ab.mean_value_jaccard - 1.0 / 3.0).abs() < 1e-12);

        let ad = g.bundle("a", "d").unwrap();
        assert_eq!(ad.attr_coverage_1, 1.0);
        assert!((ad.attr_coverage_2 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(ad.alignment.len(), 2);
        assert!(ad.alignment.iter().all(|p| p.value_conf == 1.0 && p.jaccard == 1.0));

        for b in g.bundles() {
            let d1 = c.get(&b.d1).unwrap();
            let d2 = c.get(&b.d2).unwrap();
            let again = compute_stats(&c, d1, d2, &b.attr_edges, &b.value_edges, &b.prop_edges);
            assert_eq!(again, b.stats());
        }
    }

    #[test]
    fn neighbors_are_symmetric() {
        let c = corpus4();
        let g = build_graph(&c, fixture()).unwrap();
        assert_eq!(g.neighbors("a").unwrap(), BTreeSet::from(["b".into(), "d".into()]));
        for d in c.datasets() {
            for n in g.neighbors(&d.dataset_id).unwrap() {
                assert!(g.neighbors(&n).unwrap().contains(&d.dataset_id));
            }
        }
        assert!(matches!(g.neighbors("zz"), Err(Error::UnknownDataset(_))));
    }

    #[test]
    fn dangling_reference() {
        let c = corpus4();
        let bad = Match::new(MatchKind::AttributeMatch, "a#0".into(), "q#0".into(), "a", "q", 1.0);
        assert!(matches!(build_graph(&c, vec![bad]), Err(Error::Integrity(_))));
        let reversed = Match::new(MatchKind::AttributeMatch, "b#0".into(), "a#0".into(), "b", "a", 1.0);
        assert!(matches!(build_graph(&c, vec![reversed]), Err(Error::Integrity(_))));
    }
}
