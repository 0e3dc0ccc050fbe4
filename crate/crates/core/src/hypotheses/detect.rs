use std::collections::{BTreeMap, BTreeSet};

use crate::canon::tokens;
use crate::graph::{ContentGraph, PairBundle, PairKey};
use crate::matching::Match;

use super::{DetectConfig, Evidence, Flags, Hypothesis, HypothesisClass, VersionCase};

type Claimed = BTreeSet<PairKey>;

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn pair_datasets(b: &PairBundle) -> Vec<String> {
    vec![b.d1.clone(), b.d2.clone()]
}

fn all_edges(b: &PairBundle) -> Vec<Match> {
    b.edges().cloned().collect()
}

fn ev<const N: usize>(items: [(&str, Evidence); N]) -> BTreeMap<String, Evidence> {
    items.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

fn unclaimed<'g>(g: &'g ContentGraph<'_>, claimed: &'g Claimed) -> impl Iterator<Item = &'g PairBundle> {
    g.bundles().filter(move |b| !claimed.contains(&b.key()))
}

// Duplicate: complete attribute and value correspondence.

fn is_duplicate(b: &PairBundle, cfg: &DetectConfig) -> bool {
    b.attr_coverage_1 >= cfg.dup_cov
        && b.attr_coverage_2 >= cfg.dup_cov
        && !b.alignment.is_empty()
        && b.alignment.iter().all(|p| p.value_conf >= cfg.dup_value_conf)
        && mean(b.alignment.iter().map(|p| p.jaccard)) >= cfg.dup_jaccard_min
}

fn duplicates_in(g: &ContentGraph<'_>, cfg: &DetectConfig, claimed: &Claimed) -> Vec<Hypothesis> {
    unclaimed(g, claimed)
        .filter(|b| is_duplicate(b, cfg))
        .map(|b| {
            let min_value = b.alignment.iter().map(|p| p.value_conf).fold(1.0, f64::min);
            Hypothesis::new(
                HypothesisClass::Duplicate,
                pair_datasets(b),
                all_edges(b),
                ev([
                    ("attr_coverage_1", b.attr_coverage_1.into()),
                    ("attr_coverage_2", b.attr_coverage_2.into()),
                    ("min_aligned_value_conf", min_value.into()),
                    ("mean_prop_conf", b.mean_prop_conf.into()),
                ]),
                Flags {
                    divergent_metadata: b.mean_prop_conf < cfg.dup_divergent_prop,
                    ..Flags::default()
                },
            )
        })
        .collect()
}

pub fn detect_duplicates(g: &ContentGraph<'_>, cfg: &DetectConfig) -> Vec<Hypothesis> {
    duplicates_in(g, cfg, &Claimed::new())
}

// Versioned: attribute addition/removal, or instance sub/superset.

fn version_of(g: &ContentGraph<'_>, b: &PairBundle, cfg: &DetectConfig) -> Option<Hypothesis> {
    if b.alignment.is_empty() {
        return None;
    }
    let min_cov = b.min_coverage();
    let value_conf = mean(b.alignment.iter().map(|p| p.value_conf));
    let c_lr = mean(b.alignment.iter().map(|p| p.containment_lr));
    let c_rl = mean(b.alignment.iter().map(|p| p.containment_rl));
    let jac = mean(b.alignment.iter().map(|p| p.jaccard));

    let (case, direction) = if min_cov >= cfg.ver_cov_lo && min_cov < cfg.dup_cov {
        if value_conf < cfg.ver_value_conf {
            return None;
        }
        (VersionCase::Schema, None)
    } else if min_cov >= cfg.dup_cov
        && c_lr.max(c_rl) >= cfg.ver_containment
        && jac < cfg.ver_jaccard_max
    {
        // d1 ⊆ d2 makes d2 the candidate superset.
        let superset = match c_lr.total_cmp(&c_rl) {
            std::cmp::Ordering::Greater => &b.d2,
            std::cmp::Ordering::Less => &b.d1,
            std::cmp::Ordering::Equal => {
                let rows = |d: &str| g.corpus.get(d).map_or(0, |d| d.row_count);
                if rows(&b.d1) > rows(&b.d2) {
                    &b.d1
                } else {
                    &b.d2
                }
            }
        };
        (VersionCase::Instance, Some(superset.clone()))
    } else {
        return None;
    };

    Some(Hypothesis::new(
        HypothesisClass::Versioned,
        pair_datasets(b),
        all_edges(b),
        ev([
            ("attr_coverage_1", b.attr_coverage_1.into()),
            ("attr_coverage_2", b.attr_coverage_2.into()),
            ("mean_aligned_value_conf", value_conf.into()),
            ("containment_1_in_2", c_lr.into()),
            ("containment_2_in_1", c_rl.into()),
            ("mean_aligned_jaccard", jac.into()),
        ]),
        Flags {
            direction,
            version_case: Some(case),
            ..Flags::default()
        },
    ))
}

fn versioned_in(g: &ContentGraph<'_>, cfg: &DetectConfig, claimed: &Claimed) -> Vec<Hypothesis> {
    unclaimed(g, claimed).filter_map(|b| version_of(g, b, cfg)).collect()
}

pub fn detect_versioned(g: &ContentGraph<'_>, cfg: &DetectConfig) -> Vec<Hypothesis> {
    versioned_in(g, cfg, &Claimed::new())
}

// Partitioned: same schema, disjoint instances, similar metadata; grouped.

fn partition_link(b: &PairBundle, cfg: &DetectConfig) -> bool {
    b.min_coverage() >= cfg.part_cov
        && b.mean_value_jaccard <= cfg.part_overlap_max
        && b.mean_prop_conf >= cfg.part_prop_min
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut x = x;
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller index wins for a deterministic representative.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

fn partitions_in(g: &ContentGraph<'_>, cfg: &DetectConfig, claimed: &Claimed) -> Vec<Hypothesis> {
    let corpus = g.corpus;
    let links: Vec<&PairBundle> = unclaimed(g, claimed).filter(|b| partition_link(b, cfg)).collect();
    let mut uf = UnionFind::new(corpus.len());
    for b in &links {
        let i = corpus.position(&b.d1).expect("graph datasets are in the corpus");
        let j = corpus.position(&b.d2).expect("graph datasets are in the corpus");
        uf.union(i, j);
    }
    let mut groups: BTreeMap<usize, Vec<&PairBundle>> = BTreeMap::new();
    for b in &links {
        let root = uf.find(corpus.position(&b.d1).unwrap());
        groups.entry(root).or_default().push(b);
    }
    groups
        .into_values()
        .filter_map(|bundles| {
            let members: BTreeSet<&str> = bundles
                .iter()
                .flat_map(|b| [b.d1.as_str(), b.d2.as_str()])
                .collect();
            if members.len() < cfg.part_min_group {
                return None;
            }
            let edges: Vec<Match> = bundles.iter().flat_map(|b| b.edges().cloned()).collect();
            Some(Hypothesis::new(
                HypothesisClass::Partitioned,
                members.iter().map(|s| s.to_string()).collect(),
                edges,
                ev([
                    ("group_size", members.len().into()),
                    ("linked_pairs", bundles.len().into()),
                    ("mean_prop_conf", mean(bundles.iter().map(|b| b.mean_prop_conf)).into()),
                    ("mean_value_jaccard", mean(bundles.iter().map(|b| b.mean_value_jaccard)).into()),
                ]),
                Flags::default(),
            ))
        })
        .collect()
}

pub fn detect_partitioned(g: &ContentGraph<'_>, cfg: &DetectConfig) -> Vec<Hypothesis> {
    partitions_in(g, cfg, &Claimed::new())
}

// Join partner: a strongly overlapping value set between otherwise
// different schemas.

fn join_of(g: &ContentGraph<'_>, b: &PairBundle, cfg: &DetectConfig) -> Option<Hypothesis> {
    if b.max_coverage() > cfg.join_cov_max {
        return None;
    }
    let mut strong: Vec<&Match> = b
        .value_edges
        .iter()
        .filter(|m| m.confidence >= cfg.join_value_conf)
        .collect();
    if strong.is_empty() {
        return None;
    }
    strong.sort_by(|x, y| {
        y.confidence
            .total_cmp(&x.confidence)
            .then_with(|| (&x.left, &x.right).cmp(&(&y.left, &y.right)))
    });
    let best = strong[0];
    let keys: BTreeSet<(&str, &str)> = strong.iter().map(|m| (m.left.as_str(), m.right.as_str())).collect();
    let mut edges: Vec<Match> = strong.iter().map(|m| (*m).clone()).collect();
    edges.extend(
        b.attr_edges
            .iter()
            .filter(|m| keys.contains(&(m.left.as_str(), m.right.as_str())))
            .cloned(),
    );
    let name = |attr_id: &str| {
        attr_id
            .rsplit_once('#')
            .and_then(|(d, o)| Some((g.corpus.get(d)?, o.parse::<usize>().ok()?)))
            .and_then(|(d, o)| d.attributes.get(o))
            .map(|a| a.name.clone())
            .unwrap_or_default()
    };
    Some(Hypothesis::new(
        HypothesisClass::JoinPartner,
        pair_datasets(b),
        edges,
        ev([
            ("left_attribute", best.left.as_str().into()),
            ("right_attribute", best.right.as_str().into()),
            ("left_name", name(&best.left).into()),
            ("right_name", name(&best.right).into()),
            ("value_conf", best.confidence.into()),
            ("max_attr_coverage", b.max_coverage().into()),
        ]),
        Flags::default(),
    ))
}

fn joins_in(g: &ContentGraph<'_>, cfg: &DetectConfig, claimed: &Claimed) -> Vec<Hypothesis> {
    unclaimed(g, claimed).filter_map(|b| join_of(g, b, cfg)).collect()
}

pub fn detect_join_partners(g: &ContentGraph<'_>, cfg: &DetectConfig) -> Vec<Hypothesis> {
    joins_in(g, cfg, &Claimed::new())
}

// Similar domain: a shared subset of attribute names.

fn similar_domain_of(g: &ContentGraph<'_>, b: &PairBundle, cfg: &DetectConfig) -> Option<Hypothesis> {
    let shared: Vec<&Match> = b
        .attr_edges
        .iter()
        .filter(|m| m.confidence >= cfg.simdom_attr_conf)
        .collect();
    let min_cov = b.min_coverage();
    if shared.len() < cfg.simdom_min_shared || min_cov < cfg.simdom_cov_lo || min_cov >= cfg.simdom_cov_hi {
        return None;
    }
    let names: BTreeSet<String> = shared
        .iter()
        .filter_map(|m| {
            let (d, o) = m.left.rsplit_once('#')?;
            let a = g.corpus.get(d)?.attributes.get(o.parse::<usize>().ok()?)?;
            Some(a.canonical_name.clone())
        })
        .collect();
    let mut edges: Vec<Match> = shared.iter().map(|m| (*m).clone()).collect();
    edges.extend(b.prop_edges.iter().cloned());
    Some(Hypothesis::new(
        HypothesisClass::SimilarDomain,
        pair_datasets(b),
        edges,
        ev([
            ("shared_attributes", shared.len().into()),
            ("shared_names", names.into_iter().collect::<Vec<_>>().join("; ").into()),
            ("min_attr_coverage", min_cov.into()),
            ("metadata_support", b.mean_prop_conf.into()),
        ]),
        Flags::default(),
    ))
}

fn similar_domains_in(g: &ContentGraph<'_>, cfg: &DetectConfig, claimed: &Claimed) -> Vec<Hypothesis> {
    unclaimed(g, claimed)
        .filter_map(|b| similar_domain_of(g, b, cfg))
        .collect()
}

pub fn detect_similar_domains(g: &ContentGraph<'_>, cfg: &DetectConfig) -> Vec<Hypothesis> {
    similar_domains_in(g, cfg, &Claimed::new())
}

// Simple relation: connected only through metadata properties.

fn simple_relation_of(g: &ContentGraph<'_>, b: &PairBundle, cfg: &DetectConfig) -> Option<Hypothesis> {
    if !b.attr_edges.is_empty() || !b.value_edges.is_empty() {
        return None;
    }
    let best = b
        .prop_edges
        .iter()
        .filter(|m| m.confidence >= cfg.simple_prop_min)
        .min_by(|x, y| y.confidence.total_cmp(&x.confidence).then_with(|| x.left.cmp(&y.left)))?;

    // Highest-idf token shared by the two datasets over the matched keys.
    let (d1, d2) = (g.corpus.get(&b.d1)?, g.corpus.get(&b.d2)?);
    let mut marker: Option<(f64, String)> = None;
    for m in &b.prop_edges {
        let key = m.left.rsplit_once('@').map(|(_, k)| k).unwrap_or_default();
        let (Some(t1), Some(t2), Some(idf)) = (d1.properties.get(key), d2.properties.get(key), g.idfs.get(key))
        else {
            continue;
        };
        let s1: BTreeSet<String> = tokens(t1).into_iter().collect();
        let s2: BTreeSet<String> = tokens(t2).into_iter().collect();
        for t in s1.intersection(&s2) {
            let w = idf.weight(t);
            let better = match &marker {
                None => true,
                Some((bw, bt)) => w > *bw || (w == *bw && t < bt),
            };
            if better {
                marker = Some((w, t.clone()));
            }
        }
    }
    let (marker_idf, marker_token) = marker.unwrap_or((0.0, String::new()));
    let key = best.left.rsplit_once('@').map(|(_, k)| k).unwrap_or_default();
    Some(Hypothesis::new(
        HypothesisClass::SimpleRelation,
        pair_datasets(b),
        b.prop_edges.clone(),
        ev([
            ("property", key.into()),
            ("prop_conf", best.confidence.into()),
            ("shared_token", marker_token.into()),
            ("shared_token_idf", marker_idf.into()),
        ]),
        Flags::default(),
    ))
}

fn simple_relations_in(g: &ContentGraph<'_>, cfg: &DetectConfig, claimed: &Claimed) -> Vec<Hypothesis> {
    unclaimed(g, claimed)
        .filter_map(|b| simple_relation_of(g, b, cfg))
        .collect()
}

pub fn detect_simple_relations(g: &ContentGraph<'_>, cfg: &DetectConfig) -> Vec<Hypothesis> {
    simple_relations_in(g, cfg, &Claimed::new())
}

/// Runs all detectors. Unless `allow_multiclass` is set, a dataset pair is
/// assigned to at most one class, in the order Duplicate, Versioned,
/// Partitioned, JoinPartner, SimilarDomain, SimpleRelation; every pair
/// inside a partition group is withheld from the pairwise classes after it.
/// Output is sorted by `hyp_id`.
pub fn detect_all(g: &ContentGraph<'_>, cfg: &DetectConfig) -> Vec<Hypothesis> {
    let mut out = Vec::new();
    if cfg.allow_multiclass {
        out.extend(detect_duplicates(g, cfg));
        out.extend(detect_versioned(g, cfg));
        out.extend(detect_partitioned(g, cfg));
        out.extend(detect_join_partners(g, cfg));
        out.extend(detect_similar_domains(g, cfg));
        out.extend(detect_simple_relations(g, cfg));
    } else {
        let mut claimed = Claimed::new();
        let claim_pairs = |hyps: &[Hypothesis], claimed: &mut Claimed| {
            for h in hyps {
                for (i, a) in h.datasets.iter().enumerate() {
                    for b in &h.datasets[i + 1..] {
                        claimed.insert((a.clone(), b.clone()));
                    }
                }
            }
        };
        type Stage = fn(&ContentGraph<'_>, &DetectConfig, &Claimed) -> Vec<Hypothesis>;
        let stages: [Stage; 6] = [
            duplicates_in,
            versioned_in,
            partitions_in,
            joins_in,
            similar_domains_in,
            simple_relations_in,
        ];
        for stage in stages {
            let found = stage(g, cfg, &claimed);
            claim_pairs(&found, &mut claimed);
            out.extend(found);
        }
    }
    out.sort_by(|a, b| a.hyp_id.cmp(&b.hyp_id));
    out
}
