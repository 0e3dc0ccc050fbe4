//! Integration hypotheses: classed subsets of the matches relation found by
//! edge-pattern matching over the content graph.

mod detect;
mod summary;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::fmt6;
use crate::matching::{Match, MatchKind};

pub use detect::{
    detect_all, detect_duplicates, detect_join_partners, detect_partitioned, detect_similar_domains,
    detect_simple_relations, detect_versioned,
};
pub use summary::{summarize, CountsReport, CountsRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisClass {
    Duplicate,
    Versioned,
    Partitioned,
    JoinPartner,
    SimilarDomain,
    SimpleRelation,
}

impl HypothesisClass {
    /// In precedence order.
    pub const ALL: [HypothesisClass; 6] = [
        HypothesisClass::Duplicate,
        HypothesisClass::Versioned,
        HypothesisClass::Partitioned,
        HypothesisClass::JoinPartner,
        HypothesisClass::SimilarDomain,
        HypothesisClass::SimpleRelation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HypothesisClass::Duplicate => "duplicate",
            HypothesisClass::Versioned => "versioned",
            HypothesisClass::Partitioned => "partitioned",
            HypothesisClass::JoinPartner => "join_partner",
            HypothesisClass::SimilarDomain => "similar_domain",
            HypothesisClass::SimpleRelation => "simple_relation",
        }
    }

    pub fn is_error_correction(self) -> bool {
        matches!(
            self,
            HypothesisClass::Duplicate | HypothesisClass::Versioned | HypothesisClass::Partitioned
        )
    }
}

impl fmt::Display for HypothesisClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HypothesisClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HypothesisClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown hypothesis class {s}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Evidence {
    Number(f64),
    Text(String),
}

impl Evidence {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Evidence::Number(x) => Some(*x),
            Evidence::Text(_) => None,
        }
    }
}

impl From<f64> for Evidence {
    fn from(x: f64) -> Self {
        Evidence::Number(x)
    }
}

impl From<usize> for Evidence {
    fn from(x: usize) -> Self {
        Evidence::Number(x as f64)
    }
}

impl From<String> for Evidence {
    fn from(s: String) -> Self {
        Evidence::Text(s)
    }
}

impl From<&str> for Evidence {
    fn from(s: &str) -> Self {
        Evidence::Text(s.to_owned())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VersionCase {
    /// Attributes were added or removed.
    Schema,
    /// Rows were added or removed (sub/superset).
    Instance,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    #[serde(default)]
    pub divergent_metadata: bool,
    /// Candidate superset dataset for instance-level versions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version_case: Option<VersionCase>,
}

/// `H = H_A ∪ H_V ∪ H_P` over a sorted set of datasets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub hyp_id: String,
    pub class: HypothesisClass,
    pub datasets: Vec<String>,
    pub attribute_edges: Vec<Match>,
    pub value_edges: Vec<Match>,
    pub property_edges: Vec<Match>,
    pub evidence: BTreeMap<String, Evidence>,
    pub flags: Flags,
}

impl Hypothesis {
    /// Partitions `edges` by kind, sorts everything and derives the id.
    pub fn new(
        class: HypothesisClass,
        mut datasets: Vec<String>,
        mut edges: Vec<Match>,
        evidence: BTreeMap<String, Evidence>,
        flags: Flags,
    ) -> Self {
        datasets.sort();
        datasets.dedup();
        edges.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        edges.dedup_by(|a, b| a.sort_key() == b.sort_key());

        let mut hasher = Sha256::new();
        hasher.update(class.as_str().as_bytes());
        for m in &edges {
            hasher.update(
                format!(
                    "\n{}|{}|{}|{}",
                    m.kind.as_str(),
                    m.left,
                    m.right,
                    fmt6(m.confidence)
                )
                .as_bytes(),
            );
        }
        let digest = hex::encode(hasher.finalize());
        let hyp_id = format!("{}:{}:{}", class.as_str(), datasets.join("+"), &digest[..12]);

        let mut h = Hypothesis {
            hyp_id,
            class,
            datasets,
            attribute_edges: Vec::new(),
            value_edges: Vec::new(),
            property_edges: Vec::new(),
            evidence,
            flags,
        };
        for m in edges {
            match m.kind {
                MatchKind::AttributeMatch => h.attribute_edges.push(m),
                MatchKind::ValueSetMatch => h.value_edges.push(m),
                MatchKind::PropertyMatch => h.property_edges.push(m),
            }
        }
        h
    }

    pub fn edges(&self) -> impl Iterator<Item = &Match> {
        self.attribute_edges
            .iter()
            .chain(&self.value_edges)
            .chain(&self.property_edges)
    }

    pub fn edge_count(&self) -> usize {
        self.attribute_edges.len() + self.value_edges.len() + self.property_edges.len()
    }

    pub fn involves(&self, dataset_id: &str) -> bool {
        self.datasets.binary_search_by(|d| d.as_str().cmp(dataset_id)).is_ok()
    }

    /// Checks the structural invariants: non-empty edges, edges inside the
    /// dataset set, and the kind partition.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Integrity(format!("{}: {msg}", self.hyp_id)));
        if self.edge_count() == 0 {
            return bad("no edges");
        }
        if self.datasets.len() < 2 {
            return bad("fewer than two datasets");
        }
        for (kind, list) in [
            (MatchKind::AttributeMatch, &self.attribute_edges),
            (MatchKind::ValueSetMatch, &self.value_edges),
            (MatchKind::PropertyMatch, &self.property_edges),
        ] {
            if list.iter().any(|m| m.kind != kind) {
                return bad("edge filed under the wrong kind");
            }
        }
        if self
            .edges()
            .any(|m| !self.involves(&m.left_dataset) || !self.involves(&m.right_dataset))
        {
            return bad("edge leaves the hypothesis datasets");
        }
        Ok(())
    }
}

/// Detection thresholds. Upper-bound parameters end in `_max`/`_hi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub dup_cov: f64,
    pub dup_value_conf: f64,
    /// Minimum mean exact-set Jaccard over aligned attributes. Keeps proper
    /// sub/supersets out of the duplicate class.
    pub dup_jaccard_min: f64,
    /// Duplicates whose mean property confidence is below this are flagged
    /// as having divergent metadata.
    pub dup_divergent_prop: f64,
    pub ver_cov_lo: f64,
    /// Minimum mean value confidence over aligned attributes for
    /// schema-level versions.
    pub ver_value_conf: f64,
    pub ver_containment: f64,
    pub ver_jaccard_max: f64,
    pub part_min_group: usize,
    pub part_cov: f64,
    pub part_overlap_max: f64,
    pub part_prop_min: f64,
    pub join_value_conf: f64,
    pub join_cov_max: f64,
    pub simdom_min_shared: usize,
    /// Attribute edges at or above this confidence count as shared.
    pub simdom_attr_conf: f64,
    pub simdom_cov_lo: f64,
    pub simdom_cov_hi: f64,
    pub simple_prop_min: f64,
    /// Let one dataset pair carry several classes.
    pub allow_multiclass: bool,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            dup_cov: 0.95,
            dup_value_conf: 0.9,
            dup_jaccard_min: 0.9,
            dup_divergent_prop: 0.5,
            ver_cov_lo: 0.5,
            ver_value_conf: 0.3,
            ver_containment: 0.8,
            ver_jaccard_max: 0.9,
            part_min_group: 3,
            part_cov: 0.9,
            part_overlap_max: 0.1,
            part_prop_min: 0.4,
            join_value_conf: 0.7,
            join_cov_max: 0.5,
            simdom_min_shared: 2,
            simdom_attr_conf: 0.7,
            simdom_cov_lo: 0.3,
            simdom_cov_hi: 0.9,
            simple_prop_min: 0.4,
            allow_multiclass: false,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dup_cov", self.dup_cov),
            ("dup_value_conf", self.dup_value_conf),
            ("dup_jaccard_min", self.dup_jaccard_min),
            ("dup_divergent_prop", self.dup_divergent_prop),
            ("ver_cov_lo", self.ver_cov_lo),
            ("ver_value_conf", self.ver_value_conf),
            ("ver_containment", self.ver_containment),
            ("ver_jaccard_max", self.ver_jaccard_max),
            ("part_cov", self.part_cov),
            ("part_overlap_max", self.part_overlap_max),
            ("part_prop_min", self.part_prop_min),
            ("join_value_conf", self.join_value_conf),
            ("join_cov_max", self.join_cov_max),
            ("simdom_attr_conf", self.simdom_attr_conf),
            ("simdom_cov_lo", self.simdom_cov_lo),
            ("simdom_cov_hi", self.simdom_cov_hi),
            ("simple_prop_min", self.simple_prop_min),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.part_min_group < 2 {
            return Err(Error::Config("part_min_group must be at least 2".into()));
        }
        if self.simdom_min_shared == 0 {
            return Err(Error::Config("simdom_min_shared must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(kind: MatchKind, l: &str, r: &str, c: f64) -> Match {
        let ld = l.split(['#', '@']).next().unwrap();
        let rd = r.split(['#', '@']).next().unwrap();
        Match::new(kind, l.into(), r.into(), ld, rd, c)
    }

    #[test]
    fn ids_are_deterministic_and_content_addressed() {
        let edges = vec![
            edge(MatchKind::PropertyMatch, "a@title", "b@title", 0.5),
            edge(MatchKind::AttributeMatch, "a#0", "b#0", 1.0),
        ];
        let h1 = Hypothesis::new(
            HypothesisClass::Duplicate,
            vec!["b".into(), "a".into()],
            edges.clone(),
            BTreeMap::new(),
            Flags::default(),
        );
        let mut rev = edges.clone();
        rev.reverse();
        let h2 = Hypothesis::new(
            HypothesisClass::Duplicate,
            vec!["a".into(), "b".into()],
            rev,
            BTreeMap::new(),
            Flags::default(),
        );
        assert_eq!(h1.hyp_id, h2.hyp_id);
        assert!(h1.hyp_id.starts_with("duplicate:a+b:"));
        assert_eq!(h1.attribute_edges.len(), 1);
        assert_eq!(h1.property_edges.len(), 1);
        h1.validate().unwrap();

        let h3 = Hypothesis::new(
            HypothesisClass::Duplicate,
            vec!["a".into(), "b".into()],
            edges[..1].to_vec(),
            BTreeMap::new(),
            Flags::default(),
        );
        assert_ne!(h1.hyp_id, h3.hyp_id);
    }

    #[test]
    fn class_names_roundtrip() {
        for c in HypothesisClass::ALL {
            assert_eq!(c.as_str().parse::<HypothesisClass>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.as_str()));
        }
    }

    #[test]
    fn config_validation() {
        assert!(DetectConfig::default().validate().is_ok());
        let bad = DetectConfig {
            part_min_group: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
