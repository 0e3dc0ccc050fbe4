use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::canon::tokens;
use crate::corpus::Corpus;

/// Inverse document frequencies of the tokens of one metadata property.
///
/// `idf(t) = ln(doc_count / df(t))`, where `doc_count` counts datasets with a
/// non-empty value for the property.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    pub key: String,
    pub doc_count: usize,
    pub idf: BTreeMap<String, f64>,
}

impl IdfTable {
    /// Tokens never seen in the corpus are weighted as if they occurred in a
    /// single document.
    pub fn weight(&self, token: &str) -> f64 {
        match self.idf.get(token) {
            Some(&w) => w,
            None if self.doc_count > 0 => (self.doc_count as f64).ln(),
            None => 0.0,
        }
    }
}

pub type IdfTables = BTreeMap<String, IdfTable>;

pub fn build_idf(corpus: &Corpus, key: &str) -> IdfTable {
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    let mut docs = 0;
    for d in corpus.datasets() {
        let Some(text) = d.properties.get(key) else {
            continue;
        };
        let uniq: BTreeSet<String> = tokens(text).into_iter().collect();
        if uniq.is_empty() {
            continue;
        }
        docs += 1;
        for t in uniq {
            *df.entry(t).or_default() += 1;
        }
    }
    let n = docs as f64;
    IdfTable {
        key: key.to_owned(),
        doc_count: docs,
        idf: df
            .into_iter()
            .map(|(t, c)| (t, (n / c as f64).ln()))
            .collect(),
    }
}

/// One table per property key occurring anywhere in the corpus.
pub fn build_all_idf(corpus: &Corpus) -> IdfTables {
    let keys: BTreeSet<&str> = corpus
        .datasets()
        .iter()
        .flat_map(|d| d.properties.keys())
        .collect();
    keys.into_iter()
        .map(|k| (k.to_owned(), build_idf(corpus, k)))
        .collect()
}

/// Sparse tf·idf vector of `text`, with raw token counts as tf.
pub fn tfidf_vector(text: &str, idf: &IdfTable) -> BTreeMap<String, f64> {
    let mut tf: BTreeMap<String, f64> = BTreeMap::new();
    for t in tokens(text) {
        *tf.entry(t).or_default() += 1.0;
    }
    tf.into_iter()
        .map(|(t, c)| {
            let w = c * idf.weight(&t);
            (t, w)
        })
        .collect()
}

pub fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let na: f64 = a.values().map(|w| w * w).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|w| w * w).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    if a == b {
        // na * nb can round away from the squared norm.
        return 1.0;
    }
    let dot: f64 = a
        .iter()
        .filter_map(|(t, wa)| b.get(t).map(|wb| wa * wb))
        .sum();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// Cosine similarity of the tf·idf vectors of two property texts.
pub fn property_similarity(p1: &str, p2: &str, idf: &IdfTable) -> f64 {
    cosine(&tfidf_vector(p1, idf), &tfidf_vector(p2, idf))
}
