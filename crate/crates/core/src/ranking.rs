//! Ordering hypotheses by probability of verification, verification cost and
//! integration benefit.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::hypotheses::{Hypothesis, HypothesisClass};
use crate::io::{fmt6, write_csv};

/// Views and downloads of one dataset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Usage {
    pub views: u64,
    pub downloads: u64,
}

/// Platform usage per dataset. Datasets without an entry count as unused.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UsageStats(pub BTreeMap<String, Usage>);

impl UsageStats {
    pub fn get(&self, dataset_id: &str) -> Usage {
        self.0.get(dataset_id).copied().unwrap_or_default()
    }

    /// Relevance `1 + ln(1 + views + downloads)`; 1 for unused datasets.
    pub fn relevance(&self, dataset_id: &str) -> f64 {
        let u = self.get(dataset_id);
        1.0 + (1.0 + u.views as f64 + u.downloads as f64).ln()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Hypotheses most likely to be confirmed first.
    #[default]
    MostLikely,
    /// Hypotheses closest to a coin flip first.
    MostUncertain,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::MostLikely => "most_likely",
            Strategy::MostUncertain => "most_uncertain",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "most_likely" => Ok(Strategy::MostLikely),
            "most_uncertain" => Ok(Strategy::MostUncertain),
            _ => Err(Error::Config(format!(
                "unknown strategy {s:?}; expected most_likely or most_uncertain"
            ))),
        }
    }
}

/// Which hypotheses count toward the connectivity of a hypothesis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    /// Others sharing at least one dataset.
    #[default]
    Union,
    /// Others containing every dataset.
    Intersection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankingConfig {
    /// Weight of hypothesis size against context size in the cost.
    pub alpha: f64,
    pub strategy: Strategy,
    pub epsilon: f64,
    pub connectivity: Connectivity,
}

impl Default for RankingConfig {
    fn default() -> Self {
        RankingConfig {
            alpha: 0.5,
            strategy: Strategy::MostLikely,
            epsilon: 1e-6,
            connectivity: Connectivity::Union,
        }
    }
}

impl RankingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedHypothesis {
    pub rank: usize,
    pub hyp_id: String,
    pub class: HypothesisClass,
    pub datasets: Vec<String>,
    pub p: f64,
    pub p_strategy: f64,
    pub v: f64,
    pub b: f64,
    pub p_hat: f64,
    pub v_hat: f64,
    pub b_hat: f64,
    pub score: f64,
}

/// Mean edge confidence, regardless of edge kind.
pub fn probability(h: &Hypothesis) -> f64 {
    let n = h.edge_count();
    assert!(n > 0, "hypothesis {} has no edges", h.hyp_id);
    h.edges().map(|m| m.confidence).sum::<f64>() / n as f64
}

pub fn strategy_transform(p: f64, strategy: Strategy) -> f64 {
    match strategy {
        Strategy::MostLikely => p,
        Strategy::MostUncertain => 1.0 - 2.0 * (p - 0.5).abs(),
    }
}

/// `alpha * |edges| + (1 - alpha) * sum of attribute counts`.
pub fn cost(h: &Hypothesis, corpus: &Corpus, cfg: &RankingConfig) -> Result<f64> {
    let mut context = 0usize;
    for d in &h.datasets {
        let ds = corpus.get(d).ok_or_else(|| Error::UnknownDataset(d.clone()))?;
        context += ds.attribute_count();
    }
    Ok(cfg.alpha * h.edge_count() as f64 + (1.0 - cfg.alpha) * context as f64)
}

/// Which hypotheses mention each dataset.
struct Membership<'h> {
    by_dataset: HashMap<&'h str, Vec<usize>>,
}

impl<'h> Membership<'h> {
    fn new(hyps: &'h [Hypothesis]) -> Self {
        let mut by_dataset: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, h) in hyps.iter().enumerate() {
            for d in &h.datasets {
                by_dataset.entry(d.as_str()).or_default().push(i);
            }
        }
        Membership { by_dataset }
    }

    fn connectivity(&self, h: &Hypothesis, mode: Connectivity) -> usize {
        let lists = h.datasets.iter().map(|d| self.by_dataset.get(d.as_str()).map_or(&[][..], |v| v));
        let hits: BTreeSet<usize> = match mode {
            Connectivity::Union => lists.flatten().copied().collect(),
            Connectivity::Intersection => {
                let mut sets = lists.map(|l| l.iter().copied().collect::<BTreeSet<usize>>());
                let first = sets.next().unwrap_or_default();
                sets.fold(first, |acc, s| acc.intersection(&s).copied().collect())
            }
        };
        // `h` itself is always among the hits when it belongs to the set.
        hits.len().saturating_sub(1)
    }
}

/// Connectivity times the product of dataset relevances. `h` must be an
/// element of `all`.
pub fn benefit(h: &Hypothesis, all: &[Hypothesis], usage: &UsageStats, mode: Connectivity) -> f64 {
    benefit_with(h, &Membership::new(all), usage, mode)
}

fn benefit_with(h: &Hypothesis, m: &Membership<'_>, usage: &UsageStats, mode: Connectivity) -> f64 {
    let relevance: f64 = h.datasets.iter().map(|d| usage.relevance(d)).product();
    m.connectivity(h, mode) as f64 * relevance
}

/// Min-max normalization; a constant series maps to all ones.
pub fn normalize(xs: &[f64]) -> Vec<f64> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return vec![1.0; xs.len()];
    }
    xs.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

pub fn combine(p_hat: f64, v_hat: f64, b_hat: f64, epsilon: f64) -> f64 {
    p_hat * b_hat * (1.0 - v_hat + epsilon) / (1.0 + epsilon)
}

pub fn rank(
    hyps: &[Hypothesis],
    corpus: &Corpus,
    usage: &UsageStats,
    cfg: &RankingConfig,
) -> Result<Vec<RankedHypothesis>> {
    cfg.validate()?;
    let membership = Membership::new(hyps);
    let factors: Vec<(f64, f64, f64)> = hyps
        .par_iter()
        .map(|h| {
            Ok((
                probability(h),
                cost(h, corpus, cfg)?,
                benefit_with(h, &membership, usage, cfg.connectivity),
            ))
        })
        .collect::<Result<_>>()?;

    let p: Vec<f64> = factors.iter().map(|f| strategy_transform(f.0, cfg.strategy)).collect();
    let v: Vec<f64> = factors.iter().map(|f| f.1).collect();
    let b: Vec<f64> = factors.iter().map(|f| f.2).collect();
    let (p_hat, v_hat, b_hat) = (normalize(&p), normalize(&v), normalize(&b));

    let mut ranked: Vec<RankedHypothesis> = hyps
        .iter()
        .enumerate()
        .map(|(i, h)| RankedHypothesis {
            rank: 0,
            hyp_id: h.hyp_id.clone(),
            class: h.class,
            datasets: h.datasets.clone(),
            p: factors[i].0,
            p_strategy: p[i],
            v: v[i],
            b: b[i],
            p_hat: p_hat[i],
            v_hat: v_hat[i],
            b_hat: b_hat[i],
            score: combine(p_hat[i], v_hat[i], b_hat[i], cfg.epsilon),
        })
        .collect();
    ranked.sort_by(|x, y| y.score.total_cmp(&x.score).then_with(|| x.hyp_id.cmp(&y.hyp_id)));
    for (i, r) in ranked.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(ranked)
}

pub const RANKING_HEADER: [&str; 12] = [
    "rank", "hyp_id", "class", "datasets", "p", "p_strategy", "v", "b", "p_hat", "v_hat", "b_hat", "score",
];

pub fn write_ranking_csv(path: &Path, ranked: &[RankedHypothesis]) -> Result<()> {
    write_csv(
        path,
        &RANKING_HEADER,
        ranked.iter().map(|r| {
            vec![
                r.rank.to_string(),
                r.hyp_id.clone(),
                r.class.as_str().to_owned(),
                r.datasets.join(";"),
                fmt6(r.p),
                fmt6(r.p_strategy),
                fmt6(r.v),
                fmt6(r.b),
                fmt6(r.p_hat),
                fmt6(r.v_hat),
                fmt6(r.b_hat),
                fmt6(r.score),
            ]
        }),
    )
}

/// One row of the rank-ordered factor distributions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistRow {
    pub rank_index: usize,
    pub p_hat: f64,
    pub v_hat: f64,
    pub b_hat: f64,
    pub score: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DistReport {
    pub rows: Vec<DistRow>,
}

pub const DISTRIBUTIONS_HEADER: [&str; 5] = ["rank_index", "p_hat", "v_hat", "b_hat", "score"];

impl DistReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(
            path,
            &DISTRIBUTIONS_HEADER,
            self.rows.iter().map(|r| {
                vec![
                    r.rank_index.to_string(),
                    fmt6(r.p_hat),
                    fmt6(r.v_hat),
                    fmt6(r.b_hat),
                    fmt6(r.score),
                ]
            }),
        )
    }

    pub fn series(&self, pick: fn(&DistRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(pick).collect()
    }

    /// Maximal runs of at least `min_len` equal values in a series.
    pub fn plateaus(series: &[f64], min_len: usize) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < series.len() {
            let mut j = i + 1;
            while j < series.len() && series[j] == series[i] {
                j += 1;
            }
            if j - i >= min_len {
                out.push((series[i], j - i));
            }
            i = j;
        }
        out
    }
}

/// Each normalized factor and the score, sorted descending on its own.
pub fn distribution_report(ranked: &[RankedHypothesis]) -> DistReport {
    let sorted = |pick: fn(&RankedHypothesis) -> f64| {
        let mut v: Vec<f64> = ranked.iter().map(pick).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let p = sorted(|r| r.p_hat);
    let v = sorted(|r| r.v_hat);
    let b = sorted(|r| r.b_hat);
    let s = sorted(|r| r.score);
    DistReport {
        rows: (0..ranked.len())
            .map(|i| DistRow {
                rank_index: i + 1,
                p_hat: p[i],
                v_hat: v[i],
                b_hat: b[i],
                score: s[i],
            })
            .collect(),
    }
}
