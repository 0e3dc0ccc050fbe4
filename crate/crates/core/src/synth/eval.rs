use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::hypotheses::{Hypothesis, HypothesisClass};
use crate::io::{fmt6, write_csv};

use super::GroundTruth;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ClassScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ClassScore {
    /// 1.0 when nothing was predicted.
    pub fn precision(&self) -> f64 {
        let predicted = self.tp + self.fp;
        if predicted == 0 {
            1.0
        } else {
            self.tp as f64 / predicted as f64
        }
    }

    /// 1.0 when there was nothing to find.
    pub fn recall(&self) -> f64 {
        let actual = self.tp + self.fn_;
        if actual == 0 {
            1.0
        } else {
            self.tp as f64 / actual as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn add(&mut self, other: &ClassScore) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    /// One entry per class, in precedence order.
    pub classes: Vec<(HypothesisClass, ClassScore)>,
    /// Micro-averaged over all classes.
    pub overall: ClassScore,
}

impl Evaluation {
    pub fn class(&self, class: HypothesisClass) -> &ClassScore {
        &self.classes.iter().find(|(c, _)| *c == class).expect("every class is scored").1
    }

    pub const HEADER: [&'static str; 7] = ["class", "tp", "fp", "fn", "precision", "recall", "f1"];

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let row = |name: &str, s: &ClassScore| {
            vec![
                name.to_owned(),
                s.tp.to_string(),
                s.fp.to_string(),
                s.fn_.to_string(),
                fmt6(s.precision()),
                fmt6(s.recall()),
                fmt6(s.f1()),
            ]
        };
        let rows = self
            .classes
            .iter()
            .map(|(c, s)| row(c.as_str(), s))
            .chain(std::iter::once(row("overall", &self.overall)));
        write_csv(path, &Self::HEADER, rows)
    }
}

fn jaccard(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Scores detected hypotheses against ground truth. Pairwise classes need
/// the exact dataset pair; a partition group matches a truth group when
/// their Jaccard similarity is at least 0.5, or only when equal with
/// `exact_groups`. Each truth record is matched at most once.
pub fn evaluate_detection(hyps: &[Hypothesis], truth: &GroundTruth, exact_groups: bool) -> Evaluation {
    let mut classes = Vec::new();
    let mut overall = ClassScore::default();
    for class in HypothesisClass::ALL {
        let predicted: Vec<BTreeSet<&str>> = hyps
            .iter()
            .filter(|h| h.class == class)
            .map(|h| h.datasets.iter().map(String::as_str).collect())
            .collect();
        let actual: Vec<BTreeSet<&str>> = truth
            .of_class(class)
            .map(|r| r.datasets.iter().map(String::as_str).collect())
            .collect();

        // Candidate matches, best first, then greedy one-to-one.
        let mut candidates = Vec::new();
        for (i, p) in predicted.iter().enumerate() {
            for (j, a) in actual.iter().enumerate() {
                let sim = jaccard(p, a);
                let ok = if class == HypothesisClass::Partitioned && !exact_groups {
                    sim >= 0.5
                } else {
                    sim == 1.0
                };
                if ok {
                    candidates.push((sim, i, j));
                }
            }
        }
        candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut used_p = vec![false; predicted.len()];
        let mut used_a = vec![false; actual.len()];
        let mut tp = 0;
        for (_, i, j) in candidates {
            if !used_p[i] && !used_a[j] {
                used_p[i] = true;
                used_a[j] = true;
                tp += 1;
            }
        }
        let score = ClassScore {
            tp,
            fp: predicted.len() - tp,
            fn_: actual.len() - tp,
        };
        overall.add(&score);
        classes.push((class, score));
    }
    Evaluation { classes, overall }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypotheses::Flags;
    use crate::matching::{Match, MatchKind};
    use crate::synth::TruthRecord;

    fn hyp(class: HypothesisClass, ds: &[&str]) -> Hypothesis {
        let e = Match::new(
            MatchKind::PropertyMatch,
            format!("{}@title", ds[0]),
            format!("{}@title", ds[1]),
            ds[0],
            ds[1],
            1.0,
        );
        Hypothesis::new(
            class,
            ds.iter().map(|s| s.to_string()).collect(),
            vec![e],
            Default::default(),
            Flags::default(),
        )
    }

    fn truth(records: &[(HypothesisClass, &[&str])]) -> GroundTruth {
        GroundTruth {
            records: records.iter().map(|(c, d)| TruthRecord::new(*c, d)).collect(),
        }
    }

    #[test]
    fn perfect_detection() {
        let gt = truth(&[
            (HypothesisClass::Duplicate, &["a", "b"]),
            (HypothesisClass::Partitioned, &["p", "q", "r"]),
        ]);
        let hyps = vec![hyp(HypothesisClass::Duplicate, &["a", "b"]), hyp(HypothesisClass::Partitioned, &["p", "q", "r"])];
        let e = evaluate_detection(&hyps, &gt, false);
        for (_, s) in &e.classes {
            assert_eq!((s.precision(), s.recall()), (1.0, 1.0));
        }
        assert_eq!(e.overall.tp, 2);
    }

    #[test]
    fn nothing_detected() {
        let gt = truth(&[(HypothesisClass::JoinPartner, &["a", "b"])]);
        let e = evaluate_detection(&[], &gt, false);
        let s = e.class(HypothesisClass::JoinPartner);
        assert_eq!((s.precision(), s.recall()), (1.0, 0.0));
        assert_eq!(s.f1(), 0.0);
    }

    #[test]
    fn one_spurious_over_ten() {
        let ids: Vec<String> = (0..22).map(|i| format!("d{i:02}")).collect();
        let pairs: Vec<[&str; 2]> = (0..10).map(|i| [ids[2 * i].as_str(), ids[2 * i + 1].as_str()]).collect();
        let gt = GroundTruth {
            records: pairs.iter().map(|p| TruthRecord::new(HypothesisClass::SimilarDomain, p)).collect(),
        };
        let mut hyps: Vec<Hypothesis> = pairs.iter().map(|p| hyp(HypothesisClass::SimilarDomain, p)).collect();
        hyps.push(hyp(HypothesisClass::SimilarDomain, &[&ids[20], &ids[21]]));
        let s = evaluate_detection(&hyps, &gt, false).class(HypothesisClass::SimilarDomain).clone();
        assert!((s.precision() - 10.0 / 11.0).abs() < 1e-12);
        assert_eq!(s.recall(), 1.0);
    }

    #[test]
    fn partial_groups() {
        let gt = truth(&[(HypothesisClass::Partitioned, &["p", "q", "r", "s"])]);
        let hyps = vec![hyp(HypothesisClass::Partitioned, &["p", "q", "r"])];
        assert_eq!(evaluate_detection(&hyps, &gt, false).class(HypothesisClass::Partitioned).tp, 1);
        assert_eq!(evaluate_detection(&hyps, &gt, true).class(HypothesisClass::Partitioned).tp, 0);
        // A pair is not a partial match for pairwise classes.
        let gt = truth(&[(HypothesisClass::Duplicate, &["a", "b"])]);
        let hyps = vec![hyp(HypothesisClass::Duplicate, &["a", "c"])];
        let s = evaluate_detection(&hyps, &gt, false).class(HypothesisClass::Duplicate).clone();
        assert_eq!((s.tp, s.fp, s.fn_), (0, 1, 1));
    }
}
