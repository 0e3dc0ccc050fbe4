use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::io::{fmt6, write_csv};

use super::{Hypothesis, HypothesisClass};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountsRow {
    pub class: HypothesisClass,
    pub hypothesis_count: usize,
    pub distinct_datasets: usize,
    /// Hypotheses per distinct dataset; zero when the class is empty.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountsReport {
    /// One row per class, in precedence order.
    pub rows: Vec<CountsRow>,
    pub total_hypotheses: usize,
    pub total_datasets: usize,
}

impl CountsReport {
    pub fn row(&self, class: HypothesisClass) -> &CountsRow {
        self.rows.iter().find(|r| r.class == class).expect("every class has a row")
    }

    pub fn overall_ratio(&self) -> f64 {
        ratio(self.total_hypotheses, self.total_datasets)
    }

    pub const HEADER: [&'static str; 4] = ["class", "hypothesis_count", "distinct_datasets", "ratio"];

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(
            path,
            &Self::HEADER,
            self.rows.iter().map(|r| {
                vec![
                    r.class.as_str().to_owned(),
                    r.hypothesis_count.to_string(),
                    r.distinct_datasets.to_string(),
                    fmt6(r.ratio),
                ]
            }),
        )
    }
}

fn ratio(count: usize, datasets: usize) -> f64 {
    if datasets == 0 {
        0.0
    } else {
        count as f64 / datasets as f64
    }
}

pub fn summarize(hypotheses: &[Hypothesis]) -> CountsReport {
    let rows = HypothesisClass::ALL
        .iter()
        .map(|&class| {
            let of_class = hypotheses.iter().filter(|h| h.class == class);
            let count = of_class.clone().count();
            let datasets: BTreeSet<&str> = of_class.flat_map(|h| h.datasets.iter().map(String::as_str)).collect();
            CountsRow {
                class,
                hypothesis_count: count,
                distinct_datasets: datasets.len(),
                ratio: ratio(count, datasets.len()),
            }
        })
        .collect();
    let all: BTreeSet<&str> = hypotheses
        .iter()
        .flat_map(|h| h.datasets.iter().map(String::as_str))
        .collect();
    CountsReport {
        rows,
        total_hypotheses: hypotheses.len(),
        total_datasets: all.len(),
    }
}
