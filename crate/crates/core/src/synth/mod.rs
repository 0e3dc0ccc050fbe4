//! Seeded synthetic corpora with labelled integration hypotheses.
//!
//! Base datasets are random tables over nonsense vocabularies, so unrelated
//! datasets rarely match by accident. Each injection then plants one
//! instance of a hypothesis class and records it as ground truth.

mod eval;
pub mod vocab;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::canon::canonical_name;
use crate::corpus::{Corpus, Dataset, FilterConfig, MetaRecord, Provenance, META_SUFFIX};
use crate::error::{Error, Result};
use crate::hypotheses::HypothesisClass;
use crate::io::{read_jsonl, write_csv, write_json, write_jsonl};
use crate::matching::kernels::{canonical_name_similarity, levenshtein};
use crate::matching::MatchConfig;

pub use eval::{evaluate_detection, ClassScore, Evaluation};
use vocab::{capitalize, pseudo_phrase, pseudo_word};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    /// Randomly generated tables; injections draw from and add to these.
    pub n_base: usize,
    pub duplicates: usize,
    /// Each chain is an original and one newer version.
    pub version_chains: usize,
    pub partition_groups: usize,
    pub partition_group_size: usize,
    /// Add base datasets titled like each partition group. They relate to
    /// the group only through metadata.
    pub partition_companions: bool,
    pub join_pairs: usize,
    pub similar_domain_groups: usize,
    pub simple_relation_groups: usize,
    /// Probability of replacing each title token with a random word.
    pub title_noise: f64,
    /// Probability of a one-character typo per cell of copied tables.
    pub typo_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            n_base: 150,
            duplicates: 20,
            version_chains: 10,
            partition_groups: 5,
            partition_group_size: 4,
            partition_companions: true,
            join_pairs: 15,
            similar_domain_groups: 10,
            simple_relation_groups: 10,
            title_noise: 0.0,
            typo_rate: 0.0,
        }
    }
}

impl SynthConfig {
    /// Base datasets consumed by the injections.
    pub fn required_base(&self) -> usize {
        let companions = if self.partition_companions {
            (0..self.partition_groups).map(companions_for).sum()
        } else {
            0
        };
        self.duplicates
            + self.version_chains
            + companions
            + 2 * (self.join_pairs + self.similar_domain_groups + self.simple_relation_groups)
    }

    /// Datasets in the generated corpus.
    pub fn total_datasets(&self) -> usize {
        self.n_base + self.duplicates + self.version_chains + self.partition_groups * self.partition_group_size
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("title_noise", self.title_noise), ("typo_rate", self.typo_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.partition_groups > 0 && self.partition_group_size < 2 {
            return Err(Error::Config("partition_group_size must be at least 2".into()));
        }
        let need = self.required_base();
        if need > self.n_base {
            return Err(Error::Config(format!(
                "injections need {need} base datasets but n_base is {}",
                self.n_base
            )));
        }
        if self.total_datasets() > 9999 {
            return Err(Error::Config("at most 9999 datasets are supported".into()));
        }
        Ok(())
    }
}

fn companions_for(group: usize) -> usize {
    1 + group % 2
}

/// One labelled hypothesis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TruthRecord {
    pub class: HypothesisClass,
    /// Sorted dataset ids.
    pub datasets: Vec<String>,
}

impl TruthRecord {
    fn new(class: HypothesisClass, datasets: &[&str]) -> Self {
        let mut datasets: Vec<String> = datasets.iter().map(|s| s.to_string()).collect();
        datasets.sort();
        TruthRecord { class, datasets }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub records: Vec<TruthRecord>,
}

impl GroundTruth {
    pub fn of_class(&self, class: HypothesisClass) -> impl Iterator<Item = &TruthRecord> {
        self.records.iter().filter(move |r| r.class == class)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        write_jsonl(path, &self.records)
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        Ok(GroundTruth {
            records: read_jsonl(path)?,
        })
    }

    /// Every referenced dataset exists in `corpus`.
    pub fn check(&self, corpus: &Corpus) -> Result<()> {
        for r in &self.records {
            for d in &r.datasets {
                if corpus.get(d).is_none() {
                    return Err(Error::UnknownDataset(d.clone()));
                }
            }
        }
        Ok(())
    }
}

/// A generated table before canonicalization.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub dataset_id: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub meta: MetaRecord,
}

impl RawTable {
    pub fn to_dataset(&self, filter: &FilterConfig) -> Dataset {
        Dataset::from_rows(
            &self.dataset_id,
            &self.header,
            &self.rows,
            self.meta.to_properties(),
            filter.max_distinct_values_per_set,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOutput {
    pub tables: Vec<RawTable>,
    pub truth: GroundTruth,
}

impl SynthOutput {
    pub fn corpus(&self, filter: &FilterConfig) -> Result<Corpus> {
        Corpus::new(
            self.tables.iter().map(|t| t.to_dataset(filter)).collect(),
            Provenance {
                source: None,
                filter: filter.clone(),
            },
        )
    }

    /// Writes `corpus/<id>.csv`, `corpus/<id>.meta.json` and
    /// `ground_truth.jsonl` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let corpus_dir = dir.join("corpus");
        fs::create_dir_all(&corpus_dir).map_err(|e| Error::io(&corpus_dir, e))?;
        for t in &self.tables {
            let header: Vec<&str> = t.header.iter().map(String::as_str).collect();
            write_csv(
                &corpus_dir.join(format!("{}.csv", t.dataset_id)),
                &header,
                t.rows.iter().cloned(),
            )?;
            write_json(&corpus_dir.join(format!("{}{META_SUFFIX}", t.dataset_id)), &t.meta)?;
        }
        self.truth.write_jsonl(&dir.join("ground_truth.jsonl"))
    }
}

/// Generates a corpus and its ground truth. Deterministic in `cfg`.
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let mut g = Generator::new(cfg);
    for _ in 0..cfg.n_base {
        let t = g.base_table();
        g.tables.push(t);
    }
    let mut next_base = 0..cfg.n_base;
    let mut take = || next_base.next().expect("capacity checked by validate");

    for k in 0..cfg.duplicates {
        let b = take();
        g.inject_duplicate(b, k);
    }
    for k in 0..cfg.version_chains {
        let b = take();
        g.inject_version(b, k);
    }
    for k in 0..cfg.partition_groups {
        let companions: Vec<usize> = if cfg.partition_companions {
            (0..companions_for(k)).map(|_| take()).collect()
        } else {
            Vec::new()
        };
        g.inject_partition(k, &companions);
    }
    for k in 0..cfg.join_pairs {
        let (a, b) = (take(), take());
        g.inject_join(a, b, k);
    }
    for k in 0..cfg.similar_domain_groups {
        let (a, b) = (take(), take());
        g.inject_similar_domain(a, b, k);
    }
    for k in 0..cfg.simple_relation_groups {
        let (a, b) = (take(), take());
        g.inject_simple_relation(a, b, k);
    }
    g.perturb_titles();

    let mut truth = g.truth;
    truth.sort();
    Ok(SynthOutput {
        tables: g.tables.into_iter().map(|t| t.raw).collect(),
        truth: GroundTruth { records: truth },
    })
}

/// [`generate`] followed by canonicalization with the default filter
/// settings.
pub fn generate_corpus(cfg: &SynthConfig) -> Result<(Corpus, GroundTruth)> {
    let out = generate(cfg)?;
    let corpus = out.corpus(&FilterConfig::default())?;
    Ok((corpus, out.truth))
}

/// How a column's values are drawn. Row indices make ids unique.
#[derive(Clone, Debug)]
enum Column {
    Id { prefix: String },
    Amount,
    Category { pool: Vec<String> },
    Label,
    Key { domain: Vec<String> },
}

struct Table {
    raw: RawTable,
    columns: Vec<Column>,
}

struct Generator<'c> {
    cfg: &'c SynthConfig,
    rng: ChaCha8Rng,
    tables: Vec<Table>,
    truth: Vec<TruthRecord>,
    prefixes: BTreeSet<String>,
    tau_attr: f64,
}

impl<'c> Generator<'c> {
    fn new(cfg: &'c SynthConfig) -> Self {
        Generator {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            tables: Vec::new(),
            truth: Vec::new(),
            prefixes: BTreeSet::new(),
            tau_attr: MatchConfig::default().tau_attr,
        }
    }

    fn next_id(&self) -> String {
        format!("ds{:04}", self.tables.len() + 1)
    }

    fn word(&mut self) -> String {
        pseudo_word(&mut self.rng)
    }

    fn title_case(&mut self, words: usize) -> String {
        (0..words).map(|_| capitalize(&self.word())).collect::<Vec<_>>().join(" ")
    }

    /// A five-letter id prefix at edit distance three or more from all
    /// others, so id columns of unrelated tables never look alike.
    fn prefix(&mut self) -> String {
        loop {
            let p: String = (0..5).map(|_| self.rng.random_range(b'a'..=b'z') as char).collect();
            let far = self
                .prefixes
                .iter()
                .all(|q| levenshtein(q, &p) >= 3);
            if far {
                self.prefixes.insert(p.clone());
                return p;
            }
        }
    }

    fn attr_name(&mut self) -> String {
        format!("{} {}", self.word(), self.word())
    }

    /// A name that does not match any of `avoid` at the attribute threshold.
    fn distinct_name(&mut self, avoid: &[String]) -> String {
        loop {
            let n = self.attr_name();
            if self.clashes(&n, avoid).is_none() {
                return n;
            }
        }
    }

    fn clashes(&self, name: &str, avoid: &[String]) -> Option<usize> {
        let c = canonical_name(name);
        avoid
            .iter()
            .position(|a| canonical_name_similarity(&c, &canonical_name(a)) >= self.tau_attr)
    }

    fn value(&mut self, col: &Column, row: usize) -> String {
        match col {
            Column::Id { prefix } => format!("{prefix}-{row:05}"),
            Column::Amount => format!("{}.{:02}", self.rng.random_range(1000..1_000_000), self.rng.random_range(0..100)),
            Column::Category { pool } => pool.choose(&mut self.rng).unwrap().clone(),
            Column::Label => format!("{} {}", capitalize(&self.word()), capitalize(&self.word())),
            Column::Key { domain } => domain[row % domain.len()].clone(),
        }
    }

    fn fill(&mut self, columns: &[Column], rows: std::ops::Range<usize>) -> Vec<Vec<String>> {
        rows.map(|i| columns.iter().map(|c| self.value(c, i)).collect()).collect()
    }

    fn meta(&mut self) -> MetaRecord {
        let words = self.rng.random_range(2..=3);
        let title = self.title_case(words);
        let description = format!("{}.", capitalize(&pseudo_phrase(&mut self.rng, 7)));
        let tags = vec![self.word(), self.word()];
        MetaRecord {
            title,
            description: Some(description),
            tags: Some(tags),
            ..MetaRecord::default()
        }
    }

    fn base_table(&mut self) -> Table {
        let mut columns = vec![
            Column::Id { prefix: self.prefix() },
            Column::Amount,
            self.category(),
            Column::Label,
        ];
        for _ in 0..self.rng.random_range(0..=2) {
            let extra = match self.rng.random_range(0..3) {
                0 => Column::Amount,
                1 => self.category(),
                _ => Column::Label,
            };
            columns.push(extra);
        }
        columns.shuffle(&mut self.rng);
        let mut header = Vec::new();
        for _ in 0..columns.len() {
            let n = self.distinct_name(&header);
            header.push(n);
        }
        let n_rows = self.rng.random_range(60..=120);
        let rows = self.fill(&columns, 0..n_rows);
        let meta = self.meta();
        Table {
            raw: RawTable {
                dataset_id: self.next_id(),
                header,
                rows,
                meta,
            },
            columns,
        }
    }

    fn category(&mut self) -> Column {
        let n = self.rng.random_range(4..=10);
        Column::Category {
            pool: (0..n).map(|_| capitalize(&self.word())).collect(),
        }
    }

    fn typo(&mut self, s: &str) -> String {
        let mut chars: Vec<char> = s.chars().collect();
        if chars.is_empty() {
            return s.to_owned();
        }
        let i = self.rng.random_range(0..chars.len());
        let c = self.rng.random_range(b'a'..=b'z') as char;
        chars[i] = if chars[i] == c { 'q' } else { c };
        chars.into_iter().collect()
    }

    /// Copies the rows of table `b` with typos at `typo_rate`.
    fn noisy_rows(&mut self, b: usize) -> Vec<Vec<String>> {
        let mut rows = self.tables[b].raw.rows.clone();
        if self.cfg.typo_rate > 0.0 {
            for row in &mut rows {
                for cell in row.iter_mut() {
                    if self.rng.random_bool(self.cfg.typo_rate) {
                        *cell = self.typo(cell);
                    }
                }
            }
        }
        rows
    }

    fn push(&mut self, raw: RawTable, columns: Vec<Column>) -> String {
        let id = raw.dataset_id.clone();
        self.tables.push(Table { raw, columns });
        id
    }

    /// A re-upload: same rows in a new order. Every other copy gets fresh
    /// metadata, the rest keep the original.
    fn inject_duplicate(&mut self, b: usize, k: usize) {
        let mut rows = self.noisy_rows(b);
        rows.shuffle(&mut self.rng);
        let meta = if k % 2 == 0 {
            self.meta()
        } else {
            self.tables[b].raw.meta.clone()
        };
        let raw = RawTable {
            dataset_id: self.next_id(),
            header: self.tables[b].raw.header.clone(),
            rows,
            meta,
        };
        let columns = self.tables[b].columns.clone();
        let id = self.push(raw, columns);
        let base = self.tables[b].raw.dataset_id.clone();
        self.truth.push(TruthRecord::new(HypothesisClass::Duplicate, &[&base, &id]));
    }

    /// A newer version: 30-40% more rows on even chains, one more column
    /// on odd chains.
    fn inject_version(&mut self, b: usize, k: usize) {
        let mut header = self.tables[b].raw.header.clone();
        let mut columns = self.tables[b].columns.clone();
        let mut rows = self.noisy_rows(b);
        if k % 2 == 0 {
            let n = rows.len();
            let extra = n * self.rng.random_range(30..=40) / 100;
            let more = self.fill(&columns, n..n + extra);
            rows.extend(more);
        } else {
            let name = self.distinct_name(&header);
            header.push(name);
            columns.push(Column::Label);
            for row in &mut rows {
                let v = format!("{} {}", capitalize(&pseudo_word(&mut self.rng)), capitalize(&pseudo_word(&mut self.rng)));
                row.push(v);
            }
        }
        let meta = self.tables[b].raw.meta.clone();
        let raw = RawTable {
            dataset_id: self.next_id(),
            header,
            rows,
            meta,
        };
        let id = self.push(raw, columns);
        let base = self.tables[b].raw.dataset_id.clone();
        self.truth.push(TruthRecord::new(HypothesisClass::Versioned, &[&base, &id]));
    }

    /// One logical table split by year into equally shaped parts with
    /// disjoint rows. The year itself is not a column.
    fn inject_partition(&mut self, k: usize, companions: &[usize]) {
        let term = vocab::BUDGET_TERMS[k % vocab::BUDGET_TERMS.len()];
        let stem = format!("{} {}", self.title_case(2), capitalize(term));
        let mut columns = vec![
            Column::Id { prefix: self.prefix() },
            Column::Amount,
            Column::Label,
            Column::Label,
        ];
        if self.rng.random_bool(0.5) {
            columns.push(Column::Amount);
        }
        let mut header = Vec::new();
        for _ in 0..columns.len() {
            let n = self.distinct_name(&header);
            header.push(n);
        }
        let description = format!("{}.", capitalize(&pseudo_phrase(&mut self.rng, 7)));
        let tags = vec![self.word(), self.word(), term.to_owned()];
        let first_year = self.rng.random_range(2006..=2012);

        let mut members = Vec::new();
        let mut offset = 0;
        for part in 0..self.cfg.partition_group_size {
            let n_rows = self.rng.random_range(60..=100);
            let rows = self.fill(&columns, offset..offset + n_rows);
            offset += n_rows;
            let raw = RawTable {
                dataset_id: self.next_id(),
                header: header.clone(),
                rows,
                meta: MetaRecord {
                    title: format!("{stem} {}", first_year + part as u32),
                    description: Some(description.clone()),
                    tags: Some(tags.clone()),
                    ..MetaRecord::default()
                },
            };
            members.push(self.push(raw, columns.clone()));
        }
        let refs: Vec<&str> = members.iter().map(String::as_str).collect();
        self.truth.push(TruthRecord::new(HypothesisClass::Partitioned, &refs));

        // Companions share the title stem but neither schema nor values.
        let mut comp_ids = Vec::new();
        for &c in companions {
            let mut avoid = header.clone();
            for &other in companions.iter().filter(|&&o| o < c) {
                avoid.extend(self.tables[other].raw.header.clone());
            }
            self.rename_away(c, &avoid);
            let extra = capitalize(&self.word());
            self.tables[c].raw.meta.title = format!("{stem} {extra}");
            let id = self.tables[c].raw.dataset_id.clone();
            for m in &members {
                self.truth.push(TruthRecord::new(HypothesisClass::SimpleRelation, &[&id, m]));
            }
            comp_ids.push(id);
        }
        for (i, a) in comp_ids.iter().enumerate() {
            for b in &comp_ids[i + 1..] {
                self.truth.push(TruthRecord::new(HypothesisClass::SimpleRelation, &[a, b]));
            }
        }
    }

    /// Renames attributes of table `t` that match any name in `avoid` or
    /// any other attribute of `t`.
    fn rename_away(&mut self, t: usize, avoid: &[String]) {
        let n = self.tables[t].raw.header.len();
        for i in 0..n {
            let mut others: Vec<String> = avoid.to_vec();
            others.extend(
                self.tables[t].raw.header.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, h)| h.clone()),
            );
            let current = self.tables[t].raw.header[i].clone();
            if self.clashes(&current, &others).is_some() {
                let fresh = self.distinct_name(&others);
                self.tables[t].raw.header[i] = fresh;
            }
        }
    }

    /// Two unrelated tables gain a key column over one shared domain; each
    /// covers every domain value.
    fn inject_join(&mut self, a: usize, b: usize, k: usize) {
        let (name, suffix) = vocab::KEY_COLUMNS[k % vocab::KEY_COLUMNS.len()];
        let size = self.rng.random_range(20..=40);
        let mut domain = BTreeSet::new();
        while domain.len() < size {
            let w = capitalize(&self.word());
            domain.insert(if suffix.is_empty() { w } else { format!("{w} {suffix}") });
        }
        let domain: Vec<String> = domain.into_iter().collect();
        let avoid = self.tables[a].raw.header.clone();
        self.rename_away(b, &avoid);
        for t in [a, b] {
            let mut values: Vec<String> = Vec::new();
            let n = self.tables[t].raw.rows.len();
            for i in 0..n {
                values.push(domain[i % domain.len()].clone());
            }
            values.shuffle(&mut self.rng);
            let pos = self.rng.random_range(0..=self.tables[t].raw.header.len());
            let table = &mut self.tables[t];
            table.raw.header.insert(pos, name.to_owned());
            table.columns.insert(pos, Column::Key { domain: domain.clone() });
            for (row, v) in table.raw.rows.iter_mut().zip(values) {
                row.insert(pos, v);
            }
        }
        let (ia, ib) = (self.tables[a].raw.dataset_id.clone(), self.tables[b].raw.dataset_id.clone());
        self.truth.push(TruthRecord::new(HypothesisClass::JoinPartner, &[&ia, &ib]));
    }

    /// Three columns of each table are replaced by columns with the same
    /// three names and unrelated values.
    fn inject_similar_domain(&mut self, a: usize, b: usize, k: usize) {
        let triple: Vec<String> = match vocab::DOMAIN_TRIPLES.get(k) {
            Some(t) => t.iter().map(|s| s.to_string()).collect(),
            None => {
                let mut names = Vec::new();
                for _ in 0..3 {
                    let n = self.distinct_name(&names);
                    names.push(n);
                }
                names
            }
        };
        for t in [a, b] {
            let n_cols = self.tables[t].raw.header.len();
            let mut slots: Vec<usize> = (0..n_cols).collect();
            slots.shuffle(&mut self.rng);
            slots.truncate(3);
            slots.sort();
            let n_rows = self.tables[t].raw.rows.len();
            for (slot, name) in slots.iter().zip(&triple) {
                let col = Column::Label;
                let values: Vec<String> = (0..n_rows).map(|i| self.value(&col, i)).collect();
                let table = &mut self.tables[t];
                table.raw.header[*slot] = name.clone();
                table.columns[*slot] = col;
                for (row, v) in table.raw.rows.iter_mut().zip(values) {
                    row[*slot] = v;
                }
            }
        }
        // The remaining columns must not match across the pair or the triple.
        let mut avoid = self.tables[a].raw.header.clone();
        avoid.retain(|h| !triple.contains(h));
        let keep = triple.clone();
        let n = self.tables[b].raw.header.len();
        for i in 0..n {
            let current = self.tables[b].raw.header[i].clone();
            if keep.contains(&current) {
                continue;
            }
            let mut others = avoid.clone();
            others.extend(self.tables[b].raw.header.iter().filter(|h| **h != current).cloned());
            if self.clashes(&current, &others).is_some() {
                let fresh = self.distinct_name(&others);
                self.tables[b].raw.header[i] = fresh;
            }
        }
        let (ia, ib) = (self.tables[a].raw.dataset_id.clone(), self.tables[b].raw.dataset_id.clone());
        self.truth.push(TruthRecord::new(HypothesisClass::SimilarDomain, &[&ia, &ib]));
    }

    /// Two unrelated tables whose titles share a rare origin phrase such as
    /// "2010 <place> census".
    fn inject_simple_relation(&mut self, a: usize, b: usize, k: usize) {
        let year = self.rng.random_range(1990..=2005);
        let place = capitalize(&self.word());
        let origin = capitalize(vocab::ORIGINS[k % vocab::ORIGINS.len()]);
        let phrase = format!("{year} {place} {origin}");
        let avoid = self.tables[a].raw.header.clone();
        self.rename_away(b, &avoid);
        for t in [a, b] {
            let own = capitalize(&self.word());
            self.tables[t].raw.meta.title = format!("{phrase} {own}");
        }
        let (ia, ib) = (self.tables[a].raw.dataset_id.clone(), self.tables[b].raw.dataset_id.clone());
        self.truth.push(TruthRecord::new(HypothesisClass::SimpleRelation, &[&ia, &ib]));
    }

    fn perturb_titles(&mut self) {
        if self.cfg.title_noise <= 0.0 {
            return;
        }
        for t in 0..self.tables.len() {
            let title = self.tables[t].raw.meta.title.clone();
            let words: Vec<String> = title
                .split(' ')
                .map(|w| {
                    if self.rng.random_bool(self.cfg.title_noise) {
                        capitalize(&pseudo_word(&mut self.rng))
                    } else {
                        w.to_owned()
                    }
                })
                .collect();
            self.tables[t].raw.meta.title = words.join(" ");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            seed: 3,
            n_base: 30,
            duplicates: 2,
            version_chains: 2,
            partition_groups: 2,
            partition_group_size: 3,
            partition_companions: true,
            join_pairs: 2,
            similar_domain_groups: 2,
            simple_relation_groups: 2,
            title_noise: 0.0,
            typo_rate: 0.0,
        }
    }

    #[test]
    fn same_seed_same_output() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate(&SynthConfig { seed: 4, ..small() }).unwrap();
        assert_ne!(a.tables, c.tables);
    }

    #[test]
    fn one_duplicate_only() {
        let cfg = SynthConfig {
            n_base: 5,
            duplicates: 1,
            version_chains: 0,
            partition_groups: 0,
            join_pairs: 0,
            similar_domain_groups: 0,
            simple_relation_groups: 0,
            ..small()
        };
        let out = generate(&cfg).unwrap();
        assert_eq!(out.truth.records.len(), 1);
        assert_eq!(out.truth.records[0].class, HypothesisClass::Duplicate);
        assert_eq!(out.tables.len(), 6);
    }

    #[test]
    fn partition_parts_are_disjoint() {
        let cfg = SynthConfig {
            n_base: 2,
            duplicates: 0,
            version_chains: 0,
            partition_groups: 1,
            partition_group_size: 4,
            join_pairs: 0,
            similar_domain_groups: 0,
            simple_relation_groups: 0,
            ..small()
        };
        let out = generate(&cfg).unwrap();
        let group = out.truth.of_class(HypothesisClass::Partitioned).next().unwrap();
        assert_eq!(group.datasets.len(), 4);
        let corpus = out.corpus(&FilterConfig::default()).unwrap();
        let parts: Vec<&Dataset> = group.datasets.iter().map(|d| corpus.get(d).unwrap()).collect();
        // Exhaustive scan over all part pairs and all columns.
        for (i, p) in parts.iter().enumerate() {
            for q in &parts[i + 1..] {
                assert_eq!(
                    p.attributes.iter().map(|a| &a.name).collect::<Vec<_>>(),
                    q.attributes.iter().map(|a| &a.name).collect::<Vec<_>>()
                );
                for (vp, vq) in p.value_sets.iter().zip(&q.value_sets) {
                    for v in &vp.values {
                        assert!(!vq.values.contains(v), "{v} in two parts");
                    }
                }
            }
        }
    }

    #[test]
    fn capacity_is_checked() {
        let cfg = SynthConfig {
            n_base: 10,
            ..small()
        };
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));
        assert!(SynthConfig {
            typo_rate: 2.0,
            ..small()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn written_corpus_loads_back_identically() {
        let out = generate(&small()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        out.write(dir.path()).unwrap();
        let filter = FilterConfig::default();
        let (loaded, log) = crate::corpus::load_corpus(&dir.path().join("corpus"), &filter).unwrap();
        assert!(log.is_empty(), "{log:?}");
        assert_eq!(loaded.datasets(), out.corpus(&filter).unwrap().datasets());
        let truth = GroundTruth::read_jsonl(&dir.path().join("ground_truth.jsonl")).unwrap();
        assert_eq!(truth, out.truth);
        truth.check(&loaded).unwrap();
    }

    #[test]
    fn noise_changes_copies_only_when_enabled() {
        let noisy = generate(&SynthConfig {
            typo_rate: 0.2,
            title_noise: 0.5,
            ..small()
        })
        .unwrap();
        let clean = generate(&small()).unwrap();
        assert_eq!(noisy.truth, clean.truth);
        assert_ne!(noisy.tables, clean.tables);
    }
}
