//! The dataset corpus: attributes, value sets and metadata properties per
//! dataset, loaded from a directory of `<id>.csv` / `<id>.meta.json` pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canon::{canonical_name, canonical_value};
use crate::error::{Error, Result};

pub const CSV_EXT: &str = "csv";
pub const META_SUFFIX: &str = ".meta.json";

/// One column of a dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub attr_id: String,
    pub name: String,
    pub canonical_name: String,
    pub ordinal: usize,
}

impl Attribute {
    pub fn new(dataset_id: &str, ordinal: usize, name: &str) -> Self {
        Attribute {
            attr_id: attr_id(dataset_id, ordinal),
            name: name.to_owned(),
            canonical_name: canonical_name(name),
            ordinal,
        }
    }
}

pub fn attr_id(dataset_id: &str, ordinal: usize) -> String {
    format!("{dataset_id}#{ordinal}")
}

/// Distinct canonical values of one column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueSet {
    pub attr_id: String,
    pub values: BTreeSet<String>,
    /// Rows seen before deduplication.
    pub raw_count: usize,
    /// True when `values` was truncated to the configured cap.
    pub sampled: bool,
}

impl ValueSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Free-form metadata of a dataset. `title` is always present.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropertyMap(BTreeMap<String, String>);

impl PropertyMap {
    pub fn new(title: impl Into<String>) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert("title".to_owned(), title.into());
        PropertyMap(entries)
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.0.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn title(&self) -> &str {
        self.get("title").unwrap_or_default()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// The on-disk metadata record (`<id>.meta.json`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetaRecord {
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publisher: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl MetaRecord {
    pub fn to_properties(&self) -> PropertyMap {
        let mut props = PropertyMap::new(self.title.clone());
        if let Some(d) = &self.description {
            props.insert("description", d.clone());
        }
        if let Some(tags) = &self.tags {
            props.insert("tags", tags.join(", "));
        }
        if let Some(c) = &self.category {
            props.insert("category", c.clone());
        }
        if let Some(p) = &self.publisher {
            props.insert("publisher", p.clone());
        }
        for (key, value) in &self.extra {
            let text = match value {
                serde_json::Value::Null => continue,
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(", "),
                other => other.to_string(),
            };
            props.insert(key.clone(), text);
        }
        props
    }
}

/// One published table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub dataset_id: String,
    pub attributes: Vec<Attribute>,
    pub value_sets: Vec<ValueSet>,
    pub properties: PropertyMap,
    pub row_count: usize,
}

impl Dataset {
    /// Builds a dataset from a header and raw rows, canonicalizing and
    /// deduplicating every column. Value sets larger than
    /// `max_distinct` keep the smallest values in canonical order.
    pub fn from_rows<H, R, C>(
        dataset_id: &str,
        header: &[H],
        rows: impl IntoIterator<Item = R>,
        properties: PropertyMap,
        max_distinct: usize,
    ) -> Self
    where
        H: AsRef<str>,
        R: AsRef<[C]>,
        C: AsRef<str>,
    {
        let attributes: Vec<Attribute> = header
            .iter()
            .enumerate()
            .map(|(i, name)| Attribute::new(dataset_id, i, name.as_ref()))
            .collect();
        let mut columns: Vec<BTreeSet<String>> = vec![BTreeSet::new(); attributes.len()];
        let mut row_count = 0;
        for row in rows {
            row_count += 1;
            for (col, cell) in columns.iter_mut().zip(row.as_ref()) {
                let v = canonical_value(cell.as_ref());
                if !v.is_empty() {
                    col.insert(v);
                }
            }
        }
        let value_sets = attributes
            .iter()
            .zip(columns)
            .map(|(attr, mut values)| {
                let sampled = values.len() > max_distinct;
                if sampled {
                    // BTreeSet iterates ascending, so keeping the first
                    // `max_distinct` is the canonical-order truncation.
                    let cut = values.iter().nth(max_distinct).cloned().unwrap();
                    values.split_off(&cut);
                }
                ValueSet {
                    attr_id: attr.attr_id.clone(),
                    values,
                    raw_count: row_count,
                    sampled,
                }
            })
            .collect();
        Dataset {
            dataset_id: dataset_id.to_owned(),
            attributes,
            value_sets,
            properties,
            row_count,
        }
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    /// At least one column has a non-empty value set.
    pub fn is_processable(&self) -> bool {
        self.value_sets.iter().any(|v| !v.is_empty())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub min_rows: usize,
    pub max_rows: usize,
    pub max_attributes: usize,
    pub max_distinct_values_per_set: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_rows: 50,
            max_rows: 100_000,
            max_attributes: 200,
            max_distinct_values_per_set: 10_000,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rows <= self.min_rows {
            return Err(Error::Config(format!(
                "max_rows ({}) must exceed min_rows ({})",
                self.max_rows, self.min_rows
            )));
        }
        if self.max_attributes == 0 {
            return Err(Error::Config("max_attributes must be positive".into()));
        }
        if self.max_distinct_values_per_set == 0 {
            return Err(Error::Config("max_distinct_values_per_set must be positive".into()));
        }
        Ok(())
    }

    /// The first rule `dataset` violates, if any.
    pub fn check(&self, dataset: &Dataset) -> Option<FilterRule> {
        if dataset.row_count < self.min_rows {
            Some(FilterRule::MinRows)
        } else if dataset.row_count > self.max_rows {
            Some(FilterRule::MaxRows)
        } else if dataset.attributes.is_empty() {
            Some(FilterRule::EmptySchema)
        } else if dataset.attributes.len() > self.max_attributes {
            Some(FilterRule::MaxAttributes)
        } else if !dataset.is_processable() {
            Some(FilterRule::NoProcessableAttributes)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterRule {
    MinRows,
    MaxRows,
    MaxAttributes,
    NoProcessableAttributes,
    EmptySchema,
    ParseError,
}

/// One line of `filtered.jsonl`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterLogEntry {
    pub dataset_id: String,
    pub rule: FilterRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    pub filter: FilterConfig,
}

/// A set of datasets ordered by `dataset_id`. Immutable once built.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Corpus {
    datasets: Vec<Dataset>,
    pub provenance: Provenance,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.datasets == other.datasets && self.provenance == other.provenance
    }
}

impl Corpus {
    /// Sorts datasets by id; rejects duplicate ids.
    pub fn new(mut datasets: Vec<Dataset>, provenance: Provenance) -> Result<Self> {
        datasets.sort_by(|a, b| a.dataset_id.cmp(&b.dataset_id));
        let mut index = HashMap::with_capacity(datasets.len());
        for (i, d) in datasets.iter().enumerate() {
            if index.insert(d.dataset_id.clone(), i).is_some() {
                return Err(Error::Integrity(format!("duplicate dataset id {}", d.dataset_id)));
            }
        }
        Ok(Corpus {
            datasets,
            provenance,
            index,
        })
    }

    pub fn datasets(&self) -> &[Dataset] {
        &self.datasets
    }

    pub fn len(&self) -> usize {
        self.datasets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.datasets.is_empty()
    }

    pub fn get(&self, dataset_id: &str) -> Option<&Dataset> {
        self.index.get(dataset_id).map(|&i| &self.datasets[i])
    }

    pub fn position(&self, dataset_id: &str) -> Option<usize> {
        self.index.get(dataset_id).copied()
    }

    /// Value set of the attribute `"<dataset_id>#<ordinal>"`.
    pub fn value_set(&self, attr_id: &str) -> Option<&ValueSet> {
        let (ds, ord) = attr_id.rsplit_once('#')?;
        let ord: usize = ord.parse().ok()?;
        self.get(ds)?.value_sets.get(ord)
    }

    /// Rebuilds the id index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .datasets
            .iter()
            .enumerate()
            .map(|(i, d)| (d.dataset_id.clone(), i))
            .collect();
    }
}

/// Parses one `<id>.csv` with its metadata file. The dataset id is the CSV
/// file stem.
pub fn parse_dataset(csv_path: &Path, meta_path: &Path, cfg: &FilterConfig) -> Result<Dataset> {
    let dataset_id = dataset_id_of(csv_path).ok_or_else(|| Error::Csv {
        path: csv_path.to_owned(),
        line: 0,
        message: "file name is not a valid dataset id".into(),
    })?;

    let meta_text = fs::read_to_string(meta_path).map_err(|e| Error::Metadata {
        path: meta_path.to_owned(),
        message: e.to_string(),
    })?;
    let meta: MetaRecord = serde_json::from_str(&meta_text).map_err(|e| Error::Metadata {
        path: meta_path.to_owned(),
        message: e.to_string(),
    })?;

    let file = fs::File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(std::io::BufReader::new(file));
    let csv_err = |e: csv::Error| Error::Csv {
        path: csv_path.to_owned(),
        line: e.position().map(|p| p.line()).unwrap_or(1),
        message: e.to_string(),
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
        return Err(Error::EmptySchema {
            path: csv_path.to_owned(),
        });
    }
    let rows = reader
        .into_records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(csv_err)?;
    let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.iter().collect()).collect();

    Ok(Dataset::from_rows(
        &dataset_id,
        &header,
        rows,
        meta.to_properties(),
        cfg.max_distinct_values_per_set,
    ))
}

fn dataset_id_of(csv_path: &Path) -> Option<String> {
    let stem = csv_path.file_stem()?.to_str()?;
    (!stem.is_empty()).then(|| stem.to_owned())
}

pub fn meta_path_for(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    csv_path.with_file_name(format!("{stem}{META_SUFFIX}"))
}

/// Loads and filters every `<id>.csv` in `dir`. Datasets that fail to parse
/// or violate a filter rule are left out and reported in the returned log,
/// ordered by dataset id.
pub fn load_corpus(dir: &Path, cfg: &FilterConfig) -> Result<(Corpus, Vec<FilterLogEntry>)> {
    cfg.validate()?;
    let mut csv_paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().and_then(|e| e.to_str()) == Some(CSV_EXT) {
            csv_paths.push(path);
        }
    }
    csv_paths.sort();

    let parsed: Vec<(PathBuf, Result<Dataset>)> = csv_paths
        .into_par_iter()
        .map(|p| {
            let meta = meta_path_for(&p);
            let r = parse_dataset(&p, &meta, cfg);
            (p, r)
        })
        .collect();

    let mut kept = Vec::new();
    let mut log = Vec::new();
    for (path, result) in parsed {
        let id = dataset_id_of(&path).unwrap_or_else(|| path.display().to_string());
        match result {
            Ok(d) => match cfg.check(&d) {
                None => kept.push(d),
                Some(rule) => {
                    debug!("filtered {id}: {rule:?}");
                    log.push(FilterLogEntry { dataset_id: id, rule });
                }
            },
            Err(Error::EmptySchema { .. }) => {
                warn!("skipping {id}: empty schema");
                log.push(FilterLogEntry {
                    dataset_id: id,
                    rule: FilterRule::EmptySchema,
                });
            }
            Err(e) => {
                warn!("skipping {id}: {e}");
                log.push(FilterLogEntry {
                    dataset_id: id,
                    rule: FilterRule::ParseError,
                });
            }
        }
    }
    log.sort_by(|a, b| a.dataset_id.cmp(&b.dataset_id));
    let corpus = Corpus::new(
        kept,
        Provenance {
            source: Some(dir.to_owned()),
            filter: cfg.clone(),
        },
    )?;
    Ok((corpus, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_dataset(dir: &Path, id: &str, csv: &str, meta: &str) {
        fs::write(dir.join(format!("{id}.csv")), csv).unwrap();
        fs::write(dir.join(format!("{id}{META_SUFFIX}")), meta).unwrap();
    }

    fn rows_csv(header: &str, n: usize) -> String {
        let mut s = format!("{header}\n");
        for i in 0..n {
            s.push_str(&format!("v{i},{}\n", i % 7));
        }
        s
    }

    #[test]
    fn parse_dedups_and_canonicalizes() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), "d1", "col_a,col_b\nNY,1\nNY,2\n", r#"{"title":"T"}"#);
        let d = parse_dataset(
            &dir.path().join("d1.csv"),
            &dir.path().join("d1.meta.json"),
            &FilterConfig::default(),
        )
        .unwrap();
        let names: Vec<_> = d.attributes.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["col_a", "col_b"]);
        assert_eq!(d.attributes[0].canonical_name, "col a");
        assert_eq!(d.value_sets[0].values, BTreeSet::from(["ny".to_owned()]));
        assert_eq!(
            d.value_sets[1].values,
            BTreeSet::from(["1".to_owned(), "2".to_owned()])
        );
        assert_eq!(d.row_count, 2);
        assert_eq!(d.value_sets[0].raw_count, 2);
        assert!(!d.value_sets[0].sampled);
        assert_eq!(d.properties.title(), "T");
    }

    #[test]
    fn header_only() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), "h", "a,b\n", r#"{"title":""}"#);
        let d = parse_dataset(
            &dir.path().join("h.csv"),
            &dir.path().join("h.meta.json"),
            &FilterConfig::default(),
        )
        .unwrap();
        assert_eq!(d.row_count, 0);
        assert!(d.value_sets.iter().all(|v| v.is_empty()));
    }

    #[test]
    fn cap_truncates_in_canonical_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = fs::File::create(dir.path().join("big.csv")).unwrap();
        writeln!(f, "x").unwrap();
        for i in 0..12001 {
            writeln!(f, "val{i:05}").unwrap();
        }
        drop(f);
        fs::write(dir.path().join("big.meta.json"), r#"{"title":"big"}"#).unwrap();
        let d = parse_dataset(
            &dir.path().join("big.csv"),
            &dir.path().join("big.meta.json"),
            &FilterConfig::default(),
        )
        .unwrap();
        let vs = &d.value_sets[0];
        assert_eq!(vs.len(), 10_000);
        assert!(vs.sampled);
        assert_eq!(vs.raw_count, 12001);
        assert_eq!(vs.values.iter().next().unwrap(), "val00000");
        assert_eq!(vs.values.iter().last().unwrap(), "val09999");
    }

    #[test]
    fn parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = FilterConfig::default();
        write_dataset(dir.path(), "bad", "a,b\n1,2\n3\n", r#"{"title":"x"}"#);
        match parse_dataset(&dir.path().join("bad.csv"), &dir.path().join("bad.meta.json"), &cfg) {
            Err(Error::Csv { line, path, .. }) => {
                assert_eq!(line, 3);
                assert!(path.ends_with("bad.csv"));
            }
            other => panic!("expected csv error, got {other:?}"),
        }

        write_dataset(dir.path(), "nometa", "a\n1\n", r#"{"description":"no title"}"#);
        assert!(matches!(
            parse_dataset(&dir.path().join("nometa.csv"), &dir.path().join("nometa.meta.json"), &cfg),
            Err(Error::Metadata { .. })
        ));
        assert!(matches!(
            parse_dataset(&dir.path().join("nometa.csv"), &dir.path().join("missing.meta.json"), &cfg),
            Err(Error::Metadata { .. })
        ));

        write_dataset(dir.path(), "empty", "", r#"{"title":"x"}"#);
        assert!(matches!(
            parse_dataset(&dir.path().join("empty.csv"), &dir.path().join("empty.meta.json"), &cfg),
            Err(Error::EmptySchema { .. })
        ));
    }

    #[test]
    fn metadata_properties() {
        let meta: MetaRecord = serde_json::from_str(
            r#"{"title":"Budget","tags":["a","b"],"publisher":"City","rows_updated":12,"owner":null}"#,
        )
        .unwrap();
        let p = meta.to_properties();
        assert_eq!(p.title(), "Budget");
        assert_eq!(p.get("tags"), Some("a, b"));
        assert_eq!(p.get("publisher"), Some("City"));
        assert_eq!(p.get("rows_updated"), Some("12"));
        assert_eq!(p.get("owner"), None);
        assert_eq!(p.get("description"), None);
    }

    #[test]
    fn load_filters() {
        let dir = tempfile::tempdir().unwrap();
        for id in ["a", "b", "c"] {
            write_dataset(dir.path(), id, &rows_csv("x,y", 100), r#"{"title":"t"}"#);
        }
        let (c, log) = load_corpus(dir.path(), &FilterConfig::default()).unwrap();
        assert_eq!(c.len(), 3);
        assert!(log.is_empty());
        let ids: Vec<_> = c.datasets().iter().map(|d| d.dataset_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);

        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), "small", &rows_csv("x,y", 10), r#"{"title":"t"}"#);
        let (c, log) = load_corpus(dir.path(), &FilterConfig::default()).unwrap();
        assert_eq!(c.len(), 0);
        assert_eq!(
            log,
            [FilterLogEntry {
                dataset_id: "small".into(),
                rule: FilterRule::MinRows
            }]
        );
    }

    #[test]
    fn load_drops_unprocessable_and_broken() {
        let dir = tempfile::tempdir().unwrap();
        let mut blank = "x,y\n".to_owned();
        for _ in 0..60 {
            blank.push_str(" , \n");
        }
        write_dataset(dir.path(), "blank", &blank, r#"{"title":"t"}"#);
        write_dataset(dir.path(), "broken", "a,b\n1\n", r#"{"title":"t"}"#);
        write_dataset(dir.path(), "ok", &rows_csv("x,y", 60), r#"{"title":"t"}"#);
        let (c, log) = load_corpus(dir.path(), &FilterConfig::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(log.len(), 2);
        assert_eq!(log[0].rule, FilterRule::NoProcessableAttributes);
        assert_eq!(log[1].rule, FilterRule::ParseError);
    }

    #[test]
    fn bad_directory() {
        let err = load_corpus(Path::new("/nonexistent/corpus"), &FilterConfig::default());
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn filter_config_validation() {
        let cfg = FilterConfig {
            min_rows: 10,
            max_rows: 10,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(FilterConfig::default().validate().is_ok());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let d = Dataset::from_rows("x", &["a"], [["1"]], PropertyMap::new(""), 10);
        let prov = Provenance {
            source: None,
            filter: FilterConfig::default(),
        };
        assert!(Corpus::new(vec![d.clone(), d], prov).is_err());
    }
}
