//! Stage runner. Every stage reads its inputs from disk, writes its outputs
//! into a staging directory and moves them into place only on success, so a
//! failed stage leaves nothing behind. Each run ends with
//! `run_manifest.json`, recording the effective configuration and the
//! digests of everything read and written.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{load_corpus, Corpus, FilterConfig, CSV_EXT, META_SUFFIX};
use crate::error::{Error, Result};
use crate::graph::build_graph;
use crate::hypotheses::{detect_all, summarize, DetectConfig, Hypothesis};
use crate::io::{read_json, read_jsonl, write_json, write_jsonl};
use crate::matching::{generate_matches, Match, MatchConfig};
use crate::ranking::{distribution_report, rank, write_ranking_csv, RankingConfig, UsageStats};
use crate::synth::{evaluate_detection, generate, GroundTruth, SynthConfig};

pub const FILTERED: &str = "filtered.jsonl";
pub const MATCHES: &str = "matches.jsonl";
pub const STATS: &str = "stats.json";
pub const HYPOTHESES: &str = "hypotheses.jsonl";
pub const COUNTS: &str = "counts.csv";
pub const RANKING: &str = "ranking.csv";
pub const DISTRIBUTIONS: &str = "distributions.csv";
pub const EVALUATION: &str = "evaluation.csv";
pub const GROUND_TRUTH: &str = "ground_truth.jsonl";
pub const SYNTH_CORPUS: &str = "corpus";
pub const MANIFEST: &str = "run_manifest.json";

/// Everything a run needs. Relative paths are resolved against the
/// directory of the config file by [`PipelineConfig::load`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus_dir: PathBuf,
    pub output_dir: PathBuf,
    pub filter: FilterConfig,
    pub matching: MatchConfig,
    pub detect: DetectConfig,
    pub ranking: RankingConfig,
    pub synth: SynthConfig,
    /// `usage.json` with views and downloads per dataset.
    pub usage_stats_path: Option<PathBuf>,
    /// Match-stage threads; all available cores when unset.
    pub worker_count: Option<usize>,
    /// Defaults to `ground_truth.jsonl` next to the corpus directory.
    pub ground_truth_path: Option<PathBuf>,
    /// Score partition groups by exact equality instead of Jaccard >= 0.5.
    pub exact_groups: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus_dir: PathBuf::from("corpus"),
            output_dir: PathBuf::from("out"),
            filter: FilterConfig::default(),
            matching: MatchConfig::default(),
            detect: DetectConfig::default(),
            ranking: RankingConfig::default(),
            synth: SynthConfig::default(),
            usage_stats_path: None,
            worker_count: None,
            ground_truth_path: None,
            exact_groups: false,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::Config(format!("config file {} not found", path.display())));
        }
        let mut cfg: PipelineConfig = read_json(path).map_err(|e| match e {
            Error::Record { message, .. } => Error::Config(format!("{}: {message}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_against(base);
        Ok(cfg)
    }

    pub fn resolve_against(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus_dir);
        fix(&mut self.output_dir);
        self.usage_stats_path.as_mut().map(fix);
        self.ground_truth_path.as_mut().map(fix);
    }

    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.matching.validate()?;
        self.detect.validate()?;
        self.ranking.validate()?;
        self.synth.validate()?;
        if self.worker_count == Some(0) {
            return Err(Error::Config("worker_count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn ground_truth(&self) -> PathBuf {
        self.ground_truth_path.clone().unwrap_or_else(|| {
            let parent = self.corpus_dir.parent().unwrap_or(Path::new(""));
            parent.join(GROUND_TRUTH)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Ingest,
    Match,
    Detect,
    Rank,
    Synth,
    Evaluate,
    /// Ingest through rank, plus evaluate when ground truth is present.
    Pipeline,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Match => "match",
            Command::Detect => "detect",
            Command::Rank => "rank",
            Command::Synth => "synth",
            Command::Evaluate => "evaluate",
            Command::Pipeline => "pipeline",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ingest" => Command::Ingest,
            "match" => Command::Match,
            "detect" => Command::Detect,
            "rank" => Command::Rank,
            "synth" => Command::Synth,
            "evaluate" => Command::Evaluate,
            "pipeline" => Command::Pipeline,
            other => return Err(Error::Config(format!("unknown command {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub version: String,
    pub config: PipelineConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

/// Outputs under construction for one stage. Dropped without
/// [`Staging::commit`], it deletes everything it wrote.
struct Staging {
    dir: PathBuf,
    tmp: PathBuf,
    names: Vec<String>,
    committed: bool,
}

impl Staging {
    fn begin(dir: &Path, stage: &str) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = dir.join(format!(".{stage}.partial"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        }
        fs::create_dir(&tmp).map_err(|e| Error::io(&tmp, e))?;
        Ok(Staging {
            dir: dir.to_owned(),
            tmp,
            names: Vec::new(),
            committed: false,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.names.push(name.to_owned());
        self.tmp.join(name)
    }

    /// Digests of the staged files, in the order they were added.
    fn digests(&self) -> Result<Vec<FileDigest>> {
        self.names
            .iter()
            .map(|n| {
                Ok(FileDigest {
                    name: n.clone(),
                    sha256: digest_path(&self.tmp.join(n))?,
                })
            })
            .collect()
    }

    fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for name in &self.names {
            let (from, to) = (self.tmp.join(name), self.dir.join(name));
            if to.is_dir() {
                fs::remove_dir_all(&to).map_err(|e| Error::io(&to, e))?;
            }
            fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
            out.push(to);
        }
        fs::remove_dir_all(&self.tmp).map_err(|e| Error::io(&self.tmp, e))?;
        self.committed = true;
        Ok(out)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A file's digest, or for a directory the digest of its sorted
/// `name digest` listing.
fn digest_path(path: &Path) -> Result<String> {
    if path.is_dir() {
        let mut names: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(path, err)))
            .collect::<Result<_>>()?;
        names.sort();
        let mut listing = String::new();
        for p in names {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            listing.push_str(&format!("{name} {}\n", digest_path(&p)?));
        }
        Ok(digest_bytes(listing.as_bytes()))
    } else {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(digest_bytes(&bytes))
    }
}

/// Digest of the dataset files of a corpus directory only.
fn digest_corpus(dir: &Path) -> Result<String> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            p.is_file() && (name.ends_with(&format!(".{CSV_EXT}")) || name.ends_with(META_SUFFIX))
        })
        .collect();
    files.sort();
    let mut listing = String::new();
    for p in files {
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        listing.push_str(&format!("{name} {}\n", digest_path(&p)?));
    }
    Ok(digest_bytes(listing.as_bytes()))
}

/// Paths written by a successful run.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub outputs: Vec<PathBuf>,
}

struct Run<'c> {
    cfg: &'c PipelineConfig,
    corpus: Option<Corpus>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    written: Vec<PathBuf>,
}

impl<'c> Run<'c> {
    fn new(cfg: &'c PipelineConfig) -> Self {
        Run {
            cfg,
            corpus: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            written: Vec::new(),
        }
    }

    fn out_dir(&self) -> &Path {
        &self.cfg.output_dir
    }

    /// Records an input unless the same file was produced earlier in this
    /// run.
    fn note_input(&mut self, name: &str, digest: String) {
        let produced = self.outputs.iter().any(|o| o.name == name);
        let seen = self.inputs.iter().any(|i| i.name == name);
        if !produced && !seen {
            self.inputs.push(FileDigest {
                name: name.to_owned(),
                sha256: digest,
            });
        }
    }

    fn input_file(&mut self, name: &str, path: &Path) -> Result<()> {
        if !path.is_file() {
            return Err(Error::MissingInput {
                name: name.to_owned(),
                path: path.to_owned(),
            });
        }
        let digest = digest_path(path)?;
        self.note_input(name, digest);
        Ok(())
    }

    fn corpus(&mut self) -> Result<(&Corpus, Vec<crate::corpus::FilterLogEntry>)> {
        let dir = self.cfg.corpus_dir.clone();
        if !dir.is_dir() {
            return Err(Error::MissingInput {
                name: "corpus directory".into(),
                path: dir,
            });
        }
        let (corpus, log) = load_corpus(&dir, &self.cfg.filter)?;
        self.note_input("corpus", digest_corpus(&dir)?);
        info!("loaded {} datasets, {} filtered", corpus.len(), log.len());
        Ok((self.corpus.insert(corpus), log))
    }

    fn loaded_corpus(&mut self) -> Result<&Corpus> {
        if self.corpus.is_none() {
            self.corpus()?;
        }
        Ok(self.corpus.as_ref().expect("loaded above"))
    }

    fn finish_stage(&mut self, staging: Staging) -> Result<()> {
        let digests = staging.digests()?;
        let written = staging.commit()?;
        for d in digests {
            self.outputs.retain(|o| o.name != d.name);
            self.outputs.push(d);
        }
        self.written.extend(written);
        Ok(())
    }

    fn ingest(&mut self) -> Result<()> {
        let mut st = Staging::begin(self.out_dir(), "ingest")?;
        let (_, log) = self.corpus()?;
        write_jsonl(&st.path(FILTERED), &log)?;
        self.finish_stage(st)
    }

    fn matches(&mut self) -> Result<()> {
        let mut st = Staging::begin(self.out_dir(), "match")?;
        let (cfg, workers) = (self.cfg.matching.clone(), self.cfg.worker_count);
        let corpus = self.loaded_corpus()?;
        let (matches, stats) = generate_matches(corpus, &cfg, workers)?;
        info!("{} match edges over {} pairs", stats.total_edges, stats.pairs_examined);
        write_jsonl(&st.path(MATCHES), &matches)?;
        write_json(&st.path(STATS), &stats)?;
        self.finish_stage(st)
    }

    fn detect(&mut self) -> Result<()> {
        let mut st = Staging::begin(self.out_dir(), "detect")?;
        let path = self.out_dir().join(MATCHES);
        self.input_file(MATCHES, &path)?;
        let matches: Vec<Match> = read_jsonl(&path)?;
        let cfg = self.cfg.detect.clone();
        cfg.validate()?;
        let corpus = self.loaded_corpus()?;
        let graph = build_graph(corpus, matches)?;
        let hyps = detect_all(&graph, &cfg);
        info!("{} hypotheses", hyps.len());
        write_jsonl(&st.path(HYPOTHESES), &hyps)?;
        summarize(&hyps).write_csv(&st.path(COUNTS))?;
        self.finish_stage(st)
    }

    fn read_hypotheses(&mut self) -> Result<Vec<Hypothesis>> {
        let path = self.out_dir().join(HYPOTHESES);
        self.input_file(HYPOTHESES, &path)?;
        let hyps: Vec<Hypothesis> = read_jsonl(&path)?;
        for h in &hyps {
            h.validate()?;
        }
        Ok(hyps)
    }

    fn rank(&mut self) -> Result<()> {
        let mut st = Staging::begin(self.out_dir(), "rank")?;
        let hyps = self.read_hypotheses()?;
        let usage = match self.cfg.usage_stats_path.clone() {
            Some(p) => {
                self.input_file("usage_stats", &p)?;
                read_json(&p)?
            }
            None => UsageStats::default(),
        };
        let cfg = self.cfg.ranking.clone();
        let corpus = self.loaded_corpus()?;
        let ranked = rank(&hyps, corpus, &usage, &cfg)?;
        write_ranking_csv(&st.path(RANKING), &ranked)?;
        distribution_report(&ranked).write_csv(&st.path(DISTRIBUTIONS))?;
        self.finish_stage(st)
    }

    fn synth(&mut self) -> Result<()> {
        let mut st = Staging::begin(self.out_dir(), "synth")?;
        let out = generate(&self.cfg.synth)?;
        let tmp = st.tmp.clone();
        out.write(&tmp)?;
        st.path(SYNTH_CORPUS);
        st.path(GROUND_TRUTH);
        info!("generated {} datasets, {} truth records", out.tables.len(), out.truth.records.len());
        self.finish_stage(st)
    }

    fn evaluate(&mut self) -> Result<()> {
        let mut st = Staging::begin(self.out_dir(), "evaluate")?;
        let hyps = self.read_hypotheses()?;
        let gt_path = self.cfg.ground_truth();
        self.input_file(GROUND_TRUTH, &gt_path)?;
        let truth = GroundTruth::read_jsonl(&gt_path)?;
        let exact = self.cfg.exact_groups;
        truth.check(self.loaded_corpus()?)?;
        evaluate_detection(&hyps, &truth, exact).write_csv(&st.path(EVALUATION))?;
        self.finish_stage(st)
    }

    fn manifest(&mut self, command: Command) -> Result<()> {
        let mut st = Staging::begin(self.out_dir(), "manifest")?;
        let manifest = RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config: self.cfg.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
        };
        write_json(&st.path(MANIFEST), &manifest)?;
        self.finish_stage(st)
    }
}

/// Runs one command. On error, outputs of the failing stage are removed;
/// stages that completed earlier in a `pipeline` run keep theirs.
pub fn run(command: Command, cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut r = Run::new(cfg);
    info!("running {command}");
    match command {
        Command::Ingest => r.ingest()?,
        Command::Match => r.matches()?,
        Command::Detect => r.detect()?,
        Command::Rank => r.rank()?,
        Command::Synth => r.synth()?,
        Command::Evaluate => r.evaluate()?,
        Command::Pipeline => {
            r.ingest()?;
            r.matches()?;
            r.detect()?;
            r.rank()?;
            if cfg.ground_truth().is_file() {
                r.evaluate()?;
            }
        }
    }
    r.manifest(command)?;
    Ok(RunReport { outputs: r.written })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staging_removes_uncommitted_outputs() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut st = Staging::begin(dir.path(), "x").unwrap();
            fs::write(st.path("a.txt"), "a").unwrap();
        }
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);

        let mut st = Staging::begin(dir.path(), "x").unwrap();
        fs::write(st.path("a.txt"), "a").unwrap();
        let written = st.commit().unwrap();
        assert_eq!(written, [dir.path().join("a.txt")]);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn config_paths_resolve_against_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"corpus_dir": "data", "output_dir": "/abs/out", "worker_count": 2}"#).unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.corpus_dir, dir.path().join("data"));
        assert_eq!(cfg.output_dir, PathBuf::from("/abs/out"));
        assert_eq!(cfg.worker_count, Some(2));
        assert_eq!(cfg.ground_truth(), dir.path().join(GROUND_TRUTH));
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"corpus": "data"}"#).unwrap();
        assert!(matches!(PipelineConfig::load(&path), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::load(&dir.path().join("nope.json")), Err(Error::Config(_))));
    }

    #[test]
    fn commands_roundtrip() {
        for c in [
            Command::Ingest,
            Command::Match,
            Command::Detect,
            Command::Rank,
            Command::Synth,
            Command::Evaluate,
            Command::Pipeline,
        ] {
            assert_eq!(c.as_str().parse::<Command>().unwrap(), c);
        }
        assert!("report".parse::<Command>().is_err());
    }
}
