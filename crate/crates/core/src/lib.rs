//! Integration-hypothesis discovery for open data corpora.
//!
//! The pipeline loads a corpus of published tables ([`corpus`]), compares
//! every dataset with every other dataset to build a scored matches relation
//! ([`matching`]), indexes it as a content graph ([`graph`]), detects six
//! classes of integration hypotheses by edge-pattern matching
//! ([`hypotheses`]) and orders them by verification probability, cost and
//! integration benefit ([`ranking`]). [`synth`] produces seeded corpora with
//! ground truth; [`pipeline`] runs the stages and writes their artifacts.

pub mod canon;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod hypotheses;
pub mod io;
pub mod matching;
pub mod pipeline;
pub mod ranking;
pub mod synth;

pub use corpus::{Attribute, Corpus, Dataset, FilterConfig, PropertyMap, ValueSet};
pub use error::{Error, Result};
pub use matching::{Match, MatchConfig, MatchKind};
pub use pipeline::{run, Command, PipelineConfig, RunManifest};
pub use hypotheses::{DetectConfig, Hypothesis, HypothesisClass};
pub use ranking::{RankedHypothesis, RankingConfig, Strategy, UsageStats};
pub use synth::{GroundTruth, SynthConfig};
