//! Runs the test families over the probe grid and assembles verdicts.

mod analyze;
mod config;
mod corpus;
mod explain;
mod grid;
mod verdict;

pub use analyze::{analyze, EngineError, MAX_K};
pub use config::{EngineConfig, MAX_ENGINE_PRECISION};
pub use corpus::{
    default_corpus, load_corpus, parse_corpus, run_corpus, CorpusEntry, CorpusError, CorpusReport, CorpusRow, RawEntry,
    Truth, DEFAULT_CORPUS,
};
pub use explain::explain;
pub use grid::{ProbeDescription, ProbeGrid};
pub use verdict::{Conclusion, FiredBy, NamedLimit, NearestMiss, PsiDescription, Verdict};
