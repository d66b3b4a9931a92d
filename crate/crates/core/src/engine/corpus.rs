//! Series with analytically known behaviour, and the batch runner.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::expr::{Expr, PsiFunction};
use crate::extrange::ExtReal;
use crate::stats::SeriesSpec;

use super::analyze::{analyze, EngineError};
use super::config::EngineConfig;
use super::verdict::Conclusion;

/// The corpus shipped with the crate.
pub const DEFAULT_CORPUS: &str = include_str!("../../../../corpus/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truth {
    Converges,
    Diverges,
}

impl Truth {
    pub fn conclusion(self) -> Conclusion {
        match self {
            Truth::Converges => Conclusion::Converges,
            Truth::Diverges => Conclusion::Diverges,
        }
    }
}

/// One record of a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEntry {
    pub name: String,
    pub term: String,
    pub truth: Truth,
    pub rationale: String,
    /// Smallest `k` at which the logarithmic family is expected to decide.
    pub minimal_k: usize,
    pub f: Option<String>,
    pub g: Option<String>,
    pub phi: Option<String>,
    pub zeta: Option<String>,
    pub psi: Option<String>,
    pub psi_prime: Option<String>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusFile {
    #[serde(default)]
    #[allow(dead_code)]
    version: Option<u32>,
    #[serde(default)]
    entry: Vec<RawEntry>,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub spec: SeriesSpec,
    pub truth: Truth,
    pub rationale: String,
    pub minimal_k: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corpus is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("entry `{name}`: {field}: {message}")]
    Entry { name: String, field: &'static str, message: String },
}

fn parse_field(name: &str, field: &'static str, text: &str) -> Result<Expr, CorpusError> {
    Expr::parse(text).map_err(|e| CorpusError::Entry { name: name.into(), field, message: e.to_string() })
}

impl RawEntry {
    pub fn to_entry(&self) -> Result<CorpusEntry, CorpusError> {
        let name = &self.name;
        let opt = |field: &'static str, v: &Option<String>| v.as_deref().map(|t| parse_field(name, field, t)).transpose();
        let mut spec = SeriesSpec::new(name.clone(), parse_field(name, "term", &self.term)?);
        spec.f = opt("f", &self.f)?;
        spec.g = opt("g", &self.g)?;
        spec.phi = opt("phi", &self.phi)?;
        spec.zeta = opt("zeta", &self.zeta)?;
        if let Some(psi) = opt("psi", &self.psi)? {
            let sigma = ExtReal::from_f64(self.sigma.unwrap_or(1.0), 64).map_err(|e| CorpusError::Entry {
                name: name.clone(),
                field: "sigma",
                message: e.to_string(),
            })?;
            spec.psi = Some(match opt("psi_prime", &self.psi_prime)? {
                Some(prime) => PsiFunction::with_derivative(psi, prime, sigma).0,
                None => PsiFunction::new(psi, sigma).map_err(|e| CorpusError::Entry {
                    name: name.clone(),
                    field: "psi",
                    message: e.to_string(),
                })?,
            });
        }
        Ok(CorpusEntry { spec, truth: self.truth, rationale: self.rationale.clone(), minimal_k: self.minimal_k })
    }
}

pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let file: CorpusFile = toml::from_str(text)?;
    file.entry.iter().map(RawEntry::to_entry).collect()
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    parse_corpus(&text)
}

pub fn default_corpus() -> Vec<CorpusEntry> {
    parse_corpus(DEFAULT_CORPUS).expect("the bundled corpus is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusRow {
    pub name: String,
    pub term: String,
    pub truth: Truth,
    pub conclusion: Option<Conclusion>,
    pub theorem: Option<String>,
    pub k: Option<usize>,
    pub margin: Option<String>,
    pub minimal_k: usize,
    pub contradiction: bool,
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub rows: Vec<CorpusRow>,
    pub decided: usize,
    pub contradictions: Vec<String>,
}

impl CorpusReport {
    pub fn decided_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            1.0
        } else {
            self.decided as f64 / self.rows.len() as f64
        }
    }
}

/// Analyzes every entry and compares with its known behaviour.
pub fn run_corpus(entries: &[CorpusEntry], config: &EngineConfig) -> CorpusReport {
    let mut rows = Vec::with_capacity(entries.len());
    for entry in entries {
        let start = Instant::now();
        let result = analyze(&entry.spec, config);
        let mut row = CorpusRow {
            name: entry.spec.name.clone(),
            term: entry.spec.term.to_string(),
            truth: entry.truth,
            conclusion: None,
            theorem: None,
            k: None,
            margin: None,
            minimal_k: entry.minimal_k,
            contradiction: false,
            error: None,
            seconds: 0.0,
        };
        match result {
            Ok(v) => {
                row.contradiction = v.conclusion != Conclusion::Inconclusive && v.conclusion != entry.truth.conclusion();
                row.conclusion = Some(v.conclusion);
                if let Some(f) = &v.fired_by {
                    row.theorem = Some(f.theorem.clone());
                    row.k = Some(f.k);
                    row.margin = Some(crate::ratio_root::short(&f.margin));
                }
            }
            Err(e) => {
                // an engine that certified both outcomes contradicts the truth either way
                row.contradiction = matches!(e, EngineError::Contradiction { .. });
                row.error = Some(e.to_string());
            }
        }
        row.seconds = start.elapsed().as_secs_f64();
        rows.push(row);
    }
    let decided = rows.iter().filter(|r| matches!(r.conclusion, Some(c) if c != Conclusion::Inconclusive)).count();
    let contradictions = rows.iter().filter(|r| r.contradiction).map(|r| r.name.clone()).collect();
    CorpusReport { rows, decided, contradictions }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_corpus_loads() {
        let entries = default_corpus();
        assert!(entries.len() >= 20);
    }

    #[test]
    fn empty_corpus_is_empty() {
        assert!(parse_corpus("").unwrap().is_empty());
        let report = run_corpus(&[], &EngineConfig::default());
        assert!(report.rows.is_empty() && report.contradictions.is_empty());
    }

    #[test]
    fn bad_entries_name_the_field() {
        let text = "[[entry]]\nname = \"x\"\nterm = \"1/(n\"\ntruth = \"Converges\"\nrationale = \"\"\nminimal_k = 0\n";
        let err = parse_corpus(text).unwrap_err().to_string();
        assert!(err.contains("entry `x`: term"), "{err}");
        assert!(parse_corpus("[[entry]]\nname = 1\n").is_err());
    }
}
