use std::fmt;

use serde::Serialize;

use crate::extrange::ExtReal;
use crate::ratio_root::{Case, LimitEstimate};
use crate::stats::{Family, StatSample};

use super::grid::ProbeDescription;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
pub enum Conclusion {
    Converges,
    Diverges,
    Inconclusive,
}

impl fmt::Display for Conclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Conclusion::Converges => "Converges",
            Conclusion::Diverges => "Diverges",
            Conclusion::Inconclusive => "Inconclusive",
        })
    }
}

/// The test that produced a decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiredBy {
    pub family: Family,
    pub psi: bool,
    pub k: usize,
    pub theorem: String,
    pub case: Case,
    pub conclusion: Conclusion,
    /// Decision boundary the statistic was compared with.
    pub bound: ExtReal,
    /// Observed statistic level on the tail.
    pub level: ExtReal,
    pub margin: ExtReal,
    /// First probe point from which the inequality held.
    pub from_n: ExtReal,
}

/// A precondition limit that was evaluated on the way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NamedLimit {
    pub name: String,
    pub family: Family,
    pub psi: bool,
    pub k: usize,
    #[serde(flatten)]
    pub estimate: LimitEstimate,
}

/// The closest a test came to deciding, for inconclusive verdicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearestMiss {
    pub family: Family,
    pub psi: bool,
    pub k: usize,
    pub theorem: String,
    pub level: ExtReal,
    pub gap: f64,
    pub reason: String,
}

/// Description of the ψ function used, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PsiDescription {
    pub psi: String,
    pub psi_prime: String,
    pub sigma: ExtReal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub term: String,
    pub conclusion: Conclusion,
    pub fired_by: Option<FiredBy>,
    /// Separation of the deciding statistic from its boundary; 0 when
    /// inconclusive.
    pub margin: ExtReal,
    /// Samples of the deciding (or nearest-miss) statistic.
    pub evidence: Vec<StatSample>,
    pub preconditions: Vec<NamedLimit>,
    pub probes: ProbeDescription,
    /// Other tests that fired with the same conclusion.
    pub also_fired: Vec<FiredBy>,
    pub nearest_miss: Option<NearestMiss>,
    pub psi: Option<PsiDescription>,
    /// Precision of the pass the verdict was taken from.
    pub precision: usize,
    pub warnings: Vec<String>,
}

impl Verdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts serialize")
    }
}
