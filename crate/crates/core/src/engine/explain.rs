//! Plain-text account of a verdict.

use std::fmt::Write;

use crate::ratio_root::short;

use super::verdict::{Conclusion, Verdict};

pub fn explain(v: &Verdict) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "series: sum of {}", v.term);
    if let Some(psi) = &v.psi {
        let _ = writeln!(out, "psi(n) = {}, psi'(n) = {} (from n >= {})", psi.psi, psi.psi_prime, short(&psi.sigma));
    }
    let _ = writeln!(out, "verdict: {}", v.conclusion);
    match &v.fired_by {
        Some(f) => {
            let scale = if f.psi { " on the psi scale" } else { "" };
            let side = match f.conclusion {
                Conclusion::Converges => "at or above",
                _ => "at or below",
            };
            let _ = writeln!(
                out,
                "decided by {} ({} statistic{scale}, k = {}, {:?}): the statistic stays {side} its boundary {} from n = {} on",
                f.theorem,
                f.family,
                f.k,
                f.case,
                short(&f.bound),
                short(&f.from_n),
            );
            let _ = writeln!(out, "observed level {}, margin {}", short(&f.level), short(&f.margin));
            for other in &v.also_fired {
                let _ = writeln!(out, "also fired: {} at k = {} ({})", other.theorem, other.k, other.conclusion);
            }
        }
        None => match &v.nearest_miss {
            Some(m) => {
                let _ = writeln!(
                    out,
                    "nearest miss: {} at k = {} ({} statistic), level {}, gap {:.3e}: {}",
                    m.theorem,
                    m.k,
                    m.family,
                    short(&m.level),
                    m.gap,
                    m.reason
                );
            }
            None => {
                let _ = writeln!(out, "no test produced usable samples");
            }
        },
    }
    if !v.preconditions.is_empty() {
        let _ = writeln!(out, "precondition limits:");
        for l in &v.preconditions {
            let scale = if l.psi { ", psi" } else { "" };
            let _ = writeln!(out, "  {} [{} k = {}{scale}]: {} ({:?})", l.name, l.family, l.k, l.estimate.kind, l.estimate.confidence);
        }
    }
    let _ = writeln!(
        out,
        "probes: {} points from {} to {}, {} bits",
        v.probes.count,
        short(&v.probes.first),
        short(&v.probes.last),
        v.precision
    );
    for w in &v.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
