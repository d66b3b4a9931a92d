use serde::Serialize;

use crate::extrange::{ExtReal, DEFAULT_PRECISION};
use crate::ratio_root::Tolerances;
use crate::stats::Family;

/// Highest precision the engine escalates to when two passes disagree.
pub const MAX_ENGINE_PRECISION: usize = 4096;

/// Relative agreement demanded between passes at `p` and `2p` bits.
pub const PASS_AGREEMENT: f64 = 1e-9;

/// Values below this magnitude are compared absolutely between passes.
pub const PASS_FLOOR: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineConfig {
    /// Deepest iterated-log level tried.
    pub k_max: usize,
    pub precision: usize,
    /// Families tried, in this order.
    pub families: Vec<Family>,
    /// Extends the statistic grid past `2^64` in log space.
    pub deep_probe: bool,
    /// Points per octave of the statistic grid (1 or 2).
    pub density: u32,
    /// Statistic grid points above this are dropped.
    pub n_max: Option<ExtReal>,
    /// Re-checks the deciding samples at twice the precision.
    pub verify_precision: bool,
    pub tolerances: Tolerances,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            k_max: 3,
            precision: DEFAULT_PRECISION,
            families: Family::ORDER.to_vec(),
            deep_probe: false,
            density: 1,
            n_max: None,
            verify_precision: true,
            tolerances: Tolerances::default(),
        }
    }
}
