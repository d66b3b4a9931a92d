//! Probe points.

use serde::Serialize;

use crate::extrange::ExtReal;
use crate::ratio_root::horizon_points;

/// Exponent of the last regular grid point, `2^64`.
pub const GRID_TOP_LOG2: i64 = 64;

/// Largest deep-probe point is below `10^10000`, about `2^33219`.
const DEEP_TOP_LOG2: i64 = 33_219;

/// Points at which statistics are sampled, and the sparser set used for
/// limits.
#[derive(Debug, Clone)]
pub struct ProbeGrid {
    pub points: Vec<ExtReal>,
    pub limit_points: Vec<ExtReal>,
    pub density: u32,
    pub deep_probe: bool,
}

/// Summary of a grid for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeDescription {
    pub count: usize,
    pub first: ExtReal,
    pub last: ExtReal,
    pub points_per_octave: u32,
    pub deep_probe: bool,
    pub limit_points: usize,
    pub limit_last: ExtReal,
}

impl ProbeGrid {
    /// `floor(16 · 2^(j/d))` up to `2^64` for density `d`, then with
    /// `deep_probe` the points `2^(64·2^i)` below `10^10000`.
    pub fn new(density: u32, deep_probe: bool, precision: usize) -> Self {
        Self::capped(density, deep_probe, None, precision)
    }

    /// As [`ProbeGrid::new`], without statistic points above `n_max`.
    pub fn capped(density: u32, deep_probe: bool, n_max: Option<&ExtReal>, precision: usize) -> Self {
        let d = density.max(1);
        let steps = (GRID_TOP_LOG2 - 4) as u32 * d;
        let mut points = Vec::with_capacity(steps as usize + 1);
        for j in 0..=steps {
            let (whole, part) = (j / d, j % d);
            let base = ExtReal::pow2(4 + whole as i64, precision).expect("in range");
            let point = if part == 0 {
                base
            } else {
                let frac = ExtReal::from_f64(part as f64 / d as f64, precision).expect("finite");
                let factor = frac.mul(&ExtReal::ln2(precision)).and_then(|x| x.exp()).expect("in range");
                base.mul(&factor).expect("in range").floor()
            };
            points.push(point);
        }
        if deep_probe {
            let mut e = GRID_TOP_LOG2 * 2;
            while e <= DEEP_TOP_LOG2 {
                points.push(ExtReal::pow2(e, precision).expect("in range"));
                e *= 2;
            }
        }
        if let Some(cap) = n_max {
            points.retain(|p| p <= cap);
        }
        let mut limit_points: Vec<ExtReal> =
            (4..=GRID_TOP_LOG2).map(|j| ExtReal::pow2(j, precision).expect("in range")).collect();
        limit_points.extend(horizon_points(precision));
        ProbeGrid { points, limit_points, density: d, deep_probe }
    }

    pub fn describe(&self) -> ProbeDescription {
        ProbeDescription {
            count: self.points.len(),
            first: self.points.first().cloned().unwrap_or_else(|| ExtReal::zero(64)),
            last: self.points.last().cloned().unwrap_or_else(|| ExtReal::zero(64)),
            points_per_octave: self.density,
            deep_probe: self.deep_probe,
            limit_points: self.limit_points.len(),
            limit_last: self.limit_points[self.limit_points.len() - 1].clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spans_sixteen_to_two_pow_64() {
        let g = ProbeGrid::new(1, false, 128);
        assert_eq!(g.points.len(), 61);
        assert_eq!(g.points[0], ExtReal::from_u64(16, 128));
        assert_eq!(g.points[60], ExtReal::pow2(64, 128).unwrap());
        assert!(g.points.iter().all(|p| p.is_integer()));
        assert_eq!(g.limit_points.len(), 61 + 42);
    }

    #[test]
    fn doubled_grid_interleaves() {
        let coarse = ProbeGrid::new(1, false, 128);
        let fine = ProbeGrid::new(2, false, 128);
        assert_eq!(fine.points.len(), 121);
        for (j, p) in coarse.points.iter().enumerate() {
            assert_eq!(&fine.points[2 * j], p);
        }
        assert_eq!(fine.points[1], ExtReal::from_u64(22, 128));
        assert!(fine.points.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn deep_probe_stays_below_ten_pow_ten_thousand() {
        let g = ProbeGrid::new(1, true, 128);
        let last = g.points.last().unwrap();
        assert_eq!(*last, ExtReal::pow2(32_768, 128).unwrap());
        assert_eq!(g.points.len(), 61 + 9);
    }

    #[test]
    fn cap_drops_high_points() {
        let cap = ExtReal::from_u64(1 << 20, 128);
        let g = ProbeGrid::capped(1, true, Some(&cap), 128);
        assert_eq!(g.points.len(), 17);
        assert_eq!(g.limit_points.len(), 103);
    }
}
