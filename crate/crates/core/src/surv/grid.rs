use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PERCENTILES: [f64; 5] = [10.0, 25.0, 50.0, 75.0, 90.0];

/// Partition of follow-up time into `q` periods `(s[k-1], s[k]]` with
/// `s[0] = 0` and `s[q] = +inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    boundaries: Vec<f64>,
}

impl TimeGrid {
    /// Builds a grid from its finite interior boundaries.
    pub fn from_interior(interior: &[f64]) -> Result<Self> {
        let mut boundaries = Vec::with_capacity(interior.len() + 2);
        boundaries.push(0.0);
        boundaries.extend_from_slice(interior);
        boundaries.push(f64::INFINITY);
        if interior.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("interior grid boundaries must be finite"));
        }
        if boundaries.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(format!(
                "grid boundaries must be strictly increasing and positive: {interior:?}"
            )));
        }
        Ok(Self { boundaries })
    }

    /// All `q + 1` boundaries including `0` and `+inf`.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn interior(&self) -> &[f64] {
        &self.boundaries[1..self.boundaries.len() - 1]
    }

    pub fn n_periods(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Zero-based index `k` of the period with `s[k] < t <= s[k+1]`.
    pub fn period_of(&self, t: f64) -> Option<usize> {
        if !(t > 0.0) || t.is_nan() {
            return None;
        }
        let idx = self.boundaries.partition_point(|&b| b < t);
        Some(idx - 1)
    }
}

impl Serialize for TimeGrid {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        // +inf has no JSON representation; the outer boundaries are implied
        self.interior().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TimeGrid {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let interior = Vec::<f64>::deserialize(deserializer)?;
        TimeGrid::from_interior(&interior).map_err(serde::de::Error::custom)
    }
}

/// Percentile by linear interpolation between order statistics: the value at
/// 1-based rank `1 + (n - 1) * pct / 100`.
pub fn percentile(sorted: &[f64], pct: f64) -> f64 {
    let n = sorted.len();
    let pos = (n - 1) as f64 * pct / 100.0;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Time grid whose interior boundaries are percentiles of `time`.
///
/// Coinciding boundaries are merged with a warning. Fails when `time` has
/// fewer than two distinct values.
pub fn time_grid_from_percentiles(time: &[f64], percentiles: &[f64]) -> Result<TimeGrid> {
    if time.is_empty() {
        return Err(Error::invalid("cannot build a time grid from no times"));
    }
    if percentiles.is_empty() {
        return Err(Error::invalid("at least one percentile is required"));
    }
    if percentiles.iter().any(|&p| !(p > 0.0 && p < 100.0)) {
        return Err(Error::invalid(format!("percentiles must lie in (0, 100): {percentiles:?}")));
    }
    if percentiles.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("percentiles must be strictly increasing"));
    }
    if time.iter().any(|t| !t.is_finite() || *t <= 0.0) {
        return Err(Error::invalid("times must be positive and finite"));
    }
    let mut sorted = time.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::invalid("time grid is degenerate: fewer than two distinct times"));
    }
    let mut interior: Vec<f64> = Vec::with_capacity(percentiles.len());
    for &p in percentiles {
        let b = percentile(&sorted, p);
        if interior.last().is_some_and(|&last| b <= last) {
            log::warn!("percentile {p} duplicates the previous grid boundary {b}; merged");
            continue;
        }
        interior.push(b);
    }
    TimeGrid::from_interior(&interior)
}
