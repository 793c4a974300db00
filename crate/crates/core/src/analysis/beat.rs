use super::ScanRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeatPeriod {
    Finite(f64),
    /// Equal periods: no beat.
    Infinite,
}

impl BeatPeriod {
    pub fn finite(self) -> Option<f64> {
        match self {
            BeatPeriod::Finite(p) => Some(p),
            BeatPeriod::Infinite => None,
        }
    }
}

/// Moiré beat period `P = 1 / |1/p1 − 1/p2|`.
pub fn expected_beat_period(p1: f64, p2: f64) -> Result<BeatPeriod> {
    for p in [p1, p2] {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::invalid("period", format!("must be positive, got {p}")));
        }
    }
    if p1 == p2 {
        return Ok(BeatPeriod::Infinite);
    }
    Ok(BeatPeriod::Finite(1.0 / (1.0 / p1 - 1.0 / p2).abs()))
}

/// Mean spacing between the "large" local maxima of a trace: those reaching
/// at least `fraction` of the way from the trace minimum to its maximum.
/// `None` with fewer than two such peaks.
pub fn large_peak_spacing(record: &ScanRecord, fraction: f64) -> Option<f64> {
    let y = record.values();
    let x = record.positions();
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return None;
    }
    let threshold = lo + fraction * (hi - lo);
    let n = y.len();
    let peaks: Vec<f64> = (0..n)
        .filter(|&k| {
            let left = k == 0 || y[k] > y[k - 1];
            let right = k + 1 == n || y[k] >= y[k + 1];
            left && right && y[k] >= threshold
        })
        .map(|k| x[k])
        .collect();
    if peaks.len() < 2 {
        return None;
    }
    Some((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}
