//! Composite Gauss–Legendre quadrature on panels aligned with a sampling grid.

use crate::optics::SpatialGrid;

// 5-point Gauss–Legendre rule on [-1, 1].
const NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Panel boundaries for `[lo, hi]`: the interval ends, every grid line
/// strictly inside, and any extra `breaks` (integrand jumps).
pub(crate) fn panels(grid: &SpatialGrid, lo: f64, hi: f64, breaks: &[f64]) -> Vec<f64> {
    let pitch = grid.pitch();
    let origin = grid.origin();
    let first = ((lo - origin) / pitch).floor() as i64 + 1;
    let last = ((hi - origin) / pitch).ceil() as i64 - 1;
    let mut edges = Vec::with_capacity((last - first + 3).max(2) as usize + breaks.len());
    edges.push(lo);
    edges.extend(
        (first..=last)
            .map(|k| origin + k as f64 * pitch)
            .filter(|&x| x > lo && x < hi),
    );
    edges.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
    edges.push(hi);
    edges.sort_by(f64::total_cmp);
    let tiny = 1e-12 * pitch;
    edges.dedup_by(|b, a| *b - *a <= tiny);
    if let Some(last) = edges.last_mut() {
        *last = hi;
    }
    edges
}

/// `∫ f` over consecutive panels.
pub(crate) fn integrate(edges: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    edges
        .windows(2)
        .map(|w| {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[1] + w[0]);
            half * NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(t, wt)| wt * f(mid + half * t))
                .sum::<f64>()
        })
        .sum()
}
