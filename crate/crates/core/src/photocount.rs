//! Photocount-regime Monte Carlo of the coincidence scan.
//!
//! Each step draws a Poisson number of pairs, places every pair uniformly on
//! the detection window and keeps it with probability `T1_eff · T2` at that
//! position, so the mean count is `mean_pairs · C(δ1, δ2)` with the same
//! normalisation as the analytic rate. Every step draws from its own ChaCha
//! stream keyed by `(seed, step)`, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::analysis::{RecordKind, ScanRecord};
use crate::engine::{CoincidenceModel, ExperimentConfig, ScanSchedule};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingPlan {
    /// Expected generated pairs per acquisition window.
    pub mean_pairs_per_step: f64,
    pub seed: u64,
    pub schedule: ScanSchedule,
    /// Mean accidental/dark coincidences per step.
    pub background: f64,
}

impl CountingPlan {
    pub fn new(mean_pairs_per_step: f64, seed: u64, schedule: ScanSchedule) -> Self {
        CountingPlan {
            mean_pairs_per_step,
            seed,
            schedule,
            background: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_pairs_per_step > 0.0 && self.mean_pairs_per_step.is_finite()) {
            return Err(Error::invalid(
                "mean pairs per step",
                format!("must be positive, got {}", self.mean_pairs_per_step),
            ));
        }
        if !(self.background >= 0.0 && self.background.is_finite()) {
            return Err(Error::invalid(
                "background",
                format!("must be non-negative, got {}", self.background),
            ));
        }
        self.schedule.validate()
    }
}

/// Independent random stream for step `step` of a run seeded with `seed`.
pub fn step_stream(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng
}

fn poisson(mean: f64, rng: &mut ChaCha8Rng) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::invalid("poisson mean", e.to_string()))?;
    Ok(dist.sample(rng) as u64)
}

/// Coincidences recorded at one step. `background` adds Poisson accidentals.
pub fn sample_step_counts(
    model: &CoincidenceModel,
    delta_g1: f64,
    delta_g2: f64,
    mean_pairs: f64,
    background: f64,
    rng: &mut ChaCha8Rng,
) -> Result<u64> {
    if !(mean_pairs > 0.0 && mean_pairs.is_finite()) {
        return Err(Error::invalid("mean pairs", format!("must be positive, got {mean_pairs}")));
    }
    let (t1, t2) = model.masks_at(delta_g1, delta_g2);
    let (lo, hi) = model.detection_window();
    let pairs = poisson(mean_pairs, rng)?;
    let mut accepted = 0u64;
    for _ in 0..pairs {
        let x = rng.random_range(lo..hi);
        let p = t1.transmission(x) * t2.transmission(x);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Consistency(format!("acceptance probability {p} at x = {x} mm")));
        }
        if rng.random::<f64>() < p {
            accepted += 1;
        }
    }
    Ok(accepted + poisson(background, rng)?)
}

/// Counts of one scan, with their expectations.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub positions: Vec<f64>,
    pub counts: Vec<u64>,
    /// `mean_pairs · C + background` at each step.
    pub expected: Vec<f64>,
    pub mean_pairs_per_step: f64,
    pub background: f64,
}

impl CountRecord {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Raw counts with expected counts alongside.
    pub fn to_scan_record(&self) -> Result<ScanRecord> {
        ScanRecord::new(
            self.positions.clone(),
            self.counts.iter().map(|&c| c as f64).collect(),
            self.expected.clone(),
            RecordKind::Counts,
        )
    }

    /// Background-subtracted counts divided by the pair number, on the scale
    /// of the analytic rate. Negative values are clipped at zero.
    pub fn normalized(&self) -> Result<ScanRecord> {
        let scale = |v: f64| ((v - self.background) / self.mean_pairs_per_step).max(0.0);
        ScanRecord::new(
            self.positions.clone(),
            self.counts.iter().map(|&c| scale(c as f64)).collect(),
            self.expected.iter().map(|&e| scale(e)).collect(),
            RecordKind::AnalyticRate,
        )
    }

    /// `χ² / n` of the counts against their expectations.
    pub fn reduced_chi_square(&self) -> f64 {
        let (sum, n) = self
            .counts
            .iter()
            .zip(&self.expected)
            .filter(|(_, &e)| e > 0.0)
            .fold((0.0, 0usize), |(s, n), (&c, &e)| (s + (c as f64 - e).powi(2) / e, n + 1));
        sum / n as f64
    }
}

/// Monte Carlo scan on the current rayon pool.
pub fn run_counting_scan(config: &ExperimentConfig, plan: &CountingPlan) -> Result<CountRecord> {
    plan.validate()?;
    let model = CoincidenceModel::new(config)?;
    let schedule = &plan.schedule;
    let steps: Vec<(f64, u64, f64)> = (0..schedule.n_steps)
        .into_par_iter()
        .map(|k| {
            let (d1, d2) = schedule.displacements(k);
            let mut rng = step_stream(plan.seed, k as u64);
            let count = sample_step_counts(&model, d1, d2, plan.mean_pairs_per_step, plan.background, &mut rng)?;
            let expected = plan.mean_pairs_per_step * model.rate(d1, d2) + plan.background;
            Ok((schedule.position(k), count, expected))
        })
        .collect::<Result<_>>()?;
    Ok(CountRecord {
        positions: steps.iter().map(|s| s.0).collect(),
        counts: steps.iter().map(|s| s.1).collect(),
        expected: steps.iter().map(|s| s.2).collect(),
        mean_pairs_per_step: plan.mean_pairs_per_step,
        background: plan.background,
    })
}

/// Same as [`run_counting_scan`] on a dedicated pool of `workers` threads.
pub fn run_counting_scan_with_workers(
    config: &ExperimentConfig,
    plan: &CountingPlan,
    workers: usize,
) -> Result<CountRecord> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Consistency(format!("thread pool: {e}")))?;
    pool.install(|| run_counting_scan(config, plan))
}
