use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::ScanRecord;
use crate::{Error, Result};

/// Family-wise false-alarm probability for calling a periodogram bin a line.
const FALSE_ALARM: f64 = 0.01;
/// Lines weaker than this fraction of the strongest one are ignored
/// (Hann sidelobes sit near 7e-4).
const DYNAMIC_RANGE: f64 = 1e-2;
/// Bins below this index belong to the DC main lobe of the Hann window.
const FIRST_BIN: usize = 2;

/// One-sided Hann-windowed periodogram of a uniformly sampled record.
#[derive(Debug, Clone)]
pub struct Periodogram {
    /// Bin spacing, cycles/mm.
    pub resolution: f64,
    /// Power at bins `0..=n/2`.
    pub power: Vec<f64>,
}

impl Periodogram {
    pub fn frequency(&self, bin: f64) -> f64 {
        bin * self.resolution
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    /// Interpolated frequency, cycles/mm.
    pub frequency: f64,
    pub power: f64,
}

impl SpectralPeak {
    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBeat {
    /// Period of the lowest-frequency line, mm.
    pub period: f64,
    /// Period interval spanned by ± half a frequency bin.
    pub interval: (f64, f64),
    pub frequency: f64,
    /// All significant lines, ascending in frequency.
    pub peaks: Vec<SpectralPeak>,
}

fn uniform_spacing(record: &ScanRecord) -> Result<f64> {
    let x = record.positions();
    let n = x.len();
    if n < 16 {
        return Err(Error::InvalidRecord(format!(
            "spectral analysis needs at least 16 samples, got {n}"
        )));
    }
    let dx = (x[n - 1] - x[0]) / (n - 1) as f64;
    if x.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-6 * dx) {
        return Err(Error::InvalidRecord("samples are not uniformly spaced".into()));
    }
    Ok(dx)
}

pub fn periodogram(record: &ScanRecord) -> Result<Periodogram> {
    let dx = uniform_spacing(record)?;
    let y = record.values();
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = y
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let w = 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos();
            Complex64::new((v - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok(Periodogram {
        resolution: 1.0 / (n as f64 * dx),
        power: buf[..=n / 2].iter().map(|c| c.norm_sqr() / n as f64).collect(),
    })
}

/// Significant lines of the periodogram, ascending in frequency.
///
/// A local maximum counts when it clears both the white-noise threshold
/// (median-based noise level times `ln(M / 0.01)`, M = number of bins) and
/// 1% of the strongest line. Peak positions are refined by a parabola
/// through the log-power of the three bins around the maximum.
pub fn spectral_peaks(record: &ScanRecord) -> Result<Vec<SpectralPeak>> {
    let pg = periodogram(record)?;
    let p = &pg.power;
    let top = p.len() - 1;
    if top <= FIRST_BIN + 1 {
        return Ok(Vec::new());
    }
    let mut sorted: Vec<f64> = p[1..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let noise_level = median / std::f64::consts::LN_2;
    let bins = sorted.len() as f64;
    let strongest = p[FIRST_BIN..].iter().copied().fold(0.0, f64::max);
    let threshold = (noise_level * (bins / FALSE_ALARM).ln()).max(DYNAMIC_RANGE * strongest);
    if strongest <= 0.0 {
        return Ok(Vec::new());
    }

    let mut peaks = Vec::new();
    for k in FIRST_BIN..top {
        if !(p[k] > p[k - 1] && p[k] >= p[k + 1] && p[k] > threshold) {
            continue;
        }
        let (a, b, c) = (p[k - 1].max(1e-300).ln(), p[k].ln(), p[k + 1].max(1e-300).ln());
        let denom = a - 2.0 * b + c;
        let offset = if denom < 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
        peaks.push(SpectralPeak {
            frequency: pg.frequency(k as f64 + offset),
            power: p[k],
        });
    }
    Ok(peaks)
}

/// Beat period from the lowest-frequency line of the spectrum. A record
/// with fewer than two significant lines carries no beat.
pub fn beat_from_spectrum(record: &ScanRecord) -> Result<SpectralBeat> {
    let peaks = spectral_peaks(record)?;
    if peaks.len() < 2 {
        return Err(Error::NoBeat(format!(
            "{} significant spectral line(s); a beat needs at least two",
            peaks.len()
        )));
    }
    let resolution = periodogram(record)?.resolution;
    let frequency = peaks[0].frequency;
    let lo_f = frequency + 0.5 * resolution;
    let hi_f = frequency - 0.5 * resolution;
    let upper = if hi_f > 0.0 { 1.0 / hi_f } else { f64::INFINITY };
    Ok(SpectralBeat {
        period: 1.0 / frequency,
        interval: (1.0 / lo_f, upper),
        frequency,
        peaks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sampled(dx: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> ScanRecord {
        let x: Vec<f64> = (0..n).map(|k| k as f64 * dx).collect();
        let y = x.iter().map(|&x| f(x)).collect();
        ScanRecord::analytic(x, y).unwrap()
    }

    fn cos2(x: f64, p: f64) -> f64 {
        (PI * x / p).cos().powi(2)
    }

    #[test]
    fn product_signal_beats_at_four_point_eight() {
        // 960 samples at 0.05 mm: bin = 1/48 mm⁻¹ and 1/4.8 is bin 10.
        let rec = sampled(0.05, 960, |x| cos2(x, 1.2) * cos2(x, 1.6));
        let beat = beat_from_spectrum(&rec).unwrap();
        let bin = 1.0 / 48.0;
        assert!((beat.frequency - 1.0 / 4.8).abs() < bin, "{}", beat.frequency);
        assert!(beat.interval.0 < 4.8 && 4.8 < beat.interval.1);
        assert_eq!(beat.peaks.len(), 4);
    }

    #[test]
    fn single_cosine_has_no_beat() {
        let rec = sampled(0.05, 960, |x| 1.0 + (2.0 * PI * x / 1.3).cos());
        assert!(matches!(beat_from_spectrum(&rec), Err(Error::NoBeat(_))));
    }

    #[test]
    fn white_noise_rarely_beats() {
        // Null distribution over 1000 seeds: at most 1% false detections.
        let normal = Normal::<f64>::new(10.0, 1.0).unwrap();
        let detections = (0..1000u64)
            .filter(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let rec = sampled(0.1, 256, |_| normal.sample(&mut rng).max(0.0));
                beat_from_spectrum(&rec).is_ok()
            })
            .count();
        assert!(detections <= 10, "{detections} false detections");
    }

    #[test]
    fn needs_uniform_sampling() {
        let mut x: Vec<f64> = (0..32).map(|k| k as f64).collect();
        x[5] = 5.5;
        let rec = ScanRecord::analytic(x, vec![1.0; 32]).unwrap();
        assert!(periodogram(&rec).is_err());
        let short = sampled(0.1, 10, |x| x);
        assert!(periodogram(&short).is_err());
    }
}
