use rayon::prelude::*;

use super::{klyshko_chain, ExperimentConfig, ScanSchedule, SetupKind};
use crate::analysis::{RecordKind, ScanRecord};
use crate::optics::TransmissionMask;
use crate::quadrature;
use crate::{Error, Result};

/// Minimum grid samples per finest grating period.
const MIN_SAMPLES_PER_PERIOD: f64 = 8.0;

/// The pump grating as seen by the signal–idler correlations: G1 scaled by
/// the transfer factor σ.
pub fn effective_mask_setup1(config: &ExperimentConfig) -> Result<TransmissionMask> {
    if config.kind != SetupKind::PumpIdler {
        return Err(Error::WrongSetup {
            expected: "pump-idler",
        });
    }
    config.validate()?;
    config.grating_1.scaled(config.transfer_scale)
}

/// A configuration reduced to the product law
/// `C(δ1, δ2) = ⟨T1_eff(x − g·δ1) · T2(x − δ2)⟩` averaged over the
/// detection window, where `g` maps a physical G1 displacement into the
/// plane of G2.
#[derive(Debug, Clone)]
pub struct CoincidenceModel {
    config: ExperimentConfig,
    effective_g1: TransmissionMask,
    g1_gain: f64,
    window: (f64, f64),
}

impl CoincidenceModel {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (effective_g1, g1_gain, aperture_center, region_center) = match config.kind {
            SetupKind::PumpIdler => (
                effective_mask_setup1(config)?,
                config.transfer_scale,
                config.pinhole_idler.center(),
                config.pinhole_signal.center(),
            ),
            SetupKind::SignalIdler => {
                let map = klyshko_chain(config)?;
                (
                    config.grating_1.scaled(map.g1_to_g2)?,
                    map.g1_to_g2,
                    // Signal pinhole sits behind L3; map it back into G2's plane.
                    config.pinhole_signal.center() / map.g2_to_detector,
                    config.pinhole_idler.center(),
                )
            }
        };
        let detecting = match config.kind {
            SetupKind::PumpIdler => config.pinhole_idler,
            SetupKind::SignalIdler => config.pinhole_signal,
        };
        let r = 0.5 * detecting.diameter();
        let hw = config.coincidence_halfwidth;
        let lo = (aperture_center - r).max(region_center - hw);
        let hi = (aperture_center + r).min(region_center + hw);
        if !(hi > lo) {
            return Err(Error::invalid(
                "detection window",
                "pinhole and coincidence region do not overlap",
            ));
        }
        let (first, last) = config.grid.span();
        if lo < first || hi > last {
            return Err(Error::invalid(
                "detection window",
                format!("[{lo}, {hi}] mm lies outside the grid span [{first}, {last}] mm"),
            ));
        }
        let finest = [effective_g1.period(), config.grating_2.period()]
            .into_iter()
            .flatten()
            .fold(f64::INFINITY, f64::min);
        let pitch = config.grid.pitch();
        if finest < MIN_SAMPLES_PER_PERIOD * pitch {
            return Err(Error::Sampling(format!(
                "finest effective period {finest} mm has fewer than {MIN_SAMPLES_PER_PERIOD} samples at pitch {pitch} mm"
            )));
        }
        Ok(CoincidenceModel {
            config: config.clone(),
            effective_g1,
            g1_gain,
            window: (lo, hi),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// G1 as imaged into the plane of G2, before any scan displacement.
    pub fn effective_g1(&self) -> &TransmissionMask {
        &self.effective_g1
    }

    /// Factor mapping a physical G1 displacement into the plane of G2.
    pub fn g1_gain(&self) -> f64 {
        self.g1_gain
    }

    /// Pinhole ∩ coincidence region, in G2-plane coordinates.
    pub fn detection_window(&self) -> (f64, f64) {
        self.window
    }

    /// Both patterns in G2's plane at displacements (δ1, δ2).
    pub fn masks_at(&self, delta_g1: f64, delta_g2: f64) -> (TransmissionMask, TransmissionMask) {
        (
            self.effective_g1.shifted(self.g1_gain * delta_g1),
            self.config.grating_2.shifted(delta_g2),
        )
    }

    /// Normalised coincidence rate; two open masks give exactly 1.
    pub fn rate(&self, delta_g1: f64, delta_g2: f64) -> f64 {
        let (t1, t2) = self.masks_at(delta_g1, delta_g2);
        let (lo, hi) = self.window;
        let mut breaks = t1.discontinuities(lo, hi);
        breaks.extend(t2.discontinuities(lo, hi));
        let edges = quadrature::panels(&self.config.grid, lo, hi, &breaks);
        let integral = quadrature::integrate(&edges, |x| t1.transmission(x) * t2.transmission(x));
        let norm = quadrature::integrate(&edges, |_| 1.0);
        (integral / norm).clamp(0.0, 1.0)
    }
}

/// Coincidence rate at grating displacements (δ1, δ2).
pub fn coincidence_rate(config: &ExperimentConfig, delta_g1: f64, delta_g2: f64) -> Result<f64> {
    Ok(CoincidenceModel::new(config)?.rate(delta_g1, delta_g2))
}

/// Evaluates the rate at every step of `schedule`. Steps are independent and
/// evaluated in parallel; the result does not depend on evaluation order.
pub fn run_scan(config: &ExperimentConfig, schedule: &ScanSchedule) -> Result<ScanRecord> {
    schedule.validate()?;
    let model = CoincidenceModel::new(config)?;
    let positions: Vec<f64> = (0..schedule.n_steps).map(|k| schedule.position(k)).collect();
    let values: Vec<f64> = (0..schedule.n_steps)
        .into_par_iter()
        .map(|k| {
            let (d1, d2) = schedule.displacements(k);
            model.rate(d1, d2)
        })
        .collect();
    ScanRecord::new(positions, values.clone(), values, RecordKind::AnalyticRate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::Aperture;

    fn cfg(kind: SetupKind, g1: TransmissionMask, g2: TransmissionMask) -> ExperimentConfig {
        ExperimentConfig::new(kind, g1, g2)
    }

    /// Independent oracle: trapezoid rule at a tenth of the grid pitch, with
    /// one Richardson step (halving) to cancel the O(h²) term.
    fn trapezoid_oracle(f: impl Fn(f64) -> f64, lo: f64, hi: f64, pitch: f64) -> f64 {
        let trap = |n: usize| {
            let h = (hi - lo) / n as f64;
            let inner: f64 = (1..n).map(|k| f(lo + k as f64 * h)).sum();
            h * (0.5 * (f(lo) + f(hi)) + inner)
        };
        let n = ((hi - lo) / (pitch / 10.0)).ceil() as usize;
        (4.0 * trap(2 * n) - trap(n)) / 3.0
    }

    #[test]
    fn open_masks_normalise_to_one() {
        let c = cfg(SetupKind::PumpIdler, TransmissionMask::open(), TransmissionMask::open());
        assert_eq!(coincidence_rate(&c, 0.3, -1.1).unwrap(), 1.0);
        let c = cfg(SetupKind::SignalIdler, TransmissionMask::open(), TransmissionMask::open());
        assert_eq!(coincidence_rate(&c, 0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn effective_pump_grating_periods() {
        let c = cfg(SetupKind::PumpIdler, TransmissionMask::cosine(0.8).unwrap(), TransmissionMask::open());
        assert!((effective_mask_setup1(&c).unwrap().period().unwrap() - 1.6).abs() < 1e-15);
        let c = cfg(SetupKind::PumpIdler, TransmissionMask::cosine(0.4).unwrap(), TransmissionMask::open());
        assert!((effective_mask_setup1(&c).unwrap().period().unwrap() - 0.8).abs() < 1e-15);
        let mut c = c;
        c.transfer_scale = 1.0;
        assert_eq!(effective_mask_setup1(&c).unwrap(), c.grating_1);
        c.kind = SetupKind::SignalIdler;
        assert!(matches!(effective_mask_setup1(&c), Err(Error::WrongSetup { .. })));
    }

    #[test]
    fn complementary_binary_gratings() {
        // Identical Ronchi gratings seen through a point-like pinhole on an
        // open slot: aligned → 1, G2 shifted by half a period → 0.
        let g = TransmissionMask::binary(1.0, 0.5).unwrap();
        let mut c = cfg(SetupKind::PumpIdler, g, g);
        c.transfer_scale = 1.0;
        c.pinhole_idler = Aperture::new(1e-4, 0.0).unwrap();
        assert_eq!(coincidence_rate(&c, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(coincidence_rate(&c, 0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn binary_overlap_is_piecewise_exact() {
        // Two duty-0.5 gratings offset by a quarter period overlap on a
        // quarter of each period; a 2 mm window holds two whole periods.
        let g = TransmissionMask::binary(1.0, 0.5).unwrap();
        let mut c = cfg(SetupKind::PumpIdler, g, g);
        c.transfer_scale = 1.0;
        c.pinhole_idler = Aperture::new(2.0, 0.0).unwrap();
        let r = coincidence_rate(&c, 0.0, 0.25).unwrap();
        assert!((r - 0.25).abs() < 1e-13, "{r}");
    }

    #[test]
    fn cosine_rate_matches_fine_quadrature() {
        let g1 = TransmissionMask::cosine(1.6).unwrap();
        let g2 = TransmissionMask::cosine(1.2).unwrap();
        let mut c = cfg(SetupKind::PumpIdler, g1, g2);
        c.transfer_scale = 1.0;
        let rate = coincidence_rate(&c, 0.0, 0.0).unwrap();
        let oracle = trapezoid_oracle(|x| g1.transmission(x) * g2.transmission(x), -0.25, 0.25, c.grid.pitch()) / 0.5;
        assert!(((rate - oracle) / oracle).abs() < 1e-6, "{rate} vs {oracle}");
    }

    #[test]
    fn coarse_grid_is_a_sampling_error() {
        let mut c = cfg(SetupKind::PumpIdler, TransmissionMask::cosine(0.05).unwrap(), TransmissionMask::open());
        c.transfer_scale = 1.0;
        assert!(matches!(coincidence_rate(&c, 0.0, 0.0), Err(Error::Sampling(_))));
    }

    #[test]
    fn window_outside_grid_is_rejected() {
        let mut c = cfg(SetupKind::PumpIdler, TransmissionMask::open(), TransmissionMask::open());
        c.pinhole_idler = Aperture::new(0.5, 100.0).unwrap();
        c.pinhole_signal = Aperture::new(0.5, 100.0).unwrap();
        assert!(coincidence_rate(&c, 0.0, 0.0).is_err());
        let mut c = cfg(SetupKind::PumpIdler, TransmissionMask::open(), TransmissionMask::open());
        c.pinhole_idler = Aperture::new(0.5, 5.0).unwrap();
        assert!(coincidence_rate(&c, 0.0, 0.0).is_err(), "pinhole outside the coincidence region");
    }

    #[test]
    fn single_open_step() {
        let c = cfg(SetupKind::PumpIdler, TransmissionMask::open(), TransmissionMask::open());
        let rec = run_scan(&c, &ScanSchedule::new(1, 0.1, 0.2)).unwrap();
        assert_eq!(rec.values(), &[1.0]);
        assert_eq!(rec.positions(), &[0.0]);
    }

    #[test]
    fn scan_is_translation_covariant() {
        // Shifting both starts by j steps shifts the trace by j samples; the
        // 4.8 mm common period is 24 steps of 0.2 mm.
        let c = cfg(SetupKind::PumpIdler, TransmissionMask::cosine(0.8).unwrap(), TransmissionMask::cosine(1.2).unwrap());
        let base = ScanSchedule::new(48, 0.1, 0.2);
        let trace = run_scan(&c, &base).unwrap();
        for j in [1usize, 7, 24] {
            let shifted = ScanSchedule {
                start_g1: j as f64 * 0.1,
                start_g2: j as f64 * 0.2,
                ..base
            };
            let t2 = run_scan(&c, &shifted).unwrap();
            for k in 0..48 {
                let a = t2.values()[k];
                let b = trace.values()[(k + j) % 24];
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12), "j={j} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rates_stay_normalised() {
        let c = cfg(SetupKind::SignalIdler, TransmissionMask::cosine(0.8).unwrap(), TransmissionMask::binary(0.9, 0.3).unwrap());
        let rec = run_scan(&c, &ScanSchedule::new(100, -0.05, 0.1)).unwrap();
        assert!(rec.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(rec.values().iter().all(|&v| v < 1.0));
    }
}
