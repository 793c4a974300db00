//! Advanced-wave reading of the signal–idler arrangement.
//!
//! The idler detector acts as a point source at the front focal plane of L1,
//! so the idler arm is lit by a collimated wave. G1 sits 2f beyond L1; L2
//! relays G1 onto G2 in a 2f–2f configuration and L3 relays the G1·G2 product
//! onto the signal detector the same way. Each relay has |m| = 1.

use super::{ExperimentConfig, SetupKind};
use crate::optics::{intensity_correlation, FieldGrid, SpatialGrid};
use crate::{Error, Result};

/// Lateral magnifications of the two relays in the signal–idler chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlyshkoMap {
    /// G1 plane → G2 plane (L2).
    pub g1_to_g2: f64,
    /// G2 plane → signal detection plane (L3).
    pub g2_to_detector: f64,
}

impl KlyshkoMap {
    /// G1 plane → detection plane.
    pub fn net(&self) -> f64 {
        self.g1_to_g2 * self.g2_to_detector
    }
}

/// Ideal imaging map of the chain.
pub fn klyshko_chain(config: &ExperimentConfig) -> Result<KlyshkoMap> {
    if config.kind != SetupKind::SignalIdler {
        return Err(Error::WrongSetup {
            expected: "signal-idler",
        });
    }
    let m = if config.relay_inverts { -1.0 } else { 1.0 };
    Ok(KlyshkoMap {
        g1_to_g2: m,
        g2_to_detector: m,
    })
}

/// Detection-plane intensity of the chain propagated with Fresnel steps,
/// next to the same chain evaluated with ideal imaging.
#[derive(Debug, Clone)]
pub struct FresnelChainReport {
    pub grid: SpatialGrid,
    pub fresnel_intensity: Vec<f64>,
    pub ideal_intensity: Vec<f64>,
    /// Pearson correlation of the two intensity profiles.
    pub correlation: f64,
    /// `‖I_fresnel − I_ideal‖ / ‖I_ideal‖`.
    pub relative_l2_error: f64,
    /// Largest relative energy change over any single propagation step.
    pub max_energy_drift: f64,
}

/// Runs the signal–idler chain in Fresnel mode at the signal wavelength.
///
/// The window uses `config.grid.n_points()` samples at pitch
/// `√(2λf / n)`, which makes every 2f leg land exactly on the propagator's
/// sampling limit and the lens chirp periodic on the window, so each 2f–2f
/// relay is an exact discrete inversion. The source leg (point source at
/// the focal plane of L1) is represented by its collimated output.
pub fn klyshko_fresnel(config: &ExperimentConfig) -> Result<FresnelChainReport> {
    klyshko_chain(config)?;
    config.validate()?;
    if !config.relay_inverts {
        return Err(Error::invalid(
            "relay sign",
            "Fresnel mode realises physical 2f–2f relays, which always invert",
        ));
    }
    let n = config.grid.n_points();
    if n % 2 != 0 {
        return Err(Error::invalid("grid", "Fresnel mode needs an even number of samples"));
    }
    let f = config.focal_length.abs();
    let lambda = config.wavelengths.signal_nm;
    let pitch = (2.0 * lambda * 1e-6 * f / n as f64).sqrt();
    let grid = SpatialGrid::centered(n, pitch)?;
    for period in [config.grating_1.period(), config.grating_2.period()].into_iter().flatten() {
        if period < 8.0 * pitch {
            return Err(Error::Sampling(format!(
                "grating period {period} mm is under 8 samples at the Fresnel pitch {pitch} mm"
            )));
        }
    }

    let mut drift: f64 = 0.0;
    let mut track = |before: &FieldGrid, after: FieldGrid| -> FieldGrid {
        drift = drift.max((after.energy() / before.energy() - 1.0).abs());
        after
    };
    let relay = |u: FieldGrid, track: &mut dyn FnMut(&FieldGrid, FieldGrid) -> FieldGrid| -> Result<FieldGrid> {
        let a = u.fresnel_propagate(2.0 * f)?;
        let a = track(&u, a);
        let b = a.thin_lens(f)?;
        let b = track(&a, b);
        let c = b.fresnel_propagate(2.0 * f)?;
        Ok(track(&b, c))
    };

    let collimated = FieldGrid::plane_wave(grid, lambda)?;
    let at_g1 = collimated.fresnel_propagate(2.0 * f)?;
    let at_g1 = track(&collimated, at_g1);
    let at_g2 = relay(at_g1.apply_mask(&config.grating_1), &mut track)?;
    let detected = relay(at_g2.apply_mask(&config.grating_2), &mut track)?;

    let ideal = FieldGrid::plane_wave(grid, lambda)?
        .apply_mask(&config.grating_1)
        .ideal_image(-1.0)?
        .resample_onto(grid)?
        .apply_mask(&config.grating_2)
        .ideal_image(-1.0)?
        .resample_onto(grid)?;

    let fresnel_intensity = detected.intensity();
    let ideal_intensity = ideal.intensity();
    let num: f64 = fresnel_intensity
        .iter()
        .zip(&ideal_intensity)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let den: f64 = ideal_intensity.iter().map(|b| b * b).sum();
    Ok(FresnelChainReport {
        grid,
        correlation: intensity_correlation(&fresnel_intensity, &ideal_intensity),
        relative_l2_error: (num / den).sqrt(),
        fresnel_intensity,
        ideal_intensity,
        max_energy_drift: drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::TransmissionMask;

    #[test]
    fn ideal_map_preserves_size() {
        let c = ExperimentConfig::new(SetupKind::SignalIdler, TransmissionMask::open(), TransmissionMask::open());
        let map = klyshko_chain(&c).unwrap();
        assert_eq!(map.g1_to_g2.abs(), 1.0);
        assert_eq!(map.g2_to_detector.abs(), 1.0);
        assert_eq!(map.net(), 1.0);
        let mut upright = c.clone();
        upright.relay_inverts = false;
        assert_eq!(klyshko_chain(&upright).unwrap().g1_to_g2, 1.0);
    }

    #[test]
    fn chain_requires_signal_idler() {
        let c = ExperimentConfig::new(SetupKind::PumpIdler, TransmissionMask::open(), TransmissionMask::open());
        assert!(matches!(klyshko_chain(&c), Err(Error::WrongSetup { .. })));
        assert!(klyshko_fresnel(&c).is_err());
    }

    #[test]
    fn fresnel_chain_images_g1_like_ideal_relay() {
        let g1 = TransmissionMask::cosine(0.8).unwrap();
        let c = ExperimentConfig::new(SetupKind::SignalIdler, g1, TransmissionMask::open());
        let report = klyshko_fresnel(&c).unwrap();
        assert!(report.correlation > 0.999, "correlation {}", report.correlation);
        assert!(report.relative_l2_error < 1e-3);
        assert!(report.max_energy_drift < 1e-10);
    }

    #[test]
    fn open_g1_leaves_the_imaged_g2() {
        let g2 = TransmissionMask::cosine(1.2).unwrap().shifted(0.3);
        let c = ExperimentConfig::new(SetupKind::SignalIdler, TransmissionMask::open(), g2);
        let report = klyshko_fresnel(&c).unwrap();
        // Sample 0 sits on the window edge, which maps onto itself under the
        // periodic inversion.
        for (k, x) in report.grid.coordinates().enumerate().skip(1) {
            let want = g2.transmission(-x);
            assert!((report.ideal_intensity[k] - want).abs() < 1e-12);
            assert!((report.fresnel_intensity[k] - want).abs() < 1e-6);
        }
    }
}
