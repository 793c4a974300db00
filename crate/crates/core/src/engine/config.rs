use std::fmt;

use crate::optics::{Aperture, SpatialGrid, TransmissionMask};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetupKind {
    /// G1 in the pump beam, G2 in front of the idler detector.
    PumpIdler,
    /// G1 and G2 in the idler and signal arms, relayed by identical lenses.
    SignalIdler,
}

impl fmt::Display for SetupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetupKind::PumpIdler => "pump-idler",
            SetupKind::SignalIdler => "signal-idler",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavelengths {
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub idler_nm: f64,
}

impl Default for Wavelengths {
    fn default() -> Self {
        Wavelengths {
            pump_nm: 425.0,
            signal_nm: 890.0,
            idler_nm: 810.0,
        }
    }
}

impl Wavelengths {
    /// Relative violation of `1/λp = 1/λs + 1/λi`.
    pub fn energy_mismatch(&self) -> f64 {
        let pump = 1.0 / self.pump_nm;
        ((1.0 / self.signal_nm + 1.0 / self.idler_nm) - pump).abs() / pump
    }
}

/// Geometry, optics and gratings of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: SetupKind,
    pub grating_1: TransmissionMask,
    pub grating_2: TransmissionMask,
    /// Pump-to-correlation image-transfer scale (pump–idler setup only).
    pub transfer_scale: f64,
    pub pinhole_signal: Aperture,
    pub pinhole_idler: Aperture,
    pub wavelengths: Wavelengths,
    /// Focal length of the identical relay lenses, mm.
    pub focal_length: f64,
    /// Half-width of the top-hat coincidence region, mm.
    pub coincidence_halfwidth: f64,
    pub grid: SpatialGrid,
    /// Each single-lens 2f–2f relay inverts (m = −1); `false` forces m = +1.
    pub relay_inverts: bool,
}

impl ExperimentConfig {
    /// Configuration with documented defaults: σ = 2, 0.5 mm pinholes on
    /// axis, 425/890/810 nm, f = 250 mm, 1 mm region half-width, and the
    /// default 4096 × 0.01 mm grid.
    pub fn new(kind: SetupKind, grating_1: TransmissionMask, grating_2: TransmissionMask) -> Self {
        let pinhole = Aperture::new(0.5, 0.0).expect("default pinhole is valid");
        ExperimentConfig {
            kind,
            grating_1,
            grating_2,
            transfer_scale: 2.0,
            pinhole_signal: pinhole,
            pinhole_idler: pinhole,
            wavelengths: Wavelengths::default(),
            focal_length: 250.0,
            coincidence_halfwidth: 1.0,
            grid: SpatialGrid::default(),
            relay_inverts: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.transfer_scale > 0.0 && self.transfer_scale.is_finite()) {
            return Err(Error::invalid("transfer scale", format!("must be positive, got {}", self.transfer_scale)));
        }
        let w = &self.wavelengths;
        for (name, v) in [("pump wavelength", w.pump_nm), ("signal wavelength", w.signal_nm), ("idler wavelength", w.idler_nm)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.focal_length != 0.0 && self.focal_length.is_finite()) {
            return Err(Error::invalid("focal length", "must be finite and non-zero"));
        }
        if !(self.coincidence_halfwidth > 0.0 && self.coincidence_halfwidth.is_finite()) {
            return Err(Error::invalid("coincidence region", "half-width must be positive"));
        }
        Ok(())
    }

    /// Non-fatal inconsistencies, e.g. wavelengths off energy conservation.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mismatch = self.wavelengths.energy_mismatch();
        if mismatch > 0.01 {
            out.push(format!(
                "wavelengths violate 1/λp = 1/λs + 1/λi by {:.2}%",
                100.0 * mismatch
            ));
        }
        out
    }
}

/// Simultaneous displacement of both gratings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSchedule {
    pub n_steps: usize,
    pub step_g1: f64,
    pub step_g2: f64,
    pub start_g1: f64,
    pub start_g2: f64,
}

impl ScanSchedule {
    pub fn new(n_steps: usize, step_g1: f64, step_g2: f64) -> Self {
        ScanSchedule {
            n_steps,
            step_g1,
            step_g2,
            start_g1: 0.0,
            start_g2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::invalid("scan", "needs at least one step"));
        }
        for v in [self.step_g1, self.step_g2, self.start_g1, self.start_g2] {
            if !v.is_finite() {
                return Err(Error::invalid("scan", "steps and starts must be finite"));
            }
        }
        if self.n_steps > 1 && self.step_g2 <= 0.0 {
            return Err(Error::invalid(
                "scan",
                "G2 step is the scan abscissa and must be positive",
            ));
        }
        Ok(())
    }

    /// Physical displacements (G1, G2) at step `k`.
    pub fn displacements(&self, k: usize) -> (f64, f64) {
        (
            self.start_g1 + k as f64 * self.step_g1,
            self.start_g2 + k as f64 * self.step_g2,
        )
    }

    /// Scan abscissa at step `k`: the G2 displacement.
    pub fn position(&self, k: usize) -> f64 {
        self.displacements(k).1
    }
}
