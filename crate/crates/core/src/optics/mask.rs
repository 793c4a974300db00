use std::f64::consts::PI;

use crate::{Error, Result};

/// Shape of one grating period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `cos²(π(x − φ)/p)`, the smooth profile used by the fit models.
    CosineSquared,
    /// Ronchi-style slot of width `duty_cycle * period`, centred on the phase
    /// offset.
    Binary { duty_cycle: f64 },
}

/// 1-D intensity transmission of a grating or of an open aperture.
///
/// For a grating, `T(x) = 1 − c + c·S((x − φ)/p)` where `S` is the unit
/// profile (peak value 1 at `x = φ`) and `c` the contrast. The open mask is
/// `T ≡ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionMask {
    period: Option<f64>,
    phase_offset: f64,
    profile: Profile,
    contrast: f64,
}

/// Builds a grating mask, validating its parameters.
pub fn make_grating(
    period: f64,
    phase_offset: f64,
    profile: Profile,
    contrast: f64,
) -> Result<TransmissionMask> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::invalid("grating period", format!("must be positive, got {period}")));
    }
    if !phase_offset.is_finite() {
        return Err(Error::invalid("grating phase", "must be finite"));
    }
    if !(0.0..=1.0).contains(&contrast) {
        return Err(Error::invalid("grating contrast", format!("must lie in [0, 1], got {contrast}")));
    }
    if let Profile::Binary { duty_cycle } = profile {
        if !(duty_cycle > 0.0 && duty_cycle < 1.0) {
            return Err(Error::invalid("duty cycle", format!("must lie in (0, 1), got {duty_cycle}")));
        }
    }
    Ok(TransmissionMask {
        period: Some(period),
        phase_offset,
        profile,
        contrast,
    })
}

impl TransmissionMask {
    pub fn open() -> Self {
        TransmissionMask {
            period: None,
            phase_offset: 0.0,
            profile: Profile::CosineSquared,
            contrast: 0.0,
        }
    }

    /// Full-contrast cos² grating with zero phase.
    pub fn cosine(period: f64) -> Result<Self> {
        make_grating(period, 0.0, Profile::CosineSquared, 1.0)
    }

    pub fn binary(period: f64, duty_cycle: f64) -> Result<Self> {
        make_grating(period, 0.0, Profile::Binary { duty_cycle }, 1.0)
    }

    pub fn is_open(&self) -> bool {
        self.period.is_none()
    }

    /// `None` for the open mask.
    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn phase_offset(&self) -> f64 {
        self.phase_offset
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn contrast(&self) -> f64 {
        self.contrast
    }

    /// Intensity transmission at `x`, always in `[0, 1]`.
    pub fn transmission(&self, x: f64) -> f64 {
        let Some(period) = self.period else {
            return 1.0;
        };
        let u = ((x - self.phase_offset) / period).rem_euclid(1.0);
        let unit = match self.profile {
            Profile::CosineSquared => {
                let c = (PI * u).cos();
                c * c
            }
            Profile::Binary { duty_cycle } => {
                if u.min(1.0 - u) <= 0.5 * duty_cycle {
                    1.0
                } else {
                    0.0
                }
            }
        };
        (1.0 - self.contrast + self.contrast * unit).clamp(0.0, 1.0)
    }

    /// Field amplitude transmission `√T(x)` for coherent propagation.
    pub fn amplitude(&self, x: f64) -> f64 {
        self.transmission(x).sqrt()
    }

    /// Mask translated by `delta`: `shifted.T(x) = self.T(x − delta)`.
    pub fn shifted(&self, delta: f64) -> Self {
        TransmissionMask {
            phase_offset: self.phase_offset + delta,
            ..*self
        }
    }

    /// Mask imaged with lateral magnification `m`: `scaled.T(x) = self.T(x / m)`.
    ///
    /// Both profiles are even about their phase offset, so a negative `m`
    /// only reflects the phase.
    pub fn scaled(&self, magnification: f64) -> Result<Self> {
        if magnification == 0.0 || !magnification.is_finite() {
            return Err(Error::invalid(
                "magnification",
                format!("must be finite and non-zero, got {magnification}"),
            ));
        }
        if self.is_open() {
            return Ok(*self);
        }
        Ok(TransmissionMask {
            period: self.period.map(|p| p * magnification.abs()),
            phase_offset: self.phase_offset * magnification,
            ..*self
        })
    }

    /// Jump locations of a binary grating strictly inside `(lo, hi)`, sorted.
    /// Smooth and open masks have none.
    pub fn discontinuities(&self, lo: f64, hi: f64) -> Vec<f64> {
        let (Some(period), Profile::Binary { duty_cycle }) = (self.period, self.profile) else {
            return Vec::new();
        };
        if self.contrast == 0.0 || !(hi > lo) {
            return Vec::new();
        }
        let half = 0.5 * duty_cycle * period;
        let first = ((lo - self.phase_offset - half) / period).floor() as i64 - 1;
        let last = ((hi - self.phase_offset + half) / period).ceil() as i64 + 1;
        let mut edges = Vec::new();
        for j in first..=last {
            let centre = self.phase_offset + j as f64 * period;
            for edge in [centre - half, centre + half] {
                if edge > lo && edge < hi {
                    edges.push(edge);
                }
            }
        }
        edges.sort_by(f64::total_cmp);
        edges
    }
}

impl Default for TransmissionMask {
    fn default() -> Self {
        TransmissionMask::open()
    }
}

/// Circular pinhole seen along one transverse axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aperture {
    diameter: f64,
    center: f64,
}

impl Aperture {
    pub fn new(diameter: f64, center: f64) -> Result<Self> {
        if !(diameter > 0.0 && diameter.is_finite()) {
            return Err(Error::invalid("aperture diameter", format!("must be positive, got {diameter}")));
        }
        if !center.is_finite() {
            return Err(Error::invalid("aperture center", "must be finite"));
        }
        Ok(Aperture { diameter, center })
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() <= 0.5 * self.diameter
    }

    pub fn interval(&self) -> (f64, f64) {
        let r = 0.5 * self.diameter;
        (self.center - r, self.center + r)
    }
}
