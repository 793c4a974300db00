use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{SpatialGrid, TransmissionMask};
use crate::{Error, Result};

const NM_TO_MM: f64 = 1e-6;

/// Sampled monochromatic scalar field on a 1-D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    grid: SpatialGrid,
    amplitudes: Vec<Complex64>,
    wavelength_nm: f64,
}

impl FieldGrid {
    pub fn new(grid: SpatialGrid, amplitudes: Vec<Complex64>, wavelength_nm: f64) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::invalid(
                "field",
                format!("{} amplitudes for a {}-point grid", amplitudes.len(), grid.n_points()),
            ));
        }
        if !(wavelength_nm > 0.0 && wavelength_nm.is_finite()) {
            return Err(Error::invalid("wavelength", format!("must be positive, got {wavelength_nm}")));
        }
        if amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::invalid("field", "amplitudes must be finite"));
        }
        Ok(FieldGrid {
            grid,
            amplitudes,
            wavelength_nm,
        })
    }

    /// Samples `f` at every grid coordinate.
    pub fn from_fn(grid: SpatialGrid, wavelength_nm: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amplitudes = grid.coordinates().map(f).collect();
        Self::new(grid, amplitudes, wavelength_nm)
    }

    pub fn plane_wave(grid: SpatialGrid, wavelength_nm: f64) -> Result<Self> {
        Self::from_fn(grid, wavelength_nm, |_| Complex64::new(1.0, 0.0))
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_nm
    }

    fn wavelength_mm(&self) -> f64 {
        self.wavelength_nm * NM_TO_MM
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `Σ |u|² · pitch`.
    pub fn energy(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.pitch()
    }

    /// Multiplies by the amplitude transmission `√T` of `mask`.
    pub fn apply_mask(&self, mask: &TransmissionMask) -> Self {
        let amplitudes = self
            .grid
            .coordinates()
            .zip(&self.amplitudes)
            .map(|(x, a)| a * mask.amplitude(x))
            .collect();
        FieldGrid {
            amplitudes,
            ..self.clone()
        }
    }

    /// Geometric image with lateral magnification `m`:
    /// `u'(x) = u(x / m) / √|m|`, sampled on a grid of pitch `|m|·pitch`.
    ///
    /// Samples map one-to-one, so no interpolation is involved. For `m < 0`
    /// the sample order is reversed to keep the output grid increasing.
    pub fn ideal_image(&self, magnification: f64) -> Result<Self> {
        if magnification == 0.0 || !magnification.is_finite() {
            return Err(Error::invalid(
                "magnification",
                format!("must be finite and non-zero, got {magnification}"),
            ));
        }
        let m_abs = magnification.abs();
        let gain = 1.0 / m_abs.sqrt();
        let (first, last) = self.grid.span();
        let origin = if magnification > 0.0 {
            magnification * first
        } else {
            magnification * last
        };
        let grid = SpatialGrid::new(self.grid.n_points(), self.grid.pitch() * m_abs, origin)?;
        let mut amplitudes: Vec<Complex64> = self.amplitudes.iter().map(|a| a * gain).collect();
        if magnification < 0.0 {
            amplitudes.reverse();
        }
        Ok(FieldGrid {
            grid,
            amplitudes,
            wavelength_nm: self.wavelength_nm,
        })
    }

    /// Largest distance the spectral Fresnel propagator accepts on this
    /// grid: `n · pitch² / λ`. Beyond it the transfer-function chirp aliases.
    pub fn max_fresnel_distance(&self) -> f64 {
        self.grid.n_points() as f64 * self.grid.pitch().powi(2) / self.wavelength_mm()
    }

    /// Paraxial free-space propagation over `distance` (may be negative)
    /// with the transfer function `exp(−iπλz·f²)` on the periodic window.
    pub fn fresnel_propagate(&self, distance: f64) -> Result<Self> {
        if !distance.is_finite() {
            return Err(Error::invalid("distance", "must be finite"));
        }
        if distance == 0.0 {
            return Ok(self.clone());
        }
        let limit = self.max_fresnel_distance();
        if distance.abs() > limit * (1.0 + 1e-12) {
            return Err(Error::Sampling(format!(
                "Fresnel step of {distance} mm exceeds n·pitch²/λ = {limit} mm; \
                 widen the window or coarsen the pitch"
            )));
        }
        let n = self.grid.n_points();
        let window = self.grid.window();
        let lambda_z = self.wavelength_mm() * distance;

        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        let mut buf = self.amplitudes.clone();
        forward.process(&mut buf);
        for (k, a) in buf.iter_mut().enumerate() {
            let m = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
            let f = m / window;
            *a *= Complex64::from_polar(1.0, -PI * lambda_z * f * f);
        }
        inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter_mut().for_each(|a| *a *= scale);

        FieldGrid::new(self.grid, buf, self.wavelength_nm)
    }

    /// Thin lens of focal length `f`: multiplies by `exp(−iπx²/(λf))`.
    /// An infinite focal length is the identity.
    pub fn thin_lens(&self, focal_length: f64) -> Result<Self> {
        if focal_length == 0.0 || focal_length.is_nan() {
            return Err(Error::invalid("focal length", "must be non-zero"));
        }
        if focal_length.is_infinite() {
            return Ok(self.clone());
        }
        let k = PI / (self.wavelength_mm() * focal_length);
        let amplitudes = self
            .grid
            .coordinates()
            .zip(&self.amplitudes)
            .map(|(x, a)| a * Complex64::from_polar(1.0, -k * x * x))
            .collect();
        Ok(FieldGrid {
            amplitudes,
            ..self.clone()
        })
    }

    /// Linear interpolation onto `target`, treating this field as periodic
    /// over its window. Samples that coincide with source samples (within
    /// 1e-9 of a pitch) are copied exactly.
    pub fn resample_onto(&self, target: SpatialGrid) -> Result<Self> {
        let n = self.grid.n_points();
        let pitch = self.grid.pitch();
        let origin = self.grid.origin();
        let amplitudes = target
            .coordinates()
            .map(|x| {
                let pos = (x - origin) / pitch;
                let nearest = pos.round();
                let (base, frac) = if (pos - nearest).abs() < 1e-9 {
                    (nearest, 0.0)
                } else {
                    (pos.floor(), pos - pos.floor())
                };
                let i0 = (base as i64).rem_euclid(n as i64) as usize;
                let i1 = (i0 + 1) % n;
                if frac == 0.0 {
                    self.amplitudes[i0]
                } else {
                    self.amplitudes[i0] * (1.0 - frac) + self.amplitudes[i1] * frac
                }
            })
            .collect();
        FieldGrid::new(target, amplitudes, self.wavelength_nm)
    }
}

/// Pearson correlation of two equally long intensity profiles.
pub fn intensity_correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "profiles must have equal length");
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        // Flat profiles: perfectly alike if both are flat at the same level.
        let same = saa == sbb && (ma - mb).abs() <= 1e-12 * ma.abs().max(mb.abs());
        return if same { 1.0 } else { 0.0 };
    }
    sab / (saa * sbb).sqrt()
}
