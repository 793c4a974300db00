use crate::{Error, Result};

/// Uniform 1-D sampling of the transverse coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    n_points: usize,
    pitch: f64,
    origin: f64,
}

impl SpatialGrid {
    pub fn new(n_points: usize, pitch: f64, origin: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::invalid("grid", format!("need at least 2 points, got {n_points}")));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::invalid("grid pitch", format!("must be positive, got {pitch}")));
        }
        if !origin.is_finite() {
            return Err(Error::invalid("grid origin", "must be finite"));
        }
        Ok(SpatialGrid {
            n_points,
            pitch,
            origin,
        })
    }

    /// Grid with x = 0 on sample `n_points / 2`.
    pub fn centered(n_points: usize, pitch: f64) -> Result<Self> {
        Self::new(n_points, pitch, -((n_points / 2) as f64) * pitch)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn coordinate(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.pitch
    }

    /// First and last sample coordinates.
    pub fn span(&self) -> (f64, f64) {
        (self.origin, self.coordinate(self.n_points - 1))
    }

    /// Length of the periodic window, `n_points * pitch`.
    pub fn window(&self) -> f64 {
        self.n_points as f64 * self.pitch
    }

    pub fn coordinates(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.coordinate(k))
    }
}

impl Default for SpatialGrid {
    /// 4096 samples at 0.01 mm, centred on the optical axis.
    fn default() -> Self {
        SpatialGrid::centered(4096, 0.01).expect("default grid is valid")
    }
}
