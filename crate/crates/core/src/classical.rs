//! Classical moiré: 2-D superposition images, scan lines through them, and a
//! direct quadrature of the aperture-averaged grating product.
//!
//! [`aperture_convolved_product`] is written without reference to the
//! coincidence engine (its own window geometry and a composite Simpson rule
//! on a 10× oversampled grid), so it can serve as an oracle for it.

use rayon::prelude::*;

use crate::analysis::ScanRecord;
use crate::engine::{ExperimentConfig, ScanSchedule, SetupKind};
use crate::optics::TransmissionMask;
use crate::{Error, Result};

/// Minimum pixels per finest grating period when rendering.
const MIN_PIXELS_PER_PERIOD: f64 = 4.0;
/// Oracle subintervals per grid pitch.
const OVERSAMPLING: usize = 10;

/// Pixel lattice of an image, mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2d {
    pub width: usize,
    pub height: usize,
    pub pitch: f64,
    /// Coordinates of pixel (0, 0).
    pub origin: (f64, f64),
}

impl Grid2d {
    /// Lattice centred on (0, 0).
    pub fn centered(width: usize, height: usize, pitch: f64) -> Result<Self> {
        let grid = Grid2d {
            width,
            height,
            pitch,
            origin: (
                -0.5 * (width as f64 - 1.0) * pitch,
                -0.5 * (height as f64 - 1.0) * pitch,
            ),
        };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("image size", "width and height must be positive"));
        }
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(Error::invalid("image pitch", format!("must be positive, got {}", self.pitch)));
        }
        if !(self.origin.0.is_finite() && self.origin.1.is_finite()) {
            return Err(Error::invalid("image origin", "must be finite"));
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin.0 + i as f64 * self.pitch
    }

    pub fn y(&self, j: usize) -> f64 {
        self.origin.1 + j as f64 * self.pitch
    }
}

/// Row-major intensity image with pixels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct PatternImage {
    grid: Grid2d,
    pixels: Vec<f64>,
}

impl PatternImage {
    pub fn new(grid: Grid2d, pixels: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if pixels.len() != grid.width * grid.height {
            return Err(Error::invalid(
                "image",
                format!("{} pixels for a {}×{} image", pixels.len(), grid.width, grid.height),
            ));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid("image", format!("pixel value {p} outside [0, 1]")));
        }
        Ok(PatternImage { grid, pixels })
    }

    pub fn grid(&self) -> &Grid2d {
        &self.grid
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn pitch(&self) -> f64 {
        self.grid.pitch
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Pixel in column `i`, row `j`.
    pub fn pixel(&self, i: usize, j: usize) -> f64 {
        self.pixels[j * self.grid.width + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.pixels[j * self.grid.width..(j + 1) * self.grid.width]
    }

    /// Bilinear interpolation at (x, y) mm; `None` outside the lattice.
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let g = &self.grid;
        let fx = snap((x - g.origin.0) / g.pitch);
        let fy = snap((y - g.origin.1) / g.pitch);
        let (w, h) = ((g.width - 1) as f64, (g.height - 1) as f64);
        if !(0.0..=w).contains(&fx) || !(0.0..=h).contains(&fy) {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let i1 = (i + 1).min(g.width - 1);
        let j1 = (j + 1).min(g.height - 1);
        let top = lerp(self.pixel(i, j), self.pixel(i1, j), tx);
        let bottom = lerp(self.pixel(i, j1), self.pixel(i1, j1), tx);
        Some(lerp(top, bottom, ty))
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else {
        a + (b - a) * t
    }
}

/// Rounds fractional pixel indices that are within 1e-9 of an integer.
fn snap(f: f64) -> f64 {
    let r = f.round();
    if (f - r).abs() < 1e-9 {
        r
    } else {
        f
    }
}

/// `T1(x) · T2(x cos θ + y sin θ)`: G1 modulates along x, G2 along the x
/// axis rotated by `relative_angle`.
pub fn render_superposition(
    g1: &TransmissionMask,
    g2: &TransmissionMask,
    relative_angle: f64,
    grid: Grid2d,
) -> Result<PatternImage> {
    grid.validate()?;
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&relative_angle) {
        return Err(Error::invalid(
            "relative angle",
            format!("must lie in [0, π/2], got {relative_angle}"),
        ));
    }
    for period in [g1.period(), g2.period()].into_iter().flatten() {
        if period < MIN_PIXELS_PER_PERIOD * grid.pitch {
            return Err(Error::Sampling(format!(
                "period {period} mm has fewer than {MIN_PIXELS_PER_PERIOD} pixels at pitch {} mm",
                grid.pitch
            )));
        }
    }
    let (sin, cos) = relative_angle.sin_cos();
    let row1: Vec<f64> = (0..grid.width).map(|i| g1.transmission(grid.x(i))).collect();
    let mut pixels = vec![0.0; grid.width * grid.height];
    pixels
        .par_chunks_mut(grid.width)
        .enumerate()
        .for_each(|(j, row)| {
            let y = grid.y(j);
            for (i, p) in row.iter_mut().enumerate() {
                let x = grid.x(i);
                let u2 = if relative_angle == 0.0 { x } else { x * cos + y * sin };
                *p = (row1[i] * g2.transmission(u2)).clamp(0.0, 1.0);
            }
        });
    PatternImage::new(grid, pixels)
}

/// Straight sampling path through an image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanLine {
    start: (f64, f64),
    direction: (f64, f64),
    length: f64,
    n_samples: usize,
}

impl ScanLine {
    /// `direction` is normalised here.
    pub fn new(start: (f64, f64), direction: (f64, f64), length: f64, n_samples: usize) -> Result<Self> {
        let norm = direction.0.hypot(direction.1);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("scan line", "direction must be a non-zero vector"));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid("scan line", format!("length must be positive, got {length}")));
        }
        if n_samples < 2 {
            return Err(Error::invalid("scan line", "needs at least two samples"));
        }
        Ok(ScanLine {
            start,
            direction: (direction.0 / norm, direction.1 / norm),
            length,
            n_samples,
        })
    }

    /// Line along +x through the image centre, `length` long, sampled at
    /// the image pitch.
    pub fn center_line(image: &PatternImage, length: f64) -> Result<Self> {
        let g = image.grid();
        let cx = g.origin.0 + 0.5 * (g.width - 1) as f64 * g.pitch;
        let cy = g.origin.1 + 0.5 * (g.height - 1) as f64 * g.pitch;
        let n = (length / g.pitch).round() as usize + 1;
        Self::new((cx - 0.5 * length, cy), (1.0, 0.0), length, n)
    }

    pub fn start(&self) -> (f64, f64) {
        self.start
    }

    pub fn direction(&self) -> (f64, f64) {
        self.direction
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Arc length of sample `k` from the start.
    pub fn offset(&self, k: usize) -> f64 {
        self.length * k as f64 / (self.n_samples - 1) as f64
    }

    pub fn point(&self, k: usize) -> (f64, f64) {
        let t = self.offset(k);
        (self.start.0 + t * self.direction.0, self.start.1 + t * self.direction.1)
    }
}

/// Bilinear samples along `line`; positions are arc lengths from its start.
pub fn extract_scanline(image: &PatternImage, line: &ScanLine) -> Result<ScanRecord> {
    let mut positions = Vec::with_capacity(line.n_samples);
    let mut values = Vec::with_capacity(line.n_samples);
    for k in 0..line.n_samples {
        let (x, y) = line.point(k);
        let v = image
            .sample(x, y)
            .ok_or_else(|| Error::invalid("scan line", format!("point ({x}, {y}) mm lies outside the image")))?;
        positions.push(line.offset(k));
        values.push(v);
    }
    ScanRecord::analytic(positions, values)
}

/// `P_k = ⟨T1(x − a_k) · T2(x − b_k)⟩` over `window`, for each displacement
/// pair `(a_k, b_k)` along `path`, by composite Simpson on subintervals of at
/// most `pitch / 10`, split at the binary-grating edges.
pub fn aperture_convolved_product(
    g1: &TransmissionMask,
    g2: &TransmissionMask,
    window: (f64, f64),
    pitch: f64,
    path: &[(f64, f64)],
) -> Result<Vec<f64>> {
    let (lo, hi) = window;
    if !(hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid("aperture", format!("empty window [{lo}, {hi}]")));
    }
    if !(pitch > 0.0 && pitch.is_finite()) {
        return Err(Error::invalid("pitch", format!("must be positive, got {pitch}")));
    }
    for period in [g1.period(), g2.period()].into_iter().flatten() {
        if period < MIN_PIXELS_PER_PERIOD * pitch {
            return Err(Error::Sampling(format!(
                "period {period} mm is under {MIN_PIXELS_PER_PERIOD} samples at pitch {pitch} mm"
            )));
        }
    }
    let h_max = pitch / OVERSAMPLING as f64;
    Ok(path
        .par_iter()
        .map(|&(a, b)| {
            let t1 = g1.shifted(a);
            let t2 = g2.shifted(b);
            let mut cuts = vec![lo, hi];
            cuts.extend(t1.discontinuities(lo, hi));
            cuts.extend(t2.discontinuities(lo, hi));
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|b, a| *b - *a <= 1e-14);
            let integral: f64 = cuts
                .windows(2)
                .map(|w| simpson(|x| t1.transmission(x) * t2.transmission(x), w[0], w[1], h_max))
                .sum();
            (integral / (hi - lo)).clamp(0.0, 1.0)
        })
        .collect())
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, h_max: f64) -> f64 {
    let mut n = ((b - a) / h_max).ceil() as usize;
    n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    // Segment ends may sit on a grating edge; take the one-sided values.
    let nudge = 1e-9 * h;
    let mut sum = f(a + nudge) + f(b - nudge);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// Classical counterpart of a coincidence scan: the masks and detection
/// window of `config` worked out directly from its geometry, then fed to
/// [`aperture_convolved_product`].
pub fn classical_scan(config: &ExperimentConfig, schedule: &ScanSchedule) -> Result<Vec<f64>> {
    config.validate()?;
    schedule.validate()?;
    // In the pump–idler case G1 reaches the correlation plane scaled by σ
    // and detection is through the idler pinhole. In the signal–idler case a
    // single-lens relay (m = ∓1) carries G1 to G2, and the signal pinhole
    // behind the second relay is mapped back to G2's plane.
    let relay = if config.relay_inverts { -1.0 } else { 1.0 };
    let (gain, detecting, detect_center, region_center) = match config.kind {
        SetupKind::PumpIdler => (
            config.transfer_scale,
            config.pinhole_idler,
            config.pinhole_idler.center(),
            config.pinhole_signal.center(),
        ),
        SetupKind::SignalIdler => (
            relay,
            config.pinhole_signal,
            relay * config.pinhole_signal.center(),
            config.pinhole_idler.center(),
        ),
    };
    let g1 = config.grating_1.scaled(gain)?;
    let r = 0.5 * detecting.diameter();
    let hw = config.coincidence_halfwidth;
    let window = (
        (detect_center - r).max(region_center - hw),
        (detect_center + r).min(region_center + hw),
    );
    let path: Vec<(f64, f64)> = (0..schedule.n_steps)
        .map(|k| {
            let d1 = schedule.start_g1 + k as f64 * schedule.step_g1;
            let d2 = schedule.start_g2 + k as f64 * schedule.step_g2;
            (gain * d1, d2)
        })
        .collect();
    aperture_convolved_product(&g1, &config.grating_2, window, config.grid.pitch(), &path)
}
