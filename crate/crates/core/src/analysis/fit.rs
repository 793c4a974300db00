//! Damped Gauss–Newton (Levenberg–Marquardt) fits of the two fringe models:
//!
//! * product: `B + A·cos²(π(x − φ1)/p1)·cos²(π(x − φ2)/p2)`
//! * envelope: `B + A·cos²(π(x − φ)/P)`
//!
//! Frequencies are notoriously hard to fit over many periods from a rough
//! start, so each fit first runs on a short leading window of the scan and
//! then on windows that double in length until the whole record is used.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{spectral_peaks, ScanRecord};
use crate::{Error, Result};

const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    ProductCos2,
    EnvelopeCos2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitParameters {
    Product {
        amplitude: f64,
        offset: f64,
        period_1: f64,
        period_2: f64,
        phase_1: f64,
        phase_2: f64,
    },
    Envelope {
        amplitude: f64,
        offset: f64,
        period: f64,
        phase: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub parameters: FitParameters,
    /// `√Σ r²` over the fitted samples.
    pub residual_norm: f64,
    pub converged: bool,
    /// `false` when the data carry no modulation to fit.
    pub identifiable: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn model(&self) -> FitModel {
        match self.parameters {
            FitParameters::Product { .. } => FitModel::ProductCos2,
            FitParameters::Envelope { .. } => FitModel::EnvelopeCos2,
        }
    }

    /// Fitted periods, ascending.
    pub fn periods(&self) -> Vec<f64> {
        match self.parameters {
            FitParameters::Product { period_1, period_2, .. } => vec![period_1, period_2],
            FitParameters::Envelope { period, .. } => vec![period],
        }
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        match self.parameters {
            FitParameters::Product {
                amplitude,
                offset,
                period_1,
                period_2,
                phase_1,
                phase_2,
            } => product_model(x, &[amplitude, offset, period_1, period_2, phase_1, phase_2]),
            FitParameters::Envelope {
                amplitude,
                offset,
                period,
                phase,
            } => envelope_model(x, &[amplitude, offset, period, phase]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged once an accepted step satisfies `‖Δθ‖ / ‖θ‖` below this.
    pub tolerance: f64,
    /// Allowed period range, mm.
    pub period_bounds: (f64, f64),
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            tolerance: 1e-8,
            period_bounds: (0.1, 100.0),
        }
    }
}

/// Starting point for the product fit. Phases left `None` are found by a
/// coarse grid search over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductInit {
    pub period_1: f64,
    pub period_2: f64,
    pub phase_1: Option<f64>,
    pub phase_2: Option<f64>,
}

impl ProductInit {
    pub fn periods(period_1: f64, period_2: f64) -> Self {
        ProductInit {
            period_1,
            period_2,
            phase_1: None,
            phase_2: None,
        }
    }

    /// The two strongest spectral lines of the record.
    pub fn from_spectrum(record: &ScanRecord) -> Result<Self> {
        let mut peaks = spectral_peaks(record)?;
        if peaks.len() < 2 {
            return Err(Error::NoBeat("product initialisation needs two spectral lines".into()));
        }
        peaks.sort_by(|a, b| b.power.total_cmp(&a.power));
        Ok(Self::periods(peaks[0].period(), peaks[1].period()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeInit {
    pub period: f64,
    pub phase: Option<f64>,
    /// Period of the unresolved fast modulation; when given, the fit runs on
    /// the local maxima of consecutive windows of this length.
    pub fast_period_hint: Option<f64>,
}

impl EnvelopeInit {
    pub fn period(period: f64) -> Self {
        EnvelopeInit {
            period,
            phase: None,
            fast_period_hint: None,
        }
    }

    pub fn with_fast_period(self, fast: f64) -> Self {
        EnvelopeInit {
            fast_period_hint: Some(fast),
            ..self
        }
    }

    /// Lowest spectral line of the record.
    pub fn from_spectrum(record: &ScanRecord) -> Result<Self> {
        let beat = super::beat_from_spectrum(record)?;
        Ok(Self::period(beat.period))
    }
}

fn cos2(x: f64, period: f64, phase: f64) -> f64 {
    let c = (PI * (x - phase) / period).cos();
    c * c
}

/// `θ = [A, B, p1, p2, φ1, φ2]`.
pub fn product_model(x: f64, theta: &[f64]) -> f64 {
    theta[1] + theta[0] * cos2(x, theta[2], theta[4]) * cos2(x, theta[3], theta[5])
}

/// `θ = [A, B, P, φ]`.
pub fn envelope_model(x: f64, theta: &[f64]) -> f64 {
    theta[1] + theta[0] * cos2(x, theta[2], theta[3])
}

/// Local maximum of each complete window of length `window`, starting at
/// the first sample.
pub fn decimate_to_envelope(record: &ScanRecord, window: f64) -> Result<ScanRecord> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::invalid("envelope window", format!("must be positive, got {window}")));
    }
    let x = record.positions();
    let y = record.values();
    let e = record.expected();
    let x0 = x[0];
    let last = x[x.len() - 1];
    let spacing = if x.len() > 1 { (last - x0) / (x.len() - 1) as f64 } else { 0.0 };
    let (mut px, mut py, mut pe) = (Vec::new(), Vec::new(), Vec::new());
    let mut start = 0usize;
    let mut j = 0usize;
    loop {
        let end_x = x0 + (j + 1) as f64 * window;
        if end_x > last + 0.5 * spacing {
            break;
        }
        let end = start + x[start..].iter().take_while(|&&v| v < end_x - 1e-9 * window).count();
        if end > start {
            let best = (start..end).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
            px.push(x[best]);
            py.push(y[best]);
            pe.push(e[best]);
        }
        start = end;
        j += 1;
    }
    if px.is_empty() {
        return Err(Error::InvalidRecord("record is shorter than one envelope window".into()));
    }
    ScanRecord::new(px, py, pe, record.kind())
}

pub fn fit_product_cos2(data: &ScanRecord, init: &ProductInit) -> Result<FitResult> {
    fit_product_cos2_with(data, init, &FitOptions::default())
}

pub fn fit_product_cos2_with(data: &ScanRecord, init: &ProductInit, opts: &FitOptions) -> Result<FitResult> {
    check_points(data)?;
    for p in [init.period_1, init.period_2] {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::invalid("initial period", format!("must be positive, got {p}")));
        }
    }
    let x = data.positions();
    let y = data.values();
    if is_flat(y) {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        return Ok(non_identifiable(
            FitParameters::Product {
                amplitude: 0.0,
                offset: mean,
                period_1: init.period_1,
                period_2: init.period_2,
                phase_1: init.phase_1.unwrap_or(0.0),
                phase_2: init.phase_2.unwrap_or(0.0),
            },
            x,
            y,
        ));
    }

    let (p1, p2) = (init.period_1, init.period_2);
    let beat = if p1 != p2 { (p1 * p2 / (p1 - p2).abs()).min(4.0 * p1.max(p2)) } else { p1 };
    let first = leading_window(x, 2.0 * p1.max(p2).max(0.5 * beat));

    let (phase_1, phase_2) = match (init.phase_1, init.phase_2) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            let mut best = (f64::INFINITY, 0.0, 0.0);
            const STEPS: usize = 12;
            for i in 0..STEPS {
                for j in 0..STEPS {
                    let a = init.phase_1.unwrap_or(i as f64 * p1 / STEPS as f64);
                    let b = init.phase_2.unwrap_or(j as f64 * p2 / STEPS as f64);
                    let basis = |x: f64| cos2(x, p1, a) * cos2(x, p2, b);
                    let (_, _, sse) = linear_amplitude(&x[..first], &y[..first], basis);
                    if sse < best.0 {
                        best = (sse, a, b);
                    }
                }
            }
            (best.1, best.2)
        }
    };
    let (amp, off, _) = linear_amplitude(&x[..first], &y[..first], |x| {
        cos2(x, p1, phase_1) * cos2(x, p2, phase_2)
    });
    let theta = vec![amp, off, p1, p2, phase_1, phase_2];
    let scales = |t: &[f64]| vec![t[0].abs().max(1e-12), t[0].abs().max(1e-12), t[2], t[3], t[2], t[3]];
    let out = continuation(x, y, product_model, theta, &[2, 3], &scales, first, opts);

    let t = &out.theta;
    let (mut pa, mut pb, mut fa, mut fb) = (t[2], t[3], t[4], t[5]);
    if pa > pb {
        std::mem::swap(&mut pa, &mut pb);
        std::mem::swap(&mut fa, &mut fb);
    }
    let parameters = FitParameters::Product {
        amplitude: t[0],
        offset: t[1],
        period_1: pa,
        period_2: pb,
        phase_1: fa.rem_euclid(pa),
        phase_2: fb.rem_euclid(pb),
    };
    Ok(finish(parameters, out, y))
}

pub fn fit_envelope_cos2(data: &ScanRecord, init: &EnvelopeInit) -> Result<FitResult> {
    fit_envelope_cos2_with(data, init, &FitOptions::default())
}

pub fn fit_envelope_cos2_with(data: &ScanRecord, init: &EnvelopeInit, opts: &FitOptions) -> Result<FitResult> {
    let decimated;
    let data = match init.fast_period_hint {
        Some(w) => {
            decimated = decimate_to_envelope(data, w)?;
            &decimated
        }
        None => data,
    };
    check_points(data)?;
    let p = init.period;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid("initial period", format!("must be positive, got {p}")));
    }
    let x = data.positions();
    let y = data.values();
    if is_flat(y) {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        return Ok(non_identifiable(
            FitParameters::Envelope {
                amplitude: 0.0,
                offset: mean,
                period: p,
                phase: init.phase.unwrap_or(0.0),
            },
            x,
            y,
        ));
    }

    let first = leading_window(x, 1.5 * p);
    let phase = init.phase.unwrap_or_else(|| {
        const STEPS: usize = 24;
        (0..STEPS)
            .map(|i| i as f64 * p / STEPS as f64)
            .min_by(|&a, &b| {
                let sa = linear_amplitude(&x[..first], &y[..first], |x| cos2(x, p, a)).2;
                let sb = linear_amplitude(&x[..first], &y[..first], |x| cos2(x, p, b)).2;
                sa.total_cmp(&sb)
            })
            .unwrap()
    });
    let (amp, off, _) = linear_amplitude(&x[..first], &y[..first], |x| cos2(x, p, phase));
    let theta = vec![amp, off, p, phase];
    let scales = |t: &[f64]| vec![t[0].abs().max(1e-12), t[0].abs().max(1e-12), t[2], t[2]];
    let out = continuation(x, y, envelope_model, theta, &[2], &scales, first, opts);

    let t = &out.theta;
    let (mut amplitude, mut offset, period, mut phase) = (t[0], t[1], t[2], t[3]);
    if amplitude < 0.0 {
        // B + A cos²(u) = (B + A) + |A| cos²(u − π/2)
        offset += amplitude;
        amplitude = -amplitude;
        phase += 0.5 * period;
    }
    let parameters = FitParameters::Envelope {
        amplitude,
        offset,
        period,
        phase: phase.rem_euclid(period),
    };
    Ok(finish(parameters, out, y))
}

fn check_points(data: &ScanRecord) -> Result<()> {
    if data.len() < MIN_POINTS {
        return Err(Error::InvalidRecord(format!(
            "fits need at least {MIN_POINTS} samples, got {}",
            data.len()
        )));
    }
    Ok(())
}

fn is_flat(y: &[f64]) -> bool {
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE)
}

fn non_identifiable(parameters: FitParameters, x: &[f64], y: &[f64]) -> FitResult {
    let mut result = FitResult {
        parameters,
        residual_norm: 0.0,
        converged: false,
        identifiable: false,
        iterations: 0,
    };
    result.residual_norm = x
        .iter()
        .zip(y)
        .map(|(&x, &y)| (result.evaluate(x) - y).powi(2))
        .sum::<f64>()
        .sqrt();
    result
}

fn finish(parameters: FitParameters, out: LmOutcome, y: &[f64]) -> FitResult {
    let amplitude = match parameters {
        FitParameters::Product { amplitude, .. } | FitParameters::Envelope { amplitude, .. } => amplitude,
    };
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let identifiable = amplitude.abs() > 1e-9 * scale;
    FitResult {
        parameters,
        residual_norm: out.sse.sqrt(),
        converged: out.converged && identifiable,
        identifiable,
        iterations: out.iterations,
    }
}

/// Number of leading samples spanning at least `length` (and `MIN_POINTS`).
fn leading_window(x: &[f64], length: f64) -> usize {
    let n = x.iter().take_while(|&&v| v - x[0] <= length).count();
    n.max(MIN_POINTS.max(12)).min(x.len())
}

/// Least-squares `y ≈ B + A·g(x)`; returns `(A, B, sse)`.
fn linear_amplitude(x: &[f64], y: &[f64], g: impl Fn(f64) -> f64) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let (mut sg, mut sgg, mut sy, mut sgy) = (0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let gi = g(xi);
        sg += gi;
        sgg += gi * gi;
        sy += yi;
        sgy += gi * yi;
    }
    let det = n * sgg - sg * sg;
    let (a, b) = if det.abs() > 1e-14 * n * sgg.max(1e-300) {
        let a = (n * sgy - sg * sy) / det;
        (a, (sy - a * sg) / n)
    } else {
        (0.0, sy / n)
    };
    let sse = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - b - a * g(xi)).powi(2))
        .sum();
    (a, b, sse)
}

#[derive(Debug, Clone)]
struct LmOutcome {
    theta: Vec<f64>,
    sse: f64,
    converged: bool,
    iterations: usize,
}

type Model = fn(f64, &[f64]) -> f64;

#[allow(clippy::too_many_arguments)]
fn continuation(
    x: &[f64],
    y: &[f64],
    model: Model,
    mut theta: Vec<f64>,
    periods: &[usize],
    scales: &dyn Fn(&[f64]) -> Vec<f64>,
    first: usize,
    opts: &FitOptions,
) -> LmOutcome {
    let n = x.len();
    let mut len = first;
    let mut iterations = 0;
    loop {
        let out = levenberg_marquardt(&x[..len], &y[..len], model, theta, periods, scales, opts);
        iterations += out.iterations;
        if len == n {
            return LmOutcome { iterations, ..out };
        }
        theta = out.theta;
        let span = x[len - 1] - x[0];
        len = x.iter().take_while(|&&v| v - x[0] <= 2.0 * span).count().max(len + 1).min(n);
    }
}

fn sum_sq(x: &[f64], y: &[f64], model: Model, theta: &[f64]) -> f64 {
    x.iter().zip(y).map(|(&xi, &yi)| (model(xi, theta) - yi).powi(2)).sum()
}

fn levenberg_marquardt(
    x: &[f64],
    y: &[f64],
    model: Model,
    mut theta: Vec<f64>,
    periods: &[usize],
    scales: &dyn Fn(&[f64]) -> Vec<f64>,
    opts: &FitOptions,
) -> LmOutcome {
    let m = theta.len();
    let n = x.len();
    let clamp = |t: &mut [f64]| {
        for &i in periods {
            t[i] = t[i].clamp(opts.period_bounds.0, opts.period_bounds.1);
        }
    };
    clamp(&mut theta);
    let mut sse = sum_sq(x, y, model, &theta);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let residual = DVector::from_iterator(n, x.iter().zip(y).map(|(&xi, &yi)| model(xi, &theta) - yi));
        // Central differences with steps of 1e-6 relative to each parameter's scale.
        let scale = scales(&theta);
        let mut jac = DMatrix::<f64>::zeros(n, m);
        for j in 0..m {
            let h = 1e-6 * theta[j].abs().max(scale[j]);
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[j] += h;
            minus[j] -= h;
            for (i, &xi) in x.iter().enumerate() {
                jac[(i, j)] = (model(xi, &plus) - model(xi, &minus)) / (2.0 * h);
            }
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &residual;
        let diag_floor = 1e-12 * (0..m).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-300);

        let mut accepted = false;
        while lambda <= 1e16 {
            let mut damped = jtj.clone();
            for i in 0..m {
                damped[(i, i)] += lambda * jtj[(i, i)].max(diag_floor);
            }
            let Some(step) = damped.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let mut candidate: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            clamp(&mut candidate);
            let trial = sum_sq(x, y, model, &candidate);
            if trial.is_finite() && trial <= sse {
                let moved: f64 = theta.iter().zip(&candidate).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let size: f64 = theta.iter().map(|a| a * a).sum::<f64>().sqrt();
                theta = candidate;
                sse = trial;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if moved <= opts.tolerance * size.max(1e-300) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged || !accepted {
            break;
        }
    }
    LmOutcome {
        theta,
        sse,
        converged,
        iterations,
    }
}
