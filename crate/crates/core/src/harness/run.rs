use std::path::{Path, PathBuf};

use super::config::{ExperimentRun, FitPlan};
use super::io::{write_csv, write_pgm, FitReport};
use super::presets::{ClassicalRun, RunPreset};
use crate::analysis::{
    beat_from_spectrum, expected_beat_period, fit_envelope_cos2, fit_product_cos2, large_peak_spacing,
    BeatPeriod, EnvelopeInit, FitParameters, FitResult, ProductInit, ScanRecord,
};
use crate::classical::{extract_scanline, render_superposition, PatternImage, ScanLine};
use crate::engine::{run_scan, SetupKind};
use crate::photocount::run_counting_scan;
use crate::{Error, Result};

/// Local maxima above this fraction of the trace range count as large peaks.
pub const LARGE_PEAK_FRACTION: f64 = 0.8;
pub const CSV_FORMAT_VERSION: u32 = 1;
pub const FIT_REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Analytic,
    MonteCarlo,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Analytic => "analytic",
            RunMode::MonteCarlo => "mc",
        }
    }
}

/// Files written by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputBundle {
    pub data: Vec<PathBuf>,
    pub images: Vec<PathBuf>,
    pub fit_report: PathBuf,
    pub csv_format_version: u32,
    pub fit_report_format_version: u32,
    /// The fitted result, when the fit stage produced one.
    pub fit: Option<FitResult>,
}

/// Fits `record` with the model named by `plan`, seeding periods from its
/// spectrum.
pub fn fit_scan(record: &ScanRecord, plan: FitPlan) -> Result<FitResult> {
    match plan {
        FitPlan::Product => fit_product_cos2(record, &ProductInit::from_spectrum(record)?),
        FitPlan::Envelope { fast_period } => {
            let mut init = EnvelopeInit::from_spectrum(record)?;
            init.fast_period_hint = fast_period;
            fit_envelope_cos2(record, &init)
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.12}")
}

fn beat_text(b: BeatPeriod) -> String {
    match b {
        BeatPeriod::Finite(p) => fmt(p),
        BeatPeriod::Infinite => "infinite".into(),
    }
}

/// Fit plus beat diagnostics, as report lines.
fn analyse(record: &ScanRecord, plan: FitPlan, periods: (Option<f64>, Option<f64>), source: &str) -> FitReport {
    let fit = fit_scan(record, plan);
    let mut extras = Vec::new();
    if let (Some(p1), Some(p2)) = periods {
        if let Ok(b) = expected_beat_period(p1, p2) {
            extras.push(("expected_beat_mm".into(), beat_text(b)));
        }
    }
    if let Ok(FitResult {
        parameters: FitParameters::Product { period_1, period_2, .. },
        ..
    }) = &fit
    {
        if let Ok(b) = expected_beat_period(*period_1, *period_2) {
            extras.push(("fitted_beat_mm".into(), beat_text(b)));
        }
    }
    if let Some(s) = large_peak_spacing(record, LARGE_PEAK_FRACTION) {
        extras.push(("large_peak_spacing_mm".into(), fmt(s)));
    }
    if let Ok(s) = beat_from_spectrum(record) {
        extras.push(("spectral_beat_mm".into(), fmt(s.period)));
        extras.push(("spectral_beat_interval_mm".into(), format!("{}..{}", fmt(s.interval.0), fmt(s.interval.1))));
    }
    FitReport {
        source: source.to_string(),
        fit: fit.map_err(|e| e.to_string()),
        extras,
    }
}

/// Periods of the two patterns as superposed in G2's plane.
pub fn effective_periods(run: &ExperimentRun) -> (Option<f64>, Option<f64>) {
    let c = &run.config;
    let scale = match c.kind {
        SetupKind::PumpIdler => c.transfer_scale,
        SetupKind::SignalIdler => 1.0,
    };
    (c.grating_1.period().map(|p| p * scale), c.grating_2.period())
}

/// Runs a preset and writes its outputs into `out_dir` (created if absent).
/// `workers` fixes the size of the thread pool; results do not depend on it.
pub fn run_preset(preset: &RunPreset, mode: RunMode, out_dir: &Path, workers: Option<usize>) -> Result<OutputBundle> {
    match workers {
        None => run_inner(preset, mode, out_dir),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Consistency(format!("thread pool: {e}")))?
            .install(|| run_inner(preset, mode, out_dir)),
    }
}

fn run_inner(preset: &RunPreset, mode: RunMode, out_dir: &Path) -> Result<OutputBundle> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    match preset {
        RunPreset::Experiment(run) => run_experiment(run, mode, out_dir),
        RunPreset::Classical(run) => {
            if mode == RunMode::MonteCarlo {
                return Err(Error::invalid("mode", "classical presets have no photocount mode"));
            }
            run_classical(run, out_dir)
        }
    }
}

/// Scan record of an experiment in `mode`, plus the record to fit (counts
/// normalised to the rate scale) and any extra report lines.
pub fn scan_experiment(run: &ExperimentRun, mode: RunMode) -> Result<(ScanRecord, ScanRecord, Vec<(String, String)>)> {
    match mode {
        RunMode::Analytic => {
            let rec = run_scan(&run.config, run.schedule())?;
            Ok((rec.clone(), rec, Vec::new()))
        }
        RunMode::MonteCarlo => {
            let counts = run_counting_scan(&run.config, &run.plan)?;
            let extras = vec![
                ("mc_seed".into(), run.plan.seed.to_string()),
                ("mc_mean_pairs".into(), format!("{}", run.plan.mean_pairs_per_step)),
                ("reduced_chi_square".into(), fmt(counts.reduced_chi_square())),
            ];
            Ok((counts.to_scan_record()?, counts.normalized()?, extras))
        }
    }
}

fn run_experiment(run: &ExperimentRun, mode: RunMode, out_dir: &Path) -> Result<OutputBundle> {
    let (record, to_fit, mut extras) = scan_experiment(run, mode)?;
    let stem = format!("{}_{}", run.name, mode.as_str());
    let csv = out_dir.join(format!("{stem}.csv"));
    write_csv(&record, &csv)?;
    let mut report = analyse(&to_fit, run.fit, effective_periods(run), &stem);
    for w in run.config.warnings() {
        extras.push(("warning".into(), w));
    }
    report.extras.splice(0..0, extras);
    let fit_report = out_dir.join(format!("{stem}_fit.txt"));
    report.write(&fit_report)?;
    Ok(OutputBundle {
        data: vec![csv],
        images: Vec::new(),
        fit_report,
        csv_format_version: CSV_FORMAT_VERSION,
        fit_report_format_version: FIT_REPORT_FORMAT_VERSION,
        fit: report.fit.ok(),
    })
}

/// Renders a classical run and extracts its centre line.
pub fn render_classical(run: &ClassicalRun) -> Result<(PatternImage, ScanRecord)> {
    let image = render_superposition(&run.grating_1, &run.grating_2, run.relative_angle, run.grid)?;
    let line = ScanLine::center_line(&image, run.scan_length)?;
    let record = extract_scanline(&image, &line)?;
    Ok((image, record))
}

fn run_classical(run: &ClassicalRun, out_dir: &Path) -> Result<OutputBundle> {
    let (image, record) = render_classical(run)?;
    let pgm = out_dir.join(format!("{}.pgm", run.name));
    write_pgm(&image, &pgm)?;
    let csv = out_dir.join(format!("{}_scanline.csv", run.name));
    write_csv(&record, &csv)?;
    let report = analyse(&record, run.fit, (run.grating_1.period(), run.grating_2.period()), &run.name);
    let fit_report = out_dir.join(format!("{}_fit.txt", run.name));
    report.write(&fit_report)?;
    Ok(OutputBundle {
        data: vec![csv],
        images: vec![pgm],
        fit_report,
        csv_format_version: CSV_FORMAT_VERSION,
        fit_report_format_version: FIT_REPORT_FORMAT_VERSION,
        fit: report.fit.ok(),
    })
}

/// Renders the superposition a preset describes and writes it as PGM.
/// `angle` overrides the preset's relative grating angle.
pub fn render_preset(preset: &RunPreset, angle: Option<f64>, path: &Path) -> Result<PatternImage> {
    let mut run = match preset {
        RunPreset::Classical(r) => r.clone(),
        RunPreset::Experiment(r) => ClassicalRun::from_experiment(r)?,
    };
    if let Some(a) = angle {
        run.relative_angle = a;
    }
    let image = render_superposition(&run.grating_1, &run.grating_2, run.relative_angle, run.grid)?;
    write_pgm(&image, path)?;
    Ok(image)
}
