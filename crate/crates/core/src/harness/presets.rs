//! Named runs reproducing the published scans and classical patterns.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::config::{load_config, ExperimentRun, FitPlan, DEFAULT_MEAN_PAIRS, DEFAULT_SEED};
use crate::classical::Grid2d;
use crate::engine::{ExperimentConfig, ScanSchedule, SetupKind};
use crate::optics::TransmissionMask;
use crate::photocount::CountingPlan;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    Fig3a,
    Fig3b,
    Fig5a,
    Fig5b,
    Fig1a,
    Fig1b,
    Custom,
}

impl PresetName {
    pub const BUILT_IN: [PresetName; 6] = [
        PresetName::Fig1a,
        PresetName::Fig1b,
        PresetName::Fig3a,
        PresetName::Fig3b,
        PresetName::Fig5a,
        PresetName::Fig5b,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Fig3a => "fig3a",
            PresetName::Fig3b => "fig3b",
            PresetName::Fig5a => "fig5a",
            PresetName::Fig5b => "fig5b",
            PresetName::Fig1a => "fig1a",
            PresetName::Fig1b => "fig1b",
            PresetName::Custom => "custom",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::BUILT_IN
            .into_iter()
            .chain([PresetName::Custom])
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::invalid("preset", format!("unknown preset `{s}`")))
    }
}

/// Rendering of two superposed gratings and a scan along their common axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalRun {
    pub name: String,
    pub grating_1: TransmissionMask,
    pub grating_2: TransmissionMask,
    pub relative_angle: f64,
    pub grid: Grid2d,
    /// Length of the centre-line scan, mm.
    pub scan_length: f64,
    pub fit: FitPlan,
}

impl ClassicalRun {
    /// The two patterns an experiment superposes in G2's plane, on a
    /// 24 × 10 mm canvas at 0.02 mm per pixel.
    pub fn from_experiment(run: &ExperimentRun) -> Result<Self> {
        let c = &run.config;
        let gain = match c.kind {
            SetupKind::PumpIdler => c.transfer_scale,
            SetupKind::SignalIdler => {
                if c.relay_inverts {
                    -1.0
                } else {
                    1.0
                }
            }
        };
        Ok(ClassicalRun {
            name: run.name.clone(),
            grating_1: c.grating_1.scaled(gain)?,
            grating_2: c.grating_2,
            relative_angle: 0.0,
            grid: canvas()?,
            scan_length: 19.2,
            fit: run.fit,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunPreset {
    Experiment(ExperimentRun),
    Classical(ClassicalRun),
}

impl RunPreset {
    pub fn name(&self) -> &str {
        match self {
            RunPreset::Experiment(r) => &r.name,
            RunPreset::Classical(r) => &r.name,
        }
    }
}

fn canvas() -> Result<Grid2d> {
    Grid2d::centered(1201, 501, 0.02)
}

/// Period of the mean spatial frequency of two gratings: the carrier
/// under a moiré envelope.
pub fn carrier_period(p1: f64, p2: f64) -> f64 {
    2.0 / (1.0 / p1 + 1.0 / p2)
}

fn experiment(
    name: PresetName,
    kind: SetupKind,
    g1: f64,
    g2: f64,
    steps: (usize, f64, f64),
    fit: FitPlan,
) -> RunPreset {
    let config = ExperimentConfig::new(
        kind,
        TransmissionMask::cosine(g1).expect("preset period"),
        TransmissionMask::cosine(g2).expect("preset period"),
    );
    let schedule = ScanSchedule::new(steps.0, steps.1, steps.2);
    RunPreset::Experiment(ExperimentRun {
        name: name.to_string(),
        config,
        plan: CountingPlan::new(DEFAULT_MEAN_PAIRS, DEFAULT_SEED, schedule),
        fit,
    })
}

fn classical(name: PresetName, g1: f64, g2: f64, scan_length: f64, fit: FitPlan) -> RunPreset {
    RunPreset::Classical(ClassicalRun {
        name: name.to_string(),
        grating_1: TransmissionMask::cosine(g1).expect("preset period"),
        grating_2: TransmissionMask::cosine(g2).expect("preset period"),
        relative_angle: 0.0,
        grid: canvas().expect("preset canvas"),
        scan_length,
        fit,
    })
}

/// Built-in run `name`; `None` for [`PresetName::Custom`].
///
/// Pump–idler runs carry G1 at half the desired period (σ = 2 doubles it).
/// Signal–idler runs use the same physical pair as the pump–idler run of the
/// same letter, with G1 stepped against G2 so that its inverted relay image
/// moves with G2.
pub fn preset(name: PresetName) -> Option<RunPreset> {
    let envelope = |p1: f64, p2: f64| FitPlan::Envelope {
        fast_period: Some(carrier_period(p1, p2)),
    };
    Some(match name {
        PresetName::Fig3a => experiment(name, SetupKind::PumpIdler, 0.8, 1.2, (121, 0.1, 0.2), FitPlan::Product),
        PresetName::Fig3b => experiment(name, SetupKind::PumpIdler, 0.4, 0.9, (217, 0.05, 0.1), envelope(0.8, 0.9)),
        PresetName::Fig5a => experiment(name, SetupKind::SignalIdler, 1.6, 1.2, (121, -0.2, 0.2), FitPlan::Product),
        PresetName::Fig5b => experiment(name, SetupKind::SignalIdler, 0.8, 0.9, (217, -0.1, 0.1), envelope(0.8, 0.9)),
        PresetName::Fig1a => classical(name, 1.2, 1.6, 19.2, FitPlan::Product),
        PresetName::Fig1b => classical(name, 0.8, 0.9, 16.0, envelope(0.8, 0.9)),
        PresetName::Custom => return None,
    })
}

/// A preset name, or else the path of a configuration file.
pub fn resolve(arg: &str) -> Result<RunPreset> {
    match arg.parse::<PresetName>() {
        Ok(PresetName::Custom) => Err(Error::invalid("preset", "`custom` takes a configuration file path")),
        Ok(name) => Ok(preset(name).expect("built-in preset")),
        Err(_) => {
            let path = Path::new(arg);
            if !path.exists() {
                return Err(Error::invalid(
                    "preset",
                    format!("`{arg}` is neither a preset ({}) nor an existing file", names()),
                ));
            }
            load_config(path).map(RunPreset::Experiment)
        }
    }
}

fn names() -> String {
    PresetName::BUILT_IN.map(|p| p.as_str()).join(", ")
}
