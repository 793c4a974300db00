//! Flat `key = value` run configuration.
//!
//! One pair per line; `#` starts a comment; lengths are mm and wavelengths
//! nm, with no unit suffixes. Unknown or repeated keys are errors.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::engine::{CoincidenceModel, ExperimentConfig, ScanSchedule, SetupKind};
use crate::optics::{make_grating, Aperture, Profile, SpatialGrid, TransmissionMask};
use crate::photocount::CountingPlan;
use crate::{Error, Result};

/// Keys that must be present in every configuration file.
pub const REQUIRED_KEYS: [&str; 6] = ["setup", "g1.period", "g2.period", "scan.steps", "scan.step.g1", "scan.step.g2"];

/// Every accepted key, in the order [`ExperimentRun::to_config_text`] writes them.
pub const KNOWN_KEYS: [&str; 32] = [
    "setup",
    "g1.period",
    "g1.profile",
    "g1.contrast",
    "g1.duty",
    "g1.phase",
    "g2.period",
    "g2.profile",
    "g2.contrast",
    "g2.duty",
    "g2.phase",
    "sigma",
    "relay.invert",
    "pinhole.diameter",
    "lambda.pump",
    "lambda.signal",
    "lambda.idler",
    "focal.length",
    "region.halfwidth",
    "grid.pitch",
    "grid.points",
    "scan.steps",
    "scan.step.g1",
    "scan.step.g2",
    "scan.start.g1",
    "scan.start.g2",
    "mc.mean_pairs",
    "mc.seed",
    "mc.background",
    "fit.model",
    "fit.fast_period",
    "name",
];

/// Seed used when a configuration does not set `mc.seed`.
pub const DEFAULT_SEED: u64 = 20_051_205;
/// Pairs per step used when a configuration does not set `mc.mean_pairs`.
pub const DEFAULT_MEAN_PAIRS: f64 = 1e4;

/// Model fitted to a scan by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitPlan {
    Product,
    /// Envelope fit; with a fast period the fit runs on window maxima.
    Envelope { fast_period: Option<f64> },
}

/// A fully resolved coincidence experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub name: String,
    pub config: ExperimentConfig,
    pub plan: CountingPlan,
    pub fit: FitPlan,
}

impl ExperimentRun {
    pub fn schedule(&self) -> &ScanSchedule {
        &self.plan.schedule
    }

    /// Configuration text that [`parse_config`] maps back onto `self`.
    pub fn to_config_text(&self) -> String {
        let c = &self.config;
        let s = &self.plan.schedule;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("name", self.name.clone());
        put("setup", c.kind.to_string());
        for (prefix, g) in [("g1", &c.grating_1), ("g2", &c.grating_2)] {
            match g.period() {
                None => put(&format!("{prefix}.period"), "open".into()),
                Some(p) => {
                    put(&format!("{prefix}.period"), format!("{p}"));
                    match g.profile() {
                        Profile::CosineSquared => put(&format!("{prefix}.profile"), "cos2".into()),
                        Profile::Binary { duty_cycle } => {
                            put(&format!("{prefix}.profile"), "binary".into());
                            put(&format!("{prefix}.duty"), format!("{duty_cycle}"));
                        }
                    }
                    put(&format!("{prefix}.contrast"), format!("{}", g.contrast()));
                    put(&format!("{prefix}.phase"), format!("{}", g.phase_offset()));
                }
            }
        }
        put("sigma", format!("{}", c.transfer_scale));
        put("relay.invert", format!("{}", c.relay_inverts));
        put("pinhole.diameter", format!("{}", c.pinhole_idler.diameter()));
        put("lambda.pump", format!("{}", c.wavelengths.pump_nm));
        put("lambda.signal", format!("{}", c.wavelengths.signal_nm));
        put("lambda.idler", format!("{}", c.wavelengths.idler_nm));
        put("focal.length", format!("{}", c.focal_length));
        put("region.halfwidth", format!("{}", c.coincidence_halfwidth));
        put("grid.pitch", format!("{}", c.grid.pitch()));
        put("grid.points", format!("{}", c.grid.n_points()));
        put("scan.steps", format!("{}", s.n_steps));
        put("scan.step.g1", format!("{}", s.step_g1));
        put("scan.step.g2", format!("{}", s.step_g2));
        put("scan.start.g1", format!("{}", s.start_g1));
        put("scan.start.g2", format!("{}", s.start_g2));
        put("mc.mean_pairs", format!("{}", self.plan.mean_pairs_per_step));
        put("mc.seed", format!("{}", self.plan.seed));
        put("mc.background", format!("{}", self.plan.background));
        match self.fit {
            FitPlan::Product => put("fit.model", "product".into()),
            FitPlan::Envelope { fast_period } => {
                put("fit.model", "envelope".into());
                if let Some(f) = fast_period {
                    put("fit.fast_period", format!("{f}"));
                }
            }
        }
        out
    }
}

fn config_err(line: Option<usize>, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentRun> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let default_name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".into());
    parse_config(&text, &default_name)
}

struct Entries<'a> {
    map: HashMap<&'a str, (usize, &'a str)>,
}

impl<'a> Entries<'a> {
    fn raw(&self, key: &str) -> Option<(usize, &'a str)> {
        self.map.get(key).copied()
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|e| e.0)
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        let Some((line, v)) = self.raw(key) else { return Ok(None) };
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Some(x)),
            _ => Err(config_err(Some(line), format!("{key}: expected a finite number, got `{v}`"))),
        }
    }

    fn positive(&self, key: &str) -> Result<Option<f64>> {
        match self.number(key)? {
            Some(x) if x <= 0.0 => Err(config_err(self.line(key), format!("{key}: must be positive, got {x}"))),
            other => Ok(other),
        }
    }

    fn integer<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        let Some((line, v)) = self.raw(key) else { return Ok(None) };
        v.parse::<T>()
            .map(Some)
            .map_err(|_| config_err(Some(line), format!("{key}: expected a non-negative integer, got `{v}`")))
    }

    fn grating(&self, prefix: &str) -> Result<TransmissionMask> {
        let key = format!("{prefix}.period");
        let (line, period) = self.raw(&key).expect("required key checked");
        let extras = ["profile", "contrast", "duty", "phase"].map(|k| format!("{prefix}.{k}"));
        if period == "open" {
            if let Some(k) = extras.iter().find(|k| self.map.contains_key(k.as_str())) {
                return Err(config_err(self.line(k), format!("{k} has no meaning for an open {prefix}")));
            }
            return Ok(TransmissionMask::open());
        }
        let period = self
            .number(&key)?
            .ok_or_else(|| config_err(Some(line), format!("{key}: missing")))?;
        let duty = self.number(&extras[2])?;
        let profile = match self.raw(&extras[0]) {
            None | Some((_, "cos2")) => {
                if duty.is_some() {
                    return Err(config_err(self.line(&extras[2]), format!("{} applies to binary profiles only", extras[2])));
                }
                Profile::CosineSquared
            }
            Some((_, "binary")) => Profile::Binary {
                duty_cycle: duty.unwrap_or(0.5),
            },
            Some((l, other)) => {
                return Err(config_err(Some(l), format!("{}: expected `cos2` or `binary`, got `{other}`", extras[0])))
            }
        };
        let contrast = self.number(&extras[1])?.unwrap_or(1.0);
        let phase = self.number(&extras[3])?.unwrap_or(0.0);
        make_grating(period, phase, profile, contrast).map_err(|e| {
            // Attribute the failure to the most specific key present.
            let culprit = match &e {
                Error::InvalidParameter { name: "grating contrast", .. } => &extras[1],
                Error::InvalidParameter { name: "duty cycle", .. } => &extras[2],
                Error::InvalidParameter { name: "grating phase", .. } => &extras[3],
                _ => &key,
            };
            config_err(self.line(culprit).or(Some(line)), e.to_string())
        })
    }
}

/// Parses configuration text; `default_name` labels the run when the file
/// has no `name` key.
pub fn parse_config(text: &str, default_name: &str) -> Result<ExperimentRun> {
    let mut map = HashMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(config_err(Some(line), format!("expected `key = value`, got `{content}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(config_err(Some(line), format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(config_err(Some(line), format!("{key}: missing value")));
        }
        if let Some((first, _)) = map.insert(key, (line, value)) {
            return Err(config_err(Some(line), format!("{key} repeats line {first}")));
        }
    }
    let missing: Vec<&str> = REQUIRED_KEYS.iter().copied().filter(|k| !map.contains_key(k)).collect();
    if !missing.is_empty() {
        return Err(config_err(None, format!("missing required keys: {}", missing.join(", "))));
    }
    let e = Entries { map };

    let kind = match e.raw("setup").unwrap() {
        (_, "pump-idler") => SetupKind::PumpIdler,
        (_, "signal-idler") => SetupKind::SignalIdler,
        (l, other) => {
            return Err(config_err(Some(l), format!("setup: expected `pump-idler` or `signal-idler`, got `{other}`")))
        }
    };
    let mut config = ExperimentConfig::new(kind, e.grating("g1")?, e.grating("g2")?);
    if let Some(s) = e.positive("sigma")? {
        config.transfer_scale = s;
    }
    if let Some((l, v)) = e.raw("relay.invert") {
        config.relay_inverts = v
            .parse()
            .map_err(|_| config_err(Some(l), format!("relay.invert: expected `true` or `false`, got `{v}`")))?;
    }
    if let Some(d) = e.positive("pinhole.diameter")? {
        let pinhole = Aperture::new(d, 0.0).map_err(|err| config_err(e.line("pinhole.diameter"), err.to_string()))?;
        config.pinhole_signal = pinhole;
        config.pinhole_idler = pinhole;
    }
    if let Some(v) = e.positive("lambda.pump")? {
        config.wavelengths.pump_nm = v;
    }
    if let Some(v) = e.positive("lambda.signal")? {
        config.wavelengths.signal_nm = v;
    }
    if let Some(v) = e.positive("lambda.idler")? {
        config.wavelengths.idler_nm = v;
    }
    if let Some(v) = e.number("focal.length")? {
        if v == 0.0 {
            return Err(config_err(e.line("focal.length"), "focal.length: must be non-zero"));
        }
        config.focal_length = v;
    }
    if let Some(v) = e.positive("region.halfwidth")? {
        config.coincidence_halfwidth = v;
    }
    let pitch = e.positive("grid.pitch")?.unwrap_or(config.grid.pitch());
    let points: usize = e.integer("grid.points")?.unwrap_or(config.grid.n_points());
    config.grid = SpatialGrid::centered(points, pitch)
        .map_err(|err| config_err(e.line("grid.points").or(e.line("grid.pitch")), err.to_string()))?;

    let steps: usize = e.integer("scan.steps")?.unwrap();
    if steps == 0 {
        return Err(config_err(e.line("scan.steps"), "scan.steps: must be at least 1"));
    }
    let mut schedule = ScanSchedule::new(steps, e.number("scan.step.g1")?.unwrap(), e.number("scan.step.g2")?.unwrap());
    schedule.start_g1 = e.number("scan.start.g1")?.unwrap_or(0.0);
    schedule.start_g2 = e.number("scan.start.g2")?.unwrap_or(0.0);
    schedule
        .validate()
        .map_err(|err| config_err(e.line("scan.step.g2"), err.to_string()))?;

    let mut plan = CountingPlan::new(
        e.positive("mc.mean_pairs")?.unwrap_or(DEFAULT_MEAN_PAIRS),
        e.integer("mc.seed")?.unwrap_or(DEFAULT_SEED),
        schedule,
    );
    if let Some(b) = e.number("mc.background")? {
        if b < 0.0 {
            return Err(config_err(e.line("mc.background"), "mc.background: must be non-negative"));
        }
        plan.background = b;
    }

    let fast_period = e.positive("fit.fast_period")?;
    let fit = match e.raw("fit.model") {
        None | Some((_, "product")) => {
            if fast_period.is_some() {
                return Err(config_err(e.line("fit.fast_period"), "fit.fast_period applies to the envelope model only"));
            }
            FitPlan::Product
        }
        Some((_, "envelope")) => FitPlan::Envelope { fast_period },
        Some((l, other)) => {
            return Err(config_err(Some(l), format!("fit.model: expected `product` or `envelope`, got `{other}`")))
        }
    };

    config
        .validate()
        .and_then(|_| CoincidenceModel::new(&config).map(|_| ()))
        .map_err(|err| config_err(None, err.to_string()))?;

    let name = e.raw("name").map(|(_, v)| v.to_string()).unwrap_or_else(|| default_name.to_string());
    Ok(ExperimentRun {
        name,
        config,
        plan,
        fit,
    })
}
