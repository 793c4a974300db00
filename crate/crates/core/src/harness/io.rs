//! CSV scan files, binary PGM images and fit reports.
//!
//! Every writer stages its output in a temporary file in the destination
//! directory and renames it into place, so a final path never holds a
//! partial file.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::analysis::{FitParameters, FitResult, RecordKind, ScanRecord};
use crate::classical::{Grid2d, PatternImage};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "step,position_mm,value,expected_rate";
pub const FIT_REPORT_HEADER: &str = "# qmoire fit report v1";

/// Writes `bytes` to `path` through a temporary sibling file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Fixed 12-decimal rendering; values that round to zero print unsigned.
fn fixed(v: f64) -> String {
    let s = format!("{v:.12}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

pub fn format_csv(record: &ScanRecord) -> String {
    let mut out = String::with_capacity(64 * (record.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let counts = record.kind() == RecordKind::Counts;
    for (k, ((x, v), e)) in record
        .positions()
        .iter()
        .zip(record.values())
        .zip(record.expected())
        .enumerate()
    {
        let value = if counts { format!("{}", *v as u64) } else { fixed(*v) };
        let _ = writeln!(out, "{k},{},{value},{}", fixed(*x), fixed(*e));
    }
    out
}

pub fn write_csv(record: &ScanRecord, path: &Path) -> Result<()> {
    write_atomic(path, format_csv(record).as_bytes())
}

/// Parses CSV text. Integer values in the `value` column mark a counts
/// record.
pub fn parse_csv(text: &str) -> Result<ScanRecord> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::InvalidRecord(format!("first line must be `{CSV_HEADER}`"))),
    }
    let (mut xs, mut vs, mut es) = (Vec::new(), Vec::new(), Vec::new());
    let mut integer_values = true;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::InvalidRecord(format!("line {}: {what}", i + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 comma-separated fields"));
        }
        let step: usize = fields[0].parse().map_err(|_| bad("step is not an integer"))?;
        if step != xs.len() {
            return Err(bad("steps must count up from 0"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
        xs.push(num(fields[1])?);
        vs.push(num(fields[2])?);
        es.push(num(fields[3])?);
        integer_values &= !fields[2].contains(['.', 'e', 'E']);
    }
    let kind = if integer_values && !vs.is_empty() {
        RecordKind::Counts
    } else {
        RecordKind::AnalyticRate
    };
    ScanRecord::new(xs, vs, es, kind)
}

pub fn read_csv(path: &Path) -> Result<ScanRecord> {
    parse_csv(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn encode_pgm(image: &PatternImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", image.width(), image.height());
    let mut out = Vec::with_capacity(header.len() + image.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend(image.pixels().iter().map(|&p| (p * 255.0).round() as u8));
    out
}

pub fn write_pgm(image: &PatternImage, path: &Path) -> Result<()> {
    write_atomic(path, &encode_pgm(image))
}

/// Decodes a binary PGM (8-bit) into an image centred on the origin with
/// the given pixel pitch.
pub fn decode_pgm(bytes: &[u8], pitch: f64) -> Result<PatternImage> {
    let bad = |what: &str| Error::InvalidRecord(format!("PGM: {what}"));
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(bad("not a binary greymap (P5)"));
    }
    let mut number = || -> Result<usize> { token()?.parse().map_err(|_| bad("malformed header number")) };
    let (width, height, maxval) = (number()?, number()?, number()?);
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit images are supported"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let start = pos + 1;
    let raster = bytes.get(start..start + width * height).ok_or_else(|| bad("raster is truncated"))?;
    let pixels = raster.iter().map(|&b| b as f64 / maxval as f64).collect();
    PatternImage::new(Grid2d::centered(width, height, pitch)?, pixels)
}

pub fn read_pgm(path: &Path, pitch: f64) -> Result<PatternImage> {
    decode_pgm(&std::fs::read(path).map_err(|e| Error::io(path, e))?, pitch)
}

/// Outcome of the fitting stage of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub source: String,
    pub fit: std::result::Result<FitResult, String>,
    /// Extra `key = value` lines (beat estimates, expectations).
    pub extras: Vec<(String, String)>,
}

impl FitReport {
    pub fn render(&self) -> String {
        let mut out = format!("{FIT_REPORT_HEADER}\n");
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("source", self.source.clone());
        match &self.fit {
            Err(msg) => {
                put("status", "failed".into());
                put("error", msg.replace('\n', " "));
            }
            Ok(fit) => {
                put("status", if fit.converged { "converged" } else { "not-converged" }.into());
                put("identifiable", fit.identifiable.to_string());
                put("iterations", fit.iterations.to_string());
                put("residual_norm", fixed(fit.residual_norm));
                match fit.parameters {
                    FitParameters::Product {
                        amplitude,
                        offset,
                        period_1,
                        period_2,
                        phase_1,
                        phase_2,
                    } => {
                        put("model", "product".into());
                        put("amplitude", fixed(amplitude));
                        put("offset", fixed(offset));
                        put("period_1_mm", fixed(period_1));
                        put("period_2_mm", fixed(period_2));
                        put("phase_1_mm", fixed(phase_1));
                        put("phase_2_mm", fixed(phase_2));
                    }
                    FitParameters::Envelope {
                        amplitude,
                        offset,
                        period,
                        phase,
                    } => {
                        put("model", "envelope".into());
                        put("amplitude", fixed(amplitude));
                        put("offset", fixed(offset));
                        put("period_mm", fixed(period));
                        put("phase_mm", fixed(phase));
                    }
                }
            }
        }
        for (k, v) in &self.extras {
            put(k, v.clone());
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// `key=value` pairs of a rendered report, in order.
pub fn parse_fit_report(text: &str) -> Result<Vec<(String, String)>> {
    let mut lines = text.lines();
    if lines.next() != Some(FIT_REPORT_HEADER) {
        return Err(Error::InvalidRecord(format!("fit report must start with `{FIT_REPORT_HEADER}`")));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::InvalidRecord(format!("fit report line `{l}` has no `=`")))
        })
        .collect()
}
