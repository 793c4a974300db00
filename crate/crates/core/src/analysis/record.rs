use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    /// Normalised analytic coincidence rate.
    AnalyticRate,
    /// Integer photocounts.
    Counts,
}

/// One scan: abscissa (G2 displacement, mm), measured values, and the
/// model expectation for each step.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    positions: Vec<f64>,
    values: Vec<f64>,
    expected: Vec<f64>,
    kind: RecordKind,
}

impl ScanRecord {
    pub fn new(positions: Vec<f64>, values: Vec<f64>, expected: Vec<f64>, kind: RecordKind) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidRecord("record is empty".into()));
        }
        if positions.len() != values.len() || positions.len() != expected.len() {
            return Err(Error::InvalidRecord(format!(
                "column lengths differ: {} positions, {} values, {} expected",
                positions.len(),
                values.len(),
                expected.len()
            )));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidRecord("positions must be finite".into()));
        }
        if let Some(k) = positions.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidRecord(format!(
                "positions must increase strictly (step {})",
                k + 1
            )));
        }
        if values.iter().chain(&expected).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidRecord("values must be finite and non-negative".into()));
        }
        if kind == RecordKind::Counts && values.iter().any(|v| v.fract() != 0.0) {
            return Err(Error::InvalidRecord("counts must be integers".into()));
        }
        Ok(ScanRecord {
            positions,
            values,
            expected,
            kind,
        })
    }

    /// Analytic record whose expectation equals its values.
    pub fn analytic(positions: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let expected = values.clone();
        Self::new(positions, values, expected, RecordKind::AnalyticRate)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn expected(&self) -> &[f64] {
        &self.expected
    }

    pub fn kind(&self) -> RecordKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Values and expectations multiplied by `factor > 0`; the result is an
    /// analytic-rate record (e.g. counts normalised by the mean pair number).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid("scale factor", format!("must be positive, got {factor}")));
        }
        Self::new(
            self.positions.clone(),
            self.values.iter().map(|v| v * factor).collect(),
            self.expected.iter().map(|v| v * factor).collect(),
            RecordKind::AnalyticRate,
        )
    }

    /// The same samples at positions shifted by `delta`.
    pub fn translated(&self, delta: f64) -> Result<Self> {
        Self::new(
            self.positions.iter().map(|x| x + delta).collect(),
            self.values.clone(),
            self.expected.clone(),
            self.kind,
        )
    }
}
