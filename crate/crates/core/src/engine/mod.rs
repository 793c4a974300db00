//! Analytic coincidence-rate model for the pump–idler and signal–idler
//! grating arrangements.
//!
//! Both arrangements reduce to the same product law: with the detectors
//! fixed, the coincidence rate is the aperture average of the effective
//! G1 pattern times the G2 pattern in the plane of G2. They differ only in
//! how G1 reaches that plane: scaled by the image-transfer factor through
//! the pump, or relayed at unit magnification through the advanced-wave
//! chain.

mod config;
mod klyshko;
mod rate;

pub use config::{ExperimentConfig, ScanSchedule, SetupKind, Wavelengths};
pub use klyshko::{klyshko_chain, klyshko_fresnel, FresnelChainReport, KlyshkoMap};
pub use rate::{coincidence_rate, effective_mask_setup1, run_scan, CoincidenceModel};
