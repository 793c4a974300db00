//! Moiré fringes in two-photon coincidence images.
//!
//! The crate models the coincidence profile measured behind two gratings that
//! sit in different beams of a parametric down-conversion source, either one
//! grating in the pump and one in the idler arm ([`engine::SetupKind::PumpIdler`])
//! or one in each of the signal and idler arms, read in the advanced-wave
//! picture ([`engine::SetupKind::SignalIdler`]). On top of the analytic model
//! sit a photocount Monte Carlo, least-squares fits of the cos² models, a
//! spectral beat estimator and a classical 2-D moiré renderer that doubles as
//! an independent oracle for the coincidence integral.
//!
//! Lengths are millimetres throughout; wavelengths are nanometres.

pub mod analysis;
pub mod classical;
pub mod engine;
mod error;
pub mod harness;
pub mod optics;
pub mod photocount;
mod quadrature;

pub use error::{Error, Result};
