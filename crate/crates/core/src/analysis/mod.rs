//! Beat-period arithmetic, least-squares fits of the cos² fringe models and
//! a periodogram-based beat estimator.

mod beat;
mod fit;
mod record;
mod spectrum;

pub use beat::{expected_beat_period, large_peak_spacing, BeatPeriod};
pub use fit::{
    decimate_to_envelope, envelope_model, fit_envelope_cos2, fit_envelope_cos2_with, fit_product_cos2,
    fit_product_cos2_with, product_model, EnvelopeInit, FitModel, FitOptions, FitParameters, FitResult,
    ProductInit,
};
pub use record::{RecordKind, ScanRecord};
pub use spectrum::{beat_from_spectrum, periodogram, spectral_peaks, Periodogram, SpectralBeat, SpectralPeak};
