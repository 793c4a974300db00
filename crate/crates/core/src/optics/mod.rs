//! Transverse grids, intensity masks, detector apertures and 1-D paraxial
//! propagation.

mod field;
mod grid;
mod mask;

pub use field::{intensity_correlation, FieldGrid};
pub use grid::SpatialGrid;
pub use mask::{make_grating, Aperture, Profile, TransmissionMask};
