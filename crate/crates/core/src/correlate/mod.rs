//! Finite-N correlation data of vector sequences: Cesàro correlation
//! profiles, averaged norms, product averages and box-intersection measures.

mod boxes;
mod orbit;
mod profile;

use thiserror::Error;

pub use boxes::{
    arcs_intersection, box_measure, half_overlap, interval_measure_exact, Arc, BoxMeasure, Cell, Preimage, Region,
};
pub use orbit::Orbit;
pub use profile::{
    averaged_norm, cesaro_correlation, cesaro_cross, orbit_average, product_average, CorrelationProfile, Schedule,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrelateError {
    #[error("orbit generator failed at n = {n}: {reason}")]
    Generator { n: u64, reason: String },
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("invalid region: {0}")]
    Region(String),
    #[error("exact interval path needs rotations")]
    NotRotation,
    #[error("grid error bound {bound:.3e} at resolution {resolution} exceeds tolerance {tolerance:.3e}; resolution {required} required")]
    ResolutionTooSmall { resolution: u64, bound: f64, tolerance: f64, required: u64 },
}
