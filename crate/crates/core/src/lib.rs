pub mod correlate;
pub mod experiments;
pub mod numeric;
pub mod seq;
pub mod spectral;
pub mod torus;
