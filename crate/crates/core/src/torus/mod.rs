//! Characters of the d-torus and the affine automorphisms acting on them.

mod error;
mod index;
mod irrational;
mod phase;
mod system;
mod vector;

pub use error::TorusError;
pub use index::{CharIndex, Coords, PrimeSet, Residues};
pub use irrational::{dist_to_integer, ratio_to_turns, turns_to_f64, unit, Irrational, Turns};
pub use phase::Phase;
pub use system::{
    determinant, evaluate, finite_order_bound, has_root_of_unity_eigenvalue, index_phase, invariant_projection, pushforward, system_power,
    transpose, AffineSystem, IntMatrix, ORBIT_BITS, ORBIT_CAP,
};
pub use vector::{char_combine, char_inner, char_mul, CharVector};
