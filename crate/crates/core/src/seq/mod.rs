//! Integer sequences, exact reduction of `k_n x` mod 1, Weyl sums,
//! discrepancy and the sets `R_k`.

mod fixed;
mod rk;
mod spec;
mod weyl;

pub use rk::{rk_enumerate, RkSet, RkSpec, Window};
pub use spec::{diff_profile, seq_eval, seq_values, Exponent, Rational, SeqError, SeqSpec};
pub use weyl::{orbit_points, star_discrepancy, star_discrepancy_of, weyl_sum};
