//! Special functions, stable reductions, 1-D maximization and seeded random streams.

mod optimize;
pub(crate) mod reduce;
mod rng;
pub(crate) mod special;

pub use optimize::{maximize_1d, Maximum};
pub use reduce::log_sum_exp;
pub use rng::RngHandle;
pub use special::{digamma, log_gamma};
