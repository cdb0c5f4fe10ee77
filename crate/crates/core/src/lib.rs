//! Discrete fractional calculus on uniform meshes `Z_h`.
//!
//! The building blocks are the fractional kernels `Λ^{-α}`, the Poisson
//! translation semigroups, one-sided fractional sums and differences, discrete
//! Hölder norms, and a harness that measures the Schauder-type estimates for
//! fractional operators between Hölder classes.

pub mod acceptance;
pub mod error;
pub mod fracops;
pub mod grid;
pub mod holder;
pub mod kernel;
mod onesided;
pub mod schauder;
pub mod semigroup;
pub mod signal;
pub mod special;

pub use error::{Error, Result};
pub use fracops::{
    delta, delta_left, delta_right, frac_apply, frac_apply_general, frac_apply_series, Method, OperatorSpec,
};
pub use grid::{Extension, Grid, GridFunction, Side};
pub use kernel::{kernel_loggamma, kernel_recurrence, KernelTable};
pub use semigroup::{apply_semigroup, poisson_weights};
