//! Charged Fock-space deformations in 1+1 and 2+1 dimensions, checked
//! numerically on truncated Fock spaces over quadrature-discretized mass shells.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`]: doubled symmetric Fock space, ladder operators, charge, `C`, `J`,
//!   and an occupation-number dense oracle.
//! * [`funcs`]: deformation functions on the strip `0 <= Im z <= pi`.
//! * [`deform2d`]: deformed ladder operators and fields in two dimensions.
//! * [`geom3d`]: covering group of the 2+1 Lorentz group, Wigner rotations,
//!   paths of wedges and winding numbers.
//! * [`deform3d`]: intertwiners, multiplication operators and fields in three dimensions.
//! * [`waves`]: Gaussian test packets and two-particle scattering.
//! * [`campaign`]: configuration, checks and reports driven by the CLI.

// `!(x > 0.0)` is the NaN-rejecting form used throughout; index loops mirror
// the quadrature sums they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod campaign;
pub mod config;
pub mod deform2d;
pub mod deform3d;
pub mod error;
pub mod exec;
pub mod fock;
pub mod funcs;
pub mod geom3d;
pub mod phase;
pub mod quad;
pub mod waves;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
