//! Two-dimensional compressible two-medium flow on structured grids.
//!
//! Each medium is advanced as a single-medium problem on its real cells plus a
//! ghost band across a level-set interface. Face fluxes come either from the
//! exact Riemann solution or from a second-order generalized Riemann problem
//! (GRP) solver; ghost states are constant (Riemann) or linear (GRP).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod eos;
pub mod error;
pub mod fvm;
pub mod gfm;
pub mod grid;
pub mod grp;
pub mod io;
pub mod levelset;
pub mod riemann;
pub mod sim;
pub mod state;

pub use eos::MaterialEos;
pub use error::{Error, Result};
pub use state::{Conserved, InterfaceFrame, Primitive};
