//! Exact twisted (q-difference) differential operators over closed p-adic annuli.
//!
//! The crate is layered bottom-up:
//! - [`padic`], [`lognorm`], [`qcomb`]: scalars at fixed precision, exact magnitudes, q-combinatorics;
//! - [`annulus`]: the annulus algebra, its Gauss norm and endomorphisms `x -> qx + h`;
//! - [`twisted`]: divided-power operators, the `xi^(n)` basis, Taylor expansions, radii;
//! - [`deformation`]: change of endomorphism and the confluence of connections.

pub mod error;
pub mod lognorm;
pub mod padic;
pub mod qcomb;
pub mod annulus;
pub mod twisted;
pub mod deformation;
pub mod config;
pub mod io;
pub mod verify;

pub use error::{Error, Result};
pub use lognorm::{LogNorm, Radius};
pub use padic::{NormValue, PadicContext, PadicScalar, ZeroStatus};
