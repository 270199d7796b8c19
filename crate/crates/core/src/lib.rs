//! Three-point energies of weighted point configurations on the unit
//! sphere `S^{d-1}`.
//!
//! The crate evaluates energies `sum w_i w_j w_k K(<x_j,x_k>, <x_i,x_k>, <x_i,x_j>)`
//! for p-frame, triple-product and Gegenbauer-built positive definite
//! kernels, verifies packing and structural certificates, constructs and
//! lifts canonical configurations, and minimizes energies numerically.

// Index loops mirror the matrix formulas; `!(x <= y)` deliberately rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

mod ball;
pub mod certify;
pub mod cli;
pub mod energy;
pub mod error;
pub mod gegenbauer;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod lift;
pub mod optimize;
pub mod sampling;

pub use error::{Error, Result};
pub use geometry::{GramTriple, RawConfig, UnitVector, WeightedConfig};
pub use kernels::{Kernel, KernelSpec};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/gegenbauer.md")]
    pub mod gegenbauer {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    pub mod kernels {}
    #[doc = include_str!("../../../book/src/energy.md")]
    pub mod energy {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    pub mod certificates {}
    #[doc = include_str!("../../../book/src/lifting.md")]
    pub mod lifting {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    pub mod optimization {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
