//! Stability analysis and simulation of the continuum Kuramoto model.
//!
//! The crate is `no_std` with `alloc`; file formats, the CLI and parallel
//! drivers live in the `kuramoto` companion crate. The default `std` feature
//! only swaps the pure-Rust `libm` routines for the platform math library,
//! which is several times faster for the trigonometry-heavy ensemble solver.
#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod bifurcation;
pub mod ensemble;
mod error;
pub mod freqdist;
pub mod linstab;
pub mod oa;
pub mod pls;
pub mod quad;
pub mod spectral;
pub mod volterra;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// `f64` math for `no_std` builds; with std linked the inherent methods
/// shadow these.
pub(crate) mod prelude {
    #[cfg_attr(any(test, feature = "std"), allow(unused_imports))]
    pub use num_traits::Float;
}
