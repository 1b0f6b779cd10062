//! Numerical and symbolic laboratory for the skew-product automorphisms
//!
//! ```text
//! Psi_alpha(z0, z1, z2) = (z0 + z1 + z0^q z2^d, z0, alpha z2)
//! ```
//!
//! of `C^3`: overflow-safe orbit computation, Green functions with a-posteriori
//! error bounds, the stable-manifold series, a point classifier and exact
//! polynomial algebra for degree growth and indeterminacy loci.

pub mod analysis;
pub mod cli;
pub mod dynsys;
pub mod error;
pub mod green;
pub mod numcore;
pub mod parallel;
pub mod symalg;

pub use error::{Error, Result};
pub use numcore::{LogMagnitude, ScaledComplex};

/// The golden ratio `(1 + sqrt 5) / 2`.
pub const PHI: f64 = 1.618_033_988_749_895;

/// The conjugate root `-1 / PHI` of `x^2 = x + 1`.
pub const PHI_CONJ: f64 = -0.618_033_988_749_894_9;
