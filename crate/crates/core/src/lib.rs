//! Censorship resistance of single-circuit, multi-circuit and coded
//! multi-circuit onion routing.
//!
//! * [`gf`]: GF(2^8) arithmetic.
//! * [`codec`]: systematic (n, k) erasure coding of 512-byte cells in generations.
//! * [`onion`]: routers, circuits, layered encryption and the transfer pipeline.
//! * [`censor`]: bridge pools, random bridge selection and Monte Carlo campaigns.
//! * [`analytics`]: exact blocking probabilities and an enumeration oracle.
//!
//! The analytics are generic over [`Scalar`]; [`Exact`] and [`Real`] are the
//! two instantiations used throughout.

pub mod analytics;
pub mod censor;
pub mod codec;
pub mod error;
pub mod gf;
pub mod onion;
pub mod rng;
pub mod scalar;
pub mod variant;

pub use analytics::ExactProbability;
pub use codec::{Cell, CodeParams, CodedCell, Generation, GeneratorMatrix, CELL_SIZE};
pub use error::{Error, Result};
pub use gf::Gf256;
pub use scalar::Scalar;
pub use variant::{TorConfig, Variant};

/// Arbitrary-precision rational, for exact probabilities.
pub type Exact = num_rational::BigRational;

/// Double precision, for plotting and Monte Carlo comparisons.
pub type Real = f64;

/// Single precision.
pub type Real32 = f32;
