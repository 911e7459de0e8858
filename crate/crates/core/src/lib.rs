//! Semi-random beam pairing (SRBP) for sparse multipath massive MIMO channels.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`] builds physical multipath channels, their angular-domain
//!   (virtual) representation and the Bernoulli-mask sparse channel model.
//! - [`spectral`] holds singular-value helpers, water-filling and the two
//!   capacity formulas (full SVD transceiver and per-block SRBP transceiver).
//! - [`srbp`] is the structure-discovery algorithm itself: peel weight-1 rows
//!   into beam pairs, exclude a column when peeling stalls, then gather the
//!   leftover entries into small diagonal blocks.
//! - [`dof`] is the analytical predictor of the average number of beam pairs.
//! - [`montecarlo`] runs seeded, parallel trials and aggregates reports.
//! - [`cli`] is the command-line front end used by the `srbp` binary.
//!
//! ```
//! use rand::SeedableRng;
//! use rand_chacha::ChaCha8Rng;
//! use srbp::channel::{apply_mask, sample_bernoulli_mask};
//! use srbp::srbp::{block_triangulate, extract_blocks, initialize, lower_triangulate};
//! use srbp::spectral::{srbp_capacity, svd_capacity};
//!
//! let mut rng = ChaCha8Rng::seed_from_u64(7);
//! let mask = sample_bernoulli_mask(32, 32, 1.0 / 32.0, &mut rng).unwrap();
//! let channel = apply_mask(&mask, &mut rng);
//!
//! let tri = lower_triangulate(initialize(&mask), &mut rng);
//! let decomp = block_triangulate(&tri, &mask).unwrap();
//! let blocks = extract_blocks(&decomp, &channel).unwrap();
//!
//! let rho = 10.0;
//! let c_srbp = srbp_capacity(&blocks, rho).capacity;
//! let c_svd = svd_capacity(&channel, rho).capacity;
//! assert!(c_srbp <= c_svd + 1e-9);
//! ```

pub mod channel;
pub mod cli;
pub mod dof;
mod error;
pub mod matching;
pub mod montecarlo;
pub mod spectral;
pub mod srbp;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type Complex = num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex>;

/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex>;
