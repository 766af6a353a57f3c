//! Simulation laboratory for the 3D cluster (RBH) model with Z2 x Z2 1-form symmetry.
//!
//! The crate is organised around a mod-2 chain complex on the periodic cubic
//! lattice ([`homology`]). On top of it sit:
//!
//! - [`loopgas`]: the 1-form-symmetric Gibbs ensemble as a product loop gas
//!   over pairs of (primal, dual) 1-cycles, sampled exactly at tiny sizes and
//!   by Metropolis MCMC otherwise, plus the Peierls tail bound.
//! - [`membrane`]: membrane order parameters with local error correction near
//!   the membrane boundaries, and the localizable-entanglement witness.
//! - [`restore`]: iid Z-noise on the unprotected thermal state, 1-form
//!   syndrome extraction, matching decoders, and logical-error-rate sweeps
//!   along the Nishimori line.
//! - [`gauging`]: symbolic Pauli algebra over chains and the gauging duality
//!   (trivial model -> two 3D toric codes; cluster model -> its Hadamard image).
//! - [`disentangle2d`]: the 2D triangular-lattice model with onsite Z2
//!   symmetry, sink statistics, the layered disentangling circuit, and dense
//!   small-instance oracles.
//! - [`runio`]: run manifests, atomic result persistence, and compensated
//!   aggregation shared by the CLI subcommands.

pub mod disentangle2d;
pub mod error;
pub mod gauging;
pub mod gf2;
pub mod homology;
pub mod loopgas;
pub mod membrane;
pub mod restore;
pub mod runio;

pub use error::{Error, Result};
