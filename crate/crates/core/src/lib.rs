//! Sampling versus approximation numbers on the periodic spaces `H_gamma`.
//!
//! The crate computes exact worst-case errors of the Dirichlet-kernel
//! recovery `S_n` and the midpoint rule `Q_n`, optimal quadrature on
//! truncated spaces, certified lower bounds for integration built on the
//! Schur-product rank-one inequality, and the block composition behind the
//! infinite-trace construction.
//!
//! Modules follow the data flow: [`seq`] (spectral data) feeds [`space`]
//! (kernel and norms), which feeds [`sampling`], [`recovery`] and
//! [`certify`]; [`trace_infty`] is independent; [`report`] serializes
//! results.

pub mod certify;
pub mod error;
pub mod recovery;
pub mod sampling;
pub mod seq;
pub mod report;
pub mod space;
pub mod trace_infty;

pub use error::{Error, Result};
pub use seq::{Bounded, DecaySequence, Profile, Provenance, SpectralSequence};
