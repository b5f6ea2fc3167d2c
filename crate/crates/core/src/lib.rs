//! Low-rank matrix recovery from partial or corrupted observations.
//!
//! * [`linalg`]: dense matrices, SVD, norms, masks, tangent projections.
//! * [`sampling`]: Bernoulli masks, golfing partitions, degree trimming.
//! * [`instances`]: incoherence measures and instance generators.
//! * [`solvers`]: nuclear-norm completion, trimmed SVD projection,
//!   structured completion, low-rank plus sparse decomposition.
//! * [`certificate`]: golfing-scheme dual certificates and their checks.
//! * [`formats`]: plain-text readers and writers for matrices, masks and
//!   manifests.

pub mod certificate;
pub mod error;
pub mod formats;
pub mod instances;
pub mod linalg;
pub mod sampling;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, ObservationMask, SubspacePair};
pub use sampling::RngSeed;
