//! Dense kernels: storage, SVD, norms, observation masks and tangent-space
//! projections.

mod mask;
mod matrix;
mod norms;
mod projection;
mod svd;
mod svt;

pub use mask::{masked, ObservationMask};
pub(crate) use mask::apply_mask;
pub use matrix::DenseMatrix;
pub use norms::{linf2, norm, spectral_norm, spectral_norm_with, NormKind, SPECTRAL_MAX_ITERS, SPECTRAL_REL_TOL};
pub use projection::{
    project_structured_tangent, project_tangent, project_tangent_complement, StructuredTangent,
    SubspacePair, TangentSpace, CONTAINMENT_TOL, ORTHONORMAL_TOL,
};
pub(crate) use projection::check_orthonormal;
pub use svt::Svt;
pub use svd::{orthonormalize, shrink, shrink_singular_values, singular_values, svd, SvdFactors};
