use super::{svd, DenseMatrix};
use crate::error::{Error, Result};

/// Frobenius tolerance on `UᵀU − I` for a factor to count as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Frobenius tolerance on `ŪŪᵀU − U` for subspace containment.
pub const CONTAINMENT_TOL: f64 = 1e-8;

/// Orthonormal bases `U` (n1×r) and `V` (n2×r) of the column and row spaces
/// of a rank-r matrix.
#[derive(Clone, Debug)]
pub struct SubspacePair {
    u: DenseMatrix,
    v: DenseMatrix,
}

impl SubspacePair {
    pub fn new(u: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        if u.cols() != v.cols() {
            return Err(Error::Structural(format!(
                "U has {} columns but V has {}",
                u.cols(),
                v.cols()
            )));
        }
        check_orthonormal(&u, "U")?;
        check_orthonormal(&v, "V")?;
        Ok(Self { u, v })
    }

    /// Singular subspaces of the leading `rank` triplets of `m`.
    pub fn from_matrix(m: &DenseMatrix, rank: usize) -> Result<Self> {
        if rank > m.rows().min(m.cols()) {
            return Err(Error::Parameter(format!(
                "rank {rank} exceeds the dimensions of a {}x{} matrix",
                m.rows(),
                m.cols()
            )));
        }
        let f = svd(m, Some(rank))?;
        Self::new(f.u, f.v)
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.u.rows(), self.v.rows())
    }

    /// `U · Vᵀ`.
    pub fn sign_matrix(&self) -> DenseMatrix {
        self.u.matmul_t(&self.v)
    }

    fn project_unchecked(&self, z: &DenseMatrix) -> DenseMatrix {
        // UUᵀZ + ZVVᵀ − UUᵀZVVᵀ = U(UᵀZ − UᵀZVVᵀ) + (ZV)Vᵀ
        let utz = self.u.t_matmul(z);
        let zv = z.matmul(&self.v);
        let utzv = utz.matmul(&self.v);
        let mut left = utz;
        left.axpy(-1.0, &utzv.matmul_t(&self.v));
        let mut out = self.u.matmul(&left);
        out.axpy(1.0, &zv.matmul_t(&self.v));
        out
    }
}

pub(crate) fn check_orthonormal(q: &DenseMatrix, name: &str) -> Result<()> {
    let err = (&q.t_matmul(q) - &DenseMatrix::identity(q.cols())).frobenius();
    if err <= ORTHONORMAL_TOL {
        Ok(())
    } else {
        Err(Error::Structural(format!(
            "{name} is not orthonormal (‖{name}ᵀ{name} − I‖_F = {err:.3e})"
        )))
    }
}

/// Orthogonal projection onto the tangent space `T` at a low-rank point and
/// onto its complement, together with the sign matrix `UVᵀ` that a dual
/// certificate has to match on `T`.
pub trait TangentSpace {
    fn shape(&self) -> (usize, usize);
    fn project(&self, z: &DenseMatrix) -> DenseMatrix;
    fn project_complement(&self, z: &DenseMatrix) -> DenseMatrix;
    fn sign_matrix(&self) -> DenseMatrix;
}

impl TangentSpace for SubspacePair {
    fn shape(&self) -> (usize, usize) {
        SubspacePair::shape(self)
    }

    fn project(&self, z: &DenseMatrix) -> DenseMatrix {
        self.project_unchecked(z)
    }

    fn project_complement(&self, z: &DenseMatrix) -> DenseMatrix {
        let mut out = z.clone();
        out.axpy(-1.0, &self.project_unchecked(z));
        out
    }

    fn sign_matrix(&self) -> DenseMatrix {
        SubspacePair::sign_matrix(self)
    }
}

/// `P_T(Z) = UUᵀZ + ZVVᵀ − UUᵀZVVᵀ`.
pub fn project_tangent(s: &SubspacePair, z: &DenseMatrix) -> Result<DenseMatrix> {
    let (n1, n2) = s.shape();
    z.ensure_shape(n1, n2)?;
    Ok(s.project_unchecked(z))
}

/// `P_T⊥(Z) = Z − P_T(Z)`.
pub fn project_tangent_complement(s: &SubspacePair, z: &DenseMatrix) -> Result<DenseMatrix> {
    let (n1, n2) = s.shape();
    z.ensure_shape(n1, n2)?;
    Ok(TangentSpace::project_complement(s, z))
}

/// Tangent space of a low-rank matrix whose column and row spaces are known
/// to lie inside the side-information subspaces `col(Ū)` and `col(V̄)`.
///
/// ```text
/// P_T Z  = UUᵀ Z V̄V̄ᵀ + ŪŪᵀ Z VVᵀ − UUᵀ Z VVᵀ
/// P_T⊥ Z = (ŪŪᵀ − UUᵀ) Z (V̄V̄ᵀ − VVᵀ)
/// ```
///
/// so that `P_T Z + P_T⊥ Z = ŪŪᵀ Z V̄V̄ᵀ`.
#[derive(Clone, Debug)]
pub struct StructuredTangent {
    inner: SubspacePair,
    outer: SubspacePair,
}

impl StructuredTangent {
    pub fn new(inner: SubspacePair, outer: SubspacePair) -> Result<Self> {
        if inner.shape() != outer.shape() {
            return Err(Error::DimensionMismatch {
                expected: inner.shape(),
                found: outer.shape(),
            });
        }
        check_containment(outer.u(), inner.u(), "col(U) ⊄ col(Ū)")?;
        check_containment(outer.v(), inner.v(), "col(V) ⊄ col(V̄)")?;
        Ok(Self { inner, outer })
    }

    pub fn inner(&self) -> &SubspacePair {
        &self.inner
    }

    pub fn outer(&self) -> &SubspacePair {
        &self.outer
    }

    /// `ŪŪᵀ Z V̄V̄ᵀ`.
    pub fn project_outer(&self, z: &DenseMatrix) -> DenseMatrix {
        let (ub, vb) = (self.outer.u(), self.outer.v());
        ub.matmul(&ub.t_matmul(z).matmul(vb)).matmul_t(vb)
    }
}

fn check_containment(outer: &DenseMatrix, inner: &DenseMatrix, what: &str) -> Result<()> {
    let projected = outer.matmul(&outer.t_matmul(inner));
    let err = (&projected - inner).frobenius();
    if err <= CONTAINMENT_TOL {
        Ok(())
    } else {
        Err(Error::Structural(format!("{what} (residual {err:.3e})")))
    }
}

impl TangentSpace for StructuredTangent {
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn project(&self, z: &DenseMatrix) -> DenseMatrix {
        let (u, v) = (self.inner.u(), self.inner.v());
        let (ub, vb) = (self.outer.u(), self.outer.v());
        let utz = u.t_matmul(z);
        let zv = z.matmul(v);
        // UUᵀ Z V̄V̄ᵀ
        let mut out = u.matmul(&utz.matmul(vb)).matmul_t(vb);
        // ŪŪᵀ Z VVᵀ
        out.axpy(1.0, &ub.matmul(&ub.t_matmul(&zv)).matmul_t(v));
        // UUᵀ Z VVᵀ
        out.axpy(-1.0, &u.matmul(&utz.matmul(v)).matmul_t(v));
        out
    }

    fn project_complement(&self, z: &DenseMatrix) -> DenseMatrix {
        let (u, v) = (self.inner.u(), self.inner.v());
        let (ub, vb) = (self.outer.u(), self.outer.v());
        let mut left = ub.matmul(&ub.t_matmul(z));
        left.axpy(-1.0, &u.matmul(&u.t_matmul(z)));
        let mut out = left.matmul(vb).matmul_t(vb);
        out.axpy(-1.0, &left.matmul(v).matmul_t(v));
        out
    }

    fn sign_matrix(&self) -> DenseMatrix {
        self.inner.sign_matrix()
    }
}

/// Structured tangent projection (`complement = false`) or its complement.
pub fn project_structured_tangent(
    inner: &SubspacePair,
    outer: &SubspacePair,
    z: &DenseMatrix,
    complement: bool,
) -> Result<DenseMatrix> {
    let t = StructuredTangent::new(inner.clone(), outer.clone())?;
    let (n1, n2) = t.shape();
    z.ensure_shape(n1, n2)?;
    Ok(if complement {
        t.project_complement(z)
    } else {
        t.project(z)
    })
}
