use faer::Mat;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Thin singular value decomposition `M ≈ U · diag(σ) · Vᵀ`.
///
/// Singular values are nonincreasing and nonnegative. Each left singular
/// vector is signed so that its largest-magnitude entry is positive, with the
/// matching right vector flipped alongside it.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U · diag(σ) · Vᵀ` using the leading `k` triplets.
    pub fn reconstruct_rank(&self, k: usize) -> DenseMatrix {
        let k = k.min(self.rank());
        let us = DenseMatrix::from_fn(self.u.rows(), k, |i, j| {
            self.u[(i, j)] * self.singular_values[j]
        });
        us.matmul_t(&self.v.leading_columns(k))
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_rank(self.rank())
    }

    /// Number of singular values strictly above `tol`.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > tol).count()
    }
}

/// Thin SVD backed by a Golub–Kahan bidiagonalization with implicit-shift QR
/// (divide and conquer for larger blocks).
///
/// With `max_rank`, only the leading `max_rank` triplets are kept.
pub fn svd(m: &DenseMatrix, max_rank: Option<usize>) -> Result<SvdFactors> {
    m.ensure_finite()?;
    let (n1, n2) = m.shape();
    let k = n1.min(n2);
    if k == 0 {
        return Ok(SvdFactors {
            u: DenseMatrix::zeros(n1, 0),
            singular_values: Vec::new(),
            v: DenseMatrix::zeros(n2, 0),
        });
    }
    let decomposition = m.view().thin_svd().map_err(|_| Error::NoConvergence {
        what: "bidiagonal SVD",
        // faer's iteration budget for a k-by-k bidiagonal block
        iterations: 32 * k * k,
    })?;
    let keep = max_rank.map_or(k, |r| r.min(k));
    let s = decomposition.S().column_vector();
    // faer does not always return the values in order (exactly repeated
    // values on structured inputs come back scattered)
    let order = descending_order((0..k).map(|i| s[i]));
    let order = &order[..keep];
    let singular_values: Vec<f64> = order.iter().map(|&i| s[i]).collect();
    let mut u = copy_columns(decomposition.U(), order);
    let mut v = copy_columns(decomposition.V(), order);
    normalize_signs(&mut u, &mut v);
    Ok(SvdFactors {
        u,
        singular_values,
        v,
    })
}

/// Singular values only.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    m.ensure_finite()?;
    if m.rows().min(m.cols()) == 0 {
        return Ok(Vec::new());
    }
    let k = m.rows().min(m.cols());
    let mut values = m.view().singular_values().map_err(|_| Error::NoConvergence {
        what: "bidiagonal SVD",
        iterations: 32 * k * k,
    })?;
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

fn descending_order(values: impl Iterator<Item = f64>) -> Vec<usize> {
    let values: Vec<f64> = values.collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

fn copy_columns(src: faer::MatRef<'_, f64>, columns: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(src.nrows(), columns.len(), |i, j| src[(i, columns[j])])
}

fn normalize_signs(u: &mut DenseMatrix, v: &mut DenseMatrix) {
    for j in 0..u.cols() {
        let mut pivot = 0.0_f64;
        for i in 0..u.rows() {
            let x = u[(i, j)];
            if x.abs() > pivot.abs() {
                pivot = x;
            }
        }
        if pivot < 0.0 {
            for i in 0..u.rows() {
                u[(i, j)] = -u[(i, j)];
            }
            for i in 0..v.rows() {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
}

/// Orthonormal basis for the column space of `a` (thin QR, `Q` factor).
pub fn orthonormalize(a: &DenseMatrix) -> DenseMatrix {
    if a.cols() == 0 {
        return a.clone();
    }
    let q: Mat<f64> = a.view().qr().compute_thin_Q();
    DenseMatrix::from_faer(q.as_ref())
}

/// Singular-value soft thresholding: `U · diag(max(σ − τ, 0)) · Vᵀ`.
///
/// Returns the thresholded matrix, its rank and its nuclear norm.
pub fn shrink_singular_values(m: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, usize, f64)> {
    let factors = svd(m, None)?;
    let shrunk: Vec<f64> = factors
        .singular_values
        .iter()
        .map(|&s| shrink(s, tau))
        .collect();
    let rank = shrunk.iter().take_while(|&&s| s > 0.0).count();
    let nuclear = shrunk.iter().sum();
    let thresholded = SvdFactors {
        singular_values: shrunk,
        ..factors
    }
    .reconstruct_rank(rank);
    Ok((thresholded, rank, nuclear))
}

/// Scalar soft threshold `max(σ − τ, 0)` for nonnegative `σ`.
#[inline]
pub fn shrink(sigma: f64, tau: f64) -> f64 {
    (sigma - tau).max(0.0)
}
