use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{singular_values, DenseMatrix};
use crate::error::{Error, Result};

/// Iteration cap for the spectral-norm power iteration.
pub const SPECTRAL_MAX_ITERS: usize = 200;
/// Relative change in the Rayleigh quotient at which power iteration stops.
pub const SPECTRAL_REL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormKind {
    Frobenius,
    /// Largest singular value.
    Spectral,
    /// Sum of singular values.
    Nuclear,
    /// Sum of absolute entries.
    L1,
    /// Largest absolute entry.
    Linf,
    /// Largest Euclidean norm over all rows and all columns.
    Linf2,
}

impl NormKind {
    pub const ALL: [NormKind; 6] = [
        NormKind::Frobenius,
        NormKind::Spectral,
        NormKind::Nuclear,
        NormKind::L1,
        NormKind::Linf,
        NormKind::Linf2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NormKind::Frobenius => "frobenius",
            NormKind::Spectral => "spectral",
            NormKind::Nuclear => "nuclear",
            NormKind::L1 => "l1",
            NormKind::Linf => "linf",
            NormKind::Linf2 => "linf2",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NormKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown norm kind {s:?}")))
    }
}

pub fn norm(m: &DenseMatrix, kind: NormKind) -> Result<f64> {
    m.ensure_finite()?;
    Ok(match kind {
        NormKind::Frobenius => m.frobenius(),
        NormKind::Spectral => spectral_norm(m),
        NormKind::Nuclear => singular_values(m)?.iter().sum(),
        NormKind::L1 => m.as_slice().iter().map(|x| x.abs()).sum(),
        NormKind::Linf => m.max_abs(),
        NormKind::Linf2 => linf2(m),
    })
}

/// `max(max_i ‖row_i‖₂, max_j ‖col_j‖₂)`.
pub fn linf2(m: &DenseMatrix) -> f64 {
    let mut col_sq = vec![0.0; m.cols()];
    let mut best_row = 0.0_f64;
    for i in 0..m.rows() {
        let row = m.row(i);
        let mut acc = 0.0;
        for (c, &x) in col_sq.iter_mut().zip(row) {
            acc += x * x;
            *c += x * x;
        }
        best_row = best_row.max(acc);
    }
    let best_col = col_sq.into_iter().fold(0.0_f64, f64::max);
    best_row.max(best_col).sqrt()
}

/// Spectral norm by power iteration on `MᵀM`.
///
/// Starts from a fixed Gaussian vector, stops once the Rayleigh quotient
/// changes by less than [`SPECTRAL_REL_TOL`] (relative) or after
/// [`SPECTRAL_MAX_ITERS`] iterations, whichever comes first.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    spectral_norm_with(m, SPECTRAL_MAX_ITERS, SPECTRAL_REL_TOL)
}

/// [`spectral_norm`] with an explicit iteration cap and tolerance.
pub fn spectral_norm_with(m: &DenseMatrix, max_iters: usize, rel_tol: f64) -> f64 {
    let (n1, n2) = m.shape();
    if n1 == 0 || n2 == 0 || m.max_abs() == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5eed);
    let mut x: Vec<f64> = (0..n2).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut x);
    let mut estimate = 0.0_f64;
    for _ in 0..max_iters.max(1) {
        let y = mat_vec(m, &x);
        let mut z = mat_t_vec(m, &y);
        // Rayleigh quotient of MᵀM at unit x
        let rayleigh = y.iter().map(|v| v * v).sum::<f64>();
        let converged = (rayleigh - estimate).abs() <= rel_tol * rayleigh;
        estimate = rayleigh;
        if normalize(&mut z) == 0.0 || converged {
            break;
        }
        x = z;
    }
    estimate.sqrt()
}

fn mat_vec(m: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| m.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn mat_t_vec(m: &DenseMatrix, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (i, &yi) in y.iter().enumerate() {
        for (o, &a) in out.iter_mut().zip(m.row(i)) {
            *o += a * yi;
        }
    }
    out
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_block_diagonal;

    #[test]
    fn identity_linf2_is_one() {
        assert_eq!(norm(&DenseMatrix::identity(7), NormKind::Linf2).unwrap(), 1.0);
    }

    #[test]
    fn block_diagonal_norms_by_direct_count() {
        for &(n, r) in &[(12usize, 3usize), (20, 4), (30, 5)] {
            let m = gen_block_diagonal(n, r).unwrap();
            assert_eq!(norm(&m, NormKind::Linf).unwrap(), 1.0);
            let expected = ((n / r) as f64).sqrt();
            assert!((norm(&m, NormKind::Linf2).unwrap() - expected).abs() < 1e-12);
            assert_eq!(norm(&m, NormKind::L1).unwrap(), (n * n / r) as f64);
            // r blocks, each with a single nonzero singular value n/r
            assert!((norm(&m, NormKind::Spectral).unwrap() - (n / r) as f64).abs() < 1e-9);
            assert!((norm(&m, NormKind::Nuclear).unwrap() - n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn spectral_matches_svd_on_rectangular_input() {
        let m = DenseMatrix::from_fn(9, 6, |i, j| ((i * 7 + j * 3) % 11) as f64 - 4.0);
        let exact = singular_values(&m).unwrap()[0];
        assert!((spectral_norm(&m) - exact).abs() <= 1e-6 * exact);
    }

    #[test]
    fn parses_kind_names() {
        for kind in NormKind::ALL {
            assert_eq!(kind.name().parse::<NormKind>().unwrap(), kind);
        }
        assert!("max".parse::<NormKind>().is_err());
    }

    #[test]
    fn zero_matrix_has_zero_norms() {
        let z = DenseMatrix::zeros(3, 5);
        for kind in NormKind::ALL {
            assert_eq!(norm(&z, kind).unwrap(), 0.0);
        }
    }
}
