use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{shrink, shrink_singular_values, svd, DenseMatrix};
use crate::error::Result;

/// Below this dimension a dense SVD is cheap enough to use every time.
const DENSE_CUTOFF: usize = 64;
const OVERSAMPLE: usize = 8;
const MAX_SWEEPS: usize = 8;
/// Ritz residual, relative to the largest singular value, accepted as
/// converged.
const RITZ_TOL: f64 = 1e-12;

/// Singular-value thresholding for a sequence of slowly varying matrices.
///
/// Each call runs block subspace iteration started from the right singular
/// vectors kept by the previous call, widening the block until its smallest
/// Ritz value drops to the threshold. Every retained triplet must satisfy
/// `‖Gᵀu − σv‖ ≤ 1e-12·σ₁`; when that fails, or the block grows past half the
/// dimension, the call falls back to a dense SVD.
#[derive(Clone, Debug)]
pub struct Svt {
    basis: Option<DenseMatrix>,
    rng: ChaCha8Rng,
    dense_fallbacks: usize,
}

impl Default for Svt {
    fn default() -> Self {
        Self::new()
    }
}

impl Svt {
    pub fn new() -> Self {
        Svt {
            basis: None,
            rng: ChaCha8Rng::seed_from_u64(0x5b7),
            dense_fallbacks: 0,
        }
    }

    /// Number of calls answered by a dense SVD.
    pub fn dense_fallbacks(&self) -> usize {
        self.dense_fallbacks
    }

    /// `SVT_τ(g)` with its rank and nuclear norm, as
    /// [`shrink_singular_values`].
    pub fn apply(&mut self, g: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, usize, f64)> {
        let (n1, n2) = g.shape();
        let small = n1.min(n2);
        if small <= DENSE_CUTOFF {
            return shrink_singular_values(g, tau);
        }
        g.ensure_finite()?;
        let kept = self.basis.as_ref().map_or(0, DenseMatrix::cols);
        let mut k = (kept + OVERSAMPLE).max(2 * OVERSAMPLE);
        let mut q = self.start_block(n2, k);
        let mut sweeps = 0;
        loop {
            if 2 * k > small || sweeps >= MAX_SWEEPS {
                return self.dense(g, tau);
            }
            sweeps += 1;
            let (qw, r) = gram_schmidt(&g.matmul(&q));
            let small_svd = svd(&r, None)?;
            let u = qw.matmul(&small_svd.u);
            let v = q.matmul(&small_svd.v);
            let sigma = &small_svd.singular_values;
            let gtu = g.t_matmul(&u);
            let rank = sigma.iter().take_while(|&&s| s > tau).count();
            let top = sigma.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
            let residual = |j: usize| -> f64 {
                (0..n2)
                    .map(|i| {
                        let d = gtu[(i, j)] - sigma[j] * v[(i, j)];
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt()
            };
            // retained triplets must be accurate; the next Ritz value, pushed
            // up by its residual, must still sit at or below τ
            let converged = (0..rank).all(|j| residual(j) <= RITZ_TOL * top)
                && (rank == k || sigma[rank] + residual(rank) <= tau);
            if rank == k {
                // block too narrow: widen with fresh directions and retry
                k *= 2;
                q = gram_schmidt(&gtu.hstack(&self.gaussian(n2, k - gtu.cols()))?).0;
                continue;
            }
            if converged {
                let scaled = DenseMatrix::from_fn(n1, rank, |i, j| u[(i, j)] * shrink(sigma[j], tau));
                let x = scaled.matmul_t(&v.leading_columns(rank));
                let nuclear = sigma[..rank].iter().map(|&s| s - tau).sum();
                self.basis = Some(v.leading_columns(rank));
                return Ok((x, rank, nuclear));
            }
            q = gram_schmidt(&gtu).0;
        }
    }

    fn start_block(&mut self, n: usize, k: usize) -> DenseMatrix {
        let fresh = k - self.basis.as_ref().map_or(0, DenseMatrix::cols);
        let random = self.gaussian(n, fresh);
        match &self.basis {
            Some(b) if b.cols() > 0 => gram_schmidt(&b.hstack(&random).expect("row counts agree")).0,
            _ => gram_schmidt(&random).0,
        }
    }

    fn gaussian(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut self.rng))
    }

    fn dense(&mut self, g: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, usize, f64)> {
        self.dense_fallbacks += 1;
        let f = svd(g, None)?;
        let rank = f.singular_values.iter().take_while(|&&s| s > tau).count();
        let scaled = DenseMatrix::from_fn(g.rows(), rank, |i, j| f.u[(i, j)] * shrink(f.singular_values[j], tau));
        let x = scaled.matmul_t(&f.v.leading_columns(rank));
        let nuclear = f.singular_values[..rank].iter().map(|&s| s - tau).sum();
        self.basis = Some(f.v.leading_columns(rank));
        Ok((x, rank, nuclear))
    }
}

/// Thin QR `A = QR` by classical Gram–Schmidt with one full
/// reorthogonalization pass. A column that vanishes against its predecessors
/// gets a zero `Q` column and a zero diagonal in `R`.
fn gram_schmidt(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (n, k) = a.shape();
    // columns stored contiguously
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| a.column(j)).collect();
    let mut r = DenseMatrix::zeros(k, k);
    for j in 0..k {
        let original = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        for _pass in 0..2 {
            for i in 0..j {
                let dot: f64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
                r[(i, j)] += dot;
                let (head, tail) = cols.split_at_mut(j);
                for (y, x) in tail[0].iter_mut().zip(&head[i]) {
                    *y -= dot * x;
                }
            }
        }
        let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-14 * original.max(f64::MIN_POSITIVE) && norm > 0.0 {
            r[(j, j)] = norm;
            cols[j].iter_mut().for_each(|x| *x /= norm);
        } else {
            cols[j].iter_mut().for_each(|x| *x = 0.0);
        }
    }
    let q = DenseMatrix::from_fn(n, k, |i, j| cols[j][i]);
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_random_low_rank;
    use crate::sampling::RngSeed;

    #[test]
    fn matches_dense_thresholding_on_noisy_low_rank() {
        let (m, _) = gen_random_low_rank(120, 100, 6, RngSeed(3)).unwrap();
        let noise = DenseMatrix::from_fn(120, 100, |i, j| 1e-3 * (((i * 31 + j * 17) % 23) as f64 - 11.0));
        let g = &m.scale(10.0) + &noise;
        let mut svt = Svt::new();
        for tau in [5.0, 1.0, 0.5] {
            let (x, rank, nuc) = svt.apply(&g, tau).unwrap();
            let (xd, rd, nd) = shrink_singular_values(&g, tau).unwrap();
            assert_eq!(rank, rd);
            assert!((&x - &xd).frobenius() <= 1e-9 * xd.frobenius().max(1.0));
            assert!((nuc - nd).abs() <= 1e-9 * nd.max(1.0));
        }
    }

    #[test]
    fn zero_rank_when_threshold_exceeds_spectrum() {
        let (m, _) = gen_random_low_rank(80, 80, 3, RngSeed(1)).unwrap();
        let (x, rank, nuc) = Svt::new().apply(&m, 10.0).unwrap();
        assert_eq!(rank, 0);
        assert_eq!(nuc, 0.0);
        assert_eq!(x, DenseMatrix::zeros(80, 80));
    }

    #[test]
    fn wide_spectrum_falls_back_to_dense() {
        let (m, _) = gen_random_low_rank(70, 70, 70, RngSeed(2)).unwrap();
        let mut svt = Svt::new();
        let (x, rank, _) = svt.apply(&m, 0.0).unwrap();
        assert_eq!(rank, 70);
        assert!((&x - &m).frobenius() < 1e-9 * m.frobenius());
        assert_eq!(svt.dense_fallbacks(), 1);
    }
}
