//! Incoherence measures and test-instance generators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, DenseMatrix, SubspacePair};
use crate::sampling::RngSeed;

/// Smallest parameters satisfying the standard and joint incoherence
/// conditions for a pair of singular subspaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncoherenceReport {
    pub mu0: f64,
    pub mu1: f64,
    pub mu0_row: f64,
    pub mu0_col: f64,
    pub rank: usize,
}

impl IncoherenceReport {
    pub fn of(s: &SubspacePair) -> Self {
        let (mu0_row, mu0_col) = standard_incoherence(s);
        IncoherenceReport {
            mu0: mu0_row.max(mu0_col),
            mu1: joint_incoherence(s),
            mu0_row,
            mu0_col,
            rank: s.rank(),
        }
    }
}

fn max_row_norm_sq(q: &DenseMatrix) -> f64 {
    (0..q.rows())
        .map(|i| q.row(i).iter().map(|x| x * x).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `(n1/r · max_i ‖Uᵀe_i‖², n2/r · max_j ‖Vᵀe_j‖²)`.
pub fn standard_incoherence(s: &SubspacePair) -> (f64, f64) {
    let r = s.rank() as f64;
    let (n1, n2) = s.shape();
    (
        n1 as f64 / r * max_row_norm_sq(s.u()),
        n2 as f64 / r * max_row_norm_sq(s.v()),
    )
}

/// `n1·n2/r · max_ij (UVᵀ)_ij²`.
pub fn joint_incoherence(s: &SubspacePair) -> f64 {
    let (n1, n2) = s.shape();
    let m = s.sign_matrix().max_abs();
    (n1 * n2) as f64 / s.rank() as f64 * m * m
}

/// `(n/r)·max_i ‖Qᵀe_i‖²` for a single orthonormal basis.
pub fn basis_incoherence(q: &DenseMatrix) -> f64 {
    q.rows() as f64 / q.cols() as f64 * max_row_norm_sq(q)
}

/// `r` diagonal all-ones blocks of size `n/r`.
pub fn gen_block_diagonal(n: usize, r: usize) -> Result<DenseMatrix> {
    if r == 0 || !n.is_multiple_of(r) {
        return Err(Error::Parameter(format!(
            "block count {r} must be positive and divide n = {n}"
        )));
    }
    let b = n / r;
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        if i / b == j / b {
            1.0
        } else {
            0.0
        }
    }))
}

/// Block-indicator basis `U = V` of [`gen_block_diagonal`], each column
/// scaled by `√(r/n)`.
pub fn block_diagonal_subspaces(n: usize, r: usize) -> Result<SubspacePair> {
    if r == 0 || !n.is_multiple_of(r) {
        return Err(Error::Parameter(format!(
            "block count {r} must be positive and divide n = {n}"
        )));
    }
    let b = n / r;
    let scale = (1.0 / b as f64).sqrt();
    let u = DenseMatrix::from_fn(n, r, |i, k| if i / b == k { scale } else { 0.0 });
    SubspacePair::new(u.clone(), u)
}

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `M = U diag(σ) Vᵀ` with `U`, `V` orthonormalized Gaussian factors and
/// `σ_i ~ Uniform[1, 2]`.
pub fn gen_random_low_rank(
    n1: usize,
    n2: usize,
    r: usize,
    seed: RngSeed,
) -> Result<(DenseMatrix, SubspacePair)> {
    if r == 0 || r > n1.min(n2) {
        return Err(Error::Parameter(format!(
            "rank {r} must lie in 1..={}",
            n1.min(n2)
        )));
    }
    let mut rng = seed.rng();
    let u = orthonormalize(&gaussian(n1, r, &mut rng));
    let v = orthonormalize(&gaussian(n2, r, &mut rng));
    let sigma: Vec<f64> = (0..r).map(|_| rng.random_range(1.0..=2.0)).collect();
    let us = DenseMatrix::from_fn(n1, r, |i, k| u[(i, k)] * sigma[k]);
    let m = us.matmul_t(&v);
    Ok((m, SubspacePair::new(u, v)?))
}

/// Clustering affinity matrix with a side-information basis.
#[derive(Clone, Debug)]
pub struct ClusteringInstance {
    pub affinity: DenseMatrix,
    pub cluster_assignment: Vec<usize>,
    pub n_min: usize,
    /// Normalized cluster indicators: the singular subspaces of `affinity`.
    pub truth: SubspacePair,
    /// `Ū`, an orthonormal basis containing `col(truth.u())`.
    pub side_basis: DenseMatrix,
    pub mu0_side: f64,
}

impl ClusteringInstance {
    pub fn clusters(&self) -> usize {
        self.truth.rank()
    }

    pub fn side_subspaces(&self) -> Result<SubspacePair> {
        SubspacePair::new(self.side_basis.clone(), self.side_basis.clone())
    }
}

/// Random cluster labels with the given sizes. `Ū` is the indicator basis
/// followed by `ambient_noise_dims` random directions orthogonal to it.
pub fn gen_clustering(
    n: usize,
    cluster_sizes: &[usize],
    ambient_noise_dims: usize,
    seed: RngSeed,
) -> Result<ClusteringInstance> {
    let total: usize = cluster_sizes.iter().sum();
    if total != n {
        return Err(Error::Parameter(format!(
            "cluster sizes sum to {total}, expected n = {n}"
        )));
    }
    if cluster_sizes.contains(&0) || cluster_sizes.is_empty() {
        return Err(Error::Parameter("cluster sizes must be positive".into()));
    }
    let r = cluster_sizes.len();
    if r + ambient_noise_dims > n {
        return Err(Error::Parameter(format!(
            "side rank {} exceeds n = {n}",
            r + ambient_noise_dims
        )));
    }
    let mut rng = seed.rng();
    let mut labels: Vec<usize> = cluster_sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect();
    labels.shuffle(&mut rng);

    let affinity = DenseMatrix::from_fn(n, n, |i, j| {
        if labels[i] == labels[j] {
            1.0
        } else {
            0.0
        }
    });
    let u = DenseMatrix::from_fn(n, r, |i, c| {
        if labels[i] == c {
            (1.0 / cluster_sizes[c] as f64).sqrt()
        } else {
            0.0
        }
    });
    let side_basis = if ambient_noise_dims == 0 {
        u.clone()
    } else {
        let g = gaussian(n, ambient_noise_dims, &mut rng);
        // project out col(U) twice for numerical orthogonality
        let mut resid = g;
        for _ in 0..2 {
            let proj = u.matmul(&u.t_matmul(&resid));
            resid.axpy(-1.0, &proj);
        }
        u.hstack(&orthonormalize(&resid))?
    };
    let mu0_side = basis_incoherence(&side_basis);
    Ok(ClusteringInstance {
        affinity,
        cluster_assignment: labels,
        n_min: *cluster_sizes.iter().min().unwrap(),
        truth: SubspacePair::new(u.clone(), u)?,
        side_basis,
        mu0_side,
    })
}

/// Planted-clique graph reduced to a low-rank plus sparse problem.
#[derive(Clone, Debug)]
pub struct PlantedCliqueInstance {
    /// `Ā`: G(n, 1/2) with the clique planted; clique nodes carry self-loops.
    pub adjacency: DenseMatrix,
    /// Sorted clique node indices.
    pub clique: Vec<usize>,
    /// `A`: `Ā` after symmetric pair subsampling.
    pub reduced: DenseMatrix,
    pub l_true: DenseMatrix,
    pub s_true: DenseMatrix,
}

impl PlantedCliqueInstance {
    pub fn n(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn is_clique_member(&self) -> Vec<bool> {
        let mut member = vec![false; self.n()];
        for &i in &self.clique {
            member[i] = true;
        }
        member
    }
}

/// Probability with which each pair of `Ā` is zeroed in the reduction.
/// With this value every pair of `S* = A − L*` is nonzero with probability
/// 1/3, on and off the clique.
pub const CLIQUE_ZERO_PROBABILITY: f64 = 1.0 / 3.0;

pub fn gen_planted_clique(n: usize, n_min: usize, seed: RngSeed) -> Result<PlantedCliqueInstance> {
    gen_planted_clique_with(n, n_min, CLIQUE_ZERO_PROBABILITY, seed)
}

/// Planted clique of size `n_min` in G(n, 1/2), followed by zeroing each
/// symmetric pair `{i, j}` of `Ā` independently with probability
/// `zero_probability`.
pub fn gen_planted_clique_with(
    n: usize,
    n_min: usize,
    zero_probability: f64,
    seed: RngSeed,
) -> Result<PlantedCliqueInstance> {
    if n_min == 0 || n_min > n {
        return Err(Error::Parameter(format!(
            "clique size {n_min} must lie in 1..={n}"
        )));
    }
    if !(0.0..=1.0).contains(&zero_probability) {
        return Err(Error::Parameter(format!(
            "zeroing probability must lie in [0, 1], got {zero_probability}"
        )));
    }
    let mut rng = seed.rng();
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut rng);
    let mut clique = nodes[..n_min].to_vec();
    clique.sort_unstable();
    let mut member = vec![false; n];
    for &i in &clique {
        member[i] = true;
    }

    let mut adjacency = DenseMatrix::zeros(n, n);
    let mut reduced = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let edge = if member[i] && member[j] {
                true
            } else if i == j {
                false
            } else {
                rng.random::<bool>()
            };
            // drawn for every pair so the stream does not depend on the edge
            let keep = rng.random::<f64>() >= zero_probability;
            if edge {
                adjacency[(i, j)] = 1.0;
                adjacency[(j, i)] = 1.0;
                if keep {
                    reduced[(i, j)] = 1.0;
                    reduced[(j, i)] = 1.0;
                }
            }
        }
    }
    let l_true = DenseMatrix::from_fn(n, n, |i, j| {
        if member[i] && member[j] {
            1.0
        } else {
            0.0
        }
    });
    let s_true = &reduced - &l_true;
    Ok(PlantedCliqueInstance {
        adjacency,
        clique,
        reduced,
        l_true,
        s_true,
    })
}

/// Rank-one subspaces of a clique indicator: `U = V = 1_C / √n_min`.
pub fn clique_subspaces(n: usize, clique: &[usize]) -> Result<SubspacePair> {
    if clique.is_empty() || clique.iter().any(|&i| i >= n) {
        return Err(Error::Parameter("clique indices out of range".into()));
    }
    let s = 1.0 / (clique.len() as f64).sqrt();
    let mut u = DenseMatrix::zeros(n, 1);
    for &i in clique {
        u[(i, 0)] = s;
    }
    SubspacePair::new(u.clone(), u)
}

/// Nodes touched by the support of `low_rank` after zeroing entries at or
/// below `threshold`, sorted.
pub fn clique_from_low_rank(low_rank: &DenseMatrix, threshold: f64) -> Result<Vec<usize>> {
    if !low_rank.is_square() {
        return Err(Error::Parameter(format!(
            "clique recovery needs a square matrix, got {}x{}",
            low_rank.rows(),
            low_rank.cols()
        )));
    }
    let n = low_rank.rows();
    Ok((0..n)
        .filter(|&i| (0..n).any(|j| low_rank[(i, j)] > threshold || low_rank[(j, i)] > threshold))
        .collect())
}

/// Keeps every node adjacent in `adjacency` to at least `3/4` of `core`
/// (a node counts as adjacent to itself). An empty core stays empty.
pub fn refine_clique(adjacency: &DenseMatrix, core: &[usize]) -> Result<Vec<usize>> {
    let n = adjacency.rows();
    adjacency.ensure_shape(n, n)?;
    if core.iter().any(|&i| i >= n) {
        return Err(Error::Parameter("clique indices out of range".into()));
    }
    if core.is_empty() {
        return Ok(Vec::new());
    }
    Ok((0..n)
        .filter(|&i| {
            let hits = core.iter().filter(|&&j| j == i || adjacency[(i, j)] > 0.5).count();
            4 * hits >= 3 * core.len()
        })
        .collect())
}
