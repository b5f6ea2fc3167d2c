//! Random observation models.
//!
//! All randomness flows from a [`RngSeed`] through ChaCha8 (the 8-round
//! ChaCha stream cipher used as a counter-based generator), so a mask is a
//! pure function of its parameters and seed on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_probability, Error, Result};
use crate::linalg::{DenseMatrix, ObservationMask};

/// A 64-bit seed. Child seeds for trials, batches and grid points come from
/// [`RngSeed::derive`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Mixes `components` into the seed with the SplitMix64 finalizer:
    /// `h ← mix(h ⊕ mix(c + γ))` for each component `c`, starting from
    /// `h = mix(seed)`, where `γ = 0x9e3779b97f4a7c15`.
    pub fn derive(self, components: &[u64]) -> RngSeed {
        let mut h = splitmix64(self.0);
        for &c in components {
            h = splitmix64(h ^ splitmix64(c.wrapping_add(GOLDEN_GAMMA)));
        }
        RngSeed(h)
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Bernoulli(p) mask: each entry, or each unordered pair `{i, j}` (diagonal
/// included) when `symmetric`, is observed independently with probability
/// `p`.
pub fn sample_bernoulli(
    rows: usize,
    cols: usize,
    p: f64,
    symmetric: bool,
    seed: RngSeed,
) -> Result<ObservationMask> {
    ensure_probability(p, "sampling probability")?;
    if symmetric && rows != cols {
        return Err(Error::Parameter(format!(
            "a symmetric mask needs a square shape, got {rows}x{cols}"
        )));
    }
    let mut rng = seed.rng();
    let mut pairs = Vec::with_capacity(((rows * cols) as f64 * p * 1.1) as usize + 16);
    if symmetric {
        for i in 0..rows {
            for j in i..cols {
                if p >= 1.0 || rng.random::<f64>() < p {
                    pairs.push((i, j));
                    if i != j {
                        pairs.push((j, i));
                    }
                }
            }
        }
    } else {
        for i in 0..rows {
            for j in 0..cols {
                if p >= 1.0 || rng.random::<f64>() < p {
                    pairs.push((i, j));
                }
            }
        }
    }
    ObservationMask::new(rows, cols, p, symmetric, pairs)
}

/// `q = 1 − (1 − p)^(1/k0)`, evaluated without cancellation.
pub fn batch_probability(p: f64, k0: usize) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    -((-p).ln_1p() / k0 as f64).exp_m1()
}

/// `ceil(20 ln n)`, at least 1.
pub fn default_k0(n: usize) -> usize {
    ((20.0 * (n.max(1) as f64).ln()).ceil() as usize).max(1)
}

/// `ceil(20 ln(32 μ̄0 r̄))`, at least 1.
pub fn structured_k0(mu0_side: f64, side_rank: usize) -> usize {
    ((20.0 * (32.0 * mu0_side * side_rank as f64).ln()).ceil() as usize).max(1)
}

/// Independent batches `Ω_1, …, Ω_k0`, each Bernoulli(q), whose union is
/// Bernoulli(p).
#[derive(Clone, Debug)]
pub struct GolfingPartition {
    pub batches: Vec<ObservationMask>,
    pub q: f64,
    pub p: f64,
    pub k0: usize,
}

impl GolfingPartition {
    pub fn shape(&self) -> (usize, usize) {
        self.batches[0].shape()
    }

    /// `Ω = ∪ Ω_k`, recorded with probability `p`.
    pub fn union(&self) -> Result<ObservationMask> {
        let mut acc = self.batches[0].with_probability(self.p)?;
        for b in &self.batches[1..] {
            acc = acc.union(b, self.p)?;
        }
        Ok(acc)
    }
}

pub fn golfing_partition(
    rows: usize,
    cols: usize,
    p: f64,
    k0: usize,
    seed: RngSeed,
) -> Result<GolfingPartition> {
    ensure_probability(p, "sampling probability")?;
    if k0 == 0 {
        return Err(Error::Parameter("k0 must be at least 1".into()));
    }
    let q = batch_probability(p, k0);
    if q <= 0.0 {
        return Err(Error::Parameter(format!(
            "batch probability underflows for p = {p}, k0 = {k0}"
        )));
    }
    let batches = (0..k0)
        .map(|k| sample_bernoulli(rows, cols, q, false, seed.derive(&[k as u64])))
        .collect::<Result<Vec<_>>>()?;
    Ok(GolfingPartition { batches, q, p, k0 })
}

/// Zeroes every row and column of `m_obs` whose observed-entry count in
/// `mask` is strictly above `2pn`.
pub fn trim(m_obs: &DenseMatrix, mask: &ObservationMask, p: f64) -> Result<DenseMatrix> {
    if !m_obs.is_square() {
        return Err(Error::Parameter(format!(
            "trimming is defined for square matrices, got {}x{}",
            m_obs.rows(),
            m_obs.cols()
        )));
    }
    m_obs.ensure_shape(mask.rows(), mask.cols())?;
    ensure_probability(p, "sampling probability")?;
    let n = m_obs.rows();
    let threshold = 2.0 * p * n as f64;
    let heavy = |deg: Vec<usize>| -> Vec<bool> {
        deg.into_iter().map(|d| d as f64 > threshold).collect()
    };
    let heavy_rows = heavy(mask.row_degrees());
    let heavy_cols = heavy(mask.col_degrees());
    let mut out = m_obs.clone();
    for i in 0..n {
        for j in 0..n {
            if heavy_rows[i] || heavy_cols[j] {
                out[(i, j)] = 0.0;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_probability_gives_full_mask() {
        let m = sample_bernoulli(5, 7, 1.0, false, RngSeed(1)).unwrap();
        assert!(m.is_full());
        let s = sample_bernoulli(6, 6, 1.0, true, RngSeed(1)).unwrap();
        assert!(s.is_full() && s.is_symmetric());
    }

    #[test]
    fn rejects_bad_probability() {
        for p in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                sample_bernoulli(3, 3, p, false, RngSeed(0)),
                Err(Error::Parameter(_))
            ));
            assert!(golfing_partition(3, 3, p, 2, RngSeed(0)).is_err());
        }
        assert!(golfing_partition(3, 3, 0.5, 0, RngSeed(0)).is_err());
    }

    #[test]
    fn symmetric_masks_are_mirrored() {
        let m = sample_bernoulli(30, 30, 0.3, true, RngSeed(9)).unwrap();
        for (i, j) in m.iter() {
            assert!(m.contains(j, i));
        }
    }

    #[test]
    fn same_seed_same_mask() {
        let a = sample_bernoulli(20, 15, 0.4, false, RngSeed(77)).unwrap();
        let b = sample_bernoulli(20, 15, 0.4, false, RngSeed(77)).unwrap();
        let c = sample_bernoulli(20, 15, 0.4, false, RngSeed(78)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn derived_seeds_differ_by_component() {
        let base = RngSeed(5);
        assert_ne!(base.derive(&[0, 1]), base.derive(&[1, 0]));
        assert_ne!(base.derive(&[0]), base.derive(&[0, 0]));
        assert_eq!(base.derive(&[3, 4]), base.derive(&[3, 4]));
    }

    #[test]
    fn batch_probability_closed_forms() {
        assert_eq!(batch_probability(0.37, 1), 0.37);
        assert!((batch_probability(0.5, 2) - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert_eq!(batch_probability(1.0, 10), 1.0);
        let q = batch_probability(0.3, 7);
        assert!((1.0 - (1.0 - q).powi(7) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn k0_defaults_use_natural_log() {
        assert_eq!(default_k0(200), 106);
        assert_eq!(default_k0(1), 1);
        assert_eq!(structured_k0(1.0, 20), (20.0 * 640f64.ln()).ceil() as usize);
    }

    #[test]
    fn single_batch_partition_has_q_equal_p() {
        let g = golfing_partition(10, 10, 0.4, 1, RngSeed(3)).unwrap();
        assert_eq!(g.k0, 1);
        assert_eq!(g.q, 0.4);
        assert_eq!(g.union().unwrap().len(), g.batches[0].len());
    }

    #[test]
    fn trim_zeroes_heavy_row_only() {
        let n = 10;
        let m = DenseMatrix::from_fn(n, n, |i, j| (i * n + j) as f64 + 1.0);
        // row 4 observed in 9 places, a handful of scattered entries elsewhere
        let mut pairs: Vec<(usize, usize)> = (0..9).map(|j| (4, j)).collect();
        pairs.extend([(0, 0), (1, 5), (7, 9), (9, 2)]);
        let mask = ObservationMask::new(n, n, 0.3, false, pairs).unwrap();
        let t = trim(&m, &mask, 0.3).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = if i == 4 { 0.0 } else { m[(i, j)] };
                assert_eq!(t[(i, j)], want);
            }
        }
    }

    #[test]
    fn trim_edge_cases() {
        let m = DenseMatrix::from_fn(6, 6, |i, j| (i + j) as f64);
        assert_eq!(trim(&m, &ObservationMask::full(6, 6), 1.0).unwrap(), m);
        let z = DenseMatrix::zeros(6, 6);
        assert_eq!(trim(&z, &ObservationMask::empty(6, 6, 0.2).unwrap(), 0.2).unwrap(), z);
        let rect = DenseMatrix::zeros(3, 4);
        assert!(matches!(
            trim(&rect, &ObservationMask::full(3, 4), 1.0),
            Err(Error::Parameter(_))
        ));
    }
}
