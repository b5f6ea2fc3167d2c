use crate::error::{ensure_probability, Error, Result};
use crate::linalg::{apply_mask, linf2, singular_values, svd, DenseMatrix, ObservationMask};
use crate::sampling::trim;

/// Trimmed, rescaled rank-`r` projection
/// `T_r(M̃) = (1/p) Σ_{i≤r} σ̃_i ũ_i ṽ_iᵀ`, where `M̃` is `P_Ω M` with every
/// row and column of degree above `2pn` zeroed.
pub fn svd_project(
    m_obs: &DenseMatrix,
    mask: &ObservationMask,
    p: f64,
    r: usize,
) -> Result<DenseMatrix> {
    let trimmed = trimmed_observations(m_obs, mask, p)?;
    let n = trimmed.rows();
    if r > n {
        return Err(Error::Parameter(format!("rank {r} exceeds n = {n}")));
    }
    if r == 0 {
        return Ok(DenseMatrix::zeros(n, n));
    }
    Ok(svd(&trimmed, Some(r))?.reconstruct().scale(1.0 / p))
}

fn trimmed_observations(m_obs: &DenseMatrix, mask: &ObservationMask, p: f64) -> Result<DenseMatrix> {
    ensure_probability(p, "sampling probability")?;
    m_obs.ensure_shape(mask.rows(), mask.cols())?;
    trim(&apply_mask(m_obs, mask, 1.0), mask, p)
}

/// Right-hand sides of the two spectral-estimator error bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvdBounds {
    /// `c · √(rn/p) · ‖M‖_∞`.
    pub old_bound: f64,
    /// `c′ · (√r·ln n/p · ‖M‖_∞ + √(r·ln n/p) · ‖M‖_{∞,2})`.
    pub new_bound: f64,
}

pub fn evaluate_svd_bounds(
    m: &DenseMatrix,
    p: f64,
    r: usize,
    c_old: f64,
    c_new: f64,
) -> Result<SvdBounds> {
    if !m.is_square() {
        return Err(Error::Parameter("error bounds are stated for square matrices".into()));
    }
    ensure_probability(p, "sampling probability")?;
    m.ensure_finite()?;
    let n = m.rows() as f64;
    let r = r as f64;
    let inf = m.max_abs();
    let log_n = n.ln();
    Ok(SvdBounds {
        old_bound: c_old * (r * n / p).sqrt() * inf,
        new_bound: c_new * (r.sqrt() * log_n / p * inf + (r * log_n / p).sqrt() * linf2(m)),
    })
}

/// Measured singular-value perturbation of the trimmed, rescaled
/// observations against the truth.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylCheck {
    /// `max_i |σ̃_i/p − σ_i|`.
    pub max_gap: f64,
    /// `‖M̃/p − M‖`.
    pub perturbation: f64,
}

impl WeylCheck {
    /// Weyl's inequality with a relative slack of `1e-9` for rounding.
    pub fn holds(&self) -> bool {
        self.max_gap <= self.perturbation * (1.0 + 1e-9) + 1e-12
    }
}

pub fn weyl_check(m: &DenseMatrix, mask: &ObservationMask, p: f64) -> Result<WeylCheck> {
    let trimmed = trimmed_observations(m, mask, p)?.scale(1.0 / p);
    let sigma_obs = singular_values(&trimmed)?;
    let sigma = singular_values(m)?;
    let max_gap = sigma_obs
        .iter()
        .zip(&sigma)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let perturbation = singular_values(&(&trimmed - m))?.first().copied().unwrap_or(0.0);
    Ok(WeylCheck {
        max_gap,
        perturbation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_block_diagonal, gen_random_low_rank};
    use crate::sampling::{sample_bernoulli, RngSeed};
    use crate::solvers::relative_error;

    #[test]
    fn full_observation_recovers_exact_low_rank() {
        let (m, _) = gen_random_low_rank(20, 20, 3, RngSeed(2)).unwrap();
        let est = svd_project(&m, &ObservationMask::full(20, 20), 1.0, 3).unwrap();
        assert!(relative_error(&est, &m) < 1e-8);
    }

    #[test]
    fn rank_zero_gives_zero() {
        let m = gen_block_diagonal(6, 2).unwrap();
        let est = svd_project(&m, &ObservationMask::full(6, 6), 1.0, 0).unwrap();
        assert_eq!(est, DenseMatrix::zeros(6, 6));
        assert!(svd_project(&m, &ObservationMask::full(6, 6), 1.0, 7).is_err());
    }

    #[test]
    fn bounds_by_direct_substitution() {
        let m = DenseMatrix::identity(16);
        let b = evaluate_svd_bounds(&m, 1.0, 2, 1.0, 1.0).unwrap();
        let ln = 16f64.ln();
        assert!((b.old_bound - 32f64.sqrt()).abs() < 1e-12);
        assert!((b.new_bound - (2f64.sqrt() * ln + (2.0 * ln).sqrt())).abs() < 1e-12);
    }

    #[test]
    fn block_diagonal_bound_ordering_depends_on_rank_versus_log_n() {
        // r < ln n: the log factor dominates
        let m = gen_block_diagonal(300, 3).unwrap();
        let b = evaluate_svd_bounds(&m, 0.3, 3, 1.0, 1.0).unwrap();
        assert!(b.new_bound > b.old_bound, "{b:?}");
        // r > ln n: the ‖·‖_{∞,2} term wins
        let m = gen_block_diagonal(300, 30).unwrap();
        let b = evaluate_svd_bounds(&m, 0.5, 30, 1.0, 1.0).unwrap();
        assert!(b.new_bound < b.old_bound, "{b:?}");
    }

    #[test]
    fn weyl_holds_on_a_sample() {
        let m = gen_block_diagonal(60, 3).unwrap();
        let mask = sample_bernoulli(60, 60, 0.3, false, RngSeed(1)).unwrap();
        let w = weyl_check(&m, &mask, 0.3).unwrap();
        assert!(w.holds(), "{w:?}");
        assert!(w.perturbation > 0.0);
    }
}
