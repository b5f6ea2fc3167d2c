use super::{SolverOptions, BALANCE_RATIO, PENALTY_CAP_RATIO};
use crate::error::{Error, Result};
use crate::linalg::{shrink, spectral_norm_with, DenseMatrix, Svt, SPECTRAL_MAX_ITERS};

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub low_rank: DenseMatrix,
    pub sparse: DenseMatrix,
    pub lambda_used: f64,
    pub iterations: usize,
    /// `‖A − L − S‖_F / ‖A‖_F` at exit.
    pub final_residual: f64,
    pub converged: bool,
}

/// `1/√max(n1, n2)`.
pub fn default_lambda(rows: usize, cols: usize) -> f64 {
    1.0 / (rows.max(cols).max(1) as f64).sqrt()
}

/// Low-rank plus sparse split
///
/// ```text
/// minimize ‖L‖_* + λ‖S‖_1  subject to  L + S = A
/// ```
///
/// by the inexact augmented Lagrangian method:
///
/// ```text
/// Y0 = A / max(‖A‖, ‖A‖_∞/λ),   μ0 = 1.25/‖A‖
/// S ← shrink(A − L + Y/μ, λ/μ)       (entrywise)
/// L ← SVT_{1/μ}(A − S + Y/μ)
/// Y ← Y + μ(A − L − S)
/// ```
///
/// `μ` grows or shrinks by `growth` whenever the primal residual
/// `‖A − L − S‖/‖A‖` and the dual residual `μ‖ΔL‖/‖Y‖` differ by more than a
/// factor of 10, capped at `1e10·μ0`; both must fall below `rel_tol`.
///
/// `lambda` defaults to [`default_lambda`].
pub fn decompose(
    a: &DenseMatrix,
    lambda: Option<f64>,
    opts: &SolverOptions,
) -> Result<DecompositionResult> {
    opts.validate()?;
    a.ensure_finite()?;
    let (n1, n2) = a.shape();
    let lambda = lambda.unwrap_or_else(|| default_lambda(n1, n2));
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    let a_norm = a.frobenius();
    if a_norm == 0.0 {
        return Ok(DecompositionResult {
            low_rank: a.clone(),
            sparse: a.clone(),
            lambda_used: lambda,
            iterations: 0,
            final_residual: 0.0,
            converged: true,
        });
    }
    let spectral = spectral_norm_with(a, SPECTRAL_MAX_ITERS, opts.inner_tol);
    let dual_scale = spectral.max(a.max_abs() / lambda);
    let mut y = a.scale(1.0 / dual_scale);
    let mut mu = opts.penalty_init.unwrap_or(1.25 / spectral);
    let mu_max = mu * PENALTY_CAP_RATIO;
    let mut low = DenseMatrix::zeros(n1, n2);
    let mut sparse = DenseMatrix::zeros(n1, n2);
    let mut g = DenseMatrix::zeros(n1, n2);
    let mut svt = Svt::new();
    let mut residual = 1.0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        iterations += 1;
        let t = lambda / mu;
        for (((s, &ak), &lk), &yk) in sparse
            .as_mut_slice()
            .iter_mut()
            .zip(a.as_slice())
            .zip(low.as_slice())
            .zip(y.as_slice())
        {
            let v = ak - lk + yk / mu;
            *s = v.signum() * shrink(v.abs(), t);
        }
        for (((gk, &ak), &sk), &yk) in g
            .as_mut_slice()
            .iter_mut()
            .zip(a.as_slice())
            .zip(sparse.as_slice())
            .zip(y.as_slice())
        {
            *gk = ak - sk + yk / mu;
        }
        let previous = std::mem::replace(&mut low, svt.apply(&g, 1.0 / mu)?.0);
        let step = (&low - &previous).frobenius();

        let mut res_sq = 0.0;
        for (((yk, &ak), &lk), &sk) in y
            .as_mut_slice()
            .iter_mut()
            .zip(a.as_slice())
            .zip(low.as_slice())
            .zip(sparse.as_slice())
        {
            let z = ak - lk - sk;
            res_sq += z * z;
            *yk += mu * z;
        }
        residual = res_sq.sqrt() / a_norm;
        let dual = mu * step / y.frobenius().max(f64::MIN_POSITIVE);
        if residual <= opts.rel_tol && dual <= opts.rel_tol {
            converged = true;
            break;
        }
        if residual > BALANCE_RATIO * dual {
            mu = (mu * opts.penalty_growth).min(mu_max);
        } else if dual > BALANCE_RATIO * residual {
            mu /= opts.penalty_growth;
        }
    }
    Ok(DecompositionResult {
        low_rank: low,
        sparse,
        lambda_used: lambda,
        iterations,
        final_residual: residual,
        converged,
    })
}
