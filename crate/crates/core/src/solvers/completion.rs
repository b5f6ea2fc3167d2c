use super::{SolverOptions, SolverResult, BALANCE_RATIO, PENALTY_CAP_RATIO};
use crate::error::{Error, Result};
use crate::linalg::{
    apply_mask, check_orthonormal, singular_values, spectral_norm_with, DenseMatrix,
    ObservationMask, Svt, SPECTRAL_MAX_ITERS,
};

fn prepare(
    m_obs: &DenseMatrix,
    mask: &ObservationMask,
    opts: &SolverOptions,
) -> Result<DenseMatrix> {
    opts.validate()?;
    m_obs.ensure_shape(mask.rows(), mask.cols())?;
    if mask.is_empty() {
        return Err(Error::Parameter("observation mask is empty".into()));
    }
    let d = apply_mask(m_obs, mask, 1.0);
    d.ensure_finite()?;
    Ok(d)
}

/// One primal step: given `G` and `μ`, returns the fitted `n1×n2` matrix, the
/// iterate reported as the estimate, and the iterate's nuclear norm.
type PrimalStep<'a> = dyn FnMut(&DenseMatrix, f64) -> Result<(DenseMatrix, DenseMatrix, f64)> + 'a;

/// Augmented Lagrangian loop for `fit(X) + E = D`, `E` supported off Ω.
///
/// ```text
/// X ← primal(D − E + Y/μ, μ)
/// E ← P_Ω⊥(D − fit(X) + Y/μ)
/// Y ← Y + μ(D − fit(X) − E)
/// ```
///
/// Primal residual `r = ‖P_Ω(D − fit(X))‖_F / ‖D‖_F`, dual residual
/// `s = μ‖E − E_prev‖_F / ‖Y‖_F`. The penalty grows by `penalty_growth` when
/// `r > 10 s`, shrinks by the same factor when `s > 10 r`, and never exceeds
/// `1e10·μ0`. The loop stops when both residuals are at most `rel_tol`.
fn augmented_lagrangian(
    d: &DenseMatrix,
    mask: &ObservationMask,
    opts: &SolverOptions,
    estimate_shape: (usize, usize),
    primal: &mut PrimalStep<'_>,
) -> Result<SolverResult> {
    let (n1, n2) = d.shape();
    let d_norm = d.frobenius();
    let mut observed = vec![false; n1 * n2];
    for &k in mask.linear_indices() {
        observed[k] = true;
    }
    let mut mu = opts
        .penalty_init
        .unwrap_or_else(|| 1.0 / spectral_norm_with(d, SPECTRAL_MAX_ITERS, opts.inner_tol));
    let mu_max = mu * PENALTY_CAP_RATIO;
    let mut y = DenseMatrix::zeros(n1, n2);
    let mut e = DenseMatrix::zeros(n1, n2);
    let mut g = DenseMatrix::zeros(n1, n2);
    let mut trace = Vec::new();
    let mut estimate = DenseMatrix::zeros(estimate_shape.0, estimate_shape.1);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        iterations += 1;
        for (((gk, &dk), &ek), &yk) in g
            .as_mut_slice()
            .iter_mut()
            .zip(d.as_slice())
            .zip(e.as_slice())
            .zip(y.as_slice())
        {
            *gk = dk - ek + yk / mu;
        }
        let (fit, x, nuclear) = primal(&g, mu)?;
        trace.push(nuclear);
        estimate = x;

        let mut res_sq = 0.0;
        let mut step_sq = 0.0;
        let (ds, fs) = (d.as_slice(), fit.as_slice());
        let es = e.as_mut_slice();
        let ys = y.as_mut_slice();
        for k in 0..ds.len() {
            let previous = es[k];
            if observed[k] {
                es[k] = 0.0;
                let r = ds[k] - fs[k];
                res_sq += r * r;
                ys[k] += mu * r;
            } else {
                es[k] = ds[k] - fs[k] + ys[k] / mu;
                ys[k] += mu * (ds[k] - fs[k] - es[k]);
            }
            step_sq += (es[k] - previous) * (es[k] - previous);
        }
        residual = res_sq.sqrt() / d_norm;
        let dual = mu * step_sq.sqrt() / y.frobenius().max(f64::MIN_POSITIVE);
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
    Ok(SolverResult {
        estimate,
        iterations,
        final_residual: residual,
        converged,
        objective_trace: trace,
    })
}

/// Minimum nuclear norm completion
///
/// ```text
/// minimize ‖X‖_*  subject to  X_ij = M_ij for (i, j) ∈ Ω
/// ```
///
/// by the inexact augmented Lagrangian method on `X + E = P_Ω M`, `E`
/// supported off Ω, with singular-value thresholding as the `X` step:
///
/// ```text
/// X ← SVT_{1/μ}(P_Ω M − E + Y/μ)
/// E ← P_Ω⊥(P_Ω M − X + Y/μ)
/// Y ← Y + μ(P_Ω M − X − E)
/// ```
///
/// `μ0 = 1/‖P_Ω M‖` unless set in `opts`. The penalty is adapted to keep
/// the primal and dual residuals within a factor 10 of each other and the
/// run stops when both fall to `rel_tol`.
///
/// Entries of `m_obs` outside the mask are ignored.
pub fn complete_nuclear(
    m_obs: &DenseMatrix,
    mask: &ObservationMask,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    let d = prepare(m_obs, mask, opts)?;
    if mask.is_full() || d.frobenius() == 0.0 {
        let nuclear = singular_values(&d)?.iter().sum();
        return Ok(SolverResult {
            estimate: d,
            iterations: 0,
            final_residual: 0.0,
            converged: true,
            objective_trace: vec![nuclear],
        });
    }
    let mut svt = Svt::new();
    let mut step = |g: &DenseMatrix, mu: f64| {
        let (x, _, nuclear) = svt.apply(g, 1.0 / mu)?;
        Ok((x.clone(), x, nuclear))
    };
    augmented_lagrangian(&d, mask, opts, d.shape(), &mut step)
}

/// Completion with side information
///
/// ```text
/// minimize ‖X‖_*  subject to  P_Ω(Ū X V̄ᵀ) = P_Ω M
/// ```
///
/// over `X ∈ R^{r̄1×r̄2}`. The scheme of [`complete_nuclear`] applies to
/// `ŪXV̄ᵀ + E = P_Ω M`; since `Ū` and `V̄` have orthonormal columns the `X`
/// step is exact: `X ← SVT_{1/μ}(Ūᵀ(P_Ω M − E + Y/μ)V̄)`.
///
/// The returned estimate is `X`; see [`reconstruct_structured`].
pub fn complete_structured(
    m_obs: &DenseMatrix,
    mask: &ObservationMask,
    u_bar: &DenseMatrix,
    v_bar: &DenseMatrix,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    let d = prepare(m_obs, mask, opts)?;
    let (n1, n2) = d.shape();
    if u_bar.rows() != n1 || v_bar.rows() != n2 {
        return Err(Error::DimensionMismatch {
            expected: (n1, n2),
            found: (u_bar.rows(), v_bar.rows()),
        });
    }
    check_orthonormal(u_bar, "Ū")?;
    check_orthonormal(v_bar, "V̄")?;
    let d_norm = d.frobenius();
    if mask.is_full() || d_norm == 0.0 {
        let x = u_bar.t_matmul(&d).matmul(v_bar);
        let fitted = reconstruct_structured(u_bar, &x, v_bar);
        let residual = if d_norm > 0.0 {
            (&fitted - &d).frobenius() / d_norm
        } else {
            0.0
        };
        let nuclear = singular_values(&x)?.iter().sum();
        return Ok(SolverResult {
            estimate: x,
            iterations: 0,
            final_residual: residual,
            converged: residual <= opts.rel_tol,
            objective_trace: vec![nuclear],
        });
    }
    let mut svt = Svt::new();
    let mut step = |g: &DenseMatrix, mu: f64| {
        let reduced = u_bar.t_matmul(g).matmul(v_bar);
        let (x, _, nuclear) = svt.apply(&reduced, 1.0 / mu)?;
        Ok((reconstruct_structured(u_bar, &x, v_bar), x, nuclear))
    };
    augmented_lagrangian(&d, mask, opts, (u_bar.cols(), v_bar.cols()), &mut step)
}

/// `Ū X V̄ᵀ`.
pub fn reconstruct_structured(u_bar: &DenseMatrix, x: &DenseMatrix, v_bar: &DenseMatrix) -> DenseMatrix {
    u_bar.matmul(x).matmul_t(v_bar)
}
