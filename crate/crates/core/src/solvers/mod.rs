//! Recovery algorithms.

mod completion;
mod decomposition;
mod projection;

pub use completion::{complete_nuclear, complete_structured, reconstruct_structured};
pub use decomposition::{decompose, default_lambda, DecompositionResult};
pub use projection::{evaluate_svd_bounds, svd_project, weyl_check, SvdBounds, WeylCheck};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Relative error below which a recovery counts as exact.
pub const SUCCESS_THRESHOLD: f64 = 1e-4;

/// Ratio between the penalty cap and its initial value.
pub(crate) const PENALTY_CAP_RATIO: f64 = 1e10;
/// Largest tolerated ratio between primal and dual residuals before the
/// penalty is rebalanced.
pub(crate) const BALANCE_RATIO: f64 = 10.0;

/// Options shared by the augmented Lagrangian solvers.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Stop once the relative constraint residual falls to this value.
    pub rel_tol: f64,
    /// Initial penalty `μ0`; solver-specific default when `None`.
    pub penalty_init: Option<f64>,
    pub penalty_growth: f64,
    /// Relative tolerance for the spectral norm used in the default `μ0`.
    pub inner_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 500,
            rel_tol: 1e-7,
            penalty_init: None,
            penalty_growth: 1.5,
            inner_tol: 1e-9,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be positive".into()));
        }
        if !positive(self.rel_tol) || !positive(self.inner_tol) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if let Some(mu) = self.penalty_init {
            if !positive(mu) {
                return Err(Error::Parameter(format!("penalty_init must be positive, got {mu}")));
            }
        }
        if !(self.penalty_growth.is_finite() && self.penalty_growth > 1.0) {
            return Err(Error::Parameter(format!(
                "penalty_growth must exceed 1, got {}",
                self.penalty_growth
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub estimate: DenseMatrix,
    pub iterations: usize,
    /// `‖P_Ω(estimate − M)‖_F / ‖P_Ω M‖_F` at exit.
    pub final_residual: f64,
    pub converged: bool,
    /// Nuclear norm of the iterate after each sweep.
    pub objective_trace: Vec<f64>,
}

/// `‖estimate − truth‖_F / ‖truth‖_F`, or the absolute error for a zero truth.
pub fn relative_error(estimate: &DenseMatrix, truth: &DenseMatrix) -> f64 {
    let diff = (estimate - truth).frobenius();
    let scale = truth.frobenius();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_options_are_valid() {
        let o = SolverOptions::default();
        assert_eq!(o.max_iters, 500);
        assert_eq!(o.rel_tol, 1e-7);
        assert_eq!(o.penalty_growth, 1.5);
        o.validate().unwrap();
    }

    #[test]
    fn invalid_options_are_rejected() {
        let bad = [
            SolverOptions { max_iters: 0, ..Default::default() },
            SolverOptions { rel_tol: 0.0, ..Default::default() },
            SolverOptions { penalty_growth: 1.0, ..Default::default() },
            SolverOptions { penalty_init: Some(-1.0), ..Default::default() },
            SolverOptions { inner_tol: f64::NAN, ..Default::default() },
        ];
        for o in bad {
            assert!(matches!(o.validate(), Err(Error::Parameter(_))));
        }
    }
}
