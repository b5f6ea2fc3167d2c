//! Golfing-scheme dual certificates and numerical checks of the
//! subgradient optimality conditions.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::standard_incoherence;
use crate::linalg::{
    apply_mask, linf2, spectral_norm, singular_values, DenseMatrix, ObservationMask,
    StructuredTangent, SubspacePair, TangentSpace,
};
use crate::sampling::{GolfingPartition, RngSeed};

/// Settings for operator-norm estimates on matrix space.
///
/// The estimate is the largest `|θ|` among the Ritz values of a Lanczos
/// recurrence with full reorthogonalization, which is power iteration
/// accelerated over the same Krylov space. Iteration stops once that value
/// changes by at most `rel_tol` (relative) between steps, or when the Krylov
/// space becomes invariant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorNormSettings {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: RngSeed,
}

impl Default for OperatorNormSettings {
    fn default() -> Self {
        OperatorNormSettings {
            max_iters: 300,
            rel_tol: 1e-6,
            seed: RngSeed(0x0c0ffee),
        }
    }
}

impl OperatorNormSettings {
    pub fn with_seed(seed: RngSeed) -> Self {
        OperatorNormSettings {
            seed,
            ..Self::default()
        }
    }

    /// `max |λ(A)|` for a self-adjoint `A`, started from `start(G)` with
    /// Gaussian `G`. A zero start means the operator lives on a trivial space
    /// and the answer is 0.
    fn run(
        &self,
        shape: (usize, usize),
        start: impl Fn(&DenseMatrix) -> DenseMatrix,
        op: impl Fn(&DenseMatrix) -> DenseMatrix,
    ) -> Result<f64> {
        let mut rng = self.seed.rng();
        let g = DenseMatrix::from_fn(shape.0, shape.1, |_, _| StandardNormal.sample(&mut rng));
        let x = start(&g);
        let norm = x.frobenius();
        if norm <= 1e-12 * g.frobenius() {
            return Ok(0.0);
        }
        let mut basis = vec![x.scale(1.0 / norm)];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut trace = Vec::with_capacity(self.max_iters);
        for it in 0..self.max_iters {
            let mut w = op(&basis[it]);
            alpha.push(w.inner(&basis[it]));
            // two passes of Gram–Schmidt against the whole basis
            for _ in 0..2 {
                for q in &basis {
                    w.axpy(-w.inner(q), q);
                }
            }
            let b = w.frobenius();
            let est = tridiagonal_norm(&alpha, &beta)?;
            trace.push(est);
            let scale = est.max(alpha[0].abs()).max(f64::MIN_POSITIVE);
            // x has unit norm, so this is rounding noise around a zero operator
            if est <= 1e-13 && b <= 1e-13 {
                return Ok(0.0);
            }
            if b <= 1e-12 * scale {
                return Ok(est);
            }
            if it > 0 && (est - trace[it - 1]).abs() <= self.rel_tol * est {
                return Ok(est);
            }
            beta.push(b);
            basis.push(w.scale(1.0 / b));
        }
        Err(Error::PowerIterationStalled {
            iterations: self.max_iters,
            last: trace.last().copied().unwrap_or(0.0),
            trace,
        })
    }
}

/// Largest `|θ|` over the eigenvalues of the symmetric tridiagonal matrix
/// with diagonal `alpha` and off-diagonal `beta`.
fn tridiagonal_norm(alpha: &[f64], beta: &[f64]) -> Result<f64> {
    let k = alpha.len();
    let t = DenseMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    Ok(singular_values(&t)?.first().copied().unwrap_or(0.0))
}

/// `R_Ω(Z) = P_Ω(Z)/p`.
fn sample_operator(z: &DenseMatrix, mask: &ObservationMask, p: f64) -> DenseMatrix {
    apply_mask(z, mask, 1.0 / p)
}

fn check_shape(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Golfing iterates `W_k = W_{k−1} + R_{Ω_k} P_T(UVᵀ − P_T W_{k−1})` with
/// `R_{Ω_k} = P_{Ω_k}/q`. Returns `Y = W_{k0}` and `‖D_k‖_F` for
/// `k = 0..=k0`, where `D_k = UVᵀ − P_T W_k`.
pub fn build_golfing_certificate<T: TangentSpace>(
    space: &T,
    partition: &GolfingPartition,
) -> Result<(DenseMatrix, Vec<f64>)> {
    check_shape(space.shape(), partition.shape())?;
    let sign = space.sign_matrix();
    let (n1, n2) = space.shape();
    let mut w = DenseMatrix::zeros(n1, n2);
    let mut d = sign.clone();
    let mut trace = Vec::with_capacity(partition.k0 + 1);
    trace.push(d.frobenius());
    for batch in &partition.batches {
        // D_{k−1} already lies in T
        w.axpy(1.0, &sample_operator(&d, batch, partition.q));
        d = &sign - &space.project(&w);
        trace.push(d.frobenius());
    }
    Ok((w, trace))
}

/// `‖P_T R_Ω P_T − P_T‖_op` with `R_Ω = P_Ω/p`, `p` taken from the mask.
pub fn operator_norm_tangent(s: &SubspacePair, mask: &ObservationMask) -> Result<f64> {
    operator_norm_tangent_with(s, mask, &OperatorNormSettings::default())
}

pub fn operator_norm_tangent_with<T: TangentSpace>(
    space: &T,
    mask: &ObservationMask,
    power: &OperatorNormSettings,
) -> Result<f64> {
    check_shape(space.shape(), mask.shape())?;
    let p = mask.p();
    power.run(
        space.shape(),
        |g| space.project(g),
        |x| {
            let x = space.project(x);
            let mut y = space.project(&sample_operator(&x, mask, p));
            y.axpy(-1.0, &x);
            y
        },
    )
}

/// `(1/√p)·‖P_Ω P_T⊥‖_op`, computed as `(1/√p)·√‖P_T⊥ P_Ω P_T⊥‖_op` for the
/// structured tangent space of `inner` inside `outer`.
pub fn operator_norm_masked_complement(
    inner: &SubspacePair,
    outer: &SubspacePair,
    mask: &ObservationMask,
    p: f64,
) -> Result<f64> {
    operator_norm_masked_complement_with(inner, outer, mask, p, &OperatorNormSettings::default())
}

pub fn operator_norm_masked_complement_with(
    inner: &SubspacePair,
    outer: &SubspacePair,
    mask: &ObservationMask,
    p: f64,
    power: &OperatorNormSettings,
) -> Result<f64> {
    crate::error::ensure_probability(p, "sampling probability")?;
    let space = StructuredTangent::new(inner.clone(), outer.clone())?;
    check_shape(space.shape(), mask.shape())?;
    let squared = power.run(
        space.shape(),
        |g| space.project_complement(g),
        |x| space.project_complement(&apply_mask(&space.project_complement(x), mask, 1.0)),
    )?;
    Ok(squared.sqrt() / p.sqrt())
}

/// A measured value, the threshold it is compared with, and the verdict
/// `value ≤ threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(value: f64, threshold: f64) -> Self {
        Check {
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `‖P_T R_Ω P_T − P_T‖_op ≤ 1/2`.
    pub op_norm_tangent: Check,
    /// `‖P_T⊥ Y‖ ≤ 1/2`.
    pub cond2a: Check,
    /// `‖P_T Y − UVᵀ‖_F ≤ 1/(4n)`.
    pub cond2b: Check,
    pub dk_frobenius_trace: Vec<f64>,
}

impl CertificateReport {
    pub fn pass(&self) -> bool {
        self.op_norm_tangent.pass && self.cond2a.pass && self.cond2b.pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredCertificateReport {
    /// `‖P_T R_Ω P_T − P_T‖_op ≤ 1/2` on the structured tangent space.
    pub op_norm_tangent: Check,
    /// `‖P_T⊥ Y‖ ≤ 1/2`.
    pub cond2a: Check,
    /// `‖P_T Y − UVᵀ‖_F ≤ √(μ0 r / (32 μ̄0 r̄))`.
    pub cond2b: Check,
    /// `(1/√p)‖P_Ω P_T⊥‖_op ≤ √(2 μ̄0 r̄ / (μ0 r))`.
    pub masked_complement_norm: Check,
    pub dk_frobenius_trace: Vec<f64>,
}

impl StructuredCertificateReport {
    pub fn pass(&self) -> bool {
        self.op_norm_tangent.pass
            && self.cond2a.pass
            && self.cond2b.pass
            && self.masked_complement_norm.pass
    }
}

fn check_support(y: &DenseMatrix, mask: &ObservationMask) -> Result<()> {
    let on_mask = apply_mask(y, mask, 1.0);
    if on_mask.as_slice() == y.as_slice() {
        Ok(())
    } else {
        let outside = (&on_mask - y).frobenius();
        Err(Error::Structural(format!(
            "certificate is not supported on the observed set (off-support mass {outside:.3e})"
        )))
    }
}

/// Checks a candidate certificate `y` for the recovery of the matrix whose
/// singular subspaces are `s`. `m` only fixes the expected shape.
pub fn verify_conditions(
    m: &DenseMatrix,
    s: &SubspacePair,
    mask: &ObservationMask,
    y: &DenseMatrix,
) -> Result<CertificateReport> {
    verify_conditions_with(m, s, mask, y, &[], &OperatorNormSettings::default())
}

/// As [`verify_conditions`], carrying `dk_trace` into the report.
pub fn verify_conditions_with(
    m: &DenseMatrix,
    s: &SubspacePair,
    mask: &ObservationMask,
    y: &DenseMatrix,
    dk_trace: &[f64],
    power: &OperatorNormSettings,
) -> Result<CertificateReport> {
    check_shape(s.shape(), m.shape())?;
    check_shape(s.shape(), y.shape())?;
    check_support(y, mask)?;
    let n = m.rows().max(m.cols()) as f64;
    let op = operator_norm_tangent_with(s, mask, power)?;
    let cond2a = spectral_norm(&s.project_complement(y));
    let cond2b = (&s.project(y) - &s.sign_matrix()).frobenius();
    Ok(CertificateReport {
        op_norm_tangent: Check::new(op, 0.5),
        cond2a: Check::new(cond2a, 0.5),
        cond2b: Check::new(cond2b, 1.0 / (4.0 * n)),
        dk_frobenius_trace: dk_trace.to_vec(),
    })
}

/// Structured counterpart of [`verify_conditions`]: `inner` spans the
/// matrix, `outer` the side information, `p` the sampling probability.
pub fn verify_structured_conditions(
    m: &DenseMatrix,
    inner: &SubspacePair,
    outer: &SubspacePair,
    mask: &ObservationMask,
    y: &DenseMatrix,
    p: f64,
) -> Result<StructuredCertificateReport> {
    verify_structured_conditions_with(m, inner, outer, mask, y, p, &[], &OperatorNormSettings::default())
}

#[allow(clippy::too_many_arguments)]
pub fn verify_structured_conditions_with(
    m: &DenseMatrix,
    inner: &SubspacePair,
    outer: &SubspacePair,
    mask: &ObservationMask,
    y: &DenseMatrix,
    p: f64,
    dk_trace: &[f64],
    power: &OperatorNormSettings,
) -> Result<StructuredCertificateReport> {
    let space = StructuredTangent::new(inner.clone(), outer.clone())?;
    check_shape(space.shape(), m.shape())?;
    check_shape(space.shape(), y.shape())?;
    check_support(y, mask)?;
    let (mu0, r) = side_parameters(inner);
    let (mu0_bar, r_bar) = side_parameters(outer);
    let op = operator_norm_tangent_with(&space, mask, power)?;
    let masked = operator_norm_masked_complement_with(inner, outer, mask, p, power)?;
    let cond2a = spectral_norm(&space.project_complement(y));
    let cond2b = (&space.project(y) - &space.sign_matrix()).frobenius();
    Ok(StructuredCertificateReport {
        op_norm_tangent: Check::new(op, 0.5),
        cond2a: Check::new(cond2a, 0.5),
        cond2b: Check::new(cond2b, (mu0 * r / (32.0 * mu0_bar * r_bar)).sqrt()),
        masked_complement_norm: Check::new(masked, (2.0 * mu0_bar * r_bar / (mu0 * r)).sqrt()),
        dk_frobenius_trace: dk_trace.to_vec(),
    })
}

/// `(μ0, r)` with `μ0` the larger of the row and column incoherences.
fn side_parameters(s: &SubspacePair) -> (f64, f64) {
    let (row, col) = standard_incoherence(s);
    (row.max(col), s.rank() as f64)
}

/// One measured contraction: `measured ≤ bound` is the claim under test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    pub measured: f64,
    pub bound: f64,
}

impl Contraction {
    /// `measured / bound`; 0 when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.measured == 0.0 {
            0.0
        } else {
            self.measured / self.bound
        }
    }

    pub fn holds(&self) -> bool {
        self.measured <= self.bound
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionChecks {
    /// `‖(R_Ω − I)Z‖` against `c(ln n/p·‖Z‖_∞ + √(ln n/p)·‖Z‖_{∞,2})`.
    pub spectral_deviation: Contraction,
    /// `‖(P_T R_Ω − P_T)Z‖_{∞,2}` against
    /// `½√(n/(μ0 r))‖Z‖_∞ + ½‖Z‖_{∞,2}`.
    pub linf2_deviation: Contraction,
    /// `‖(P_T R_Ω P_T − P_T)Z‖_∞` against `½‖Z‖_∞`, for `Z ∈ T`.
    pub linf_deviation: Contraction,
    /// `‖P_T Z′‖_F` against `√2·n⁵·‖P_T⊥ Z′‖_*` for `Z′ = P_Ωᶜ(Z)`.
    pub null_space_balance: Contraction,
}

/// Evaluates the four norm contractions for a fixed `z ∈ T`. `c` is the
/// constant in the spectral-deviation bound.
pub fn contraction_checks(
    s: &SubspacePair,
    mask: &ObservationMask,
    z: &DenseMatrix,
    p: f64,
    c: f64,
) -> Result<ContractionChecks> {
    Ok(ContractionChecks {
        spectral_deviation: spectral_deviation(s, mask, z, p, c)?,
        linf2_deviation: linf2_deviation(s, mask, z, p)?,
        linf_deviation: linf_deviation(s, mask, z, p)?,
        null_space_balance: null_space_balance(s, mask, z)?,
    })
}

fn check_inputs(s: &SubspacePair, mask: &ObservationMask, z: &DenseMatrix, p: f64) -> Result<f64> {
    check_shape(s.shape(), mask.shape())?;
    check_shape(s.shape(), z.shape())?;
    crate::error::ensure_probability(p, "sampling probability")?;
    Ok(s.shape().0.max(s.shape().1) as f64)
}

pub fn spectral_deviation(
    s: &SubspacePair,
    mask: &ObservationMask,
    z: &DenseMatrix,
    p: f64,
    c: f64,
) -> Result<Contraction> {
    let n = check_inputs(s, mask, z, p)?;
    let log_n = n.ln();
    let mut dev = sample_operator(z, mask, p);
    dev.axpy(-1.0, z);
    Ok(Contraction {
        measured: spectral_norm(&dev),
        bound: c * (log_n / p * z.max_abs() + (log_n / p).sqrt() * linf2(z)),
    })
}

pub fn linf2_deviation(
    s: &SubspacePair,
    mask: &ObservationMask,
    z: &DenseMatrix,
    p: f64,
) -> Result<Contraction> {
    let n = check_inputs(s, mask, z, p)?;
    let (mu0, r) = side_parameters(s);
    let mut dev = s.project(&sample_operator(z, mask, p));
    dev.axpy(-1.0, &s.project(z));
    Ok(Contraction {
        measured: linf2(&dev),
        bound: 0.5 * (n / (mu0 * r)).sqrt() * z.max_abs() + 0.5 * linf2(z),
    })
}

/// Fails with a structural error unless `‖P_T⊥ Z‖_F ≤ 1e-8·max(1, ‖Z‖_F)`.
pub fn linf_deviation(
    s: &SubspacePair,
    mask: &ObservationMask,
    z: &DenseMatrix,
    p: f64,
) -> Result<Contraction> {
    check_inputs(s, mask, z, p)?;
    let off = s.project_complement(z).frobenius();
    if off > 1e-8 * z.frobenius().max(1.0) {
        return Err(Error::Structural(format!(
            "matrix is not in the tangent space (‖P_T⊥ Z‖_F = {off:.3e})"
        )));
    }
    let mut dev = s.project(&sample_operator(&s.project(z), mask, p));
    dev.axpy(-1.0, &s.project(z));
    Ok(Contraction {
        measured: dev.max_abs(),
        bound: 0.5 * z.max_abs(),
    })
}

/// Zeroes `z` on the mask before measuring, so the balance is checked on the
/// null space of `P_Ω`.
pub fn null_space_balance(
    s: &SubspacePair,
    mask: &ObservationMask,
    z: &DenseMatrix,
) -> Result<Contraction> {
    check_shape(s.shape(), mask.shape())?;
    check_shape(s.shape(), z.shape())?;
    let n = s.shape().0.max(s.shape().1) as f64;
    let mut off = z.clone();
    off.axpy(-1.0, &apply_mask(z, mask, 1.0));
    let nuclear: f64 = singular_values(&s.project_complement(&off))?.iter().sum();
    Ok(Contraction {
        measured: s.project(&off).frobenius(),
        bound: 2f64.sqrt() * n.powi(5) * nuclear,
    })
}
