//! Brute-force reference computations on nested `Vec`s.
//!
//! Nothing here shares code with the production kernels: matrices are
//! `Vec<Vec<f64>>`, products are triple loops and eigenvalues come from the
//! cyclic Jacobi method.

pub type Mat = Vec<Vec<f64>>;

pub fn zeros(rows: usize, cols: usize) -> Mat {
    vec![vec![0.0; cols]; rows]
}

pub fn identity(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Mat {
    assert_eq!(data.len(), rows * cols);
    data.chunks(cols.max(1)).take(rows).map(<[f64]>::to_vec).collect()
}

pub fn to_row_major(m: &Mat) -> Vec<f64> {
    m.concat()
}

pub fn transpose(a: &Mat) -> Mat {
    let (r, c) = (a.len(), a.first().map_or(0, Vec::len));
    (0..c).map(|j| (0..r).map(|i| a[i][j]).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k) = (a.len(), b.len());
    let m = b.first().map_or(0, Vec::len);
    let mut out = zeros(n, m);
    for i in 0..n {
        assert_eq!(a[i].len(), k);
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

pub fn frobenius(a: &Mat) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn trace_inner(a: &Mat, b: &Mat) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| x * y).sum()
}

/// `P_T(Z) = UUᵀZ + ZVVᵀ − UUᵀZVVᵀ`, each term formed explicitly.
pub fn project_tangent(u: &Mat, v: &Mat, z: &Mat) -> Mat {
    let puu = matmul(u, &transpose(u));
    let pvv = matmul(v, &transpose(v));
    let left = matmul(&puu, z);
    let right = matmul(z, &pvv);
    let both = matmul(&left, &pvv);
    sub(&add(&left, &right), &both)
}

/// Eigenvalues and eigenvectors (columns) of a symmetric matrix by cyclic
/// Jacobi rotations. Eigenvalues are sorted in decreasing order.
pub fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut m = a.clone();
    let mut vecs = identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let scale: f64 = m.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in vecs.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap());
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&i| vecs[r][i]).collect()).collect();
    (values, vectors)
}

/// Singular values from the eigenvalues of `AᵀA` (or `AAᵀ`, whichever is
/// smaller), decreasing.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    let at = transpose(a);
    let gram = if a.len() >= at.len() {
        matmul(&at, a)
    } else {
        matmul(a, &at)
    };
    jacobi_eigen(&gram).0.into_iter().map(|x| x.max(0.0).sqrt()).collect()
}

/// Matrix of a linear map on `R^dim`, column `k` being the image of `e_k`.
pub fn materialize(dim: usize, op: impl Fn(&[f64]) -> Vec<f64>) -> Mat {
    let mut cols = Vec::with_capacity(dim);
    let mut e = vec![0.0; dim];
    for k in 0..dim {
        e[k] = 1.0;
        cols.push(op(&e));
        e[k] = 0.0;
    }
    transpose(&cols)
}

/// Operator 2-norm of a symmetric matrix: largest absolute eigenvalue.
pub fn symmetric_norm(a: &Mat) -> f64 {
    jacobi_eigen(a).0.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Standard error of a Bernoulli(p) frequency over `trials` draws.
pub fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// `P(X ≥ k)` for `X ~ Binomial(n, p)`, summed in log space.
pub fn binomial_upper_tail(n: usize, p: f64, k: usize) -> f64 {
    let ln_choose = |n: usize, k: usize| -> f64 {
        (1..=k).map(|i| ((n - k + i) as f64).ln() - (i as f64).ln()).sum()
    };
    (k..=n)
        .map(|j| (ln_choose(n, j) + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln()).exp())
        .sum::<f64>()
        .min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalizes_known_matrix() {
        // eigenvalues 3 and 1
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let (vals, vecs) = jacobi_eigen(&a);
        assert!((vals[0] - 3.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        let back = matmul(&matmul(&vecs, &vec![vec![3.0, 0.0], vec![0.0, 1.0]]), &transpose(&vecs));
        assert!(frobenius(&sub(&back, &a)) < 1e-12);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let a = vec![vec![0.0, -2.0], vec![5.0, 0.0], vec![0.0, 0.0]];
        let s = singular_values(&a);
        assert!((s[0] - 5.0).abs() < 1e-12 && (s[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn materialized_negation_has_unit_norm() {
        let m = materialize(4, |x| x.iter().map(|v| -v).collect());
        assert!((symmetric_norm(&m) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn binomial_tail_edges() {
        assert!((binomial_upper_tail(10, 0.5, 0) - 1.0).abs() < 1e-12);
        assert!((binomial_upper_tail(3, 0.5, 3) - 0.125).abs() < 1e-12);
    }
}
