use super::DenseMatrix;
use crate::error::{Error, Result};

/// Density above which a mask also keeps a dense bit array for O(1) lookup.
const BITMAP_DENSITY: f64 = 0.05;

/// A set Ω of observed positions of an `rows × cols` matrix, together with
/// the sampling probability `p` of the model that produced it.
///
/// Positions are stored as sorted row-major linear indices, which fixes the
/// iteration order (row by row, columns ascending).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    p: f64,
    symmetric: bool,
    indices: Vec<usize>,
    bitmap: Option<Vec<u64>>,
}

impl ObservationMask {
    /// Validates and builds a mask from `(i, j)` pairs in any order.
    ///
    /// `p` must lie in `(0, 1]`, or be exactly 0 for an empty mask.
    pub fn new(
        rows: usize,
        cols: usize,
        p: f64,
        symmetric: bool,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut indices = Vec::new();
        for (i, j) in pairs {
            if i >= rows || j >= cols {
                return Err(Error::Input(format!(
                    "observed index ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
            indices.push(i * cols + j);
        }
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Input(format!(
                "duplicate observed index ({}, {})",
                w[0] / cols,
                w[0] % cols
            )));
        }
        let mask = Self::from_sorted(rows, cols, p, symmetric, indices);
        mask.validate()?;
        Ok(mask)
    }

    /// Every position observed, `p = 1`.
    pub fn full(rows: usize, cols: usize) -> Self {
        Self::from_sorted(rows, cols, 1.0, rows == cols, (0..rows * cols).collect())
    }

    pub fn empty(rows: usize, cols: usize, p: f64) -> Result<Self> {
        Self::new(rows, cols, p, rows == cols, std::iter::empty())
    }

    pub(crate) fn from_sorted(
        rows: usize,
        cols: usize,
        p: f64,
        symmetric: bool,
        indices: Vec<usize>,
    ) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let total = rows * cols;
        let bitmap = if total > 0 && indices.len() as f64 > BITMAP_DENSITY * total as f64 {
            let mut bits = vec![0u64; total.div_ceil(64)];
            for &k in &indices {
                bits[k / 64] |= 1 << (k % 64);
            }
            Some(bits)
        } else {
            None
        };
        Self {
            rows,
            cols,
            p,
            symmetric,
            indices,
            bitmap,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && (0.0..=1.0).contains(&self.p)) {
            return Err(Error::Parameter(format!(
                "sampling probability must lie in (0, 1], got {}",
                self.p
            )));
        }
        if self.p == 0.0 && !self.indices.is_empty() {
            return Err(Error::Parameter(
                "sampling probability 0 is only consistent with an empty mask".into(),
            ));
        }
        if self.symmetric {
            if self.rows != self.cols {
                return Err(Error::Structural("a symmetric mask must be square".into()));
            }
            if let Some((i, j)) = self.iter().find(|&(i, j)| !self.contains(j, i)) {
                return Err(Error::Structural(format!(
                    "symmetric mask observes ({i}, {j}) but not ({j}, {i})"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Sampling probability of the generating model.
    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.rows * self.cols
    }

    /// Fraction of positions observed.
    pub fn density(&self) -> f64 {
        let total = self.rows * self.cols;
        if total == 0 {
            0.0
        } else {
            self.indices.len() as f64 / total as f64
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        if i >= self.rows || j >= self.cols {
            return false;
        }
        let k = i * self.cols + j;
        match &self.bitmap {
            Some(bits) => bits[k / 64] >> (k % 64) & 1 == 1,
            None => self.indices.binary_search(&k).is_ok(),
        }
    }

    /// Sorted row-major linear indices `i * cols + j`.
    pub fn linear_indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.indices.iter().map(move |&k| (k / cols, k % cols))
    }

    /// Observed-entry count per row.
    pub fn row_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.rows];
        for (i, _) in self.iter() {
            deg[i] += 1;
        }
        deg
    }

    /// Observed-entry count per column.
    pub fn col_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.cols];
        for (_, j) in self.iter() {
            deg[j] += 1;
        }
        deg
    }

    /// Union of two masks over the same shape, recorded with probability `p`.
    pub fn union(&self, other: &Self, p: f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        let mut merged = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.indices.iter().peekable(), other.indices.iter().peekable());
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(&&x), Some(&&y)) if x < y => a.next(),
                (Some(&&x), Some(&&y)) if y < x => b.next(),
                (Some(_), Some(_)) => {
                    b.next();
                    a.next()
                }
                (Some(_), None) => a.next(),
                (None, Some(_)) => b.next(),
                (None, None) => break,
            };
            merged.extend(next);
        }
        let mask = Self::from_sorted(
            self.rows,
            self.cols,
            p,
            self.symmetric && other.symmetric,
            merged,
        );
        mask.validate()?;
        Ok(mask)
    }

    /// Same observed set, different recorded probability.
    pub fn with_probability(&self, p: f64) -> Result<Self> {
        let mask = Self {
            p,
            ..self.clone()
        };
        mask.validate()?;
        Ok(mask)
    }
}

/// `P_Ω(M)` (`rescale = false`) or `R_Ω(M) = P_Ω(M) / p` (`rescale = true`).
pub fn masked(m: &DenseMatrix, mask: &ObservationMask, rescale: bool) -> Result<DenseMatrix> {
    m.ensure_shape(mask.rows(), mask.cols())?;
    let scale = if rescale {
        if mask.p() == 0.0 {
            return Err(Error::Division(
                "cannot rescale by a sampling probability of 0".into(),
            ));
        }
        1.0 / mask.p()
    } else {
        1.0
    };
    Ok(apply_mask(m, mask, scale))
}

/// `scale · P_Ω(M)` without shape checks.
pub(crate) fn apply_mask(m: &DenseMatrix, mask: &ObservationMask, scale: f64) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.rows(), m.cols());
    let src = m.as_slice();
    let dst = out.as_mut_slice();
    for &k in mask.linear_indices() {
        dst[k] = scale * src[k];
    }
    out
}
