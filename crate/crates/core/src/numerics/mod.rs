//! Feature matrices, projection kernels, bases and squared volumes.

mod dense;

use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

pub use dense::{dot, norm2, numerical_rank, pivoted_qr_diag, Lu, Matrix};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Full-rank `r x n` matrix whose columns are the item features.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix<T> {
    a: Matrix<T>,
    scale: T,
}

impl<T: Scalar> FeatureMatrix<T> {
    /// Validates `r < n` and `rank(A) = r`.
    pub fn new(a: Matrix<T>) -> Result<Self> {
        let (r, n) = (a.rows(), a.cols());
        if r == 0 || r >= n {
            return Err(Error::Dimension(format!(
                "feature matrix must satisfy 0 < r < n, got {r}x{n}"
            )));
        }
        if a.as_col_major().iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("non-finite matrix entry".into()));
        }
        let rank = numerical_rank(&a, T::rank_rtol());
        if rank < r {
            return Err(Error::RankDeficient { rank, expected: r });
        }
        let scale = a.max_col_norm();
        Ok(Self { a, scale })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn rank(&self) -> usize {
        self.a.rows()
    }

    pub fn len(&self) -> usize {
        self.a.cols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn column(&self, j: usize) -> &[T] {
        self.a.col(j)
    }

    pub fn columns(&self, idx: &[usize]) -> Matrix<T> {
        self.a.select_columns(idx)
    }

    /// Largest column norm, the reference scale for zero-volume decisions.
    pub fn scale(&self) -> T {
        self.scale
    }

    /// `A u` for a coefficient vector `u` of length `n`.
    pub fn apply(&self, u: &[T]) -> Result<Vec<T>> {
        self.a.matvec(u)
    }

    /// Sum of all columns, the vertex `A 1` of the zonotope.
    pub fn column_sum(&self) -> Vec<T> {
        (0..self.rank())
            .map(|i| (0..self.len()).map(|j| self.a[(i, j)]).sum())
            .collect()
    }

    /// Multiplies column `j` by `w[j]`.
    pub fn scale_columns(&self, w: &[T]) -> Result<Self> {
        if w.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} columns",
                w.len(),
                self.len()
            )));
        }
        let mut a = self.a.clone();
        for (j, &wj) in w.iter().enumerate() {
            for v in a.col_mut(j) {
                *v *= wj;
            }
        }
        Self::new(a)
    }

    fn check_indices(&self, idx: &[usize]) -> Result<()> {
        match idx.iter().find(|&&i| i >= self.len()) {
            Some(i) => Err(Error::Argument(format!(
                "column index {i} out of range for {} columns",
                self.len()
            ))),
            None => Ok(()),
        }
    }

    /// `det(A_{:P}ᵀ A_{:P})`, the squared volume of the parallelotope spanned by
    /// the columns in `P`.
    ///
    /// This equals `det K_P * det(A Aᵀ)` for the projection kernel of `A`. It is
    /// zero when `|P| > r` or the columns are dependent.
    pub fn squared_volume(&self, p: &[usize]) -> Result<T> {
        self.check_indices(p)?;
        if p.len() > self.rank() {
            return Ok(T::zero());
        }
        let diag = pivoted_qr_diag(&self.columns(p));
        let tiny = T::rank_rtol() * self.scale;
        if diag.iter().any(|&d| d <= tiny) {
            return Ok(T::zero());
        }
        Ok(diag.iter().fold(T::one(), |acc, &d| acc * d * d))
    }

    /// `ln det(A_{:P}ᵀ A_{:P})`, `None` when the volume is zero.
    pub fn log_squared_volume(&self, p: &[usize]) -> Result<Option<T>> {
        self.check_indices(p)?;
        if p.len() > self.rank() {
            return Ok(None);
        }
        let diag = pivoted_qr_diag(&self.columns(p));
        let tiny = T::rank_rtol() * self.scale;
        if diag.iter().any(|&d| d <= tiny) {
            return Ok(None);
        }
        let two = T::one() + T::one();
        Ok(Some(diag.iter().map(|&d| two * d.ln()).sum()))
    }

    /// `ln |det A_{:B}|` for an `r`-subset, `None` when the columns are dependent.
    pub fn log_abs_det(&self, b: &[usize]) -> Result<Option<T>> {
        self.check_indices(b)?;
        if b.len() != self.rank() {
            return Err(Error::Dimension(format!(
                "{} indices for a rank-{} matrix",
                b.len(),
                self.rank()
            )));
        }
        let lu = Lu::new(&self.columns(b))?;
        if lu.is_singular() {
            return Ok(None);
        }
        // LU's own tolerance is relative to the submatrix; also reject
        // volumes that are negligible at the scale of the whole matrix.
        let tiny = (T::rank_rtol() * self.scale).ln() * T::from_f64_lossy(self.rank() as f64);
        Ok(lu.log_abs_det().filter(|&v| v > tiny))
    }

    pub fn abs_det(&self, b: &[usize]) -> Result<T> {
        Ok(self.log_abs_det(b)?.map_or(T::zero(), T::exp))
    }

    /// `det(A Aᵀ)`: the sum of `det(A_{:B})²` over all bases.
    pub fn cauchy_binet_total(&self) -> T {
        Lu::new(&self.a.gram_rows())
            .map(|lu| lu.det())
            .unwrap_or_else(|_| T::zero())
    }

    /// All bases in lexicographic order. Refuses when `C(n, r)` exceeds `guard`.
    pub fn enumerate_bases(&self, guard: u128) -> Result<Vec<Basis>> {
        let count = binomial(self.len() as u64, self.rank() as u64);
        if count > guard {
            return Err(Error::EnumerationGuard { count, guard });
        }
        let mut out = Vec::new();
        for combo in (0..self.len()).combinations(self.rank()) {
            if self.log_abs_det(&combo)?.is_some() {
                out.push(Basis { indices: combo });
            }
        }
        Ok(out)
    }

    pub fn is_basis(&self, idx: &[usize]) -> bool {
        idx.len() == self.rank() && matches!(self.log_abs_det(idx), Ok(Some(_)))
    }

    pub fn cast<U: Scalar>(&self) -> FeatureMatrix<U> {
        let data = self
            .a
            .as_col_major()
            .iter()
            .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
            .collect();
        let a = Matrix::from_col_major(self.rank(), self.len(), data).expect("same shape");
        FeatureMatrix {
            scale: a.max_col_norm(),
            a,
        }
    }
}

/// `C(n, k)` saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Sorted set of `r` column indices spanning the column space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Basis {
    indices: Vec<usize>,
}

impl Basis {
    /// Checks that `indices` is a basis of `a`; the indices may come unsorted.
    pub fn new<T: Scalar>(mut indices: Vec<usize>, a: &FeatureMatrix<T>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument(format!("repeated index in {indices:?}")));
        }
        if indices.len() != a.rank() {
            return Err(Error::Argument(format!(
                "basis needs {} indices, got {}",
                a.rank(),
                indices.len()
            )));
        }
        match a.log_abs_det(&indices)? {
            Some(_) => Ok(Self { indices }),
            None => Err(Error::Argument(format!(
                "columns {indices:?} are dependent"
            ))),
        }
    }

    /// Builds a basis without checking independence; indices are sorted.
    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// True when every element of `s` is in the basis.
    pub fn contains_all(&self, s: &[usize]) -> bool {
        s.iter().all(|&i| self.contains(i))
    }

    /// `(B \ {out}) ∪ {inn}`, sorted. Not checked for independence.
    pub fn exchange(&self, out: usize, inn: usize) -> Basis {
        let mut idx: Vec<usize> = self.indices.iter().copied().filter(|&i| i != out).collect();
        idx.push(inn);
        Basis::from_indices(idx)
    }
}

impl fmt::Display for Basis {
    /// Space separated ascending indices, e.g. `1 3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.indices.iter().join(" "))
    }
}

impl std::str::FromStr for Basis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let idx = s
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>().map_err(|e| Error::Parse {
                    line: 0,
                    message: format!("bad basis index {t:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Basis::from_indices(idx))
    }
}

/// Orthogonal projection `K = Aᵀ (A Aᵀ)⁻¹ A` onto the row space of `A`.
#[derive(Clone, Debug)]
pub struct ProjectionKernel<T> {
    k: Matrix<T>,
    rank: usize,
}

impl<T: Scalar> ProjectionKernel<T> {
    pub fn build(a: &FeatureMatrix<T>) -> Result<Self> {
        let lu = Lu::new(&a.matrix().gram_rows())?;
        if lu.is_singular() {
            return Err(Error::RankDeficient {
                rank: numerical_rank(a.matrix(), T::rank_rtol()),
                expected: a.rank(),
            });
        }
        // X = (A Aᵀ)⁻¹ A, then K = Aᵀ X
        let x = lu.solve_matrix(a.matrix())?;
        let mut k = a.matrix().transpose().matmul(&x)?;
        let n = k.rows();
        for i in 0..n {
            for j in 0..i {
                let avg = (k[(i, j)] + k[(j, i)]) / (T::one() + T::one());
                k[(i, j)] = avg;
                k[(j, i)] = avg;
            }
        }
        Ok(Self { k, rank: a.rank() })
    }

    pub fn size(&self) -> usize {
        self.k.rows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.k[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.k
    }

    pub fn trace(&self) -> T {
        (0..self.size()).map(|i| self.k[(i, i)]).sum()
    }

    pub fn symmetry_error(&self) -> T {
        let n = self.size();
        let mut e = T::zero();
        for i in 0..n {
            for j in 0..n {
                e = e.max((self.k[(i, j)] - self.k[(j, i)]).abs());
            }
        }
        e
    }

    /// `max |(K² − K)_ij|`.
    pub fn idempotence_error(&self) -> T {
        let k2 = self.k.matmul(&self.k).expect("square");
        k2.as_col_major()
            .iter()
            .zip(self.k.as_col_major())
            .fold(T::zero(), |e, (&a, &b)| e.max((a - b).abs()))
    }

    /// `det K_S` for a principal submatrix.
    pub fn principal_minor(&self, s: &[usize]) -> Result<T> {
        if let Some(i) = s.iter().find(|&&i| i >= self.size()) {
            return Err(Error::Argument(format!("index {i} out of range")));
        }
        if s.is_empty() {
            return Ok(T::one());
        }
        let mut sub = Matrix::zeros(s.len(), s.len());
        for (a, &i) in s.iter().enumerate() {
            for (b, &j) in s.iter().enumerate() {
                sub[(a, b)] = self.k[(i, j)];
            }
        }
        let lu = Lu::new(&sub)?;
        Ok(if lu.is_singular() {
            T::zero()
        } else {
            lu.det()
        })
    }
}
