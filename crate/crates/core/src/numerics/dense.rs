//! Small dense column-major matrices and the factorizations the samplers need.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row slices; all rows must have the same length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {ncols}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn as_col_major(&self) -> &[T] {
        &self.data
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix<T> {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn transpose(&self) -> Matrix<T> {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for k in 0..self.cols {
                let b = other[(k, j)];
                if b == T::zero() {
                    continue;
                }
                let a = self.col(k);
                let o = out.col_mut(j);
                for i in 0..a.len() {
                    o[i] += a[i] * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} for {} columns",
                v.len(),
                self.cols
            )));
        }
        let mut out = vec![T::zero(); self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o += a * vj;
            }
        }
        Ok(out)
    }

    /// `self * selfᵀ`.
    pub fn gram_rows(&self) -> Matrix<T> {
        let mut g = Matrix::zeros(self.rows, self.rows);
        for j in 0..self.cols {
            let c = self.col(j);
            for a in 0..self.rows {
                for b in 0..=a {
                    g[(a, b)] += c[a] * c[b];
                }
            }
        }
        for a in 0..self.rows {
            for b in 0..a {
                g[(b, a)] = g[(a, b)];
            }
        }
        g
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn max_col_norm(&self) -> T {
        (0..self.cols)
            .map(|j| norm2(self.col(j)))
            .fold(T::zero(), T::max)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    // scaled to avoid overflow on large entries
    let scale = a.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let s: T = a.iter().map(|&v| (v / scale) * (v / scale)).sum();
    scale * s.sqrt()
}

/// LU factorization with partial pivoting of a square matrix.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    factors: Matrix<T>,
    perm: Vec<usize>,
    sign: T,
    singular: bool,
}

impl<T: Scalar> Lu<T> {
    pub fn new(m: &Matrix<T>) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::Dimension(format!(
                "LU of non-square {}x{} matrix",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        let mut a = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let scale = m.max_abs();
        let tiny = T::rank_rtol() * scale.max(T::min_positive_value());
        let mut singular = n > 0 && scale == T::zero();
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, a[(i, k)].abs()))
                    .fold((k, T::neg_infinity()), |best, cur| {
                        if cur.1 > best.1 {
                            cur
                        } else {
                            best
                        }
                    });
            if pmax <= tiny {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let v = a[(k, j)];
                        a[(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(Self {
            factors: a,
            perm,
            sign,
            singular,
        })
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn det(&self) -> T {
        if self.singular {
            return T::zero();
        }
        let n = self.factors.rows;
        (0..n).fold(self.sign, |acc, i| acc * self.factors[(i, i)])
    }

    /// `ln |det|`, or `None` when singular.
    pub fn log_abs_det(&self) -> Option<T> {
        if self.singular {
            return None;
        }
        let n = self.factors.rows;
        Some((0..n).map(|i| self.factors[(i, i)].abs().ln()).sum())
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if self.singular {
            return Err(Error::Singular);
        }
        let n = self.factors.rows;
        if b.len() != n {
            return Err(Error::Dimension(format!(
                "rhs of length {} for order {n}",
                b.len()
            )));
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.factors[(i, k)] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.factors[(i, k)] * x[k];
            }
            x[i] = s / self.factors[(i, i)];
        }
        Ok(x)
    }

    pub fn solve_matrix(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let mut out = Matrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let x = self.solve(b.col(j))?;
            out.col_mut(j).copy_from_slice(&x);
        }
        Ok(out)
    }
}

/// Magnitudes of the diagonal of R in a column-pivoted Householder QR.
///
/// The pivoting makes the sequence non-increasing, so the numerical rank is
/// the number of entries above `rtol * diag[0]`.
pub fn pivoted_qr_diag<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.clone();
    let steps = rows.min(cols);
    let mut diag = Vec::with_capacity(steps);
    let mut v = vec![T::zero(); rows];
    for k in 0..steps {
        let (p, _) = (k..cols).map(|j| (j, norm2(&a.col(j)[k..]))).fold(
            (k, T::neg_infinity()),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
        if p != k {
            for i in 0..rows {
                let tmp = a[(i, k)];
                a[(i, k)] = a[(i, p)];
                a[(i, p)] = tmp;
            }
        }
        let alpha = norm2(&a.col(k)[k..]);
        diag.push(alpha);
        if alpha == T::zero() {
            continue;
        }
        let x0 = a[(k, k)];
        let beta = if x0 >= T::zero() { -alpha } else { alpha };
        for i in k..rows {
            v[i] = a[(i, k)];
        }
        v[k] = x0 - beta;
        let vnorm2: T = (k..rows).map(|i| v[i] * v[i]).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        let two = T::one() + T::one();
        for j in k + 1..cols {
            let s: T = (k..rows).map(|i| v[i] * a[(i, j)]).sum();
            let f = two * s / vnorm2;
            for i in k..rows {
                let vi = v[i];
                a[(i, j)] -= f * vi;
            }
        }
    }
    diag
}

/// Numerical rank from [`pivoted_qr_diag`] with relative tolerance `rtol`.
pub fn numerical_rank<T: Scalar>(m: &Matrix<T>, rtol: T) -> usize {
    let diag = pivoted_qr_diag(m);
    let Some(&lead) = diag.first() else { return 0 };
    if lead == T::zero() {
        return 0;
    }
    diag.iter().take_while(|&&d| d > rtol * lead).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> Matrix<f64> {
        Matrix::from_rows(&[[1.0, 2.0, 0.0, -1.0], [0.0, 1.0, 2.0, 1.0]]).unwrap()
    }

    #[test]
    fn lu_det_and_solve() {
        let m =
            Matrix::<f64>::from_rows(&[[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]]).unwrap();
        let lu = Lu::new(&m).unwrap();
        assert!((lu.det() - 18.0).abs() < 1e-12);
        let x = lu.solve(&[3.0, 5.0, 5.0]).unwrap();
        for (xi, ei) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((xi - ei).abs() < 1e-12);
        }
    }

    #[test]
    fn lu_flags_singular() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let lu = Lu::new(&m).unwrap();
        assert!(lu.is_singular());
        assert_eq!(lu.det(), 0.0);
        assert!(lu.solve(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn qr_diag_product_is_abs_det() {
        let a = fig1().select_columns(&[1, 3]);
        let d = pivoted_qr_diag(&a);
        assert!((d.iter().product::<f64>() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rank_of_dependent_columns() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]).unwrap();
        assert_eq!(numerical_rank(&a, 1e-10), 1);
        assert_eq!(numerical_rank(&fig1(), 1e-10), 2);
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![1.0]];
        assert!(Matrix::from_rows(&rows).is_err());
    }
}
