//! Dense exact-rational vectors and matrices.
//!
//! Everything here is plain Gaussian elimination over `Scalar`. Problem sizes
//! are desk scale (dimensions below ~20), so no pivot heuristics or sparsity
//! are needed; exactness is the only requirement.

use crate::error::{Error, Result};
use crate::scalar::{int, is_zero, Scalar};

pub type Vector = Vec<Scalar>;

pub fn zeros(n: usize) -> Vector {
    vec![int(0); n]
}

pub fn unit(n: usize, j: usize) -> Vector {
    let mut v = zeros(n);
    v[j] = int(1);
    v
}

pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    assert_eq!(a.len(), b.len(), "dot of mismatched lengths");
    a.iter().zip(b).fold(int(0), |acc, (x, y)| acc + x * y)
}

pub fn add(a: &[Scalar], b: &[Scalar]) -> Vector {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Scalar], b: &[Scalar]) -> Vector {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Scalar], t: &Scalar) -> Vector {
    a.iter().map(|x| x * t).collect()
}

pub fn neg(a: &[Scalar]) -> Vector {
    a.iter().map(|x| -x).collect()
}

pub fn is_zero_vec(a: &[Scalar]) -> bool {
    a.iter().all(is_zero)
}

/// Largest absolute entry, exact.
pub fn inf_norm(a: &[Scalar]) -> Scalar {
    a.iter()
        .map(|x| if x < &int(0) { -x } else { x.clone() })
        .max()
        .unwrap_or_else(|| int(0))
}

/// Squared Euclidean norm, exact.
pub fn norm_sq(a: &[Scalar]) -> Scalar {
    dot(a, a)
}

/// Scales a nonzero vector so its largest absolute entry is one.
pub fn normalize_inf(a: &[Scalar]) -> Vector {
    let n = inf_norm(a);
    if is_zero(&n) {
        a.to_vec()
    } else {
        a.iter().map(|x| x / &n).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Scalar>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix::new(rows, cols, vec![int(0); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = int(1);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vector>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|v| v.len()).unwrap_or(0);
        assert!(rows.iter().all(|v| v.len() == c), "ragged rows");
        Matrix::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Like `from_rows`, but keeps an explicit width for empty row lists.
    pub fn from_rows_with_width(rows: Vec<Vector>, cols: usize) -> Self {
        if rows.is_empty() {
            return Matrix::zero(0, cols);
        }
        let m = Matrix::from_rows(rows);
        assert_eq!(m.cols(), cols, "row width mismatch");
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vector {
        self.row(i).to_vec()
    }

    pub fn col_vec(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *t.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vector {
        assert_eq!(v.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn mul_mat(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "mul_mat dimension mismatch");
        let mut out = Matrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = int(0);
                for k in 0..self.cols {
                    acc += self.at(i, k) * other.at(k, j);
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "vstack width mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix::new(self.rows + other.rows, self.cols, data)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        Matrix::from_rows(idx.iter().map(|&i| self.row_vec(i)).collect())
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if self.at(i, j) != self.at(j, i) {
                    return false;
                }
            }
        }
        true
    }

    /// `dᵀ M d` for square `M`.
    pub fn quad_form(&self, d: &[Scalar]) -> Scalar {
        dot(d, &self.mul_vec(d))
    }
}

/// Row echelon reduction; returns pivot columns. Mutates `m` in place to
/// reduced row echelon form.
fn rref(m: &mut Matrix) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(pr) = (r..m.rows).find(|&i| !is_zero(m.at(i, c))) else {
            continue;
        };
        if pr != r {
            for j in 0..m.cols {
                let tmp = m.at(pr, j).clone();
                *m.at_mut(pr, j) = m.at(r, j).clone();
                *m.at_mut(r, j) = tmp;
            }
        }
        let piv = m.at(r, c).clone();
        for j in c..m.cols {
            *m.at_mut(r, j) = m.at(r, j) / &piv;
        }
        for i in 0..m.rows {
            if i != r && !is_zero(m.at(i, c)) {
                let factor = m.at(i, c).clone();
                for j in c..m.cols {
                    let v = m.at(i, j) - &factor * m.at(r, j);
                    *m.at_mut(i, j) = v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(a: &Matrix) -> usize {
    let mut m = a.clone();
    rref(&mut m).len()
}

/// Exact basis of `{v | A v = 0}`; `rank + basis.len() == cols`.
pub fn kernel_basis(a: &Matrix) -> Vec<Vector> {
    let mut m = a.clone();
    let pivots = rref(&mut m);
    let mut basis = Vec::new();
    let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
    for free in 0..a.cols() {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = zeros(a.cols());
        v[free] = int(1);
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -m.at(r, free).clone();
        }
        basis.push(v);
    }
    basis
}

/// Exact solve of `A x = b`; `Ok(None)` when `b` is outside the column span.
pub fn solve_linear(a: &Matrix, b: &[Scalar]) -> Result<Option<Vector>> {
    if a.rows() != b.len() {
        return Err(Error::Dimension(format!(
            "solve_linear: {} rows vs rhs of length {}",
            a.rows(),
            b.len()
        )));
    }
    // Augment, reduce, and read a particular solution off the pivot columns.
    let mut aug = Matrix::zero(a.rows(), a.cols() + 1);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            *aug.at_mut(i, j) = a.at(i, j).clone();
        }
        *aug.at_mut(i, a.cols()) = b[i].clone();
    }
    let pivots = rref(&mut aug);
    if pivots.contains(&a.cols()) {
        return Ok(None); // pivot in the rhs column: inconsistent system
    }
    let mut x = zeros(a.cols());
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = aug.at(r, a.cols()).clone();
    }
    debug_assert!(a.mul_vec(&x) == b.to_vec());
    Ok(Some(x))
}

/// Symmetric positive definiteness via Sylvester's criterion on leading
/// principal minors, exact.
pub fn is_positive_definite(m: &Matrix) -> bool {
    assert!(m.is_symmetric(), "pd test expects a symmetric matrix");
    let n = m.rows();
    for k in 1..=n {
        let idx: Vec<usize> = (0..k).collect();
        if determinant(&submatrix(m, &idx, &idx)) <= int(0) {
            return false;
        }
    }
    true
}

/// Symmetric positive semidefiniteness: every principal minor nonnegative.
pub fn is_positive_semidefinite(m: &Matrix) -> bool {
    assert!(m.is_symmetric(), "psd test expects a symmetric matrix");
    let n = m.rows();
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if determinant(&submatrix(m, &idx, &idx)) < int(0) {
            return false;
        }
    }
    true
}

pub fn submatrix(m: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    let mut out = Matrix::zero(rows.len(), cols.len());
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            *out.at_mut(i, j) = m.at(r, c).clone();
        }
    }
    out
}

pub fn determinant(m: &Matrix) -> Scalar {
    assert_eq!(m.rows(), m.cols(), "determinant of non-square matrix");
    let n = m.rows();
    let mut a = m.clone();
    let mut det = int(1);
    for c in 0..n {
        let Some(pr) = (c..n).find(|&i| !is_zero(a.at(i, c))) else {
            return int(0);
        };
        if pr != c {
            det = -det;
            for j in 0..n {
                let tmp = a.at(pr, j).clone();
                *a.at_mut(pr, j) = a.at(c, j).clone();
                *a.at_mut(c, j) = tmp;
            }
        }
        let piv = a.at(c, c).clone();
        det *= piv.clone();
        for i in (c + 1)..n {
            if !is_zero(a.at(i, c)) {
                let factor = a.at(i, c) / &piv;
                for j in c..n {
                    let v = a.at(i, j) - &factor * a.at(c, j);
                    *a.at_mut(i, j) = v;
                }
            }
        }
    }
    det
}
