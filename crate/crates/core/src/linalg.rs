//! Small dense linear algebra for ambient dimensions up to 8.
//!
//! Nothing here is tuned for large matrices; the hull, routing, and census
//! code paths only ever touch vectors of length <= 8 and matrices whose
//! larger side is the FFN width.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + *x * *y;
    }
    acc
}

#[inline]
pub fn norm_sq<S: Scalar>(a: &[S]) -> S {
    dot(a, a)
}

#[inline]
pub fn norm<S: Scalar>(a: &[S]) -> S {
    norm_sq(a).sqrt()
}

#[inline]
pub fn inf_norm<S: Scalar>(a: &[S]) -> S {
    a.iter().fold(S::zero(), |m, x| m.max(x.abs()))
}

pub fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| *x - *y).collect()
}

pub fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| *x + *y).collect()
}

pub fn scale<S: Scalar>(a: &[S], s: S) -> Vec<S> {
    a.iter().map(|x| *x * s).collect()
}

pub fn check_dim<S: Scalar>(v: &[S], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    Ok(())
}

pub fn check_finite<S: Scalar>(v: &[S]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Lexicographic comparison of coordinate vectors. Inputs are validated
/// finite at the API boundary, so `partial_cmp` cannot fail.
pub fn lex_cmp<S: Scalar>(a: &[S], b: &[S]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("finite coordinates") {
            std::cmp::Ordering::Equal => continue,
            ord => return ord,
        }
    }
    a.len().cmp(&b.len())
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<S>>", into = "Vec<Vec<S>>")]
#[serde(bound(
    serialize = "S: Scalar + Serialize",
    deserialize = "S: Scalar + Deserialize<'de>"
))]
pub struct Matrix<S: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Invalid("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err(Error::Invalid("matrix needs at least one column".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in &rows {
            check_dim(r, cols)?;
            check_finite(r)?;
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `A x` for a column vector `x` of length `cols`.
    pub fn matvec(&self, x: &[S]) -> Result<Vec<S>> {
        check_dim(x, self.cols)?;
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    /// `A^T x` for a column vector `x` of length `rows`.
    pub fn transpose_matvec(&self, x: &[S]) -> Result<Vec<S>> {
        check_dim(x, self.rows)?;
        let mut out = vec![S::zero(); self.cols];
        for r in 0..self.rows {
            let xr = x[r];
            for c in 0..self.cols {
                out[c] = out[c] + self.get(r, c) * xr;
            }
        }
        Ok(out)
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }
}

impl<S: Scalar> TryFrom<Vec<Vec<S>>> for Matrix<S> {
    type Error = Error;
    fn try_from(rows: Vec<Vec<S>>) -> Result<Self> {
        Matrix::from_rows(rows)
    }
}

impl<S: Scalar> From<Matrix<S>> for Vec<Vec<S>> {
    fn from(m: Matrix<S>) -> Self {
        m.to_rows()
    }
}

/// Determinant of a small square matrix by LU with partial pivoting.
/// Consumes `m` (row-major, `n * n`).
pub fn determinant<S: Scalar>(m: &mut [S], n: usize) -> S {
    debug_assert_eq!(m.len(), n * n);
    let mut det = S::one();
    for col in 0..n {
        let mut pivot = col;
        let mut best = m[col * n + col].abs();
        for r in col + 1..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == S::zero() {
            return S::zero();
        }
        if pivot != col {
            for c in 0..n {
                m.swap(pivot * n + c, col * n + c);
            }
            det = -det;
        }
        let d = m[col * n + col];
        det = det * d;
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f != S::zero() {
                for c in col..n {
                    let v = m[col * n + c];
                    m[r * n + c] = m[r * n + c] - f * v;
                }
            }
        }
    }
    det
}

/// Vector orthogonal to the `d - 1` row vectors of `edges` in `R^d`,
/// computed from cofactor determinants (generalized cross product).
pub fn null_normal<S: Scalar>(edges: &[Vec<S>], dim: usize) -> Vec<S> {
    debug_assert_eq!(edges.len(), dim - 1);
    let k = dim - 1;
    let mut normal = vec![S::zero(); dim];
    let mut minor = vec![S::zero(); k * k];
    for skip in 0..dim {
        for (r, e) in edges.iter().enumerate() {
            let mut cc = 0;
            for c in 0..dim {
                if c == skip {
                    continue;
                }
                minor[r * k + cc] = e[c];
                cc += 1;
            }
        }
        let det = if k == 0 { S::one() } else { determinant(&mut minor, k) };
        normal[skip] = if skip % 2 == 0 { det } else { -det };
    }
    normal
}

/// Eigen-decomposition of a symmetric matrix by the cyclic Jacobi method.
/// Returns eigenvalues in descending order with matching eigenvectors
/// (as rows of the returned matrix).
pub fn jacobi_eigh<S: Scalar>(a: &Matrix<S>) -> (Vec<S>, Matrix<S>) {
    let n = a.rows();
    debug_assert_eq!(n, a.cols());
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let eps = S::epsilon() * S::c(16.0);

    for _sweep in 0..64 {
        let mut off = S::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + m.get(p, q).abs();
            }
        }
        let scale = (0..n).map(|i| m.get(i, i).abs()).fold(S::zero(), S::max);
        if off <= eps * scale.max(S::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() <= eps * scale.max(S::min_positive_value()) {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (S::c(2.0) * apq);
                let t = {
                    let s = if theta >= S::zero() { S::one() } else { -S::one() };
                    s / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(p, k);
                    let vkq = v.get(q, k);
                    v.set(p, k, c * vkp - s * vkq);
                    v.set(q, k, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m.get(j, j)
            .partial_cmp(&m.get(i, i))
            .expect("finite eigenvalues")
    });
    let eigvals = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (r, &i) in order.iter().enumerate() {
        for c in 0..n {
            vecs.set(r, c, v.get(i, c));
        }
    }
    (eigvals, vecs)
}
