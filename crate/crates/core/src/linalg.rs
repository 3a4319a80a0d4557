//! Small dense linear algebra: symmetric 4x4 eigendecomposition, SPD solves
//! for the 3q x 3q covariance matrices, and orthonormal completion.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Vec4<T> = [T; 4];

pub fn dot4<T: Scalar>(a: &Vec4<T>, b: &Vec4<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn norm4<T: Scalar>(a: &Vec4<T>) -> T {
    dot4(a, a).sqrt()
}

pub fn scale4<T: Scalar>(a: &Vec4<T>, s: T) -> Vec4<T> {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

pub fn neg4<T: Scalar>(a: &Vec4<T>) -> Vec4<T> {
    [-a[0], -a[1], -a[2], -a[3]]
}

/// Returns `a / |a|`, or `None` for a zero or non-finite vector.
pub fn normalize4<T: Scalar>(a: &Vec4<T>) -> Option<Vec4<T>> {
    let n = norm4(a);
    if !n.is_finite() || n <= T::min_positive_value() {
        return None;
    }
    Some(scale4(a, T::one() / n))
}

/// Flips `v` so that its first component with magnitude above the sign
/// tolerance is non-negative.
pub fn canonical_sign<T: Scalar>(v: Vec4<T>) -> Vec4<T> {
    for x in v.iter() {
        if x.abs() > T::sign_tol() {
            return if *x < T::zero() { neg4(&v) } else { v };
        }
    }
    v
}

/// A symmetric 4x4 matrix (an element of S(4, R)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMat4<T> {
    m: [[T; 4]; 4],
}

impl<T: Scalar> SymMat4<T> {
    /// Validates symmetry to within the scalar's symmetry tolerance. The
    /// stored matrix is the symmetric part of the input.
    pub fn new(m: [[T; 4]; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (m[i][j] - m[j][i]).abs() > T::symmetry_tol() || !m[i][j].is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
            if !m[i][i].is_finite() {
                return Err(Error::InvalidInput("non-finite diagonal entry".into()));
            }
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(m: [[T; 4]; 4]) -> Self {
        let mut out = m;
        let half = T::lit(0.5);
        for i in 0..4 {
            for j in (i + 1)..4 {
                let v = (m[i][j] + m[j][i]) * half;
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        Self { m: out }
    }

    pub fn zero() -> Self {
        Self {
            m: [[T::zero(); 4]; 4],
        }
    }

    pub fn identity() -> Self {
        Self::diagonal([T::one(); 4])
    }

    pub fn diagonal(d: [T; 4]) -> Self {
        let mut m = [[T::zero(); 4]; 4];
        for i in 0..4 {
            m[i][i] = d[i];
        }
        Self { m }
    }

    /// `x x^T`.
    pub fn outer(x: &Vec4<T>) -> Self {
        let mut out = Self::zero();
        out.add_outer(x, T::one());
        out
    }

    /// `self += w * x x^T`.
    pub fn add_outer(&mut self, x: &Vec4<T>, w: T) {
        for i in 0..4 {
            for j in 0..4 {
                self.m[i][j] += w * x[i] * x[j];
            }
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn entries(&self) -> &[[T; 4]; 4] {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[i][j]
    }

    pub fn mul_vec(&self, x: &Vec4<T>) -> Vec4<T> {
        let mut out = [T::zero(); 4];
        for i in 0..4 {
            out[i] = dot4(&self.m[i], x);
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.m
            .iter()
            .flat_map(|r| r.iter())
            .map(|v| *v * *v)
            .sum::<T>()
            .sqrt()
    }

    pub fn trace(&self) -> T {
        (0..4).map(|i| self.m[i][i]).sum()
    }

    /// `Q^T M Q` for an arbitrary 4x4 `Q` given by rows.
    pub fn congruence(&self, q: &[[T; 4]; 4]) -> Self {
        let mut mq = [[T::zero(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                mq[i][j] = (0..4).map(|k| self.m[i][k] * q[k][j]).sum();
            }
        }
        let mut out = [[T::zero(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = (0..4).map(|k| q[k][i] * mq[k][j]).sum();
            }
        }
        Self::symmetrized(out)
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
///
/// Indices are zero-based: `vector(3)` is the eigenvector of the largest
/// eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenSystem4<T> {
    values: [T; 4],
    vectors: [Vec4<T>; 4],
}

impl<T: Scalar> EigenSystem4<T> {
    /// Assembles a system from parts; used when a caller already holds an
    /// orthonormal frame (e.g. a completed hypothesized point).
    pub fn from_parts(values: [T; 4], vectors: [Vec4<T>; 4]) -> Self {
        Self { values, vectors }
    }

    pub fn values(&self) -> &[T; 4] {
        &self.values
    }

    pub fn vectors(&self) -> &[Vec4<T>; 4] {
        &self.vectors
    }

    pub fn value(&self, r: usize) -> T {
        self.values[r]
    }

    pub fn vector(&self, r: usize) -> &Vec4<T> {
        &self.vectors[r]
    }

    pub fn top(&self) -> &Vec4<T> {
        &self.vectors[3]
    }

    /// `d(4) - d(3)`.
    pub fn eigengap(&self) -> T {
        self.values[3] - self.values[2]
    }

    /// `(d(4) - d(3)) / max(d(4), tiny)`.
    pub fn relative_eigengap(&self) -> T {
        let denom = self.values[3].max(T::min_positive_value());
        self.eigengap() / denom
    }

    pub fn is_focal(&self) -> bool {
        !(self.relative_eigengap() > T::focal_tol())
    }

    /// Replaces eigenvector `r` by its negative.
    pub fn with_flipped(mut self, r: usize) -> Self {
        self.vectors[r] = neg4(&self.vectors[r]);
        self
    }

    /// `sum_r d(r) g(r) g(r)^T`.
    pub fn reconstruct(&self) -> SymMat4<T> {
        let mut out = SymMat4::zero();
        for r in 0..4 {
            out.add_outer(&self.vectors[r], self.values[r]);
        }
        out
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric 4x4 matrix.
pub fn eig_sym4<T: Scalar>(m: &SymMat4<T>) -> EigenSystem4<T> {
    let mut a = m.m;
    let mut v = [[T::zero(); 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let scale = m.frobenius_norm().max(T::one());
    let threshold = T::jacobi_tol() * scale;
    let two = T::lit(2.0);

    for _sweep in 0..64 {
        let off: T = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<T>()
            .sqrt();
        if off < threshold {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| {
        a[i][i]
            .partial_cmp(&a[j][j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut values = [T::zero(); 4];
    let mut vectors = [[T::zero(); 4]; 4];
    for (slot, &col) in order.iter().enumerate() {
        values[slot] = a[col][col];
        let raw = [v[0][col], v[1][col], v[2][col], v[3][col]];
        vectors[slot] = canonical_sign(raw);
    }
    EigenSystem4 { values, vectors }
}

/// Completes a unit vector `u` to an orthonormal frame `[c1, c2, c3, u]`
/// using a Householder reflection. The first three vectors span the
/// orthogonal complement of `u` and carry the canonical sign.
pub fn orthonormal_completion<T: Scalar>(u: &Vec4<T>) -> [Vec4<T>; 4] {
    let u = normalize4(u).unwrap_or([T::zero(), T::zero(), T::zero(), T::one()]);
    // Reflect along the coordinate axis where u is largest for stability.
    let axis = (0..4)
        .max_by(|&i, &j| u[i].abs().partial_cmp(&u[j].abs()).unwrap())
        .unwrap();
    let sign = if u[axis] >= T::zero() {
        T::one()
    } else {
        -T::one()
    };
    let mut w = u;
    w[axis] += sign;
    let ww = dot4(&w, &w);
    let two = T::lit(2.0);
    let mut cols = Vec::with_capacity(3);
    for k in (0..4).filter(|&k| k != axis) {
        // H e_k = e_k - 2 w (w_k) / (w.w)
        let f = two * w[k] / ww;
        let mut col = [T::zero(); 4];
        col[k] = T::one();
        for i in 0..4 {
            col[i] -= f * w[i];
        }
        cols.push(canonical_sign(col));
    }
    [cols[0], cols[1], cols[2], u]
}

pub type Mat4<T> = [[T; 4]; 4];

pub fn mat4_mul_vec<T: Scalar>(m: &Mat4<T>, x: &Vec4<T>) -> Vec4<T> {
    [
        dot4(&m[0], x),
        dot4(&m[1], x),
        dot4(&m[2], x),
        dot4(&m[3], x),
    ]
}

pub fn mat4_mul<T: Scalar>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut out = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Gauss-Jordan inverse with partial pivoting on a copy whose rows are
/// scaled to unit max-norm. Returns `None` when a pivot falls below
/// `pivot_tol`.
pub fn invert4<T: Scalar>(m: &Mat4<T>, pivot_tol: T) -> Option<Mat4<T>> {
    let mut a = *m;
    let mut inv = [[T::zero(); 4]; 4];
    for i in 0..4 {
        let row_max = a[i].iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        if !(row_max > T::zero()) || !row_max.is_finite() {
            return None;
        }
        for j in 0..4 {
            a[i][j] /= row_max;
        }
        inv[i][i] = T::one() / row_max;
    }
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if !(a[piv][col].abs() > pivot_tol) {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..4 {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..4 {
            if i != col {
                let f = a[i][col];
                if f != T::zero() {
                    for j in 0..4 {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Row-major dense matrix.
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

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| *a * *b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// A symmetric matrix intended to be positive definite. Definiteness is
/// certified by [`SpdMatrix::factor`], not at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix<T> {
    inner: Matrix<T>,
}

impl<T: Scalar> SpdMatrix<T> {
    pub fn new(m: Matrix<T>) -> Result<Self> {
        let tol = T::symmetry_tol() * m.max_abs().max(T::one());
        if m.rows() == 0 || !m.is_symmetric(tol) {
            return Err(Error::InvalidInput(
                "SPD matrix must be square, symmetric and non-empty".into(),
            ));
        }
        Ok(Self { inner: m })
    }

    pub(crate) fn new_unchecked(m: Matrix<T>) -> Self {
        Self { inner: m }
    }

    pub fn order(&self) -> usize {
        self.inner.rows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.inner[(i, j)]
    }

    /// Full-rank pivoted Cholesky, or `SingularCovariance`.
    pub fn factor(&self) -> Result<PivotedCholesky<T>> {
        let f = PivotedCholesky::decompose(&self.inner);
        if f.rank < self.order() {
            return Err(Error::SingularCovariance { group: None });
        }
        Ok(f)
    }
}

/// `P^T A P = L L^T` with symmetric pivoting. When `rank < n` only the
/// first `rank` columns of `L` are meaningful.
#[derive(Clone, Debug)]
pub struct PivotedCholesky<T> {
    l: Matrix<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Scalar> PivotedCholesky<T> {
    /// Stops at the first pivot not exceeding `pivot_tol * max diag(A)`.
    pub fn decompose(a: &Matrix<T>) -> Self {
        let n = a.rows();
        let mut work = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut l = Matrix::zeros(n, n);
        let max_diag = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)]));
        let threshold = T::pivot_tol() * max_diag;
        let mut rank = 0;
        if max_diag > T::zero() && max_diag.is_finite() {
            for k in 0..n {
                // Schur complement diagonal
                let (piv, piv_val) = (k..n)
                    .map(|i| {
                        let d = work[(i, i)] - (0..k).map(|m| l[(i, m)] * l[(i, m)]).sum::<T>();
                        (i, d)
                    })
                    .fold((k, T::neg_infinity()), |best, cur| {
                        if cur.1 > best.1 {
                            cur
                        } else {
                            best
                        }
                    });
                if !(piv_val > threshold) {
                    break;
                }
                if piv != k {
                    perm.swap(k, piv);
                    for j in 0..n {
                        let t = work[(k, j)];
                        work[(k, j)] = work[(piv, j)];
                        work[(piv, j)] = t;
                    }
                    for i in 0..n {
                        let t = work[(i, k)];
                        work[(i, k)] = work[(i, piv)];
                        work[(i, piv)] = t;
                    }
                    for m in 0..k {
                        let t = l[(k, m)];
                        l[(k, m)] = l[(piv, m)];
                        l[(piv, m)] = t;
                    }
                }
                let lkk = piv_val.sqrt();
                l[(k, k)] = lkk;
                for i in (k + 1)..n {
                    let s = work[(i, k)] - (0..k).map(|m| l[(i, m)] * l[(k, m)]).sum::<T>();
                    l[(i, k)] = s / lkk;
                }
                rank += 1;
            }
        }
        Self { l, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.perm.len()
    }

    /// Solves `L y = P^T v` over the leading `rank` block.
    fn forward(&self, v: &[T]) -> Vec<T> {
        let r = self.rank;
        let mut y = vec![T::zero(); r];
        for i in 0..r {
            let s = v[self.perm[i]] - (0..i).map(|m| self.l[(i, m)] * y[m]).sum::<T>();
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solves `A x = v`; requires full rank.
    pub fn solve(&self, v: &[T]) -> Vec<T> {
        let n = self.order();
        assert_eq!(self.rank, n, "solve requires a full-rank factorization");
        let y = self.forward(v);
        let mut z = vec![T::zero(); n];
        for i in (0..n).rev() {
            let s = y[i] - ((i + 1)..n).map(|m| self.l[(m, i)] * z[m]).sum::<T>();
            z[i] = s / self.l[(i, i)];
        }
        let mut x = vec![T::zero(); n];
        for i in 0..n {
            x[self.perm[i]] = z[i];
        }
        x
    }

    /// `v^T A^{-1} v`; requires full rank.
    pub fn inverse_quadratic_form(&self, v: &[T]) -> T {
        assert_eq!(
            self.rank,
            self.order(),
            "requires a full-rank factorization"
        );
        self.forward(v).iter().map(|y| *y * *y).sum()
    }

    /// `v^T A^+ v` with `A^+` the Moore-Penrose inverse of the rank-revealed
    /// approximation `P L_r L_r^T P^T`.
    pub fn pseudo_inverse_quadratic_form(&self, v: &[T]) -> T {
        let r = self.rank;
        if r == self.order() {
            return self.inverse_quadratic_form(v);
        }
        if r == 0 {
            return T::zero();
        }
        let n = self.order();
        // w = L_r^T P^T v, G = L_r^T L_r; value = |G^{-1} w|^2
        let pv: Vec<T> = (0..n).map(|i| v[self.perm[i]]).collect();
        let w: Vec<T> = (0..r)
            .map(|c| (c..n).map(|i| self.l[(i, c)] * pv[i]).sum())
            .collect();
        let mut g = Matrix::zeros(r, r);
        for a in 0..r {
            for b in 0..=a {
                let s: T = (a.max(b)..n).map(|i| self.l[(i, a)] * self.l[(i, b)]).sum();
                g[(a, b)] = s;
                g[(b, a)] = s;
            }
        }
        let gf = PivotedCholesky::decompose(&g);
        if gf.rank < r {
            return T::infinity();
        }
        gf.solve(&w).iter().map(|x| *x * *x).sum()
    }
}

/// Solves `s x = v` for an SPD `s`.
pub fn spd_solve<T: Scalar>(s: &SpdMatrix<T>, v: &[T]) -> Result<Vec<T>> {
    if v.len() != s.order() {
        return Err(Error::InvalidInput(format!(
            "right-hand side has length {}, matrix has order {}",
            v.len(),
            s.order()
        )));
    }
    Ok(s.factor()?.solve(v))
}
