//! Dense matrices and the two eigensolvers the crate relies on.
//!
//! * [`SymmetricEigen`]: Householder tridiagonalisation followed by the
//!   implicit QL iteration (the EISPACK `tred2`/`tql2` pair, as in JAMA).
//! * [`HermitianEigen`]: cyclic complex Jacobi for the small Hermitian
//!   unfoldings used by tensors.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{Num, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Copy + Num> Matrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![E::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = E::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Wraps row-major data. Panics if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<E>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[E]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<E> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul: inner dimensions");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[E]) -> Vec<E> {
        assert_eq!(self.cols, x.len(), "matvec: dimension");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(E::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    pub fn map<F: Copy + Num>(&self, f: impl Fn(E) -> F) -> Matrix<F> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(E, E) -> E) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "zip_with: shapes");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl<T: Real> Matrix<T> {
    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl<T: Real> Matrix<Complex<T>> {
    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest `|a_ij − conj(a_ji)|` over all pairs, diagonal included.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl<E> Index<(usize, usize)> for Matrix<E> {
    type Output = E;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &E {
        &self.data[i * self.cols + j]
    }
}

impl<E> IndexMut<(usize, usize)> for Matrix<E> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    /// Column `k` is the unit eigenvector for `values[k]`. `None` when only
    /// eigenvalues were requested.
    pub vectors: Option<Matrix<T>>,
}

impl<T: Real> SymmetricEigen<T> {
    /// Full decomposition. Only the lower triangle is read; the caller is
    /// responsible for symmetry.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        Self::compute(a, true)
    }

    pub fn eigenvalues(a: &Matrix<T>) -> Result<Vec<T>> {
        Ok(Self::compute(a, false)?.values)
    }

    fn compute(a: &Matrix<T>, want_vectors: bool) -> Result<Self> {
        assert!(a.is_square(), "symmetric eigen: matrix must be square");
        let n = a.rows();
        if n == 0 {
            return Ok(SymmetricEigen {
                values: vec![],
                vectors: want_vectors.then(|| Matrix::zeros(0, 0)),
            });
        }
        let mut v: Vec<T> = Matrix::from_fn(n, n, |i, j| if j <= i { a[(i, j)] } else { a[(j, i)] }).into_vec();
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        tred2(n, &mut v, &mut d, &mut e);
        tql2(n, &mut v, &mut d, &mut e, want_vectors, a.frobenius_norm())?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| d[i]).collect();
        let vectors = want_vectors.then(|| Matrix::from_fn(n, n, |r, c| v[r * n + order[c]]));
        Ok(SymmetricEigen { values, vectors })
    }

    /// `max_k ‖A x_k − λ_k x_k‖₂`. Requires eigenvectors.
    pub fn max_residual(&self, a: &Matrix<T>) -> T {
        let vecs = self.vectors.as_ref().expect("max_residual needs eigenvectors");
        let n = a.rows();
        let mut worst = T::zero();
        for (k, &lambda) in self.values.iter().enumerate() {
            let x: Vec<T> = (0..n).map(|r| vecs[(r, k)]).collect();
            let ax = a.matvec(&x);
            let r = ax
                .iter()
                .zip(&x)
                .map(|(&y, &xi)| (y - lambda * xi) * (y - lambda * xi))
                .sum::<T>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }
}

fn tred2<T: Real>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let z = T::zero();
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut scale = z;
        let mut h = z;
        for dk in d.iter().take(i) {
            scale = scale + dk.abs();
        }
        if scale == z {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = z;
                v[j * n + i] = z;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk = *dk / scale;
                h = h + *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > z {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = z;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in (j + 1)..i {
                    g = g + v[k * n + j] * d[k];
                    e[k] = e[k] + v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = z;
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] = v[k * n + j] - (f * e[k] + g * d[k]);
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = z;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = T::one();
        let h = d[i + 1];
        if h != z {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = z;
                for k in 0..=i {
                    g = g + v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] = v[k * n + j] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = z;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = z;
    }
    v[(n - 1) * n + n - 1] = T::one();
    e[0] = z;
}

fn tql2<T: Real>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T], vectors: bool, norm: T) -> Result<()> {
    let z = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = z;
    let mut f = z;
    let mut tst1 = z;
    let eps = T::epsilon();
    let max_iter = 30 * n.max(10);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::NoConvergence {
                        size: n,
                        iterations: max_iter,
                        norm: norm.as_f64(),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < z {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;
                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = z;
                let mut s2 = z;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if vectors {
                        for k in 0..n {
                            let hk = v[k * n + i + 1];
                            v[k * n + i + 1] = s * v[k * n + i] + c * hk;
                            v[k * n + i] = c * v[k * n + i] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = z;
    }
    Ok(())
}

/// Eigen-decomposition of a complex Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Matrix<Complex<T>>,
}

impl<T: Real> HermitianEigen<T> {
    /// Cyclic Jacobi. Reads the full matrix and assumes it is Hermitian.
    pub fn new(a: &Matrix<Complex<T>>) -> Result<Self> {
        assert!(a.is_square(), "hermitian eigen: matrix must be square");
        let n = a.rows();
        let mut m = a.clone();
        let mut v = Matrix::<Complex<T>>::identity(n);
        let norm = m.frobenius_norm();
        let tiny = T::epsilon() * T::epsilon() * norm * norm;
        let max_sweeps = 100;
        let mut converged = false;
        for _ in 0..max_sweeps {
            let mut off = T::zero();
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off + m[(p, q)].norm_sqr();
                }
            }
            if off <= tiny || off == T::zero() {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    let mag = apq.norm();
                    if mag == T::zero() {
                        continue;
                    }
                    let phase = apq / Complex::new(mag, T::zero());
                    let app = m[(p, p)].re;
                    let aqq = m[(q, q)].re;
                    let tau = (aqq - app) / (T::lit(2.0) * mag);
                    let t = if tau >= T::zero() {
                        T::one() / (tau + (T::one() + tau * tau).sqrt())
                    } else {
                        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                    };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;
                    let cc = Complex::new(c, T::zero());
                    let sc = Complex::new(s, T::zero());
                    // U = [[c, s], [-s·conj(e), c·conj(e)]] on (p, q).
                    let u_qp = -sc * phase.conj();
                    let u_qq = cc * phase.conj();
                    for k in 0..n {
                        let akp = m[(k, p)];
                        let akq = m[(k, q)];
                        m[(k, p)] = akp * cc + akq * u_qp;
                        m[(k, q)] = akp * sc + akq * u_qq;
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * cc + vkq * u_qp;
                        v[(k, q)] = vkp * sc + vkq * u_qq;
                    }
                    for k in 0..n {
                        let apk = m[(p, k)];
                        let aqk = m[(q, k)];
                        m[(p, k)] = apk * cc + aqk * u_qp.conj();
                        m[(q, k)] = apk * sc + aqk * u_qq.conj();
                    }
                    m[(p, q)] = Complex::zero();
                    m[(q, p)] = Complex::zero();
                    m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
                    m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());
                }
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                size: n,
                iterations: max_sweeps,
                norm: norm.as_f64(),
            });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| m[(i, i)].re).collect();
        let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
        Ok(HermitianEigen { values, vectors })
    }

    /// `U·diag(f(λ))·U*`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> Matrix<Complex<T>> {
        let n = self.values.len();
        let mapped: Vec<T> = self.values.iter().map(|&x| f(x)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex::zero();
                for k in 0..n {
                    acc = acc + self.vectors[(i, k)] * self.vectors[(j, k)].conj() * Complex::new(mapped[k], T::zero());
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
            out[(i, i)] = Complex::new(out[(i, i)].re, T::zero());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian, substream};

    fn random_symmetric(n: usize, seed: u64) -> Matrix<f64> {
        let mut rng = substream(seed, "sym", 0);
        let g = Matrix::from_fn(n, n, |_, _| gaussian(&mut rng));
        g.zip_with(&g.transpose(), |a, b| 0.5 * (a + b))
    }

    #[test]
    fn triangle_laplacian_spectrum() {
        let l = Matrix::from_row_major(3, 3, vec![2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]);
        let eig = SymmetricEigen::new(&l).unwrap();
        for (got, want) in eig.values.iter().zip([0.0f64, 3.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(eig.max_residual(&l) < 1e-13);
    }

    #[test]
    fn random_symmetric_decomposition_is_orthogonal_and_accurate() {
        for (n, seed) in [(1, 1), (2, 2), (7, 3), (40, 4)] {
            let a = random_symmetric(n, seed);
            let eig = SymmetricEigen::new(&a).unwrap();
            assert!(eig.max_residual(&a) <= 1e-12 * a.frobenius_norm().max(1.0));
            let v = eig.vectors.as_ref().unwrap();
            let vtv = v.transpose().matmul(v);
            let defect = vtv.zip_with(&Matrix::identity(n), |x, y| x - y).max_abs();
            assert!(defect < 1e-10, "orthogonality defect {defect}");
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
            let only = SymmetricEigen::eigenvalues(&a).unwrap();
            for (x, y) in only.iter().zip(&eig.values) {
                assert!((x - y).abs() < 1e-12);
            }
            let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
            assert!((trace - eig.values.iter().sum::<f64>()).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_eigen_in_f32() {
        let l = Matrix::from_row_major(2, 2, vec![1.0f32, -1.0, -1.0, 1.0]);
        let vals = SymmetricEigen::eigenvalues(&l).unwrap();
        assert!(vals[0].abs() < 1e-6 && (vals[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn hermitian_jacobi_matches_real_embedding() {
        let n = 5;
        let mut rng = substream(9, "herm", 0);
        let g = Matrix::from_fn(n, n, |_, _| Complex::new(gaussian(&mut rng), gaussian(&mut rng)));
        let h = g.zip_with(&g.conj_transpose(), |a, b| (a + b) * 0.5);
        let eig = HermitianEigen::new(&h).unwrap();
        // Real embedding [[A, -B], [B, A]] has each eigenvalue twice.
        let emb = Matrix::from_fn(2 * n, 2 * n, |i, j| {
            let z = h[(i % n, j % n)];
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let real = SymmetricEigen::eigenvalues(&emb).unwrap();
        for (k, &lam) in eig.values.iter().enumerate() {
            assert!((lam - real[2 * k]).abs() < 1e-12);
            assert!((lam - real[2 * k + 1]).abs() < 1e-12);
        }
        let back = eig.reconstruct_with(|x| x);
        let err = back.zip_with(&h, |a, b| a - b).frobenius_norm();
        assert!(err < 1e-12, "reconstruction error {err}");
    }

    #[test]
    fn hermitian_jacobi_on_diagonal_input() {
        let h = Matrix::from_diagonal(&[Complex::new(3.0, 0.0), Complex::new(-2.0, 0.0), Complex::new(1.0, 0.0)]);
        let eig = HermitianEigen::new(&h).unwrap();
        assert_eq!(eig.values, vec![-2.0, 1.0, 3.0]);
    }
}
