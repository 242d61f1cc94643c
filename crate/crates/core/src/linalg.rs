//! Small dense linear algebra over `f64` and `Complex64`.
//!
//! The matrices in this crate are at most a few dozen rows wide, so plain
//! row-major storage with partial-pivot LU is all that is needed.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait Scalar:
    Copy
    + PartialEq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        libm::fabs(self)
    }
    fn conj(self) -> Self {
        self
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
}

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type RMat = Matrix<f64>;
pub type CMat = Matrix<Complex64>;

impl<T: Scalar> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
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
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.concat() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Single-row matrix from a row vector.
    pub fn row_vector(v: &[T]) -> Self {
        Matrix { rows: 1, cols: v.len(), data: v.to_vec() }
    }

    pub fn column_vector(v: &[T]) -> Self {
        Matrix { rows: v.len(), cols: 1, data: v.to_vec() }
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = out.row_mut(i);
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `v * self` for a row vector `v`.
    pub fn left_mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &a) in v.iter().enumerate() {
            for (o, &b) in out.iter_mut().zip(self.row(i)) {
                *o += a * b;
            }
        }
        out
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).iter().fold(T::zero(), |acc, &x| acc + x)).collect()
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        Self::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| f64::max(m, x.modulus()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn lu(&self) -> Result<Lu<T>> {
        Lu::new(self)
    }

    pub fn det(&self) -> T {
        match Lu::new(self) {
            Ok(lu) => lu.det(),
            Err(_) => T::zero(),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        self.lu()?.inverse()
    }

    /// Solves `self * X = rhs`.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        self.lu()?.solve(rhs)
    }

    /// Solves `X * self = rhs`.
    pub fn solve_right(&self, rhs: &Self) -> Result<Self> {
        Ok(self.transpose().solve(&rhs.transpose())?.transpose())
    }

    /// 1-norm condition number, computed from an explicit inverse.
    pub fn condition_number(&self) -> f64 {
        match self.inverse() {
            Ok(inv) => self.norm1() * inv.norm1(),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)])
    }
}

impl RMat {
    pub fn to_complex(&self) -> CMat {
        self.map(Complex64::from_f64)
    }
}

impl CMat {
    pub fn re(&self) -> RMat {
        self.map(|z| z.re)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| f64::max(m, libm::fabs(z.im)))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: Self) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: Self) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: Self) -> Matrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Scalar> Neg for &Matrix<T> {
    type Output = Matrix<T>;
    fn neg(self) -> Matrix<T> {
        self.map(|x| -x)
    }
}

impl<T: Scalar> AddAssign<&Matrix<T>> for Matrix<T> {
    fn add_assign(&mut self, rhs: &Matrix<T>) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: f64,
}

impl<T: Scalar> fmt::Debug for Lu<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lu").field("lu", &self.lu).field("perm", &self.perm).finish()
    }
}

impl<T: Scalar> Lu<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("LU of a non-square matrix".into()));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].modulus()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= scale * 1e-300 || best == 0.0 {
                return Err(Error::SingularMatrix("LU factorization"));
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn det(&self) -> T {
        let mut d = T::from_f64(self.sign);
        for i in 0..self.dim() {
            d = d * self.lu[(i, i)];
        }
        d
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                let xk = x[k];
                x[i] -= l * xk;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                let xk = x[k];
                x[i] -= u * xk;
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub fn solve(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if rhs.rows != self.dim() {
            return Err(Error::DimensionMismatch("LU solve right-hand side".into()));
        }
        let mut out = Matrix::zeros(rhs.rows, rhs.cols);
        for j in 0..rhs.cols {
            let x = self.solve_vec(&rhs.column(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    /// Solves `x A = b` for a row vector `x`.
    pub fn solve_left_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        // A = P^T L U, so x P^T L U = b. Solve y U = b, then z L = y, then x = z P.
        let mut y = b.to_vec();
        for j in 0..n {
            for k in 0..j {
                let u = self.lu[(k, j)];
                let yk = y[k];
                y[j] -= yk * u;
            }
            y[j] = y[j] / self.lu[(j, j)];
        }
        for j in (0..n).rev() {
            for k in j + 1..n {
                let l = self.lu[(k, j)];
                let yk = y[k];
                y[j] -= yk * l;
            }
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Solves `X A = rhs`.
    pub fn solve_right(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if rhs.cols != self.dim() {
            return Err(Error::DimensionMismatch("LU right solve".into()));
        }
        let mut out = Matrix::zeros(rhs.rows, rhs.cols);
        for i in 0..rhs.rows {
            let x = self.solve_left_vec(rhs.row(i));
            out.row_mut(i).copy_from_slice(&x);
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        self.solve(&Matrix::identity(self.dim()))
    }
}

/// Least-squares solution of `A x ≈ b` via Householder QR. Requires full
/// column rank.
pub fn least_squares(a: &RMat, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m || n > m {
        return Err(Error::DimensionMismatch("least squares shape".into()));
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    for k in 0..n {
        let norm = libm::sqrt((k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>());
        if norm == 0.0 {
            return Err(Error::SingularMatrix("least squares"));
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..n {
                let dot: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in k..m {
                    r[(i, j)] -= f * v[i - k];
                }
            }
            let dot: f64 = (k..m).map(|i| v[i - k] * y[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                y[i] -= f * v[i - k];
            }
        }
    }
    let scale = (0..n).map(|i| libm::fabs(r[(i, i)])).fold(0.0, f64::max);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        if libm::fabs(r[(i, i)]) <= scale * 1e-14 {
            return Err(Error::SingularMatrix("least squares"));
        }
        let s: f64 = (i + 1..n).map(|j| r[(i, j)] * x[j]).sum();
        x[i] = (y[i] - s) / r[(i, i)];
    }
    Ok(x)
}

pub fn ones(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn sum<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x)
}

pub fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

pub fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (&x, &y)| f64::max(m, (x - y).modulus()))
}
