//! Small dense complex linear algebra layer.
//!
//! Everything in the crate is built on two row-major types, [`CMatrix`] and
//! [`CVector`]. Bipartite composite indices follow a single convention:
//! the pair `(i_a, i_b)` lives at position `i_a * d_b + i_b`.
//!
//! Spectral work (Hermitian eigendecomposition, SVD) is delegated to
//! `nalgebra`; the wrappers here sort the results and enforce the contracts
//! the rest of the crate relies on.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{EbiError, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Maximum allowed `max |A - A^dagger|` for inputs to the spectral routines.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Which factor of a bipartite space to keep in [`partial_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Dense complex matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(EbiError::DimensionMismatch(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(EbiError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from nested rows. Panics on ragged input; intended for
    /// literal constants.
    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self {
            rows: n,
            cols: m,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[CVector]) -> Result<Self> {
        let ncols = cols.len();
        let nrows = cols.first().map_or(0, |v| v.dim());
        if cols.iter().any(|v| v.dim() != nrows) {
            return Err(EbiError::DimensionMismatch(
                "columns of unequal length".into(),
            ));
        }
        let mut m = Self::zeros(nrows, ncols);
        for (j, v) in cols.iter().enumerate() {
            for i in 0..nrows {
                m[(i, j)] = v[i];
            }
        }
        Ok(m)
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

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector::from_vec((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn columns(&self) -> Vec<CVector> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |A - A^dagger|`, or infinity for non-square input.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_re(0.5)
    }

    /// `max |A^dagger A - I|`.
    pub fn unitarity_residual(&self) -> f64 {
        (&(&self.adjoint() * self) - &Self::identity(self.cols)).max_abs()
    }

    /// `max |A^2 - I|`, or infinity for non-square input.
    pub fn involution_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&(self * self) - &Self::identity(self.rows)).max_abs()
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        assert_eq!(self.cols, v.dim(), "matrix-vector dimension mismatch");
        let mut out = vec![ZERO; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(v.entries()).map(|(a, b)| a * b).sum();
        }
        CVector::from_vec(out)
    }

    /// `A B + B A`.
    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    /// Principal submatrix / compression `W^dagger A W`.
    pub fn compress(&self, w: &Self) -> Self {
        &(&w.adjoint() * self) * w
    }

    /// Unitary conjugation `U A U^dagger`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &(u * self) * &u.adjoint()
    }

    /// Expectation value `<v|A|v>`.
    pub fn expectation(&self, v: &CVector) -> Complex64 {
        v.inner(&self.apply(v))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.map(|z| -z)
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

/// Dense complex vector.
#[derive(Clone, PartialEq)]
pub struct CVector {
    data: Vec<Complex64>,
}

impl fmt::Debug for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CVector[")?;
        for z in &self.data {
            write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
        }
        write!(f, " ]")
    }
}

impl CVector {
    pub fn new(data: Vec<Complex64>) -> Result<Self> {
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(EbiError::NonFinite);
        }
        Ok(Self { data })
    }

    pub(crate) fn from_vec(data: Vec<Complex64>) -> Self {
        Self { data }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::from_vec(values.iter().map(|&x| r(x)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_vec(vec![ZERO; dim])
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.data
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns `self / |self|`; the zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scale(r(1.0 / n))
        }
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_vec(self.data.iter().map(|z| z * s).collect())
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.data {
            for b in &other.data {
                out.push(a * b);
            }
        }
        Self::from_vec(out)
    }

    pub fn conj(&self) -> Self {
        Self::from_vec(self.data.iter().map(|z| z.conj()).collect())
    }

    /// `|self><other|`.
    pub fn outer(&self, other: &Self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), other.dim());
        for (i, a) in self.data.iter().enumerate() {
            for (j, b) in other.data.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    /// Reshapes a vector on `C^rows (x) C^cols` into a `rows x cols` matrix.
    pub fn reshape(&self, rows: usize, cols: usize) -> Result<CMatrix> {
        CMatrix::new(rows, cols, self.data.clone())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Index<usize> for CVector {
    type Output = Complex64;
    #[inline]
    fn index(&self, i: usize) -> &Complex64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for CVector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.data[i]
    }
}

impl<'a> Add<&'a CVector> for &'a CVector {
    type Output = CVector;
    fn add(self, rhs: &CVector) -> CVector {
        assert_eq!(self.dim(), rhs.dim());
        CVector::from_vec(
            self.data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl<'a> Sub<&'a CVector> for &'a CVector {
    type Output = CVector;
    fn sub(self, rhs: &CVector) -> CVector {
        assert_eq!(self.dim(), rhs.dim());
        CVector::from_vec(
            self.data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

/// Kronecker product; row index of the result is `i_a * rows(b) + i_b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca, rb, cb) = (a.rows, a.cols, b.rows, b.cols);
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for ia in 0..ra {
        for ja in 0..ca {
            let x = a[(ia, ja)];
            if x == ZERO {
                continue;
            }
            for ib in 0..rb {
                for jb in 0..cb {
                    out[(ia * rb + ib, ja * cb + jb)] = x * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEig {
    pub fn vector(&self, j: usize) -> CVector {
        self.vectors.column(j)
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().expect("empty spectrum")
    }
}

pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEig> {
    if !a.is_square() {
        return Err(EbiError::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let residual = a.hermitian_residual();
    if residual > HERMITIAN_TOL {
        return Err(EbiError::NotHermitian(residual));
    }
    let n = a.rows;
    if n == 0 {
        return Ok(HermitianEig {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = nalgebra::SymmetricEigen::new(a.hermitian_part().to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new_j)] = eig.eigenvectors[(i, old_j)];
        }
    }
    Ok(HermitianEig { values, vectors })
}

/// Schmidt decomposition `psi = sum_s coeffs[s] * alice[s] (x) bob[s]`.
#[derive(Debug, Clone)]
pub struct Schmidt {
    /// Descending, strictly positive.
    pub coeffs: Vec<f64>,
    pub alice: Vec<CVector>,
    pub bob: Vec<CVector>,
}

impl Schmidt {
    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    pub fn reconstruct(&self) -> CVector {
        let da = self.alice.first().map_or(0, |v| v.dim());
        let db = self.bob.first().map_or(0, |v| v.dim());
        let mut out = CVector::zeros(da * db);
        for ((s, u), v) in self.coeffs.iter().zip(&self.alice).zip(&self.bob) {
            out = &out + &u.kron(v).scale(r(*s));
        }
        out
    }

    /// Von Neumann entropy (natural log) of either marginal.
    pub fn entropy(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|s| s * s)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum()
    }
}

/// Singular values below this are dropped from a Schmidt decomposition.
pub const SCHMIDT_CUTOFF: f64 = 1e-12;

pub fn schmidt(psi: &CVector, da: usize, db: usize) -> Result<Schmidt> {
    if psi.dim() != da * db {
        return Err(EbiError::DimensionMismatch(format!(
            "state of dimension {} cannot split as {}x{}",
            psi.dim(),
            da,
            db
        )));
    }
    schmidt_with_cutoff(psi, da, db, SCHMIDT_CUTOFF)
}

/// Schmidt decomposition of an arbitrary (not necessarily normalized) vector
/// keeping singular values above `cutoff`.
pub fn schmidt_with_cutoff(psi: &CVector, da: usize, db: usize, cutoff: f64) -> Result<Schmidt> {
    if psi.dim() != da * db {
        return Err(EbiError::DimensionMismatch(format!(
            "state of dimension {} cannot split as {}x{}",
            psi.dim(),
            da,
            db
        )));
    }
    let m = psi.reshape(da, db)?.to_nalgebra();
    let svd = nalgebra::SVD::new(m, true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut out = Schmidt {
        coeffs: vec![],
        alice: vec![],
        bob: vec![],
    };
    for k in order {
        let s = svd.singular_values[k];
        if s <= cutoff {
            continue;
        }
        out.coeffs.push(s);
        out.alice
            .push(CVector::from_vec((0..da).map(|i| u[(i, k)]).collect()));
        // M = U S V^dagger, so the Bob factor is row k of V^dagger itself.
        out.bob
            .push(CVector::from_vec((0..db).map(|j| v_t[(k, j)]).collect()));
    }
    Ok(out)
}

/// Result of [`sign_operator`].
#[derive(Debug, Clone)]
pub struct SignOperator {
    pub matrix: CMatrix,
    /// Set when some eigenvalue was within `zero_tol` of zero and got sign +1.
    pub zero_eigenvalue: bool,
}

/// Spectral sign `V sgn(w) V^dagger` of a Hermitian matrix, with `sgn(0) = +1`.
///
/// This is the Hermitian involution maximizing `Re tr(U H)`.
pub fn sign_operator(h: &CMatrix, zero_tol: f64) -> Result<SignOperator> {
    let eig = hermitian_eig(h)?;
    let mut zero_eigenvalue = false;
    let signs: Vec<Complex64> = eig
        .values
        .iter()
        .map(|&w| {
            if w.abs() < zero_tol {
                zero_eigenvalue = true;
                ONE
            } else if w > 0.0 {
                ONE
            } else {
                -ONE
            }
        })
        .collect();
    let v = &eig.vectors;
    let matrix = (&(v * &CMatrix::from_diag(&signs)) * &v.adjoint()).hermitian_part();
    Ok(SignOperator {
        matrix,
        zero_eigenvalue,
    })
}

/// Partial trace of an operator on `C^da (x) C^db`.
pub fn partial_trace(rho: &CMatrix, da: usize, db: usize, keep: Side) -> Result<CMatrix> {
    let n = da * db;
    if rho.rows != n || rho.cols != n {
        return Err(EbiError::DimensionMismatch(format!(
            "{}x{} operator on a {}x{} bipartite space",
            rho.rows, rho.cols, da, db
        )));
    }
    Ok(match keep {
        Side::A => {
            let mut out = CMatrix::zeros(da, da);
            for i in 0..da {
                for j in 0..da {
                    out[(i, j)] = (0..db).map(|k| rho[(i * db + k, j * db + k)]).sum();
                }
            }
            out
        }
        Side::B => {
            let mut out = CMatrix::zeros(db, db);
            for i in 0..db {
                for j in 0..db {
                    out[(i, j)] = (0..da).map(|k| rho[(k * db + i, k * db + j)]).sum();
                }
            }
            out
        }
    })
}

/// Reduced state of a pure bipartite vector, computed without forming the
/// full projector.
pub fn reduced_state(psi: &CVector, da: usize, db: usize, keep: Side) -> Result<CMatrix> {
    let m = psi.reshape(da, db)?;
    Ok(match keep {
        Side::A => &m * &m.adjoint(),
        Side::B => (&m.adjoint() * &m).transpose(),
    })
}

/// Trace distance `|rho - sigma|_1 / 2` between Hermitian operators.
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let eig = hermitian_eig(&(rho - sigma).hermitian_part())?;
    Ok(0.5 * eig.values.iter().map(|w| w.abs()).sum::<f64>())
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
}

/// Random Hermitian matrix `(G + G^dagger)/2` with i.i.d. standard complex
/// Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let data = (0..n * n).map(|_| random_gaussian(rng)).collect();
    CMatrix {
        rows: n,
        cols: n,
        data,
    }
    .hermitian_part()
}

/// Normalized complex Gaussian vector.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_vec((0..n).map(|_| random_gaussian(rng)).collect()).normalized()
}

/// Random unitary: eigenvectors of a random Hermitian matrix with random
/// column phases.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let eig = hermitian_eig(&random_hermitian(rng, n)).expect("hermitian by construction");
    let mut u = eig.vectors;
    for j in 0..n {
        let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    u
}

fn random_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im)
}
