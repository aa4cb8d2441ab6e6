//! Small dense complex linear algebra and reproducible per-trial sampling.
//!
//! Everything here works on matrices of a handful of rows and columns (one
//! entry per antenna pair), so the routines favour directness over blocking
//! or vectorization.

use std::ops::{Deref, DerefMut, Index, IndexMut};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector(Vec<C64>);

impl CVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); len])
    }

    pub fn from_vec(entries: Vec<C64>) -> Self {
        Self(entries)
    }

    /// Real vector promoted to complex.
    pub fn from_real(entries: &[f64]) -> Self {
        Self(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product `self^* other`.
    pub fn dot(&self, other: &[C64]) -> C64 {
        inner(&self.0, other)
    }

    pub fn scale(&self, factor: C64) -> CVector {
        CVector(self.0.iter().map(|&x| x * factor).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Deref for CVector {
    type Target = [C64];

    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl DerefMut for CVector {
    fn deref_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }
}

/// `a^* b` for equal-length slices.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Dense complex matrix stored column-major, so `column(k)` is the channel
/// vector from transmit antenna `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from column-major entries, checking dimensions and finiteness.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "non-finite entry at ({}, {})",
                pos % rows,
                pos / rows
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row-major nested slices. Handy in tests.
    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidParameter("ragged rows".into()));
        }
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for c in 0..n_cols {
            for r in rows {
                data.push(r[c]);
            }
        }
        Self::from_col_major(n_rows, n_cols, data)
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    /// Outer product `u v^*`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
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

    pub fn column(&self, k: usize) -> &[C64] {
        &self.data[k * self.rows..(k + 1) * self.rows]
    }

    pub fn column_norm_sqr(&self, k: usize) -> f64 {
        norm_sqr(self.column(k))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[C64]) -> CVector {
        assert_eq!(x.len(), self.cols, "dimension mismatch in mul_vec");
        let mut out = CVector::zeros(self.rows);
        for (c, &xc) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.column(c)) {
                *o += a * xc;
            }
        }
        out
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for c in 0..other.cols {
            let col = self.mul_vec(other.column(c));
            out.data[c * self.rows..(c + 1) * self.rows].copy_from_slice(&col);
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    /// Gram matrix `self^* self`.
    pub fn gram(&self) -> CMatrix {
        let n = self.cols;
        let mut g = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = inner(self.column(i), self.column(j));
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    pub fn scale(&self, factor: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Hermitian within `tol` scaled by the largest entry magnitude.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        (0..self.rows).all(|r| {
            (r..self.cols).all(|c| (self[(r, c)] - self[(c, r)].conj()).norm() <= tol * scale)
        })
    }

    /// Rank of the matrix, counting singular directions above `tol` relative
    /// to the largest pivot of a Gram-Schmidt sweep over the columns.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        let mut basis: Vec<Vec<C64>> = Vec::new();
        let scale = (0..self.cols)
            .map(|k| self.column_norm_sqr(k))
            .fold(0.0, f64::max)
            .sqrt();
        if scale == 0.0 {
            return 0;
        }
        for k in 0..self.cols {
            let mut v = self.column(k).to_vec();
            for b in &basis {
                let p = inner(b, &v);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= p * bi;
                }
            }
            let n = norm_sqr(&v).sqrt();
            if n > tol * scale {
                basis.push(v.iter().map(|z| z / n).collect());
            }
        }
        basis.len()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[c * self.rows + r]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[c * self.rows + r]
    }
}

/// Tolerance used for the Hermitian symmetry check in [`hermitian_solve`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Solves `a x = b` for Hermitian positive-definite `a` via Cholesky.
pub fn hermitian_solve(a: &CMatrix, b: &[C64]) -> Result<CVector> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::Numerical(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.len() != n {
        return Err(Error::Numerical(format!(
            "right-hand side has length {}, matrix is {n}x{n}",
            b.len()
        )));
    }
    if !a.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::Numerical("matrix is not Hermitian".into()));
    }

    // Lower-triangular factor, column-major.
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numerical(format!(
                "matrix is not positive definite (pivot {j} = {d:e})"
            )));
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }

    // L y = b
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)].re;
    }
    // L^* x = y
    let mut x = y;
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[(k, i)].conj() * x[k];
        }
        x[i] = s / l[(i, i)].re;
    }
    Ok(CVector(x))
}

/// Largest singular value and its right singular vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularPair {
    pub sigma: f64,
    /// Unit norm; first nonzero entry real and nonnegative.
    pub v: CVector,
}

pub const POWER_ITERATION_TOL: f64 = 1e-12;
pub const POWER_ITERATION_MAX_ITERS: usize = 10_000;

/// Dominant right singular pair of `a` by power iteration on `a^* a`.
///
/// With repeated top singular values any unit vector of the dominant
/// subspace may be returned.
pub fn dominant_singular_pair(a: &CMatrix) -> Result<SingularPair> {
    if a.is_zero() {
        return Err(Error::DegenerateInput(
            "zero matrix has no dominant direction".into(),
        ));
    }
    let n = a.cols();
    if n == 1 {
        return Ok(SingularPair {
            sigma: a.column_norm_sqr(0).sqrt(),
            v: CVector::from_real(&[1.0]),
        });
    }

    let gram = a.gram();
    // Start from the strongest column direction, tilted by a fixed generic
    // vector so structured inputs cannot start orthogonal to the answer.
    let strongest = (0..n)
        .max_by(|&x, &y| a.column_norm_sqr(x).total_cmp(&a.column_norm_sqr(y)))
        .unwrap_or(0);
    let mut v: Vec<C64> = (0..n)
        .map(|j| {
            let t = j as f64;
            C64::new(
                0.25 / (1.0 + t * 0.618_033_988),
                0.125 / (1.0 + t * std::f64::consts::SQRT_2),
            )
        })
        .collect();
    v[strongest] += C64::new(1.0, 0.0);
    normalize(&mut v);

    for _ in 0..POWER_ITERATION_MAX_ITERS {
        let next = gram.mul_vec(&v);
        let lambda = inner(&v, &next).re;
        let residual: f64 = next
            .iter()
            .zip(&v)
            .map(|(g, x)| (g - x * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let mut next = next.into_vec();
        let nn = norm_sqr(&next).sqrt();
        if nn == 0.0 {
            break;
        }
        for z in &mut next {
            *z /= nn;
        }
        v = next;
        if residual <= POWER_ITERATION_TOL * lambda.abs() {
            break;
        }
    }

    fix_phase(&mut v);
    let sigma = a.mul_vec(&v).norm();
    Ok(SingularPair {
        sigma,
        v: CVector(v),
    })
}

fn normalize(v: &mut [C64]) {
    let n = norm_sqr(v).sqrt();
    for z in v.iter_mut() {
        *z /= n;
    }
}

/// Rotates `v` so its first nonzero entry is real and nonnegative.
fn fix_phase(v: &mut [C64]) {
    let scale = norm_sqr(v).sqrt();
    if let Some(first) = v.iter().copied().find(|z| z.norm() > 1e-12 * scale) {
        let rot = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
        // Clean the residual imaginary part of the pivot.
        if let Some(p) = v.iter_mut().find(|z| z.norm() > 1e-12 * scale) {
            *p = C64::new(p.norm(), 0.0);
        }
    }
}

/// Per-trial generator type.
pub type TrialRng = ChaCha8Rng;

/// Identifies one independent random substream: a master seed and a trial
/// (or block) index. The generator state depends on nothing else, so trials
/// can be evaluated in any order on any number of workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub index: u64,
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        Self { seed, index }
    }

    pub fn generator(&self) -> TrialRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng
    }
}

/// One circularly-symmetric complex Gaussian draw with `E|z|^2 = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// `rows x cols` matrix of i.i.d. CN(0, variance) entries.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> Result<CMatrix> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "variance must be positive and finite, got {variance}"
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(format!(
            "matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    let data = (0..rows * cols)
        .map(|_| complex_gaussian(rng, variance))
        .collect();
    Ok(CMatrix { rows, cols, data })
}

/// Vector of i.i.d. CN(0, variance) entries; `variance` is trusted.
pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVector {
    CVector((0..len).map(|_| complex_gaussian(rng, variance)).collect())
}
