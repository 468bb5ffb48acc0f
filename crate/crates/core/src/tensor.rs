//! Dense complex linear algebra for registers of at most a handful of qubits.
//!
//! Matrices are stored row-major. Qubit ordering is big-endian throughout the
//! crate: on an `n`-wire register the basis index of `|q0 q1 ... q(n-1)>` is
//! `sum_k q_k * 2^(n-1-k)`, so wire 0 is the most significant bit.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Default tolerance for elementwise comparisons.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest number of entries a matrix may hold (a 2^12 x 2^12 operator).
const MAX_ENTRIES: usize = 1 << 24;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Dense complex matrix with exact dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        check_size(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries supplied for a {rows}x{cols} matrix", data.len())));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().copied().map(re).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for col in 0..cols {
                data.push(f(r, col));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, col| if r == col { re(1.0) } else { re(0.0) })
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |r, col| if r == col { entries[r] } else { re(0.0) })
    }

    /// Permutation matrix exchanging basis states `i` and `j` (0-based).
    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        let swap = |k: usize| {
            if k == i {
                j
            } else if k == j {
                i
            } else {
                k
            }
        };
        Self::from_fn(n, n, |r, col| if swap(col) == r { re(1.0) } else { re(0.0) })
    }

    /// `|psi><psi|`.
    pub fn outer(state: &StateVector) -> Self {
        let a = state.amplitudes();
        Self::from_fn(a.len(), a.len(), |r, col| a[r] * a[col].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, col: usize) -> C64 {
        self.data[r * self.cols + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, col| self.get(col, r).conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * rho * self^dag`.
    pub fn conjugate(&self, rho: &Self) -> Result<Self> {
        self.matmul(rho)?.matmul(&self.adjoint())
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let v = state.amplitudes();
        if self.cols != v.len() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix applied to a {}-dimensional state",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let out = (0..self.rows).map(|r| (0..self.cols).map(|k| self.get(r, k) * v[k]).sum()).collect();
        Ok(StateVector { amplitudes: out })
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Chebyshev (elementwise max-abs) distance.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.worst_entry(other)?.map_or(0.0, |(_, _, d)| d))
    }

    /// Location and size of the largest elementwise deviation.
    pub fn worst_entry(&self, other: &Self) -> Result<Option<(usize, usize, f64)>> {
        let diff = self.sub(other)?;
        let mut worst: Option<(usize, usize, f64)> = None;
        for r in 0..diff.rows {
            for col in 0..diff.cols {
                let d = diff.get(r, col).norm();
                if worst.is_none_or(|(_, _, w)| d > w) {
                    worst = Some((r, col, d));
                }
            }
        }
        Ok(worst)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other).is_ok_and(|d| d <= tol)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.approx_eq(&self.adjoint(), tol)
    }

    /// Hermitian part `(A + A^dag)/2`.
    pub fn hermitize(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, col| (self.get(r, col) + self.get(col, r).conj()) * 0.5)
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        kron(self, other)
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::Dimension("eigenvalues of a non-square matrix".into()));
        }
        let n = self.rows;
        let h = self.hermitize();
        let m = DMatrix::from_fn(n, n, |r, col| h.get(r, col));
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Checks Hermiticity, unit trace and positivity, each at `tol`.
    pub fn validate_density(&self, tol: f64) -> Result<()> {
        if !self.is_square() {
            return Err(Error::InvalidDensityMatrix("not square".into()));
        }
        if !self.is_hermitian(tol) {
            return Err(Error::InvalidDensityMatrix("not Hermitian".into()));
        }
        let tr = self.trace();
        if (tr - re(1.0)).norm() > tol {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        let min = self.hermitian_eigenvalues()?[0];
        if min < -tol {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn is_density_matrix(&self, tol: f64) -> bool {
        self.validate_density(tol).is_ok()
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|col| {
                    let z = self.get(r, col);
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

fn check_size(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("empty {rows}x{cols} matrix")));
    }
    match rows.checked_mul(cols) {
        Some(n) if n <= MAX_ENTRIES => Ok(()),
        _ => Err(Error::SizeOverflow { rows, cols }),
    }
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows.checked_mul(b.rows).ok_or(Error::SizeOverflow { rows: usize::MAX, cols: 0 })?;
    let cols = a.cols.checked_mul(b.cols).ok_or(Error::SizeOverflow { rows: 0, cols: usize::MAX })?;
    check_size(rows, cols)?;
    Ok(ComplexMatrix::from_fn(rows, cols, |r, col| a.get(r / b.rows, col / b.cols) * b.get(r % b.rows, col % b.cols)))
}

/// Kronecker product of a sequence of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f)?;
    }
    Ok(acc)
}

/// Traces out every subsystem not listed in `keep`.
///
/// `dims` lists the subsystem dimensions in tensor order (first factor most
/// significant). The kept subsystems appear in the result in their original
/// relative order.
pub fn partial_trace(rho: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    if !rho.is_square() {
        return Err(Error::Dimension("partial trace of a non-square matrix".into()));
    }
    let total: usize = dims.iter().product();
    if dims.is_empty() || total != rho.rows {
        return Err(Error::Dimension(format!("subsystem dims {dims:?} do not multiply to {}", rho.rows)));
    }
    if keep.is_empty() {
        return Err(Error::Dimension("keep set must be non-empty".into()));
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Dimension(format!("invalid keep set {keep:?} for {} subsystems", dims.len())));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let env_dim: usize = traced_dims.iter().product();

    // Reassemble a full multi-index from kept and traced digit strings.
    let compose = |kept_idx: usize, env_idx: usize| -> usize {
        let mut digits = vec![0usize; dims.len()];
        for (pos, d) in split_digits(kept_idx, &kept_dims).into_iter().enumerate() {
            digits[kept[pos]] = d;
        }
        for (pos, d) in split_digits(env_idx, &traced_dims).into_iter().enumerate() {
            digits[traced[pos]] = d;
        }
        digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
    };

    Ok(ComplexMatrix::from_fn(out_dim, out_dim, |r, col| {
        (0..env_dim).map(|e| rho.get(compose(r, e), compose(col, e))).sum()
    }))
}

fn split_digits(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &n) in out.iter_mut().zip(dims).rev() {
        *slot = idx % n;
        idx /= n;
    }
    out
}

/// True iff `max |U^dag U - I| <= tol` elementwise.
pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    unitarity_deviation(u).is_some_and(|d| d <= tol)
}

/// `max |U^dag U - I|`, or `None` for a non-square input.
pub fn unitarity_deviation(u: &ComplexMatrix) -> Option<f64> {
    if !u.is_square() {
        return None;
    }
    let prod = u.adjoint().matmul(u).ok()?;
    prod.max_abs_diff(&ComplexMatrix::identity(u.rows)).ok()
}

/// Normalized pure state on a `dim`-dimensional space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Accepts amplitudes whose squared norm is 1 within `1e-10`.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Empty("state vector"));
        }
        let n2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !n2.is_finite() || (n2 - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let n2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if n2 == 0.0 || !n2.is_finite() {
            return Err(Error::NotNormalized(n2));
        }
        let s = n2.sqrt().recip();
        Ok(Self { amplitudes: amplitudes.into_iter().map(|a| a * s).collect() })
    }

    /// Computational basis state `|index>` of a `dim`-dimensional space.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Dimension(format!("basis index {index} >= dim {dim}")));
        }
        let mut a = vec![re(0.0); dim];
        a[index] = re(1.0);
        Ok(Self { amplitudes: a })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension("inner product of unequal dimensions".into()));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn kron(&self, other: &Self) -> Self {
        let a = &self.amplitudes;
        let b = &other.amplitudes;
        Self { amplitudes: a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}
