use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted by [`SymMatrix`] constructors.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Jacobi stops once the off-diagonal Frobenius norm is below this fraction of `‖A‖_F`.
pub const JACOBI_TOL: f64 = 1e-13;

/// Maximum number of cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense real symmetric matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl SymMatrix {
    /// Builds a matrix from row-major data, checking shape and symmetry.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Shape("dimension must be at least 1".into()));
        }
        if data.len() != n * n {
            return Err(Error::Shape(format!("expected {} entries for n = {n}, got {}", n * n, data.len())));
        }
        if let Some(x) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite { at: *x });
        }
        let m = Self { n, data };
        let scale = m.max_abs();
        let asym = m.asymmetry();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::Asymmetric { asymmetry: asym, tolerance: SYMMETRY_TOL * scale });
        }
        Ok(m.symmetrized())
    }

    /// Builds a matrix from a list of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Shape(format!("row {i} has {} entries, expected {n} (matrix must be square)", r.len())));
        }
        Self::from_row_major(n, rows.iter().flatten().copied().collect())
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            data[i * n + i] = *d;
        }
        Self { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn symmetrized(mut self) -> Self {
        let n = self.n;
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
        self
    }

    /// Default zero tolerance `1e-8 * (1 + ‖A‖_max)` for sign classification.
    pub fn default_zero_tol(&self) -> f64 {
        1e-8 * (1.0 + self.max_abs())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|x| s * x).collect() }
    }

    fn zip(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| op(*a, *b)).collect();
        Ok(Self { n: self.n, data })
    }
}

/// Ascending eigenvalues with orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Row-major `n×n`; column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.eigenvectors[i * n + k]).collect()
    }

    pub fn count_below(&self, lambda: f64) -> usize {
        count_below(&self.eigenvalues, lambda)
    }

    pub fn signed_counts(&self, zero_tol: f64) -> SignedCounts {
        signed_counts(&self.eigenvalues, zero_tol)
    }

    /// `max_i |μ_i|`.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `min_i |μ_i|`.
    pub fn gap_at_zero(&self) -> f64 {
        self.eigenvalues.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }

    /// Residual `‖A V − V diag(μ)‖_max`.
    pub fn residual(&self, a: &SymMatrix) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for k in 0..n {
                let av: f64 = (0..n).map(|j| a.get(i, j) * self.eigenvectors[j * n + k]).sum();
                worst = worst.max((av - self.eigenvalues[k] * self.eigenvectors[i * n + k]).abs());
            }
        }
        worst
    }

    /// Orthogonality defect `‖VᵀV − I‖_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for k in 0..n {
            for l in 0..n {
                let dot: f64 = (0..n).map(|i| self.eigenvectors[i * n + k] * self.eigenvectors[i * n + l]).sum();
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Number of entries of an ascending list strictly below `lambda`.
pub fn count_below(sorted: &[f64], lambda: f64) -> usize {
    sorted.partition_point(|&mu| mu < lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedCounts {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

pub fn signed_counts(eigenvalues: &[f64], zero_tol: f64) -> SignedCounts {
    let positive = eigenvalues.iter().filter(|&&mu| mu > zero_tol).count();
    let negative = eigenvalues.iter().filter(|&&mu| mu < -zero_tol).count();
    SignedCounts { positive, negative, zero: eigenvalues.len() - positive - negative }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn eigh(a: &SymMatrix) -> Result<EigenDecomposition> {
    let n = a.dim();
    let mut m = a.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let target = JACOBI_TOL * a.frobenius();

    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&m);
        if off <= target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let eigenvalues = order.iter().map(|&k| m[k * n + k]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[i * n + new_k] = v[i * n + old_k];
        }
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// `V · diag(f(μ)) · Vᵀ`.
pub fn matrix_function(e: &EigenDecomposition, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    let n = e.dim();
    let fvals: Vec<f64> = e
        .eigenvalues
        .iter()
        .map(|&mu| {
            let y = f(mu);
            if y.is_finite() { Ok(y) } else { Err(Error::NonFinite { at: mu }) }
        })
        .collect::<Result<_>>()?;
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..n).map(|k| e.eigenvectors[i * n + k] * fvals[k] * e.eigenvectors[j * n + k]).sum();
            data[i * n + j] = s;
            data[j * n + i] = s;
        }
    }
    Ok(SymMatrix { n, data })
}

/// Trace of `f(A)`, computed from the spectrum alone.
pub fn trace_function(eigenvalues: &[f64], f: impl Fn(f64) -> f64) -> Result<f64> {
    eigenvalues.iter().try_fold(0.0, |acc, &mu| {
        let y = f(mu);
        if y.is_finite() { Ok(acc + y) } else { Err(Error::NonFinite { at: mu }) }
    })
}
