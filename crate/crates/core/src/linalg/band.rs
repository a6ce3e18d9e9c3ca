//! Symmetric banded matrices and their eigenvalues.
//!
//! The discretized model operators are block-tridiagonal, so their spectra are
//! obtained by Givens band reduction to tridiagonal form followed by implicit
//! QL. Cost is `O(N² b)` instead of the `O(N³)` of a dense solver.

use crate::error::{Error, Result};
use crate::linalg::sym::SymMatrix;

/// Symmetric matrix with half-bandwidth `b`, lower band storage.
///
/// `diag[d][i]` holds `A(i + d, i)` for `d = 0..=b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSymMatrix {
    n: usize,
    bandwidth: usize,
    diag: Vec<Vec<f64>>,
}

impl BandSymMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let diag = (0..=bandwidth).map(|d| vec![0.0; n.saturating_sub(d)]).collect();
        Self { n, bandwidth, diag }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bandwidth { 0.0 } else { self.diag[d][lo] }
    }

    /// Sets `A(i, j)` and `A(j, i)`. Panics outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(d <= self.bandwidth, "entry ({i}, {j}) outside band {}", self.bandwidth);
        self.diag[d][lo] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn trace(&self) -> f64 {
        self.diag[0].iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.diag.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn to_dense(&self) -> SymMatrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = self.get(i, j);
            }
        }
        SymMatrix::from_row_major(n, data).expect("band matrix is symmetric by construction")
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let (d, e) = self.tridiagonalize();
        tridiagonal_eigenvalues(d, e)
    }

    /// Reduces to tridiagonal form with Givens rotations, one bandwidth at a time.
    ///
    /// Returns `(diagonal, subdiagonal)`.
    fn tridiagonalize(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        if self.bandwidth <= 1 || n <= 2 {
            let d = self.diag[0].clone();
            let e = if self.bandwidth >= 1 { self.diag[1].clone() } else { vec![0.0; n.saturating_sub(1)] };
            return (d, e);
        }
        // one extra diagonal holds the travelling bulge
        let mut w = Workspace::new(self, self.bandwidth + 1);
        for m in (2..=self.bandwidth).rev() {
            for j in 0..n.saturating_sub(m) {
                let (mut row, mut col) = (j + m, j);
                loop {
                    if w.get(row, col) == 0.0 {
                        break;
                    }
                    w.rotate_to_zero(row, col);
                    // the rotation in plane (row-1, row) fills (row+m, row-1)
                    let next = row + m;
                    if next >= n {
                        break;
                    }
                    col = row - 1;
                    row = next;
                }
            }
        }
        let d = w.diag[0].clone();
        let e = w.diag[1].clone();
        (d, e)
    }
}

struct Workspace {
    n: usize,
    width: usize,
    diag: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(a: &BandSymMatrix, width: usize) -> Self {
        let mut diag: Vec<Vec<f64>> = a.diag.clone();
        while diag.len() <= width {
            diag.push(vec![0.0; a.n.saturating_sub(diag.len())]);
        }
        Self { n: a.n, width, diag }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.width { 0.0 } else { self.diag[d][lo] }
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.width {
            debug_assert!(v.abs() < 1e-300, "fill-in outside workspace at ({i}, {j}): {v}");
            return;
        }
        self.diag[d][lo] = v;
    }

    /// Applies `G A Gᵀ` with `G` a rotation in plane `(q-1, q)` chosen so that
    /// the new `A(q, c)` vanishes.
    fn rotate_to_zero(&mut self, q: usize, c: usize) {
        let p = q - 1;
        let x = self.get(p, c);
        let y = self.get(q, c);
        let r = x.hypot(y);
        if r == 0.0 {
            return;
        }
        let (cs, sn) = (x / r, y / r);
        let lo = p.saturating_sub(self.width);
        let hi = (q + self.width).min(self.n - 1);
        for j in lo..=hi {
            if j == p || j == q {
                continue;
            }
            let apj = self.get(p, j);
            let aqj = self.get(q, j);
            if apj == 0.0 && aqj == 0.0 {
                continue;
            }
            self.set(p, j, cs * apj + sn * aqj);
            self.set(q, j, -sn * apj + cs * aqj);
        }
        let app = self.get(p, p);
        let aqq = self.get(q, q);
        let apq = self.get(p, q);
        self.set(p, p, cs * cs * app + 2.0 * cs * sn * apq + sn * sn * aqq);
        self.set(q, q, sn * sn * app - 2.0 * cs * sn * apq + cs * cs * aqq);
        self.set(p, q, cs * sn * (aqq - app) + (cs * cs - sn * sn) * apq);
        self.set(q, c, 0.0);
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with Wilkinson shifts.
///
/// `d` is the diagonal (length n), `e` the subdiagonal (length n-1).
pub fn tridiagonal_eigenvalues(mut d: Vec<f64>, e_in: Vec<f64>) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    if e_in.len() + 1 != n {
        return Err(Error::Shape(format!("subdiagonal length {} for n = {n}", e_in.len())));
    }
    let mut e = e_in;
    e.push(0.0);
    const MAX_ITER: usize = 60;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_ITER {
                return Err(Error::NoConvergence { sweeps: iter, off_norm: e[l].abs() });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}
