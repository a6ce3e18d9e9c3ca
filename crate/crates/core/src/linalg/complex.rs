use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A logarithm whose imaginary part is tracked continuously along a path
/// instead of being reduced to `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchedLogValue {
    pub modulus_log: f64,
    pub argument: f64,
}

impl BranchedLogValue {
    pub fn exp(&self) -> Complex64 {
        Complex64::from_polar(self.modulus_log.exp(), self.argument)
    }
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Shape(format!("expected {} complex entries, got {}", n * n, data.len())));
        }
        Ok(Self { n, data })
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> Complex64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for k in 0..n {
            let pivot = (k..n).max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm())).unwrap_or(k);
            if a[pivot * n + k].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot * n + j);
                }
                det = -det;
            }
            let akk = a[k * n + k];
            det *= akk;
            for i in (k + 1)..n {
                let factor = a[i * n + k] / akk;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in (k + 1)..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= factor * akj;
                }
            }
        }
        det
    }
}

/// Continuous logarithms of a sampled path of nonzero complex numbers.
///
/// The first argument is the principal argument shifted by the nearest
/// multiple of `2π` to `anchor`. Each following argument is the previous one
/// plus the principal increment, which must stay below `π` in magnitude.
pub fn unwrap_logs(values: &[Complex64], anchor: f64) -> Result<Vec<BranchedLogValue>> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev: Option<(Complex64, f64)> = None;
    for (index, &v) in values.iter().enumerate() {
        if v.norm() == 0.0 || !v.norm().is_finite() {
            return Err(Error::VanishingDeterminant { index });
        }
        let argument = match prev {
            None => {
                let principal = v.arg();
                principal + 2.0 * PI * ((anchor - principal) / (2.0 * PI)).round()
            }
            Some((pv, parg)) => {
                let step = (v / pv).arg();
                // (v/pv).arg() is in (-π, π]; a step of exactly ±π is ambiguous
                if step.abs() >= PI - 1e-12 {
                    return Err(Error::BranchJump { index: index - 1, jump: step.abs() });
                }
                parg + step
            }
        };
        out.push(BranchedLogValue { modulus_log: v.norm().ln(), argument });
        prev = Some((v, argument));
    }
    Ok(out)
}

/// Branch-tracked `ln det M` along a sampled matrix path.
pub fn logdet_tracked(path: &[ComplexMatrix], anchor: f64) -> Result<Vec<BranchedLogValue>> {
    let dets: Vec<Complex64> = path.iter().map(ComplexMatrix::det).collect();
    if let Some(index) = dets.iter().position(|d| d.norm() == 0.0) {
        return Err(Error::VanishingDeterminant { index });
    }
    unwrap_logs(&dets, anchor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(z: Complex64) -> ComplexMatrix {
        ComplexMatrix::new(1, vec![z]).unwrap()
    }

    #[test]
    fn constant_path() {
        let path = vec![scalar(Complex64::new(1.0, 0.0)); 5];
        let logs = logdet_tracked(&path, 0.0).unwrap();
        assert!(logs.iter().all(|l| l.argument == 0.0 && l.modulus_log == 0.0));
    }

    #[test]
    fn winding_three_half_turns() {
        let steps = 150;
        let path: Vec<_> = (0..=steps)
            .map(|k| scalar(Complex64::from_polar(1.0, k as f64 * PI / 50.0)))
            .collect();
        let logs = logdet_tracked(&path, 0.0).unwrap();
        let last = logs.last().unwrap().argument;
        assert!((last - 3.0 * PI).abs() < 1e-12, "{last}");
        for (l, m) in logs.iter().zip(&path) {
            assert!((l.exp() - m.data[0]).norm() <= 1e-10);
        }
    }

    #[test]
    fn vanishing_and_jumping() {
        let path = vec![scalar(Complex64::new(1.0, 0.0)), scalar(Complex64::new(0.0, 0.0))];
        assert!(matches!(logdet_tracked(&path, 0.0), Err(Error::VanishingDeterminant { index: 1 })));
        let path = vec![scalar(Complex64::new(1.0, 0.0)), scalar(Complex64::new(-1.0, 0.0))];
        assert!(matches!(logdet_tracked(&path, 0.0), Err(Error::BranchJump { .. })));
    }

    #[test]
    fn anchor_selects_sheet() {
        let logs = unwrap_logs(&[Complex64::new(1.0, 0.0)], 2.0 * PI + 0.3).unwrap();
        assert!((logs[0].argument - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn lu_determinant() {
        let c = |re, im| Complex64::new(re, im);
        let m = ComplexMatrix::new(3, vec![c(0.0, 1.0), c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(3.0, -1.0), c(2.0, 2.0), c(1.0, 1.0), c(0.0, 0.0)]).unwrap();
        // cofactor expansion along the first row
        let a = &m.data;
        let expected = a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) + a[2] * (a[3] * a[7] - a[4] * a[6]);
        assert!((m.det() - expected).norm() < 1e-13);
    }
}
