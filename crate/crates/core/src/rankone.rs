//! Rank-one perturbations `A_α = A₀ + α ⟨f₀, ·⟩ f₀` through the Borel
//! transform of the spectral measure of `f₀`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::model::Complex64Repr;
use crate::ssf::{ssf_pair, StepFunction};
use crate::transforms::{conj_poisson, op_t_complex, poisson, ScalarFunction, TransformSettings};

/// `G₀` beyond this is treated as divergent.
pub const G0_DIVERGENCE: f64 = 1e12;

pub fn default_eps_probes() -> Vec<f64> {
    vec![1e-2, 1e-4, 1e-6]
}

/// Finite measure: point masses plus an optional sampled density.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
    density: Option<ScalarFunction>,
    density_support: Option<(f64, f64)>,
}

impl DiscreteMeasure {
    /// Atoms `(λ_j, w_j)`; locations distinct, weights positive.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.iter().any(|(l, w)| !l.is_finite() || !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Precondition("atoms need finite locations and positive weights".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Precondition("atom locations must be distinct".into()));
        }
        Ok(Self { atoms, density: None, density_support: None })
    }

    /// Adds a nonnegative density sampled on an increasing grid, linearly
    /// interpolated and zero outside the grid.
    pub fn with_density(mut self, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("density needs an increasing grid of at least two points".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Precondition("density values must be finite and nonnegative".into()));
        }
        let (a, b) = (grid[0], grid[grid.len() - 1]);
        let sampled = crate::ssf::SampledFunction::new(grid, values)?;
        self.density = Some(ScalarFunction::analytic("density", move |x| sampled.interpolate(x)).with_support(a, b));
        self.density_support = Some((a, b));
        Ok(self)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn has_density(&self) -> bool {
        self.density.is_some()
    }

    pub fn atomic_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `G₀(λ) = Σ w_j/(λ_j − λ)²` over the atoms.
    pub fn g0(&self, lambda: f64) -> f64 {
        self.atoms.iter().map(|(l, w)| w / ((l - lambda) * (l - lambda))).sum()
    }

    /// `Σ w_j/(λ_j − x)` at a real point away from the atoms.
    fn f0_real_atomic(&self, x: f64) -> f64 {
        self.atoms.iter().map(|(l, w)| w / (l - x)).sum()
    }
}

/// `F₀(z) = ∫ dμ(λ)/(λ − z)` for `Im z ≠ 0`.
pub fn borel_transform(mu: &DiscreteMeasure, z: Complex64, settings: &TransformSettings) -> Result<Complex64> {
    if z.im == 0.0 || !z.im.is_finite() || !z.re.is_finite() {
        return Err(Error::Precondition(format!("z = {z} must be off the real axis")));
    }
    let mut total: Complex64 = mu.atoms.iter().map(|(l, w)| *w / (Complex64::new(*l, 0.0) - z)).sum();
    if let Some(rho) = &mu.density {
        let eps = z.im.abs();
        let re = -PI * conj_poisson(rho, eps, z.re, settings)?;
        let im = PI * poisson(rho, eps, z.re, settings)? * z.im.signum();
        total += Complex64::new(re, im);
    }
    Ok(total)
}

/// `F_α = F₀/(1 + αF₀)`, checked against `Im F_α = Im F₀/|1 + αF₀|²`.
pub fn f_alpha(mu: &DiscreteMeasure, alpha: f64, z: Complex64, settings: &TransformSettings) -> Result<Complex64> {
    let f0 = borel_transform(mu, z, settings)?;
    let denom = 1.0 + alpha * f0;
    if denom.norm() == 0.0 {
        return Err(Error::Precondition(format!("1 + αF₀ vanishes at z = {z}; input is corrupted")));
    }
    let fa = f0 / denom;
    let expected = f0.im / denom.norm_sqr();
    if (fa.im - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
        return Err(Error::Precondition(format!("Im F_α = {} but Im F₀/|1 + αF₀|² = {expected}", fa.im)));
    }
    Ok(fa)
}

/// `π⁻¹ arg(1 + αF₀(λ + iε))`, principal branch.
pub fn xi_alpha(mu: &DiscreteMeasure, alpha: f64, lambda: f64, eps: f64, settings: &TransformSettings) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("ε must be positive, got {eps}")));
    }
    let f0 = borel_transform(mu, Complex64::new(lambda, eps), settings)?;
    Ok((1.0 + alpha * f0).arg() / PI)
}

/// `ξ(·; A_α, A₀)` by eigenvalue counting for `A₀ = diag(λ_j)`, `f₀ = (√w_j)`.
pub fn matrix_oracle(mu: &DiscreteMeasure, alpha: f64) -> Result<StepFunction> {
    if mu.atoms.is_empty() {
        return Err(Error::Precondition("matrix oracle needs at least one atom".into()));
    }
    if mu.has_density() {
        return Err(Error::Precondition("matrix oracle is defined for purely atomic measures".into()));
    }
    let m = mu.atoms.len();
    let f: Vec<f64> = mu.atoms.iter().map(|a| a.1.sqrt()).collect();
    let mut data = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            data[i * m + j] = alpha * f[i] * f[j];
        }
        data[i * m + i] += mu.atoms[i].0;
    }
    let a_alpha = SymMatrix::from_row_major(m, data)?;
    let a0 = SymMatrix::from_diag(&mu.atoms.iter().map(|a| a.0).collect::<Vec<_>>());
    ssf_pair(&a_alpha, &a0)
}

/// Solutions of `F₀(λ) = −1/α` for the atomic part, one per gap right of each atom.
pub fn eigenvalue_roots(mu: &DiscreteMeasure, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!("α must be positive, got {alpha}")));
    }
    let target = -1.0 / alpha;
    let mass = mu.atomic_mass();
    let mut roots = Vec::with_capacity(mu.atoms.len());
    for (j, &(lj, _)) in mu.atoms.iter().enumerate() {
        let hi = mu.atoms.get(j + 1).map_or(lj + alpha * mass, |a| a.0);
        roots.push(bisect_increasing(|x| mu.f0_real_atomic(x) - target, lj, hi));
    }
    Ok(roots)
}

/// Root of a function increasing from `−∞` to `+∞` (or to ≥ 0) on `(lo, hi)`,
/// evaluated only strictly inside the bracket.
fn bisect_increasing(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralLabel {
    AcSupport,
    ScCandidate,
    PpCandidate,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralTypeReport {
    pub alpha: f64,
    pub eps_probes: Vec<f64>,
    pub grid: Vec<f64>,
    pub membership: Vec<SpectralLabel>,
    /// Roots of `F₀ = −1/α` with finite `G₀`.
    pub eigenvalue_list: Vec<f64>,
    /// Point masses `1/(α² G₀(λ_n))` of the perturbed spectral measure.
    pub weights: Vec<f64>,
}

/// Labels grid points by the boundary behavior of `F₀`.
pub fn classify_spectral_type(
    mu: &DiscreteMeasure,
    alpha: f64,
    grid: &[f64],
    eps_probes: &[f64],
    settings: &TransformSettings,
) -> Result<SpectralTypeReport> {
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!("α must be positive, got {alpha}")));
    }
    if eps_probes.is_empty() || eps_probes.windows(2).any(|w| w[1] >= w[0]) || eps_probes.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Precondition("ε probes must be positive and decreasing".into()));
    }
    let target = -1.0 / alpha;
    let mut membership = Vec::with_capacity(grid.len());
    for (i, &l) in grid.iter().enumerate() {
        let spacing = match (i.checked_sub(1).map(|k| grid[k]), grid.get(i + 1)) {
            (Some(a), Some(b)) => 0.5 * (b - a),
            (Some(a), None) => l - a,
            (None, Some(b)) => b - l,
            (None, None) => eps_probes[eps_probes.len() - 1],
        };
        let values = eps_probes
            .iter()
            .map(|&e| borel_transform(mu, Complex64::new(l, e), settings))
            .collect::<Result<Vec<_>>>()?;
        let last = values[values.len() - 1];
        let prev = values[values.len().saturating_sub(2)];
        let im_settled = (last.im - prev.im).abs() <= 0.05 * last.im.abs();
        let label = if last.im > 1e-6 && last.im < 1e8 && im_settled {
            SpectralLabel::AcSupport
        } else {
            let g0 = mu.g0(l);
            let distances: Vec<f64> = values.iter().map(|v| (v - target).norm()).collect();
            let approaching = distances.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
            let slope = if g0.is_finite() { g0 } else { G0_DIVERGENCE };
            let near_root = (last.re - target).abs() <= slope.max(1.0) * spacing / 2.0 && approaching;
            if near_root && g0 < G0_DIVERGENCE && (last.re - target).abs() <= g0 * spacing / 2.0 {
                SpectralLabel::PpCandidate
            } else if near_root && !(g0 < G0_DIVERGENCE) {
                SpectralLabel::ScCandidate
            } else {
                SpectralLabel::None
            }
        };
        membership.push(label);
    }
    let mut eigenvalue_list = Vec::new();
    let mut weights = Vec::new();
    if !mu.atoms.is_empty() {
        for root in eigenvalue_roots(mu, alpha)? {
            let in_density = mu.density_support.is_some_and(|(a, b)| root > a && root < b);
            let g0 = mu.g0(root);
            if !in_density && g0 < G0_DIVERGENCE {
                eigenvalue_list.push(root);
                weights.push(1.0 / (alpha * alpha * g0));
            }
        }
    }
    Ok(SpectralTypeReport { alpha, eps_probes: eps_probes.to_vec(), grid: grid.to_vec(), membership, eigenvalue_list, weights })
}

/// Result of realizing a prescribed spectral shift function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrescribedSsfReport {
    /// `Re T(ξ₀)(z)/2` at the smallest `|z|`.
    pub recovered_index: f64,
    pub z_sequence: Vec<f64>,
    pub t_values: Vec<Complex64Repr>,
    pub boundary_epsilon: f64,
    pub boundary_grid: Vec<f64>,
    pub boundary_prescribed: Vec<f64>,
    pub boundary_recovered: Vec<f64>,
    /// Largest boundary error over grid points away from the breakpoints of `ξ₀`.
    pub max_boundary_error: f64,
}

/// Builds `1 + αF₀ = exp(∫ ξ₀(λ) dλ/(λ − z))` from a prescribed `ξ₀`, recovers
/// `ξ₀` from boundary arguments and evaluates `[ξ₀(0+) + ξ₀(0−)]/2` through
/// the limit of `T ξ₀(z)` along `z = −10^{−k}`.
pub fn prescribed_ssf_demo(xi0: &ScalarFunction, settings: &TransformSettings) -> Result<PrescribedSsfReport> {
    let (a, b) = xi0
        .support()
        .ok_or_else(|| Error::Precondition("prescribed ξ₀ needs compact support".into()))?;
    let probe: Vec<f64> = (0..=400).map(|k| a + (b - a) * k as f64 / 400.0).collect();
    if let Some(x) = probe.iter().find(|&&x| !(0.0..=1.0).contains(&xi0.eval(x))) {
        return Err(Error::Precondition(format!("ξ₀({x}) = {} lies outside [0, 1]", xi0.eval(*x))));
    }

    let eps = 1e-6;
    let width = (b - a).max(1e-3);
    let boundary_grid: Vec<f64> = (0..=40).map(|k| a - 0.1 * width + 1.2 * width * (k as f64 + 0.37) / 40.0).collect();
    let breaks = xi0.breakpoints();
    let mut boundary_prescribed = Vec::with_capacity(boundary_grid.len());
    let mut boundary_recovered = Vec::with_capacity(boundary_grid.len());
    let mut max_boundary_error: f64 = 0.0;
    for &l in &boundary_grid {
        // ∫ ξ₀(s) ds/(s − z) at z = λ + iε is −π Q_ε ξ₀(λ) + iπ P_ε ξ₀(λ)
        let log_phi = Complex64::new(-PI * conj_poisson(xi0, eps, l, settings)?, PI * poisson(xi0, eps, l, settings)?);
        let phi = log_phi.exp();
        let recovered = phi.arg() / PI;
        let prescribed = xi0.eval(l);
        if breaks.iter().all(|x| (x - l).abs() > 1e-3) {
            max_boundary_error = max_boundary_error.max((recovered - prescribed).abs());
        }
        boundary_prescribed.push(prescribed);
        boundary_recovered.push(recovered);
    }

    let z_sequence: Vec<f64> = (1..=8).map(|k| -(10f64.powi(-k))).collect();
    let t_values = z_sequence
        .iter()
        .map(|&z| op_t_complex(xi0, Complex64::new(z, 0.0), settings).map(Complex64Repr::from))
        .collect::<Result<Vec<_>>>()?;
    let recovered_index = 0.5 * t_values.last().unwrap().re;
    Ok(PrescribedSsfReport {
        recovered_index,
        z_sequence,
        t_values,
        boundary_epsilon: eps,
        boundary_grid,
        boundary_prescribed,
        boundary_recovered,
        max_boundary_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st() -> TransformSettings {
        TransformSettings::default()
    }

    #[test]
    fn borel_examples() {
        let one = DiscreteMeasure::new(vec![(0.0, 1.0)]).unwrap();
        let i = Complex64::new(0.0, 1.0);
        assert!((borel_transform(&one, i, &st()).unwrap() - i).norm() < 1e-15);
        let two = DiscreteMeasure::new(vec![(1.0, 0.5), (-1.0, 0.5)]).unwrap();
        assert!((borel_transform(&two, i, &st()).unwrap() - 0.5 * i).norm() < 1e-15);
        let empty = DiscreteMeasure::new(vec![]).unwrap();
        assert_eq!(borel_transform(&empty, i, &st()).unwrap(), Complex64::new(0.0, 0.0));
        assert!(borel_transform(&one, Complex64::new(0.5, 0.0), &st()).is_err());
    }

    #[test]
    fn f_alpha_examples() {
        let one = DiscreteMeasure::new(vec![(0.0, 1.0)]).unwrap();
        let i = Complex64::new(0.0, 1.0);
        assert!((f_alpha(&one, 1.0, i, &st()).unwrap() - Complex64::new(0.5, 0.5)).norm() < 1e-15);
        assert_eq!(f_alpha(&one, 0.0, i, &st()).unwrap(), borel_transform(&one, i, &st()).unwrap());
    }

    #[test]
    fn xi_alpha_single_atom() {
        let one = DiscreteMeasure::new(vec![(0.0, 1.0)]).unwrap();
        assert!(xi_alpha(&one, 1.0, 0.5, 1e-6, &st()).unwrap() >= 1.0 - 1e-4);
        assert!(xi_alpha(&one, 1.0, 2.0, 1e-6, &st()).unwrap() < 1e-4);
        assert!(xi_alpha(&one, 1e-12, 0.5, 1e-6, &st()).unwrap() < 1e-4);
        let xi = matrix_oracle(&one, 1.0).unwrap();
        assert_eq!(xi.breakpoints(), &[0.0, 1.0]);
        assert_eq!(xi.values(), &[0.0, 1.0, 0.0]);
        assert!(matrix_oracle(&one, 0.0).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn roots_match_matrix_eigenvalues() {
        let mu = DiscreteMeasure::new(vec![(-1.0, 0.5), (1.0, 0.5), (0.2, 0.3)]).unwrap();
        for alpha in [0.1, 1.0, 10.0] {
            let roots = eigenvalue_roots(&mu, alpha).unwrap();
            let xi = matrix_oracle(&mu, alpha).unwrap();
            let atoms: Vec<f64> = mu.atoms().iter().map(|a| a.0).collect();
            let eig: Vec<f64> = xi.breakpoints().iter().copied().filter(|b| !atoms.contains(b)).collect();
            for (r, e) in roots.iter().zip(&eig) {
                assert!((r - e).abs() < 1e-8, "α={alpha}: {r} vs {e}");
            }
            let report = classify_spectral_type(&mu, alpha, &[], &default_eps_probes(), &st()).unwrap();
            let total: f64 = report.weights.iter().sum();
            assert!((total - mu.atomic_mass()).abs() < 1e-9, "{total}");
        }
        let tiny = eigenvalue_roots(&mu, 1e-9).unwrap();
        for (r, a) in tiny.iter().zip(mu.atoms()) {
            assert!((r - a.0).abs() < 1e-8);
        }
    }

    #[test]
    fn classification_labels() {
        let mu = DiscreteMeasure::new(vec![(0.0, 1.0)]).unwrap();
        let grid: Vec<f64> = (0..=40).map(|k| -1.0 + 0.05 * k as f64).collect();
        let report = classify_spectral_type(&mu, 1.0, &grid, &default_eps_probes(), &st()).unwrap();
        let pp: Vec<f64> = grid.iter().zip(&report.membership).filter(|(_, l)| **l == SpectralLabel::PpCandidate).map(|(x, _)| *x).collect();
        assert_eq!(pp.len(), 1);
        assert!((pp[0] - 1.0).abs() < 1e-12);
        assert!(report.membership.iter().all(|l| *l != SpectralLabel::AcSupport));

        let grid: Vec<f64> = (0..=30).map(|k| -1.0 + 0.1 * k as f64).collect();
        let dens = DiscreteMeasure::new(vec![])
            .unwrap()
            .with_density(grid.clone(), grid.iter().map(|x| 1.0 + 0.2 * x * x).collect())
            .unwrap();
        let probe: Vec<f64> = (1..10).map(|k| -0.5 + 0.2 * k as f64).collect();
        let report = classify_spectral_type(&dens, 1.0, &probe, &default_eps_probes(), &st()).unwrap();
        assert!(report.membership.iter().all(|l| *l == SpectralLabel::AcSupport));
        let f0 = borel_transform(&dens, Complex64::new(0.5, 1e-6), &st()).unwrap();
        assert!((f0.im - PI * 1.05).abs() < 1e-4, "{}", f0.im);
    }

    #[test]
    fn prescribed_values() {
        let flat = ScalarFunction::Step(StepFunction::indicator(-1.0, 1.0, 0.37).unwrap());
        let r = prescribed_ssf_demo(&flat, &st()).unwrap();
        assert!((r.recovered_index - 0.37).abs() < 1e-3, "{}", r.recovered_index);
        assert!(r.max_boundary_error < 1e-3);
        let half = ScalarFunction::Step(StepFunction::indicator(0.0, 1.0, 1.0).unwrap());
        assert!((prescribed_ssf_demo(&half, &st()).unwrap().recovered_index - 0.5).abs() < 1e-3);
        let zero = ScalarFunction::Step(StepFunction::indicator(0.0, 1.0, 0.0).unwrap());
        assert_eq!(prescribed_ssf_demo(&zero, &st()).unwrap().recovered_index, 0.0);
        let bad = ScalarFunction::Step(StepFunction::indicator(0.0, 1.0, 1.5).unwrap());
        assert!(prescribed_ssf_demo(&bad, &st()).is_err());
    }
}
