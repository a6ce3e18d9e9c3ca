//! Operator paths `A(t) = A₋ + s(t) B₊` and the discretized model operator.
//!
//! The grid has nodes `t_k = -L + k h`, `k = 0..N`, with zero Dirichlet data at
//! the ghost nodes `k = -1` and `k = N`. Differences live on the `N + 1`
//! midpoints between consecutive nodes (ghosts included):
//!
//! ```text
//! (D u)_m  = (u_m − u_{m−1})/h + A(t_{m−½}) (u_{m−1} + u_m)/2
//! (D† u)_m = (u_{m−1} − u_m)/h + A(t_{m−½}) (u_{m−1} + u_m)/2
//! ```
//!
//! `D` discretizes `d/dt + A` and `D†` discretizes `−d/dt + A`, each as an
//! `(N+1)n × Nn` matrix; `H₁ = DᵀD` and `H₂ = D†ᵀD†` are both `Nn × Nn`,
//! nonnegative and block tridiagonal. Evaluating `A` on midpoints keeps the
//! scheme free of the checkerboard modes of central differences, and the
//! time reflection `t ↦ −t` maps the scheme for `A(t)` onto the adjoint
//! scheme for `A(−t)` exactly.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{csv, fmt_f64};
use crate::linalg::{count_below, eigh, BandSymMatrix, SymMatrix};
use crate::quad::{integrate_split, QuadSettings};
use crate::ssf::{ssf_from_spectra, SampledFunction, StepFunction, MERGE_TOL};

/// Profiles must reach their limits within this tolerance at `±PROFILE_T_MAX`.
pub const PROFILE_LIMIT_TOL: f64 = 1e-8;
pub const PROFILE_T_MAX: f64 = 50.0;

/// Default cap on `N·n`.
pub const DEFAULT_MAX_DIM: usize = 6000;
pub const MAX_DIM_ENV: &str = "WITTENLAB_MAX_DIM";

/// Monotone piecewise-cubic Hermite interpolant, clamped to the end values
/// outside the sample range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneCubic {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(Error::Profile(format!("need at least two (t, s) samples of equal length, got {n} and {}", values.len())));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Profile("sample times must be strictly increasing".into()));
        }
        if values.iter().chain(&knots).any(|v| !v.is_finite()) {
            return Err(Error::Profile("samples must be finite".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Profile("sampled profile is not monotone non-decreasing".into()));
        }
        let secants: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / (knots[i + 1] - knots[i])).collect();
        let mut slopes = vec![0.0; n];
        for i in 1..n - 1 {
            let (d0, d1) = (secants[i - 1], secants[i]);
            if d0 * d1 > 0.0 {
                let (h0, h1) = (knots[i] - knots[i - 1], knots[i + 1] - knots[i]);
                let (w0, w1) = (2.0 * h1 + h0, h1 + 2.0 * h0);
                slopes[i] = (w0 + w1) / (w0 / d0 + w1 / d1);
            }
        }
        // one-sided three-point end slopes, limited to keep monotonicity
        let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
            let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if s.signum() != d0.signum() {
                0.0
            } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                s
            }
        };
        if n == 2 {
            slopes = vec![secants[0]; 2];
        } else {
            slopes[0] = end(knots[1] - knots[0], knots[2] - knots[1], secants[0], secants[1]);
            slopes[n - 1] = end(knots[n - 1] - knots[n - 2], knots[n - 2] - knots[n - 3], secants[n - 2], secants[n - 3]);
        }
        Ok(Self { knots, values, slopes })
    }

    fn locate(&self, t: f64) -> Option<(usize, f64, f64)> {
        let n = self.knots.len();
        if t <= self.knots[0] || t >= self.knots[n - 1] {
            return None;
        }
        let i = self.knots.partition_point(|&k| k <= t) - 1;
        let h = self.knots[i + 1] - self.knots[i];
        Some((i, h, (t - self.knots[i]) / h))
    }

    pub fn value(&self, t: f64) -> f64 {
        match self.locate(t) {
            None if t <= self.knots[0] => self.values[0],
            None => *self.values.last().unwrap(),
            Some((i, h, u)) => {
                let (h00, h10) = ((1.0 + 2.0 * u) * (1.0 - u).powi(2), u * (1.0 - u).powi(2));
                let (h01, h11) = (u * u * (3.0 - 2.0 * u), u * u * (u - 1.0));
                let v = h00 * self.values[i] + h10 * h * self.slopes[i] + h01 * self.values[i + 1] + h11 * h * self.slopes[i + 1];
                // exact in arithmetic; the clamp removes roundoff overshoot
                v.clamp(self.values[i], self.values[i + 1])
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self.locate(t) {
            None => 0.0,
            Some((i, h, u)) => {
                let d00 = 6.0 * u * (u - 1.0) / h;
                let d10 = (1.0 - u) * (1.0 - 3.0 * u);
                let d11 = u * (3.0 * u - 2.0);
                d00 * (self.values[i] - self.values[i + 1]) + d10 * self.slopes[i] + d11 * self.slopes[i + 1]
            }
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
}

/// Switching profile `s(t)` with `s(−∞) = 0`, `s(+∞) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Profile {
    /// `eᵗ/(eᵗ + 1)`
    Logistic,
    /// `(1 + tanh t)/2`
    TanhRescaled,
    #[serde(rename = "custom-sampled")]
    CustomSampled(MonotoneCubic),
    /// `1 − s(−t)`
    Reflected(Box<Profile>),
}

impl Profile {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "logistic" => Ok(Self::Logistic),
            "tanh_rescaled" => Ok(Self::TanhRescaled),
            other => Err(Error::Profile(format!("unknown profile {other:?} (expected logistic, tanh_rescaled or custom-sampled)"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Logistic => "logistic".into(),
            Self::TanhRescaled => "tanh_rescaled".into(),
            Self::CustomSampled(_) => "custom-sampled".into(),
            Self::Reflected(p) => format!("reflected({})", p.name()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Logistic => {
                if t >= 0.0 {
                    1.0 / (1.0 + (-t).exp())
                } else {
                    let e = t.exp();
                    e / (1.0 + e)
                }
            }
            Self::TanhRescaled => 0.5 * (1.0 + t.tanh()),
            Self::CustomSampled(c) => c.value(t),
            Self::Reflected(p) => 1.0 - p.value(-t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Self::Logistic => {
                let e = (-t.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            Self::TanhRescaled => {
                let c = t.cosh();
                0.5 / (c * c)
            }
            Self::CustomSampled(c) => c.derivative(t),
            Self::Reflected(p) => p.derivative(-t),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match self {
            Self::CustomSampled(c) => c.knots().to_vec(),
            Self::Reflected(p) => p.kinks().iter().map(|t| -t).collect(),
            _ => vec![0.0],
        }
    }

    pub fn reflected(&self) -> Self {
        match self {
            Self::Reflected(p) => (**p).clone(),
            other => Self::Reflected(Box::new(other.clone())),
        }
    }
}

/// `A(t) = A₋ + s(t) B₊` with asymptotes `A₋` and `A₊ = A₋ + B₊`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorPath {
    a_minus: SymMatrix,
    b_plus: SymMatrix,
    a_plus: SymMatrix,
    profile: Profile,
    /// `∫ |s′| ‖B₊‖ dt` over `[−T_max, T_max]`.
    variation: f64,
}

impl OperatorPath {
    pub fn dim(&self) -> usize {
        self.a_minus.dim()
    }

    pub fn a_minus(&self) -> &SymMatrix {
        &self.a_minus
    }

    pub fn a_plus(&self) -> &SymMatrix {
        &self.a_plus
    }

    pub fn b_plus(&self) -> &SymMatrix {
        &self.b_plus
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn variation(&self) -> f64 {
        self.variation
    }

    pub fn at(&self, t: f64) -> SymMatrix {
        self.combine(self.profile.value(t))
    }

    pub fn derivative_at(&self, t: f64) -> SymMatrix {
        self.b_plus.scale(self.profile.derivative(t))
    }

    fn combine(&self, s: f64) -> SymMatrix {
        self.a_minus.add(&self.b_plus.scale(s)).expect("path matrices share a dimension")
    }

    /// The path run backwards in time: `A_r(t) = A(−t)`, from `A₊` to `A₋`.
    pub fn reversed(&self) -> Self {
        Self {
            a_minus: self.a_plus.clone(),
            b_plus: self.b_plus.scale(-1.0),
            a_plus: self.a_minus.clone(),
            profile: self.profile.reflected(),
            variation: self.variation,
        }
    }
}

/// Validates the profile and builds the path.
pub fn build_path(a_minus: SymMatrix, b_plus: SymMatrix, profile: Profile) -> Result<OperatorPath> {
    if a_minus.dim() != b_plus.dim() {
        return Err(Error::DimensionMismatch { left: a_minus.dim(), right: b_plus.dim() });
    }
    let lo = profile.value(-PROFILE_T_MAX);
    let hi = profile.value(PROFILE_T_MAX);
    if lo.abs() > PROFILE_LIMIT_TOL || (hi - 1.0).abs() > PROFILE_LIMIT_TOL {
        return Err(Error::Profile(format!(
            "s(−{PROFILE_T_MAX}) = {lo:e} and s({PROFILE_T_MAX}) = {hi} must approach 0 and 1 within {PROFILE_LIMIT_TOL:e}"
        )));
    }
    let settings = QuadSettings { abs_tol: 1e-12, rel_tol: 1e-10, ..QuadSettings::default() };
    let total = integrate_split(|t| profile.derivative(t).abs(), -PROFILE_T_MAX, PROFILE_T_MAX, &profile.kinks(), &settings)
        .map_err(|e| Error::Profile(format!("|s′| is not integrable: {e}")))?;
    let variation = total.value * b_plus.frobenius();
    if !variation.is_finite() {
        return Err(Error::Profile(format!("∫|s′|‖B₊‖ dt is not finite ({variation})")));
    }
    let a_plus = a_minus.add(&b_plus)?;
    Ok(OperatorPath { a_minus, b_plus, a_plus, profile, variation })
}

/// `N·n` cap, from `WITTENLAB_MAX_DIM` when set.
pub fn resource_cap() -> Result<usize> {
    match std::env::var(MAX_DIM_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Precondition(format!("{MAX_DIM_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_MAX_DIM),
    }
}

/// `(L, N)` used when none is configured: `(40, 2001)` for scalar fibers,
/// `(30, 1201)` otherwise, shrunk to the resource cap.
pub fn default_resolution(n: usize) -> (f64, usize) {
    if n <= 1 {
        (40.0, 2001)
    } else {
        let mut grid = 1201.min(DEFAULT_MAX_DIM / n.max(1));
        if grid % 2 == 0 {
            grid -= 1;
        }
        (30.0, grid.max(3))
    }
}

/// Truncated model operator with the spectra of `H₁` and `H₂`.
#[derive(Debug, Clone)]
pub struct DiscretizedModel {
    path: OperatorPath,
    l: f64,
    grid: usize,
    h: f64,
    /// `A` at the `N + 1` midpoints.
    midpoint_values: Vec<SymMatrix>,
    h1: BandSymMatrix,
    h2: BandSymMatrix,
    eig_h1: Vec<f64>,
    eig_h2: Vec<f64>,
}

/// Builds `H₁`, `H₂` on `N` nodes over `[−L, L]` and computes both spectra.
pub fn discretize(path: &OperatorPath, l: f64, grid: usize) -> Result<DiscretizedModel> {
    if grid < 3 || grid % 2 == 0 {
        return Err(Error::Precondition(format!("N must be odd and at least 3, got {grid}")));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Precondition(format!("L must be positive, got {l}")));
    }
    let n = path.dim();
    let cap = resource_cap()?;
    if grid * n > cap {
        return Err(Error::ResourceCap { requested: grid * n, cap });
    }
    let h = 2.0 * l / (grid - 1) as f64;
    let midpoint_values: Vec<SymMatrix> = (0..=grid).map(|m| path.at(-l + h * (m as f64 - 0.5))).collect();
    let (h1, h2) = assemble(&midpoint_values, n, h);
    let (e1, e2) = rayon::join(|| h1.eigenvalues(), || h2.eigenvalues());
    Ok(DiscretizedModel { path: path.clone(), l, grid, h, midpoint_values, h1, h2, eig_h1: e1?, eig_h2: e2? })
}

/// `P_m = I/h + A_m/2` and `M_m = −I/h + A_m/2` as dense row-major blocks.
fn stencil_blocks(a: &SymMatrix, h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = a.dim();
    let mut p: Vec<f64> = a.as_slice().iter().map(|x| 0.5 * x).collect();
    let mut m = p.clone();
    for i in 0..n {
        p[i * n + i] += 1.0 / h;
        m[i * n + i] -= 1.0 / h;
    }
    (p, m)
}

/// `XᵀY` for row-major `n×n` blocks.
fn gram(x: &[f64], y: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (0..n).map(|k| x[k * n + i] * y[k * n + j]).sum();
        }
    }
    out
}

fn assemble(mid: &[SymMatrix], n: usize, h: f64) -> (BandSymMatrix, BandSymMatrix) {
    let grid = mid.len() - 1;
    let blocks: Vec<(Vec<f64>, Vec<f64>)> = mid.iter().map(|a| stencil_blocks(a, h)).collect();
    let bw = 2 * n - 1;
    let mut h1 = BandSymMatrix::zeros(grid * n, bw);
    let mut h2 = BandSymMatrix::zeros(grid * n, bw);
    let put_diag = |target: &mut BandSymMatrix, k: usize, block: &[f64]| {
        for i in 0..n {
            for j in 0..=i {
                target.set(k * n + i, k * n + j, 0.5 * (block[i * n + j] + block[j * n + i]));
            }
        }
    };
    let put_lower = |target: &mut BandSymMatrix, k: usize, block: &[f64]| {
        for i in 0..n {
            for j in 0..n {
                target.set((k + 1) * n + i, k * n + j, block[i * n + j]);
            }
        }
    };
    for k in 0..grid {
        let (pk, mk) = (&blocks[k].0, &blocks[k].1);
        let (pn, mn) = (&blocks[k + 1].0, &blocks[k + 1].1);
        let d1: Vec<f64> = gram(mn, mn, n).iter().zip(gram(pk, pk, n)).map(|(a, b)| a + b).collect();
        let d2: Vec<f64> = gram(pn, pn, n).iter().zip(gram(mk, mk, n)).map(|(a, b)| a + b).collect();
        put_diag(&mut h1, k, &d1);
        put_diag(&mut h2, k, &d2);
        if k + 1 < grid {
            put_lower(&mut h1, k, &gram(pn, mn, n));
            put_lower(&mut h2, k, &gram(mn, pn, n));
        }
    }
    (h1, h2)
}

/// Outcome of the trace-formula comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceCheck {
    pub lhs: Complex64Repr,
    pub rhs: Complex64Repr,
    pub rel_err: f64,
}

/// Complex number as a `{re, im}` record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Complex64Repr {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Complex64Repr {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<Complex64Repr> for Complex64 {
    fn from(z: Complex64Repr) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// `g_z(x) = x (x² − z)^{−1/2}`, principal branch.
pub fn g_z(x: f64, z: Complex64) -> Complex64 {
    x / (Complex64::new(x * x, 0.0) - z).sqrt()
}

fn check_off_cut(z: Complex64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) || (z.im == 0.0 && z.re >= 0.0) {
        return Err(Error::Precondition(format!("z = {z} must lie off [0, ∞)")));
    }
    Ok(())
}

impl DiscretizedModel {
    pub fn path(&self) -> &OperatorPath {
        &self.path
    }

    pub fn half_length(&self) -> f64 {
        self.l
    }

    pub fn grid_points(&self) -> usize {
        self.grid
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn h1(&self) -> &BandSymMatrix {
        &self.h1
    }

    pub fn h2(&self) -> &BandSymMatrix {
        &self.h2
    }

    pub fn eigenvalues_h1(&self) -> &[f64] {
        &self.eig_h1
    }

    pub fn eigenvalues_h2(&self) -> &[f64] {
        &self.eig_h2
    }

    /// `t_k` for `k = 0..N`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.grid).map(|k| -self.l + self.h * k as f64).collect()
    }

    /// Dense `D` (for `d/dt + A`) or `D†` (for `−d/dt + A`), `(N+1)n × Nn`, row-major.
    pub fn difference_matrix(&self, adjoint: bool) -> Vec<Vec<f64>> {
        let n = self.path.dim();
        let cols = self.grid * n;
        let mut rows = vec![vec![0.0; cols]; (self.grid + 1) * n];
        for (m, a) in self.midpoint_values.iter().enumerate() {
            let (p, mm) = stencil_blocks(a, self.h);
            let (left, right) = if adjoint { (&p, &mm) } else { (&mm, &p) };
            for i in 0..n {
                for j in 0..n {
                    if m >= 1 {
                        rows[m * n + i][(m - 1) * n + j] = left[i * n + j];
                    }
                    if m < self.grid {
                        rows[m * n + i][m * n + j] = right[i * n + j];
                    }
                }
            }
        }
        rows
    }

    /// `(−λ) Σ [1/(μ₁ − λ) − 1/(μ₂ − λ)]` over index-paired eigenvalues.
    pub fn delta_r(&self, lambda: f64) -> Result<f64> {
        if !(lambda < 0.0) {
            return Err(Error::Precondition(format!("λ must be negative, got {lambda}")));
        }
        let s: f64 = self.eig_h1.iter().zip(&self.eig_h2).map(|(a, b)| 1.0 / (a - lambda) - 1.0 / (b - lambda)).sum();
        Ok(-lambda * s)
    }

    /// `Σ [e^{−tμ₁} − e^{−tμ₂}]` over index-paired eigenvalues.
    pub fn delta_s(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Precondition(format!("t must be positive, got {t}")));
        }
        Ok(self.eig_h1.iter().zip(&self.eig_h2).map(|(a, b)| (-t * a).exp() - (-t * b).exp()).sum())
    }

    /// `d/dt Σ [e^{−tμ₁} − e^{−tμ₂}]`.
    pub fn delta_s_derivative(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Precondition(format!("t must be positive, got {t}")));
        }
        Ok(self.eig_h1.iter().zip(&self.eig_h2).map(|(a, b)| -a * (-t * a).exp() + b * (-t * b).exp()).sum())
    }

    /// Compares `tr((H₂−z)⁻¹ − (H₁−z)⁻¹)` with `(2z)⁻¹ tr(g_z(A₊) − g_z(A₋))`.
    pub fn resolvent_trace_check(&self, z: Complex64) -> Result<TraceCheck> {
        check_off_cut(z)?;
        let lhs: Complex64 = self.eig_h1.iter().zip(&self.eig_h2).map(|(a, b)| 1.0 / (b - z) - 1.0 / (a - z)).sum();
        let plus = eigh(self.path.a_plus())?.eigenvalues;
        let minus = eigh(self.path.a_minus())?.eigenvalues;
        let g: Complex64 = plus.iter().zip(&minus).map(|(p, m)| g_z(*p, z) - g_z(*m, z)).sum();
        let rhs = g / (2.0 * z);
        let rel_err = (lhs - rhs).norm() / (rhs.norm() + 1e-30);
        Ok(TraceCheck { lhs: lhs.into(), rhs: rhs.into(), rel_err })
    }

    /// Number of eigenvalues of `H₁` and `H₂` below `tol`.
    pub fn kernel_dims(&self, tol: f64) -> (usize, usize) {
        (count_below(&self.eig_h1, tol), count_below(&self.eig_h2, tol))
    }

    /// `N_{H₁} − N_{H₂}` as an exact step function.
    pub fn xi_h_step(&self) -> StepFunction {
        ssf_from_spectra(&self.eig_h2, &self.eig_h1)
    }

    /// `N_{H₁}(λ) − N_{H₂}(λ)` on a positive increasing grid.
    pub fn ssf_h_discrete(&self, grid: &[f64]) -> Result<SampledFunction> {
        if grid.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Precondition("λ grid must be positive".into()));
        }
        let values = grid
            .iter()
            .map(|&x| count_below(&self.eig_h1, x) as f64 - count_below(&self.eig_h2, x) as f64)
            .collect();
        Ok(SampledFunction::new(grid.to_vec(), values)?
            .with_meta("L", fmt_f64(self.l))
            .with_meta("N", self.grid)
            .with_meta("source", "eigenvalue counting of H1 and H2"))
    }

    /// CSV `index,eigenvalue_H1,eigenvalue_H2`.
    pub fn eigenvalue_csv(&self) -> String {
        csv(
            &["index", "eigenvalue_H1", "eigenvalue_H2"],
            self.eig_h1
                .iter()
                .zip(&self.eig_h2)
                .enumerate()
                .map(|(i, (a, b))| vec![i.to_string(), fmt_f64(*a), fmt_f64(*b)]),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FredholmDiagnosis {
    pub fredholm: bool,
    pub gap_plus: f64,
    pub gap_minus: f64,
}

/// Fredholm exactly when both asymptotes are invertible with margin `tol`.
pub fn fredholm_check(path: &OperatorPath, tol: f64) -> Result<FredholmDiagnosis> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    let gap_plus = eigh(path.a_plus())?.gap_at_zero();
    let gap_minus = eigh(path.a_minus())?.gap_at_zero();
    Ok(FredholmDiagnosis { fredholm: gap_plus > tol && gap_minus > tol, gap_plus, gap_minus })
}

/// Sorted union of `σ(A₊)` and `σ(A₋)`; each `x` stands for the line `x + iℝ`.
pub fn essential_spectrum_strips(path: &OperatorPath) -> Result<Vec<f64>> {
    let mut all = eigh(path.a_plus())?.eigenvalues;
    all.extend(eigh(path.a_minus())?.eigenvalues);
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for x in all {
        match out.last() {
            Some(&last) if x - last <= MERGE_TOL => {}
            _ => out.push(x),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(am: f64, bp: f64, profile: Profile) -> OperatorPath {
        build_path(SymMatrix::from_diag(&[am]), SymMatrix::from_diag(&[bp]), profile).unwrap()
    }

    #[test]
    fn profiles_and_limits() {
        for t in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            let lg = Profile::Logistic;
            assert!((2.0 * lg.value(t) - 1.0 - (t / 2.0).tanh()).abs() < 1e-15);
            let h = 1e-5;
            for p in [Profile::Logistic, Profile::TanhRescaled, Profile::Logistic.reflected()] {
                let fd = (p.value(t + h) - p.value(t - h)) / (2.0 * h);
                assert!((fd - p.derivative(t)).abs() < 1e-9);
            }
        }
        let path = scalar(-1.0, 2.0, Profile::Logistic);
        assert_eq!(path.a_plus().get(0, 0), 1.0);
        assert!((path.variation() - 2.0).abs() < 1e-9);
        let path = scalar(0.0, 1.0, Profile::TanhRescaled);
        assert_eq!(path.a_plus().get(0, 0), 1.0);
        let flat = scalar(0.5, 0.0, Profile::Logistic);
        assert_eq!(flat.a_plus(), flat.a_minus());
    }

    #[test]
    fn bad_profiles_rejected() {
        let slow = MonotoneCubic::new(vec![-1.0, 1.0], vec![0.0, 0.5]).unwrap();
        let r = build_path(SymMatrix::from_diag(&[0.0]), SymMatrix::from_diag(&[1.0]), Profile::CustomSampled(slow));
        assert!(matches!(r, Err(Error::Profile(_))));
        assert!(MonotoneCubic::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.6, 0.4]).is_err());
    }

    #[test]
    fn custom_profile_is_monotone() {
        let t: Vec<f64> = (-10..=10).map(|k| k as f64).collect();
        let s: Vec<f64> = t.iter().map(|&x| if x < -2.0 { 0.0 } else if x > 2.0 { 1.0 } else { (x + 2.0) / 4.0 }).collect();
        let c = MonotoneCubic::new(t, s).unwrap();
        let mut prev = -1.0;
        for k in 0..=4000 {
            let x = -12.0 + 24.0 * k as f64 / 4000.0;
            let v = c.value(x);
            assert!(v >= prev - 1e-15 && (0.0..=1.0).contains(&v));
            assert!(c.derivative(x) >= -1e-12);
            prev = v;
        }
        let path = build_path(SymMatrix::from_diag(&[-1.0]), SymMatrix::from_diag(&[2.0]), Profile::CustomSampled(c)).unwrap();
        assert!((path.variation() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn grid_preconditions() {
        let path = scalar(-1.0, 2.0, Profile::Logistic);
        assert!(matches!(discretize(&path, 10.0, 100), Err(Error::Precondition(_))));
        assert!(matches!(discretize(&path, 0.0, 101), Err(Error::Precondition(_))));
        assert!(matches!(discretize(&path, 10.0, 6001), Err(Error::ResourceCap { .. })));
    }

    fn transpose_product(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let cols = a[0].len();
        (0..cols).map(|i| (0..cols).map(|j| a.iter().map(|r| r[i] * r[j]).sum()).collect()).collect()
    }

    #[test]
    fn gram_structure_exact() {
        let am = SymMatrix::from_rows(&[vec![-1.0, 0.3], vec![0.3, 0.5]]).unwrap();
        let bp = SymMatrix::from_rows(&[vec![2.0, -0.4], vec![-0.4, 0.7]]).unwrap();
        let path = build_path(am, bp, Profile::Logistic).unwrap();
        let model = discretize(&path, 3.0, 9).unwrap();
        for (adjoint, h) in [(false, model.h1()), (true, model.h2())] {
            let g = transpose_product(&model.difference_matrix(adjoint));
            for (i, row) in g.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    assert!((v - h.get(i, j)).abs() < 1e-12 * (1.0 + v.abs()));
                }
            }
        }
        assert!(model.eigenvalues_h1().iter().chain(model.eigenvalues_h2()).all(|&x| x >= -1e-10));
    }

    #[test]
    fn reversal_swaps_spectra() {
        let path = scalar(-1.0, 2.0, Profile::Logistic);
        let fwd = discretize(&path, 10.0, 201).unwrap();
        let back = discretize(&path.reversed(), 10.0, 201).unwrap();
        for (a, b) in fwd.eigenvalues_h1().iter().zip(back.eigenvalues_h2()) {
            assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
        }
        for (a, b) in fwd.eigenvalues_h2().iter().zip(back.eigenvalues_h1()) {
            assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn constant_zero_path_is_balanced() {
        let path = scalar(0.0, 0.0, Profile::Logistic);
        let model = discretize(&path, 10.0, 101).unwrap();
        assert_eq!(model.delta_r(-0.3).unwrap(), 0.0);
        assert_eq!(model.delta_s(2.0).unwrap(), 0.0);
        assert_eq!(model.kernel_dims((std::f64::consts::PI / 20.0).powi(2) * 0.5), (0, 0));
        assert!(model.ssf_h_discrete(&[0.1, 0.5, 2.0]).unwrap().ordinates.iter().all(|&v| v == 0.0));
        assert!(model.delta_r(0.0).is_err());
        assert!(model.delta_s(0.0).is_err());
    }

    #[test]
    fn tanh_zero_mode_and_trace_formula() {
        let path = scalar(-1.0, 2.0, Profile::Logistic);
        let model = discretize(&path, 40.0, 2001).unwrap();
        assert_eq!(model.kernel_dims(1e-4), (1, 0));
        assert!((model.delta_r(-0.01).unwrap() - 1.0).abs() < 0.05);
        assert!((model.delta_s(50.0).unwrap() - 1.0).abs() < 0.05);
        let c = model.resolvent_trace_check(Complex64::new(-1.0, 0.0)).unwrap();
        assert!((c.rhs.re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert!(c.rel_err < 1e-2, "{}", c.rel_err);
        assert!(model.resolvent_trace_check(Complex64::new(0.5, 0.0)).is_err());
        let back = discretize(&path.reversed(), 40.0, 2001).unwrap();
        assert_eq!(back.kernel_dims(1e-4), (0, 1));
    }

    #[test]
    fn trace_formula_far_from_spectrum() {
        // the error is O(h²|z|), so z = −100 needs h = 0.02
        let path = scalar(-1.0, 2.0, Profile::Logistic);
        let model = discretize(&path, 20.0, 2001).unwrap();
        let c = model.resolvent_trace_check(Complex64::new(-100.0, 0.0)).unwrap();
        assert!(c.lhs.re.abs() < 0.01 && c.rhs.re.abs() < 0.01);
        assert!(c.rel_err < 1e-2, "{}", c.rel_err);
    }

    #[test]
    fn fredholm_and_strips() {
        let tanh = scalar(-1.0, 2.0, Profile::Logistic);
        let d = fredholm_check(&tanh, 1e-6).unwrap();
        assert!(d.fredholm && d.gap_plus == 1.0 && d.gap_minus == 1.0);
        let half = scalar(0.0, 1.0, Profile::TanhRescaled);
        assert!(!fredholm_check(&half, 1e-6).unwrap().fredholm);
        let d = fredholm_check(&scalar(-1.0, 1.0, Profile::Logistic), 1e-6).unwrap();
        assert!(!d.fredholm && d.gap_plus == 0.0);
        assert_eq!(essential_spectrum_strips(&tanh).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(essential_spectrum_strips(&half).unwrap(), vec![0.0, 1.0]);
        let same = build_path(SymMatrix::from_diag(&[-1.0, 1.0]), SymMatrix::zeros(2), Profile::Logistic).unwrap();
        assert_eq!(essential_spectrum_strips(&same).unwrap(), vec![-1.0, 1.0]);
    }

    #[test]
    fn eigenvalue_dump_header() {
        let model = discretize(&scalar(-1.0, 2.0, Profile::Logistic), 5.0, 11).unwrap();
        let text = model.eigenvalue_csv();
        assert!(text.starts_with("index,eigenvalue_H1,eigenvalue_H2\n0,"));
        assert_eq!(text.lines().count(), 12);
    }
}
