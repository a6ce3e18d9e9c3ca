//! Singular integral transforms of spectral shift functions.
//!
//! Endpoint singularities are removed by substitution before quadrature:
//! - `ν = √λ sin θ` for the kernel `(λ − ν²)^{−1/2}`,
//! - `ν = √λ tan θ` for `(ν² + λ)^{−3/2}` and its complex continuation,
//! - `τ = u²` for `τ^{−1/2}` in the Abel pair,
//! - `λ' = λ + ε tan θ` for the Poisson kernel.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigh, matrix_function};
use crate::model::{DiscretizedModel, OperatorPath};
use crate::quad::{exp_sinh, gauss_kronrod_split, integrate_split, tanh_sinh, GaussLegendre, QuadSettings};
use crate::ssf::{SampledFunction, StepFunction};

/// Knobs shared by the transforms; echoed into result metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformSettings {
    pub quad: QuadSettings,
    /// Truncation radius for Hilbert-type integrals of functions without compact support.
    pub hilbert_radius: f64,
    /// Residual threshold of the Lebesgue-point probe.
    pub lebesgue_threshold: f64,
}

impl Default for TransformSettings {
    fn default() -> Self {
        Self { quad: QuadSettings::default(), hilbert_radius: 1e3, lebesgue_threshold: 1e-3 }
    }
}

type Callback = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function of the spectral variable.
///
/// Integrability against `(1 + ν²)^{−3/2}` is assumed by the transforms and
/// checked numerically where a tail integral is involved.
#[derive(Clone)]
pub enum ScalarFunction {
    Analytic {
        label: String,
        f: Callback,
        /// Points where `f` jumps or kinks; quadratures split there.
        breakpoints: Vec<f64>,
        /// `f` vanishes outside this interval.
        support: Option<(f64, f64)>,
    },
    Step(StepFunction),
    /// Linear interpolation, constant beyond the sample range.
    Sampled(SampledFunction),
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Analytic { label, breakpoints, support, .. } => f
                .debug_struct("Analytic")
                .field("label", label)
                .field("breakpoints", breakpoints)
                .field("support", support)
                .finish(),
            Self::Step(s) => f.debug_tuple("Step").field(s).finish(),
            Self::Sampled(s) => f.debug_tuple("Sampled").field(&s.len()).finish(),
        }
    }
}

impl ScalarFunction {
    pub fn analytic(label: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Analytic { label: label.to_string(), f: Arc::new(f), breakpoints: Vec::new(), support: None }
    }

    pub fn with_breakpoints(self, points: Vec<f64>) -> Self {
        match self {
            Self::Analytic { label, f, support, .. } => Self::Analytic { label, f, breakpoints: points, support },
            other => other,
        }
    }

    pub fn with_support(self, a: f64, b: f64) -> Self {
        match self {
            Self::Analytic { label, f, breakpoints, .. } => Self::Analytic { label, f, breakpoints, support: Some((a, b)) },
            other => other,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::Step(StepFunction::constant(c))
    }

    pub fn step(s: StepFunction) -> Self {
        Self::Step(s)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Analytic { f, support, .. } => match support {
                Some((a, b)) if x < *a || x > *b => 0.0,
                _ => f(x),
            },
            Self::Step(s) => s.eval(x),
            Self::Sampled(s) => s.interpolate(x),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Analytic { breakpoints, support, .. } => {
                let mut out = breakpoints.clone();
                if let Some((a, b)) = support {
                    out.extend([*a, *b]);
                }
                out.sort_by(f64::total_cmp);
                out.dedup();
                out
            }
            Self::Step(s) => s.breakpoints().to_vec(),
            Self::Sampled(_) => Vec::new(),
        }
    }

    /// Interval outside which the function vanishes, when known.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Self::Analytic { support, .. } => *support,
            Self::Step(s) if s.has_compact_support() => {
                let b = s.breakpoints();
                Some((b[0], b[b.len() - 1])).filter(|_| !b.is_empty()).or(Some((0.0, 0.0)))
            }
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Analytic { label, .. } => label.clone(),
            Self::Step(_) => "step".into(),
            Self::Sampled(_) => "sampled".into(),
        }
    }

    /// Integrability class the transforms assume.
    pub fn integrability_class(&self) -> &'static str {
        "L1(R; (1 + nu^2)^(-3/2) dnu)"
    }
}

fn sorted_unique(mut pts: Vec<f64>) -> Vec<f64> {
    pts.retain(|x| x.is_finite());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `(1/π) ∫₀^{√λ} f(ν) (λ − ν²)^{−1/2} dν` as `(1/π) ∫₀^{π/2} f(√λ sin θ) dθ`.
pub fn op_s(f: &ScalarFunction, lambda: f64, settings: &TransformSettings) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("λ must be positive, got {lambda}")));
    }
    let r = lambda.sqrt();
    let mut cuts = vec![0.0];
    cuts.extend(f.breakpoints().into_iter().filter(|&b| b > 0.0 && b < r).map(|b| (b / r).asin()));
    cuts.push(FRAC_PI_2);
    let cuts = sorted_unique(cuts);
    let gl = GaussLegendre::new(settings.quad.gl_nodes);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += gl.integrate(|theta| f.eval(r * theta.sin()), w[0], w[1])?;
    }
    Ok(total / PI)
}

/// `ξ_H(λ) = (1/π) ∫_{−√λ}^{√λ} ξ_A(ν) (λ − ν²)^{−1/2} dν`, exact for steps
/// through the antiderivative `arcsin(ν/√λ)`.
pub fn pushnitski_forward(xi: &StepFunction, grid: &[f64]) -> Result<SampledFunction> {
    if grid.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Precondition("λ grid must be positive".into()));
    }
    let values = grid.iter().map(|&l| pushnitski_at(xi, l)).collect();
    Ok(SampledFunction::new(grid.to_vec(), values)?.with_meta("method", "closed-form arcsine pieces"))
}

/// Single-point closed form behind [`pushnitski_forward`].
pub fn pushnitski_at(xi: &StepFunction, lambda: f64) -> f64 {
    let r = lambda.sqrt();
    let angle = |x: f64| {
        if x <= -r {
            -FRAC_PI_2
        } else if x >= r {
            FRAC_PI_2
        } else {
            (x / r).asin()
        }
    };
    let b = xi.breakpoints();
    let mut edges = Vec::with_capacity(b.len() + 2);
    edges.push(f64::NEG_INFINITY);
    edges.extend_from_slice(b);
    edges.push(f64::INFINITY);
    let total: f64 = edges
        .windows(2)
        .zip(xi.values())
        .filter(|(_, v)| **v != 0.0)
        .map(|(w, v)| v * (angle(w[1]) - angle(w[0])))
        .sum();
    total / PI
}

/// Quadrature route to the same transform: `S` applied to `ν ↦ f(ν) + f(−ν)`.
pub fn pushnitski_quadrature(f: &ScalarFunction, lambda: f64, settings: &TransformSettings) -> Result<f64> {
    let g = f.clone();
    let mut pts = f.breakpoints();
    pts.extend(f.breakpoints().iter().map(|x| -x));
    let sym = ScalarFunction::analytic("symmetrized", move |x| g.eval(x) + g.eval(-x)).with_breakpoints(sorted_unique(pts));
    op_s(&sym, lambda, settings)
}

fn theta_cuts(f: &ScalarFunction, scale: f64) -> Vec<f64> {
    let mut cuts = vec![0.0, -FRAC_PI_4, FRAC_PI_4];
    cuts.extend(f.breakpoints().into_iter().map(|b| (b / scale).atan()));
    sorted_unique(cuts)
}

/// `λ ∫_ℝ f(ν)(ν² + λ)^{−3/2} dν` as `∫_{−π/2}^{π/2} f(√λ tan θ) cos θ dθ`.
pub fn op_t(f: &ScalarFunction, lambda: f64, settings: &TransformSettings) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("λ must be positive, got {lambda}")));
    }
    let r = lambda.sqrt();
    let g = |theta: f64| {
        let c = theta.cos();
        if c <= 0.0 { 0.0 } else { f.eval(r * theta.tan()) * c }
    };
    let res = integrate_split(g, -FRAC_PI_2, FRAC_PI_2, &theta_cuts(f, r), &settings.quad)
        .map_err(|e| Error::DivergentTail(format!("weighted integral of {}: {e}", f.label())))?;
    if !res.converged {
        return Err(Error::DivergentTail(format!("weighted integral of {} did not settle (error {:e})", f.label(), res.error)));
    }
    Ok(res.value)
}

/// `−z ∫_ℝ f(ν)(ν² − z)^{−3/2} dν`, principal branch, for `z ∉ [0, ∞)`.
///
/// With `ν = √|z| tan θ` and `ẑ = z/|z|` the integral becomes
/// `−ẑ ∫ f(√|z| tan θ)(tan²θ − ẑ)^{−3/2} sec²θ dθ`, bounded at `θ = ±π/2`.
pub fn op_t_complex(f: &ScalarFunction, z: Complex64, settings: &TransformSettings) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) || (z.im == 0.0 && z.re >= 0.0) {
        return Err(Error::Precondition(format!("z = {z} lies on the cut [0, ∞)")));
    }
    let r = z.norm().sqrt();
    let zh = z / z.norm();
    // (tan²θ − ẑ) = (sin²θ − ẑ cos²θ)/cos²θ, so the integrand is
    // f · cos θ · (sin²θ − ẑ cos²θ)^{−3/2}
    let integrand = |theta: f64| -> Complex64 {
        let (s, c) = theta.sin_cos();
        if c <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let base = Complex64::new(s * s, 0.0) - zh * (c * c);
        f.eval(r * theta.tan()) * c * base.powf(-1.5)
    };
    let cuts = theta_cuts(f, r);
    let re = integrate_split(|t| integrand(t).re, -FRAC_PI_2, FRAC_PI_2, &cuts, &settings.quad)?;
    let im = integrate_split(|t| integrand(t).im, -FRAC_PI_2, FRAC_PI_2, &cuts, &settings.quad)?;
    if !(re.converged && im.converged) {
        return Err(Error::DivergentTail(format!("complex weighted integral of {} did not settle", f.label())));
    }
    Ok(-zh * Complex64::new(re.value, im.value))
}

/// Closed form of [`abel_f`] for `f(λ) = (λ − z)⁻¹`, `z < 0`.
pub fn abel_resolvent_closed_form(z: f64, nu: f64) -> f64 {
    let a = -z;
    -nu / (2.0 * a * (nu * nu + a).sqrt())
}

/// Closed form of [`abel_f`] for `f(λ) = e^{−sλ}`, `s > 0`.
pub fn abel_gaussian_closed_form(s: f64, nu: f64) -> f64 {
    -0.5 * libm::erf(s.sqrt() * nu)
}

/// Abel-type transform `F(ν) = (ν/π) ∫₀^∞ [f(u² + ν²) − f(0)]/(u² + ν²) du`.
pub fn abel_f(f: &(dyn Fn(f64) -> f64 + Sync), nu: f64, settings: &TransformSettings) -> Result<f64> {
    if nu == 0.0 {
        return Ok(0.0);
    }
    let f0 = f(0.0);
    let nu2 = nu * nu;
    let g = |u: f64| {
        let x = u * u + nu2;
        (f(x) - f0) / x
    };
    Ok(nu / PI * half_line(g, (nu2 + 1.0).sqrt(), settings, "Abel transform")?)
}

/// `F′(ν) = (2/π) ∫₀^∞ f′(u² + ν²) du`.
pub fn abel_fprime(fprime: &(dyn Fn(f64) -> f64 + Sync), nu: f64, settings: &TransformSettings) -> Result<f64> {
    let nu2 = nu * nu;
    Ok(2.0 / PI * half_line(|u| fprime(u * u + nu2), (nu2 + 1.0).sqrt(), settings, "Abel derivative")?)
}

fn half_line(g: impl Fn(f64) -> f64, split: f64, settings: &TransformSettings, what: &str) -> Result<f64> {
    let near = tanh_sinh(&g, 0.0, split, &settings.quad)?;
    let far = exp_sinh(|u| g(split + u), 0.0, &settings.quad).map_err(|e| match e {
        Error::DivergentTail(m) => Error::DivergentTail(format!("{what}: {m}")),
        other => other,
    })?;
    if !(near.converged && far.converged) {
        return Err(Error::DivergentTail(format!("{what}: quadrature did not settle (errors {:e}, {:e})", near.error, far.error)));
    }
    Ok(near.value + far.value)
}

/// The three sides of the trace relation for `f(H₂) − f(H₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRelation {
    /// `Σ [f(μ₂) − f(μ₁)]` over the discretized spectra.
    pub lhs: f64,
    /// `∫ ξ(λ; H₂, H₁) f′(λ) dλ` from the counting step function.
    pub mid: f64,
    /// `tr(F(A₊) − F(A₋))` with the Abel transform `F` of `f`.
    pub rhs: f64,
}

pub fn trace_relation_check(
    f: &(dyn Fn(f64) -> f64 + Sync),
    path: &OperatorPath,
    model: &DiscretizedModel,
    settings: &TransformSettings,
) -> Result<TraceRelation> {
    let lhs: f64 = model
        .eigenvalues_h1()
        .iter()
        .zip(model.eigenvalues_h2())
        .map(|(a, b)| f(*b) - f(*a))
        .sum();
    let mid = model.xi_h_step().integrate_antiderivative(f)?;
    let mut rhs = 0.0;
    for (a, sign) in [(path.a_plus(), 1.0), (path.a_minus(), -1.0)] {
        let e = eigh(a)?;
        let values = e.eigenvalues.iter().map(|&x| abel_f(f, x, settings)).collect::<Result<Vec<f64>>>()?;
        let lookup = |x: f64| values[e.eigenvalues.iter().position(|&y| y == x).expect("called on the eigenvalues")];
        let fa = matrix_function(&e, lookup);
        rhs += sign * fa?.trace();
    }
    Ok(TraceRelation { lhs, mid, rhs })
}

fn hilbert_range(f: &ScalarFunction, settings: &TransformSettings) -> (f64, f64) {
    let r = settings.hilbert_radius;
    match f.support() {
        Some((a, b)) => (a.max(-r), b.min(r)),
        None => (-r, r),
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("ε must be positive, got {eps}")))
    }
}

fn kronrod_settings(settings: &TransformSettings) -> QuadSettings {
    QuadSettings { abs_tol: 1e-12, rel_tol: 1e-10, ..settings.quad }
}

/// `H_ε f(λ) = π⁻¹ ∫_{|λ−λ'| ≥ ε} f(λ')/(λ − λ') dλ'`.
///
/// Functions without compact support are cut off at `±hilbert_radius`.
pub fn hilbert_truncated(f: &ScalarFunction, eps: f64, lambda: f64, settings: &TransformSettings) -> Result<f64> {
    check_eps(eps)?;
    let (a, b) = hilbert_range(f, settings);
    let g = |x: f64| f.eval(x) / (lambda - x);
    let mut pts = f.breakpoints();
    pts.extend([lambda - 10.0 * eps, lambda + 10.0 * eps]);
    let qs = kronrod_settings(settings);
    let mut total = 0.0;
    for (lo, hi) in [(a, b.min(lambda - eps)), (a.max(lambda + eps), b)] {
        if hi > lo {
            let r = gauss_kronrod_split(g, lo, hi, &pts, &qs)?;
            if !r.converged {
                return Err(Error::Quadrature(format!("truncated Hilbert transform at {lambda}: error {:e}", r.error)));
            }
            total += r.value;
        }
    }
    Ok(total / PI)
}

/// `P_ε f(λ) = π⁻¹ ∫ ε f(λ')/((λ − λ')² + ε²) dλ'` with `λ' = λ + ε tan θ`.
pub fn poisson(f: &ScalarFunction, eps: f64, lambda: f64, settings: &TransformSettings) -> Result<f64> {
    check_eps(eps)?;
    let cuts: Vec<f64> = f.breakpoints().into_iter().map(|b| ((b - lambda) / eps).atan()).collect();
    let g = |theta: f64| if theta.cos() <= 0.0 { 0.0 } else { f.eval(lambda + eps * theta.tan()) };
    let r = integrate_split(g, -FRAC_PI_2, FRAC_PI_2, &sorted_unique(cuts), &settings.quad)?;
    Ok(r.value / PI)
}

/// `P_ε |f|`.
pub fn poisson_abs(f: &ScalarFunction, eps: f64, lambda: f64, settings: &TransformSettings) -> Result<f64> {
    let g = f.clone();
    let abs = ScalarFunction::analytic("abs", move |x| g.eval(x).abs()).with_breakpoints(f.breakpoints());
    poisson(&abs, eps, lambda, settings)
}

/// `Q_ε f(λ) = π⁻¹ ∫ (λ − λ') f(λ')/((λ − λ')² + ε²) dλ'`, cut off like [`hilbert_truncated`].
pub fn conj_poisson(f: &ScalarFunction, eps: f64, lambda: f64, settings: &TransformSettings) -> Result<f64> {
    check_eps(eps)?;
    let (a, b) = hilbert_range(f, settings);
    let g = |x: f64| {
        let d = lambda - x;
        d * f.eval(x) / (d * d + eps * eps)
    };
    let mut pts = f.breakpoints();
    pts.extend([lambda - 10.0 * eps, lambda - eps, lambda, lambda + eps, lambda + 10.0 * eps]);
    let r = gauss_kronrod_split(g, a, b, &pts, &kronrod_settings(settings))?;
    if !r.converged {
        return Err(Error::Quadrature(format!("conjugate Poisson integral at {lambda}: error {:e}", r.error)));
    }
    Ok(r.value / PI)
}

/// Outcome of the one-sided Lebesgue-point probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LebesguePointResult {
    pub point: f64,
    /// `f_L(x+)` when `x` passes as a right Lebesgue point.
    pub right_value: Option<f64>,
    pub left_value: Option<f64>,
    /// `(h, h⁻¹ ∫_x^{x+h} |f − α₊|)` with `h` decreasing.
    pub right_residual_curve: Vec<(f64, f64)>,
    pub left_residual_curve: Vec<(f64, f64)>,
    /// Last window average on each side, whether or not it qualified.
    pub right_candidate: f64,
    pub left_candidate: f64,
    pub threshold: f64,
    /// The numerical criterion used, spelled out for the output metadata.
    pub criterion: String,
}

/// Default probe windows `h_k = 2^{−k}`, `k = 3..=20`.
pub fn default_h_sequence() -> Vec<f64> {
    (3..=20).map(|k| 2f64.powi(-k)).collect()
}

struct SideProbe {
    value: Option<f64>,
    candidate: f64,
    curve: Vec<(f64, f64)>,
}

fn probe_side(f: &ScalarFunction, x: f64, hs: &[f64], dir: f64, settings: &TransformSettings) -> Result<SideProbe> {
    let pts = f.breakpoints();
    let window = |h: f64, g: &dyn Fn(f64) -> f64| -> Result<(f64, bool)> {
        let (a, b) = if dir > 0.0 { (x, x + h) } else { (x - h, x) };
        let qs = QuadSettings { abs_tol: 1e-12 * h, rel_tol: 1e-10, ..settings.quad };
        let r = gauss_kronrod_split(g, a, b, &pts, &qs)?;
        Ok((r.value / h, r.converged))
    };
    let mut averages = Vec::with_capacity(hs.len());
    let mut all_converged = true;
    for &h in hs {
        let (v, ok) = window(h, &|y| f.eval(y))?;
        averages.push(v);
        all_converged &= ok;
    }
    let candidate = *averages.last().unwrap();
    let tail = &averages[averages.len().saturating_sub(3)..];
    let settled = tail.iter().all(|v| (v - candidate).abs() < settings.lebesgue_threshold);
    let mut curve = Vec::with_capacity(hs.len());
    for &h in hs {
        let (m, ok) = window(h, &|y| (f.eval(y) - candidate).abs())?;
        curve.push((h, m));
        all_converged &= ok;
    }
    let last = curve.last().unwrap().1;
    let decaying = last == 0.0 || loglog_slope(&curve[curve.len() / 2..]).is_some_and(|s| s > 0.0);
    let qualifies = settled && all_converged && last < settings.lebesgue_threshold && decaying;
    Ok(SideProbe { value: qualifies.then_some(candidate), candidate, curve })
}

/// Least-squares slope of `ln m` against `ln h` over points with `m > 0`.
fn loglog_slope(curve: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve.iter().filter(|p| p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// One-sided Lebesgue-point probe at `x` over the given decreasing windows.
pub fn lebesgue_classify(f: &ScalarFunction, x: f64, h_sequence: &[f64], settings: &TransformSettings) -> Result<LebesguePointResult> {
    if h_sequence.is_empty() || h_sequence.iter().any(|&h| !(h > 0.0)) || h_sequence.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("window sizes must be positive and strictly decreasing".into()));
    }
    let right = probe_side(f, x, h_sequence, 1.0, settings)?;
    let left = probe_side(f, x, h_sequence, -1.0, settings)?;
    Ok(LebesguePointResult {
        point: x,
        right_value: right.value,
        left_value: left.value,
        right_residual_curve: right.curve,
        left_residual_curve: left.curve,
        right_candidate: right.candidate,
        left_candidate: left.candidate,
        threshold: settings.lebesgue_threshold,
        criterion: format!(
            "window averages settle, residual at the smallest window below {:e}, residual decays in h (log-log slope > 0 or exactly zero)",
            settings.lebesgue_threshold
        ),
    })
}

/// The comb with value 1 on `(1/(n+1), (1/n + 1/(n+1))/2)` and 0 on the rest
/// of `(1/(n+1), 1/n)`, mirrored to negative arguments, zero outside `[−1, 1]`.
pub fn comb_function() -> ScalarFunction {
    ScalarFunction::analytic("comb", |x: f64| {
        let a = x.abs();
        if a >= 1.0 || a == 0.0 {
            return 0.0;
        }
        let n = (1.0 / a).floor();
        let mid = 0.5 * (1.0 / n + 1.0 / (n + 1.0));
        if a < mid { 1.0 } else { 0.0 }
    })
    .with_breakpoints((1..=64).flat_map(|n| {
        let n = n as f64;
        let mid = 0.5 * (1.0 / n + 1.0 / (n + 1.0));
        [1.0 / n, mid, -1.0 / n, -mid]
    }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st() -> TransformSettings {
        TransformSettings::default()
    }

    fn indicator(a: f64, b: f64) -> ScalarFunction {
        ScalarFunction::Step(StepFunction::indicator(a, b, 1.0).unwrap())
    }

    #[test]
    fn s_normalization_and_monomial() {
        for l in [1e-3, 1.0, 1e3] {
            assert!((op_s(&ScalarFunction::constant(1.0), l, &st()).unwrap() - 0.5).abs() < 1e-12);
        }
        let id = ScalarFunction::analytic("nu", |x| x);
        assert!((op_s(&id, 1.0, &st()).unwrap() - 1.0 / PI).abs() < 1e-12);
        assert_eq!(op_s(&ScalarFunction::constant(0.0), 2.0, &st()).unwrap(), 0.0);
        assert!(op_s(&id, 0.0, &st()).is_err());
    }

    #[test]
    fn pushnitski_closed_form() {
        let xi = StepFunction::indicator(-1.0, 1.0, 1.0).unwrap();
        let s = pushnitski_forward(&xi, &[0.5, 4.0]).unwrap();
        assert!((s.ordinates[0] - 1.0).abs() < 1e-15);
        assert!((s.ordinates[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(pushnitski_at(&StepFunction::zero(), 3.0), 0.0);
        for l in [0.3, 1.0, 2.5, 9.0] {
            let q = pushnitski_quadrature(&ScalarFunction::Step(xi.clone()), l, &st()).unwrap();
            assert!((q - pushnitski_at(&xi, l)).abs() < 1e-12);
        }
    }

    #[test]
    fn t_normalizations() {
        let h = ScalarFunction::Step(StepFunction::heaviside(0.0));
        for l in [1e-4, 0.3, 1.0, 50.0] {
            assert!((op_t(&h, l, &st()).unwrap() - 1.0).abs() < 1e-12);
            assert!((op_t(&ScalarFunction::constant(1.0), l, &st()).unwrap() - 2.0).abs() < 1e-12);
        }
        let c = ScalarFunction::analytic("smooth", |x: f64| 0.37 * (-x * x).exp() + 0.1 * x);
        assert!((op_t(&c, 1e-6, &st()).unwrap() - 0.74).abs() < 1e-3);
        let quadratic = ScalarFunction::analytic("nu^2", |x| x * x);
        assert!(op_t(&quadratic, 1.0, &st()).is_err());
    }

    #[test]
    fn t_complex_normalizations() {
        let h = ScalarFunction::Step(StepFunction::heaviside(0.0));
        for z in [Complex64::new(-1.0, 0.0), Complex64::new(-1e-6, 0.0), Complex64::from_polar(0.5, 0.75 * PI)] {
            let v = op_t_complex(&h, z, &st()).unwrap();
            assert!((v - 1.0).norm() < 1e-10, "{z}: {v}");
        }
        assert_eq!(op_t_complex(&ScalarFunction::constant(0.0), Complex64::new(-1.0, 0.0), &st()).unwrap(), Complex64::new(0.0, 0.0));
        let v = op_t_complex(&indicator(-1.0, 1.0), Complex64::new(-1e-6, 0.0), &st()).unwrap();
        assert!((v - 2.0).norm() < 1e-3);
        assert!(op_t_complex(&h, Complex64::new(1.0, 0.0), &st()).is_err());
        // real negative z agrees with the real operator
        let f = ScalarFunction::analytic("bump", |x: f64| 1.0 / (1.0 + (x - 0.3).powi(2)));
        let a = op_t_complex(&f, Complex64::new(-0.7, 0.0), &st()).unwrap();
        let b = op_t(&f, 0.7, &st()).unwrap();
        assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-14);
    }

    #[test]
    fn abel_closed_forms() {
        let f = |x: f64| 1.0 / (x + 1.0);
        let v = abel_f(&f, 1.0, &st()).unwrap();
        assert!((v + 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-12);
        let g = |x: f64| (-x).exp();
        assert!((abel_f(&g, 1.0, &st()).unwrap() + 0.5 * libm::erf(1.0)).abs() < 1e-12);
        assert_eq!(abel_f(&g, 0.0, &st()).unwrap(), 0.0);
        // F′ against a centred difference of F
        let gp = |x: f64| -(-x).exp();
        let h = 1e-4;
        let fd = (abel_f(&g, 0.7 + h, &st()).unwrap() - abel_f(&g, 0.7 - h, &st()).unwrap()) / (2.0 * h);
        assert!((abel_fprime(&gp, 0.7, &st()).unwrap() - fd).abs() < 1e-7);
        assert!(matches!(abel_f(&|x: f64| x, 1.0, &st()), Err(Error::DivergentTail(_))));
    }

    #[test]
    fn poisson_family() {
        let one = ScalarFunction::constant(1.0);
        for (e, l) in [(0.1, 0.0), (1.0, 3.0), (1e-3, -2.0)] {
            assert!((poisson(&one, e, l, &st()).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(conj_poisson(&one, 0.1, 0.0, &st()).unwrap().abs() < 1e-10);
        assert!(hilbert_truncated(&one, 0.1, 0.0, &st()).unwrap().abs() < 1e-10);
        let ind = indicator(0.0, 1.0);
        for eps in [1e-2, 1e-4] {
            assert!(hilbert_truncated(&ind, eps, 0.5, &st()).unwrap().abs() < 1e-10);
        }
        let v = hilbert_truncated(&ind, 1e-4, 0.25, &st()).unwrap();
        assert!((v - (1.0f64 / 3.0).ln() / PI).abs() < 1e-9);
    }

    #[test]
    fn kernel_comparison_bound() {
        let f = ScalarFunction::analytic("wave", |x: f64| (3.0 * x).sin() * (-x * x).exp()).with_support(-8.0, 8.0);
        for l in [-1.0, 0.0, 0.4, 2.0] {
            for eps in [1e-3, 1e-1, 1.0] {
                let h = hilbert_truncated(&f, eps, l, &st()).unwrap();
                let q = conj_poisson(&f, eps, l, &st()).unwrap();
                let p = poisson_abs(&f, eps, l, &st()).unwrap();
                assert!((h - q).abs() <= p + 1e-6);
            }
        }
    }

    #[test]
    fn lebesgue_probe() {
        let hs = default_h_sequence();
        let r = lebesgue_classify(&ScalarFunction::Step(StepFunction::heaviside(0.0)), 0.0, &hs, &st()).unwrap();
        assert_eq!((r.right_value, r.left_value), (Some(1.0), Some(0.0)));
        for beta in [0.0, 0.5, 7.0] {
            let f = ScalarFunction::analytic("f_beta", move |x: f64| if x > 0.0 { 1.0 } else if x < 0.0 { 0.0 } else { beta })
                .with_breakpoints(vec![0.0]);
            let r = lebesgue_classify(&f, 0.0, &hs, &st()).unwrap();
            assert_eq!((r.right_value, r.left_value), (Some(1.0), Some(0.0)));
        }
        let r = lebesgue_classify(&comb_function(), 0.0, &hs, &st()).unwrap();
        assert_eq!(r.right_value, None);
        assert_eq!(r.left_value, None);
        let smooth = ScalarFunction::analytic("cos", |x: f64| x.cos());
        let r = lebesgue_classify(&smooth, 0.0, &hs, &st()).unwrap();
        assert!(r.right_value.is_some_and(|v| (v - 1.0).abs() < 1e-6));
    }
}
