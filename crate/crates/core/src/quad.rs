//! Quadrature rules.
//!
//! Endpoint singularities are removed by substitutions in the callers, so the
//! rules here only need smooth (or piecewise smooth, split at known breaks)
//! integrands:
//! - Gauss–Legendre with a fixed node count for bounded smooth integrands,
//! - tanh-sinh on finite intervals and exp-sinh on half-lines,
//! - adaptive Gauss–Kronrod (7/15) for integrands with unsplit discontinuities.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerances and caps shared by the transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum halving level of the double-exponential rules (step `2^-level`).
    pub max_level: u32,
    /// Gauss–Legendre node count.
    pub gl_nodes: usize,
    /// Interval budget of the adaptive Gauss–Kronrod rule.
    pub gk_max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-12, max_level: 12, gl_nodes: 200, gk_max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    fn zero() -> Self {
        Self { value: 0.0, error: 0.0, evaluations: 0, converged: true }
    }

    fn combine(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }

    /// Turns a non-converged result into an error.
    pub fn require_converged(self, what: &str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Quadrature(format!("{what}: estimate {} with error {:e}", self.value, self.error)))
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f`, failing on the first non-finite sample.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
        let (c, d) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let xi = c + d * x;
            let y = f(xi);
            if !y.is_finite() {
                return Err(Error::NonFinite { at: xi });
            }
            s += w * y;
        }
        Ok(d * s)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

const TANH_SINH_TMAX: f64 = 4.0;
const EXP_SINH_TMIN: f64 = -5.0;
const EXP_SINH_TMAX: f64 = 5.0;

/// Tanh-sinh rule on a finite interval.
///
/// Nodes that round onto an endpoint are skipped, so integrable endpoint
/// singularities are tolerated.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64, settings: &QuadSettings) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult::zero());
    }
    if a > b {
        let r = tanh_sinh(f, b, a, settings)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    let half = 0.5 * (b - a);
    let mut evaluations = 0;
    let mut term = |t: f64| -> Result<f64> {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        // distance to the nearer endpoint, 1 - tanh|u| = e^{-|u|}/cosh u
        let gap = half * (-u.abs()).exp() / cu;
        let x = if t < 0.0 { a + gap } else if t > 0.0 { b - gap } else { a + half };
        if x <= a || x >= b || w == 0.0 {
            return Ok(0.0);
        }
        evaluations += 1;
        let y = f(x);
        if !y.is_finite() {
            return Err(Error::NonFinite { at: x });
        }
        Ok(w * y)
    };

    let mut sum = term(0.0)?;
    let mut j = 1.0;
    while j <= TANH_SINH_TMAX {
        sum += term(j)? + term(-j)?;
        j += 1.0;
    }
    let mut h = 1.0;
    let mut estimate = half * h * sum;
    let mut error = f64::INFINITY;
    for level in 1..=settings.max_level {
        h *= 0.5;
        let mut k = 1usize;
        loop {
            let t = k as f64 * h;
            if t > TANH_SINH_TMAX {
                break;
            }
            sum += term(t)? + term(-t)?;
            k += 2;
        }
        let next = half * h * sum;
        error = (next - estimate).abs();
        estimate = next;
        if level >= 3 && error <= settings.abs_tol.max(settings.rel_tol * estimate.abs()) {
            return Ok(QuadResult { value: estimate, error, evaluations, converged: true });
        }
    }
    Ok(QuadResult { value: estimate, error, evaluations, converged: false })
}

/// Exp-sinh rule on `[a, ∞)`.
///
/// Fails with [`Error::DivergentTail`] when the transformed terms have not
/// decayed at the far end of the node range.
pub fn exp_sinh(f: impl Fn(f64) -> f64, a: f64, settings: &QuadSettings) -> Result<QuadResult> {
    let mut evaluations = 0;
    let mut term = |t: f64| -> Result<f64> {
        let u = FRAC_PI_2 * t.sinh();
        let eu = u.exp();
        let x = a + eu;
        if x == a {
            return Ok(0.0);
        }
        evaluations += 1;
        let y = f(x);
        if !y.is_finite() {
            return Err(Error::NonFinite { at: x });
        }
        Ok(FRAC_PI_2 * t.cosh() * eu * y)
    };

    let mut sum = term(0.0)?;
    let mut j = 1.0;
    while j <= EXP_SINH_TMAX {
        sum += term(j)?;
        j += 1.0;
    }
    let mut j = -1.0;
    while j >= EXP_SINH_TMIN {
        sum += term(j)?;
        j -= 1.0;
    }
    let mut h = 1.0;
    let mut estimate = h * sum;
    let mut error = f64::INFINITY;
    for level in 1..=settings.max_level {
        h *= 0.5;
        let mut k = 1usize;
        loop {
            let t = k as f64 * h;
            if t > EXP_SINH_TMAX.max(-EXP_SINH_TMIN) {
                break;
            }
            if t <= EXP_SINH_TMAX {
                sum += term(t)?;
            }
            if -t >= EXP_SINH_TMIN {
                sum += term(-t)?;
            }
            k += 2;
        }
        let next = h * sum;
        error = (next - estimate).abs();
        estimate = next;
        if level >= 3 && error <= settings.abs_tol.max(settings.rel_tol * estimate.abs()) {
            break;
        }
    }
    let tail = term(EXP_SINH_TMAX)?.abs() + term(EXP_SINH_TMAX - 0.25)?.abs();
    if !(tail <= 1e-8 * (estimate.abs() + 1e-300)) && tail > 1e-200 {
        return Err(Error::DivergentTail(format!("transformed term {tail:e} at the far end, integral estimate {estimate:e}")));
    }
    let converged = error <= settings.abs_tol.max(settings.rel_tol * estimate.abs());
    Ok(QuadResult { value: estimate, error, evaluations, converged })
}

/// `∫_ℝ f`, split at the given points: exp-sinh on the two tails, tanh-sinh between splits.
pub fn integrate_real_line(f: impl Fn(f64) -> f64, splits: &[f64], settings: &QuadSettings) -> Result<QuadResult> {
    let mut pts: Vec<f64> = splits.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.is_empty() {
        pts.push(0.0);
    }
    let first = pts[0];
    let last = *pts.last().unwrap();
    let mut total = exp_sinh(|u| f(first - u), 0.0, settings)?;
    for w in pts.windows(2) {
        total = total.combine(tanh_sinh(&f, w[0], w[1], settings)?);
    }
    total = total.combine(exp_sinh(|u| f(last + u), 0.0, settings)?);
    Ok(total)
}

/// `∫_a^b f` by tanh-sinh, split at the given interior points.
pub fn integrate_split(f: impl Fn(f64) -> f64, a: f64, b: f64, splits: &[f64], settings: &QuadSettings) -> Result<QuadResult> {
    let mut pts = vec![a];
    pts.extend(splits.iter().copied().filter(|x| *x > a && *x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = QuadResult::zero();
    for w in pts.windows(2) {
        total = total.combine(tanh_sinh(&f, w[0], w[1], settings)?);
    }
    Ok(total)
}

// Gauss–Kronrod 7/15 abscissae and weights (positive half, centre last).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(Error::NonFinite { at: c });
    }
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &wk)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let (xl, xr) = (c - h * x, c + h * x);
        let (fl, fr) = (f(xl), f(xr));
        if !fl.is_finite() {
            return Err(Error::NonFinite { at: xl });
        }
        if !fr.is_finite() {
            return Err(Error::NonFinite { at: xr });
        }
        kronrod += wk * (fl + fr);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (fl + fr);
        }
    }
    Ok((h * kronrod, (h * (kronrod - gauss)).abs()))
}

/// Globally adaptive Gauss–Kronrod on `[a, b]`.
pub fn gauss_kronrod(f: impl Fn(f64) -> f64, a: f64, b: f64, settings: &QuadSettings) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult::zero());
    }
    let (v, e) = gk15(&f, a, b)?;
    let mut intervals = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let value: f64 = intervals.iter().map(|i| i.2).sum();
        let error: f64 = intervals.iter().map(|i| i.3).sum();
        let tol = settings.abs_tol.max(settings.rel_tol * value.abs());
        if error <= tol {
            return Ok(QuadResult { value, error, evaluations, converged: true });
        }
        if intervals.len() >= settings.gk_max_intervals {
            return Ok(QuadResult { value, error, evaluations, converged: false });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval cannot be split further in floating point
            let value: f64 = intervals.iter().map(|i| i.2).sum::<f64>() + v;
            return Ok(QuadResult { value, error, evaluations, converged: false });
        }
        let (v1, e1) = gk15(&f, lo, mid)?;
        let (v2, e2) = gk15(&f, mid, hi)?;
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Adaptive Gauss–Kronrod split at the given interior points.
pub fn gauss_kronrod_split(f: impl Fn(f64) -> f64, a: f64, b: f64, splits: &[f64], settings: &QuadSettings) -> Result<QuadResult> {
    let mut pts = vec![a];
    pts.extend(splits.iter().copied().filter(|x| *x > a && *x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = QuadResult::zero();
    for w in pts.windows(2) {
        total = total.combine(gauss_kronrod(&f, w[0], w[1], settings)?);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_weights_and_polynomials() {
        let gl = GaussLegendre::new(200);
        assert!((gl.weights().iter().sum::<f64>() - 2.0).abs() < 1e-13);
        let v = gl.integrate(|x| x.powi(10), -1.0, 1.0).unwrap();
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
        let gl5 = GaussLegendre::new(5);
        let v = gl5.integrate(|x| x.powi(9) + x.powi(8), 0.0, 1.0).unwrap();
        assert!((v - (0.1 + 1.0 / 9.0)).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        let s = QuadSettings::default();
        let r = tanh_sinh(|x| 1.0 / (1.0 - x * x).sqrt(), -1.0, 1.0, &s).unwrap();
        // nodes closer to ±1 than one ulp are lost, about √(2·ulp) of mass
        assert!((r.value - PI).abs() < 1e-7, "{}", r.value);
        let r = tanh_sinh(|x| x.ln(), 0.0, 1.0, &s).unwrap();
        assert!((r.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn exp_sinh_tails() {
        let s = QuadSettings::default();
        let r = exp_sinh(|x| 1.0 / (1.0 + x * x), 0.0, &s).unwrap();
        assert!((r.value - FRAC_PI_2).abs() < 1e-12);
        let r = exp_sinh(|x| (-x).exp(), 0.0, &s).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(matches!(exp_sinh(|x| 1.0 / (1.0 + x), 0.0, &s), Err(Error::DivergentTail(_))));
    }

    #[test]
    fn real_line_gaussian() {
        let s = QuadSettings::default();
        let r = integrate_real_line(|x| (-x * x).exp(), &[-1.0, 0.0, 1.0], &s).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn kronrod_discontinuous() {
        let s = QuadSettings { abs_tol: 1e-10, ..QuadSettings::default() };
        let r = gauss_kronrod(|x| if x > 0.3 { 1.0 } else { 0.0 }, 0.0, 1.0, &s).unwrap();
        assert!((r.value - 0.7).abs() < 1e-9, "{}", r.value);
        let r = gauss_kronrod_split(|x| if x > 0.3 { 1.0 } else { 0.0 }, 0.0, 1.0, &[0.3], &s).unwrap();
        assert!((r.value - 0.7).abs() < 1e-14);
    }
}
