//! Spectral shift functions of finite-dimensional self-adjoint pairs.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::io::{csv, fmt_f64};
use crate::linalg::{count_below, eigh, signed_counts, unwrap_logs, ComplexMatrix, SymMatrix};

/// Eigenvalues closer than this are merged into one breakpoint.
pub const MERGE_TOL: f64 = 1e-10;

/// Piecewise-constant function with finitely many breakpoints.
///
/// `values[0]` is the value on `(-∞, b_0)`, `values[k]` the value on
/// `(b_{k-1}, b_k)` and the last entry the value on `(b_last, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::Shape(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        if breakpoints.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::Precondition("step function entries must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn zero() -> Self {
        Self { breakpoints: Vec::new(), values: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self { breakpoints: Vec::new(), values: vec![c] }
    }

    /// `c` on `(a, b)`, zero elsewhere.
    pub fn indicator(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![0.0, c, 0.0])
    }

    /// Unit step `χ_(a,∞)`.
    pub fn heaviside(a: f64) -> Self {
        Self { breakpoints: vec![a], values: vec![0.0, 1.0] }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn leading_value(&self) -> f64 {
        self.values[0]
    }

    pub fn trailing_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Value at `x`; right-continuous at breakpoints.
    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.breakpoints.partition_point(|&b| b <= x)]
    }

    /// Exact one-sided limits `(f(x-), f(x+))`.
    ///
    /// A point within [`MERGE_TOL`] of a breakpoint is treated as that breakpoint.
    pub fn one_sided_limits(&self, x: f64) -> (f64, f64) {
        let k = self.breakpoints.partition_point(|&b| b < x - MERGE_TOL);
        match self.breakpoints.get(k) {
            Some(&b) if (b - x).abs() <= MERGE_TOL => (self.values[k], self.values[k + 1]),
            _ => (self.values[k], self.values[k]),
        }
    }

    pub fn has_compact_support(&self) -> bool {
        self.leading_value() == 0.0 && self.trailing_value() == 0.0
    }

    /// The bounded pieces as `(left, right, value)`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints.windows(2).zip(&self.values[1..]).map(|(w, &v)| (w[0], w[1], v))
    }

    /// `∫_ℝ f`, defined when both tails vanish.
    pub fn integral(&self) -> Result<f64> {
        self.integrate_antiderivative(|x| x)
    }

    /// `∫_ℝ f g` given an antiderivative `G` of `g`; both tails must vanish.
    pub fn integrate_antiderivative(&self, antiderivative: impl Fn(f64) -> f64) -> Result<f64> {
        if !self.has_compact_support() {
            return Err(Error::Precondition("integral over ℝ needs vanishing tails".into()));
        }
        Ok(self
            .pieces()
            .filter(|p| p.2 != 0.0)
            .map(|(a, b, v)| v * (antiderivative(b) - antiderivative(a)))
            .sum())
    }

    /// Mean value over `[a, b]`, computed exactly.
    pub fn window_average(&self, a: f64, b: f64) -> Result<f64> {
        if !(b > a) {
            return Err(Error::Precondition(format!("window [{a}, {b}] is empty")));
        }
        let mut pts = vec![a];
        pts.extend(self.breakpoints.iter().copied().filter(|&x| x > a && x < b));
        pts.push(b);
        let total: f64 = pts.windows(2).map(|w| self.eval(0.5 * (w[0] + w[1])) * (w[1] - w[0])).sum();
        Ok(total / (b - a))
    }

    pub fn negated(&self) -> Self {
        Self { breakpoints: self.breakpoints.clone(), values: self.values.iter().map(|v| -v).collect() }
    }

    /// Same function with redundant breakpoints removed.
    pub fn simplified(&self) -> Self {
        let mut breakpoints = Vec::new();
        let mut values = vec![self.values[0]];
        for (b, v) in self.breakpoints.iter().zip(&self.values[1..]) {
            if *v != *values.last().unwrap() {
                breakpoints.push(*b);
                values.push(*v);
            }
        }
        Self { breakpoints, values }
    }

    /// CSV with columns `breakpoint,value_right_of_breakpoint`; the first data
    /// row has breakpoint `-inf` and carries the leading tail value.
    pub fn to_csv(&self) -> String {
        let lead = std::iter::once(vec![fmt_f64(f64::NEG_INFINITY), fmt_f64(self.values[0])]);
        let rows = self.breakpoints.iter().zip(&self.values[1..]).map(|(b, v)| vec![fmt_f64(*b), fmt_f64(*v)]);
        csv(&["breakpoint", "value_right_of_breakpoint"], lead.chain(rows))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "breakpoint,value_right_of_breakpoint" => {}
            other => return Err(Error::Shape(format!("unexpected step-function header {other:?}"))),
        }
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let (b, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Shape(format!("row {} is not a pair: {line}", i + 1)))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Shape(format!("row {}: {e}", i + 1)));
            let (b, v) = (parse(b)?, parse(v)?);
            if i == 0 {
                if b != f64::NEG_INFINITY {
                    return Err(Error::Shape("first row must carry the leading value at -inf".into()));
                }
            } else {
                breakpoints.push(b);
            }
            values.push(v);
        }
        Self::new(breakpoints, values)
    }
}

/// Real samples of a function on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledFunction {
    pub abscissae: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
}

impl SampledFunction {
    pub fn new(abscissae: Vec<f64>, ordinates: Vec<f64>) -> Result<Self> {
        if abscissae.len() != ordinates.len() {
            return Err(Error::DimensionMismatch { left: abscissae.len(), right: ordinates.len() });
        }
        if abscissae.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("abscissae must be strictly increasing".into()));
        }
        Ok(Self { abscissae, ordinates, metadata: BTreeMap::new() })
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    /// Piecewise-linear interpolation, constant beyond the ends.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.len();
        if n == 0 {
            return 0.0;
        }
        if x <= self.abscissae[0] {
            return self.ordinates[0];
        }
        if x >= self.abscissae[n - 1] {
            return self.ordinates[n - 1];
        }
        let k = self.abscissae.partition_point(|&a| a <= x);
        let (x0, x1) = (self.abscissae[k - 1], self.abscissae[k]);
        let (y0, y1) = (self.ordinates[k - 1], self.ordinates[k]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Plain mean of the ordinates with abscissae in `[a, b]`.
    pub fn window_mean(&self, a: f64, b: f64) -> Option<f64> {
        let sel: Vec<f64> = self
            .abscissae
            .iter()
            .zip(&self.ordinates)
            .filter(|(x, _)| **x >= a && **x <= b)
            .map(|(_, y)| *y)
            .collect();
        (!sel.is_empty()).then(|| sel.iter().sum::<f64>() / sel.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        csv(
            &["abscissa", "ordinate"],
            self.abscissae.iter().zip(&self.ordinates).map(|(x, y)| vec![fmt_f64(*x), fmt_f64(*y)]),
        )
    }
}

fn check_pair(a_plus: &SymMatrix, a_minus: &SymMatrix) -> Result<()> {
    if a_plus.dim() != a_minus.dim() {
        return Err(Error::DimensionMismatch { left: a_plus.dim(), right: a_minus.dim() });
    }
    Ok(())
}

/// `ξ(·; A₊, A₋) = N_{A₋} − N_{A₊}` as an exact step function.
pub fn ssf_pair(a_plus: &SymMatrix, a_minus: &SymMatrix) -> Result<StepFunction> {
    check_pair(a_plus, a_minus)?;
    let plus = eigh(a_plus)?.eigenvalues;
    let minus = eigh(a_minus)?.eigenvalues;
    Ok(ssf_from_spectra(&plus, &minus))
}

/// Counting spectral shift function from two ascending spectra.
///
/// Eigenvalues within [`MERGE_TOL`] of each other share one breakpoint, placed
/// at the cluster mean.
pub fn ssf_from_spectra(plus: &[f64], minus: &[f64]) -> StepFunction {
    let mut tagged: Vec<(f64, i64)> = minus.iter().map(|&x| (x, 1)).chain(plus.iter().map(|&x| (x, -1))).collect();
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut breakpoints = Vec::new();
    let mut values = vec![0.0];
    let mut running = 0i64;
    let mut i = 0;
    while i < tagged.len() {
        let mut j = i;
        let mut sum = 0.0;
        // chain clusters: each member within MERGE_TOL of the previous one
        while j < tagged.len() && (j == i || tagged[j].0 - tagged[j - 1].0 <= MERGE_TOL) {
            running += tagged[j].1;
            sum += tagged[j].0;
            j += 1;
        }
        breakpoints.push(sum / (j - i) as f64);
        values.push(running as f64);
        i = j;
    }
    StepFunction { breakpoints, values }
}

/// One-sided limits `(ξ(ν-), ξ(ν+))`.
pub fn xi_left_right_at(xi: &StepFunction, nu: f64) -> (f64, f64) {
    xi.one_sided_limits(nu)
}

fn shifted(a: &SymMatrix, z: Complex64) -> ComplexMatrix {
    let n = a.dim();
    let mut data: Vec<Complex64> = a.as_slice().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    for i in 0..n {
        data[i * n + i] -= z;
    }
    ComplexMatrix { n, data }
}

/// Evaluates `det(I + (A₊−A₋)(A₋−z)⁻¹) = det(A₊−z)/det(A₋−z)` without
/// spectral checks; the caller guarantees `z` is off the spectrum of `A₋`.
fn determinant_ratio(a_plus: &SymMatrix, a_minus: &SymMatrix, z: Complex64) -> Complex64 {
    shifted(a_plus, z).det() / shifted(a_minus, z).det()
}

/// Perturbation determinant `det(I + (A₊−A₋)(A₋−z)⁻¹)`.
pub fn perturbation_determinant(a_plus: &SymMatrix, a_minus: &SymMatrix, z: Complex64) -> Result<Complex64> {
    check_pair(a_plus, a_minus)?;
    let minus = eigh(a_minus)?.eigenvalues;
    if let Some(&mu) = minus.iter().find(|&&mu| (Complex64::new(mu, 0.0) - z).norm() <= 1e-12) {
        return Err(Error::OnSpectrum { z: format!("{z}"), eigenvalue: mu });
    }
    Ok(determinant_ratio(a_plus, a_minus, z))
}

/// Maximum argument change allowed between consecutive tracked samples.
const TRACK_STEP: f64 = PI / 4.0;
const TRACK_MAX_DEPTH: u32 = 60;

struct Tracker<'a> {
    a_plus: &'a SymMatrix,
    a_minus: &'a SymMatrix,
    samples: usize,
}

impl Tracker<'_> {
    fn det(&mut self, z: Complex64) -> Result<Complex64> {
        self.samples += 1;
        let d = determinant_ratio(self.a_plus, self.a_minus, z);
        if !(d.norm() > 0.0 && d.norm().is_finite()) {
            return Err(Error::VanishingDeterminant { index: self.samples });
        }
        Ok(d)
    }

    /// Tracks the argument along the segment `from → to`, refining until each
    /// step changes the argument by less than [`TRACK_STEP`].
    fn follow(&mut self, from: Complex64, d_from: Complex64, arg_from: f64, to: Complex64, depth: u32) -> Result<(Complex64, f64)> {
        let d_to = self.det(to)?;
        let step = (d_to / d_from).arg();
        if step.abs() < TRACK_STEP {
            return Ok((d_to, arg_from + step));
        }
        if depth >= TRACK_MAX_DEPTH {
            return Err(Error::BranchJump { index: self.samples, jump: step.abs() });
        }
        let mid = 0.5 * (from + to);
        let (d_mid, arg_mid) = self.follow(from, d_from, arg_from, mid, depth + 1)?;
        self.follow(mid, d_mid, arg_mid, to, depth + 1)
    }
}

/// `π⁻¹ Im ln D(λ + iε)` on a grid, with the branch continued from the
/// anchor `ln D → 0` high up the imaginary direction.
pub fn ssf_via_logdet(a_plus: &SymMatrix, a_minus: &SymMatrix, eps: f64, grid: &[f64]) -> Result<SampledFunction> {
    check_pair(a_plus, a_minus)?;
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("ε must be positive, got {eps}")));
    }
    if grid.is_empty() {
        return SampledFunction::new(Vec::new(), Vec::new());
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("λ grid must be strictly increasing".into()));
    }
    let radius = eigh(a_plus)?.spectral_radius().max(eigh(a_minus)?.spectral_radius());
    let height = 10.0 * (1.0 + radius);
    let mut tracker = Tracker { a_plus, a_minus, samples: 0 };

    let top = Complex64::new(grid[0], height);
    let d_top = tracker.det(top)?;
    let arg_top = unwrap_logs(&[d_top], 0.0)?[0].argument;
    let (mut d, mut arg) = tracker.follow(top, d_top, arg_top, Complex64::new(grid[0], eps), 0)?;
    let mut ordinates = vec![arg / PI];
    for w in grid.windows(2) {
        let (from, to) = (Complex64::new(w[0], eps), Complex64::new(w[1], eps));
        (d, arg) = tracker.follow(from, d, arg, to, 0)?;
        ordinates.push(arg / PI);
    }
    Ok(SampledFunction::new(grid.to_vec(), ordinates)?
        .with_meta("epsilon", fmt_f64(eps))
        .with_meta("anchor_height", fmt_f64(height))
        .with_meta("determinant_samples", tracker.samples))
}

/// `½[#>(A₊) − #>(A₋)] − ½[#<(A₊) − #<(A₋)]`, exactly.
pub fn index_counting(a_plus: &SymMatrix, a_minus: &SymMatrix, zero_tol: f64) -> Result<HalfInt> {
    check_pair(a_plus, a_minus)?;
    let p = signed_counts(&eigh(a_plus)?.eigenvalues, zero_tol);
    let m = signed_counts(&eigh(a_minus)?.eigenvalues, zero_tol);
    let twice = (p.positive as i64 - m.positive as i64) - (p.negative as i64 - m.negative as i64);
    Ok(HalfInt::from_twice(twice))
}

/// `N_{A₋}(λ) − N_{A₊}(λ)` at a single point, from ascending spectra.
pub fn counting_difference(plus: &[f64], minus: &[f64], lambda: f64) -> i64 {
    count_below(minus, lambda) as i64 - count_below(plus, lambda) as i64
}
