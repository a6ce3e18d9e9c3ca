//! The three routes to the Witten index: the ξ-average at zero, and the
//! resolvent and semigroup regularizations of the truncated model extrapolated
//! in the interval length.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::io::fmt_f64;
use crate::model::{default_resolution, discretize, fredholm_check, DiscretizedModel, FredholmDiagnosis, OperatorPath};
use crate::ssf::{index_counting, ssf_pair, StepFunction};
use crate::transforms::pushnitski_forward;

pub const PLATEAU_TOL: f64 = 0.02;
pub const PLATEAU_WINDOW: usize = 3;

/// Smallest admissible `|λ|` at half-length `L`.
pub fn lambda_floor(l: f64) -> f64 {
    25.0 / (l * l)
}

/// Largest admissible `t` at half-length `L`.
pub fn t_cap(l: f64) -> f64 {
    l * l / 25.0
}

/// `−4 · 2^{−k/8}` down to `−25/L²`, ending exactly on the floor.
pub fn default_lambda_schedule(l: f64) -> Vec<f64> {
    geometric(4.0, lambda_floor(l)).into_iter().map(|x| -x).collect()
}

/// `¼ · 2^{k/8}` up to `L²/25`, ending exactly on the cap.
pub fn default_t_schedule(l: f64) -> Vec<f64> {
    geometric(0.25, t_cap(l))
}

fn geometric(start: f64, end: f64) -> Vec<f64> {
    let ratio = 2f64.powf(0.125);
    let mut out = Vec::new();
    let mut x = start;
    if end > start {
        while x < end / ratio.sqrt() {
            out.push(x);
            x *= ratio;
        }
    } else {
        while x > end * ratio.sqrt() {
            out.push(x);
            x /= ratio;
        }
    }
    out.push(end);
    out
}

/// Two resolutions sharing a step size: the default one and its half-length.
pub fn default_witten_resolutions(n: usize) -> Vec<(f64, usize)> {
    if n == 1 {
        return vec![(20.0, 1001), (40.0, 2001)];
    }
    let (l, big) = default_resolution(n);
    let mut half = (big - 1) / 2;
    half -= half % 2;
    vec![(l * half as f64 / (big - 1) as f64, half + 1), (l, big)]
}

/// `[ξ(0₊) + ξ(0₋)]/2` of an integer-valued spectral shift function.
pub fn witten_from_ssf(xi: &StepFunction) -> Result<HalfInt> {
    let (left, right) = xi.one_sided_limits(0.0);
    let exact = |v: f64| v.fract() == 0.0 && v.abs() < 2f64.powi(52);
    if !exact(left) || !exact(right) {
        return Err(Error::NotQuantized { left, right });
    }
    Ok(HalfInt::from_twice(left as i64 + right as i64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub l: f64,
    pub n: usize,
    pub param: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plateau {
    pub l: f64,
    pub n: usize,
    pub found: bool,
    /// Value at the window point nearest the limit, or at the last schedule
    /// point when no window qualifies.
    pub value: f64,
    pub spread: f64,
    pub window: Vec<f64>,
}

/// Extrapolated regularized index with its evidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizedEstimate {
    pub estimate: f64,
    pub uncertainty: f64,
    pub converged: bool,
    pub richardson_order: f64,
    pub plateaus: Vec<Plateau>,
    /// Rows ordered by resolution, then by schedule position.
    pub table: Vec<TableRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtrapolationSettings {
    pub plateau_tol: f64,
    pub richardson_order: f64,
}

impl Default for ExtrapolationSettings {
    fn default() -> Self {
        Self { plateau_tol: PLATEAU_TOL, richardson_order: 1.0 }
    }
}

/// Last window of consecutive values with spread below `tol`.
fn detect_plateau(l: f64, n: usize, params: &[f64], values: &[f64], tol: f64) -> Plateau {
    let k = PLATEAU_WINDOW.min(values.len());
    let spread_of = |w: &[f64]| {
        let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        hi - lo
    };
    for end in (k..=values.len()).rev() {
        let w = &values[end - k..end];
        let spread = spread_of(w);
        if spread < tol {
            return Plateau { l, n, found: true, value: w[k - 1], spread, window: params[end - k..end].to_vec() };
        }
    }
    let tail = &values[values.len() - k..];
    Plateau {
        l,
        n,
        found: false,
        value: *values.last().unwrap_or(&f64::NAN),
        spread: spread_of(tail),
        window: params[params.len() - k..].to_vec(),
    }
}

fn extrapolate(plateaus: Vec<Plateau>, table: Vec<TableRow>, settings: &ExtrapolationSettings) -> RegularizedEstimate {
    let converged = !plateaus.is_empty() && plateaus.iter().all(|p| p.found);
    let last = &plateaus[plateaus.len() - 1];
    let (estimate, increment) = if plateaus.len() >= 2 {
        let prev = &plateaus[plateaus.len() - 2];
        let ratio = (last.l / prev.l).powf(settings.richardson_order);
        let inc = if ratio > 1.0 { (last.value - prev.value) / (ratio - 1.0) } else { 0.0 };
        (last.value + inc, inc.abs())
    } else {
        (last.value, 0.0)
    };
    let spread = plateaus.iter().map(|p| p.spread).fold(0.0, f64::max);
    RegularizedEstimate {
        estimate,
        uncertainty: increment.max(spread),
        converged,
        richardson_order: settings.richardson_order,
        plateaus,
        table,
    }
}

fn check_schedules(models: &[DiscretizedModel], schedules: &[Vec<f64>]) -> Result<()> {
    if models.is_empty() {
        return Err(Error::Precondition("at least one resolution is required".into()));
    }
    if models.len() != schedules.len() {
        return Err(Error::Precondition(format!("{} resolutions but {} schedules", models.len(), schedules.len())));
    }
    if schedules.iter().any(|s| s.is_empty()) {
        return Err(Error::Precondition("schedules must be nonempty".into()));
    }
    Ok(())
}

/// Builds the truncated models, in parallel, ordered by increasing `L`.
pub fn build_models(path: &OperatorPath, resolutions: &[(f64, usize)]) -> Result<Vec<DiscretizedModel>> {
    let mut res = resolutions.to_vec();
    res.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    res.par_iter().map(|&(l, n)| discretize(path, l, n)).collect()
}

/// Resolvent route on prebuilt models; one λ schedule per model.
pub fn witten_resolvent_models(
    models: &[DiscretizedModel],
    schedules: &[Vec<f64>],
    settings: &ExtrapolationSettings,
) -> Result<RegularizedEstimate> {
    check_schedules(models, schedules)?;
    let mut plateaus = Vec::new();
    let mut table = Vec::new();
    for (m, sched) in models.iter().zip(schedules) {
        let (l, n) = (m.half_length(), m.grid_points());
        let floor = lambda_floor(l);
        if let Some(bad) = sched.iter().find(|&&x| !(x < 0.0) || -x < floor * (1.0 - 1e-12)) {
            return Err(Error::Precondition(format!("λ = {bad} violates λ < 0 and |λ| ≥ 25/L² = {floor} at L = {l}")));
        }
        if sched.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("λ schedule must approach 0 monotonically".into()));
        }
        let values = sched.par_iter().map(|&x| m.delta_r(x)).collect::<Result<Vec<_>>>()?;
        table.extend(sched.iter().zip(&values).map(|(&param, &value)| TableRow { l, n, param, value }));
        plateaus.push(detect_plateau(l, n, sched, &values, settings.plateau_tol));
    }
    Ok(extrapolate(plateaus, table, settings))
}

/// Semigroup route on prebuilt models; one t schedule per model.
pub fn witten_semigroup_models(
    models: &[DiscretizedModel],
    schedules: &[Vec<f64>],
    settings: &ExtrapolationSettings,
) -> Result<RegularizedEstimate> {
    check_schedules(models, schedules)?;
    let mut plateaus = Vec::new();
    let mut table = Vec::new();
    for (m, sched) in models.iter().zip(schedules) {
        let (l, n) = (m.half_length(), m.grid_points());
        let cap = t_cap(l);
        if let Some(bad) = sched.iter().find(|&&t| !(t > 0.0) || t > cap * (1.0 + 1e-12)) {
            return Err(Error::Precondition(format!("t = {bad} violates 0 < t ≤ L²/25 = {cap} at L = {l}")));
        }
        if sched.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("t schedule must be increasing".into()));
        }
        let values = sched.par_iter().map(|&t| m.delta_s(t)).collect::<Result<Vec<_>>>()?;
        table.extend(sched.iter().zip(&values).map(|(&param, &value)| TableRow { l, n, param, value }));
        plateaus.push(detect_plateau(l, n, sched, &values, settings.plateau_tol));
    }
    Ok(extrapolate(plateaus, table, settings))
}

/// Resolvent route; `schedules = None` selects [`default_lambda_schedule`].
pub fn witten_resolvent(
    path: &OperatorPath,
    resolutions: &[(f64, usize)],
    schedules: Option<&[Vec<f64>]>,
    settings: &ExtrapolationSettings,
) -> Result<RegularizedEstimate> {
    let models = build_models(path, resolutions)?;
    let defaults: Vec<Vec<f64>> = models.iter().map(|m| default_lambda_schedule(m.half_length())).collect();
    witten_resolvent_models(&models, schedules.unwrap_or(&defaults), settings)
}

/// Semigroup route; `schedules = None` selects [`default_t_schedule`].
pub fn witten_semigroup(
    path: &OperatorPath,
    resolutions: &[(f64, usize)],
    schedules: Option<&[Vec<f64>]>,
    settings: &ExtrapolationSettings,
) -> Result<RegularizedEstimate> {
    let models = build_models(path, resolutions)?;
    let defaults: Vec<Vec<f64>> = models.iter().map(|m| default_t_schedule(m.half_length())).collect();
    witten_semigroup_models(&models, schedules.unwrap_or(&defaults), settings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceEntry {
    /// `"semigroup"` (parameter t) or `"resolvent"` (parameter λ).
    pub kind: &'static str,
    pub param: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceConsistency {
    pub max_rel_err: f64,
    pub entries: Vec<LaplaceEntry>,
}

/// `tr(e^{−tH₂} − e^{−tH₁}) = −t ∫ ξ_H(s) e^{−ts} ds` for each `t`, and
/// `tr((H₂−λ)⁻¹ − (H₁−λ)⁻¹) = −∫ ξ_H(s) (s−λ)⁻² ds` for each `λ < 0`,
/// with the step integrals done exactly piece by piece.
pub fn laplace_consistency(model: &DiscretizedModel, t_grid: &[f64], lambda_grid: &[f64]) -> Result<LaplaceConsistency> {
    if t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Precondition("t grid must be positive".into()));
    }
    if lambda_grid.iter().any(|&l| !(l < 0.0)) {
        return Err(Error::Precondition("λ grid must be negative".into()));
    }
    let xi = model.xi_h_step();
    let (e1, e2) = (model.eigenvalues_h1(), model.eigenvalues_h2());
    let rel = |lhs: f64, rhs: f64| if lhs == rhs { 0.0 } else { (lhs - rhs).abs() / lhs.abs().max(1e-300) };
    let mut entries = Vec::new();
    for &t in t_grid {
        let lhs: f64 = e1.iter().zip(e2).map(|(a, b)| (-t * b).exp() - (-t * a).exp()).sum();
        let rhs = -t * xi.integrate_antiderivative(|s| -(-t * s).exp() / t)?;
        entries.push(LaplaceEntry { kind: "semigroup", param: t, lhs, rhs, rel_err: rel(lhs, rhs) });
    }
    for &l in lambda_grid {
        let lhs: f64 = e1.iter().zip(e2).map(|(a, b)| 1.0 / (b - l) - 1.0 / (a - l)).sum();
        let rhs = xi.integrate_antiderivative(|s| 1.0 / (s - l))?;
        entries.push(LaplaceEntry { kind: "resolvent", param: l, lhs, rhs, rel_err: rel(lhs, rhs) });
    }
    let max_rel_err = entries.iter().map(|e| e.rel_err).fold(0.0, f64::max);
    Ok(LaplaceConsistency { max_rel_err, entries })
}

/// `|d/dt Δ_s|` at the plateau point nearest the limit on the finest resolution.
pub fn derivative_decay(models: &[DiscretizedModel], semigroup: &RegularizedEstimate) -> Result<f64> {
    let (m, p) = models
        .last()
        .zip(semigroup.plateaus.last())
        .ok_or_else(|| Error::Precondition("no resolutions".into()))?;
    let t = *p.window.last().ok_or_else(|| Error::Precondition("empty plateau window".into()))?;
    Ok(m.delta_s_derivative(t)?.abs())
}

#[derive(Debug, Clone, Serialize)]
pub struct WittenConfig {
    pub resolutions: Vec<(f64, usize)>,
    pub lambda_schedules: Option<Vec<Vec<f64>>>,
    pub t_schedules: Option<Vec<Vec<f64>>>,
    pub extrapolation: ExtrapolationSettings,
    pub fredholm_tol: f64,
    pub kernel_tol: f64,
    pub zero_tol: f64,
    pub pushnitski_window: (f64, f64),
    pub laplace_t: Vec<f64>,
    pub laplace_lambda: Vec<f64>,
}

impl WittenConfig {
    pub fn for_dim(n: usize) -> Self {
        Self {
            resolutions: default_witten_resolutions(n),
            lambda_schedules: None,
            t_schedules: None,
            extrapolation: ExtrapolationSettings::default(),
            fredholm_tol: 1e-6,
            kernel_tol: 1e-4,
            zero_tol: 1e-10,
            pushnitski_window: (0.1, 0.9),
            laplace_t: vec![0.5, 1.0, 5.0, 20.0],
            laplace_lambda: vec![-1.0, -0.1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgreementMatrix {
    pub r_vs_xi: f64,
    pub s_vs_xi: f64,
    pub r_vs_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PushnitskiCrossCheck {
    pub window: (f64, f64),
    /// Window mean of the closed-form transform of `ξ(·; A₊, A₋)`.
    pub predicted: f64,
    /// Exact window average of the discrete `ξ(·; H₂, H₁)` at the finest resolution.
    pub discrete: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WittenReport {
    pub w_xi: HalfInt,
    pub w_xi_counting: HalfInt,
    pub w_r: Option<RegularizedEstimate>,
    pub w_s: Option<RegularizedEstimate>,
    pub fredholm: FredholmDiagnosis,
    pub kernel_dims: Option<(usize, usize)>,
    pub kernel_index: Option<i64>,
    pub quantization_residual: f64,
    pub agreement_matrix: Option<AgreementMatrix>,
    pub pushnitski: Option<PushnitskiCrossCheck>,
    pub laplace: Option<LaplaceConsistency>,
    pub derivative_decay: Option<f64>,
    pub converged: bool,
    pub errors: Vec<String>,
    #[serde(skip)]
    pub xi_a: StepFunction,
    #[serde(skip)]
    pub xi_h: Option<StepFunction>,
}

/// Runs every route and check; component failures are collected in `errors`.
pub fn full_report(path: &OperatorPath, config: &WittenConfig) -> Result<WittenReport> {
    let fredholm = fredholm_check(path, config.fredholm_tol)?;
    let xi_a = ssf_pair(path.a_plus(), path.a_minus())?;
    let w_xi = witten_from_ssf(&xi_a)?;
    let w_xi_counting = index_counting(path.a_plus(), path.a_minus(), config.zero_tol)?;
    let quantization_residual = {
        let two = 2.0 * w_xi.to_f64();
        (two - two.round()).abs()
    };
    let mut errors = Vec::new();
    let mut note = |what: &str, e: Error| errors.push(format!("{what}: {e}"));

    let models = match build_models(path, &config.resolutions) {
        Ok(m) => m,
        Err(e) => {
            note("discretization", e);
            Vec::new()
        }
    };
    let mut w_r = None;
    let mut w_s = None;
    if !models.is_empty() {
        let lam: Vec<Vec<f64>> = match &config.lambda_schedules {
            Some(s) => s.clone(),
            None => models.iter().map(|m| default_lambda_schedule(m.half_length())).collect(),
        };
        let ts: Vec<Vec<f64>> = match &config.t_schedules {
            Some(s) => s.clone(),
            None => models.iter().map(|m| default_t_schedule(m.half_length())).collect(),
        };
        match witten_resolvent_models(&models, &lam, &config.extrapolation) {
            Ok(r) => w_r = Some(r),
            Err(e) => note("resolvent route", e),
        }
        match witten_semigroup_models(&models, &ts, &config.extrapolation) {
            Ok(s) => w_s = Some(s),
            Err(e) => note("semigroup route", e),
        }
    }
    let finest = models.last();
    let kernel_dims = finest.map(|m| m.kernel_dims(config.kernel_tol));
    let kernel_index = kernel_dims.map(|(a, b)| a as i64 - b as i64);

    let agreement_matrix = match (&w_r, &w_s) {
        (Some(r), Some(s)) => Some(AgreementMatrix {
            r_vs_xi: (r.estimate - w_xi.to_f64()).abs(),
            s_vs_xi: (s.estimate - w_xi.to_f64()).abs(),
            r_vs_s: (r.estimate - s.estimate).abs(),
        }),
        _ => None,
    };

    let xi_h = finest.map(|m| m.xi_h_step());
    let mut pushnitski = None;
    if let Some(xh) = &xi_h {
        let (a, b) = config.pushnitski_window;
        let grid: Vec<f64> = (0..=200).map(|k| a + (b - a) * k as f64 / 200.0).collect();
        let cross = pushnitski_forward(&xi_a, &grid).and_then(|p| {
            let predicted = p.window_mean(a, b).unwrap_or(f64::NAN);
            let discrete = xh.window_average(a, b)?;
            Ok(PushnitskiCrossCheck { window: (a, b), predicted, discrete, difference: (predicted - discrete).abs() })
        });
        match cross {
            Ok(c) => pushnitski = Some(c),
            Err(e) => note("pushnitski cross-check", e),
        }
    }

    let mut laplace = None;
    if let Some(m) = finest {
        match laplace_consistency(m, &config.laplace_t, &config.laplace_lambda) {
            Ok(l) => laplace = Some(l),
            Err(e) => note("laplace consistency", e),
        }
    }
    let mut decay = None;
    if let Some(s) = &w_s {
        match derivative_decay(&models, s) {
            Ok(d) => decay = Some(d),
            Err(e) => note("derivative decay", e),
        }
    }

    let converged = errors.is_empty()
        && w_r.as_ref().is_some_and(|r| r.converged)
        && w_s.as_ref().is_some_and(|s| s.converged);
    Ok(WittenReport {
        w_xi,
        w_xi_counting,
        w_r,
        w_s,
        fredholm,
        kernel_dims,
        kernel_index,
        quantization_residual,
        agreement_matrix,
        pushnitski,
        laplace,
        derivative_decay: decay,
        converged,
        errors,
        xi_a,
        xi_h,
    })
}

impl WittenReport {
    /// `L,N,lambda,delta_r` rows.
    pub fn delta_r_csv(&self) -> String {
        table_csv("L,N,lambda,delta_r", self.w_r.as_ref())
    }

    /// `L,N,t,delta_s` rows.
    pub fn delta_s_csv(&self) -> String {
        table_csv("L,N,t,delta_s", self.w_s.as_ref())
    }
}

fn table_csv(header: &str, est: Option<&RegularizedEstimate>) -> String {
    let header: Vec<&str> = header.split(',').collect();
    let rows = est.map(|e| e.table.as_slice()).unwrap_or(&[]);
    crate::io::csv(&header, rows.iter().map(|r| [fmt_f64(r.l), r.n.to_string(), fmt_f64(r.param), fmt_f64(r.value)]))
}
