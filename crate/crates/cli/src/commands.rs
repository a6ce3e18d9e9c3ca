//! One function per subcommand; each writes its artifacts into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wittenlab::io::{csv, fmt_f64};
use wittenlab::linalg::SymMatrix;
use wittenlab::model::{default_resolution, discretize, essential_spectrum_strips, fredholm_check, OperatorPath};
use wittenlab::rankone::{
    classify_spectral_type, default_eps_probes, matrix_oracle, prescribed_ssf_demo, xi_alpha, DiscreteMeasure,
};
use wittenlab::ssf::{counting_difference, index_counting, ssf_pair, ssf_via_logdet, xi_left_right_at, StepFunction};
use wittenlab::transforms::{
    abel_f, abel_gaussian_closed_form, abel_resolvent_closed_form, pushnitski_forward, pushnitski_quadrature,
    trace_relation_check, ScalarFunction,
};
use wittenlab::witten::{full_report, witten_from_ssf};
use wittenlab::{Error, HalfInt};

use crate::config::{ConfigError, RunConfig};

pub enum Failure {
    Config(String),
    Run(Error),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// What a finished command reports back to the dispatcher.
pub struct Outcome {
    pub converged: bool,
    pub summary: String,
}

pub struct Sink {
    dir: PathBuf,
    pub written: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn text(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut body = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        body.push('\n');
        self.text(name, &body)
    }
}

type CmdResult = Result<Outcome, Failure>;

fn linspace_mid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * (k as f64 + 0.5) / n as f64).collect()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

pub fn witten(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let path = cfg.operator_path()?;
    let wcfg = cfg.witten_config(path.dim());
    let report = full_report(&path, &wcfg)?;
    sink.json("report.json", &report)?;
    sink.text("delta_r.csv", &report.delta_r_csv())?;
    sink.text("delta_s.csv", &report.delta_s_csv())?;
    sink.text("xi_A.csv", &report.xi_a.to_csv())?;
    let xi_h = report.xi_h.clone().unwrap_or_else(StepFunction::zero);
    sink.text("xi_H.csv", &xi_h.to_csv())?;
    let show = |e: Option<&wittenlab::witten::RegularizedEstimate>| match e {
        Some(e) => format!("{:.6} ± {:.6}{}", e.estimate, e.uncertainty, if e.converged { "" } else { " (no plateau)" }),
        None => "unavailable".into(),
    };
    Ok(Outcome {
        converged: report.converged,
        summary: format!(
            "W_xi = {}, W_r = {}, W_s = {}, fredholm = {}",
            report.w_xi,
            show(report.w_r.as_ref()),
            show(report.w_s.as_ref()),
            report.fredholm.fredholm
        ),
    })
}

#[derive(Serialize)]
struct SsfSummary {
    witten_from_ssf: HalfInt,
    index_counting: HalfInt,
    xi_left_at_zero: f64,
    xi_right_at_zero: f64,
    counting_difference_at_zero: Option<i64>,
    logdet_at_zero: Option<f64>,
    logdet_epsilon: f64,
    counting_identity_holds: bool,
    random_suite: Option<RandomSuiteSummary>,
}

#[derive(Serialize)]
struct RandomSuiteSummary {
    seed: u64,
    count: usize,
    all_equal: bool,
}

/// Random symmetric pair; every other draw uses small integer diagonals so
/// that exact zero eigenvalues occur.
pub fn random_pair(rng: &mut ChaCha8Rng, max_dim: usize) -> (SymMatrix, SymMatrix) {
    let n = rng.gen_range(1..=max_dim);
    if rng.gen_bool(0.5) {
        let diag = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.gen_range(-2i32..=2) as f64).collect::<Vec<_>>();
        let a = diag(rng);
        let b = diag(rng);
        return (SymMatrix::from_diag(&a), SymMatrix::from_diag(&b));
    }
    let sym = |rng: &mut ChaCha8Rng| {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = rng.gen_range(-2.0..2.0);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        SymMatrix::from_row_major(n, d).expect("symmetric by construction")
    };
    let a = sym(rng);
    let b = sym(rng);
    (a, b)
}

pub fn ssf(cfg: &RunConfig, sink: &mut Sink, seed: u64) -> CmdResult {
    let path = cfg.operator_path()?;
    let opts = cfg.ssf.clone().unwrap_or_default();
    let zero_tol = opts.zero_tol.unwrap_or(1e-10);
    let eps = opts.epsilon.unwrap_or(1e-5);
    let (a_plus, a_minus) = (path.a_plus(), path.a_minus());
    let xi = ssf_pair(a_plus, a_minus)?;
    sink.text("xi_A.csv", &xi.to_csv())?;

    let grid = linspace_mid(opts.lambda_min.unwrap_or(-3.0), opts.lambda_max.unwrap_or(3.0), opts.points.unwrap_or(120));
    let scan = ssf_via_logdet(a_plus, a_minus, eps, &grid)?;
    let plus = wittenlab::linalg::eigh(a_plus)?.eigenvalues;
    let minus = wittenlab::linalg::eigh(a_minus)?.eigenvalues;
    let rows = grid.iter().zip(&scan.ordinates).map(|(&l, &v)| {
        [fmt_f64(l), fmt_f64(v), counting_difference(&plus, &minus, l).to_string()]
    });
    sink.text("determinant_scan.csv", &csv(&["lambda", "xi_logdet", "xi_counting"], rows))?;

    let w = witten_from_ssf(&xi)?;
    let counted = index_counting(a_plus, a_minus, zero_tol)?;
    let (left, right) = xi_left_right_at(&xi, 0.0);
    let zero_regular = plus.iter().chain(&minus).all(|x| x.abs() > zero_tol);
    let logdet_at_zero = if zero_regular { Some(ssf_via_logdet(a_plus, a_minus, eps, &[0.0])?.ordinates[0]) } else { None };
    let counting_at_zero = zero_regular.then(|| counting_difference(&plus, &minus, 0.0));

    let random_suite = match &opts.random {
        Some(r) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = Vec::with_capacity(r.count);
            let mut all_equal = true;
            for k in 0..r.count {
                let (am, bp) = random_pair(&mut rng, r.max_dim);
                let ap = am.add(&bp)?;
                let wf = witten_from_ssf(&ssf_pair(&ap, &am)?)?;
                let wc = index_counting(&ap, &am, zero_tol)?;
                all_equal &= wf == wc;
                rows.push([k.to_string(), am.dim().to_string(), wf.to_string(), wc.to_string(), (wf == wc).to_string()]);
            }
            sink.text("quantization_suite.csv", &csv(&["index", "dim", "witten_from_ssf", "index_counting", "equal"], rows))?;
            Some(RandomSuiteSummary { seed, count: r.count, all_equal })
        }
        None => None,
    };
    let holds = w == counted && random_suite.as_ref().is_none_or(|r| r.all_equal);
    let summary = SsfSummary {
        witten_from_ssf: w,
        index_counting: counted,
        xi_left_at_zero: left,
        xi_right_at_zero: right,
        counting_difference_at_zero: counting_at_zero,
        logdet_at_zero,
        logdet_epsilon: eps,
        counting_identity_holds: holds,
        random_suite,
    };
    sink.json("counting.json", &summary)?;
    Ok(Outcome { converged: true, summary: format!("[ξ(0+) + ξ(0−)]/2 = {w}, counting = {counted}, identity holds = {holds}") })
}

pub fn pushnitski(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let opts = cfg.pushnitski.clone().unwrap_or_default();
    let path = cfg.path.as_ref().map(|_| cfg.operator_path()).transpose()?;
    let xi = match (&opts.xi, &path) {
        (Some(x), _) => x.build("pushnitski.xi")?,
        (None, Some(p)) => ssf_pair(p.a_plus(), p.a_minus())?,
        (None, None) => return Err(Failure::Config("pushnitski.xi: give a step function or a [path] table".into())),
    };
    let grid = linspace(opts.lambda_min.unwrap_or(0.01), opts.lambda_max.unwrap_or(4.0), opts.points.unwrap_or(200));
    let closed = pushnitski_forward(&xi, &grid)?;
    let mut header = vec!["lambda", "closed_form"];
    let mut columns = vec![closed.ordinates.clone()];
    if opts.quadrature.unwrap_or(true) {
        let settings = cfg.transform_settings();
        let f = ScalarFunction::step(xi.clone());
        let q = grid.iter().map(|&l| pushnitski_quadrature(&f, l, &settings)).collect::<Result<Vec<_>, _>>()?;
        header.push("quadrature");
        columns.push(q);
    }
    if opts.discrete.unwrap_or(false) {
        let p = path.as_ref().ok_or_else(|| Failure::Config("pushnitski.discrete: needs a [path] table".into()))?;
        let (l, n) = default_resolution(p.dim());
        let model = discretize(p, l, n)?;
        header.push("discrete");
        columns.push(model.ssf_h_discrete(&grid)?.ordinates);
    }
    let rows = grid.iter().enumerate().map(|(i, &l)| std::iter::once(fmt_f64(l)).chain(columns.iter().map(|c| fmt_f64(c[i]))).collect::<Vec<_>>());
    sink.text("pushnitski.csv", &csv(&header, rows))?;
    Ok(Outcome { converged: true, summary: format!("pushnitski transform on {} points", grid.len()) })
}

pub fn abel(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let opts = cfg.abel.clone().unwrap_or_default();
    let settings = cfg.transform_settings();
    let grid = linspace(opts.nu_min.unwrap_or(-5.0), opts.nu_max.unwrap_or(5.0), opts.points.unwrap_or(101));
    let kind = opts.function.clone().unwrap_or_else(|| "resolvent".into());
    let (label, param, f, closed): (&str, f64, Box<dyn Fn(f64) -> f64 + Sync>, Box<dyn Fn(f64) -> f64>) = match kind.as_str() {
        "gaussian" => {
            let s = opts.s.unwrap_or(1.0);
            ("gaussian", s, Box::new(move |x| (-s * x).exp()), Box::new(move |nu| abel_gaussian_closed_form(s, nu)))
        }
        _ => {
            let z = opts.z.unwrap_or(-1.0);
            ("resolvent", z, Box::new(move |x| 1.0 / (x - z)), Box::new(move |nu| abel_resolvent_closed_form(z, nu)))
        }
    };
    let mut max_err: f64 = 0.0;
    let mut rows = Vec::with_capacity(grid.len());
    for &nu in &grid {
        let v = abel_f(&*f, nu, &settings)?;
        let c = closed(nu);
        max_err = max_err.max((v - c).abs());
        rows.push([fmt_f64(nu), fmt_f64(v), fmt_f64(c), fmt_f64((v - c).abs())]);
    }
    sink.text("abel.csv", &csv(&["nu", "abel_f", "closed_form", "abs_err"], rows))?;
    Ok(Outcome { converged: true, summary: format!("Abel transform of {label} ({param}): max |F − closed form| = {max_err:e}") })
}

pub fn rankone(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let opts = cfg.rankone.clone().ok_or_else(|| Failure::Config("rankone: this command needs a [rankone] table".into()))?;
    let settings = cfg.transform_settings();
    let mut mu = DiscreteMeasure::new(opts.atoms.clone()).map_err(|e| Failure::Config(format!("rankone.atoms: {e}")))?;
    if let Some(d) = &opts.density {
        mu = mu.with_density(d.grid.clone(), d.values.clone()).map_err(|e| Failure::Config(format!("rankone.density: {e}")))?;
    }
    let alphas = opts.alpha.clone().unwrap_or_else(|| vec![0.1, 1.0, 10.0]);
    let eps = opts.epsilon.unwrap_or(1e-6);
    let probes = opts.eps_probes.clone().unwrap_or_else(default_eps_probes);
    let locs: Vec<f64> = opts.atoms.iter().map(|a| a.0).collect();
    let lo = opts.lambda_min.unwrap_or_else(|| locs.iter().copied().fold(f64::INFINITY, f64::min).min(0.0) - 1.0);
    let amax = alphas.iter().copied().fold(0.0, f64::max);
    let hi = opts
        .lambda_max
        .unwrap_or_else(|| locs.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0) + amax * mu.atomic_mass() + 1.0);
    let grid = linspace_mid(lo, hi, opts.points.unwrap_or(400));

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &alpha in &alphas {
        let oracle = if mu.has_density() || opts.atoms.is_empty() { None } else { Some(matrix_oracle(&mu, alpha)?) };
        for &l in &grid {
            let x = xi_alpha(&mu, alpha, l, eps, &settings)?;
            let o = oracle.as_ref().map_or_else(|| "nan".to_string(), |s| fmt_f64(s.eval(l)));
            rows.push([fmt_f64(alpha), fmt_f64(l), fmt_f64(x), o]);
        }
        reports.push(classify_spectral_type(&mu, alpha, &grid, &probes, &settings)?);
    }
    sink.text("rankone.csv", &csv(&["alpha", "lambda", "xi_alpha", "matrix_oracle"], rows))?;
    sink.json("spectral_type.json", &reports)?;
    let mut summary = format!("rank-one scan over {} couplings", alphas.len());
    if let Some(p) = &opts.prescribed {
        let demo = prescribed_ssf_demo(&ScalarFunction::step(p.build("rankone.prescribed")?), &settings)?;
        summary.push_str(&format!(", prescribed index recovered as {:.6}", demo.recovered_index));
        sink.json("prescribed.json", &demo)?;
    }
    Ok(Outcome { converged: true, summary })
}

#[derive(Serialize)]
struct FredholmOut {
    fredholm: bool,
    gap_plus: f64,
    gap_minus: f64,
    tol: f64,
    essential_spectrum_strips: Vec<f64>,
    message: String,
}

pub fn fredholm(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let path = cfg.operator_path()?;
    let tol = cfg.fredholm.as_ref().and_then(|f| f.tol).unwrap_or(1e-6);
    let d = fredholm_check(&path, tol)?;
    let message = format!(
        "{}, gap_plus={}, gap_minus={}",
        if d.fredholm { "Fredholm" } else { "not Fredholm" },
        d.gap_plus,
        d.gap_minus
    );
    let out = FredholmOut {
        fredholm: d.fredholm,
        gap_plus: d.gap_plus,
        gap_minus: d.gap_minus,
        tol,
        essential_spectrum_strips: essential_spectrum_strips(&path)?,
        message: message.clone(),
    };
    sink.json("fredholm.json", &out)?;
    Ok(Outcome { converged: true, summary: message })
}

#[derive(Serialize)]
struct RelationOut {
    function: &'static str,
    lhs: f64,
    mid: f64,
    rhs: f64,
}

pub fn trace_check(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let path: OperatorPath = cfg.operator_path()?;
    let opts = cfg.trace_check.clone().unwrap_or_default();
    let (l, n) = opts.resolution.unwrap_or_else(|| default_resolution(path.dim()));
    let model = discretize(&path, l, n)?;
    let zs = opts.z.clone().unwrap_or_else(|| vec![(-1.0, 0.0), (-0.25, 0.0), (-4.0, 0.0)]);
    let mut rows = Vec::with_capacity(zs.len());
    let mut worst: f64 = 0.0;
    for &(re, im) in &zs {
        let c = model.resolvent_trace_check(Complex64::new(re, im))?;
        worst = worst.max(c.rel_err);
        rows.push([re, im, c.lhs.re, c.lhs.im, c.rhs.re, c.rhs.im, c.rel_err].map(fmt_f64));
    }
    sink.text("trace_check.csv", &csv(&["z_re", "z_im", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "rel_err"], rows))?;
    sink.text("eigenvalues.csv", &model.eigenvalue_csv())?;
    let settings = cfg.transform_settings();
    let resolvent = |x: f64| 1.0 / (x + 1.0);
    let exponential = |x: f64| (-x).exp();
    let mut relations = Vec::new();
    for (name, f) in [("resolvent_z=-1", &resolvent as &(dyn Fn(f64) -> f64 + Sync)), ("exponential", &exponential)] {
        let r = trace_relation_check(f, &path, &model, &settings)?;
        relations.push(RelationOut { function: name, lhs: r.lhs, mid: r.mid, rhs: r.rhs });
    }
    sink.json("trace_relation.json", &relations)?;
    Ok(Outcome { converged: true, summary: format!("trace formula at L={l}, N={n}: max relative error {worst:e}") })
}
