//! TOML run configuration, validated at load time.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wittenlab::linalg::SymMatrix;
use wittenlab::model::{build_path, MonotoneCubic, OperatorPath, Profile};
use wittenlab::quad::QuadSettings;
use wittenlab::ssf::StepFunction;
use wittenlab::transforms::TransformSettings;
use wittenlab::witten::{lambda_floor, t_cap, ExtrapolationSettings, WittenConfig};

/// Configuration problem; the message names the offending field.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

fn err<T>(field: &str, msg: impl std::fmt::Display) -> Result<T, ConfigError> {
    Err(ConfigError(format!("{field}: {msg}")))
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub path: Option<PathSpec>,
    pub grid: Option<GridSpec>,
    pub transform: Option<TransformSpec>,
    pub output: Option<OutputSpec>,
    pub ssf: Option<SsfSpec>,
    pub pushnitski: Option<PushnitskiSpec>,
    pub abel: Option<AbelSpec>,
    pub rankone: Option<RankOneSpec>,
    pub fredholm: Option<FredholmSpec>,
    pub trace_check: Option<TraceCheckSpec>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub a_minus: Vec<Vec<f64>>,
    pub b_plus: Vec<Vec<f64>>,
    #[serde(default)]
    pub profile: ProfileSpec,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Named(String),
    Sampled { knots: Vec<f64>, values: Vec<f64> },
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self::Named("logistic".into())
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub resolutions: Option<Vec<(f64, usize)>>,
    pub lambda_schedules: Option<Vec<Vec<f64>>>,
    pub t_schedules: Option<Vec<Vec<f64>>>,
    pub plateau_tol: Option<f64>,
    pub richardson_order: Option<f64>,
    pub fredholm_tol: Option<f64>,
    pub kernel_tol: Option<f64>,
    pub pushnitski_window: Option<(f64, f64)>,
    pub laplace_t: Option<Vec<f64>>,
    pub laplace_lambda: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_level: Option<u32>,
    pub gl_nodes: Option<usize>,
    pub gk_max_intervals: Option<usize>,
    pub hilbert_radius: Option<f64>,
    pub lebesgue_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SsfSpec {
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub points: Option<usize>,
    pub epsilon: Option<f64>,
    pub zero_tol: Option<f64>,
    pub random: Option<RandomSuite>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSuite {
    pub count: usize,
    pub max_dim: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepSpec {
    pub fn build(&self, field: &str) -> Result<StepFunction, ConfigError> {
        StepFunction::new(self.breakpoints.clone(), self.values.clone()).or_else(|e| err(field, e))
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PushnitskiSpec {
    pub xi: Option<StepSpec>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub points: Option<usize>,
    pub quadrature: Option<bool>,
    pub discrete: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AbelSpec {
    /// `"resolvent"` for `(λ − z)⁻¹` or `"gaussian"` for `e^{−sλ}`.
    pub function: Option<String>,
    pub z: Option<f64>,
    pub s: Option<f64>,
    pub nu_min: Option<f64>,
    pub nu_max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RankOneSpec {
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<DensitySpec>,
    pub alpha: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub eps_probes: Option<Vec<f64>>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub points: Option<usize>,
    pub prescribed: Option<StepSpec>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FredholmSpec {
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TraceCheckSpec {
    /// Points `[re, im]` off `[0, ∞)`.
    pub z: Option<Vec<(f64, f64)>>,
    pub resolution: Option<(f64, usize)>,
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<SymMatrix, ConfigError> {
    SymMatrix::from_rows(rows).or_else(|e| err(field, e))
}

fn positive(field: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => err(field, format!("must be positive, got {x}")),
        _ => Ok(()),
    }
}

impl RunConfig {
    /// Checks every precondition that can be decided without running anything.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(p) = &self.path {
            self.build_path_from(p)?;
        }
        if let Some(g) = &self.grid {
            self.validate_grid(g)?;
        }
        if let Some(t) = &self.transform {
            positive("transform.abs_tol", t.abs_tol)?;
            positive("transform.rel_tol", t.rel_tol)?;
            positive("transform.hilbert_radius", t.hilbert_radius)?;
            positive("transform.lebesgue_threshold", t.lebesgue_threshold)?;
            if t.gl_nodes == Some(0) {
                return err("transform.gl_nodes", "must be at least 1");
            }
        }
        if let Some(s) = &self.ssf {
            positive("ssf.epsilon", s.epsilon)?;
            positive("ssf.zero_tol", s.zero_tol)?;
            if let Some(r) = &s.random {
                if r.max_dim == 0 || r.max_dim > 8 {
                    return err("ssf.random.max_dim", "must be between 1 and 8");
                }
            }
        }
        if let Some(p) = &self.pushnitski {
            if let Some(x) = &p.xi {
                x.build("pushnitski.xi")?;
            }
            positive("pushnitski.lambda_min", p.lambda_min)?;
        }
        if let Some(a) = &self.abel {
            match a.function.as_deref().unwrap_or("resolvent") {
                "resolvent" => {
                    if let Some(z) = a.z {
                        if !(z < 0.0) {
                            return err("abel.z", format!("must be negative, got {z}"));
                        }
                    }
                }
                "gaussian" => positive("abel.s", a.s)?,
                other => return err("abel.function", format!("unknown function {other:?} (expected resolvent or gaussian)")),
            }
        }
        if let Some(r) = &self.rankone {
            if let Some(alpha) = &r.alpha {
                if let Some(a) = alpha.iter().find(|a| !(**a > 0.0)) {
                    return err("rankone.alpha", format!("coupling must be positive, got {a}"));
                }
            }
            positive("rankone.epsilon", r.epsilon)?;
            if let Some(x) = &r.prescribed {
                x.build("rankone.prescribed")?;
            }
        }
        if let Some(f) = &self.fredholm {
            positive("fredholm.tol", f.tol)?;
        }
        if let Some(t) = &self.trace_check {
            if let Some(zs) = &t.z {
                if let Some(z) = zs.iter().find(|z| z.1 == 0.0 && z.0 >= 0.0) {
                    return err("trace_check.z", format!("point {z:?} lies on [0, ∞)"));
                }
            }
            if let Some((l, n)) = t.resolution {
                check_resolution("trace_check.resolution", l, n)?;
            }
        }
        Ok(())
    }

    fn validate_grid(&self, g: &GridSpec) -> Result<(), ConfigError> {
        positive("grid.plateau_tol", g.plateau_tol)?;
        positive("grid.richardson_order", g.richardson_order)?;
        positive("grid.fredholm_tol", g.fredholm_tol)?;
        positive("grid.kernel_tol", g.kernel_tol)?;
        let resolutions = g.resolutions.clone().unwrap_or_default();
        for (i, &(l, n)) in resolutions.iter().enumerate() {
            check_resolution(&format!("grid.resolutions[{i}]"), l, n)?;
        }
        let mut sorted = resolutions.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if sorted != resolutions && (g.lambda_schedules.is_some() || g.t_schedules.is_some()) {
            return err("grid.resolutions", "must be listed by increasing L when schedules are given");
        }
        if let Some(ls) = &g.lambda_schedules {
            if g.resolutions.is_none() || ls.len() != resolutions.len() {
                return err("grid.lambda_schedules", "needs one schedule per entry of grid.resolutions");
            }
            for (i, (s, &(l, _))) in ls.iter().zip(&resolutions).enumerate() {
                let floor = lambda_floor(l);
                if let Some(x) = s.iter().find(|&&x| !(x < 0.0) || -x < floor * (1.0 - 1e-12)) {
                    return err(&format!("grid.lambda_schedules[{i}]"), format!("λ = {x} violates λ < 0, |λ| ≥ 25/L² = {floor}"));
                }
                if s.is_empty() || s.windows(2).any(|w| !(w[1] > w[0])) {
                    return err(&format!("grid.lambda_schedules[{i}]"), "must be nonempty and approach 0 monotonically");
                }
            }
        }
        if let Some(ts) = &g.t_schedules {
            if g.resolutions.is_none() || ts.len() != resolutions.len() {
                return err("grid.t_schedules", "needs one schedule per entry of grid.resolutions");
            }
            for (i, (s, &(l, _))) in ts.iter().zip(&resolutions).enumerate() {
                let cap = t_cap(l);
                if let Some(t) = s.iter().find(|&&t| !(t > 0.0) || t > cap * (1.0 + 1e-12)) {
                    return err(&format!("grid.t_schedules[{i}]"), format!("t = {t} violates 0 < t ≤ L²/25 = {cap}"));
                }
                if s.is_empty() || s.windows(2).any(|w| !(w[1] > w[0])) {
                    return err(&format!("grid.t_schedules[{i}]"), "must be nonempty and increasing");
                }
            }
        }
        if let Some((a, b)) = g.pushnitski_window {
            if !(a > 0.0 && b > a) {
                return err("grid.pushnitski_window", "must satisfy 0 < a < b");
            }
        }
        if let Some(t) = &g.laplace_t {
            if t.iter().any(|t| !(*t > 0.0)) {
                return err("grid.laplace_t", "must be positive");
            }
        }
        if let Some(l) = &g.laplace_lambda {
            if l.iter().any(|l| !(*l < 0.0)) {
                return err("grid.laplace_lambda", "must be negative");
            }
        }
        Ok(())
    }

    fn build_path_from(&self, p: &PathSpec) -> Result<OperatorPath, ConfigError> {
        let a_minus = matrix("path.a_minus", &p.a_minus)?;
        let b_plus = matrix("path.b_plus", &p.b_plus)?;
        if a_minus.dim() != b_plus.dim() {
            return err("path.b_plus", format!("dimension {} differs from path.a_minus dimension {}", b_plus.dim(), a_minus.dim()));
        }
        let profile = match &p.profile {
            ProfileSpec::Named(name) => Profile::from_name(name).or_else(|e| err("path.profile", e))?,
            ProfileSpec::Sampled { knots, values } => {
                Profile::CustomSampled(MonotoneCubic::new(knots.clone(), values.clone()).or_else(|e| err("path.profile", e))?)
            }
        };
        build_path(a_minus, b_plus, profile).or_else(|e| err("path", e))
    }

    pub fn operator_path(&self) -> Result<OperatorPath, ConfigError> {
        match &self.path {
            Some(p) => self.build_path_from(p),
            None => err("path", "this command needs a [path] table"),
        }
    }

    pub fn transform_settings(&self) -> TransformSettings {
        let mut s = TransformSettings::default();
        if let Some(t) = &self.transform {
            let q = &mut s.quad;
            let d = QuadSettings::default();
            q.abs_tol = t.abs_tol.unwrap_or(d.abs_tol);
            q.rel_tol = t.rel_tol.unwrap_or(d.rel_tol);
            q.max_level = t.max_level.unwrap_or(d.max_level);
            q.gl_nodes = t.gl_nodes.unwrap_or(d.gl_nodes);
            q.gk_max_intervals = t.gk_max_intervals.unwrap_or(d.gk_max_intervals);
            s.hilbert_radius = t.hilbert_radius.unwrap_or(s.hilbert_radius);
            s.lebesgue_threshold = t.lebesgue_threshold.unwrap_or(s.lebesgue_threshold);
        }
        s
    }

    pub fn witten_config(&self, n: usize) -> WittenConfig {
        let mut c = WittenConfig::for_dim(n);
        if let Some(g) = &self.grid {
            if let Some(r) = &g.resolutions {
                c.resolutions = r.clone();
            }
            c.lambda_schedules = g.lambda_schedules.clone();
            c.t_schedules = g.t_schedules.clone();
            let d = ExtrapolationSettings::default();
            c.extrapolation = ExtrapolationSettings {
                plateau_tol: g.plateau_tol.unwrap_or(d.plateau_tol),
                richardson_order: g.richardson_order.unwrap_or(d.richardson_order),
            };
            c.fredholm_tol = g.fredholm_tol.unwrap_or(c.fredholm_tol);
            c.kernel_tol = g.kernel_tol.unwrap_or(c.kernel_tol);
            c.pushnitski_window = g.pushnitski_window.unwrap_or(c.pushnitski_window);
            c.laplace_t = g.laplace_t.clone().unwrap_or(c.laplace_t);
            c.laplace_lambda = g.laplace_lambda.clone().unwrap_or(c.laplace_lambda);
        }
        c
    }
}

fn check_resolution(field: &str, l: f64, n: usize) -> Result<(), ConfigError> {
    if !(l > 0.0 && l.is_finite()) {
        return err(field, format!("L must be positive, got {l}"));
    }
    if n < 3 || n % 2 == 0 {
        return err(field, format!("N must be odd and at least 3, got {n}"));
    }
    Ok(())
}
