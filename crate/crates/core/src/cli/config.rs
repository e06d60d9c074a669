use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::ConfigError;
use crate::cohom1::{AnsatzKind, InitialData, ProfileForm};
use crate::expr::{parse_expression, Expression, ParseError, Scope};
use crate::geometry::{Chart, ChartInstance, MParam, MetricField, Potential};
use crate::kahler::{ComplexStructureField, KahlerInstance};
use crate::quasi_einstein::{Form, IdentityId, HYPOTHESIS_TOL};
use crate::sampling::DEFAULT_SEED;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub label: String,
    pub instance: InstanceSpec,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub sample: SampleSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub coordinates: Vec<String>,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    /// One flag per coordinate; a periodic coordinate has the box width as
    /// its period.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub periodic: Vec<bool>,
    /// Upper triangle of the metric, row-major.
    pub metric: Vec<String>,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    #[serde(default = "infinite")]
    pub m: MParam,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    /// `J^i_j`, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex_structure: Option<Vec<String>>,
}

fn infinite() -> MParam {
    MParam::Infinite
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotentialKind {
    F,
    U,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub options: Map<String, Value>,
}

impl CheckSpec {
    pub fn named(name: &str) -> Self {
        CheckSpec { name: name.to_string(), tol: None, options: Map::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_count() -> usize {
    100
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec { count: default_count(), seed: default_seed() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

/// A check with its options resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    QeResidual { form: Form },
    Identity { id: IdentityId, hypothesis_tol: f64 },
    MuConstancy,
    ScalarBound,
    WarpLift,
    Einstein { lambda: Option<f64> },
    ScalarCurvature { expected: f64 },
    ConformalHessian { expr: Option<String> },
    KazdanWarner { counts: [usize; 2] },
    Kahler,
    PhiAntisymmetry,
    Wedge,
    DirectionalHessian,
    ParallelTransport(TransportOptions),
    OdeLift(OdeOptions),
    ShootClosedSurface(ShootOptions),
    ExponentialSolution(ExponentialOptions),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisOptions {
    #[serde(default = "hypothesis_tol")]
    pub hypothesis_tol: f64,
}

fn hypothesis_tol() -> f64 {
    HYPOTHESIS_TOL
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct QeOptions {
    #[serde(default = "f_form")]
    form: Form,
}

fn f_form() -> Form {
    Form::F
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct EinsteinOptions {
    #[serde(default)]
    lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalarOptions {
    expected: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConformalOptions {
    #[serde(default)]
    expr: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct KwOptions {
    #[serde(default = "kw_counts")]
    counts: [usize; 2],
}

fn kw_counts() -> [usize; 2] {
    [200, 64]
}

/// A segment `from → to`, or explicit components in `t ∈ [0, 1]`. Without
/// either, the segment joins the 10% and 90% corners of the box.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportOptions {
    #[serde(default)]
    pub from: Option<Vec<f64>>,
    #[serde(default)]
    pub to: Option<Vec<f64>>,
    #[serde(default)]
    pub curve: Option<Vec<String>>,
    #[serde(default = "transport_steps")]
    pub steps: usize,
}

fn transport_steps() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeOptions {
    pub kind: AnsatzKind,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    pub form: ProfileForm,
    pub init: InitialData,
    pub r_max: f64,
    #[serde(default = "default_step")]
    pub h: f64,
    /// Also require `R = (n-1)λ` along the trajectory.
    #[serde(default)]
    pub constant_scalar: bool,
}

fn default_step() -> f64 {
    crate::cohom1::DEFAULT_STEP
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShootOptions {
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "shoot_range")]
    pub range: [f64; 2],
    #[serde(default = "shoot_samples")]
    pub samples: usize,
}

fn shoot_range() -> [f64; 2] {
    [-1.0, 1.0]
}

fn shoot_samples() -> usize {
    41
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialOptions {
    pub n: usize,
    pub m: f64,
    pub mu: f64,
}

pub const CHECK_NAMES: [&str; 25] = [
    "qe_residual",
    "E1",
    "E2",
    "E3",
    "E4",
    "E5",
    "E9",
    "EE1",
    "RICGRAD",
    "TRACE",
    "mu_constancy",
    "scalar_bound",
    "warp_lift",
    "einstein",
    "scalar_curvature",
    "conformal_hessian",
    "kazdan_warner",
    "kahler",
    "phi_antisymmetry",
    "wedge",
    "directional_hessian",
    "parallel_transport",
    "ode_lift",
    "shoot_closed_surface",
    "exponential_solution",
];

/// Tolerance used when a check does not set one.
pub fn default_tolerance(name: &str) -> f64 {
    match name {
        "qe_residual" | "einstein" | "scalar_curvature" | "kahler" | "phi_antisymmetry" => 1e-9,
        "E1" | "E2" | "E3" | "mu_constancy" | "conformal_hessian" | "wedge" | "exponential_solution" => 1e-8,
        "kazdan_warner" | "parallel_transport" | "ode_lift" => 1e-6,
        "shoot_closed_surface" => 1e-2,
        _ => 1e-7,
    }
}

/// A problem found while validating, located by JSON pointer.
#[derive(Debug, Clone)]
pub(crate) struct Issue {
    pub pointer: Vec<String>,
    pub message: String,
    /// Span inside the string value, for expression errors.
    pub span: Option<(usize, usize)>,
}

impl Issue {
    fn at(pointer: &[&str], message: impl Into<String>) -> Issue {
        Issue { pointer: pointer.iter().map(|s| s.to_string()).collect(), message: message.into(), span: None }
    }

    fn expr(pointer: Vec<String>, e: &ParseError) -> Issue {
        let s = e.span();
        Issue { pointer, message: e.to_string(), span: Some((s.start, s.end)) }
    }
}

fn options<T: for<'de> Deserialize<'de>>(spec: &CheckSpec, k: usize) -> Result<T, Issue> {
    serde_json::from_value(Value::Object(spec.options.clone())).map_err(|e| Issue {
        pointer: vec!["checks".into(), k.to_string(), "options".into()],
        message: e.to_string(),
        span: None,
    })
}

pub(crate) fn resolve_check(spec: &CheckSpec, k: usize) -> Result<Check, Issue> {
    if let Some(t) = spec.tol {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Issue::at(&["checks", &k.to_string(), "tol"], "tolerance must be finite and non-negative"));
        }
    }
    if let Ok(id) = spec.name.parse::<IdentityId>() {
        let o: HypothesisOptions = options(spec, k)?;
        return Ok(Check::Identity { id, hypothesis_tol: o.hypothesis_tol });
    }
    let none = |c: Check| -> Result<Check, Issue> {
        options::<Map<String, Value>>(spec, k).and_then(|m| {
            if m.is_empty() {
                Ok(c.clone())
            } else {
                Err(Issue::at(&["checks", &k.to_string(), "options"], format!("`{}` takes no options", spec.name)))
            }
        })
    };
    Ok(match spec.name.as_str() {
        "qe_residual" => Check::QeResidual { form: options::<QeOptions>(spec, k)?.form },
        "mu_constancy" => none(Check::MuConstancy)?,
        "scalar_bound" => none(Check::ScalarBound)?,
        "warp_lift" => none(Check::WarpLift)?,
        "einstein" => Check::Einstein { lambda: options::<EinsteinOptions>(spec, k)?.lambda },
        "scalar_curvature" => Check::ScalarCurvature { expected: options::<ScalarOptions>(spec, k)?.expected },
        "conformal_hessian" => Check::ConformalHessian { expr: options::<ConformalOptions>(spec, k)?.expr },
        "kazdan_warner" => Check::KazdanWarner { counts: options::<KwOptions>(spec, k)?.counts },
        "kahler" => none(Check::Kahler)?,
        "phi_antisymmetry" => none(Check::PhiAntisymmetry)?,
        "wedge" => none(Check::Wedge)?,
        "directional_hessian" => none(Check::DirectionalHessian)?,
        "parallel_transport" => Check::ParallelTransport(options(spec, k)?),
        "ode_lift" => Check::OdeLift(options(spec, k)?),
        "shoot_closed_surface" => Check::ShootClosedSurface(options(spec, k)?),
        "exponential_solution" => Check::ExponentialSolution(options(spec, k)?),
        other => {
            return Err(Issue::at(
                &["checks", &k.to_string(), "name"],
                format!("unknown check `{}`; expected one of {}", other, CHECK_NAMES.join(", ")),
            ))
        }
    })
}

/// The instance, and its Kähler structure when one is declared.
#[derive(Debug, Clone)]
pub struct Built {
    pub instance: ChartInstance,
    pub kahler: Option<KahlerInstance>,
    pub checks: Vec<Check>,
}

fn ptr(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

pub(crate) fn build(cfg: &RunConfig) -> Result<Built, Issue> {
    let spec = &cfg.instance;
    let n = spec.coordinates.len();
    if n == 0 {
        return Err(Issue::at(&["instance", "coordinates"], "at least one coordinate is required"));
    }
    for (i, c) in spec.coordinates.iter().enumerate() {
        if spec.coordinates[..i].contains(c) {
            return Err(Issue::at(&["instance", "coordinates", &i.to_string()], format!("duplicate coordinate `{}`", c)));
        }
        if spec.params.contains_key(c) {
            return Err(Issue::at(&["instance", "params"], format!("`{}` is both a coordinate and a parameter", c)));
        }
    }
    if spec.bounds.len() != n {
        return Err(Issue::at(&["instance", "box"], format!("expected {} intervals, got {}", n, spec.bounds.len())));
    }
    if !spec.periodic.is_empty() && spec.periodic.len() != n {
        return Err(Issue::at(&["instance", "periodic"], format!("expected {} flags, got {}", n, spec.periodic.len())));
    }
    if spec.metric.len() != n * (n + 1) / 2 {
        return Err(Issue::at(
            &["instance", "metric"],
            format!("expected {} upper-triangle entries, got {}", n * (n + 1) / 2, spec.metric.len()),
        ));
    }
    if let MParam::Finite(m) = spec.m {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Issue::at(&["instance", "m"], "m must be positive or \"inf\""));
        }
    }
    if matches!(spec.potential, Some(PotentialSpec { kind: PotentialKind::U, .. })) && spec.m.is_infinite() {
        return Err(Issue::at(&["instance", "potential"], "a U-form potential needs finite m"));
    }
    let names: Vec<String> = spec.params.keys().cloned().collect();
    let scope = Scope::new(&spec.coordinates, &names);
    let parse = |s: &str, pointer: Vec<String>| parse_expression(s, &scope).map_err(|e| Issue::expr(pointer, &e));
    let metric: Vec<Expression> = spec
        .metric
        .iter()
        .enumerate()
        .map(|(i, s)| parse(s, ptr(&["instance", "metric", &i.to_string()])))
        .collect::<Result<_, _>>()?;
    let potential = match &spec.potential {
        None => Potential::None,
        Some(p) => {
            let e = parse(&p.expr, ptr(&["instance", "potential", "expr"]))?;
            match p.kind {
                PotentialKind::F => Potential::F(e),
                PotentialKind::U => Potential::U(e),
            }
        }
    };
    let bounds: Vec<(f64, f64)> = spec.bounds.iter().map(|b| (b[0], b[1])).collect();
    let mut chart = Chart::new(&spec.coordinates, &bounds).map_err(|e| Issue::at(&["instance", "box"], e.to_string()))?;
    for (i, &p) in spec.periodic.iter().enumerate() {
        if p {
            chart = chart
                .with_period(i, bounds[i].1 - bounds[i].0)
                .map_err(|e| Issue::at(&["instance", "periodic"], e.to_string()))?;
        }
    }
    let metric = MetricField::new(n, metric).map_err(|e| Issue::at(&["instance", "metric"], e.to_string()))?;
    let instance = ChartInstance::builder(chart, metric)
        .label(cfg.label.clone())
        .potential(potential)
        .m(spec.m)
        .lambda(spec.lambda)
        .params(spec.params.clone())
        .build()
        .map_err(|e| Issue::at(&["instance"], e.to_string()))?;
    let kahler = match &spec.complex_structure {
        None => None,
        Some(entries) => {
            let j = entries
                .iter()
                .enumerate()
                .map(|(i, s)| parse(s, ptr(&["instance", "complex_structure", &i.to_string()])))
                .collect::<Result<Vec<_>, _>>()?;
            let j = ComplexStructureField::new(n, j)
                .map_err(|e| Issue::at(&["instance", "complex_structure"], e.to_string()))?;
            Some(
                KahlerInstance::new(instance.clone(), j)
                    .map_err(|e| Issue::at(&["instance", "complex_structure"], e.to_string()))?,
            )
        }
    };
    let checks = cfg.checks.iter().enumerate().map(|(k, c)| resolve_check(c, k)).collect::<Result<_, _>>()?;
    if cfg.sample.count == 0 {
        return Err(Issue::at(&["sample", "count"], "sample count must be positive"));
    }
    Ok(Built { instance, kahler, checks })
}

/// The instance a configuration describes, with its Kähler structure when
/// one is declared.
pub fn instantiate(cfg: &RunConfig) -> Result<(ChartInstance, Option<KahlerInstance>), ConfigError> {
    build(cfg).map(|b| (b.instance, b.kahler)).map_err(|i| ConfigError::from_issue(i, None))
}

/// Parse and validate a configuration from JSON text.
pub fn parse_config(src: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(src);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = pointer_of(e.path());
        let inner = e.into_inner();
        ConfigError::Schema {
            pointer,
            message: strip_position(&inner.to_string()),
            line: inner.line(),
            column: inner.column(),
        }
    })?;
    build(&cfg).map_err(|issue| ConfigError::from_issue(issue, Some(src)))?;
    Ok(cfg)
}

/// Read, parse and validate a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config(&src)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(key),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// Byte offset of the value at `pointer` in JSON text.
pub(crate) fn locate(src: &str, pointer: &[String]) -> Option<usize> {
    let mut s = Scanner { b: src.as_bytes(), i: 0 };
    s.find(pointer)
}

struct Scanner<'a> {
    b: &'a [u8],
    i: usize,
}

impl Scanner<'_> {
    fn ws(&mut self) {
        while self.i < self.b.len() && self.b[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.b.get(self.i).copied()
    }

    fn string(&mut self) -> Option<String> {
        if self.peek()? != b'"' {
            return None;
        }
        self.i += 1;
        let start = self.i;
        while self.peek()? != b'"' {
            self.i += if self.b[self.i] == b'\\' { 2 } else { 1 };
        }
        let raw = std::str::from_utf8(&self.b[start..self.i]).ok()?.to_string();
        self.i += 1;
        Some(raw)
    }

    fn skip(&mut self) -> Option<()> {
        self.ws();
        match self.peek()? {
            b'"' => self.string().map(|_| ()),
            open @ (b'{' | b'[') => {
                let close = if open == b'{' { b'}' } else { b']' };
                self.i += 1;
                loop {
                    self.ws();
                    match self.peek()? {
                        c if c == close => {
                            self.i += 1;
                            return Some(());
                        }
                        b',' | b':' => self.i += 1,
                        _ => self.skip()?,
                    }
                }
            }
            _ => {
                while !matches!(self.peek()?, b',' | b'}' | b']') && !self.b[self.i].is_ascii_whitespace() {
                    self.i += 1;
                }
                Some(())
            }
        }
    }

    fn find(&mut self, pointer: &[String]) -> Option<usize> {
        self.ws();
        let Some((head, rest)) = pointer.split_first() else {
            return Some(self.i);
        };
        match self.peek()? {
            b'{' => {
                self.i += 1;
                loop {
                    self.ws();
                    if self.peek()? == b'}' {
                        return None;
                    }
                    let key = self.string()?;
                    self.ws();
                    if self.peek()? != b':' {
                        return None;
                    }
                    self.i += 1;
                    if &key == head {
                        return self.find(rest);
                    }
                    self.skip()?;
                    self.ws();
                    if self.peek()? == b',' {
                        self.i += 1;
                    }
                }
            }
            b'[' => {
                let want: usize = head.parse().ok()?;
                self.i += 1;
                let mut k = 0;
                loop {
                    self.ws();
                    if self.peek()? == b']' {
                        return None;
                    }
                    if k == want {
                        return self.find(rest);
                    }
                    self.skip()?;
                    self.ws();
                    if self.peek()? == b',' {
                        self.i += 1;
                    }
                    k += 1;
                }
            }
            _ => None,
        }
    }
}

/// 1-based line and column (in characters) of a byte offset.
pub(crate) fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}
