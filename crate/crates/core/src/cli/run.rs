use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{build, default_tolerance, Built, Check, OdeOptions, RunConfig, ShootOptions, TransportOptions};
use super::ConfigError;
use crate::cohom1::{
    exponential_solution_check, integrate_ode, lift_solution, shoot_closed_surface, AnsatzKind, ProfileAnsatz,
    ProfileForm,
};
use crate::error::{Error, Result};
use crate::expr::{parse_expression, Scope};
use crate::geometry::{conformal_hessian_test, ChartInstance};
use crate::kahler::{
    directional_hessian_check, kahler_checks, parallel_distribution_check, phi_antisymmetry_check,
    wedge_vanishing_check, Curve, KahlerInstance,
};
use crate::quasi_einstein::{
    check_identity_gated, kazdan_warner_integral, map_points, mu_constancy, qe_residual, scalar_bound_report, Form,
    QuadratureGrid, ResidualReport, BOUND_TOL,
};
use crate::sampling::sample_box;
use crate::warp::{einstein_check, lift_warped_product_on, scalar_curvature_check};

pub const ENGINE_VERSION: &str = concat!("qecheck ", env!("CARGO_PKG_VERSION"));

/// Result of one configured check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub check: String,
    pub pass: bool,
    pub tolerance: f64,
    /// Headline number: the largest residual, or the quantity compared
    /// against the tolerance.
    pub metric: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub version: String,
    pub entries: Vec<Entry>,
    pub pass: bool,
}

struct Outcome {
    pass: bool,
    metric: f64,
    result: Value,
}

fn value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

fn residual(r: ResidualReport) -> Outcome {
    Outcome { pass: r.pass, metric: r.max_residual, result: value(&r) }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    built: &'a Built,
    points: Vec<Vec<f64>>,
}

impl Ctx<'_> {
    fn inst(&self) -> &ChartInstance {
        &self.built.instance
    }

    fn kahler(&self) -> Result<&KahlerInstance> {
        self.built
            .kahler
            .as_ref()
            .ok_or_else(|| Error::InvalidInstance("the instance declares no complex structure".into()))
    }

    fn sample(&self, inst: &ChartInstance) -> Vec<Vec<f64>> {
        sample_box(inst.chart().bounds(), self.cfg.sample.count, self.cfg.sample.seed)
    }

    fn seeded(&self, r: ResidualReport) -> Outcome {
        residual(r.with_seed(self.cfg.sample.seed))
    }

    fn run(&self, check: &Check, tol: f64) -> Result<Outcome> {
        let inst = self.inst();
        let pts = &self.points;
        Ok(match check {
            Check::QeResidual { form } => {
                let (res, skipped) = map_points(pts, |p| Ok(qe_residual(inst, p, *form)?.max_abs()))?;
                self.seeded(ResidualReport::new("qe_residual", inst.label(), res, skipped, tol))
            }
            Check::Identity { id, hypothesis_tol } => {
                self.seeded(check_identity_gated(inst, *id, pts, tol, *hypothesis_tol)?)
            }
            Check::MuConstancy => {
                let r = mu_constancy(inst, pts, tol)?;
                Outcome { pass: r.pass, metric: r.spread, result: value(&r) }
            }
            Check::ScalarBound => {
                let r = scalar_bound_report(inst, pts)?;
                Outcome { pass: r.pass, metric: r.min_r, result: value(&r) }
            }
            Check::WarpLift => self.warp_lift(tol)?,
            Check::Einstein { lambda } => self.seeded(einstein_check(inst, lambda.unwrap_or(inst.lambda()), pts, tol)?),
            Check::ScalarCurvature { expected } => self.seeded(scalar_curvature_check(inst, *expected, pts, tol)?),
            Check::ConformalHessian { expr } => {
                let h = match expr {
                    Some(s) => {
                        let names: Vec<String> = inst.params().keys().cloned().collect();
                        parse_expression(s, &Scope::new(inst.coordinates(), &names))?
                    }
                    None => inst
                        .u_expression()
                        .ok_or_else(|| Error::FormUnavailable("no potential to test".into()))?,
                };
                let r = conformal_hessian_test(inst, &h, pts, tol)?;
                Outcome { pass: r.is_conformal, metric: r.max_residual, result: value(&r) }
            }
            Check::KazdanWarner { counts } => {
                let kw = kazdan_warner_integral(inst, &QuadratureGrid { counts: *counts, ..Default::default() })?;
                let relative = kw.integral.abs() / kw.area;
                Outcome { pass: kw.conformal_ok && relative <= tol, metric: relative, result: value(&kw) }
            }
            Check::Kahler => {
                let r = kahler_checks(self.kahler()?, pts, tol)?;
                let metric = [&r.j_squared, &r.compatibility, &r.nabla_j, &r.d_omega]
                    .iter()
                    .map(|c| c.max_residual)
                    .fold(0.0, f64::max);
                Outcome { pass: r.pass, metric, result: value(&r) }
            }
            Check::PhiAntisymmetry => self.seeded(phi_antisymmetry_check(self.kahler()?, pts, tol)?),
            Check::Wedge => self.seeded(wedge_vanishing_check(self.kahler()?, pts, tol)?),
            Check::DirectionalHessian => self.seeded(directional_hessian_check(self.kahler()?, pts, tol)?),
            Check::ParallelTransport(o) => self.transport(o, tol)?,
            Check::OdeLift(o) => self.ode_lift(o, tol)?,
            Check::ShootClosedSurface(o) => self.shoot(o, tol)?,
            Check::ExponentialSolution(o) => {
                let pts = sample_box(&vec![(-1.0, 1.0); o.n], self.cfg.sample.count, self.cfg.sample.seed);
                let r = exponential_solution_check(o.n, o.m, o.mu, &pts, tol)?;
                let metric = r.combined().max_residual;
                Outcome { pass: r.pass, metric, result: value(&r) }
            }
        })
    }

    fn warp_lift(&self, tol: f64) -> Result<Outcome> {
        let inst = self.inst();
        let w = lift_warped_product_on(inst, &self.points)?;
        let total_pts = self.sample(&w.total);
        let lambda = inst.lambda();
        let total_r = lambda * w.total.dim() as f64;
        let einstein = einstein_check(&w.total, lambda, &total_pts, tol)?.with_seed(self.cfg.sample.seed);
        let scalar = scalar_curvature_check(&w.total, total_r, &total_pts, tol)?.with_seed(self.cfg.sample.seed);
        Ok(Outcome {
            pass: w.base_qe_ok && einstein.pass && scalar.pass,
            metric: einstein.max_residual.max(scalar.max_residual),
            result: json!({ "lift": w.summary(), "expected_scalar": total_r, "einstein": einstein, "scalar_curvature": scalar }),
        })
    }

    fn transport(&self, o: &TransportOptions, tol: f64) -> Result<Outcome> {
        let k = self.kahler()?;
        let inst = self.inst();
        let curve = match &o.curve {
            Some(parts) => {
                let names: Vec<&str> = inst.params().keys().map(String::as_str).collect();
                let scope = Scope::new(&["t"], &names);
                Curve::new(parts.iter().map(|s| parse_expression(s, &scope)).collect::<std::result::Result<_, _>>()?)
            }
            None => {
                let b = inst.chart().bounds();
                let at = |s: f64| -> Vec<f64> { b.iter().map(|(lo, hi)| lo + s * (hi - lo)).collect() };
                Curve::segment(&o.from.clone().unwrap_or_else(|| at(0.1)), &o.to.clone().unwrap_or_else(|| at(0.9)))
            }
        };
        let r = parallel_distribution_check(k, &curve, o.steps, tol)?;
        Ok(Outcome { pass: r.pass, metric: r.drift_per_length, result: value(&r) })
    }

    fn ode_lift(&self, o: &OdeOptions, tol: f64) -> Result<Outcome> {
        let inst = self.inst();
        let m = match o.m {
            Some(m) => m,
            None => inst.m().finite().ok_or_else(|| Error::UnsupportedAnsatz("profile equations need finite m".into()))?,
        };
        let lambda = o.lambda.unwrap_or(inst.lambda());
        let n = o.n.unwrap_or(match o.kind {
            AnsatzKind::Line => 1,
            _ => 2,
        });
        let ansatz = ProfileAnsatz { kind: o.kind, n, m, lambda, rho: o.rho.unwrap_or(0.0), form: o.form };
        let sol = integrate_ode(&ansatz, &o.init, o.r_max, o.h)?;
        let lifted = lift_solution(&sol)?;
        let pts = self.sample(&lifted);
        let form = match o.form {
            ProfileForm::F => Form::F,
            ProfileForm::U => Form::U,
        };
        let (res, skipped) = map_points(&pts, |p| Ok(qe_residual(&lifted, p, form)?.max_abs()))?;
        let qe = ResidualReport::new("qe_residual", lifted.label(), res, skipped, tol).with_seed(self.cfg.sample.seed);
        let mut pass = qe.pass;
        let mut scalar_deviation = None;
        if o.constant_scalar {
            let target = (n as f64 - 1.0) * lambda;
            let dev = sol.scalar_curvature()?.iter().map(|(_, r)| (r - target).abs()).fold(0.0, f64::max);
            pass &= dev <= BOUND_TOL;
            scalar_deviation = Some(dev);
        }
        Ok(Outcome {
            pass,
            metric: qe.max_residual,
            result: json!({
                "ansatz": ansatz,
                "status": sol.status,
                "nodes": sol.len(),
                "drift": sol.drift,
                "qe": qe,
                "scalar_deviation": scalar_deviation,
            }),
        })
    }

    fn shoot(&self, o: &ShootOptions, tol: f64) -> Result<Outcome> {
        let inst = self.inst();
        let m = o.m.or(inst.m().finite()).unwrap_or(f64::INFINITY);
        let lambda = o.lambda.unwrap_or(inst.lambda());
        let r = shoot_closed_surface(m, lambda, (o.range[0], o.range[1]), o.samples);
        let pass = r.valid && r.trivial_defect <= 1e-6 && r.min_nontrivial_defect > tol && r.continuity_ok;
        Ok(Outcome { pass, metric: r.min_nontrivial_defect, result: value(&r) })
    }
}

/// Execute every check of a configuration in order. Errors inside a check
/// are recorded on its entry; only an invalid configuration aborts.
pub fn run(cfg: &RunConfig) -> std::result::Result<RunReport, ConfigError> {
    let built = build(cfg).map_err(|i| ConfigError::from_issue(i, None))?;
    let points = sample_box(built.instance.chart().bounds(), cfg.sample.count, cfg.sample.seed);
    let ctx = Ctx { cfg, built: &built, points };
    let entries: Vec<Entry> = cfg
        .checks
        .iter()
        .zip(&built.checks)
        .map(|(spec, check)| {
            let tol = spec.tol.unwrap_or_else(|| default_tolerance(&spec.name));
            match ctx.run(check, tol) {
                Ok(o) => Entry {
                    check: spec.name.clone(),
                    pass: o.pass,
                    tolerance: tol,
                    metric: Some(o.metric),
                    result: Some(o.result),
                    error: None,
                },
                Err(e) => Entry {
                    check: spec.name.clone(),
                    pass: false,
                    tolerance: tol,
                    metric: None,
                    result: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let pass = entries.iter().all(|e| e.pass);
    Ok(RunReport { config: cfg.clone(), version: ENGINE_VERSION.to_string(), entries, pass })
}

/// Human-readable table of a report.
pub fn render_text(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} | {} | seed {:#x}", report.config.label, report.version, report.config.sample.seed);
    for e in &report.entries {
        let status = if e.pass { "PASS" } else { "FAIL" };
        let metric = e.metric.map_or_else(|| "-".to_string(), |m| format!("{:.3e}", m));
        let _ = write!(out, "  {:<22} {}  metric {:>10}  tol {:.1e}", e.check, status, metric, e.tolerance);
        if let Some(err) = &e.error {
            let _ = write!(out, "  error: {}", err);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "overall: {}", if report.pass { "PASS" } else { "FAIL" });
    out
}
