use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geometry::{Chart, ChartInstance, LocalGeometry, MParam, MetricField, Potential};
use crate::quasi_einstein::{map_points, qe_residual, Form, ResidualReport};
use crate::warp::einstein_residual;

/// Outcome of the three checks on the exponential family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentialReport {
    pub n: usize,
    pub m: f64,
    pub mu: f64,
    pub a: f64,
    pub lambda: f64,
    /// `Ric - μg`
    pub einstein: ResidualReport,
    /// `Hess u - a²u g`
    pub hess_u: ResidualReport,
    pub qe: ResidualReport,
    pub pass: bool,
}

impl ExponentialReport {
    /// All three residuals folded into one report (pointwise maximum).
    pub fn combined(&self) -> ResidualReport {
        let res = self
            .einstein
            .residuals
            .iter()
            .zip(&self.hess_u.residuals)
            .zip(&self.qe.residuals)
            .map(|((a, b), c)| a.max(*b).max(*c))
            .collect();
        ResidualReport::new("exponential_solution", &self.einstein.label, res, self.qe.skipped, self.qe.tolerance)
    }
}

fn constants(n: usize, m: f64, mu: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InconsistentConstants(format!("need n >= 2, got {}", n)));
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InconsistentConstants(format!("need finite positive m, got {}", m)));
    }
    if !(mu < 0.0) {
        return Err(Error::InconsistentConstants(format!("the nontrivial branch needs mu < 0, got {}", mu)));
    }
    let a2 = -mu / (n as f64 - 1.0);
    Ok((a2.sqrt(), mu - m * a2))
}

/// `g = dr² + a⁻²e^{2ar} Σ dxᵢ²` with `u = a⁻¹e^{ar}` on `[-1, 1]ⁿ`, where
/// `a² = -μ/(n-1)` and `λ = μ - m a²`.
pub fn exponential_instance(n: usize, m: f64, mu: f64) -> Result<ChartInstance> {
    let (a, lambda) = constants(n, m, mu)?;
    let mut names = vec!["r".to_string()];
    names.extend((1..n).map(|i| format!("x{}", i)));
    let r = Expression::coord("r");
    let warp = Expression::constant(1.0 / (a * a)) * Expression::exp(Expression::constant(2.0 * a) * r.clone());
    let mut diag = vec![Expression::one()];
    diag.extend((1..n).map(|_| warp.clone()));
    let u = Expression::constant(1.0 / a) * Expression::exp(Expression::constant(a) * r);
    ChartInstance::builder(Chart::new(&names, &vec![(-1.0, 1.0); n])?, MetricField::diagonal(diag))
        .label(format!("exponential_n{}", n))
        .potential(Potential::U(u))
        .m(MParam::Finite(m))
        .lambda(lambda)
        .derivative_order(2)
        .build()
}

/// Einstein, Hessian and quasi-Einstein residuals of the exponential family
/// at `points` (coordinates in `[-1, 1]ⁿ`).
pub fn exponential_solution_check(
    n: usize,
    m: f64,
    mu: f64,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<ExponentialReport> {
    let (a, lambda) = constants(n, m, mu)?;
    let inst = exponential_instance(n, m, mu)?;
    let label = inst.label();
    let (ein, s1) = map_points(points, |p| Ok(einstein_residual(&inst, mu, p)?.max_abs()))?;
    let (hess, s2) = map_points(points, |p| {
        let geo = LocalGeometry::new(&inst, p)?;
        let u = inst.u_jet(p)?;
        let h = geo.hessian(&u);
        Ok(h.iter()
            .zip(geo.metric())
            .map(|(h, g)| (h.value() - a * a * u.value() * g.value()).abs())
            .fold(0.0, f64::max))
    })?;
    let (qe, s3) = map_points(points, |p| Ok(qe_residual(&inst, p, Form::U)?.max_abs()))?;
    let einstein = ResidualReport::new("einstein", label, ein, s1, tol);
    let hess_u = ResidualReport::new("hess_u", label, hess, s2, tol);
    let qe = ResidualReport::new("qe_residual", label, qe, s3, tol);
    let pass = einstein.pass && hess_u.pass && qe.pass;
    Ok(ExponentialReport { n, m, mu, a, lambda, einstein, hess_u, qe, pass })
}
