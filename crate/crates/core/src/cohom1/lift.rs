use std::f64::consts::TAU;
use std::sync::Arc;

use super::ode::{AnsatzKind, OdeSolution, OdeStatus, ProfileForm};
use crate::error::{Error, Result};
use crate::expr::{CubicSpline, Expression};
use crate::geometry::{Chart, ChartInstance, MParam, MetricField, Potential};
use crate::warp::fiber_model;

const MIN_NODES: usize = 8;
/// Fraction of the grid kept out of the chart box at each end, where the
/// natural end conditions of the splines are inaccurate.
const MARGIN: f64 = 0.1;

fn spline_of(r: &[f64], y: &[f64], var: &str) -> Result<Expression> {
    let s = CubicSpline::natural(r.to_vec(), y.to_vec())
        .ok_or_else(|| Error::InsufficientNodes(r.len()))?;
    Ok(Expression::spline(Arc::new(s), 0, Expression::coord(var)))
}

/// Turn an integrated profile into a chart instance with spline-interpolated
/// metric and potential, so the tensor engine can check it independently.
pub fn lift_solution(sol: &OdeSolution) -> Result<ChartInstance> {
    if sol.status != OdeStatus::ReachedEnd {
        return Err(Error::IncompleteSolution(format!("integration stopped with {:?}", sol.status)));
    }
    if sol.len() < MIN_NODES {
        return Err(Error::InsufficientNodes(sol.len()));
    }
    let a = &sol.ansatz;
    let (r0, r1) = (sol.r[0], sol.r[sol.len() - 1]);
    let pad = MARGIN * (r1 - r0);
    let radial = (r0 + pad, r1 - pad);
    let var = if a.kind == AnsatzKind::Line { "x" } else { "r" };
    let w = spline_of(&sol.r, &sol.w, var)?;
    let potential = match a.form {
        ProfileForm::F => Potential::F(w),
        ProfileForm::U => Potential::U(w),
    };
    let (chart, metric) = match a.kind {
        AnsatzKind::Line => (Chart::new(&["x"], &[radial])?, MetricField::euclidean(1)),
        AnsatzKind::Revolution => {
            let phi = spline_of(&sol.r, &sol.phi, "r")?;
            let chart = Chart::new(&["r", "t"], &[radial, (0.0, TAU)])?.with_period(1, TAU)?;
            (chart, MetricField::diagonal(vec![Expression::one(), Expression::powi(phi, 2)]))
        }
        AnsatzKind::WarpedOverEinstein => {
            let phi2 = Expression::powi(spline_of(&sol.r, &sol.phi, "r")?, 2);
            let fiber = fiber_model(a.n - 1, a.rho)?;
            let scaled = fiber.metric.map(|e| Expression::mul(phi2.clone(), e.clone()));
            let metric = MetricField::block_sum(&MetricField::euclidean(1), &scaled);
            let mut names = vec!["r".to_string()];
            names.extend(fiber.chart.coordinates().iter().cloned());
            let mut bounds = vec![radial];
            bounds.extend(fiber.chart.bounds().iter().copied());
            (Chart::new(&names, &bounds)?, metric)
        }
    };
    ChartInstance::builder(chart, metric)
        .label(format!("{:?}_profile", a.kind).to_lowercase())
        .potential(potential)
        .m(MParam::Finite(a.m))
        .lambda(a.lambda)
        .derivative_order(2)
        .build()
}
