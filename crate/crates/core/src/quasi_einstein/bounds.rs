use rayon::prelude::*;
use serde::Serialize;

use super::identities::HYPOTHESIS_TOL;
use super::report::map_points;
use super::tensors::{max_qe_residual, QePoint};
use crate::error::{Error, Result};
use crate::geometry::{ChartInstance, LocalGeometry, MParam};
use crate::jet::Jet;

/// Slack allowed when comparing scalar curvature against a threshold.
pub const BOUND_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarBoundReport {
    pub label: String,
    pub point_count: usize,
    pub skipped: usize,
    pub min_r: f64,
    pub max_r: f64,
    /// `nλ`
    pub lower_threshold: f64,
    /// `n(n-1)λ/(m+n-1)`, which is 0 for infinite m.
    pub bound_threshold: f64,
    /// `(n-1)λ`
    pub m1_value: f64,
    /// λ > 0: `R ≥ n(n-1)λ/(m+n-1)`.
    pub positive_lambda_ok: Option<bool>,
    /// λ < 0: `nλ ≤ R ≤ n(n-1)λ/(m+n-1)`.
    pub negative_lambda_ok: Option<bool>,
    /// m = 1: `R = (n-1)λ`.
    pub m1_ok: Option<bool>,
    /// Largest `|R - (n-1)λ|` on the sample.
    pub m1_deviation: f64,
    /// Fraction of points where `Ric(∇f,∇f) ≤ (2/m)|∇f|²Δf` (finite m).
    pub max_principle_fraction: Option<f64>,
    pub hypothesis_ok: bool,
    pub tolerance: f64,
    pub pass: bool,
}

/// Scalar curvature against the thresholds for quasi-Einstein metrics.
pub fn scalar_bound_report(inst: &ChartInstance, points: &[Vec<f64>]) -> Result<ScalarBoundReport> {
    let n = inst.dim() as f64;
    let lambda = inst.lambda();
    let inv_m = inst.m().inverse();
    let (rows, skipped) = map_points(points, |p| {
        let q = QePoint::new(inst, p)?;
        let geo = &q.geo;
        let r = geo.scalar().value();
        let grad = geo.raise(&q.df);
        let nn = geo.dim();
        let mut ric_ff = 0.0;
        for i in 0..nn {
            for j in 0..nn {
                ric_ff += geo.ricci()[i * nn + j].value() * grad[i].value() * grad[j].value();
            }
        }
        let rhs = 2.0 * inv_m * geo.inner(&q.df, &q.df).value() * geo.trace(&q.hess).value();
        Ok((r, ric_ff <= rhs + 1e-12))
    })?;
    if rows.is_empty() {
        return Err(Error::EmptySample);
    }
    let min_r = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let max_r = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let lower_threshold = n * lambda;
    let bound_threshold = match inst.m() {
        MParam::Finite(m) => n * (n - 1.0) * lambda / (m + n - 1.0),
        MParam::Infinite => 0.0,
    };
    let m1_value = (n - 1.0) * lambda;
    let m1_deviation = rows.iter().map(|r| (r.0 - m1_value).abs()).fold(0.0, f64::max);
    let m_ge_1 = inst.m().finite().is_none_or(|m| m >= 1.0);
    let positive_lambda_ok = (lambda > 0.0 && m_ge_1).then(|| min_r >= bound_threshold - BOUND_TOL);
    let negative_lambda_ok = (lambda < 0.0 && m_ge_1)
        .then(|| min_r >= lower_threshold - BOUND_TOL && max_r <= bound_threshold + BOUND_TOL);
    let m1_ok = (inst.m() == MParam::Finite(1.0)).then_some(m1_deviation <= BOUND_TOL);
    let max_principle_fraction = inst
        .m()
        .finite()
        .map(|_| rows.iter().filter(|r| r.1).count() as f64 / rows.len() as f64);
    let hypothesis_ok = max_qe_residual(inst, points)?.is_some_and(|r| r <= HYPOTHESIS_TOL);
    let pass = [positive_lambda_ok, negative_lambda_ok, m1_ok].iter().all(|f| f.unwrap_or(true));
    Ok(ScalarBoundReport {
        label: inst.label().to_string(),
        point_count: rows.len(),
        skipped,
        min_r,
        max_r,
        lower_threshold,
        bound_threshold,
        m1_value,
        positive_lambda_ok,
        negative_lambda_ok,
        m1_ok,
        m1_deviation,
        max_principle_fraction,
        hypothesis_ok,
        tolerance: BOUND_TOL,
        pass,
    })
}

/// Tensor-product quadrature grid for a closed surface chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureGrid {
    /// Nodes per coordinate.
    pub counts: [usize; 2],
    /// Tolerance for the conformal-Hessian precondition.
    pub conformal_tol: f64,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid { counts: [200, 64], conformal_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KazdanWarner {
    pub integral: f64,
    pub area: f64,
    /// Whether `Hess u = k g` held at every node.
    pub conformal_ok: bool,
    pub max_conformal_residual: f64,
}

/// `∫ ⟨∇R, ∇u⟩ dV` over a closed surface of revolution, with `u` the
/// instance's potential as given.
///
/// The periodic coordinate uses the rectangle rule over one period; the
/// other uses the midpoint rule over the box, so nodes avoid the poles.
pub fn kazdan_warner_integral(inst: &ChartInstance, grid: &QuadratureGrid) -> Result<KazdanWarner> {
    if inst.dim() != 2 {
        return Err(Error::NotClosedSurface(format!("dimension {} is not 2", inst.dim())));
    }
    let periods = inst.chart().periods();
    let periodic: Vec<usize> = (0..2).filter(|&i| periods[i].is_some()).collect();
    if periodic.len() != 1 {
        return Err(Error::NotClosedSurface("exactly one coordinate must be periodic".into()));
    }
    if grid.counts.contains(&0) {
        return Err(Error::EmptySample);
    }
    let pi = periodic[0];
    let ri = 1 - pi;
    let period = periods[pi].expect("periodic");
    let (rlo, rhi) = inst.chart().bounds()[ri];
    let plo = inst.chart().bounds()[pi].0;
    let (nr, np) = (grid.counts[ri], grid.counts[pi]);
    let hr = (rhi - rlo) / nr as f64;
    let hp = period / np as f64;

    let nodes: Vec<Vec<f64>> = (0..nr)
        .flat_map(|a| {
            (0..np).map(move |b| {
                let mut p = vec![0.0; 2];
                p[ri] = rlo + (a as f64 + 0.5) * hr;
                p[pi] = plo + b as f64 * hp;
                p
            })
        })
        .collect();
    let rows: Vec<Result<(f64, f64, f64)>> = nodes
        .par_iter()
        .map(|p| {
            let geo = LocalGeometry::new(inst, p)?;
            let u = inst
                .potential_jet(p)?
                .ok_or_else(|| Error::NotClosedSurface("instance has no potential".into()))?;
            let du = geo.gradient(&u);
            let dr = geo.gradient(geo.scalar());
            let g: Vec<f64> = geo.metric().iter().map(Jet::value).collect();
            let vol = (g[0] * g[3] - g[1] * g[2]).sqrt();
            let integrand = geo.inner(&dr, &du).value() * vol;
            let hess = geo.hessian(&u);
            let k = geo.trace(&hess).value() / 2.0;
            let conf = (0..4).map(|c| (hess[c].value() - k * g[c]).abs()).fold(0.0, f64::max);
            Ok((integrand, vol, conf))
        })
        .collect();
    let (mut integral, mut area, mut worst) = (0.0, 0.0, 0.0f64);
    for r in rows {
        let (i, v, c) = r?;
        integral += i * hr * hp;
        area += v * hr * hp;
        worst = worst.max(c);
    }
    Ok(KazdanWarner {
        integral,
        area,
        conformal_ok: worst <= grid.conformal_tol,
        max_conformal_residual: worst,
    })
}
