//! Warped products `M ×_u F` over quasi-Einstein bases with space-form
//! fibers, and the Einstein test for the total space.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geometry::{curvature, Chart, ChartInstance, LocalGeometry, MParam, MetricField, TensorValue, Variance};
use crate::quasi_einstein::{map_points, max_qe_residual, mu_constancy, ResidualReport, HYPOTHESIS_TOL};
use crate::sampling::{sample_box, DEFAULT_SEED};

/// Spread of the sampled fiber constant allowed for a lift.
pub const MU_SPREAD_TOL: f64 = 1e-8;
/// Fiber constants this small are treated as zero.
const MU_ZERO_TOL: f64 = 1e-10;
const LIFT_SAMPLE: usize = 100;

/// An Einstein space form of dimension `dim` with `Ric = mu g`.
#[derive(Debug, Clone)]
pub struct FiberModel {
    pub dim: usize,
    pub mu: f64,
    pub chart: Chart,
    pub metric: MetricField,
}

fn fiber_names(dim: usize, avoid: &[String]) -> Vec<String> {
    let mut suffix = String::new();
    loop {
        let names: Vec<String> = (1..=dim).map(|i| format!("y{}{}", i, suffix)).collect();
        if names.iter().all(|n| !avoid.contains(n)) {
            return names;
        }
        suffix.push('f');
    }
}

fn build_fiber(dim: usize, mu: f64, names: Vec<String>) -> Result<FiberModel> {
    if dim == 0 {
        return Err(Error::InvalidFiber("fiber dimension must be at least 1".into()));
    }
    if dim == 1 && mu.abs() > MU_ZERO_TOL {
        return Err(Error::InvalidFiber(format!("a 1-dimensional fiber has mu = 0, got {}", mu)));
    }
    let y: Vec<Expression> = names.iter().map(|n| Expression::coord(n)).collect();
    let (metric, half) = if dim == 1 || mu.abs() <= MU_ZERO_TOL {
        (MetricField::euclidean(dim), 1.0)
    } else if mu > 0.0 {
        // stereographic sphere of radius ρ: 4ρ²/(1+|y|²)² δ
        let rho2 = (dim as f64 - 1.0) / mu;
        let norm = y.iter().fold(Expression::one(), |acc, yi| acc + Expression::powi(yi.clone(), 2));
        let conf = Expression::constant(4.0 * rho2) / Expression::powi(norm, 2);
        (MetricField::diagonal(vec![conf; dim]), 0.8)
    } else {
        // horospherical hyperbolic chart: dy1² + e^{2b y1} Σ dyi²
        let b = (-mu / (dim as f64 - 1.0)).sqrt();
        let warp = Expression::exp(Expression::constant(2.0 * b) * y[0].clone());
        let mut diag = vec![Expression::one()];
        diag.extend((1..dim).map(|_| warp.clone()));
        (MetricField::diagonal(diag), 1.0)
    };
    let chart = Chart::new(&names, &vec![(-half, half); dim])?;
    let fiber = FiberModel { dim, mu: if dim == 1 { 0.0 } else { mu }, chart, metric };
    fiber.verify()?;
    Ok(fiber)
}

impl FiberModel {
    fn instance(&self) -> Result<ChartInstance> {
        ChartInstance::builder(self.chart.clone(), self.metric.clone())
            .derivative_order(2)
            .lambda(self.mu)
            .build()
    }

    /// `Ric = μ g` at a handful of seeded points, to 1e-10.
    fn verify(&self) -> Result<()> {
        let inst = self.instance()?;
        for p in sample_box(self.chart.bounds(), 8, DEFAULT_SEED) {
            let c = curvature(&inst, &p)?;
            let geo = LocalGeometry::new(&inst, &p)?;
            let worst = c
                .ricci
                .data
                .iter()
                .zip(geo.metric())
                .map(|(r, g)| (r - self.mu * g.value()).abs())
                .fold(0.0, f64::max);
            if worst > 1e-10 {
                return Err(Error::InvalidFiber(format!("fiber is not Einstein: residual {:e}", worst)));
            }
        }
        Ok(())
    }
}

/// Space form of dimension `m_f` with Einstein constant `mu`.
pub fn fiber_model(m_f: usize, mu: f64) -> Result<FiberModel> {
    build_fiber(m_f, mu, fiber_names(m_f, &[]))
}

#[derive(Debug, Clone)]
pub struct WarpedInstance {
    pub base: ChartInstance,
    pub fiber: FiberModel,
    pub total: ChartInstance,
    /// Whether the base satisfied the quasi-Einstein equation on the sample.
    pub base_qe_ok: bool,
    pub mu_spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftSummary {
    pub label: String,
    pub fiber_dim: usize,
    pub mu: f64,
    pub mu_spread: f64,
    pub base_qe_ok: bool,
    pub total_dim: usize,
}

impl WarpedInstance {
    pub fn summary(&self) -> LiftSummary {
        LiftSummary {
            label: self.total.label().to_string(),
            fiber_dim: self.fiber.dim,
            mu: self.fiber.mu,
            mu_spread: self.mu_spread,
            base_qe_ok: self.base_qe_ok,
            total_dim: self.total.dim(),
        }
    }
}

fn integer_m(base: &ChartInstance) -> Result<usize> {
    match base.m() {
        MParam::Finite(m) if m >= 1.0 && m.fract() == 0.0 => Ok(m as usize),
        MParam::Finite(m) => Err(Error::NonIntegerM(m)),
        MParam::Infinite => Err(Error::NonIntegerM(f64::INFINITY)),
    }
}

/// Lift a quasi-Einstein base with integer m to `g_M + u² g_F`, with the
/// fiber constant estimated on 100 seeded base points.
pub fn lift_warped_product(base: &ChartInstance) -> Result<WarpedInstance> {
    let points = sample_box(base.chart().bounds(), LIFT_SAMPLE, DEFAULT_SEED);
    lift_warped_product_on(base, &points)
}

/// As [`lift_warped_product`] on a caller-supplied sample.
pub fn lift_warped_product_on(base: &ChartInstance, points: &[Vec<f64>]) -> Result<WarpedInstance> {
    integer_m(base)?;
    let mu = mu_constancy(base, points, MU_SPREAD_TOL)?;
    if mu.spread > MU_SPREAD_TOL {
        return Err(Error::MuNotConstant { spread: mu.spread, tol: MU_SPREAD_TOL });
    }
    let mut lifted = lift_with_mu(base, mu.mean)?;
    lifted.mu_spread = mu.spread;
    lifted.base_qe_ok = max_qe_residual(base, points)?.is_some_and(|r| r <= HYPOTHESIS_TOL);
    Ok(lifted)
}

/// Build the warped product with a prescribed fiber constant, skipping the
/// constancy test. Used to probe the converse direction on bases that are
/// not quasi-Einstein.
pub fn lift_with_mu(base: &ChartInstance, mu: f64) -> Result<WarpedInstance> {
    let m = integer_m(base)?;
    let mu = if mu.abs() <= MU_ZERO_TOL { 0.0 } else { mu };
    let names = fiber_names(m, base.coordinates());
    let fiber = build_fiber(m, mu, names)?;
    let u = base
        .u_expression()
        .ok_or_else(|| Error::FormUnavailable("the warping function needs finite m".into()))?;
    let u2 = Expression::powi(u, 2);
    let scaled = fiber.metric.map(|e| Expression::mul(u2.clone(), e.clone()));
    let metric = MetricField::block_sum(base.metric(), &scaled);
    let mut coords: Vec<String> = base.coordinates().to_vec();
    coords.extend(fiber.chart.coordinates().iter().cloned());
    let mut bounds = base.chart().bounds().to_vec();
    bounds.extend(fiber.chart.bounds().iter().copied());
    let chart = Chart::new(&coords, &bounds)?;
    let total = ChartInstance::builder(chart, metric)
        .label(format!("{}_lift", base.label()))
        .params(base.params().clone())
        .lambda(base.lambda())
        .derivative_order(2)
        .build()?;
    Ok(WarpedInstance { base: base.clone(), fiber, total, base_qe_ok: false, mu_spread: 0.0 })
}

/// `Ric - λ g` at `p`.
pub fn einstein_residual(inst: &ChartInstance, lambda: f64, p: &[f64]) -> Result<TensorValue> {
    let geo = LocalGeometry::new(inst, p)?;
    let data = geo.ricci().iter().zip(geo.metric()).map(|(r, g)| r.value() - lambda * g.value()).collect();
    Ok(TensorValue::new(vec![Variance::Down, Variance::Down], inst.dim(), data, p.to_vec()))
}

/// Einstein residual over a point set.
pub fn einstein_check(inst: &ChartInstance, lambda: f64, points: &[Vec<f64>], tol: f64) -> Result<ResidualReport> {
    let (res, skipped) = map_points(points, |p| Ok(einstein_residual(inst, lambda, p)?.max_abs()))?;
    Ok(ResidualReport::new("einstein", inst.label(), res, skipped, tol))
}

/// Scalar curvature over a point set against `expected`.
pub fn scalar_curvature_check(
    inst: &ChartInstance,
    expected: f64,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<ResidualReport> {
    let (res, skipped) = map_points(points, |p| {
        let geo = LocalGeometry::new(inst, p)?;
        Ok((geo.scalar().value() - expected).abs())
    })?;
    Ok(ResidualReport::new("scalar_curvature", inst.label(), res, skipped, tol))
}
