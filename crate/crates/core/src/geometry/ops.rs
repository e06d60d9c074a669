use serde::Serialize;

use super::instance::{ChartInstance, FieldCache};
use super::local::LocalGeometry;
use super::tensor::{TensorValue, Variance};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::jet::Jet;

use Variance::{Down, Up};

fn values(jets: &[Jet]) -> Vec<f64> {
    jets.iter().map(Jet::value).collect()
}

/// Christoffel symbols `Γ^k_ij` at `p`.
pub fn christoffel(inst: &ChartInstance, p: &[f64]) -> Result<TensorValue> {
    let geo = LocalGeometry::new(inst, p)?;
    Ok(TensorValue::new(vec![Up, Down, Down], inst.dim(), values(geo.christoffel()), p.to_vec()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curvature {
    /// `R^l_ijk`
    pub riemann: TensorValue,
    pub ricci: TensorValue,
    pub scalar: f64,
}

/// Riemann, Ricci and scalar curvature at `p`.
pub fn curvature(inst: &ChartInstance, p: &[f64]) -> Result<Curvature> {
    let geo = LocalGeometry::new(inst, p)?;
    let n = inst.dim();
    Ok(Curvature {
        riemann: TensorValue::new(vec![Up, Down, Down, Down], n, geo.riemann_values(), p.to_vec()),
        ricci: TensorValue::new(vec![Down, Down], n, values(geo.ricci()), p.to_vec()),
        scalar: geo.scalar().value(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarCalculus {
    pub grad: TensorValue,
    pub hess: TensorValue,
    pub laplacian: f64,
    pub grad_norm_sq: f64,
}

/// A scalar field compiled against an instance's chart, for repeated
/// pointwise calculus.
#[derive(Debug, Clone)]
pub struct ScalarField {
    cache: FieldCache,
}

impl ScalarField {
    pub fn new(inst: &ChartInstance, h: &Expression) -> Result<ScalarField> {
        let cache = FieldCache::build(
            std::slice::from_ref(h),
            inst.coordinates(),
            inst.params(),
            inst.space().clone(),
        )?;
        Ok(ScalarField { cache })
    }

    pub fn jet(&self, p: &[f64]) -> Result<Jet> {
        Ok(self.cache.eval(p)?.pop().expect("one field"))
    }

    pub fn calculus(&self, geo: &LocalGeometry) -> Result<ScalarCalculus> {
        let h = self.jet(geo.point())?;
        Ok(calculus_of(geo, &h))
    }
}

pub(crate) fn calculus_of(geo: &LocalGeometry, h: &Jet) -> ScalarCalculus {
    let n = geo.dim();
    let p = geo.point().to_vec();
    let dh = geo.gradient(h);
    let hess = geo.hessian(h);
    ScalarCalculus {
        grad: TensorValue::new(vec![Up], n, values(&geo.raise(&dh)), p.clone()),
        laplacian: geo.trace(&hess).value(),
        grad_norm_sq: geo.inner(&dh, &dh).value(),
        hess: TensorValue::new(vec![Down, Down], n, values(&hess), p),
    }
}

/// Gradient, Hessian, Laplacian and `|∇h|²` of `h` at `p`.
pub fn scalar_calculus(inst: &ChartInstance, h: &Expression, p: &[f64]) -> Result<ScalarCalculus> {
    let geo = LocalGeometry::new(inst, p)?;
    ScalarField::new(inst, h)?.calculus(&geo)
}

/// Divergence of a symmetric 2-tensor field given as `n×n` row-major
/// expressions.
pub fn divergence_sym2(inst: &ChartInstance, t: &[Expression], p: &[f64]) -> Result<TensorValue> {
    let n = inst.dim();
    if t.len() != n * n {
        return Err(Error::DimensionMismatch(format!("expected {} components, got {}", n * n, t.len())));
    }
    let geo = LocalGeometry::new(inst, p)?;
    let cache = FieldCache::build(t, inst.coordinates(), inst.params(), inst.space().clone())?;
    let jets = cache.eval(p)?;
    Ok(TensorValue::new(vec![Down], n, values(&geo.divergence(&jets)), p.to_vec()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalHessian {
    pub is_conformal: bool,
    /// False when `h` is numerically constant on the sample.
    pub nontrivial: bool,
    pub k_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Tests `Hess h = k g` with `k = Δh / n` at each point.
pub fn conformal_hessian_test(
    inst: &ChartInstance,
    h: &Expression,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<ConformalHessian> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let field = ScalarField::new(inst, h)?;
    let n = inst.dim();
    let mut k_values = Vec::with_capacity(points.len());
    let mut residuals = Vec::with_capacity(points.len());
    let mut scale: f64 = 0.0;
    for p in points {
        let geo = LocalGeometry::new(inst, p)?;
        let c = field.calculus(&geo)?;
        let k = c.laplacian / n as f64;
        let mut res: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                res = res.max((c.hess.get(&[i, j]) - k * geo.metric()[i * n + j].value()).abs());
            }
        }
        scale = scale.max(c.grad.max_abs()).max(c.hess.max_abs());
        k_values.push(k);
        residuals.push(res);
    }
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(ConformalHessian {
        is_conformal: max_residual <= tol,
        nontrivial: scale > 1e-10,
        k_values,
        residuals,
        max_residual,
    })
}
