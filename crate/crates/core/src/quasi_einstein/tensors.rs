use serde::{Deserialize, Serialize};

use super::report::{map_points, nan_max};
use crate::error::{Error, Result};
use crate::geometry::{ChartInstance, LocalGeometry, MParam, TensorValue, Variance};
use crate::jet::Jet;

/// Which form of the quasi-Einstein equation to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    /// `Ric + Hess f - (1/m) df⊗df - λg`
    #[serde(rename = "F_FORM")]
    F,
    /// `Ric - (m/u) Hess u - λg`
    #[serde(rename = "U_FORM")]
    U,
}

/// Geometry and potential jets at one point.
pub(crate) struct QePoint {
    pub geo: LocalGeometry,
    pub df: Vec<Jet>,
    pub hess: Vec<Jet>,
}

impl QePoint {
    pub fn new(inst: &ChartInstance, p: &[f64]) -> Result<QePoint> {
        let geo = LocalGeometry::new(inst, p)?;
        let f = inst.f_jet(p)?;
        let df = geo.gradient(&f);
        let hess = geo.hessian(&f);
        Ok(QePoint { geo, df, hess })
    }

    /// `Ric + Hess f - (1/m) df⊗df` as jets.
    pub fn bakry_emery(&self, m: MParam) -> Vec<Jet> {
        let n = self.geo.dim();
        let sp = self.geo.space();
        let inv = m.inverse();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut t = self.geo.ricci()[i * n + j].add(&self.hess[i * n + j]);
                if inv != 0.0 {
                    t.axpy(-inv, &sp.mul(&self.df[i], &self.df[j]));
                }
                out.push(t);
            }
        }
        out
    }

    /// Values of `Ric_f^m - λg`.
    pub fn f_residual(&self, inst: &ChartInstance) -> Vec<f64> {
        let g = self.geo.metric();
        self.bakry_emery(inst.m())
            .iter()
            .zip(g)
            .map(|(b, g)| b.value() - inst.lambda() * g.value())
            .collect()
    }
}

fn rank2(inst: &ChartInstance, p: &[f64], data: Vec<f64>) -> TensorValue {
    TensorValue::new(vec![Variance::Down, Variance::Down], inst.dim(), data, p.to_vec())
}

/// `Ric + Hess f - (1/m) df⊗df` at `p`; the last term is absent for
/// infinite m.
pub fn bakry_emery_ricci(inst: &ChartInstance, p: &[f64]) -> Result<TensorValue> {
    let q = QePoint::new(inst, p)?;
    let data = q.bakry_emery(inst.m()).iter().map(Jet::value).collect();
    Ok(rank2(inst, p, data))
}

/// Residual of the quasi-Einstein equation at `p` in the requested form.
pub fn qe_residual(inst: &ChartInstance, p: &[f64], form: Form) -> Result<TensorValue> {
    match form {
        Form::F => {
            let q = QePoint::new(inst, p)?;
            Ok(rank2(inst, p, q.f_residual(inst)))
        }
        Form::U => {
            let m = inst
                .m()
                .finite()
                .ok_or_else(|| Error::FormUnavailable("the u-form needs finite m".into()))?;
            let geo = LocalGeometry::new(inst, p)?;
            let u = inst.u_jet(p)?;
            let hu = geo.hessian(&u);
            let n = inst.dim();
            let data = (0..n * n)
                .map(|k| {
                    geo.ricci()[k].value() - m / u.value() * hu[k].value() - inst.lambda() * geo.metric()[k].value()
                })
                .collect();
            Ok(rank2(inst, p, data))
        }
    }
}

/// Max over points of the sup-norm F-form residual; `None` when no point
/// could be evaluated.
pub(crate) fn max_qe_residual(inst: &ChartInstance, points: &[Vec<f64>]) -> Result<Option<f64>> {
    let (res, _) = map_points(points, |p| Ok(qe_residual(inst, p, Form::F)?.max_abs()))?;
    Ok(if res.is_empty() { None } else { Some(nan_max(res)) })
}

/// Both fiber-constant formulas at a point: `(u-form, f-form)`.
///
/// u-form: `uΔu + (m-1)|∇u|² + λu²`; f-form: `e^{-2f/m}(λ - (Δf - |∇f|²)/m)`.
pub fn mu_pair(inst: &ChartInstance, p: &[f64]) -> Result<(f64, f64)> {
    let m = inst
        .m()
        .finite()
        .ok_or_else(|| Error::FormUnavailable("the fiber constant needs finite m".into()))?;
    let lambda = inst.lambda();
    let geo = LocalGeometry::new(inst, p)?;
    let u = inst.u_jet(p)?;
    let du = geo.gradient(&u);
    let u0 = u.value();
    let mu_u = u0 * geo.laplacian(&u).value() + (m - 1.0) * geo.inner(&du, &du).value() + lambda * u0 * u0;
    let f = inst.f_jet(p)?;
    let df = geo.gradient(&f);
    let mu_f = (-2.0 * f.value() / m).exp() * (lambda - (geo.laplacian(&f).value() - geo.inner(&df, &df).value()) / m);
    Ok((mu_u, mu_f))
}

/// The fiber constant μ at `p`, cross-checked between its two formulas.
pub fn mu_value(inst: &ChartInstance, p: &[f64]) -> Result<f64> {
    let (mu_u, mu_f) = mu_pair(inst, p)?;
    if (mu_u - mu_f).abs() > 1e-9 * (1.0 + mu_u.abs()) {
        return Err(Error::MuCrossCheck { u_form: mu_u, f_form: mu_f });
    }
    Ok(mu_u)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuReport {
    pub label: String,
    pub point_count: usize,
    pub skipped: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    /// Largest pointwise disagreement between the two formulas.
    pub cross_check: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Constancy of μ over a point set: passes when `max - min ≤ tol`.
pub fn mu_constancy(inst: &ChartInstance, points: &[Vec<f64>], tol: f64) -> Result<MuReport> {
    let (pairs, skipped) = map_points(points, |p| mu_pair(inst, p))?;
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let cross_check = nan_max(pairs.iter().map(|(a, b)| (a - b).abs()));
    let spread = max - min;
    Ok(MuReport {
        label: inst.label().to_string(),
        point_count: values.len(),
        skipped,
        mean,
        min,
        max,
        spread,
        cross_check,
        tolerance: tol,
        pass: spread <= tol && cross_check <= 1e-9 * (1.0 + mean.abs()),
    })
}
