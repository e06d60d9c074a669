use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::report::{map_points, ResidualReport};
use super::tensors::{max_qe_residual, QePoint};
use crate::error::{Error, Result};
use crate::geometry::{ChartInstance, MParam};
use crate::jet::Jet;

/// Default bound on the quasi-Einstein residual for the hypothesis of the
/// conditional identities to count as satisfied.
pub const HYPOTHESIS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum IdentityId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E9,
    EE1,
    RICGRAD,
    TRACE,
}

impl IdentityId {
    pub const ALL: [IdentityId; 9] = [
        IdentityId::E1,
        IdentityId::E2,
        IdentityId::E3,
        IdentityId::E4,
        IdentityId::E5,
        IdentityId::E9,
        IdentityId::EE1,
        IdentityId::RICGRAD,
        IdentityId::TRACE,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityId::E1 => "E1",
            IdentityId::E2 => "E2",
            IdentityId::E3 => "E3",
            IdentityId::E4 => "E4",
            IdentityId::E5 => "E5",
            IdentityId::E9 => "E9",
            IdentityId::EE1 => "EE1",
            IdentityId::RICGRAD => "RICGRAD",
            IdentityId::TRACE => "TRACE",
        }
    }

    /// Identities that hold for every metric and potential.
    pub fn is_universal(self) -> bool {
        matches!(self, IdentityId::E1 | IdentityId::E2 | IdentityId::E3)
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        IdentityId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| format!("unknown identity `{}`", s))
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn vals(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

/// Pointwise residual (sup norm) of identity `id`.
fn residual_at(inst: &ChartInstance, id: IdentityId, p: &[f64]) -> Result<f64> {
    let q = QePoint::new(inst, p)?;
    let geo = &q.geo;
    let n = geo.dim();
    let nf = n as f64;
    let lambda = inst.lambda();
    let inv_m = inst.m().inverse();

    let ric = geo.ricci();
    let r = geo.scalar();
    let grad_f = geo.raise(&q.df);
    let gv = vals(&grad_f);
    let dfv = vals(&q.df);
    let ric_v = vals(ric);
    let ric_grad: Vec<f64> = (0..n).map(|j| (0..n).map(|i| gv[i] * ric_v[i * n + j]).sum()).collect();
    let ric_ff: f64 = (0..n).map(|j| ric_grad[j] * gv[j]).sum();
    let grad_norm = geo.inner(&q.df, &q.df);
    let lap_f = geo.trace(&q.hess);
    let r0 = r.value();

    // pieces shared by the Bochner-type identities
    let bochner = |geo: &crate::geometry::LocalGeometry| {
        0.5 * geo.laplacian(&grad_norm).value() - geo.norm_sq_values(&vals(&q.hess)) + ric_ff
    };

    let out = match id {
        IdentityId::E1 => {
            let div_hess = vals(&geo.divergence(&q.hess));
            let d_lap = vals(&geo.gradient(&lap_f));
            let grad_lap: f64 = (0..n).map(|i| gv[i] * d_lap[i]).sum();
            let div_hess_f: f64 = (0..n).map(|i| gv[i] * div_hess[i]).sum();
            (bochner(geo) + grad_lap - 2.0 * div_hess_f).abs()
        }
        IdentityId::E2 => {
            let div_hess = vals(&geo.divergence(&q.hess));
            let d_lap = vals(&geo.gradient(&lap_f));
            let v: Vec<f64> = (0..n).map(|j| div_hess[j] - ric_grad[j] - d_lap[j]).collect();
            sup(&v)
        }
        IdentityId::E3 => {
            let dr = vals(&geo.gradient(r));
            let div_ric = vals(&geo.divergence(ric));
            let v: Vec<f64> = (0..n).map(|j| dr[j] - 2.0 * div_ric[j]).collect();
            sup(&v)
        }
        IdentityId::E4 => (bochner(geo) - 2.0 * inv_m * grad_norm.value() * lap_f.value()).abs(),
        IdentityId::E5 => {
            let dr = vals(&geo.gradient(r));
            let v: Vec<f64> = (0..n)
                .map(|j| {
                    0.5 * dr[j] - (1.0 - inv_m) * ric_grad[j] - inv_m * (r0 - (nf - 1.0) * lambda) * dfv[j]
                })
                .collect();
            sup(&v)
        }
        IdentityId::E9 => {
            let m = inst
                .m()
                .finite()
                .ok_or_else(|| Error::FormUnavailable("E9 holds for finite m only".into()))?;
            let lap_r = geo.laplacian(r).value();
            let dr = vals(&geo.gradient(r));
            let grad_f_r: f64 = (0..n).map(|i| gv[i] * dr[i]).sum();
            let traceless = geo.norm_sq_values(&ric_v) - r0 * r0 / nf;
            let v = 0.5 * lap_r - (m + 2.0) / (2.0 * m) * grad_f_r
                + (m - 1.0) / m * traceless
                + (m + nf - 1.0) / (m * nf) * (r0 - nf * lambda) * (r0 - nf * (nf - 1.0) * lambda / (m + nf - 1.0));
            v.abs()
        }
        IdentityId::EE1 => {
            let dr = vals(&geo.gradient(r));
            // ((m+1)/m)(R - 2λ/(m+1)) = (1 + 1/m) R - 2λ/m
            let coef = (1.0 + inv_m) * r0 - 2.0 * lambda * inv_m;
            let v: Vec<f64> = (0..n).map(|j| dr[j] - coef * dfv[j]).collect();
            sup(&v)
        }
        IdentityId::RICGRAD => {
            let c = match inst.m() {
                MParam::Finite(m) => 1.0 / (m - 1.0),
                MParam::Infinite => 0.0,
            };
            let v: Vec<f64> = (0..n).map(|j| ric_grad[j] + c * (r0 - (nf - 1.0) * lambda) * dfv[j]).collect();
            sup(&v)
        }
        IdentityId::TRACE => (r0 + lap_f.value() - inv_m * grad_norm.value() - lambda * nf).abs(),
    };
    Ok(out)
}

fn preconditions(inst: &ChartInstance, id: IdentityId) -> Result<()> {
    match id {
        IdentityId::EE1 if inst.dim() != 2 => Err(Error::DimensionMismatch(format!(
            "EE1 is a surface identity, instance has dimension {}",
            inst.dim()
        ))),
        IdentityId::RICGRAD if inst.m() == MParam::Finite(1.0) => Err(Error::MDegenerate),
        IdentityId::E9 if inst.m().is_infinite() => {
            Err(Error::FormUnavailable("E9 holds for finite m only".into()))
        }
        _ if inst.derivative_order() < 4 => Err(Error::InvalidInstance(
            "identity checks need fourth derivatives of the metric".into(),
        )),
        _ => Ok(()),
    }
}

/// Check identity `id` on a point set with the default hypothesis gate.
pub fn check_identity(inst: &ChartInstance, id: IdentityId, points: &[Vec<f64>], tol: f64) -> Result<ResidualReport> {
    check_identity_gated(inst, id, points, tol, HYPOTHESIS_TOL)
}

/// As [`check_identity`], with an explicit bound on the quasi-Einstein
/// residual used for the hypothesis flag of conditional identities.
pub fn check_identity_gated(
    inst: &ChartInstance,
    id: IdentityId,
    points: &[Vec<f64>],
    tol: f64,
    hypothesis_tol: f64,
) -> Result<ResidualReport> {
    preconditions(inst, id)?;
    let (res, skipped) = map_points(points, |p| residual_at(inst, id, p))?;
    let hypothesis_ok = if id.is_universal() {
        true
    } else {
        max_qe_residual(inst, points)?.is_some_and(|r| r <= hypothesis_tol)
    };
    Ok(ResidualReport::new(id.name(), inst.label(), res, skipped, tol).with_hypothesis(hypothesis_ok))
}
