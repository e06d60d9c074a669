use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geometry::{ChartInstance, FieldCache, LocalGeometry};
use crate::jet::Jet;
use crate::quasi_einstein::{map_points, ResidualReport};

/// Endomorphism field `J^i_j`, stored row-major (`entries[i*n + j]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructureField {
    n: usize,
    entries: Vec<Expression>,
}

impl ComplexStructureField {
    pub fn new(n: usize, entries: Vec<Expression>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "complex structure needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(ComplexStructureField { n, entries })
    }

    /// The rotation `∂x ↦ ∂y` on flat `ℝ²`: `[[0, -1], [1, 0]]`.
    pub fn standard(n: usize) -> Result<Self> {
        if n % 2 == 1 {
            return Err(Error::OddDimension(n));
        }
        let mut e = vec![Expression::zero(); n * n];
        for k in 0..n / 2 {
            let (x, y) = (2 * k, 2 * k + 1);
            e[x * n + y] = Expression::constant(-1.0);
            e[y * n + x] = Expression::one();
        }
        Ok(ComplexStructureField { n, entries: e })
    }

    /// Rotation for a surface metric `ds² + h(s,t)² dt²`:
    /// `J ∂s = h⁻¹ ∂t`, `J ∂t = -h ∂s`.
    pub fn surface_rotation(h: Expression) -> Self {
        let entries = vec![
            Expression::zero(),
            Expression::neg(h.clone()),
            Expression::one() / h,
            Expression::zero(),
        ];
        ComplexStructureField { n: 2, entries }
    }

    pub fn block_diagonal(a: &ComplexStructureField, b: &ComplexStructureField) -> Self {
        let n = a.n + b.n;
        let mut e = vec![Expression::zero(); n * n];
        for i in 0..a.n {
            for j in 0..a.n {
                e[i * n + j] = a.entries[i * a.n + j].clone();
            }
        }
        for i in 0..b.n {
            for j in 0..b.n {
                e[(a.n + i) * n + a.n + j] = b.entries[i * b.n + j].clone();
            }
        }
        ComplexStructureField { n, entries: e }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Expression] {
        &self.entries
    }

    pub fn scaled(&self, c: f64) -> Self {
        let entries = self.entries.iter().map(|e| Expression::constant(c) * e.clone()).collect();
        ComplexStructureField { n: self.n, entries }
    }
}

/// A base instance with finite m together with a complex structure.
#[derive(Debug, Clone)]
pub struct KahlerInstance {
    base: ChartInstance,
    j: ComplexStructureField,
    cache: FieldCache,
}

impl KahlerInstance {
    pub fn new(base: ChartInstance, j: ComplexStructureField) -> Result<Self> {
        let n = base.dim();
        if n % 2 == 1 {
            return Err(Error::OddDimension(n));
        }
        if j.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "complex structure has dimension {}, instance {}",
                j.dim(),
                n
            )));
        }
        if base.m().is_infinite() {
            return Err(Error::FormUnavailable("Kähler checks use the u-form, which needs finite m".into()));
        }
        let cache = FieldCache::build(&j.entries, base.coordinates(), base.params(), base.space().clone())?;
        Ok(KahlerInstance { base, j, cache })
    }

    pub fn base(&self) -> &ChartInstance {
        &self.base
    }

    pub fn structure(&self) -> &ComplexStructureField {
        &self.j
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn label(&self) -> &str {
        self.base.label()
    }

    /// Same structure over a rebuilt base (e.g. a lower derivative order).
    pub(crate) fn with_base(&self, base: ChartInstance) -> Result<Self> {
        KahlerInstance::new(base, self.j.clone())
    }

    pub(crate) fn j_jets(&self, p: &[f64]) -> Result<Vec<Jet>> {
        self.cache.eval(p)
    }
}

/// Pointwise values shared by the checks.
pub(crate) struct KPoint {
    pub n: usize,
    pub geo: LocalGeometry,
    /// `J^i_j`
    pub j: Vec<f64>,
    /// `∂_k J^i_j` at `(k*n + i)*n + j`
    pub dj: Vec<f64>,
    pub g: Vec<f64>,
    /// `∂_k g_ij` at `(k*n + i)*n + j`
    pub dg: Vec<f64>,
    pub ginv: Vec<f64>,
    pub du: Vec<f64>,
    /// `Hess u_ij`
    pub hess: Vec<f64>,
}

impl KPoint {
    pub fn new(inst: &KahlerInstance, p: &[f64]) -> Result<KPoint> {
        let geo = LocalGeometry::new(&inst.base, p)?;
        let n = inst.dim();
        let sp = geo.space().clone();
        let jj = inst.j_jets(p)?;
        let partials = |jets: &[Jet]| -> Vec<f64> {
            let mut out = vec![0.0; n * n * n];
            for k in 0..n {
                for (ij, jet) in jets.iter().enumerate() {
                    out[k * n * n + ij] = sp.diff(jet, k).value();
                }
            }
            out
        };
        let u = inst.base.u_jet(p)?;
        let du = geo.gradient(&u).iter().map(Jet::value).collect();
        let hess = geo.hessian(&u).iter().map(Jet::value).collect();
        Ok(KPoint {
            n,
            j: jj.iter().map(Jet::value).collect(),
            dj: partials(&jj),
            g: geo.metric().iter().map(Jet::value).collect(),
            dg: partials(geo.metric()),
            ginv: geo.inverse_metric().iter().map(Jet::value).collect(),
            du,
            hess,
            geo,
        })
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.geo.christoffel_jet(k, i, j).value()
    }

    /// `φ_ij = J^k_i Hess u_kj`
    pub fn phi(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| self.j[k * n + i] * self.hess[k * n + j]).sum();
            }
        }
        out
    }

    pub fn raise(&self, w: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|i| (0..n).map(|k| self.ginv[i * n + k] * w[k]).sum()).collect()
    }

    pub fn apply_j(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|i| (0..n).map(|k| self.j[i * n + k] * v[k]).sum()).collect()
    }

    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n;
        (0..n).map(|i| (0..n).map(|k| self.g[i * n + k] * a[i] * b[k]).sum::<f64>()).sum()
    }

    /// Residuals of `J² = -I`, `g(J·,J·) = g`, `∇J = 0` and `dω = 0`.
    pub fn kahler_residuals(&self) -> [f64; 4] {
        let n = self.n;
        let (j, g) = (&self.j, &self.g);
        let mut sq: f64 = 0.0;
        let mut compat: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let jj: f64 = (0..n).map(|k| j[a * n + k] * j[k * n + b]).sum();
                sq = sq.max((jj + if a == b { 1.0 } else { 0.0 }).abs());
                let gjj: f64 = (0..n)
                    .flat_map(|c| (0..n).map(move |d| (c, d)))
                    .map(|(c, d)| g[c * n + d] * j[c * n + a] * j[d * n + b])
                    .sum();
                compat = compat.max((gjj - g[a * n + b]).abs());
            }
        }
        let mut nabla: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for jj in 0..n {
                    let mut v = self.dj[(k * n + i) * n + jj];
                    for l in 0..n {
                        v += self.gamma(i, k, l) * j[l * n + jj] - self.gamma(l, k, jj) * j[i * n + l];
                    }
                    nabla = nabla.max(v.abs());
                }
            }
        }
        // ∂_a ω_bc with ω_bc = g_bk J^k_c
        let d_omega = |a: usize, b: usize, c: usize| -> f64 {
            (0..n)
                .map(|k| self.dg[(a * n + b) * n + k] * j[k * n + c] + g[b * n + k] * self.dj[(a * n + k) * n + c])
                .sum()
        };
        let mut closed: f64 = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    closed = closed.max((d_omega(a, b, c) + d_omega(b, c, a) + d_omega(c, a, b)).abs());
                }
            }
        }
        [sq, compat, nabla, closed]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KahlerReport {
    pub label: String,
    /// `J² + I`
    pub j_squared: ResidualReport,
    /// `g(J·, J·) - g`
    pub compatibility: ResidualReport,
    /// `∇J`
    pub nabla_j: ResidualReport,
    /// `dω`
    pub d_omega: ResidualReport,
    pub pass: bool,
}

/// The defining conditions of a Kähler structure over a point set.
pub fn kahler_checks(inst: &KahlerInstance, points: &[Vec<f64>], tol: f64) -> Result<KahlerReport> {
    let (rows, skipped) = map_points(points, |p| Ok(KPoint::new(inst, p)?.kahler_residuals()))?;
    let label = inst.label();
    let col = |k: usize, name: &str| ResidualReport::new(name, label, rows.iter().map(|r| r[k]).collect(), skipped, tol);
    let j_squared = col(0, "j_squared");
    let compatibility = col(1, "compatibility");
    let nabla_j = col(2, "nabla_j");
    let d_omega = col(3, "d_omega");
    let pass = j_squared.pass && compatibility.pass && nabla_j.pass && d_omega.pass;
    Ok(KahlerReport { label: label.to_string(), j_squared, compatibility, nabla_j, d_omega, pass })
}

/// Whether the structure passes [`kahler_checks`] at `tol`; used as a
/// precondition flag.
pub(crate) fn kahler_certified(inst: &KahlerInstance, points: &[Vec<f64>], tol: f64) -> Result<bool> {
    let rows: Vec<Result<[f64; 4]>> =
        points.par_iter().map(|p| Ok(KPoint::new(inst, p)?.kahler_residuals())).collect();
    let mut any = false;
    for r in rows {
        match r {
            Ok(v) => {
                any = true;
                if v.iter().any(|x| !(*x <= tol)) {
                    return Ok(false);
                }
            }
            Err(e) if e.is_pointwise() => {}
            Err(e) => return Err(e),
        }
    }
    Ok(any)
}
