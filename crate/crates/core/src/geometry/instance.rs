use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::chart::{Chart, MetricField};
use crate::error::{Error, Result};
use crate::expr::{Differentiator, Expression, Program};
use crate::jet::{Jet, JetSpace};

/// Highest derivative order cached per instance. Fourth derivatives of the
/// metric are what the Laplacian of scalar curvature needs.
pub const DEFAULT_DERIVATIVE_ORDER: usize = 4;

/// The dimension-like parameter `m`: a positive real or infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MParam {
    Finite(f64),
    Infinite,
}

impl MParam {
    pub fn finite(self) -> Option<f64> {
        match self {
            MParam::Finite(m) => Some(m),
            MParam::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, MParam::Infinite)
    }

    /// `1/m`, zero at infinity.
    pub fn inverse(self) -> f64 {
        match self {
            MParam::Finite(m) => 1.0 / m,
            MParam::Infinite => 0.0,
        }
    }
}

impl fmt::Display for MParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MParam::Finite(m) => write!(f, "{}", m),
            MParam::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for MParam {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MParam::Finite(m) => s.serialize_f64(*m),
            MParam::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for MParam {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(m) if m.is_finite() && m > 0.0 => Ok(MParam::Finite(m)),
            Raw::Num(m) => Err(serde::de::Error::custom(format!("m must be positive, got {}", m))),
            Raw::Str(s) if s == "inf" => Ok(MParam::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("m must be a number or \"inf\", got \"{}\"", s))),
        }
    }
}

/// Potential function, given either as `f` or as `u = exp(-f/m)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    None,
    F(Expression),
    U(Expression),
}

/// All partial derivatives up to a fixed order of a list of fields,
/// compiled into one program.
#[derive(Debug, Clone)]
pub struct FieldCache {
    space: Arc<JetSpace>,
    fields: usize,
    program: Program,
}

impl FieldCache {
    pub fn build(
        exprs: &[Expression],
        coordinates: &[String],
        params: &BTreeMap<String, f64>,
        space: Arc<JetSpace>,
    ) -> Result<FieldCache> {
        let mut diffs: Vec<Differentiator> = coordinates.iter().map(|c| Differentiator::new(c)).collect();
        let monomials = space.monomials();
        let mut all = Vec::with_capacity(exprs.len() * monomials.len());
        for e in exprs {
            let mut partials: Vec<Expression> = Vec::with_capacity(monomials.len());
            partials.push(e.clone());
            for m in &monomials[1..] {
                let last = m.iter().rposition(|&k| k > 0).expect("nonzero monomial");
                let mut parent = m.clone();
                parent[last] -= 1;
                let pi = space.monomial_index(&parent).expect("parent monomial");
                let d = diffs[last].run(&partials[pi]);
                partials.push(d);
            }
            all.extend(partials);
        }
        let program = Program::compile(&all, coordinates, &|name| params.get(name).copied())?;
        Ok(FieldCache { space, fields: exprs.len(), program })
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn fields(&self) -> usize {
        self.fields
    }

    /// Jets of every field about `p`.
    pub fn eval(&self, p: &[f64]) -> Result<Vec<Jet>> {
        let vals = self.program.eval(p)?;
        let len = self.space.len();
        let order = self.space.order();
        Ok(vals.chunks(len).map(|c| self.space.from_partials(c, order)).collect())
    }
}

#[derive(Debug)]
struct Caches {
    metric: FieldCache,
    potential: Option<FieldCache>,
}

/// Chart, metric, potential and constants: the unit of verification.
///
/// Immutable once built; the symbolic derivative cache is built eagerly.
#[derive(Debug, Clone)]
pub struct ChartInstance {
    label: String,
    chart: Chart,
    metric: MetricField,
    potential: Potential,
    m: MParam,
    lambda: f64,
    params: BTreeMap<String, f64>,
    order: usize,
    caches: Arc<Caches>,
}

/// Builder for [`ChartInstance`].
#[derive(Debug, Clone)]
pub struct InstanceBuilder {
    label: String,
    chart: Chart,
    metric: MetricField,
    potential: Potential,
    m: MParam,
    lambda: f64,
    params: BTreeMap<String, f64>,
    order: usize,
}

impl InstanceBuilder {
    pub fn label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn potential(mut self, potential: Potential) -> Self {
        self.potential = potential;
        self
    }

    pub fn m(mut self, m: MParam) -> Self {
        self.m = m;
        self
    }

    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn param(mut self, name: impl Into<String>, value: f64) -> Self {
        self.params.insert(name.into(), value);
        self
    }

    pub fn params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params.extend(params);
        self
    }

    pub fn derivative_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn build(self) -> Result<ChartInstance> {
        let n = self.chart.dim();
        if self.metric.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "chart has dimension {} but metric has dimension {}",
                n,
                self.metric.dim()
            )));
        }
        if let MParam::Finite(m) = self.m {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::InvalidInstance(format!("m must be positive, got {}", m)));
            }
        }
        if matches!(self.potential, Potential::U(_)) && self.m.is_infinite() {
            return Err(Error::InvalidInstance("a u-form potential needs finite m".into()));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidInstance("lambda must be finite".into()));
        }
        let space = JetSpace::new(n, self.order);
        let coords = self.chart.coordinates();
        let metric = FieldCache::build(self.metric.upper(), coords, &self.params, space.clone())?;
        let potential = match &self.potential {
            Potential::None => None,
            Potential::F(e) | Potential::U(e) => {
                Some(FieldCache::build(std::slice::from_ref(e), coords, &self.params, space)?)
            }
        };
        Ok(ChartInstance {
            label: self.label,
            chart: self.chart,
            metric: self.metric,
            potential: self.potential,
            m: self.m,
            lambda: self.lambda,
            params: self.params,
            order: self.order,
            caches: Arc::new(Caches { metric, potential }),
        })
    }
}

impl ChartInstance {
    pub fn builder(chart: Chart, metric: MetricField) -> InstanceBuilder {
        InstanceBuilder {
            label: String::new(),
            chart,
            metric,
            potential: Potential::None,
            m: MParam::Infinite,
            lambda: 0.0,
            params: BTreeMap::new(),
            order: DEFAULT_DERIVATIVE_ORDER,
        }
    }

    /// Builder pre-filled with this instance's data, for derived instances.
    pub fn to_builder(&self) -> InstanceBuilder {
        InstanceBuilder {
            label: self.label.clone(),
            chart: self.chart.clone(),
            metric: self.metric.clone(),
            potential: self.potential.clone(),
            m: self.m,
            lambda: self.lambda,
            params: self.params.clone(),
            order: self.order,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn coordinates(&self) -> &[String] {
        self.chart.coordinates()
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn m(&self) -> MParam {
        self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn derivative_order(&self) -> usize {
        self.order
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        self.caches.metric.space()
    }

    /// `f` as an expression (`-m log u` for u-form potentials).
    pub fn f_expression(&self) -> Option<Expression> {
        match (&self.potential, self.m) {
            (Potential::F(f), _) => Some(f.clone()),
            (Potential::U(u), MParam::Finite(m)) => {
                Some(Expression::mul(Expression::constant(-m), Expression::log(u.clone())))
            }
            _ => None,
        }
    }

    /// `u` as an expression (`exp(-f/m)` for f-form potentials, finite m).
    pub fn u_expression(&self) -> Option<Expression> {
        match (&self.potential, self.m) {
            (Potential::U(u), _) => Some(u.clone()),
            (Potential::F(f), MParam::Finite(m)) => {
                Some(Expression::exp(Expression::mul(Expression::constant(-1.0 / m), f.clone())))
            }
            (Potential::None, MParam::Finite(_)) => Some(Expression::one()),
            _ => None,
        }
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, chart has {}",
                p.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Full `n×n` metric jets about `p`, row-major.
    pub fn metric_jets(&self, p: &[f64]) -> Result<Vec<Jet>> {
        self.check_point(p)?;
        let upper = self.caches.metric.eval(p)?;
        let n = self.dim();
        let mut full = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                full.push(upper[super::chart::upper_index(n, i, j)].clone());
            }
        }
        Ok(full)
    }

    fn raw_potential(&self, p: &[f64]) -> Result<Option<Jet>> {
        self.check_point(p)?;
        match &self.caches.potential {
            None => Ok(None),
            Some(c) => Ok(c.eval(p)?.pop()),
        }
    }

    /// Jet of the potential exactly as given (`f` or `u`), without
    /// conversion or positivity checks.
    pub fn potential_jet(&self, p: &[f64]) -> Result<Option<Jet>> {
        self.raw_potential(p)
    }

    fn positive_u(&self, p: &[f64], u: Jet) -> Result<Jet> {
        if u.value() > 0.0 {
            Ok(u)
        } else {
            Err(Error::NonPositiveU { point: p.to_vec(), value: u.value() })
        }
    }

    /// Jet of `f` about `p`; zero when there is no potential.
    pub fn f_jet(&self, p: &[f64]) -> Result<Jet> {
        let space = self.space();
        match (&self.potential, self.raw_potential(p)?) {
            (Potential::F(_), Some(f)) => Ok(f),
            (Potential::U(_), Some(u)) => {
                let u = self.positive_u(p, u)?;
                let m = self.m.finite().expect("u-form has finite m");
                Ok(space.func(crate::expr::Func::Log, &u).scaled(-m))
            }
            _ => Ok(space.zero(space.order())),
        }
    }

    /// Jet of `u = exp(-f/m)` about `p`; needs finite m.
    pub fn u_jet(&self, p: &[f64]) -> Result<Jet> {
        let space = self.space();
        let m = self
            .m
            .finite()
            .ok_or_else(|| Error::FormUnavailable("u = exp(-f/m) needs finite m".into()))?;
        match (&self.potential, self.raw_potential(p)?) {
            (Potential::U(_), Some(u)) => self.positive_u(p, u),
            (Potential::F(_), Some(f)) => Ok(space.func(crate::expr::Func::Exp, &f.scaled(-1.0 / m))),
            _ => Ok(space.constant(1.0, space.order())),
        }
    }

    pub fn point_map(&self, p: &[f64]) -> BTreeMap<String, f64> {
        self.coordinates().iter().cloned().zip(p.iter().copied()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, Scope};

    fn polar() -> ChartInstance {
        let s = Scope::new(&["r", "t"], &[] as &[&str]);
        let g = MetricField::new(
            2,
            vec![Expression::one(), Expression::zero(), parse_expression("r^2", &s).unwrap()],
        )
        .unwrap();
        let chart = Chart::new(&["r", "t"], &[(0.5, 2.0), (0.0, 3.0)]).unwrap();
        ChartInstance::builder(chart, g)
            .potential(Potential::U(parse_expression("r^2", &s).unwrap()))
            .m(MParam::Finite(2.0))
            .build()
            .unwrap()
    }

    #[test]
    fn cached_partials_match_closed_form() {
        let inst = polar();
        let g = inst.metric_jets(&[1.5, 0.3]).unwrap();
        let sp = inst.space();
        assert_eq!(sp.partial(&g[3], &[0, 0]), 2.25);
        assert_eq!(sp.partial(&g[3], &[1, 0]), 3.0);
        assert_eq!(sp.partial(&g[3], &[2, 0]), 2.0);
        assert_eq!(sp.partial(&g[3], &[3, 0]), 0.0);
        assert_eq!(sp.partial(&g[1], &[1, 1]), 0.0);
        // f = -2 log(r^2), f_r = -4/r
        let f = inst.f_jet(&[1.5, 0.3]).unwrap();
        assert!((sp.partial(&f, &[1, 0]) + 4.0 / 1.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_instances() {
        let chart = Chart::new(&["x"], &[(0.0, 1.0)]).unwrap();
        let g = MetricField::euclidean(1);
        let u = Potential::U(Expression::one());
        assert!(ChartInstance::builder(chart.clone(), g.clone()).potential(u).build().is_err());
        assert!(ChartInstance::builder(chart.clone(), g.clone()).m(MParam::Finite(-1.0)).build().is_err());
        assert!(ChartInstance::builder(chart, MetricField::euclidean(2)).build().is_err());
    }

    #[test]
    fn non_positive_u_is_reported() {
        let s = Scope::new(&["x"], &[] as &[&str]);
        let chart = Chart::new(&["x"], &[(-1.0, 1.0)]).unwrap();
        let inst = ChartInstance::builder(chart, MetricField::euclidean(1))
            .potential(Potential::U(parse_expression("x", &s).unwrap()))
            .m(MParam::Finite(1.0))
            .build()
            .unwrap();
        assert!(matches!(inst.u_jet(&[-0.5]), Err(Error::NonPositiveU { .. })));
        assert!(inst.u_jet(&[0.5]).is_ok());
    }

    #[test]
    fn m_serialization() {
        assert_eq!(serde_json::to_string(&MParam::Infinite).unwrap(), "\"inf\"");
        assert_eq!(serde_json::from_str::<MParam>("2.5").unwrap(), MParam::Finite(2.5));
        assert!(serde_json::from_str::<MParam>("-1").is_err());
        assert!(serde_json::from_str::<MParam>("\"oo\"").is_err());
    }
}
