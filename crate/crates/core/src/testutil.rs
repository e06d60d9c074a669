//! Shared constructors for unit tests.

use crate::expr::{parse_expression, Scope};
use crate::geometry::{Chart, ChartInstance, MParam, MetricField, Potential};

pub(crate) struct Spec<'a> {
    pub coords: &'a [&'a str],
    pub bounds: &'a [(f64, f64)],
    pub metric: &'a [&'a str],
    pub potential: Option<(char, &'a str)>,
    pub m: MParam,
    pub lambda: f64,
    pub params: &'a [(&'a str, f64)],
}

impl Spec<'_> {
    pub fn build(&self) -> ChartInstance {
        let names: Vec<&str> = self.params.iter().map(|p| p.0).collect();
        let scope = Scope::new(self.coords, &names);
        let parse = |s: &str| parse_expression(s, &scope).unwrap();
        let g = MetricField::new(self.coords.len(), self.metric.iter().map(|s| parse(s)).collect()).unwrap();
        let potential = match self.potential {
            None => Potential::None,
            Some(('f', e)) => Potential::F(parse(e)),
            Some((_, e)) => Potential::U(parse(e)),
        };
        let mut b = ChartInstance::builder(Chart::new(self.coords, self.bounds).unwrap(), g)
            .potential(potential)
            .m(self.m)
            .lambda(self.lambda);
        for (k, v) in self.params {
            b = b.param(*k, *v);
        }
        b.build().unwrap()
    }
}

pub(crate) fn cosh_line() -> ChartInstance {
    Spec {
        coords: &["x"],
        bounds: &[(-2.0, 2.0)],
        metric: &["1"],
        potential: Some(('u', "cosh(a*x)")),
        m: MParam::Finite(2.0),
        lambda: -2.0,
        params: &[("a", 1.0)],
    }
    .build()
}

pub(crate) fn hyperbolic(m: f64, lambda: f64) -> ChartInstance {
    Spec {
        coords: &["r", "t"],
        bounds: &[(-1.0, 1.0), (0.0, 6.0)],
        metric: &["1", "0", "exp(2*r)"],
        potential: Some(('u', "exp(r)")),
        m: MParam::Finite(m),
        lambda,
        params: &[],
    }
    .build()
}

pub(crate) fn sphere(potential: Option<(char, &'static str)>, m: MParam) -> ChartInstance {
    Spec {
        coords: &["th", "ph"],
        bounds: &[(0.3, 2.8), (0.0, 6.0)],
        metric: &["1", "0", "sin(th)^2"],
        potential,
        m,
        lambda: 1.0,
        params: &[],
    }
    .build()
}

pub(crate) fn random_metric() -> ChartInstance {
    Spec {
        coords: &["x", "y"],
        bounds: &[(-1.0, 1.0), (-1.0, 1.0)],
        metric: &["1 + 0.1*x^2*exp(y)", "0.2*sin(x*y)", "2 + 0.3*cos(x) + 0.1*y^3"],
        potential: Some(('f', "sin(x) * y + 0.3*x^2")),
        m: MParam::Finite(3.0),
        lambda: 0.5,
        params: &[],
    }
    .build()
}

pub(crate) fn points(inst: &ChartInstance, count: usize) -> Vec<Vec<f64>> {
    crate::sampling::sample_box(inst.chart().bounds(), count, crate::sampling::DEFAULT_SEED)
}
