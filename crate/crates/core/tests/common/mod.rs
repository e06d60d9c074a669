//! Helpers shared by the integration tests: instance construction and a
//! finite-difference curvature oracle that only evaluates the metric and
//! potential expressions pointwise.
#![allow(dead_code)]

use nalgebra::DMatrix;

use qecheck::expr::{evaluate, parse_expression, Scope};
use qecheck::geometry::{Chart, ChartInstance, MParam, MetricField, Potential};
use qecheck::sampling::{sample_box, DEFAULT_SEED};

pub const FD_STEP: f64 = 1e-4;
pub const FD_AGREEMENT: f64 = 1e-5;

pub struct Spec<'a> {
    pub coords: &'a [&'a str],
    pub bounds: &'a [(f64, f64)],
    pub metric: &'a [&'a str],
    pub potential: Option<(char, &'a str)>,
    pub m: MParam,
    pub lambda: f64,
    pub params: &'a [(&'a str, f64)],
}

impl Default for Spec<'_> {
    fn default() -> Self {
        Spec { coords: &[], bounds: &[], metric: &[], potential: None, m: MParam::Infinite, lambda: 0.0, params: &[] }
    }
}

impl Spec<'_> {
    pub fn build(&self) -> ChartInstance {
        let names: Vec<&str> = self.params.iter().map(|p| p.0).collect();
        let scope = Scope::new(self.coords, &names);
        let parse = |s: &str| parse_expression(s, &scope).unwrap_or_else(|e| panic!("{}: {}", s, e));
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

pub fn unit_sphere() -> ChartInstance {
    Spec {
        coords: &["th", "ph"],
        bounds: &[(0.2, 2.9), (0.0, 6.0)],
        metric: &["1", "0", "sin(th)^2"],
        lambda: 1.0,
        ..Spec::default()
    }
    .build()
}

pub fn hyperbolic_plane() -> ChartInstance {
    Spec {
        coords: &["r", "t"],
        bounds: &[(-1.0, 1.0), (-1.0, 1.0)],
        metric: &["1", "0", "exp(2*r)"],
        lambda: -1.0,
        ..Spec::default()
    }
    .build()
}

pub fn flat_plane() -> ChartInstance {
    Spec { coords: &["x", "y"], bounds: &[(-1.0, 1.0), (-1.0, 1.0)], metric: &["1", "0", "1"], ..Spec::default() }.build()
}

pub fn points(inst: &ChartInstance, count: usize) -> Vec<Vec<f64>> {
    sample_box(inst.chart().bounds(), count, DEFAULT_SEED)
}

fn metric_at(inst: &ChartInstance, p: &[f64]) -> DMatrix<f64> {
    let n = inst.dim();
    let at = inst.point_map(p);
    DMatrix::from_fn(n, n, |i, j| evaluate(inst.metric().component(i, j), &at, inst.params()).unwrap())
}

fn shifted(p: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut q = p.to_vec();
    for &(k, d) in moves {
        q[k] += d;
    }
    q
}

/// `∂_k g` by central differences.
fn dg(inst: &ChartInstance, p: &[f64], h: f64) -> Vec<DMatrix<f64>> {
    (0..inst.dim())
        .map(|k| (metric_at(inst, &shifted(p, &[(k, h)])) - metric_at(inst, &shifted(p, &[(k, -h)]))) / (2.0 * h))
        .collect()
}

/// `∂_k ∂_l g` by central differences.
fn ddg(inst: &ChartInstance, p: &[f64], h: f64) -> Vec<Vec<DMatrix<f64>>> {
    let n = inst.dim();
    let g0 = metric_at(inst, p);
    (0..n)
        .map(|k| {
            (0..n)
                .map(|l| {
                    if k == l {
                        (metric_at(inst, &shifted(p, &[(k, h)])) - 2.0 * &g0 + metric_at(inst, &shifted(p, &[(k, -h)])))
                            / (h * h)
                    } else {
                        (metric_at(inst, &shifted(p, &[(k, h), (l, h)]))
                            - metric_at(inst, &shifted(p, &[(k, h), (l, -h)]))
                            - metric_at(inst, &shifted(p, &[(k, -h), (l, h)]))
                            + metric_at(inst, &shifted(p, &[(k, -h), (l, -h)])))
                            / (4.0 * h * h)
                    }
                })
                .collect()
        })
        .collect()
}

/// Finite-difference Ricci tensor (row-major) and scalar curvature at `p`.
pub fn fd_ricci(inst: &ChartInstance, p: &[f64], h: f64) -> (Vec<f64>, f64) {
    let n = inst.dim();
    let g = metric_at(inst, p);
    let gi = g.clone().try_inverse().expect("metric is invertible");
    let d1 = dg(inst, p, h);
    let d2 = ddg(inst, p, h);
    // first-kind symbols and their derivatives
    let a = |l: usize, i: usize, j: usize| 0.5 * (d1[i][(j, l)] + d1[j][(i, l)] - d1[l][(i, j)]);
    let da = |m: usize, l: usize, i: usize, j: usize| 0.5 * (d2[m][i][(j, l)] + d2[m][j][(i, l)] - d2[m][l][(i, j)]);
    let dgi: Vec<DMatrix<f64>> = (0..n).map(|m| -(&gi * &d1[m] * &gi)).collect();
    let gamma = |k: usize, i: usize, j: usize| (0..n).map(|l| gi[(k, l)] * a(l, i, j)).sum::<f64>();
    let dgamma = |m: usize, k: usize, i: usize, j: usize| {
        (0..n).map(|l| dgi[m][(k, l)] * a(l, i, j) + gi[(k, l)] * da(m, l, i, j)).sum::<f64>()
    };
    let mut ric = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += dgamma(k, k, i, j) - dgamma(j, k, i, k);
                for l in 0..n {
                    s += gamma(k, k, l) * gamma(l, i, j) - gamma(k, j, l) * gamma(l, i, k);
                }
            }
            ric[i * n + j] = s;
        }
    }
    let scalar = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| gi[(i, j)] * ric[i * n + j]).sum();
    (ric, scalar)
}

/// Potential `f` at `p`, converted from `u` when needed.
pub fn f_at(inst: &ChartInstance, p: &[f64]) -> f64 {
    let at = inst.point_map(p);
    match inst.potential() {
        Potential::None => 0.0,
        Potential::F(e) => evaluate(e, &at, inst.params()).unwrap(),
        Potential::U(e) => -inst.m().finite().unwrap() * evaluate(e, &at, inst.params()).unwrap().ln(),
    }
}

/// Finite-difference `Ric + Hess f - (1/m) df⊗df - λg` at `p`.
pub fn fd_qe_residual(inst: &ChartInstance, p: &[f64], h: f64) -> Vec<f64> {
    let n = inst.dim();
    let (ric, _) = fd_ricci(inst, p, h);
    let g = metric_at(inst, p);
    let gi = g.clone().try_inverse().unwrap();
    let d1 = dg(inst, p, h);
    let f = |q: &[f64]| f_at(inst, q);
    let f0 = f(p);
    let df: Vec<f64> = (0..n).map(|k| (f(&shifted(p, &[(k, h)])) - f(&shifted(p, &[(k, -h)]))) / (2.0 * h)).collect();
    let inv_m = inst.m().inverse();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let second = if i == j {
                (f(&shifted(p, &[(i, h)])) - 2.0 * f0 + f(&shifted(p, &[(i, -h)]))) / (h * h)
            } else {
                (f(&shifted(p, &[(i, h), (j, h)])) - f(&shifted(p, &[(i, h), (j, -h)])) - f(&shifted(p, &[(i, -h), (j, h)]))
                    + f(&shifted(p, &[(i, -h), (j, -h)])))
                    / (4.0 * h * h)
            };
            let mut conn = 0.0;
            for k in 0..n {
                let gamma: f64 =
                    (0..n).map(|l| gi[(k, l)] * 0.5 * (d1[i][(j, l)] + d1[j][(i, l)] - d1[l][(i, j)])).sum();
                conn += gamma * df[k];
            }
            out[i * n + j] = ric[i * n + j] + second - conn - inv_m * df[i] * df[j] - inst.lambda() * g[(i, j)];
        }
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
