mod common;

use common::{points, Spec};
use qecheck::error::Error;
use qecheck::expr::{parse_expression, Scope};
use qecheck::geometry::{Chart, ChartInstance, MParam, MetricField, Potential};
use qecheck::quasi_einstein::{kazdan_warner_integral, mu_constancy, mu_value, QuadratureGrid};

#[test]
fn hyperbolic_m1_fiber_constant_vanishes() {
    let inst = Spec {
        coords: &["r", "t"],
        bounds: &[(-1.0, 1.0), (0.0, 6.0)],
        metric: &["1", "0", "exp(2*r)"],
        potential: Some(('u', "exp(r)")),
        m: MParam::Finite(1.0),
        lambda: -2.0,
        ..Spec::default()
    }
    .build();
    let rep = mu_constancy(&inst, &points(&inst, 100), 1e-8).unwrap();
    assert!(rep.pass && rep.mean.abs() <= 1e-12, "{:?}", rep);
    assert!(mu_value(&inst, &[0.3, 1.0]).unwrap().abs() <= 1e-12);
}

fn sphere(metric: &str) -> ChartInstance {
    let scope = Scope::new(&["th", "ph"], &[] as &[&str]);
    let parse = |s: &str| parse_expression(s, &scope).unwrap();
    let chart = Chart::new(&["th", "ph"], &[(0.0, std::f64::consts::PI), (0.0, std::f64::consts::TAU)])
        .unwrap()
        .with_period(1, std::f64::consts::TAU)
        .unwrap();
    ChartInstance::builder(chart, MetricField::new(2, vec![parse("1"), parse("0"), parse(metric)]).unwrap())
        .potential(Potential::F(parse("cos(th)")))
        .lambda(1.0)
        .build()
        .unwrap()
}

#[test]
fn kazdan_warner_on_the_round_sphere() {
    let kw = kazdan_warner_integral(&sphere("sin(th)^2"), &QuadratureGrid::default()).unwrap();
    assert!(kw.conformal_ok);
    assert!(kw.integral.abs() <= 1e-6 * kw.area);
    assert!((kw.area - 4.0 * std::f64::consts::PI).abs() < 1e-3);
}

#[test]
fn kazdan_warner_gates_on_conformality() {
    let squashed = sphere("sin(th)^2 * (1 + 0.3*cos(th)^2)");
    let kw = kazdan_warner_integral(&squashed, &QuadratureGrid::default()).unwrap();
    assert!(!kw.conformal_ok);
}

#[test]
fn kazdan_warner_needs_a_periodic_surface() {
    let plane = common::flat_plane();
    assert!(matches!(
        kazdan_warner_integral(&plane, &QuadratureGrid::default()),
        Err(Error::NotClosedSurface(_))
    ));
}
