//! The quasi-Einstein equation and its consequences as pointwise checks.

mod bounds;
mod identities;
mod report;
mod tensors;

pub use bounds::{kazdan_warner_integral, scalar_bound_report, KazdanWarner, QuadratureGrid, ScalarBoundReport, BOUND_TOL};
pub use identities::{check_identity, check_identity_gated, IdentityId, HYPOTHESIS_TOL};
pub use report::ResidualReport;
pub use tensors::{bakry_emery_ricci, mu_constancy, mu_pair, mu_value, qe_residual, Form, MuReport};

pub(crate) use report::map_points;
pub(crate) use tensors::max_qe_residual;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Chart, MParam};
    use crate::testutil::{cosh_line, hyperbolic, points, random_metric, sphere, Spec};

    #[test]
    fn bakry_emery_examples() {
        let s = sphere(Some(('f', "0.7")), MParam::Finite(3.0));
        let be = bakry_emery_ricci(&s, &[1.0, 0.2]).unwrap();
        let ric = crate::geometry::curvature(&s, &[1.0, 0.2]).unwrap().ricci;
        assert_eq!(be, ric);

        // f = -m log cosh(ax): Ric_f^m = -m a² g
        let c = Spec {
            coords: &["x"],
            bounds: &[(-2.0, 2.0)],
            metric: &["1"],
            potential: Some(('f', "-2*log(cosh(a*x))")),
            m: MParam::Finite(2.0),
            lambda: -2.0 * 1.5 * 1.5,
            params: &[("a", 1.5)],
        }
        .build();
        let be = bakry_emery_ricci(&c, &[0.4]).unwrap();
        assert!((be.get(&[0, 0]) + 2.0 * 2.25).abs() < 1e-13);

        let gauss = Spec {
            coords: &["x", "y"],
            bounds: &[(-2.0, 2.0), (-2.0, 2.0)],
            metric: &["1", "0", "1"],
            potential: Some(('f', "(l/2)*(x^2 + y^2)")),
            m: MParam::Infinite,
            lambda: 0.8,
            params: &[("l", 0.8)],
        }
        .build();
        let be = bakry_emery_ricci(&gauss, &[1.2, -0.3]).unwrap();
        assert_eq!(be.data, vec![0.8, 0.0, 0.0, 0.8]);
    }

    #[test]
    fn qe_residual_examples() {
        let s = sphere(None, MParam::Finite(3.0));
        assert!(qe_residual(&s, &[1.0, 0.5], Form::F).unwrap().max_abs() < 1e-14);
        let c = cosh_line();
        for form in [Form::F, Form::U] {
            assert!(qe_residual(&c, &[0.9], form).unwrap().max_abs() < 1e-13);
        }
        let h = hyperbolic(1.0, -2.0);
        assert!(qe_residual(&h, &[0.3, 1.0], Form::U).unwrap().max_abs() < 1e-13);
        let g = Spec {
            coords: &["x"],
            bounds: &[(-1.0, 1.0)],
            metric: &["1"],
            potential: Some(('f', "x^2")),
            m: MParam::Infinite,
            lambda: 2.0,
            params: &[],
        }
        .build();
        assert!(matches!(qe_residual(&g, &[0.0], Form::U), Err(crate::Error::FormUnavailable(_))));
    }

    #[test]
    fn forms_agree_on_u_instances() {
        let inst = random_metric();
        let u = Spec {
            coords: &["x", "y"],
            bounds: &[(-1.0, 1.0), (-1.0, 1.0)],
            metric: &["1 + 0.1*x^2*exp(y)", "0.2*sin(x*y)", "2 + 0.3*cos(x) + 0.1*y^3"],
            potential: Some(('u', "2 + sin(x)*y")),
            m: MParam::Finite(3.0),
            lambda: 0.5,
            params: &[],
        }
        .build();
        for p in points(&inst, 20) {
            let a = qe_residual(&u, &p, Form::F).unwrap();
            let b = qe_residual(&u, &p, Form::U).unwrap();
            assert!(a.sub(&b).max_abs() < 1e-10);
        }
    }

    #[test]
    fn identities_hold_where_expected() {
        let rnd = random_metric();
        let pts = points(&rnd, 30);
        for id in [IdentityId::E1, IdentityId::E2, IdentityId::E3] {
            let r = check_identity(&rnd, id, &pts, 1e-8).unwrap();
            assert!(r.pass, "{} {}", id, r.max_residual);
            assert!(r.hypothesis_ok);
        }
        let r = check_identity(&rnd, IdentityId::E4, &pts, 1e-8).unwrap();
        assert!(!r.hypothesis_ok);

        let c = cosh_line();
        let pts = points(&c, 30);
        for id in [IdentityId::E4, IdentityId::E5, IdentityId::E9, IdentityId::TRACE, IdentityId::RICGRAD] {
            let r = check_identity(&c, id, &pts, 1e-8).unwrap();
            assert!(r.pass && r.hypothesis_ok, "{} {}", id, r.max_residual);
        }
        let h = hyperbolic(1.0, -2.0);
        let pts = points(&h, 30);
        for id in [IdentityId::E4, IdentityId::E5, IdentityId::E9, IdentityId::EE1, IdentityId::TRACE] {
            let r = check_identity(&h, id, &pts, 1e-8).unwrap();
            assert!(r.pass && r.hypothesis_ok, "{} {}", id, r.max_residual);
        }
    }

    #[test]
    fn identity_preconditions() {
        let c = cosh_line();
        let pts = points(&c, 3);
        assert!(matches!(check_identity(&c, IdentityId::EE1, &pts, 1.0), Err(crate::Error::DimensionMismatch(_))));
        let h = hyperbolic(1.0, -2.0);
        assert!(matches!(check_identity(&h, IdentityId::RICGRAD, &pts, 1.0), Err(crate::Error::MDegenerate)));
        let s = sphere(Some(('f', "cos(th)")), MParam::Infinite);
        assert!(matches!(check_identity(&s, IdentityId::E9, &pts, 1.0), Err(crate::Error::FormUnavailable(_))));
    }

    #[test]
    fn e4_fails_on_non_qe_sphere() {
        let s = sphere(Some(('f', "cos(th)")), MParam::Finite(3.0));
        let r = check_identity(&s, IdentityId::E4, &points(&s, 30), 1e-7).unwrap();
        assert!(!r.hypothesis_ok);
        assert!(r.max_residual > 1e-3);
    }

    #[test]
    fn mu_examples() {
        let c = cosh_line();
        let rep = mu_constancy(&c, &points(&c, 50), 1e-8).unwrap();
        assert!(rep.pass);
        assert!((rep.mean + 1.0).abs() < 1e-12);
        let s = sphere(None, MParam::Finite(3.0));
        assert!((mu_value(&s, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-14);
        let h = hyperbolic(1.0, -2.0);
        assert!(mu_value(&h, &[0.2, 0.0]).unwrap().abs() < 1e-12);
        let g = sphere(Some(('f', "cos(th)")), MParam::Infinite);
        assert!(mu_value(&g, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn scalar_bounds() {
        let s = sphere(None, MParam::Finite(3.0));
        let r = scalar_bound_report(&s, &points(&s, 20)).unwrap();
        assert!((r.bound_threshold - 0.5).abs() < 1e-15);
        assert_eq!(r.positive_lambda_ok, Some(true));
        assert!(r.pass && r.hypothesis_ok);
        let h = hyperbolic(1.0, -2.0);
        let r = scalar_bound_report(&h, &points(&h, 20)).unwrap();
        assert_eq!(r.m1_ok, Some(true));
        assert!(r.m1_deviation < 1e-9);
    }

    #[test]
    fn kazdan_warner_on_round_sphere() {
        let mut s = Spec {
            coords: &["th", "ph"],
            bounds: &[(0.0, std::f64::consts::PI), (0.0, 1.0)],
            metric: &["1", "0", "sin(th)^2"],
            potential: Some(('f', "cos(th)")),
            m: MParam::Infinite,
            lambda: 1.0,
            params: &[],
        }
        .build();
        assert!(matches!(
            kazdan_warner_integral(&s, &QuadratureGrid::default()),
            Err(crate::Error::NotClosedSurface(_))
        ));
        let chart = Chart::new(&["th", "ph"], &[(0.0, std::f64::consts::PI), (0.0, 1.0)])
            .unwrap()
            .with_period(1, 2.0 * std::f64::consts::PI)
            .unwrap();
        s = rebuild_with_chart(&s, chart);
        let kw = kazdan_warner_integral(&s, &QuadratureGrid::default()).unwrap();
        assert!(kw.conformal_ok);
        assert!((kw.area - 4.0 * std::f64::consts::PI).abs() < 1e-3);
        assert!(kw.integral.abs() <= 1e-6 * kw.area);
    }

    fn rebuild_with_chart(inst: &crate::geometry::ChartInstance, chart: Chart) -> crate::geometry::ChartInstance {
        crate::geometry::ChartInstance::builder(chart, inst.metric().clone())
            .potential(inst.potential().clone())
            .m(inst.m())
            .lambda(inst.lambda())
            .build()
            .unwrap()
    }
}
