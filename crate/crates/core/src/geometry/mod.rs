//! Pointwise curvature from symbolic metric components.
//!
//! Every instance caches all partial derivatives of its metric and
//! potential up to fourth order as one compiled program. At a point these
//! become Taylor jets, and the curvature pipeline runs in jet arithmetic so
//! derivatives of curvature (∇R, ΔR, div Ric) stay exact.

mod chart;
mod instance;
mod local;
mod ops;
mod tensor;

pub use chart::{Chart, MetricField};
pub use instance::{ChartInstance, FieldCache, InstanceBuilder, MParam, Potential, DEFAULT_DERIVATIVE_ORDER};
pub use local::LocalGeometry;
pub use ops::{
    christoffel, conformal_hessian_test, curvature, divergence_sym2, scalar_calculus, ConformalHessian,
    Curvature, ScalarCalculus, ScalarField,
};
pub use tensor::{TensorValue, Variance};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, Expression, Scope};

    fn instance(coords: &[&str], bounds: &[(f64, f64)], upper: &[&str]) -> ChartInstance {
        let s = Scope::new(coords, &[]);
        let upper = upper.iter().map(|e| parse_expression(e, &s).unwrap()).collect();
        let g = MetricField::new(coords.len(), upper).unwrap();
        ChartInstance::builder(Chart::new(coords, bounds).unwrap(), g).build().unwrap()
    }

    fn expr(src: &str, coords: &[&str]) -> Expression {
        parse_expression(src, &Scope::new(coords, &[])).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn christoffel_examples() {
        let flat = instance(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)], &["1", "0", "1"]);
        assert_eq!(christoffel(&flat, &[0.3, 0.2]).unwrap().max_abs(), 0.0);

        let polar = instance(&["r", "t"], &[(0.5, 3.0), (0.0, 6.0)], &["1", "0", "r^2"]);
        let g = christoffel(&polar, &[2.0, 0.7]).unwrap();
        assert!(close(g.get(&[0, 1, 1]), -2.0, 1e-14));
        assert!(close(g.get(&[1, 0, 1]), 0.5, 1e-14));
        assert!(close(g.get(&[1, 1, 0]), 0.5, 1e-14));
        assert_eq!(g.get(&[0, 0, 0]), 0.0);
        assert!(g.asymmetry(1, 2) == 0.0);

        let hyp = instance(&["r", "t"], &[(-1.0, 1.0), (0.0, 6.0)], &["1", "0", "exp(2*r)"]);
        let g = christoffel(&hyp, &[0.0, 0.0]).unwrap();
        assert!(close(g.get(&[0, 1, 1]), -1.0, 1e-14));
        assert!(close(g.get(&[1, 0, 1]), 1.0, 1e-14));
    }

    #[test]
    fn curvature_examples() {
        let sphere = instance(&["th", "ph"], &[(0.3, 2.8), (0.0, 6.0)], &["1", "0", "sin(th)^2"]);
        let c = curvature(&sphere, &[1.0, 0.4]).unwrap();
        assert!(close(c.scalar, 2.0, 1e-12));
        assert!(close(c.ricci.get(&[0, 0]), 1.0, 1e-12));
        assert!(close(c.ricci.get(&[1, 1]), 1f64.sin().powi(2), 1e-12));
        assert!(c.ricci.asymmetry(0, 1) <= 1e-12);
        // Ric_jk = R^i_ijk, so R^θ_θφφ = sin²θ
        assert!(close(c.riemann.get(&[0, 0, 1, 1]), 1f64.sin().powi(2), 1e-12));
        assert!(c.riemann.asymmetry(1, 2) > 0.1);

        let hyp = instance(&["r", "t"], &[(-1.0, 1.0), (0.0, 6.0)], &["1", "0", "exp(2*r)"]);
        let c = curvature(&hyp, &[0.4, 1.0]).unwrap();
        assert!(close(c.scalar, -2.0, 1e-12));
        assert!(close(c.ricci.get(&[1, 1]), -(0.8f64).exp(), 1e-12));
    }

    #[test]
    fn riemann_antisymmetries() {
        let g = instance(
            &["x", "y", "z"],
            &[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
            &["1 + 0.1*x^2*exp(y)", "0.05*z", "0", "2 + sin(x*z)*0.2", "0.1*x*y", "1 + y^2"],
        );
        let c = curvature(&g, &[0.3, -0.2, 0.5]).unwrap();
        let n = 3;
        let r = &c.riemann;
        let mut worst: f64 = 0.0;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        worst = worst.max((r.get(&[l, i, j, k]) + r.get(&[l, j, i, k])).abs());
                        let cyc = r.get(&[l, i, j, k]) + r.get(&[l, j, k, i]) + r.get(&[l, k, i, j]);
                        worst = worst.max(cyc.abs());
                    }
                }
            }
        }
        assert!(worst <= 1e-12, "{}", worst);
        assert!(c.ricci.asymmetry(0, 1) <= 1e-12);
    }

    #[test]
    fn scalar_calculus_examples() {
        let flat = instance(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)], &["1", "0", "1"]);
        let c = scalar_calculus(&flat, &expr("x^2 + y^2", &["x", "y"]), &[0.3, -0.4]).unwrap();
        assert_eq!(c.hess.data, vec![2.0, 0.0, 0.0, 2.0]);
        assert!(close(c.laplacian, 4.0, 1e-14));
        assert!(close(c.grad_norm_sq, 4.0 * 0.25, 1e-14));

        let line = instance(&["x"], &[(-2.0, 2.0)], &["1"]);
        let c = scalar_calculus(&line, &expr("cosh(x)", &["x"]), &[1.0]).unwrap();
        assert!(close(c.laplacian, 1f64.cosh(), 1e-14));
        assert!(close(c.grad_norm_sq, 1f64.sinh().powi(2), 1e-14));

        let polar = instance(&["r", "t"], &[(0.5, 3.0), (0.0, 6.0)], &["1", "0", "r^2"]);
        let c = scalar_calculus(&polar, &expr("r^2", &["r", "t"]), &[1.0, 0.2]).unwrap();
        assert!(close(c.laplacian, 4.0, 1e-13));
        assert!(c.hess.asymmetry(0, 1) <= 1e-12);
    }

    #[test]
    fn divergence_examples() {
        let sphere = instance(&["th", "ph"], &[(0.3, 2.8), (0.0, 6.0)], &["1", "0", "sin(th)^2"]);
        let g: Vec<Expression> = (0..4).map(|k| sphere.metric().component(k / 2, k % 2).clone()).collect();
        assert!(divergence_sym2(&sphere, &g, &[1.1, 0.3]).unwrap().max_abs() <= 1e-14);

        // Hess cosh on the line has divergence cosh'''= sinh
        let line = instance(&["x"], &[(-2.0, 2.0)], &["1"]);
        let t = vec![expr("cosh(x)", &["x"])];
        let d = divergence_sym2(&line, &t, &[0.7]).unwrap();
        assert!(close(d.get(&[0]), 0.7f64.sinh(), 1e-14));
        assert!(divergence_sym2(&line, &[], &[0.7]).is_err());
    }

    #[test]
    fn conformal_hessian_examples() {
        let hyp = instance(&["r", "t"], &[(-1.0, 1.0), (0.0, 6.0)], &["1", "0", "exp(2*r)"]);
        let pts = vec![vec![-0.5, 0.1], vec![0.3, 2.0]];
        let c = conformal_hessian_test(&hyp, &expr("exp(r)", &["r", "t"]), &pts, 1e-12).unwrap();
        assert!(c.is_conformal && c.nontrivial);
        assert!(close(c.k_values[0], (-0.5f64).exp(), 1e-14));

        let flat = instance(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)], &["1", "0", "1"]);
        let c = conformal_hessian_test(&flat, &expr("x^2", &["x", "y"]), &pts, 1e-9).unwrap();
        assert!(!c.is_conformal);
        let c = conformal_hessian_test(&flat, &Expression::constant(3.0), &pts, 1e-9).unwrap();
        assert!(c.is_conformal && !c.nontrivial);
        assert_eq!(c.k_values, vec![0.0, 0.0]);
    }

    #[test]
    fn singular_metric_is_reported() {
        let bad = instance(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)], &["x", "0", "1"]);
        assert!(matches!(curvature(&bad, &[-0.5, 0.0]), Err(crate::Error::SingularMetric(_))));
        assert!(curvature(&bad, &[0.5, 0.0]).is_ok());
    }
}
