//! Kähler structures on quasi-Einstein instances: compatibility of `J`,
//! the form `φ = Hess u(J·, ·)`, and the mechanism behind the splitting of
//! Kähler quasi-Einstein metrics.

mod checks;
mod structure;
mod transport;

pub use checks::{
    directional_hessian_check, phi_antisymmetry_check, phi_form, wedge_vanishing_check, GRADIENT_FLOOR,
    KAHLER_CERT_TOL,
};
pub use structure::{kahler_checks, ComplexStructureField, KahlerInstance, KahlerReport};
pub use transport::{parallel_distribution_check, Curve, TransportReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Chart, ChartInstance, MetricField, Potential};
use crate::quasi_einstein::{map_points, qe_residual, Form, ResidualReport};
use crate::sampling::{sample_box, DEFAULT_SEED};
use crate::warp::einstein_residual;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingReport {
    pub label: String,
    pub qe: ResidualReport,
    pub kahler: KahlerReport,
    pub pass: bool,
}

/// The product instance together with its report.
#[derive(Debug, Clone)]
pub struct SplittingWitness {
    pub product: KahlerInstance,
    pub report: SplittingReport,
}

const WITNESS_SAMPLE: usize = 20;

/// Form `M1 × M2` with the potential of `M2` and the block structure
/// `J1 ⊕ J2`, then check it is Kähler and quasi-Einstein on `count` seeded
/// points. `M1` must be Einstein with the common λ.
pub fn splitting_witness(
    m1: &ChartInstance,
    m2: &ChartInstance,
    j1: &ComplexStructureField,
    j2: &ComplexStructureField,
    count: usize,
    tol: f64,
) -> Result<SplittingWitness> {
    let lambda = m2.lambda();
    if (m1.lambda() - lambda).abs() > 1e-12 {
        return Err(Error::MismatchedConstants(format!("lambda {} vs {}", m1.lambda(), lambda)));
    }
    if m1.m().finite().is_some() && m1.m() != m2.m() {
        return Err(Error::MismatchedConstants(format!("m {} vs {}", m1.m(), m2.m())));
    }
    let probe = sample_box(m1.chart().bounds(), WITNESS_SAMPLE, DEFAULT_SEED);
    let (res, _) = map_points(&probe, |p| Ok(einstein_residual(m1, lambda, p)?.max_abs()))?;
    let worst = res.iter().cloned().fold(0.0, f64::max);
    if res.is_empty() || !(worst <= tol) {
        return Err(Error::MismatchedConstants(format!(
            "first factor is not Einstein with lambda {}: residual {:e}",
            lambda, worst
        )));
    }

    let mut coords = m1.coordinates().to_vec();
    if let Some(c) = m2.coordinates().iter().find(|c| coords.contains(c)) {
        return Err(Error::InvalidInstance(format!("coordinate `{}` appears in both factors", c)));
    }
    coords.extend(m2.coordinates().iter().cloned());
    let mut bounds = m1.chart().bounds().to_vec();
    bounds.extend(m2.chart().bounds().iter().copied());
    let mut chart = Chart::new(&coords, &bounds)?;
    let periods = m1.chart().periods().iter().chain(m2.chart().periods());
    for (i, p) in periods.enumerate() {
        if let Some(p) = p {
            chart = chart.with_period(i, *p)?;
        }
    }
    let mut params = m1.params().clone();
    params.extend(m2.params().iter().map(|(k, v)| (k.clone(), *v)));
    let potential: Potential = m2.potential().clone();
    let label = format!("{}_x_{}", m1.label(), m2.label());
    let base = ChartInstance::builder(chart, MetricField::block_sum(m1.metric(), m2.metric()))
        .label(label.clone())
        .potential(potential)
        .m(m2.m())
        .lambda(lambda)
        .params(params)
        .build()?;
    let product = KahlerInstance::new(base, ComplexStructureField::block_diagonal(j1, j2))?;
    let points = sample_box(product.base().chart().bounds(), count, DEFAULT_SEED);
    let (res, skipped) = map_points(&points, |p| Ok(qe_residual(product.base(), p, Form::F)?.max_abs()))?;
    let qe = ResidualReport::new("qe_residual", &label, res, skipped, tol);
    let kahler = kahler_checks(&product, &points, tol)?;
    let pass = qe.pass && kahler.pass;
    Ok(SplittingWitness { product, report: SplittingReport { label, qe, kahler, pass } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, Expression, Scope};
    use crate::geometry::MParam;
    use crate::quasi_einstein::{check_identity, IdentityId};

    fn inst(coords: &[&str], metric: &[&str], u: Option<&str>, m: MParam, lambda: f64) -> ChartInstance {
        let scope = Scope::new(coords, &["a", "b"]);
        let parse = |s: &str| parse_expression(s, &scope).unwrap();
        let bounds = vec![(-0.5, 0.5); coords.len()];
        let mut b = ChartInstance::builder(
            Chart::new(coords, &bounds).unwrap(),
            MetricField::new(coords.len(), metric.iter().map(|s| parse(s)).collect()).unwrap(),
        )
        .m(m)
        .lambda(lambda)
        .param("a", (2.0f64 / 3.0).sqrt())
        .param("b", 2f64.sqrt());
        if let Some(u) = u {
            b = b.potential(Potential::U(parse(u)));
        }
        b.build().unwrap()
    }

    fn rotation(coords: &[&str], h: &str) -> ComplexStructureField {
        ComplexStructureField::surface_rotation(parse_expression(h, &Scope::new(coords, &["a", "b"])).unwrap())
    }

    fn factors(u: &str) -> (ChartInstance, ChartInstance, ComplexStructureField, ComplexStructureField) {
        let m1 = inst(&["s", "t"], &["1", "0", "exp(2*b*s)"], None, MParam::Infinite, -2.0);
        let m2 = inst(&["r", "th"], &["1", "0", "exp(2*a*r)/a^2"], Some(u), MParam::Finite(2.0), -2.0);
        (m1, m2, rotation(&["s", "t"], "exp(b*s)"), rotation(&["r", "th"], "exp(a*r)/a"))
    }

    fn product(u: &str) -> KahlerInstance {
        let (m1, m2, j1, j2) = factors("exp(a*r)");
        let w = splitting_witness(&m1, &m2, &j1, &j2, 10, 1e-7).unwrap();
        let base = w.product.base().to_builder().potential(Potential::U(
            parse_expression(u, &Scope::new(&["s", "t", "r", "th"], &["a", "b"])).unwrap(),
        ));
        KahlerInstance::new(base.build().unwrap(), w.product.structure().clone()).unwrap()
    }

    fn pts(k: &KahlerInstance) -> Vec<Vec<f64>> {
        sample_box(k.base().chart().bounds(), 25, DEFAULT_SEED)
    }

    const BROKEN: &str = "exp(a*r) + 0.5*s^2 + 0.2*r*t";

    #[test]
    fn flat_plane_examples() {
        let flat = inst(&["x", "y"], &["1", "0", "1"], None, MParam::Finite(2.0), 0.0);
        let p = sample_box(&[(-0.5, 0.5); 2], 10, 1);
        let std = KahlerInstance::new(flat.clone(), ComplexStructureField::standard(2).unwrap()).unwrap();
        let r = kahler_checks(&std, &p, 1e-12).unwrap();
        assert!(r.pass && r.j_squared.max_residual == 0.0 && r.nabla_j.max_residual == 0.0);
        let scaled = KahlerInstance::new(flat.clone(), ComplexStructureField::standard(2).unwrap().scaled(1.1)).unwrap();
        let r = kahler_checks(&scaled, &p, 1e-12).unwrap();
        assert!((r.j_squared.max_residual - 0.21).abs() < 1e-12);
        assert!(!r.pass);
        let phi = phi_form(&std, &[0.1, 0.2]).unwrap();
        assert_eq!(phi.max_abs(), 0.0);
        let odd = inst(&["x"], &["1"], None, MParam::Finite(2.0), 0.0);
        assert!(matches!(
            KahlerInstance::new(odd, ComplexStructureField::standard(2).unwrap()),
            Err(Error::OddDimension(1))
        ));
        // u = x² is not compatible with J
        let xsq = inst(&["x", "y"], &["1", "0", "1"], Some("1 + x^2"), MParam::Finite(2.0), 0.0);
        let k = KahlerInstance::new(xsq, ComplexStructureField::standard(2).unwrap()).unwrap();
        assert!(phi_antisymmetry_check(&k, &p, 1e-9).unwrap().max_residual > 1e-3);
    }

    #[test]
    fn product_chain() {
        let k = product("exp(a*r)");
        let p = pts(&k);
        assert!(kahler_checks(&k, &p, 1e-10).unwrap().pass);
        let phi = phi_antisymmetry_check(&k, &p, 1e-9).unwrap();
        assert!(phi.pass && phi.hypothesis_ok, "{}", phi.max_residual);
        let w = wedge_vanishing_check(&k, &p, 1e-8).unwrap();
        assert!(w.pass && w.hypothesis_ok, "{}", w.max_residual);
        let d = directional_hessian_check(&k, &p, 1e-7).unwrap();
        assert!(d.pass && d.skipped == 0, "{}", d.max_residual);
        let curve = Curve::segment(&[-0.4, -0.3, -0.35, 0.1], &[0.3, 0.35, 0.3, -0.2]);
        let t = parallel_distribution_check(&k, &curve, 200, 1e-6).unwrap();
        assert!(t.pass && t.length > 0.5, "{:?}", t);
    }

    #[test]
    fn broken_control_separates() {
        let k = product(BROKEN);
        let p = pts(&k);
        assert!(phi_antisymmetry_check(&k, &p, 1e-9).unwrap().max_residual > 1e-3);
        let w = wedge_vanishing_check(&k, &p, 1e-8).unwrap();
        assert!(w.max_residual > 1e-3 && !w.hypothesis_ok);
        assert!(directional_hessian_check(&k, &p, 1e-7).unwrap().max_residual > 1e-3);
        let curve = Curve::segment(&[-0.4, -0.3, -0.35, 0.1], &[0.3, 0.35, 0.3, -0.2]);
        let t = parallel_distribution_check(&k, &curve, 200, 1e-6).unwrap();
        assert!(t.drift_per_length > 1e-3, "{:?}", t);
    }

    #[test]
    fn flat_transport_calibration() {
        let flat = inst(&["x", "y", "z", "w"], &["1", "0", "0", "0", "1", "0", "0", "1", "0", "1"], Some("exp(x)"), MParam::Finite(2.0), 0.0);
        let k = KahlerInstance::new(flat, ComplexStructureField::standard(4).unwrap()).unwrap();
        let t = Expression::coord("t");
        let curve = Curve::new(vec![Expression::zero(), Expression::constant(0.8) * t - Expression::constant(0.4), Expression::zero(), Expression::zero()]);
        let r = parallel_distribution_check(&k, &curve, 50, 1e-12).unwrap();
        assert_eq!(r.max_drift, 0.0);
        assert!((r.length - 0.8).abs() < 1e-14);
    }

    #[test]
    fn trivial_potential_skips_everything() {
        let k = product("2");
        let d = directional_hessian_check(&k, &pts(&k), 1e-7).unwrap();
        assert_eq!(d.point_count, 0);
        assert!(!d.pass);
        assert_eq!(wedge_vanishing_check(&k, &pts(&k), 1e-8).unwrap().max_residual, 0.0);
    }

    #[test]
    fn splitting_examples() {
        let (m1, m2, j1, j2) = factors("exp(a*r)");
        let w = splitting_witness(&m1, &m2, &j1, &j2, 30, 1e-7).unwrap();
        assert!(w.report.pass, "{}", w.report.qe.max_residual);
        let p = pts(&w.product);
        for id in [IdentityId::E4, IdentityId::E5, IdentityId::E9] {
            let r = check_identity(w.product.base(), id, &p, 1e-7).unwrap();
            assert!(r.pass && r.hypothesis_ok, "{} {}", id, r.max_residual);
        }
        let wrong = m1.to_builder().lambda(-1.0).build().unwrap();
        assert!(matches!(splitting_witness(&wrong, &m2, &j1, &j2, 5, 1e-7), Err(Error::MismatchedConstants(_))));
        // declared λ matches but the curvature does not
        let bent = inst(&["s", "t"], &["1", "0", "exp(2*s)"], None, MParam::Infinite, -2.0);
        assert!(matches!(splitting_witness(&bent, &m2, &j1, &j2, 5, 1e-7), Err(Error::MismatchedConstants(_))));
        let (_, m2b, _, _) = factors("exp(a*r) + 0.3*r^2");
        let bad = splitting_witness(&m1, &m2b, &j1, &j2, 30, 1e-7).unwrap();
        assert!(!bad.report.pass && bad.report.qe.max_residual > 1e-7);
    }
}
