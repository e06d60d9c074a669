//! Cohomogeneity-one reductions: profile ODEs, their integration, lifting
//! back to chart instances, the closed-surface shooting probe and the
//! exponential Einstein family.

mod exponential;
mod lift;
mod ode;
mod shoot;

pub use exponential::{exponential_instance, exponential_solution_check, ExponentialReport};
pub use lift::lift_solution;
pub use ode::{
    integrate_ode, integrate_ode_ungated, reduce_ode, AnsatzKind, InitialData, OdeSolution, OdeStatus, ProfileAnsatz,
    ProfileForm, ReducedOde, DRIFT_LIMIT,
};
pub use shoot::{shoot_closed_surface, ShootingReport, ShotRecord, ShotStatus};

/// Default RK4 step.
pub const DEFAULT_STEP: f64 = 1e-3;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::quasi_einstein::{qe_residual, Form};
    use crate::sampling::{sample_box, DEFAULT_SEED};
    use crate::warp::einstein_check;

    fn interior(inst: &crate::geometry::ChartInstance, count: usize) -> Vec<Vec<f64>> {
        sample_box(inst.chart().bounds(), count, DEFAULT_SEED)
    }

    fn worst_qe(inst: &crate::geometry::ChartInstance, form: Form, count: usize) -> f64 {
        interior(inst, count)
            .iter()
            .map(|p| qe_residual(inst, p, form).unwrap().max_abs())
            .fold(0.0, f64::max)
    }

    fn cosh_solution() -> OdeSolution {
        let a = ProfileAnsatz::line(2.0, -2.0, ProfileForm::U);
        let init = InitialData { r0: -2.0, phi: 1.0, dphi: 0.0, w: 2f64.cosh(), dw: -(2f64.sinh()), w_second: 0.0 };
        integrate_ode(&a, &init, 2.0, DEFAULT_STEP).unwrap()
    }

    #[test]
    fn lifted_cosh_passes_the_tensor_engine() {
        let sol = cosh_solution();
        let inst = lift_solution(&sol).unwrap();
        assert!(worst_qe(&inst, Form::U, 50) <= 1e-6);
        assert!(worst_qe(&inst, Form::F, 50) <= 1e-6);
    }

    #[test]
    fn reduced_rhs_matches_actual_second_derivatives() {
        let ode = reduce_ode(&ProfileAnsatz::line(2.0, -2.0, ProfileForm::U)).unwrap();
        for x in [-1.5, -0.2, 0.4, 1.3f64] {
            let (_, upp) = ode.second_derivatives(x, &[1.0, 0.0, x.cosh(), x.sinh()]).unwrap();
            assert!((upp - x.cosh()).abs() <= 1e-9);
        }
    }

    #[test]
    fn lifted_round_sphere_is_einstein() {
        let a = ProfileAnsatz::revolution(2.0, 1.0, ProfileForm::F);
        let sol = integrate_ode(&a, &InitialData::regular_origin(0.0, 0.0), 3.0, DEFAULT_STEP).unwrap();
        let inst = lift_solution(&sol).unwrap();
        let rep = einstein_check(&inst, 1.0, &interior(&inst, 50), 1e-6).unwrap();
        assert!(rep.pass, "{}", rep.max_residual);
    }

    #[test]
    fn lifted_nontrivial_profiles_are_quasi_einstein() {
        for (form, w0, w2) in [(ProfileForm::F, 0.0, 0.4), (ProfileForm::U, 1.0, -0.2)] {
            let a = ProfileAnsatz::revolution(2.0, 1.0, form);
            let sol = integrate_ode(&a, &InitialData::regular_origin(w0, w2), 1.5, DEFAULT_STEP).unwrap();
            let inst = lift_solution(&sol).unwrap();
            let f = if form == ProfileForm::F { Form::F } else { Form::U };
            assert!(worst_qe(&inst, f, 50) <= 1e-6);
        }
        let a = ProfileAnsatz::warped(3, 1.0, 2.0, 1.0, ProfileForm::F);
        let sol = integrate_ode(&a, &InitialData::regular_origin(0.0, 0.3), 1.5, DEFAULT_STEP).unwrap();
        let inst = lift_solution(&sol).unwrap();
        assert!(worst_qe(&inst, Form::F, 30) <= 1e-6);
    }

    #[test]
    fn lift_rejects_truncated_solutions() {
        let a = ProfileAnsatz::revolution(2.0, 1.0, ProfileForm::F);
        let closed = integrate_ode(&a, &InitialData::regular_origin(0.0, 0.0), 4.0, DEFAULT_STEP).unwrap();
        assert!(matches!(lift_solution(&closed), Err(Error::IncompleteSolution(_))));
        let short = integrate_ode(&a, &InitialData::regular_origin(0.0, 0.0), 0.5, 0.1).unwrap();
        assert!(matches!(lift_solution(&short), Err(Error::InsufficientNodes(6))));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let a = ProfileAnsatz::line(2.0, -2.0, ProfileForm::U);
        let init = InitialData { r0: 0.0, phi: 1.0, dphi: 0.0, w: 1.0, dw: 0.0, w_second: 0.0 };
        let err = |h| (integrate_ode_ungated(&a, &init, 1.0, h).unwrap().w.last().unwrap() - 1f64.cosh()).abs();
        let ratio = err(0.1) / err(0.05);
        assert!((8.0..=32.0).contains(&ratio), "{}", ratio);
    }

    #[test]
    fn step_halving_gate() {
        let a = ProfileAnsatz::line(2.0, -2.0, ProfileForm::U);
        let init = InitialData { r0: 0.0, phi: 1.0, dphi: 0.0, w: 1.0, dw: 0.0, w_second: 0.0 };
        assert!(matches!(integrate_ode(&a, &init, 10.0, 0.5), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn m1_trajectories_have_constant_scalar_curvature() {
        let lambda = 0.8;
        let a = ProfileAnsatz::revolution(1.0, lambda, ProfileForm::F);
        let sol = integrate_ode(&a, &InitialData::regular_origin(0.0, lambda / 2.0), 2.0, DEFAULT_STEP).unwrap();
        let worst = sol.scalar_curvature().unwrap().iter().map(|(_, r)| (r - lambda).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-7, "{}", worst);
        // with μ ≠ 0 the scalar curvature is not constant
        let off = integrate_ode(&a, &InitialData::regular_origin(0.0, 0.1), 2.0, DEFAULT_STEP).unwrap();
        let spread = off.scalar_curvature().unwrap().iter().map(|(_, r)| (r - lambda).abs()).fold(0.0, f64::max);
        assert!(spread > 1e-3);
    }

    #[test]
    fn shooting_scan() {
        let rep = shoot_closed_surface(2.0, 1.0, (-1.0, 1.0), 41);
        assert!(rep.valid);
        assert!(rep.trivial_defect <= 1e-6, "{}", rep.trivial_defect);
        assert!((rep.l - std::f64::consts::PI).abs() < 1e-8);
        assert_eq!(rep.samples.len(), 41);
        assert!(rep.min_nontrivial_defect > 1e-2, "{}", rep.min_nontrivial_defect);
        assert!(rep.continuity_ok);
        assert!(!shoot_closed_surface(0.5, 1.0, (-1.0, 1.0), 5).valid);
        assert!(!shoot_closed_surface(2.0, -1.0, (-1.0, 1.0), 5).valid);
    }

    #[test]
    fn exponential_family() {
        let pts = sample_box(&[(-1.0, 1.0); 2], 30, DEFAULT_SEED);
        let r = exponential_solution_check(2, 1.0, -1.0, &pts, 1e-8).unwrap();
        assert!((r.a - 1.0).abs() < 1e-15 && (r.lambda + 2.0).abs() < 1e-15);
        assert!(r.pass, "{:?}", (r.einstein.max_residual, r.hess_u.max_residual, r.qe.max_residual));
        let pts = sample_box(&[(-1.0, 1.0); 3], 30, DEFAULT_SEED);
        let r = exponential_solution_check(3, 2.0, -2.0, &pts, 1e-8).unwrap();
        assert!((r.lambda + 4.0).abs() < 1e-15);
        assert!(r.pass && r.combined().pass);
        assert!(matches!(exponential_solution_check(2, 1.0, 0.5, &pts, 1e-8), Err(Error::InconsistentConstants(_))));
    }
}
