use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expression, Program};

/// Cohomogeneity-one profile ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AnsatzKind {
    /// `g = dx²`, potential of `x`.
    Line,
    /// `g = dr² + φ(r)² dθ²`.
    Revolution,
    /// `g = dr² + φ(r)² g_N` over an (n-1)-dimensional Einstein fiber.
    WarpedOverEinstein,
}

/// Which potential the profile equations are written for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileForm {
    F,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileAnsatz {
    pub kind: AnsatzKind,
    /// Total dimension; forced to 1 for lines and 2 for surfaces of revolution.
    pub n: usize,
    pub m: f64,
    pub lambda: f64,
    /// Einstein constant of the fiber `N`; zero for surfaces of revolution.
    pub rho: f64,
    pub form: ProfileForm,
}

impl ProfileAnsatz {
    pub fn line(m: f64, lambda: f64, form: ProfileForm) -> Self {
        ProfileAnsatz { kind: AnsatzKind::Line, n: 1, m, lambda, rho: 0.0, form }
    }

    pub fn revolution(m: f64, lambda: f64, form: ProfileForm) -> Self {
        ProfileAnsatz { kind: AnsatzKind::Revolution, n: 2, m, lambda, rho: 0.0, form }
    }

    pub fn warped(n: usize, rho: f64, m: f64, lambda: f64, form: ProfileForm) -> Self {
        ProfileAnsatz { kind: AnsatzKind::WarpedOverEinstein, n, m, lambda, rho, form }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::UnsupportedAnsatz(format!("m must be finite and positive, got {}", self.m)));
        }
        match self.kind {
            AnsatzKind::Line if self.n != 1 => Err(Error::UnsupportedAnsatz("a line has n = 1".into())),
            AnsatzKind::Revolution if self.n != 2 || self.rho != 0.0 => {
                Err(Error::UnsupportedAnsatz("a surface of revolution has n = 2 and rho = 0".into()))
            }
            AnsatzKind::WarpedOverEinstein if self.n < 2 => {
                Err(Error::UnsupportedAnsatz("a warped ansatz needs n >= 2".into()))
            }
            AnsatzKind::WarpedOverEinstein if self.n == 2 && self.rho != 0.0 => {
                Err(Error::UnsupportedAnsatz("a 1-dimensional fiber has rho = 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Name of the potential variable, `f` or `u`.
    pub fn potential_name(&self) -> &'static str {
        match self.form {
            ProfileForm::F => "f",
            ProfileForm::U => "u",
        }
    }
}

/// Right-hand side of the second-order profile system, as expressions in
/// `r, phi, phi_p` and the potential with its derivative (`f, f_p` or
/// `u, u_p`).
#[derive(Debug, Clone)]
pub struct ReducedOde {
    pub ansatz: ProfileAnsatz,
    pub variables: Vec<String>,
    pub phi_pp: Expression,
    pub w_pp: Expression,
    program: Program,
}

/// Write the quasi-Einstein equation in the ansatz and solve the radial and
/// fiber components for the second derivatives.
///
/// With `Ric_rr = -(n-1)φ''/φ`, `Ric|_N = (ρ - φφ'' - (n-2)φ'²) g_N` and
/// `Hess w|_N = φφ'w' g_N`:
///
/// f-form: `φ'' = (ρ - (n-2)φ'²)/φ + φ'f' - λφ`, `f'' = λ + (n-1)φ''/φ + f'²/m`
///
/// u-form: `φ'' = (ρ - (n-2)φ'²)/φ - mφ'u'/u - λφ`, `u'' = -(u/m)(λ + (n-1)φ''/φ)`
pub fn reduce_ode(ansatz: &ProfileAnsatz) -> Result<ReducedOde> {
    ansatz.validate()?;
    let w_name = ansatz.potential_name();
    let variables: Vec<String> =
        ["r", "phi", "phi_p", w_name, &format!("{}_p", w_name)].iter().map(|s| s.to_string()).collect();
    let c = Expression::constant;
    let phi = Expression::coord("phi");
    let dphi = Expression::coord("phi_p");
    let w = Expression::coord(w_name);
    let dw = Expression::coord(&variables[4]);
    let (m, lambda, n) = (ansatz.m, ansatz.lambda, ansatz.n as f64);

    let (phi_pp, w_pp) = if ansatz.kind == AnsatzKind::Line {
        let w_pp = match ansatz.form {
            ProfileForm::F => c(lambda) + Expression::powi(dw, 2) / c(m),
            ProfileForm::U => c(-lambda / m) * w,
        };
        (Expression::zero(), w_pp)
    } else {
        let fiber = (c(ansatz.rho) - c(n - 2.0) * Expression::powi(dphi.clone(), 2)) / phi.clone();
        let phi_pp = match ansatz.form {
            ProfileForm::F => fiber + dphi * dw.clone() - c(lambda) * phi.clone(),
            ProfileForm::U => fiber - c(m) * dphi * dw.clone() / w.clone() - c(lambda) * phi.clone(),
        };
        let ratio = c(n - 1.0) * phi_pp.clone() / phi;
        let w_pp = match ansatz.form {
            ProfileForm::F => c(lambda) + ratio + Expression::powi(dw, 2) / c(m),
            ProfileForm::U => Expression::neg(w / c(m) * (c(lambda) + ratio)),
        };
        (phi_pp, w_pp)
    };
    let program = Program::compile(&[phi_pp.clone(), w_pp.clone()], &variables, &|_| None)?;
    Ok(ReducedOde { ansatz: *ansatz, variables, phi_pp, w_pp, program })
}

impl ReducedOde {
    /// `(φ'', w'')` at radius `r` and state `[φ, φ', w, w']`.
    pub fn second_derivatives(&self, r: f64, s: &[f64; 4]) -> Result<(f64, f64)> {
        let v = self.program.eval(&[r, s[0], s[1], s[2], s[3]])?;
        Ok((v[0], v[1]))
    }

    fn rhs(&self, r: f64, s: &[f64; 4]) -> Option<[f64; 4]> {
        let (a, b) = self.second_derivatives(r, s).ok()?;
        let d = [s[1], a, s[3], b];
        d.iter().all(|x| x.is_finite()).then_some(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OdeStatus {
    ReachedEnd,
    /// `φ` reached zero at `r` (root refined between grid points).
    PhiZero { r: f64 },
    /// State exceeded 1e8, became non-finite, or `u` left the positive range.
    BlowUp { r: f64 },
}

/// Initial data. At a regular origin (`phi = 0`, `dphi = 1`, `dw = 0`) the
/// free parameter of the smooth family is `w_second`, the second derivative
/// of the potential there; otherwise it is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    #[serde(default)]
    pub r0: f64,
    pub phi: f64,
    pub dphi: f64,
    pub w: f64,
    pub dw: f64,
    #[serde(default)]
    pub w_second: f64,
}

impl InitialData {
    pub fn regular_origin(w: f64, w_second: f64) -> Self {
        InitialData { r0: 0.0, phi: 0.0, dphi: 1.0, w, dw: 0.0, w_second }
    }

    fn is_regular_origin(&self) -> bool {
        self.phi == 0.0 && self.dphi == 1.0 && self.dw == 0.0
    }
}

/// Sampled profile on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeSolution {
    pub ansatz: ProfileAnsatz,
    pub h: f64,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    pub status: OdeStatus,
    /// Largest state difference against the half-step run.
    pub drift: f64,
    /// State `[φ, φ', w, w']` at the refined zero of `φ`, when it closed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure: Option<[f64; 4]>,
}

/// Step-halving drift above which a run is rejected.
pub const DRIFT_LIMIT: f64 = 1e-4;
const BLOW_UP: f64 = 1e8;

fn rk4_step(ode: &ReducedOde, r: f64, s: &[f64; 4], h: f64) -> Option<[f64; 4]> {
    let add = |a: &[f64; 4], k: &[f64; 4], t: f64| -> [f64; 4] { std::array::from_fn(|i| a[i] + t * k[i]) };
    let k1 = ode.rhs(r, s)?;
    let k2 = ode.rhs(r + h / 2.0, &add(s, &k1, h / 2.0))?;
    let k3 = ode.rhs(r + h / 2.0, &add(s, &k2, h / 2.0))?;
    let k4 = ode.rhs(r + h, &add(s, &k3, h))?;
    Some(std::array::from_fn(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

/// Regular-origin Taylor start at radius `h` for free parameter `c = f''(0)`:
/// `φ = h + p h³ + q h⁵`, `f = f0 + c h²/2 + d h⁴/4`.
fn origin_series(a: &ProfileAnsatz, f0: f64, c: f64, h: f64) -> [f64; 4] {
    let (n, m, lambda) = (a.n as f64, a.m, a.lambda);
    let p = (c - lambda) / (6.0 * (n - 1.0));
    let big_a = -3.0 * (n - 2.0) * p * p + 3.0 * p * c - lambda * p;
    let d = n / (n + 2.0) * ((n - 1.0) * (2.0 * big_a / n - 6.0 * p * p) + c * c / m);
    let q = (big_a + d) / (10.0 * n);
    let (h2, h3) = (h * h, h * h * h);
    [
        h + p * h3 + q * h3 * h2,
        1.0 + 3.0 * p * h2 + 5.0 * q * h2 * h2,
        f0 + c * h2 / 2.0 + d * h2 * h2 / 4.0,
        c * h + d * h3,
    ]
}

fn usable(a: &ProfileAnsatz, s: &[f64; 4]) -> bool {
    s.iter().all(|x| x.is_finite() && x.abs() <= BLOW_UP) && (a.form == ProfileForm::F || s[2] > 0.0)
}

fn run(ode: &ReducedOde, init: &InitialData, r_max: f64, h: f64) -> Result<OdeSolution> {
    let a = &ode.ansatz;
    let steps = ((r_max - init.r0) / h).round().max(1.0) as usize;
    let h = (r_max - init.r0) / steps as f64;
    let mut sol = OdeSolution {
        ansatz: *a,
        h,
        r: vec![init.r0],
        phi: vec![init.phi],
        dphi: vec![init.dphi],
        w: vec![init.w],
        dw: vec![init.dw],
        status: OdeStatus::ReachedEnd,
        drift: 0.0,
        closure: None,
    };
    let line = a.kind == AnsatzKind::Line;
    let mut s = [init.phi, init.dphi, init.w, init.dw];
    let mut first = 0;
    if !line && init.is_regular_origin() {
        if (a.rho - (a.n as f64 - 2.0)).abs() > 1e-12 {
            return Err(Error::UnsupportedAnsatz(
                "a regular origin needs the unit-sphere fiber constant rho = n - 2".into(),
            ));
        }
        s = match a.form {
            ProfileForm::F => origin_series(a, init.w, init.w_second, h),
            ProfileForm::U => {
                if init.w <= 0.0 {
                    return Err(Error::UnsupportedAnsatz("u must be positive at the origin".into()));
                }
                let f0 = -a.m * init.w.ln();
                let c = -a.m * init.w_second / init.w;
                let [p, dp, f, df] = origin_series(a, f0, c, h);
                let u = (-f / a.m).exp();
                [p, dp, u, -df / a.m * u]
            }
        };
        sol.push(init.r0 + h, &s);
        first = 1;
    } else if !line && init.phi <= 0.0 {
        return Err(Error::UnsupportedAnsatz("phi must be positive away from a regular origin".into()));
    }
    for k in first..steps {
        let r = init.r0 + k as f64 * h;
        let next = rk4_step(ode, r, &s, h).filter(|n| usable(a, n));
        let Some(next) = next else {
            sol.status = OdeStatus::BlowUp { r: r + h };
            return Ok(sol);
        };
        if !line && next[0] <= 0.0 {
            let (t, state) = refine_zero(ode, r, &s, h, next);
            sol.status = OdeStatus::PhiZero { r: r + t };
            sol.closure = Some(state);
            return Ok(sol);
        }
        s = next;
        sol.push(init.r0 + (k + 1) as f64 * h, &s);
    }
    Ok(sol)
}

/// Secant iteration on the step length for the root of `φ`; returns the
/// step and the state there.
fn refine_zero(ode: &ReducedOde, r: f64, s: &[f64; 4], h: f64, end: [f64; 4]) -> (f64, [f64; 4]) {
    let (mut t0, mut p0) = (0.0, s[0]);
    let (mut t1, mut p1) = (h, end[0]);
    let mut state = end;
    for _ in 0..40 {
        if (p1 - p0).abs() < 1e-300 {
            break;
        }
        let t = (t1 - (p1 * (t1 - t0) / (p1 - p0))).clamp(0.0, h);
        let Some(st) = rk4_step(ode, r, s, t) else { break };
        t0 = t1;
        p0 = p1;
        t1 = t;
        p1 = st[0];
        state = st;
        if p1.abs() < 1e-15 || (t1 - t0).abs() < 1e-16 {
            break;
        }
    }
    (t1, state)
}

impl OdeSolution {
    fn push(&mut self, r: f64, s: &[f64; 4]) {
        self.r.push(r);
        self.phi.push(s[0]);
        self.dphi.push(s[1]);
        self.w.push(s[2]);
        self.dw.push(s[3]);
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn state(&self, i: usize) -> [f64; 4] {
        [self.phi[i], self.dphi[i], self.w[i], self.dw[i]]
    }

    /// Scalar curvature along the trajectory from the profile,
    /// `R = -2(n-1)φ''/φ + (n-1)(ρ - (n-2)φ'²)/φ²`; zero for lines. Points
    /// with `φ = 0` are skipped.
    pub fn scalar_curvature(&self) -> Result<Vec<(f64, f64)>> {
        let a = &self.ansatz;
        if a.kind == AnsatzKind::Line {
            return Ok(self.r.iter().map(|&r| (r, 0.0)).collect());
        }
        let ode = reduce_ode(a)?;
        let n = a.n as f64;
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let s = self.state(i);
            if s[0] <= 0.0 {
                continue;
            }
            let (phi_pp, _) = ode.second_derivatives(self.r[i], &s)?;
            let r = -2.0 * (n - 1.0) * phi_pp / s[0] + (n - 1.0) * (a.rho - (n - 2.0) * s[1] * s[1]) / (s[0] * s[0]);
            out.push((self.r[i], r));
        }
        Ok(out)
    }
}

/// Fixed-step RK4 integration from `init` to `r_max`.
///
/// The run is repeated with `h/2`; if the states disagree by more than
/// [`DRIFT_LIMIT`] (relative to `1 + |state|`) on the common grid the step
/// is rejected. For runs that stop early the final tenth of the common
/// range is excluded from the comparison.
pub fn integrate_ode(ansatz: &ProfileAnsatz, init: &InitialData, r_max: f64, h: f64) -> Result<OdeSolution> {
    if !(h > 0.0 && r_max > init.r0) {
        return Err(Error::UnsupportedAnsatz(format!(
            "need h > 0 and r_max > r0, got h = {}, [{}, {}]",
            h, init.r0, r_max
        )));
    }
    let ode = reduce_ode(ansatz)?;
    let mut sol = run(&ode, init, r_max, h)?;
    let half = run(&ode, init, r_max, sol.h / 2.0)?;
    let common = sol.len().min(half.len().div_ceil(2));
    let stopped = sol.status != OdeStatus::ReachedEnd || half.status != OdeStatus::ReachedEnd;
    let upto = if stopped { common * 9 / 10 } else { common };
    let mut drift: f64 = 0.0;
    for i in 0..upto {
        let (a, b) = (sol.state(i), half.state(2 * i));
        for k in 0..4 {
            drift = drift.max((a[k] - b[k]).abs() / (1.0 + a[k].abs()));
        }
    }
    if drift > DRIFT_LIMIT {
        return Err(Error::StepTooLarge { drift, limit: DRIFT_LIMIT });
    }
    sol.drift = drift;
    Ok(sol)
}

/// Integrate without the step-halving gate.
pub fn integrate_ode_ungated(ansatz: &ProfileAnsatz, init: &InitialData, r_max: f64, h: f64) -> Result<OdeSolution> {
    if !(h > 0.0 && r_max > init.r0) {
        return Err(Error::UnsupportedAnsatz("need h > 0 and r_max > r0".into()));
    }
    run(&reduce_ode(ansatz)?, init, r_max, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_reduction_and_cosh() {
        let a = ProfileAnsatz::line(2.0, -2.0, ProfileForm::U);
        let ode = reduce_ode(&a).unwrap();
        assert_eq!(ode.w_pp.to_string(), "u");
        let x: f64 = 0.7;
        let (_, upp) = ode.second_derivatives(x, &[1.0, 0.0, x.cosh(), x.sinh()]).unwrap();
        assert!((upp - x.cosh()).abs() < 1e-15);
        let sol = integrate_ode(&a, &InitialData { r0: 0.0, phi: 1.0, dphi: 0.0, w: 1.0, dw: 0.0, w_second: 0.0 }, 1.0, 1e-3)
            .unwrap();
        assert_eq!(sol.status, OdeStatus::ReachedEnd);
        assert!((sol.w.last().unwrap() - 1f64.cosh()).abs() < 1e-8);
        let f = reduce_ode(&ProfileAnsatz::line(2.0, -2.0, ProfileForm::F)).unwrap();
        // f = -2 log cosh x: f' = -2 tanh x, f'' = -2 sech² x = λ + f'²/m
        let (_, fpp) = f.second_derivatives(x, &[1.0, 0.0, 0.0, -2.0 * x.tanh()]).unwrap();
        assert!((fpp + 2.0 / x.cosh().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn revolution_with_constant_potential_is_a_sphere() {
        let a = ProfileAnsatz::revolution(2.0, 1.0, ProfileForm::F);
        let sol = integrate_ode(&a, &InitialData::regular_origin(0.0, 0.0), 3.0, 1e-3).unwrap();
        let worst = sol.r.iter().zip(&sol.phi).map(|(r, p)| (p - r.sin()).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "{}", worst);
        assert!(sol.w.iter().all(|&f| f == 0.0));
        let ode = reduce_ode(&a).unwrap();
        assert_eq!(ode.phi_pp.to_string(), "phi_p * f_p - phi");
    }

    #[test]
    fn closes_at_pi() {
        let a = ProfileAnsatz::revolution(2.0, 1.0, ProfileForm::F);
        let sol = integrate_ode(&a, &InitialData::regular_origin(0.0, 0.0), 4.0, 1e-3).unwrap();
        match sol.status {
            OdeStatus::PhiZero { r } => assert!((r - std::f64::consts::PI).abs() < 1e-9),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let a = ProfileAnsatz::line(2.0, -2.0, ProfileForm::F);
        let init = InitialData { r0: 0.0, phi: 1.0, dphi: 0.0, w: 0.0, dw: 10.0, w_second: 0.0 };
        let sol = integrate_ode_ungated(&a, &init, 2.0, 1e-3).unwrap();
        assert!(matches!(sol.status, OdeStatus::BlowUp { .. }));
        assert!(sol.len() < 2001);
    }

    #[test]
    fn u_form_origin_matches_f_form() {
        let (m, lambda, c) = (2.0, 1.0, 0.3);
        let f = integrate_ode(&ProfileAnsatz::revolution(m, lambda, ProfileForm::F), &InitialData::regular_origin(0.0, c), 1.5, 1e-3)
            .unwrap();
        let u = integrate_ode(
            &ProfileAnsatz::revolution(m, lambda, ProfileForm::U),
            &InitialData::regular_origin(1.0, -c / m),
            1.5,
            1e-3,
        )
        .unwrap();
        let last = f.len() - 1;
        assert!((f.phi[last] - u.phi[last]).abs() < 1e-9);
        assert!(((-f.w[last] / m).exp() - u.w[last]).abs() < 1e-9);
    }

    #[test]
    fn ansatz_validation() {
        assert!(reduce_ode(&ProfileAnsatz { n: 3, ..ProfileAnsatz::line(1.0, 0.0, ProfileForm::F) }).is_err());
        assert!(reduce_ode(&ProfileAnsatz::warped(2, 1.0, 1.0, 0.0, ProfileForm::F)).is_err());
        assert!(reduce_ode(&ProfileAnsatz::line(f64::INFINITY, 0.0, ProfileForm::F)).is_err());
        let bad = ProfileAnsatz::warped(3, 0.0, 2.0, 1.0, ProfileForm::F);
        assert!(integrate_ode(&bad, &InitialData::regular_origin(0.0, 0.0), 1.0, 1e-2).is_err());
    }
}
