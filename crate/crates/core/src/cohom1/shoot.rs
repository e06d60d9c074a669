use rayon::prelude::*;
use serde::Serialize;

use super::ode::{integrate_ode_ungated, InitialData, OdeStatus, ProfileAnsatz, ProfileForm};
use super::DEFAULT_STEP;

/// Terminal status of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotStatus {
    Closed,
    NoClosure,
    BlowUp,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotRecord {
    /// Initial second derivative of the potential, `f''(0)`.
    pub c: f64,
    /// `sqrt((φ'(L)+1)² + f'(L)²)`, infinite when the profile never closes.
    pub defect: f64,
    /// `φ'(L) + 1`
    pub signed: f64,
    pub status: ShotStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingReport {
    pub m: f64,
    pub lambda: f64,
    /// False when the request was outside `λ > 0, m ≥ 1`; nothing was run.
    pub valid: bool,
    /// Defect of the constant-potential branch.
    pub trivial_defect: f64,
    /// Closure radius of the constant-potential branch.
    #[serde(rename = "L")]
    pub l: f64,
    pub samples: Vec<ShotRecord>,
    pub min_nontrivial_defect: f64,
    /// No sign change of `φ'(L)+1` between neighbours unless both are small.
    pub continuity_ok: bool,
    pub blow_ups: usize,
}

fn shoot(m: f64, lambda: f64, c: f64) -> ShotRecord {
    let ansatz = ProfileAnsatz::revolution(m, lambda, ProfileForm::F);
    let r_max = 4.0 * std::f64::consts::PI / lambda.sqrt();
    let failed = ShotRecord { c, defect: f64::INFINITY, signed: f64::NAN, status: ShotStatus::Failed, closure_r: None };
    let Ok(sol) = integrate_ode_ungated(&ansatz, &InitialData::regular_origin(0.0, c), r_max, DEFAULT_STEP) else {
        return failed;
    };
    match (sol.status, sol.closure) {
        (OdeStatus::PhiZero { r }, Some(s)) => {
            let signed = s[1] + 1.0;
            let defect = signed.hypot(s[3]);
            let status = if defect.is_finite() { ShotStatus::Closed } else { ShotStatus::BlowUp };
            ShotRecord { c, defect, signed, status, closure_r: Some(r) }
        }
        (OdeStatus::BlowUp { .. }, _) => ShotRecord { status: ShotStatus::BlowUp, ..failed },
        _ => ShotRecord { status: ShotStatus::NoClosure, ..failed },
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

fn continuity(samples: &[ShotRecord]) -> bool {
    let s: Vec<f64> = samples.iter().map(|r| r.signed).filter(|x| x.is_finite()).collect();
    let scale = 4.0 * median(s.windows(2).map(|w| (w[1] - w[0]).abs()).collect());
    s.windows(2).all(|w| w[0].signum() == w[1].signum() || (w[0].abs() <= scale && w[1].abs() <= scale))
}

/// Scan smooth surfaces of revolution `dr² + φ²dθ²` with a regular origin
/// and potential `f = c r²/2 + …`, and record how far each fails to close
/// smoothly at its first zero of `φ`.
///
/// The scan uses `c = lo + (hi - lo) k / samples` for `k < samples`; values
/// with `c = 0` are dropped, since that is the trivial branch, reported
/// separately.
pub fn shoot_closed_surface(m: f64, lambda: f64, range: (f64, f64), samples: usize) -> ShootingReport {
    let mut report = ShootingReport {
        m,
        lambda,
        valid: false,
        trivial_defect: f64::INFINITY,
        l: f64::NAN,
        samples: Vec::new(),
        min_nontrivial_defect: f64::INFINITY,
        continuity_ok: false,
        blow_ups: 0,
    };
    if !(lambda > 0.0 && lambda.is_finite() && m >= 1.0 && m.is_finite()) {
        return report;
    }
    report.valid = true;
    let trivial = shoot(m, lambda, 0.0);
    report.trivial_defect = trivial.defect;
    report.l = trivial.closure_r.unwrap_or(f64::NAN);
    let (lo, hi) = range;
    let cs: Vec<f64> = (0..samples)
        .map(|k| lo + (hi - lo) * k as f64 / samples as f64)
        .filter(|&c| c != 0.0)
        .collect();
    report.samples = cs.par_iter().map(|&c| shoot(m, lambda, c)).collect();
    report.min_nontrivial_defect = report.samples.iter().map(|r| r.defect).fold(f64::INFINITY, f64::min);
    report.blow_ups = report.samples.iter().filter(|r| r.status == ShotStatus::BlowUp).count();
    report.continuity_ok = continuity(&report.samples);
    report
}
