use super::structure::{kahler_certified, KPoint, KahlerInstance};
use crate::error::{Error, Result};
use crate::geometry::{TensorValue, Variance};
use crate::quasi_einstein::{map_points, max_qe_residual, ResidualReport, HYPOTHESIS_TOL};

/// Bound on the Kähler residuals for an instance to count as certified.
pub const KAHLER_CERT_TOL: f64 = 1e-9;
/// Gradients this small are treated as vanishing.
pub const GRADIENT_FLOOR: f64 = 1e-8;

/// `φ_ij = Hess u(J∂_i, ∂_j)` at `p`.
pub fn phi_form(inst: &KahlerInstance, p: &[f64]) -> Result<TensorValue> {
    let k = KPoint::new(inst, p)?;
    Ok(TensorValue::new(vec![Variance::Down, Variance::Down], k.n, k.phi(), p.to_vec()))
}

fn certified(inst: &KahlerInstance, points: &[Vec<f64>]) -> Result<bool> {
    let qe = max_qe_residual(inst.base(), points)?.is_some_and(|r| r <= HYPOTHESIS_TOL);
    Ok(qe && kahler_certified(inst, points, KAHLER_CERT_TOL)?)
}

/// Largest `|φ_ij + φ_ji|` at each point.
pub fn phi_antisymmetry_check(inst: &KahlerInstance, points: &[Vec<f64>], tol: f64) -> Result<ResidualReport> {
    let (res, skipped) = map_points(points, |p| {
        let k = KPoint::new(inst, p)?;
        let (n, phi) = (k.n, k.phi());
        Ok((0..n * n).map(|ij| (phi[ij] + phi[(ij % n) * n + ij / n]).abs()).fold(0.0, f64::max))
    })?;
    Ok(ResidualReport::new("phi_antisymmetry", inst.label(), res, skipped, tol)
        .with_hypothesis(kahler_certified(inst, points, KAHLER_CERT_TOL)?))
}

/// Components of `du ∧ φ` over increasing index triples.
pub fn wedge_vanishing_check(inst: &KahlerInstance, points: &[Vec<f64>], tol: f64) -> Result<ResidualReport> {
    let (res, skipped) = map_points(points, |p| {
        let k = KPoint::new(inst, p)?;
        let (n, phi, du) = (k.n, k.phi(), &k.du);
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let v = du[a] * phi[b * n + c] + du[b] * phi[c * n + a] + du[c] * phi[a * n + b];
                    worst = worst.max(v.abs());
                }
            }
        }
        Ok(worst)
    })?;
    Ok(ResidualReport::new("wedge", inst.label(), res, skipped, tol).with_hypothesis(certified(inst, points)?))
}

fn normalize(k: &KPoint, v: &[f64]) -> Option<Vec<f64>> {
    let norm = k.dot(v, v).sqrt();
    (norm > 1e-10).then(|| v.iter().map(|x| x / norm).collect())
}

/// Component of `v` orthogonal to the unit vector `e`.
fn off_axis(k: &KPoint, v: &[f64], e: &[f64]) -> f64 {
    let c = k.dot(v, e);
    let w: Vec<f64> = v.iter().zip(e).map(|(a, b)| a - c * b).collect();
    k.dot(&w, &w).max(0.0).sqrt()
}

/// Orthonormal basis seeded with `∇u`, `J∇u`, then the coordinate vectors.
fn adapted_basis(k: &KPoint, grad: &[f64], jgrad: &[f64]) -> Vec<Vec<f64>> {
    let n = k.n;
    let mut seeds = vec![grad.to_vec(), jgrad.to_vec()];
    seeds.extend((0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()));
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    for s in seeds {
        if basis.len() == n {
            break;
        }
        let mut v = s;
        for e in &basis {
            let c = k.dot(&v, e);
            v.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
        }
        if let Some(e) = normalize(k, &v) {
            basis.push(e);
        }
    }
    basis
}

/// `∇_X∇u ∥ ∇u` for `X = ∇u` and `∇_X∇u ∥ J∇u` for `X ⊥ ∇u`, tested on
/// an orthonormal basis adapted to `∇u`.
pub fn directional_hessian_check(inst: &KahlerInstance, points: &[Vec<f64>], tol: f64) -> Result<ResidualReport> {
    let (res, skipped) = map_points(points, |p| {
        let k = KPoint::new(inst, p)?;
        let grad = k.raise(&k.du);
        if k.dot(&grad, &grad).sqrt() <= GRADIENT_FLOOR {
            return Err(Error::DegenerateGradient(p.to_vec()));
        }
        let jgrad = k.apply_j(&grad);
        let e_grad = normalize(&k, &grad).expect("nonzero gradient");
        let e_j = normalize(&k, &jgrad).ok_or_else(|| Error::DegenerateGradient(p.to_vec()))?;
        let n = k.n;
        let mut worst: f64 = 0.0;
        for (idx, x) in adapted_basis(&k, &grad, &jgrad).iter().enumerate() {
            let hx: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k.hess[i * n + j] * x[j]).sum()).collect();
            let v = k.raise(&hx);
            let axis = if idx == 0 { &e_grad } else { &e_j };
            worst = worst.max(off_axis(&k, &v, axis));
        }
        Ok(worst)
    })?;
    Ok(ResidualReport::new("directional_hessian", inst.label(), res, skipped, tol)
        .with_hypothesis(certified(inst, points)?))
}
