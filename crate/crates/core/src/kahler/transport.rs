use serde::Serialize;

use super::checks::GRADIENT_FLOOR;
use super::structure::{KPoint, KahlerInstance};
use crate::error::{Error, Result};
use crate::expr::{Expression, Program};

/// A path `t ↦ γ(t)`, `t ∈ [0, 1]`, given by one expression in `t` per
/// coordinate.
#[derive(Debug, Clone)]
pub struct Curve {
    components: Vec<Expression>,
}

impl Curve {
    pub fn new(components: Vec<Expression>) -> Self {
        Curve { components }
    }

    /// Straight segment from `a` to `b` in coordinates.
    pub fn segment(a: &[f64], b: &[f64]) -> Self {
        let t = Expression::coord("t");
        let components = a
            .iter()
            .zip(b)
            .map(|(x, y)| Expression::constant(*x) + Expression::constant(y - x) * t.clone())
            .collect();
        Curve { components }
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportReport {
    pub label: String,
    pub steps: usize,
    /// Riemannian length of the curve.
    pub length: f64,
    /// Largest `|P(U(t)) - W(t)|` over the frame and the curve.
    pub max_drift: f64,
    pub drift_per_length: f64,
    pub tolerance: f64,
    pub pass: bool,
}

struct Sample {
    gamma: Vec<f64>,
    /// `Γ^i_jk γ'^j` at `i*n + k`
    conn: Vec<f64>,
    basis: [Vec<f64>; 2],
    gram_inv: [[f64; 2]; 2],
    k: KPoint,
}

impl Sample {
    fn at(inst: &KahlerInstance, prog: &Program, t: f64) -> Result<Sample> {
        let n = inst.dim();
        let v = prog.eval(&[t])?;
        let (gamma, vel) = (v[..n].to_vec(), v[n..].to_vec());
        if !inst.base().chart().contains(&gamma) {
            return Err(Error::InvalidInstance(format!("curve leaves the chart at t = {}", t)));
        }
        let k = KPoint::new(inst, &gamma)?;
        let mut conn = vec![0.0; n * n];
        for i in 0..n {
            for c in 0..n {
                conn[i * n + c] = (0..n).map(|j| k.gamma(i, j, c) * vel[j]).sum();
            }
        }
        let grad = k.raise(&k.du);
        let jgrad = k.apply_j(&grad);
        let (a, b, d) = (k.dot(&grad, &grad), k.dot(&grad, &jgrad), k.dot(&jgrad, &jgrad));
        let det = a * d - b * b;
        if a.sqrt() <= GRADIENT_FLOOR || det <= GRADIENT_FLOOR.powi(4) {
            return Err(Error::DegenerateGradient(gamma));
        }
        let gram_inv = [[d / det, -b / det], [-b / det, a / det]];
        Ok(Sample { gamma, conn, basis: [grad, jgrad], gram_inv, k })
    }

    /// Orthogonal projection onto `span{∇u, J∇u}`.
    fn project(&self, u: &[f64]) -> Vec<f64> {
        let r = [self.k.dot(u, &self.basis[0]), self.k.dot(u, &self.basis[1])];
        let c0 = self.gram_inv[0][0] * r[0] + self.gram_inv[0][1] * r[1];
        let c1 = self.gram_inv[1][0] * r[0] + self.gram_inv[1][1] * r[1];
        self.basis[0].iter().zip(&self.basis[1]).map(|(x, y)| c0 * x + c1 * y).collect()
    }

    /// `U' = -Γ(γ')U` for each vector in the stack.
    fn rate(&self, state: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.gamma.len();
        state
            .iter()
            .map(|u| (0..n).map(|i| -(0..n).map(|c| self.conn[i * n + c] * u[c]).sum::<f64>()).collect())
            .collect()
    }

    fn speed(&self, prog: &Program, t: f64) -> Result<f64> {
        let n = self.gamma.len();
        let v = prog.eval(&[t])?;
        Ok(self.k.dot(&v[n..], &v[n..]).sqrt())
    }
}

fn axpy(a: &[Vec<f64>], k: &[Vec<f64>], s: f64) -> Vec<Vec<f64>> {
    a.iter().zip(k).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + s * q).collect()).collect()
}

/// Parallel-transport the coordinate frame `U_a` and its projections
/// `W_a = P(U_a)` onto `span{∇u, J∇u}` along `curve` with RK4, and measure
/// how far `P(U_a(t))` drifts from the transported `W_a(t)`.
pub fn parallel_distribution_check(
    inst: &KahlerInstance,
    curve: &Curve,
    steps: usize,
    tol: f64,
) -> Result<TransportReport> {
    let n = inst.dim();
    if curve.components.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "curve has {} components, instance dimension {}",
            curve.components.len(),
            n
        )));
    }
    if steps == 0 {
        return Err(Error::EmptySample);
    }
    let lite = inst.with_base(inst.base().to_builder().derivative_order(2).build()?)?;
    let mut exprs = curve.components.clone();
    exprs.extend(curve.components.iter().map(|c| c.differentiate("t")));
    let params = inst.base().params();
    let prog = Program::compile(&exprs, &["t".to_string()], &|name| params.get(name).copied())?;

    let h = 1.0 / steps as f64;
    let mut here = Sample::at(&lite, &prog, 0.0)?;
    let mut state: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|i| if i == a { 1.0 } else { 0.0 }).collect()).collect();
    let w0: Vec<Vec<f64>> = state.iter().map(|u| here.project(u)).collect();
    state.extend(w0);
    let mut max_drift: f64 = 0.0;
    let mut length = 0.0;
    let mut speed0 = here.speed(&prog, 0.0)?;
    for s in 0..steps {
        let t = s as f64 * h;
        let mid = Sample::at(&lite, &prog, t + h / 2.0)?;
        let next = Sample::at(&lite, &prog, t + h)?;
        let k1 = here.rate(&state);
        let k2 = mid.rate(&axpy(&state, &k1, h / 2.0));
        let k3 = mid.rate(&axpy(&state, &k2, h / 2.0));
        let k4 = next.rate(&axpy(&state, &k3, h));
        for (v, ((a, b), (c, d))) in state.iter_mut().zip(k1.iter().zip(&k2).zip(k3.iter().zip(&k4))) {
            for i in 0..n {
                v[i] += h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
            }
        }
        for a in 0..n {
            let p = next.project(&state[a]);
            let diff: Vec<f64> = p.iter().zip(&state[n + a]).map(|(x, y)| x - y).collect();
            max_drift = max_drift.max(next.k.dot(&diff, &diff).max(0.0).sqrt());
        }
        let (speed_mid, speed1) = (mid.speed(&prog, t + h / 2.0)?, next.speed(&prog, t + h)?);
        length += h / 6.0 * (speed0 + 4.0 * speed_mid + speed1);
        speed0 = speed1;
        here = next;
    }
    let drift_per_length = if length > 0.0 { max_drift / length } else { max_drift };
    Ok(TransportReport {
        label: inst.label().to_string(),
        steps,
        length,
        max_drift,
        drift_per_length,
        tolerance: tol,
        pass: drift_per_length <= tol,
    })
}
