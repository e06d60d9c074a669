use std::sync::Arc;

use nalgebra::DMatrix;

use super::instance::ChartInstance;
use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};

/// Metric, inverse metric, Christoffel symbols and Ricci curvature as
/// truncated Taylor expansions about one point.
///
/// With metric jets of order `K`, the inverse is exact to order `K`, the
/// Christoffel symbols to `K-1` and Ricci/scalar curvature to `K-2`.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    space: Arc<JetSpace>,
    n: usize,
    point: Vec<f64>,
    g: Vec<Jet>,
    ginv: Vec<Jet>,
    /// `gamma[(k*n + i)*n + j]` = Γ^k_ij
    gamma: Vec<Jet>,
    ricci: Vec<Jet>,
    scalar: Jet,
}

impl LocalGeometry {
    pub fn new(inst: &ChartInstance, p: &[f64]) -> Result<LocalGeometry> {
        let g = inst.metric_jets(p)?;
        LocalGeometry::from_metric(inst.space().clone(), p, g)
    }

    /// Build from a row-major `n×n` matrix of metric jets.
    pub fn from_metric(space: Arc<JetSpace>, p: &[f64], g: Vec<Jet>) -> Result<LocalGeometry> {
        let n = space.dim();
        assert_eq!(g.len(), n * n);
        let order = g.iter().map(Jet::order).min().unwrap_or(0);
        let g0 = DMatrix::from_fn(n, n, |i, j| g[i * n + j].value());
        if g0.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularMetric(p.to_vec()));
        }
        let chol = g0.clone().cholesky().ok_or_else(|| Error::SingularMetric(p.to_vec()))?;
        let g0inv = chol.inverse();

        // Neumann series: g^{-1} = Σ_k (-G0^{-1} D)^k G0^{-1}, D = g - G0.
        // D has no constant term, so K+1 terms are exact to order K.
        let mut x = vec![space.zero(order); n * n];
        for i in 0..n {
            for j in 0..n {
                let xij = &mut x[i * n + j];
                for l in 0..n {
                    let mut d = g[l * n + j].clone();
                    let c = d.coefficients()[0];
                    d.axpy(-c, &space.constant(1.0, order));
                    xij.axpy(-g0inv[(i, l)], &d);
                }
            }
        }
        let identity = |i: usize, j: usize| space.constant(if i == j { 1.0 } else { 0.0 }, order);
        let mut s: Vec<Jet> = (0..n * n).map(|k| identity(k / n, k % n)).collect();
        for _ in 0..order {
            let xs = matmul(&space, n, &x, &s);
            s = xs.iter().enumerate().map(|(k, v)| v.add(&identity(k / n, k % n))).collect();
        }
        let mut ginv = vec![space.zero(order); n * n];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    ginv[i * n + j].axpy(g0inv[(l, j)], &s[i * n + l]);
                }
            }
        }
        // symmetrize to remove rounding asymmetry
        for i in 0..n {
            for j in i + 1..n {
                let avg = ginv[i * n + j].add(&ginv[j * n + i]).scaled(0.5);
                ginv[i * n + j] = avg.clone();
                ginv[j * n + i] = avg;
            }
        }

        let mut geo = LocalGeometry {
            space: space.clone(),
            n,
            point: p.to_vec(),
            g,
            ginv,
            gamma: Vec::new(),
            ricci: Vec::new(),
            scalar: space.zero(0),
        };
        if order >= 1 {
            geo.gamma = geo.compute_gamma();
        } else {
            geo.gamma = vec![space.zero(0); n * n * n];
        }
        if order >= 2 {
            geo.ricci = geo.compute_ricci();
            geo.scalar = geo.trace(&geo.ricci);
        } else {
            geo.ricci = vec![space.zero(0); n * n];
        }
        Ok(geo)
    }

    fn compute_gamma(&self) -> Vec<Jet> {
        let n = self.n;
        let sp = &self.space;
        // dg[(i*n + j)*n + l] = ∂_i g_jl
        let mut dg = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for jl in 0..n * n {
                dg.push(sp.diff(&self.g[jl], i));
            }
        }
        let d = |i: usize, j: usize, l: usize| &dg[(i * n + j) * n + l];
        let order = dg[0].order();
        let mut lower = vec![sp.zero(order); n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = d(i, j, l).add(d(j, i, l)).sub(d(l, i, j)).scaled(0.5);
                    lower[(l * n + i) * n + j] = v.clone();
                    lower[(l * n + j) * n + i] = v;
                }
            }
        }
        let mut gamma = vec![sp.zero(order); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = sp.zero(order);
                    for l in 0..n {
                        acc = acc.add(&sp.mul(&self.ginv[k * n + l], &lower[(l * n + i) * n + j]));
                    }
                    gamma[(k * n + j) * n + i] = acc.clone();
                    gamma[(k * n + i) * n + j] = acc;
                }
            }
        }
        gamma
    }

    fn compute_ricci(&self) -> Vec<Jet> {
        let n = self.n;
        let sp = &self.space;
        let order = self.gamma[0].order() - 1;
        let gam: Vec<Jet> = self.gamma.iter().map(|j| j.truncated(order)).collect();
        let gm = |k: usize, i: usize, j: usize| &gam[(k * n + i) * n + j];
        // T_k = Γ^i_ik
        let mut trace = vec![sp.zero(self.gamma[0].order()); n];
        for (k, t) in trace.iter_mut().enumerate() {
            for i in 0..n {
                *t = t.add(self.christoffel_jet(i, i, k));
            }
        }
        let mut ric = vec![sp.zero(order); n * n];
        for j in 0..n {
            for k in 0..n {
                let mut acc = sp.diff(&trace[k], j).scaled(-1.0);
                for i in 0..n {
                    acc = acc.add(&sp.diff(self.christoffel_jet(i, j, k), i));
                    acc = acc.add(&sp.mul(&trace[i].truncated(order), gm(i, j, k)));
                    for m in 0..n {
                        acc = acc.sub(&sp.mul(gm(i, j, m), gm(m, i, k)));
                    }
                }
                ric[j * n + k] = acc;
            }
        }
        ric
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn metric(&self) -> &[Jet] {
        &self.g
    }

    pub fn inverse_metric(&self) -> &[Jet] {
        &self.ginv
    }

    pub fn christoffel_jet(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[(k * self.n + i) * self.n + j]
    }

    pub fn christoffel(&self) -> &[Jet] {
        &self.gamma
    }

    pub fn ricci(&self) -> &[Jet] {
        &self.ricci
    }

    pub fn scalar(&self) -> &Jet {
        &self.scalar
    }

    /// Riemann tensor values `R^l_ijk` at the base point, flattened as
    /// `((l*n + i)*n + j)*n + k`.
    pub fn riemann_values(&self) -> Vec<f64> {
        let n = self.n;
        let sp = &self.space;
        let gv = |k: usize, i: usize, j: usize| self.christoffel_jet(k, i, j).value();
        let dgam = |a: usize, k: usize, i: usize, j: usize| sp.diff(self.christoffel_jet(k, i, j), a).value();
        let mut out = vec![0.0; n * n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut v = dgam(i, l, j, k) - dgam(j, l, i, k);
                        for m in 0..n {
                            v += gv(l, i, m) * gv(m, j, k) - gv(l, j, m) * gv(m, i, k);
                        }
                        out[((l * n + i) * n + j) * n + k] = v;
                    }
                }
            }
        }
        out
    }

    /// `g^{ij} t_ij` for a row-major 2-tensor.
    pub fn trace(&self, t: &[Jet]) -> Jet {
        let order = t.iter().map(Jet::order).min().unwrap_or(0);
        let mut acc = self.space.zero(order);
        for (a, b) in self.ginv.iter().zip(t) {
            acc = acc.add(&self.space.mul(a, b));
        }
        acc
    }

    /// `∂_i h`.
    pub fn gradient(&self, h: &Jet) -> Vec<Jet> {
        (0..self.n).map(|i| self.space.diff(h, i)).collect()
    }

    /// Raise the index of a covector.
    pub fn raise(&self, w: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = self.space.zero(w[0].order());
                for j in 0..n {
                    acc = acc.add(&self.space.mul(&self.ginv[i * n + j], &w[j]));
                }
                acc
            })
            .collect()
    }

    /// `g^{ij} a_i b_j` for covectors.
    pub fn inner(&self, a: &[Jet], b: &[Jet]) -> Jet {
        let n = self.n;
        let order = a[0].order().min(b[0].order());
        let mut acc = self.space.zero(order);
        for i in 0..n {
            for j in 0..n {
                let ab = self.space.mul(&a[i], &b[j]);
                acc = acc.add(&self.space.mul(&self.ginv[i * n + j], &ab));
            }
        }
        acc
    }

    /// `Hess h_ij = ∂_i ∂_j h - Γ^k_ij ∂_k h`.
    pub fn hessian(&self, h: &Jet) -> Vec<Jet> {
        let n = self.n;
        let sp = &self.space;
        let dh = self.gradient(h);
        let mut out = vec![sp.zero(0); n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = sp.diff(&dh[j], i);
                for (k, dk) in dh.iter().enumerate() {
                    acc = acc.sub(&sp.mul(self.christoffel_jet(k, i, j), dk));
                }
                out[i * n + j] = acc.clone();
                out[j * n + i] = acc;
            }
        }
        out
    }

    /// `Δh = g^{ij} Hess h_ij`.
    pub fn laplacian(&self, h: &Jet) -> Jet {
        self.trace(&self.hessian(h))
    }

    /// `(div T)_j = g^{ik}(∂_i T_kj - Γ^l_ik T_lj - Γ^l_ij T_kl)`.
    pub fn divergence(&self, t: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        let sp = &self.space;
        let order = t.iter().map(Jet::order).min().unwrap_or(1) - 1;
        (0..n)
            .map(|j| {
                let mut acc = sp.zero(order);
                for i in 0..n {
                    for k in 0..n {
                        let mut c = sp.diff(&t[k * n + j], i);
                        for l in 0..n {
                            c = c.sub(&sp.mul(self.christoffel_jet(l, i, k), &t[l * n + j]));
                            c = c.sub(&sp.mul(self.christoffel_jet(l, i, j), &t[k * n + l]));
                        }
                        acc = acc.add(&sp.mul(&self.ginv[i * n + k], &c));
                    }
                }
                acc
            })
            .collect()
    }

    /// `T(v, ·)` for a 2-tensor and a vector: `v^i T_ij`.
    pub fn contract_first(&self, t: &[Jet], v: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        (0..n)
            .map(|j| {
                let mut acc = self.space.zero(t[0].order().min(v[0].order()));
                for i in 0..n {
                    acc = acc.add(&self.space.mul(&v[i], &t[i * n + j]));
                }
                acc
            })
            .collect()
    }

    /// `|T|² = g^{ia} g^{jb} T_ij T_ab`, value only.
    pub fn norm_sq_values(&self, t: &[f64]) -> f64 {
        let n = self.n;
        let gi: Vec<f64> = self.ginv.iter().map(Jet::value).collect();
        // raise both indices: S^{ab} = g^{ai} T_ij g^{jb}
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut up = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        up += gi[i * n + a] * gi[j * n + b] * t[a * n + b];
                    }
                }
                acc += up * t[i * n + j];
            }
        }
        acc
    }
}

fn matmul(space: &JetSpace, n: usize, a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    let order = a[0].order().min(b[0].order());
    let mut out = vec![space.zero(order); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = space.zero(order);
            for l in 0..n {
                acc = acc.add(&space.mul(&a[i * n + l], &b[l * n + j]));
            }
            out[i * n + j] = acc;
        }
    }
    out
}
