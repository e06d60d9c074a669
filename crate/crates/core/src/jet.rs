//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients `c_α = ∂^α F(p) / α!` of a
//! scalar field about a base point for every multi-index with `|α| ≤ K`.
//! Products, quotients and coordinate derivatives of jets are exact up to
//! the tracked order, so curvature quantities built from jets of the metric
//! carry exact derivatives without any finite differencing.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_rational::Rational64;

use crate::expr::{EvalError, Expression, Func, Node};

/// Monomial bookkeeping for `n` variables up to total degree `order`.
#[derive(Debug)]
pub struct JetSpace {
    n: usize,
    order: usize,
    monomials: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `(a, b, a+b)` index triples, sorted by the degree of `a+b`.
    mul: Vec<(u32, u32, u32)>,
    /// `mul_end[d]` = number of triples whose product has degree ≤ d.
    mul_end: Vec<usize>,
    /// `len_upto[d]` = number of monomials of degree ≤ d.
    len_upto: Vec<usize>,
    /// Per variable `i`: `(α, α - e_i, α_i)` for every α containing `x_i`.
    deriv: Vec<Vec<(u32, u32, f64)>>,
    factorial: Vec<f64>,
}

impl JetSpace {
    pub fn new(n: usize, order: usize) -> Arc<JetSpace> {
        let mut monomials: Vec<Vec<u8>> = vec![vec![0; n]];
        let mut len_upto = vec![1];
        let mut frontier = vec![vec![0u8; n]];
        for _ in 1..=order {
            let mut next = Vec::new();
            for m in &frontier {
                // extend only at or after the last nonzero slot so every
                // monomial is generated exactly once
                let last = m.iter().rposition(|&e| e > 0).unwrap_or(0);
                for i in last..n {
                    let mut mm = m.clone();
                    mm[i] += 1;
                    next.push(mm);
                }
            }
            next.sort_by(|a, b| b.cmp(a));
            monomials.extend(next.iter().cloned());
            len_upto.push(monomials.len());
            frontier = next;
        }
        let index: HashMap<Vec<u8>, usize> =
            monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let degree: Vec<usize> = monomials.iter().map(|m| m.iter().map(|&e| e as usize).sum()).collect();

        let mut mul = Vec::new();
        for (a, ma) in monomials.iter().enumerate() {
            for (b, mb) in monomials.iter().enumerate() {
                if degree[a] + degree[b] > order {
                    continue;
                }
                let sum: Vec<u8> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                mul.push((a as u32, b as u32, index[&sum] as u32));
            }
        }
        mul.sort_by_key(|&(a, b, _)| (degree[a as usize] + degree[b as usize], a, b));
        let mul_end = (0..=order)
            .map(|d| mul.iter().filter(|&&(a, b, _)| degree[a as usize] + degree[b as usize] <= d).count())
            .collect();

        let mut deriv = vec![Vec::new(); n];
        for (a, ma) in monomials.iter().enumerate() {
            for (i, d) in deriv.iter_mut().enumerate() {
                if ma[i] > 0 {
                    let mut lower = ma.clone();
                    lower[i] -= 1;
                    d.push((a as u32, index[&lower] as u32, ma[i] as f64));
                }
            }
        }
        let factorial = monomials
            .iter()
            .map(|m| m.iter().map(|&e| (1..=e as u64).product::<u64>() as f64).product())
            .collect();

        Arc::new(JetSpace { n, order, monomials, index, mul, mul_end, len_upto, deriv, factorial })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Vec<u8>] {
        &self.monomials
    }

    pub fn monomial_index(&self, exponents: &[u8]) -> Option<usize> {
        self.index.get(exponents).copied()
    }

    pub fn constant(&self, v: f64, order: usize) -> Jet {
        let mut c = vec![0.0; self.len()];
        c[0] = v;
        Jet { c, order }
    }

    pub fn zero(&self, order: usize) -> Jet {
        self.constant(0.0, order)
    }

    /// The coordinate function `x_i` expanded about base value `at`.
    pub fn variable(&self, i: usize, at: f64) -> Jet {
        let mut j = self.constant(at, self.order);
        if self.order > 0 {
            let mut e = vec![0u8; self.n];
            e[i] = 1;
            j.c[self.index[&e]] = 1.0;
        }
        j
    }

    /// Build a jet from raw partial derivatives `∂^α F`, one per monomial in
    /// this space's ordering (only the first `len_upto(order)` are read).
    pub fn from_partials(&self, partials: &[f64], order: usize) -> Jet {
        let mut c = vec![0.0; self.len()];
        let k = self.len_upto[order.min(self.order)];
        for i in 0..k {
            c[i] = partials[i] / self.factorial[i];
        }
        Jet { c, order: order.min(self.order) }
    }

    /// Raw partial derivative `∂^α F` read back from the coefficients.
    pub fn partial(&self, j: &Jet, exponents: &[u8]) -> f64 {
        let i = self.index[exponents];
        j.c[i] * self.factorial[i]
    }

    pub fn mul(&self, a: &Jet, b: &Jet) -> Jet {
        let order = a.order.min(b.order);
        let mut c = vec![0.0; self.len()];
        for &(i, k, r) in &self.mul[..self.mul_end[order]] {
            c[r as usize] += a.c[i as usize] * b.c[k as usize];
        }
        Jet { c, order }
    }

    /// `∂_i` of a jet; the result is valid to one order less.
    pub fn diff(&self, a: &Jet, i: usize) -> Jet {
        assert!(a.order > 0, "differentiating an order-0 jet");
        let order = a.order - 1;
        let mut c = vec![0.0; self.len()];
        let limit = self.len_upto[a.order];
        for &(src, dst, factor) in &self.deriv[i] {
            if (src as usize) < limit {
                c[dst as usize] = factor * a.c[src as usize];
            }
        }
        Jet { c, order }
    }

    /// Σ_k coeffs[k] · δ^k where δ = a - a(p); `coeffs[k] = φ^(k)(a0)/k!`.
    fn series(&self, a: &Jet, coeffs: &[f64]) -> Jet {
        let mut delta = a.clone();
        delta.c[0] = 0.0;
        let mut out = self.constant(coeffs[0], a.order);
        let mut power = self.constant(1.0, a.order);
        for &ck in coeffs.iter().take(a.order + 1).skip(1) {
            power = self.mul(&power, &delta);
            out.axpy(ck, &power);
        }
        out
    }

    /// Compose a univariate function with derivatives `derivs[k] = φ^(k)(a0)`.
    pub fn compose(&self, a: &Jet, derivs: &[f64]) -> Jet {
        let mut fact = 1.0;
        let coeffs: Vec<f64> = derivs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        self.series(a, &coeffs)
    }

    pub fn recip(&self, a: &Jet) -> Jet {
        let a0 = a.value();
        let mut derivs = Vec::with_capacity(a.order + 1);
        let mut d = 1.0 / a0;
        for k in 0..=a.order {
            derivs.push(d);
            d *= -((k + 1) as f64) / a0;
        }
        self.compose(a, &derivs)
    }

    pub fn div(&self, a: &Jet, b: &Jet) -> Jet {
        self.mul(a, &self.recip(b))
    }

    pub fn powi(&self, a: &Jet, k: i64) -> Jet {
        if k < 0 {
            return self.powi(&self.recip(a), -k);
        }
        let mut out = self.constant(1.0, a.order);
        let mut base = a.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                out = self.mul(&out, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        out
    }

    pub fn pow(&self, a: &Jet, k: Rational64) -> Jet {
        if k.is_integer() {
            return self.powi(a, *k.numer());
        }
        let p = *k.numer() as f64 / *k.denom() as f64;
        let a0 = a.value();
        let mut derivs = Vec::with_capacity(a.order + 1);
        let mut falling = 1.0;
        for j in 0..=a.order {
            let shifted = k - Rational64::from_integer(j as i64);
            derivs.push(falling * crate::expr::eval_pow(a0, shifted));
            falling *= p - j as f64;
        }
        self.compose(a, &derivs)
    }

    pub fn func(&self, f: Func, a: &Jet) -> Jet {
        let x = a.value();
        let k = a.order + 1;
        let cyc = |vals: [f64; 4]| -> Vec<f64> { (0..k).map(|i| vals[i % 4]).collect() };
        match f {
            Func::Exp => self.compose(a, &vec![x.exp(); k]),
            Func::Log => {
                let mut d = vec![x.ln()];
                let mut fact = 1.0;
                for j in 1..k {
                    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                    d.push(sign * fact / x.powi(j as i32));
                    fact *= j as f64;
                }
                self.compose(a, &d)
            }
            Func::Sqrt => self.pow(a, Rational64::new(1, 2)),
            Func::Sin => self.compose(a, &cyc([x.sin(), x.cos(), -x.sin(), -x.cos()])),
            Func::Cos => self.compose(a, &cyc([x.cos(), -x.sin(), -x.cos(), x.sin()])),
            Func::Sinh => self.compose(a, &cyc([x.sinh(), x.cosh(), x.sinh(), x.cosh()])),
            Func::Cosh => self.compose(a, &cyc([x.cosh(), x.sinh(), x.cosh(), x.sinh()])),
            Func::Tan => self.div(&self.func(Func::Sin, a), &self.func(Func::Cos, a)),
            Func::Tanh => self.div(&self.func(Func::Sinh, a), &self.func(Func::Cosh, a)),
        }
    }

    /// Forward-mode Taylor expansion of an expression tree about `point`.
    ///
    /// This walks the tree directly and never calls the symbolic
    /// differentiator, so it serves as an independent route to the same
    /// derivatives.
    pub fn expand(
        &self,
        e: &Expression,
        coords: &[String],
        point: &[f64],
        params: &BTreeMap<String, f64>,
    ) -> Result<Jet, EvalError> {
        let mut memo = HashMap::new();
        self.expand_rec(e, coords, point, params, &mut memo)
    }

    fn expand_rec(
        &self,
        e: &Expression,
        coords: &[String],
        point: &[f64],
        params: &BTreeMap<String, f64>,
        memo: &mut HashMap<*const Node, Jet>,
    ) -> Result<Jet, EvalError> {
        if let Some(j) = memo.get(&e.ptr()) {
            return Ok(j.clone());
        }
        let mut go = |x: &Expression| self.expand_rec(x, coords, point, params, memo);
        let out = match e.node() {
            Node::Const(v) => self.constant(*v, self.order),
            Node::Coord(name) => {
                let i = coords
                    .iter()
                    .position(|c| c == &**name)
                    .ok_or_else(|| EvalError::Unbound(name.to_string()))?;
                self.variable(i, point[i])
            }
            Node::Param(name) => {
                let v = *params.get(&**name).ok_or_else(|| EvalError::Unbound(name.to_string()))?;
                self.constant(v, self.order)
            }
            Node::Neg(a) => go(a)?.scaled(-1.0),
            Node::Add(a, b) => {
                let (a, b) = (go(a)?, go(b)?);
                a.add(&b)
            }
            Node::Sub(a, b) => {
                let (a, b) = (go(a)?, go(b)?);
                a.sub(&b)
            }
            Node::Mul(a, b) => {
                let (a, b) = (go(a)?, go(b)?);
                self.mul(&a, &b)
            }
            Node::Div(a, b) => {
                let (a, b) = (go(a)?, go(b)?);
                self.div(&a, &b)
            }
            Node::Pow(a, k) => {
                let a = go(a)?;
                self.pow(&a, *k)
            }
            Node::Func(f, a) => {
                let a = go(a)?;
                self.func(*f, &a)
            }
            Node::Spline { spline, order, arg } => {
                let a = go(arg)?;
                let derivs: Vec<f64> = (0..=a.order)
                    .map(|k| spline.eval(a.value(), order + k as u8).unwrap_or(f64::NAN))
                    .collect();
                self.compose(&a, &derivs)
            }
        };
        memo.insert(e.ptr(), out.clone());
        Ok(out)
    }
}

/// Truncated Taylor expansion; see the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    c: Vec<f64>,
    order: usize,
}

impl Jet {
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    pub fn add(&self, other: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&other.c).map(|(a, b)| a + b).collect(),
            order: self.order.min(other.order),
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&other.c).map(|(a, b)| a - b).collect(),
            order: self.order.min(other.order),
        }
    }

    pub fn scaled(&self, s: f64) -> Jet {
        Jet { c: self.c.iter().map(|a| a * s).collect(), order: self.order }
    }

    /// `self += s * other`, truncating to the common order.
    pub fn axpy(&mut self, s: f64, other: &Jet) {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += s * b;
        }
        self.order = self.order.min(other.order);
    }

    pub fn truncated(&self, order: usize) -> Jet {
        Jet { c: self.c.clone(), order: self.order.min(order) }
    }
}
