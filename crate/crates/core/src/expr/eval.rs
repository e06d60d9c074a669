use std::collections::{BTreeMap, HashMap};

use num_rational::Rational64;
use thiserror::Error;

use super::{Expression, Func, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("name `{0}` is not bound")]
    Unbound(String),
    #[error("domain error: {reason} in `{subtree}` at {point:?}")]
    Domain {
        reason: String,
        subtree: String,
        point: Vec<(String, f64)>,
    },
}

/// Kinds of domain violation shared by the tree walker and the compiled
/// program.
pub(crate) fn check_domain(node: &Node, args: &[f64]) -> Option<&'static str> {
    match node {
        Node::Div(..) if args[1] == 0.0 => Some("division by zero"),
        Node::Func(Func::Log, _) if args[0] <= 0.0 => Some("log of non-positive value"),
        Node::Func(Func::Sqrt, _) if args[0] < 0.0 => Some("sqrt of negative value"),
        Node::Pow(_, k) if *k.numer() < 0 && args[0] == 0.0 => Some("division by zero"),
        Node::Pow(_, k) if !k.is_integer() && k.denom() % 2 == 0 && args[0] < 0.0 => {
            Some("even root of negative value")
        }
        _ => None,
    }
}

pub(crate) fn apply_func(f: Func, x: f64) -> f64 {
    match f {
        Func::Exp => x.exp(),
        Func::Log => x.ln(),
        Func::Sqrt => x.sqrt(),
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Sinh => x.sinh(),
        Func::Cosh => x.cosh(),
        Func::Tanh => x.tanh(),
    }
}

pub(crate) fn apply_pow(x: f64, k: Rational64) -> f64 {
    let (p, q) = (*k.numer(), *k.denom());
    if q == 1 {
        return x.powi(p as i32);
    }
    if q == 2 {
        return x.sqrt().powi(p as i32);
    }
    if x < 0.0 {
        // odd denominator: real root exists
        let r = (-x).powf(1.0 / q as f64);
        return (-r).powi(p as i32);
    }
    x.powf(p as f64 / q as f64)
}

struct TreeEval<'a> {
    point: &'a BTreeMap<String, f64>,
    params: &'a BTreeMap<String, f64>,
    memo: HashMap<*const Node, f64>,
}

impl TreeEval<'_> {
    fn eval(&mut self, e: &Expression) -> Result<f64, EvalError> {
        if let Some(v) = self.memo.get(&e.ptr()) {
            return Ok(*v);
        }
        let node = e.node();
        let args: Vec<f64> = e.children().iter().map(|c| self.eval(c)).collect::<Result<_, _>>()?;
        if let Some(reason) = check_domain(node, &args) {
            return Err(EvalError::Domain {
                reason: reason.to_string(),
                subtree: e.to_string(),
                point: self.point.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            });
        }
        let v = match node {
            Node::Const(c) => *c,
            Node::Coord(name) => *self
                .point
                .get(&**name)
                .ok_or_else(|| EvalError::Unbound(name.to_string()))?,
            Node::Param(name) => *self
                .params
                .get(&**name)
                .ok_or_else(|| EvalError::Unbound(name.to_string()))?,
            Node::Neg(_) => -args[0],
            Node::Add(..) => args[0] + args[1],
            Node::Sub(..) => args[0] - args[1],
            Node::Mul(..) => args[0] * args[1],
            Node::Div(..) => args[0] / args[1],
            Node::Pow(_, k) => apply_pow(args[0], *k),
            Node::Func(f, _) => apply_func(*f, args[0]),
            Node::Spline { spline, order, .. } => {
                spline.eval(args[0], *order).ok_or_else(|| EvalError::Domain {
                    reason: "argument outside spline support".to_string(),
                    subtree: e.to_string(),
                    point: self.point.iter().map(|(k, v)| (k.clone(), *v)).collect(),
                })?
            }
        };
        self.memo.insert(e.ptr(), v);
        Ok(v)
    }
}

/// Evaluate `e` by recursive descent with coordinates bound from `point` and
/// parameters from `params`.
pub fn evaluate(
    e: &Expression,
    point: &BTreeMap<String, f64>,
    params: &BTreeMap<String, f64>,
) -> Result<f64, EvalError> {
    TreeEval { point, params, memo: HashMap::new() }.eval(e)
}
