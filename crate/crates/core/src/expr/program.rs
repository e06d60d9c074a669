//! Flattened, common-subexpression-eliminated evaluation of many expressions
//! at once. Geometry caches compile every metric derivative into a single
//! program so shared subtrees across components are evaluated once per point.

use std::collections::HashMap;
use std::sync::Arc;

use num_rational::Rational64;

use super::eval::{apply_func, apply_pow, check_domain};
use super::{CubicSpline, EvalError, Expression, Func, Node};

#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Input(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, Rational64),
    Func(Func, usize),
    Spline(Arc<CubicSpline>, u8, usize),
}

#[derive(Hash, PartialEq, Eq)]
enum Key {
    Const(u64),
    Input(usize),
    Neg(usize),
    Bin(u8, usize, usize),
    Pow(usize, i64, i64),
    Func(Func, usize),
    Spline(usize, u8, usize),
}

/// A straight-line program computing a fixed list of outputs from a fixed
/// list of input coordinates. Parameters are folded in at compile time.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    /// Source expression per op, kept for domain-error messages.
    sources: Vec<Expression>,
    outputs: Vec<usize>,
    inputs: Vec<String>,
}

struct Builder<'a> {
    inputs: &'a [String],
    params: &'a dyn Fn(&str) -> Option<f64>,
    ops: Vec<Op>,
    sources: Vec<Expression>,
    by_ptr: HashMap<*const Node, usize>,
    by_key: HashMap<Key, usize>,
}

impl Builder<'_> {
    fn push(&mut self, key: Key, op: Op, src: &Expression) -> usize {
        if let Some(&slot) = self.by_key.get(&key) {
            return slot;
        }
        let slot = self.ops.len();
        self.ops.push(op);
        self.sources.push(src.clone());
        self.by_key.insert(key, slot);
        slot
    }

    fn build(&mut self, e: &Expression) -> Result<usize, EvalError> {
        if let Some(&slot) = self.by_ptr.get(&e.ptr()) {
            return Ok(slot);
        }
        let slot = match e.node() {
            Node::Const(v) => self.push(Key::Const(v.to_bits()), Op::Const(*v), e),
            Node::Coord(name) => {
                let idx = self
                    .inputs
                    .iter()
                    .position(|n| n == &**name)
                    .ok_or_else(|| EvalError::Unbound(name.to_string()))?;
                self.push(Key::Input(idx), Op::Input(idx), e)
            }
            Node::Param(name) => {
                let v = (self.params)(name).ok_or_else(|| EvalError::Unbound(name.to_string()))?;
                self.push(Key::Const(v.to_bits()), Op::Const(v), e)
            }
            Node::Neg(a) => {
                let a = self.build(a)?;
                self.push(Key::Neg(a), Op::Neg(a), e)
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let (a, b) = (self.build(a)?, self.build(b)?);
                let (tag, op) = match e.node() {
                    Node::Add(..) => (0, Op::Add(a, b)),
                    Node::Sub(..) => (1, Op::Sub(a, b)),
                    Node::Mul(..) => (2, Op::Mul(a, b)),
                    _ => (3, Op::Div(a, b)),
                };
                self.push(Key::Bin(tag, a, b), op, e)
            }
            Node::Pow(a, k) => {
                let a = self.build(a)?;
                self.push(Key::Pow(a, *k.numer(), *k.denom()), Op::Pow(a, *k), e)
            }
            Node::Func(f, a) => {
                let a = self.build(a)?;
                self.push(Key::Func(*f, a), Op::Func(*f, a), e)
            }
            Node::Spline { spline, order, arg } => {
                let a = self.build(arg)?;
                let id = Arc::as_ptr(spline) as usize;
                self.push(Key::Spline(id, *order, a), Op::Spline(spline.clone(), *order, a), e)
            }
        };
        self.by_ptr.insert(e.ptr(), slot);
        Ok(slot)
    }
}

impl Program {
    /// Compile `exprs` over coordinate `inputs`; parameters are resolved
    /// through `params` and baked in as constants.
    pub fn compile(
        exprs: &[Expression],
        inputs: &[String],
        params: &dyn Fn(&str) -> Option<f64>,
    ) -> Result<Program, EvalError> {
        let mut b = Builder {
            inputs,
            params,
            ops: Vec::new(),
            sources: Vec::new(),
            by_ptr: HashMap::new(),
            by_key: HashMap::new(),
        };
        let outputs = exprs.iter().map(|e| b.build(e)).collect::<Result<Vec<_>, _>>()?;
        Ok(Program { ops: b.ops, sources: b.sources, outputs, inputs: inputs.to_vec() })
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn op_count(&self) -> usize {
        self.ops.len()
    }

    /// Evaluate all outputs at `x` (one value per input coordinate).
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut slots = vec![0.0; self.ops.len()];
        for (i, op) in self.ops.iter().enumerate() {
            let v = match op {
                Op::Const(c) => *c,
                Op::Input(k) => x[*k],
                Op::Neg(a) => -slots[*a],
                Op::Add(a, b) => slots[*a] + slots[*b],
                Op::Sub(a, b) => slots[*a] - slots[*b],
                Op::Mul(a, b) => slots[*a] * slots[*b],
                Op::Div(a, b) => {
                    if slots[*b] == 0.0 {
                        return Err(self.domain_error(i, &[slots[*a], 0.0], x));
                    }
                    slots[*a] / slots[*b]
                }
                Op::Pow(a, k) => {
                    let base = slots[*a];
                    if (*k.numer() < 0 && base == 0.0)
                        || (!k.is_integer() && k.denom() % 2 == 0 && base < 0.0)
                    {
                        return Err(self.domain_error(i, &[base], x));
                    }
                    apply_pow(base, *k)
                }
                Op::Func(f, a) => {
                    let arg = slots[*a];
                    if (*f == Func::Log && arg <= 0.0) || (*f == Func::Sqrt && arg < 0.0) {
                        return Err(self.domain_error(i, &[arg], x));
                    }
                    apply_func(*f, arg)
                }
                Op::Spline(s, order, a) => match s.eval(slots[*a], *order) {
                    Some(v) => v,
                    None => {
                        return Err(EvalError::Domain {
                            reason: "argument outside spline support".into(),
                            subtree: self.sources[i].to_string(),
                            point: self.point(x),
                        })
                    }
                },
            };
            slots[i] = v;
        }
        Ok(self.outputs.iter().map(|&s| slots[s]).collect())
    }

    fn point(&self, x: &[f64]) -> Vec<(String, f64)> {
        self.inputs.iter().cloned().zip(x.iter().copied()).collect()
    }

    fn domain_error(&self, slot: usize, args: &[f64], x: &[f64]) -> EvalError {
        let src = &self.sources[slot];
        let reason = check_domain(src.node(), args).unwrap_or("domain violation");
        EvalError::Domain { reason: reason.to_string(), subtree: src.to_string(), point: self.point(x) }
    }
}
