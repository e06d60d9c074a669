//! Expression DSL: an immutable arithmetic/transcendental tree over named
//! coordinates and parameters, with exact symbolic differentiation.
//!
//! Trees are reference counted, so derivatives share unchanged subtrees with
//! their source. Every other module evaluates scalar fields (metric
//! components, potentials, profile functions) through this one.

mod diff;
mod eval;
mod parse;
mod program;
mod render;
mod spline;

use std::fmt;
use std::ops;
use std::sync::Arc;

use num_rational::Rational64;

pub use diff::Differentiator;
pub use eval::{evaluate, EvalError};
pub(crate) use eval::apply_pow as eval_pow;
pub use parse::{parse_expression, ParseError, SourceSpan};
pub use program::Program;
pub use spline::CubicSpline;

/// Unary functions of the node vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// A node of the expression tree.
#[derive(Debug, Clone)]
pub enum Node {
    Const(f64),
    Coord(Arc<str>),
    Param(Arc<str>),
    Neg(Expression),
    Add(Expression, Expression),
    Sub(Expression, Expression),
    Mul(Expression, Expression),
    Div(Expression, Expression),
    /// Power with an integer or rational literal exponent.
    Pow(Expression, Rational64),
    Func(Func, Expression),
    /// `order`-th derivative of a tabulated cubic spline applied to `arg`.
    /// Produced only by profile lifting; it has no surface syntax.
    Spline {
        spline: Arc<CubicSpline>,
        order: u8,
        arg: Expression,
    },
}

/// Immutable, cheaply clonable expression handle.
#[derive(Clone)]
pub struct Expression(Arc<Node>);

impl Expression {
    pub fn new(node: Node) -> Self {
        Expression(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(v: f64) -> Self {
        Expression::new(Node::Const(v))
    }

    pub fn zero() -> Self {
        Expression::constant(0.0)
    }

    pub fn one() -> Self {
        Expression::constant(1.0)
    }

    pub fn coord(name: &str) -> Self {
        Expression::new(Node::Coord(name.into()))
    }

    pub fn param(name: &str) -> Self {
        Expression::new(Node::Param(name.into()))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// Address of the shared node; used to memoise work over DAGs.
    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    pub fn ptr_eq(&self, other: &Expression) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Simplifying constructors. These fold constants and drop neutral
    /// elements; they never reorder operands.
    pub fn neg(a: Expression) -> Expression {
        match a.node() {
            Node::Const(v) => Expression::constant(-v),
            Node::Neg(inner) => inner.clone(),
            _ => Expression::new(Node::Neg(a)),
        }
    }

    pub fn add(a: Expression, b: Expression) -> Expression {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expression::constant(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => match b.node() {
                Node::Neg(inner) => Expression::new(Node::Sub(a, inner.clone())),
                _ => Expression::new(Node::Add(a, b)),
            },
        }
    }

    pub fn sub(a: Expression, b: Expression) -> Expression {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expression::constant(x - y),
            (Some(x), _) if x == 0.0 => Expression::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => match b.node() {
                Node::Neg(inner) => Expression::new(Node::Add(a, inner.clone())),
                _ => Expression::new(Node::Sub(a, b)),
            },
        }
    }

    pub fn mul(a: Expression, b: Expression) -> Expression {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expression::constant(x * y),
            (Some(x), _) if x == 0.0 => Expression::zero(),
            (_, Some(y)) if y == 0.0 => Expression::zero(),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expression::neg(b),
            (_, Some(y)) if y == -1.0 => Expression::neg(a),
            _ => Expression::new(Node::Mul(a, b)),
        }
    }

    pub fn div(a: Expression, b: Expression) -> Expression {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expression::constant(x / y),
            (Some(x), _) if x == 0.0 => Expression::zero(),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expression::new(Node::Div(a, b)),
        }
    }

    pub fn pow(a: Expression, exponent: Rational64) -> Expression {
        if exponent == Rational64::from_integer(0) {
            return Expression::one();
        }
        if exponent == Rational64::from_integer(1) {
            return a;
        }
        if let Some(x) = a.as_const() {
            if exponent.is_integer() {
                return Expression::constant(x.powi(*exponent.numer() as i32));
            }
        }
        if let Node::Pow(base, inner) = a.node() {
            // (b^p)^q = b^(pq) is only valid for integer exponents in general.
            if inner.is_integer() && exponent.is_integer() {
                return Expression::pow(base.clone(), inner * exponent);
            }
        }
        Expression::new(Node::Pow(a, exponent))
    }

    pub fn powi(a: Expression, k: i64) -> Expression {
        Expression::pow(a, Rational64::from_integer(k))
    }

    pub fn func(f: Func, a: Expression) -> Expression {
        if let Some(x) = a.as_const() {
            let folded = match f {
                Func::Exp if x == 0.0 => Some(1.0),
                Func::Log if x == 1.0 => Some(0.0),
                Func::Sin | Func::Tan | Func::Sinh | Func::Tanh | Func::Sqrt if x == 0.0 => {
                    Some(0.0)
                }
                Func::Cos | Func::Cosh if x == 0.0 => Some(1.0),
                _ => None,
            };
            if let Some(v) = folded {
                return Expression::constant(v);
            }
        }
        Expression::new(Node::Func(f, a))
    }

    pub fn exp(a: Expression) -> Expression {
        Expression::func(Func::Exp, a)
    }

    pub fn log(a: Expression) -> Expression {
        Expression::func(Func::Log, a)
    }

    pub fn spline(spline: Arc<CubicSpline>, order: u8, arg: Expression) -> Expression {
        if order > 3 {
            return Expression::zero();
        }
        Expression::new(Node::Spline { spline, order, arg })
    }

    /// Exact partial derivative with respect to coordinate `var`.
    pub fn differentiate(&self, var: &str) -> Expression {
        Differentiator::new(var).run(self)
    }

    /// Number of distinct nodes in the DAG.
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr()) {
                continue;
            }
            stack.extend(e.children());
        }
        seen.len()
    }

    pub fn children(&self) -> Vec<Expression> {
        match self.node() {
            Node::Const(_) | Node::Coord(_) | Node::Param(_) => vec![],
            Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => vec![a.clone()],
            Node::Spline { arg, .. } => vec![arg.clone()],
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                vec![a.clone(), b.clone()]
            }
        }
    }

    /// Names of coordinates referenced anywhere in the tree.
    pub fn coordinates(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr()) {
                continue;
            }
            if let Node::Coord(name) = e.node() {
                out.insert(name.to_string());
            }
            stack.extend(e.children());
        }
        out
    }

    /// Replace parameters by constants and rename/replace coordinates.
    /// `coord_map` returns `Some(replacement)` for coordinates to substitute.
    pub fn substitute(
        &self,
        coord_map: &dyn Fn(&str) -> Option<Expression>,
        param_map: &dyn Fn(&str) -> Option<f64>,
    ) -> Expression {
        let mut memo = std::collections::HashMap::new();
        substitute_rec(self, coord_map, param_map, &mut memo)
    }
}

fn substitute_rec(
    e: &Expression,
    coord_map: &dyn Fn(&str) -> Option<Expression>,
    param_map: &dyn Fn(&str) -> Option<f64>,
    memo: &mut std::collections::HashMap<*const Node, Expression>,
) -> Expression {
    if let Some(done) = memo.get(&e.ptr()) {
        return done.clone();
    }
    let mut go = |x: &Expression| substitute_rec(x, coord_map, param_map, memo);
    let out = match e.node() {
        Node::Const(_) => e.clone(),
        Node::Coord(name) => coord_map(name).unwrap_or_else(|| e.clone()),
        Node::Param(name) => param_map(name).map(Expression::constant).unwrap_or_else(|| e.clone()),
        Node::Neg(a) => Expression::neg(go(a)),
        Node::Add(a, b) => {
            let (a, b) = (go(a), go(b));
            Expression::add(a, b)
        }
        Node::Sub(a, b) => {
            let (a, b) = (go(a), go(b));
            Expression::sub(a, b)
        }
        Node::Mul(a, b) => {
            let (a, b) = (go(a), go(b));
            Expression::mul(a, b)
        }
        Node::Div(a, b) => {
            let (a, b) = (go(a), go(b));
            Expression::div(a, b)
        }
        Node::Pow(a, k) => Expression::pow(go(a), *k),
        Node::Func(f, a) => Expression::func(*f, go(a)),
        Node::Spline { spline, order, arg } => Expression::spline(spline.clone(), *order, go(arg)),
    };
    memo.insert(e.ptr(), out.clone());
    out
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.to_bits() == b.to_bits(),
            (Node::Coord(a), Node::Coord(b)) => a == b,
            (Node::Param(a), Node::Param(b)) => a == b,
            (Node::Neg(a), Node::Neg(b)) => a == b,
            (Node::Add(a1, b1), Node::Add(a2, b2))
            | (Node::Sub(a1, b1), Node::Sub(a2, b2))
            | (Node::Mul(a1, b1), Node::Mul(a2, b2))
            | (Node::Div(a1, b1), Node::Div(a2, b2)) => a1 == a2 && b1 == b2,
            (Node::Pow(a, p), Node::Pow(b, q)) => p == q && a == b,
            (Node::Func(f, a), Node::Func(g, b)) => f == g && a == b,
            (
                Node::Spline { spline: s1, order: o1, arg: a1 },
                Node::Spline { spline: s2, order: o2, arg: a2 },
            ) => Arc::ptr_eq(s1, s2) && o1 == o2 && a1 == a2,
            _ => false,
        }
    }
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({})", self)
    }
}

impl From<f64> for Expression {
    fn from(v: f64) -> Self {
        Expression::constant(v)
    }
}

impl ops::Add for Expression {
    type Output = Expression;
    fn add(self, rhs: Expression) -> Expression {
        Expression::add(self, rhs)
    }
}

impl ops::Sub for Expression {
    type Output = Expression;
    fn sub(self, rhs: Expression) -> Expression {
        Expression::sub(self, rhs)
    }
}

impl ops::Mul for Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        Expression::mul(self, rhs)
    }
}

impl ops::Div for Expression {
    type Output = Expression;
    fn div(self, rhs: Expression) -> Expression {
        Expression::div(self, rhs)
    }
}

impl ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::neg(self)
    }
}

/// Declared names an expression may reference.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scope {
    pub coordinates: Vec<String>,
    pub parameters: Vec<String>,
}

impl Scope {
    pub fn new<S: AsRef<str>>(coordinates: &[S], parameters: &[S]) -> Self {
        Scope {
            coordinates: coordinates.iter().map(|s| s.as_ref().to_string()).collect(),
            parameters: parameters.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn is_coordinate(&self, name: &str) -> bool {
        self.coordinates.iter().any(|c| c == name)
    }

    pub fn is_parameter(&self, name: &str) -> bool {
        self.parameters.iter().any(|c| c == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_simplify() {
        let x = Expression::coord("x");
        assert_eq!(Expression::mul(Expression::zero(), x.clone()), Expression::zero());
        assert_eq!(Expression::add(x.clone(), Expression::zero()), x);
        assert_eq!(Expression::mul(Expression::one(), x.clone()), x);
        assert_eq!(
            Expression::add(Expression::constant(2.0), Expression::constant(3.0)),
            Expression::constant(5.0)
        );
        assert_eq!(Expression::neg(Expression::neg(x.clone())), x);
    }

    #[test]
    fn substitute_params() {
        let e = Expression::mul(Expression::param("a"), Expression::coord("x"));
        let s = e.substitute(&|_| None, &|p| (p == "a").then_some(3.0));
        assert_eq!(s.to_string(), "3 * x");
    }
}
