use std::collections::HashMap;

use num_rational::Rational64;

use super::{Expression, Func, Node};

/// Symbolic partial derivative with respect to one coordinate.
///
/// Results are memoised per node so shared subtrees are differentiated once
/// and the output keeps the sharing of the input.
pub struct Differentiator<'a> {
    var: &'a str,
    memo: HashMap<*const Node, Expression>,
}

impl<'a> Differentiator<'a> {
    pub fn new(var: &'a str) -> Self {
        Differentiator { var, memo: HashMap::new() }
    }

    pub fn run(&mut self, e: &Expression) -> Expression {
        if let Some(d) = self.memo.get(&e.ptr()) {
            return d.clone();
        }
        let d = self.rule(e);
        self.memo.insert(e.ptr(), d.clone());
        d
    }

    fn rule(&mut self, e: &Expression) -> Expression {
        match e.node() {
            Node::Const(_) | Node::Param(_) => Expression::zero(),
            Node::Coord(name) => {
                if &**name == self.var {
                    Expression::one()
                } else {
                    Expression::zero()
                }
            }
            Node::Neg(a) => Expression::neg(self.run(a)),
            Node::Add(a, b) => {
                let (da, db) = (self.run(a), self.run(b));
                Expression::add(da, db)
            }
            Node::Sub(a, b) => {
                let (da, db) = (self.run(a), self.run(b));
                Expression::sub(da, db)
            }
            Node::Mul(a, b) => {
                let (da, db) = (self.run(a), self.run(b));
                Expression::add(
                    Expression::mul(da, b.clone()),
                    Expression::mul(a.clone(), db),
                )
            }
            Node::Div(a, b) => {
                let (da, db) = (self.run(a), self.run(b));
                if db.is_zero() {
                    return Expression::div(da, b.clone());
                }
                // (a'b - ab') / b^2
                Expression::div(
                    Expression::sub(
                        Expression::mul(da, b.clone()),
                        Expression::mul(a.clone(), db),
                    ),
                    Expression::powi(b.clone(), 2),
                )
            }
            Node::Pow(a, k) => {
                let da = self.run(a);
                if da.is_zero() {
                    return Expression::zero();
                }
                let km1 = k - Rational64::from_integer(1);
                let coeff = *k.numer() as f64 / *k.denom() as f64;
                Expression::mul(
                    Expression::mul(Expression::constant(coeff), Expression::pow(a.clone(), km1)),
                    da,
                )
            }
            Node::Func(f, a) => {
                let da = self.run(a);
                if da.is_zero() {
                    return Expression::zero();
                }
                let outer = match f {
                    Func::Exp => e.clone(),
                    // d log(a) = a' / a keeps the tree flatter than (1/a) * a'
                    Func::Log => return Expression::div(da, a.clone()),
                    Func::Sqrt => {
                        Expression::div(Expression::constant(0.5), e.clone())
                    }
                    Func::Sin => Expression::func(Func::Cos, a.clone()),
                    Func::Cos => Expression::neg(Expression::func(Func::Sin, a.clone())),
                    Func::Tan => Expression::add(Expression::one(), Expression::powi(e.clone(), 2)),
                    Func::Sinh => Expression::func(Func::Cosh, a.clone()),
                    Func::Cosh => Expression::func(Func::Sinh, a.clone()),
                    Func::Tanh => Expression::sub(Expression::one(), Expression::powi(e.clone(), 2)),
                };
                Expression::mul(da, outer)
            }
            Node::Spline { spline, order, arg } => {
                let da = self.run(arg);
                if da.is_zero() {
                    return Expression::zero();
                }
                Expression::mul(Expression::spline(spline.clone(), order + 1, arg.clone()), da)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expression, Scope};
    use super::*;

    fn scope() -> Scope {
        Scope::new(&["x", "y"], &["a"])
    }

    #[test]
    fn textbook_derivatives() {
        let s = scope();
        let d = parse_expression("x^2", &s).unwrap().differentiate("x");
        assert_eq!(d.to_string(), "2 * x");
        let d = parse_expression("cosh(a*x)", &s).unwrap().differentiate("x");
        assert_eq!(d.to_string(), "a * sinh(a * x)");
        let d = parse_expression("x^2 + y", &s).unwrap().differentiate("y");
        assert_eq!(d, Expression::one());
    }

    #[test]
    fn fourth_derivative_of_cosh_is_cosh() {
        let e = parse_expression("cosh(x)", &scope()).unwrap();
        let d4 = e.differentiate("x").differentiate("x").differentiate("x").differentiate("x");
        assert_eq!(d4, e);
    }

    #[test]
    fn parameters_are_constants() {
        let e = parse_expression("a*a", &scope()).unwrap();
        assert!(e.differentiate("x").is_zero());
    }
}
