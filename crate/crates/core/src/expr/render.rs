use std::fmt;

use super::{Expression, Node};

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expression) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => PREC_SUM,
        Node::Mul(..) | Node::Div(..) => PREC_PRODUCT,
        Node::Neg(_) => PREC_UNARY,
        Node::Pow(..) => PREC_POWER,
        _ => PREC_ATOM,
    }
}

pub(crate) fn format_number(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{:?}", v)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expression, min_prec: u8) -> fmt::Result {
    if precedence(e) < min_prec {
        write!(f, "({})", e)
    } else {
        write!(f, "{}", e)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(f, "(-{})", format_number(-v))
            }
            Node::Const(v) => write!(f, "{}", format_number(*v)),
            Node::Coord(name) | Node::Param(name) => write!(f, "{}", name),
            Node::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, PREC_POWER)
            }
            Node::Add(a, b) => {
                write_child(f, a, PREC_SUM)?;
                write!(f, " + ")?;
                write_child(f, b, PREC_PRODUCT)
            }
            Node::Sub(a, b) => {
                write_child(f, a, PREC_SUM)?;
                write!(f, " - ")?;
                write_child(f, b, PREC_PRODUCT)
            }
            Node::Mul(a, b) => {
                write_child(f, a, PREC_PRODUCT)?;
                write!(f, " * ")?;
                write_child(f, b, PREC_UNARY)
            }
            Node::Div(a, b) => {
                write_child(f, a, PREC_PRODUCT)?;
                write!(f, " / ")?;
                write_child(f, b, PREC_UNARY)
            }
            Node::Pow(a, k) => {
                write_child(f, a, PREC_ATOM)?;
                if k.is_integer() && *k.numer() >= 0 {
                    write!(f, "^{}", k.numer())
                } else if k.is_integer() {
                    write!(f, "^({})", k.numer())
                } else {
                    write!(f, "^({}/{})", k.numer(), k.denom())
                }
            }
            Node::Func(func, a) => write!(f, "{}({})", func.name(), a),
            Node::Spline { order, arg, .. } => write!(f, "spline<{}>({})", order, arg),
        }
    }
}
