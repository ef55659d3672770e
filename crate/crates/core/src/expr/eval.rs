use std::collections::{BTreeMap, HashMap};

use super::{BinOp, ExprNode, Func};
use crate::scalar::Real;

/// Variable bindings for [`ExprNode::eval`].
pub trait Env<T> {
    fn lookup(&self, name: &str) -> Option<T>;
}

impl<T: Copy> Env<T> for HashMap<String, T> {
    fn lookup(&self, name: &str) -> Option<T> {
        self.get(name).copied()
    }
}

impl<T: Copy> Env<T> for HashMap<&str, T> {
    fn lookup(&self, name: &str) -> Option<T> {
        self.get(name).copied()
    }
}

impl<T: Copy> Env<T> for BTreeMap<String, T> {
    fn lookup(&self, name: &str) -> Option<T> {
        self.get(name).copied()
    }
}

impl<T: Copy> Env<T> for [(&str, T)] {
    fn lookup(&self, name: &str) -> Option<T> {
        self.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
    }
}

impl<T: Copy, const N: usize> Env<T> for [(&str, T); N] {
    fn lookup(&self, name: &str) -> Option<T> {
        self.as_slice().lookup(name)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("non-finite result from `{0}`")]
    NonFinite(&'static str),
}

fn finite<T: Real>(value: T, what: &'static str) -> Result<T, EvalError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::NonFinite(what))
    }
}

impl ExprNode {
    /// Evaluates the tree in `T` arithmetic.
    ///
    /// Domain violations and overflow are errors rather than NaN or infinity.
    pub fn eval<T: Real, E: Env<T> + ?Sized>(&self, env: &E) -> Result<T, EvalError> {
        match self {
            ExprNode::Const(c) => Ok(T::lit(*c)),
            ExprNode::Var(name) => env
                .lookup(name)
                .ok_or_else(|| EvalError::Unbound(name.clone())),
            ExprNode::Neg(inner) => Ok(-inner.eval(env)?),
            ExprNode::Binary(op, lhs, rhs) => {
                let l = lhs.eval(env)?;
                let r = rhs.eval(env)?;
                match op {
                    BinOp::Add => finite(l + r, "+"),
                    BinOp::Sub => finite(l - r, "-"),
                    BinOp::Mul => finite(l * r, "*"),
                    BinOp::Div => {
                        if r == T::zero() {
                            return Err(EvalError::Domain("division by zero"));
                        }
                        finite(l / r, "/")
                    }
                    BinOp::Pow => {
                        if l < T::zero() && r.fract() != T::zero() {
                            return Err(EvalError::Domain(
                                "negative base raised to a non-integer power",
                            ));
                        }
                        if l == T::zero() && r < T::zero() {
                            return Err(EvalError::Domain("zero raised to a negative power"));
                        }
                        finite(l.powf(r), "^")
                    }
                }
            }
            ExprNode::Call(func, arg) => {
                let x = arg.eval(env)?;
                match func {
                    Func::Sin => Ok(x.sin()),
                    Func::Cos => Ok(x.cos()),
                    Func::Tan => finite(x.tan(), "tan"),
                    Func::Exp => finite(x.exp(), "exp"),
                    Func::Ln => {
                        if x <= T::zero() {
                            return Err(EvalError::Domain("ln of a nonpositive argument"));
                        }
                        Ok(x.ln())
                    }
                    Func::Abs => Ok(x.abs()),
                    Func::Sqrt => {
                        if x < T::zero() {
                            return Err(EvalError::Domain("sqrt of a negative argument"));
                        }
                        Ok(x.sqrt())
                    }
                    Func::Sign => Ok(if x > T::zero() {
                        T::one()
                    } else if x < T::zero() {
                        -T::one()
                    } else {
                        T::zero()
                    }),
                }
            }
        }
    }
}
