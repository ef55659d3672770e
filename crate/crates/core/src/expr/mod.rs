//! Scalar expressions over named variables.
//!
//! Expressions describe the plant nonlinearities, the input gain, the
//! disturbance and the reference trajectory. The controller never sees them;
//! they are consumed by the plant simulator and by the trajectory-bound
//! estimator only.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          right-associative
//! atom   := number | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! so `-2^2 == -4`, `2^3^2 == 512` and `-a*b == (-a)*b`. The names `pi` and `e`
//! are constants.

mod diff;
mod eval;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

pub use eval::{Env, EvalError};
pub use parser::{parse, ParseError};

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Built-in single-argument functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Abs,
    Sqrt,
    Sign,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Abs,
        Func::Sqrt,
        Func::Sign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Const(f64),
    Var(String),
    Neg(Box<ExprNode>),
    Binary(BinOp, Box<ExprNode>, Box<ExprNode>),
    Call(Func, Box<ExprNode>),
}

impl ExprNode {
    pub fn constant(value: f64) -> Self {
        ExprNode::Const(value)
    }

    pub fn var(name: impl Into<String>) -> Self {
        ExprNode::Var(name.into())
    }

    pub fn binary(op: BinOp, lhs: ExprNode, rhs: ExprNode) -> Self {
        ExprNode::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(func: Func, arg: ExprNode) -> Self {
        ExprNode::Call(func, Box::new(arg))
    }

    /// Names of all free variables, sorted.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ExprNode::Const(_) => {}
            ExprNode::Var(name) => {
                out.insert(name.clone());
            }
            ExprNode::Neg(inner) | ExprNode::Call(_, inner) => inner.collect_vars(out),
            ExprNode::Binary(_, lhs, rhs) => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
        }
    }

    /// Whether `var` occurs anywhere in the tree.
    pub fn depends_on(&self, var: &str) -> bool {
        match self {
            ExprNode::Const(_) => false,
            ExprNode::Var(name) => name == var,
            ExprNode::Neg(inner) | ExprNode::Call(_, inner) => inner.depends_on(var),
            ExprNode::Binary(_, lhs, rhs) => lhs.depends_on(var) || rhs.depends_on(var),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            ExprNode::Const(_) | ExprNode::Var(_) => 1,
            ExprNode::Neg(inner) | ExprNode::Call(_, inner) => 1 + inner.size(),
            ExprNode::Binary(_, lhs, rhs) => 1 + lhs.size() + rhs.size(),
        }
    }
}

/// Prints a fully parenthesised form that [`parse`] reads back to a tree with
/// identical values.
impl fmt::Display for ExprNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprNode::Const(c) if *c < 0.0 => write!(f, "(-{:?})", -c),
            ExprNode::Const(c) => write!(f, "{c:?}"),
            ExprNode::Var(name) => f.write_str(name),
            ExprNode::Neg(inner) => write!(f, "(-{inner})"),
            ExprNode::Binary(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
            ExprNode::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

/// Errors from symbolic differentiation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("`{0}` is not differentiable")]
    NonDifferentiable(&'static str),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variables_are_collected_sorted() {
        let e = parse("x2 + sin(x1) * t - x2").unwrap();
        let vars: Vec<_> = e.variables().into_iter().collect();
        assert_eq!(vars, ["t", "x1", "x2"]);
        assert!(e.depends_on("t"));
        assert!(!e.depends_on("x3"));
    }

    #[test]
    fn display_reparses() {
        let e = parse("-0.5*(sin(x1)+x2)^2/3").unwrap();
        let printed = e.to_string();
        assert_eq!(parse(&printed).unwrap(), e);
    }

    #[test]
    fn negative_constant_prints_parenthesised() {
        let e = ExprNode::binary(BinOp::Pow, ExprNode::var("x"), ExprNode::constant(-2.0));
        assert_eq!(e.to_string(), "(x ^ (-2.0))");
    }
}
