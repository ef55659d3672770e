use super::{BinOp, DiffError, ExprNode, Func};

fn is_const(e: &ExprNode, v: f64) -> bool {
    matches!(e, ExprNode::Const(c) if *c == v)
}

// Constructors that fold the trivial identities symbolic differentiation keeps
// producing (0*x, 1*x, x+0, ...). They only drop terms that are multiplied by
// an exact zero, never reorder or reassociate.
fn add(a: ExprNode, b: ExprNode) -> ExprNode {
    match (&a, &b) {
        (ExprNode::Const(x), ExprNode::Const(y)) => ExprNode::Const(x + y),
        _ if is_const(&a, 0.0) => b,
        _ if is_const(&b, 0.0) => a,
        _ => ExprNode::binary(BinOp::Add, a, b),
    }
}

fn sub(a: ExprNode, b: ExprNode) -> ExprNode {
    match (&a, &b) {
        (ExprNode::Const(x), ExprNode::Const(y)) => ExprNode::Const(x - y),
        _ if is_const(&b, 0.0) => a,
        _ if is_const(&a, 0.0) => neg(b),
        _ => ExprNode::binary(BinOp::Sub, a, b),
    }
}

fn mul(a: ExprNode, b: ExprNode) -> ExprNode {
    match (&a, &b) {
        (ExprNode::Const(x), ExprNode::Const(y)) => ExprNode::Const(x * y),
        _ if is_const(&a, 0.0) || is_const(&b, 0.0) => ExprNode::Const(0.0),
        _ if is_const(&a, 1.0) => b,
        _ if is_const(&b, 1.0) => a,
        _ => ExprNode::binary(BinOp::Mul, a, b),
    }
}

fn div(a: ExprNode, b: ExprNode) -> ExprNode {
    if is_const(&a, 0.0) {
        return ExprNode::Const(0.0);
    }
    if is_const(&b, 1.0) {
        return a;
    }
    ExprNode::binary(BinOp::Div, a, b)
}

fn pow(a: ExprNode, b: ExprNode) -> ExprNode {
    if is_const(&b, 1.0) {
        return a;
    }
    ExprNode::binary(BinOp::Pow, a, b)
}

fn neg(a: ExprNode) -> ExprNode {
    match a {
        ExprNode::Const(c) => ExprNode::Const(-c),
        ExprNode::Neg(inner) => *inner,
        other => ExprNode::Neg(Box::new(other)),
    }
}

fn call(f: Func, a: ExprNode) -> ExprNode {
    ExprNode::call(f, a)
}

impl ExprNode {
    /// Exact symbolic derivative with respect to `var`.
    ///
    /// `abs` and `sign` are rejected wherever they occur, even in subtrees that
    /// do not depend on `var`.
    pub fn differentiate(&self, var: &str) -> Result<ExprNode, DiffError> {
        self.check_differentiable()?;
        Ok(self.derive(var))
    }

    /// Applies [`differentiate`](Self::differentiate) `order` times.
    pub fn nth_derivative(&self, var: &str, order: usize) -> Result<ExprNode, DiffError> {
        self.check_differentiable()?;
        let mut out = self.clone();
        for _ in 0..order {
            out = out.derive(var);
        }
        Ok(out)
    }

    fn check_differentiable(&self) -> Result<(), DiffError> {
        match self {
            ExprNode::Const(_) | ExprNode::Var(_) => Ok(()),
            ExprNode::Neg(inner) => inner.check_differentiable(),
            ExprNode::Call(f @ (Func::Abs | Func::Sign), _) => {
                Err(DiffError::NonDifferentiable(f.name()))
            }
            ExprNode::Call(_, inner) => inner.check_differentiable(),
            ExprNode::Binary(_, lhs, rhs) => {
                lhs.check_differentiable()?;
                rhs.check_differentiable()
            }
        }
    }

    fn derive(&self, var: &str) -> ExprNode {
        if !self.depends_on(var) {
            return ExprNode::Const(0.0);
        }
        match self {
            ExprNode::Const(_) => ExprNode::Const(0.0),
            ExprNode::Var(name) => ExprNode::Const(if name == var { 1.0 } else { 0.0 }),
            ExprNode::Neg(inner) => neg(inner.derive(var)),
            ExprNode::Binary(op, l, r) => {
                let (u, v) = (l.as_ref(), r.as_ref());
                match op {
                    BinOp::Add => add(u.derive(var), v.derive(var)),
                    BinOp::Sub => sub(u.derive(var), v.derive(var)),
                    BinOp::Mul => add(mul(u.derive(var), v.clone()), mul(u.clone(), v.derive(var))),
                    BinOp::Div => div(
                        sub(mul(u.derive(var), v.clone()), mul(u.clone(), v.derive(var))),
                        pow(v.clone(), ExprNode::Const(2.0)),
                    ),
                    BinOp::Pow => {
                        let du = u.derive(var);
                        let dv = v.derive(var);
                        if !v.depends_on(var) {
                            // v * u^(v-1) * u'
                            let exponent = match v {
                                ExprNode::Const(c) => ExprNode::Const(c - 1.0),
                                _ => sub(v.clone(), ExprNode::Const(1.0)),
                            };
                            mul(mul(v.clone(), pow(u.clone(), exponent)), du)
                        } else if !u.depends_on(var) {
                            // u^v * ln(u) * v'
                            mul(mul(self.clone(), call(Func::Ln, u.clone())), dv)
                        } else {
                            // u^v * (v' ln u + v u' / u)
                            mul(
                                self.clone(),
                                add(
                                    mul(dv, call(Func::Ln, u.clone())),
                                    div(mul(v.clone(), du), u.clone()),
                                ),
                            )
                        }
                    }
                }
            }
            ExprNode::Call(f, arg) => {
                let a = arg.as_ref();
                let da = a.derive(var);
                let outer = match f {
                    Func::Sin => call(Func::Cos, a.clone()),
                    Func::Cos => neg(call(Func::Sin, a.clone())),
                    Func::Tan => add(
                        ExprNode::Const(1.0),
                        pow(call(Func::Tan, a.clone()), ExprNode::Const(2.0)),
                    ),
                    Func::Exp => self.clone(),
                    Func::Ln => return div(da, a.clone()),
                    Func::Sqrt => {
                        return div(da, mul(ExprNode::Const(2.0), self.clone()));
                    }
                    Func::Abs | Func::Sign => unreachable!("rejected by check_differentiable"),
                };
                mul(outer, da)
            }
        }
    }
}
