//! Single-input strict-feedback plants.
//!
//! The state is a chain of integrators, `x_i' = x_{i+1}` for `i < n`, closed by
//! `x_n' = f(x) + g(x) u + d(t)`. Only the bound constants below reach the
//! feasibility analysis; `f`, `g` and `d` are used for simulation.

use crate::error::{Error, Result};
use crate::expr::{parse, Env, ExprNode};
use crate::scalar::{Real, MAX_ORDER};

/// The `p` of the `p`-norm used in the Lipschitz condition on `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormIndex {
    #[default]
    One,
    Finite(u32),
    Infinity,
}

impl NormIndex {
    pub fn finite(p: u32) -> Result<Self> {
        match p {
            0 => Err(Error::invalid(
                "p_star",
                "must be a positive integer or inf",
            )),
            1 => Ok(NormIndex::One),
            p => Ok(NormIndex::Finite(p)),
        }
    }

    /// `n^(1/p)`, the equivalence constant between the `p`-norm and the max-norm.
    pub fn norm_factor<T: Real>(self, n: usize) -> T {
        let n = T::count(n as u64);
        match self {
            NormIndex::One => n,
            NormIndex::Finite(p) => n.powf(T::one() / T::count(p as u64)),
            NormIndex::Infinity => T::one(),
        }
    }
}

impl std::fmt::Display for NormIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormIndex::One => f.write_str("1"),
            NormIndex::Finite(p) => write!(f, "{p}"),
            NormIndex::Infinity => f.write_str("inf"),
        }
    }
}

/// Known bound constants of the plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantBounds<T> {
    /// Lipschitz constant of `f`.
    pub k_l: T,
    pub p_star: NormIndex,
    /// Lower bound on the input gain `g`.
    pub g_lo: T,
    /// Upper bound on `g`. Carried as metadata; no feasibility formula uses it.
    pub g_hi: T,
    /// Bound on `|d(t)|`.
    pub d_bar: T,
}

impl<T: Real> PlantBounds<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_l >= T::zero()) || !self.k_l.is_finite() {
            return Err(Error::invalid("k_l", "must be >= 0"));
        }
        if !(self.g_lo > T::zero()) || !self.g_lo.is_finite() {
            return Err(Error::invalid("g_lo", "must be > 0"));
        }
        if !(self.g_hi >= self.g_lo) || !self.g_hi.is_finite() {
            return Err(Error::invalid("g_hi", "must be >= g_lo"));
        }
        if !(self.d_bar >= T::zero()) || !self.d_bar.is_finite() {
            return Err(Error::invalid("d_bar", "must be >= 0"));
        }
        if let NormIndex::Finite(0) = self.p_star {
            return Err(Error::invalid(
                "p_star",
                "must be a positive integer or inf",
            ));
        }
        Ok(())
    }
}

/// A strict-feedback plant of order `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel<T> {
    order: usize,
    f: ExprNode,
    g: ExprNode,
    d: ExprNode,
    bounds: PlantBounds<T>,
}

/// Looks up `t` and `x1..xn` without allocating.
struct StateEnv<'a, T> {
    state: &'a [T],
    t: T,
}

impl<T: Copy> Env<T> for StateEnv<'_, T> {
    fn lookup(&self, name: &str) -> Option<T> {
        if name == "t" {
            return Some(self.t);
        }
        let idx: usize = name.strip_prefix('x')?.parse().ok()?;
        self.state.get(idx.checked_sub(1)?).copied()
    }
}

fn state_var_index(name: &str, order: usize) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.starts_with('0') {
        return None;
    }
    let idx: usize = digits.parse().ok()?;
    (1..=order).contains(&idx).then_some(idx)
}

impl<T: Real> PlantModel<T> {
    /// Builds a plant, checking the bound invariants and that `f`, `g` only
    /// reference `x1..xn` and `d` only references `t`.
    pub fn new(
        order: usize,
        f: ExprNode,
        g: ExprNode,
        d: ExprNode,
        bounds: PlantBounds<T>,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        if order > MAX_ORDER {
            return Err(Error::invalid("n", format!("must be <= {MAX_ORDER}")));
        }
        bounds.validate()?;
        for (name, expr) in [("f", &f), ("g", &g)] {
            if let Some(bad) = expr
                .variables()
                .into_iter()
                .find(|v| state_var_index(v, order).is_none())
            {
                return Err(Error::invalid(
                    name,
                    format!("references `{bad}`; only x1..x{order} are allowed"),
                ));
            }
        }
        if let Some(bad) = d.variables().into_iter().find(|v| v != "t") {
            return Err(Error::invalid(
                "d",
                format!("references `{bad}`; only t is allowed"),
            ));
        }
        Ok(Self {
            order,
            f,
            g,
            d,
            bounds,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bounds(&self) -> &PlantBounds<T> {
        &self.bounds
    }

    pub fn f_expr(&self) -> &ExprNode {
        &self.f
    }

    pub fn g_expr(&self) -> &ExprNode {
        &self.g
    }

    pub fn d_expr(&self) -> &ExprNode {
        &self.d
    }

    fn check_len(&self, state: &[T]) -> Result<()> {
        if state.len() != self.order {
            return Err(Error::LengthMismatch {
                expected: self.order,
                got: state.len(),
            });
        }
        Ok(())
    }

    pub fn f(&self, state: &[T]) -> Result<T> {
        self.check_len(state)?;
        self.f
            .eval(&StateEnv {
                state,
                t: T::zero(),
            })
            .map_err(|e| Error::eval("f", e))
    }

    pub fn g(&self, state: &[T]) -> Result<T> {
        self.check_len(state)?;
        self.g
            .eval(&StateEnv {
                state,
                t: T::zero(),
            })
            .map_err(|e| Error::eval("g", e))
    }

    pub fn d(&self, t: T) -> Result<T> {
        self.d
            .eval(&StateEnv { state: &[], t })
            .map_err(|e| Error::eval("d", e))
    }

    /// Writes the state derivative into `out`.
    pub fn dynamics_into(&self, state: &[T], u: T, t: T, out: &mut [T]) -> Result<()> {
        self.check_len(state)?;
        if out.len() != self.order {
            return Err(Error::LengthMismatch {
                expected: self.order,
                got: out.len(),
            });
        }
        let n = self.order;
        out[..n - 1].copy_from_slice(&state[1..]);
        let env = StateEnv { state, t };
        let f = self.f.eval(&env).map_err(|e| Error::eval("f", e))?;
        let g = self.g.eval(&env).map_err(|e| Error::eval("g", e))?;
        let d = self.d.eval(&env).map_err(|e| Error::eval("d", e))?;
        out[n - 1] = f + g * u + d;
        Ok(())
    }

    /// State derivative for input `u` at time `t`.
    pub fn dynamics(&self, state: &[T], u: T, t: T) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.order];
        self.dynamics_into(state, u, t, &mut out)?;
        Ok(out)
    }
}

/// How the reference bound `xd_bar` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajBound<T> {
    Given(T),
    /// Grid maximum over `[0, t_end]` with `samples` points.
    Estimate {
        t_end: T,
        samples: usize,
    },
}

/// Reference output and its time derivatives up to order `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec<T> {
    derivs: Vec<ExprNode>,
    xd_bar: T,
}

impl<T: Real> TrajectorySpec<T> {
    pub fn new(xd: ExprNode, order: usize, bound: TrajBound<T>) -> Result<Self> {
        if let Some(bad) = xd.variables().into_iter().find(|v| v != "t") {
            return Err(Error::invalid(
                "xd",
                format!("references `{bad}`; only t is allowed"),
            ));
        }
        let derivs = derivative_chain(&xd, order)?;
        let xd_bar = match bound {
            TrajBound::Given(v) => v,
            TrajBound::Estimate { t_end, samples } => estimate_traj_bound(&derivs, t_end, samples)?,
        };
        if !(xd_bar > T::zero()) || !xd_bar.is_finite() {
            return Err(Error::invalid("xd_bar", "must be > 0"));
        }
        Ok(Self { derivs, xd_bar })
    }

    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn xd_expr(&self) -> &ExprNode {
        &self.derivs[0]
    }

    /// `[xd, xd', ..., xd^(n)]` as expressions.
    pub fn derivs(&self) -> &[ExprNode] {
        &self.derivs
    }

    pub fn xd_bar(&self) -> T {
        self.xd_bar
    }

    /// Evaluates all `n + 1` derivatives at `t` into `out`.
    pub fn eval_into(&self, t: T, out: &mut [T]) -> Result<()> {
        if out.len() != self.derivs.len() {
            return Err(Error::LengthMismatch {
                expected: self.derivs.len(),
                got: out.len(),
            });
        }
        let env = [("t", t)];
        for (k, (slot, expr)) in out.iter_mut().zip(&self.derivs).enumerate() {
            *slot = expr
                .eval(&env)
                .map_err(|e| Error::eval(format!("xd derivative {k}"), e))?;
        }
        Ok(())
    }

    pub fn eval_at(&self, t: T) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.derivs.len()];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    pub fn estimate_bound(&self, t_end: T, samples: usize) -> Result<T> {
        estimate_traj_bound(&self.derivs, t_end, samples)
    }
}

/// `[xd, d/dt xd, ..., d^n/dt^n xd]`.
pub fn derivative_chain(xd: &ExprNode, order: usize) -> Result<Vec<ExprNode>> {
    let mut out = Vec::with_capacity(order + 1);
    out.push(xd.clone());
    for k in 0..order {
        let next = out[k].differentiate("t")?;
        out.push(next);
    }
    Ok(out)
}

/// Largest max-norm of `[xd, ..., xd^(n)]` over a uniform grid on `[0, t_end]`.
pub fn estimate_traj_bound<T: Real>(derivs: &[ExprNode], t_end: T, samples: usize) -> Result<T> {
    if samples < 2 {
        return Err(Error::invalid("samples", "must be >= 2"));
    }
    if !(t_end > T::zero()) {
        return Err(Error::invalid("t_end", "must be > 0"));
    }
    let step = t_end / T::count(samples as u64 - 1);
    let mut best = T::zero();
    for k in 0..samples {
        let t = if k + 1 == samples {
            t_end
        } else {
            step * T::count(k as u64)
        };
        let env = [("t", t)];
        for (i, expr) in derivs.iter().enumerate() {
            let v = expr
                .eval(&env)
                .map_err(|e| Error::eval(format!("xd derivative {i}"), e))?;
            best = best.max(v.abs());
        }
    }
    Ok(best)
}

/// Second-order example plant with sinusoidal reference and disturbance.
///
/// `x2' = -0.5 (sin x1 + x2) + (3 + cos x2) u + 0.5 sin 2t`, reference
/// `0.5 sin t`, with `k_l = 0.5`, `p* = 1`, `g in [2, 4]`, `|d| <= 0.5` and
/// `xd_bar = 0.5`.
pub fn builtin_example<T: Real>() -> (PlantModel<T>, TrajectorySpec<T>) {
    let plant = PlantModel::new(
        2,
        parse("-0.5*(sin(x1)+x2)").expect("valid f"),
        parse("3+cos(x2)").expect("valid g"),
        parse("0.5*sin(2*t)").expect("valid d"),
        PlantBounds {
            k_l: T::lit(0.5),
            p_star: NormIndex::One,
            g_lo: T::lit(2.0),
            g_hi: T::lit(4.0),
            d_bar: T::lit(0.5),
        },
    )
    .expect("example plant is valid");
    let traj = TrajectorySpec::new(
        parse("0.5*sin(t)").expect("valid xd"),
        2,
        TrajBound::Given(T::lit(0.5)),
    )
    .expect("example trajectory is valid");
    (plant, traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds() -> PlantBounds<f64> {
        PlantBounds {
            k_l: 1.0,
            p_star: NormIndex::One,
            g_lo: 1.0,
            g_hi: 1.0,
            d_bar: 0.0,
        }
    }

    #[test]
    fn example_dynamics_at_rest() {
        let (plant, _) = builtin_example::<f64>();
        assert_eq!(
            plant.dynamics(&[0.0, 0.0], 0.0, 0.0).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn example_dynamics_unit_velocity() {
        let (plant, _) = builtin_example::<f64>();
        assert_eq!(
            plant.dynamics(&[0.0, 1.0], 0.0, 0.0).unwrap(),
            vec![1.0, -0.5]
        );
    }

    #[test]
    fn input_enters_through_gain() {
        let (plant, _) = builtin_example::<f64>();
        // g(x2 = 0) = 4, so u = 0.25 adds exactly 1
        let dx = plant.dynamics(&[0.0, 0.0], 0.25, 0.0).unwrap();
        assert_eq!(dx[1], 1.0);
    }

    #[test]
    fn builtin_metadata() {
        let (plant, traj) = builtin_example::<f64>();
        let b = plant.bounds();
        assert_eq!(plant.order(), 2);
        assert_eq!(b.k_l, 0.5);
        assert_eq!(b.g_lo, 2.0);
        assert_eq!(b.g_hi, 4.0);
        assert_eq!(b.d_bar, 0.5);
        assert_eq!(b.p_star, NormIndex::One);
        assert_eq!(traj.xd_bar(), 0.5);
        assert_eq!(traj.derivs().len(), 3);
    }

    #[test]
    fn state_length_checked() {
        let (plant, _) = builtin_example::<f64>();
        assert_eq!(
            plant.dynamics(&[0.0], 0.0, 0.0),
            Err(Error::LengthMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn evaluation_errors_carry_context() {
        let plant = PlantModel::new(
            1,
            parse("ln(x1)").unwrap(),
            parse("1").unwrap(),
            parse("0").unwrap(),
            bounds(),
        )
        .unwrap();
        let err = plant.dynamics(&[-1.0], 0.0, 0.0).unwrap_err();
        assert!(err.to_string().starts_with("evaluating f:"), "{err}");
    }

    #[test]
    fn invariant_violations_rejected() {
        let mk = |b: PlantBounds<f64>| {
            PlantModel::new(
                1,
                parse("x1").unwrap(),
                parse("1").unwrap(),
                parse("0").unwrap(),
                b,
            )
        };
        assert!(mk(PlantBounds {
            g_lo: 0.0,
            ..bounds()
        })
        .is_err());
        assert!(mk(PlantBounds {
            g_hi: 0.5,
            ..bounds()
        })
        .is_err());
        assert!(mk(PlantBounds {
            d_bar: -0.1,
            ..bounds()
        })
        .is_err());
        assert!(mk(PlantBounds {
            k_l: -1.0,
            ..bounds()
        })
        .is_err());
        assert!(mk(PlantBounds {
            k_l: f64::NAN,
            ..bounds()
        })
        .is_err());
        assert!(PlantModel::new(
            0,
            parse("0").unwrap(),
            parse("1").unwrap(),
            parse("0").unwrap(),
            bounds()
        )
        .is_err());
    }

    #[test]
    fn foreign_variables_rejected() {
        let f = parse("x3 + x1").unwrap();
        let err =
            PlantModel::new(2, f, parse("1").unwrap(), parse("0").unwrap(), bounds()).unwrap_err();
        assert!(err.to_string().contains("x3"));
        let d = parse("x1").unwrap();
        assert!(PlantModel::new(2, parse("0").unwrap(), parse("1").unwrap(), d, bounds()).is_err());
        assert!(PlantModel::new(
            2,
            parse("x01").unwrap(),
            parse("1").unwrap(),
            parse("0").unwrap(),
            bounds()
        )
        .is_err());
    }

    #[test]
    fn norm_factor_values() {
        assert_eq!(NormIndex::One.norm_factor::<f64>(2), 2.0);
        assert_eq!(NormIndex::Infinity.norm_factor::<f64>(7), 1.0);
        assert!((NormIndex::Finite(2).norm_factor::<f64>(4) - 2.0).abs() < 1e-15);
        assert!(NormIndex::finite(0).is_err());
    }

    #[test]
    fn bound_of_reference_sine() {
        let (_, traj) = builtin_example::<f64>();
        let est = traj.estimate_bound(20.0, 20001).unwrap();
        assert!((est - 0.5).abs() < 1e-6, "{est}");
    }

    #[test]
    fn bound_of_constant_reference() {
        let derivs = derivative_chain(&parse("-1.25").unwrap(), 3).unwrap();
        assert_eq!(estimate_traj_bound(&derivs, 5.0, 11).unwrap(), 1.25);
    }

    #[test]
    fn bound_of_ramp_reference() {
        let derivs = derivative_chain(&parse("0.1*t").unwrap(), 2).unwrap();
        let est: f64 = estimate_traj_bound(&derivs, 10.0, 1001).unwrap();
        assert!((est - 1.0).abs() < 1e-6, "{est}");
    }

    #[test]
    fn estimated_bound_is_used_when_absent() {
        let traj = TrajectorySpec::<f64>::new(
            parse("0.3*cos(2*t)").unwrap(),
            2,
            TrajBound::Estimate {
                t_end: 10.0,
                samples: 10001,
            },
        )
        .unwrap();
        // second derivative dominates: 1.2 cos(2t)
        assert!((traj.xd_bar() - 1.2).abs() < 1e-6);
    }

    #[test]
    fn bad_reference_rejected() {
        assert!(
            TrajectorySpec::<f64>::new(parse("abs(t)").unwrap(), 1, TrajBound::Given(1.0)).is_err()
        );
        assert!(
            TrajectorySpec::<f64>::new(parse("x1").unwrap(), 1, TrajBound::Given(1.0)).is_err()
        );
        assert!(TrajectorySpec::<f64>::new(parse("0").unwrap(), 1, TrajBound::Given(0.0)).is_err());
        assert!(estimate_traj_bound::<f64>(&[parse("t").unwrap()], 1.0, 1).is_err());
    }
}
