//! Saturating prescribed-performance control law.
//!
//! The law uses nothing but the filtered error, its funnel and the input
//! bound: `u = -(2 ub / pi) atan((pi / 2 ub) tan(pi r / 2 psi_r))`. As
//! `r -> +psi_r` the input tends to `-ub`, as `r -> -psi_r` to `+ub`, and it
//! never exceeds `ub` in magnitude.

use crate::error::{Error, Result};
use crate::perfspec::VirtualSpec;
use crate::scalar::Real;

/// Default guard on `|r / psi_r|` beyond which the saturated limit is emitted.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-12;

/// `r = sum_i lambda_i e^{(i-1)} + e^{(n-1)}` for `err_derivs = [e, e', ..., e^{(n-1)}]`.
pub fn filtered_error<T: Real>(err_derivs: &[T], lambdas: &[T]) -> Result<T> {
    if err_derivs.len() != lambdas.len() + 1 {
        return Err(Error::LengthMismatch {
            expected: lambdas.len() + 1,
            got: err_derivs.len(),
        });
    }
    let (&last, head) = err_derivs.split_last().expect("at least one entry");
    Ok(head
        .iter()
        .zip(lambdas)
        .fold(last, |acc, (&e, &l)| acc + l * e))
}

/// Tracking error derivatives `e^{(i)} = x_{i+1} - xd^{(i)}` for `i = 0..n-1`.
///
/// `ref_derivs` may be longer than `state`; extra entries are ignored.
pub fn error_derivatives<T: Real>(state: &[T], ref_derivs: &[T], out: &mut [T]) -> Result<()> {
    let n = state.len();
    if ref_derivs.len() < n || out.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: ref_derivs.len().min(out.len()),
        });
    }
    for ((o, &x), &xd) in out.iter_mut().zip(state).zip(ref_derivs) {
        *o = x - xd;
    }
    Ok(())
}

fn effective_guard<T: Real>(clamp_eps: T) -> T {
    // below ~8 ulp the product with pi/2 can land past the pole in low precision
    clamp_eps.max(T::epsilon() * T::lit(8.0))
}

/// Evaluates the control law with the default guard.
///
/// Returns the input and whether the saturated limit was used.
pub fn control_law<T: Real>(r: T, psi_r: T, u_bar: T) -> Result<(T, bool)> {
    control_law_with_guard(r, psi_r, u_bar, T::lit(DEFAULT_CLAMP_EPS))
}

pub fn control_law_with_guard<T: Real>(
    r: T,
    psi_r: T,
    u_bar: T,
    clamp_eps: T,
) -> Result<(T, bool)> {
    if !(psi_r > T::zero()) {
        return Err(Error::invalid("psi_r", "must be > 0"));
    }
    if !(u_bar > T::zero()) {
        return Err(Error::invalid("u_bar", "must be > 0"));
    }
    if !r.is_finite() {
        return Err(Error::invalid("r", "must be finite"));
    }
    let ratio = r / psi_r;
    if ratio.abs() > T::one() - effective_guard(clamp_eps) {
        // one-sided limit of the law at the funnel boundary
        return Ok((-ratio.signum() * u_bar, true));
    }
    let inner = (T::FRAC_PI_2() * ratio).tan();
    let u = -(u_bar / T::FRAC_PI_2()) * ((T::FRAC_PI_2() / u_bar) * inner).atan();
    Ok((u, false))
}

/// One evaluation of the closed-loop controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput<T> {
    pub u: T,
    pub r: T,
    pub psi_r: T,
    pub saturated: bool,
}

/// Control law bound to a filtered-error funnel and an input limit.
///
/// `violation_flag` latches once the saturated branch has been taken, i.e.
/// once `|r|` reached its funnel numerically.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller<T> {
    vspec: VirtualSpec<T>,
    u_bar: T,
    clamp_eps: T,
    violation_flag: bool,
}

impl<T: Real> Controller<T> {
    pub fn new(vspec: VirtualSpec<T>, u_bar: T) -> Result<Self> {
        if !(u_bar > T::zero()) || !u_bar.is_finite() {
            return Err(Error::invalid("u_bar", "must be > 0"));
        }
        Ok(Self {
            vspec,
            u_bar,
            clamp_eps: T::lit(DEFAULT_CLAMP_EPS),
            violation_flag: false,
        })
    }

    pub fn with_clamp_eps(mut self, clamp_eps: T) -> Result<Self> {
        if !(clamp_eps > T::zero() && clamp_eps < T::lit(1e-6)) {
            return Err(Error::invalid("clamp_eps", "must lie in (0, 1e-6)"));
        }
        self.clamp_eps = clamp_eps;
        Ok(self)
    }

    pub fn vspec(&self) -> &VirtualSpec<T> {
        &self.vspec
    }

    pub fn u_bar(&self) -> T {
        self.u_bar
    }

    pub fn clamp_eps(&self) -> T {
        self.clamp_eps
    }

    pub fn violation_flag(&self) -> bool {
        self.violation_flag
    }

    pub fn reset(&mut self) {
        self.violation_flag = false;
    }

    /// Input for the given tracking error derivatives at time `t`.
    pub fn compute(&mut self, t: T, err_derivs: &[T]) -> Result<ControlOutput<T>> {
        let out = self.evaluate(t, err_derivs)?;
        self.violation_flag |= out.saturated;
        Ok(out)
    }

    /// Same as [`compute`](Self::compute) without touching the flag.
    pub fn evaluate(&self, t: T, err_derivs: &[T]) -> Result<ControlOutput<T>> {
        let r = filtered_error(err_derivs, self.vspec.lambdas())?;
        let psi_r = self.vspec.psi_r(t);
        let (u, saturated) = control_law_with_guard(r, psi_r, self.u_bar, self.clamp_eps)?;
        Ok(ControlOutput {
            u,
            r,
            psi_r,
            saturated,
        })
    }
}
