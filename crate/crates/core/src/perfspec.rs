//! Output and filtered-error performance funnels.
//!
//! The output funnel `psi(t) = psi0 e^{-mu t} + psi_inf` bounds the tracking
//! error. The filter `r = (d/dt + a)^{n-1} e` maps it onto a second funnel
//! `psi_r` for `r`, with amplitudes scaled so that containing `r` implies
//! containing the tracking error.

use crate::error::{Error, Result};
use crate::scalar::{binomial, powu, Real, MAX_ORDER};

/// `psi0 e^{-mu t} + psi_inf`.
#[inline]
pub fn psi_at<T: Real>(psi0: T, psi_inf: T, mu: T, t: T) -> T {
    psi0 * (-mu * t).exp() + psi_inf
}

/// Prescribed funnel on the tracking error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceSpec<T> {
    pub psi0: T,
    pub psi_inf: T,
    /// Decay rate in 1/s.
    pub mu: T,
}

impl<T: Real> PerformanceSpec<T> {
    pub fn new(psi0: T, psi_inf: T, mu: T) -> Result<Self> {
        if !(psi0 > T::zero()) || !psi0.is_finite() {
            return Err(Error::invalid("psi0", "must be > 0"));
        }
        if !(psi_inf > T::zero()) || !psi_inf.is_finite() {
            return Err(Error::invalid("psi_inf", "must be > 0"));
        }
        if !(mu >= T::zero()) || !mu.is_finite() {
            return Err(Error::invalid("mu", "must be >= 0"));
        }
        Ok(Self { psi0, psi_inf, mu })
    }

    pub fn psi(&self, t: T) -> T {
        psi_at(self.psi0, self.psi_inf, self.mu, t)
    }
}

/// Funnel on the filtered error together with the filter weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualSpec<T> {
    order: usize,
    a: T,
    mu_r: T,
    psi_r0: T,
    psi_r_inf: T,
    lambdas: Vec<T>,
}

impl<T: Real> VirtualSpec<T> {
    /// System order the filter was built for.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Filter pole location.
    pub fn a(&self) -> T {
        self.a
    }

    pub fn mu_r(&self) -> T {
        self.mu_r
    }

    pub fn psi_r0(&self) -> T {
        self.psi_r0
    }

    pub fn psi_r_inf(&self) -> T {
        self.psi_r_inf
    }

    /// `[lambda_1, ..., lambda_{n-1}]`.
    pub fn lambdas(&self) -> &[T] {
        &self.lambdas
    }

    pub fn psi_r(&self, t: T) -> T {
        psi_at(self.psi_r0, self.psi_r_inf, self.mu_r, t)
    }

    pub fn psi_r_dot(&self, t: T) -> T {
        -self.mu_r * self.psi_r0 * (-self.mu_r * t).exp()
    }
}

/// Filter weights `lambda_i = C(n-1, n-i) a^{n-i}` for `i = 1..n-1`.
///
/// Together with a trailing 1 these are the ascending coefficients of
/// `(s + a)^{n-1}`.
pub fn lambda_coeffs<T: Real>(n: usize, a: T) -> Vec<T> {
    assert!(
        (1..=MAX_ORDER).contains(&n),
        "order {n} outside 1..={MAX_ORDER}"
    );
    let m = (n - 1) as u32;
    (1..n as u32)
        .map(|i| T::count(binomial(m, n as u32 - i)) * powu(a, n as u32 - i))
        .collect()
}

/// Derives the filtered-error funnel from the output funnel:
/// `mu_r = mu`, `psi_r0 = (a - mu)^{n-1} psi0`, `psi_r_inf = a^{n-1} psi_inf`.
pub fn derive_vpc<T: Real>(pps: &PerformanceSpec<T>, a: T, n: usize) -> Result<VirtualSpec<T>> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::invalid("n", format!("must be in 1..={MAX_ORDER}")));
    }
    if !(a > pps.mu) || !a.is_finite() {
        return Err(Error::invalid("a", format!("must be > mu = {}", pps.mu)));
    }
    let m = (n - 1) as u32;
    let mu_r = pps.mu;
    Ok(VirtualSpec {
        order: n,
        a,
        mu_r,
        psi_r0: powu(a - mu_r, m) * pps.psi0,
        psi_r_inf: powu(a, m) * pps.psi_inf,
        lambdas: lambda_coeffs(n, a),
    })
}

/// `sum_{i=1}^{n-1} C(n-1, n-i) a^{n-i} h^i`, via the closed form
/// `h ((a + h)^{n-1} - h^{n-1})`.
pub fn weighted_binom_sum<T: Real>(a: T, h: T, n: usize) -> T {
    assert!(n >= 1, "order must be >= 1");
    let m = (n - 1) as u32;
    h * (powu(a + h, m) - powu(h, m))
}
