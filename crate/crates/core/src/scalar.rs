use core::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the crate.
///
/// Blanket-implemented for every type with the required bounds, which in
/// practice means `f32` and `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Conversion from an integer count (orders, exponents, binomial coefficients).
    #[inline]
    fn count(n: u64) -> Self {
        Self::from_u64(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Integer power with a `u32` exponent; `x^0 == 1` including for `x == 0`.
#[inline]
pub(crate) fn powu<T: Real>(x: T, k: u32) -> T {
    x.powi(k as i32)
}

/// Largest system order accepted by validated types.
///
/// Binomial coefficients are formed exactly in integer arithmetic; the cap keeps
/// every coefficient and every `a^k` factor well inside `f64` range for the
/// design constants this crate is meant for.
pub const MAX_ORDER: usize = 20;

/// Exact binomial coefficient `C(n, k)`, zero when `k > n`.
///
/// Uses the multiplicative formula in `u128` so intermediates cannot overflow
/// for `n <= 62`.
pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    u64::try_from(acc).expect("binomial coefficient exceeds u64")
}
