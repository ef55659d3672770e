//! Exponential envelopes propagated through first-order filter cascades.
//!
//! If `|X(t)| < X0 e^{-mu t} + Xinf` and `Z = s^q / (s + a)^p X` with zero
//! initial filter states and `a > mu`, then `|Z(t)|` obeys an envelope of the
//! same shape with amplitudes given by [`mixed_envelope`]. The tracking error
//! derivatives are exactly such cascades of the filtered error, which is where
//! [`deriv_envelope`] comes from.
//!
//! [`filter_cascade_check`] is a time-domain oracle for these bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::perfspec::VirtualSpec;
use crate::scalar::{binomial, powu, Real};

/// The bound `amp e^{-rate t} + floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope<T> {
    pub amp: T,
    pub rate: T,
    pub floor: T,
}

impl<T: Real> Envelope<T> {
    pub fn new(amp: T, rate: T, floor: T) -> Result<Self> {
        if !(amp >= T::zero()) || !amp.is_finite() {
            return Err(Error::invalid("amp", "must be >= 0"));
        }
        if !(rate >= T::zero()) || !rate.is_finite() {
            return Err(Error::invalid("rate", "must be >= 0"));
        }
        if !(floor >= T::zero()) || !floor.is_finite() {
            return Err(Error::invalid("floor", "must be >= 0"));
        }
        Ok(Self { amp, rate, floor })
    }

    pub fn value(&self, t: T) -> T {
        self.amp * (-self.rate * t).exp() + self.floor
    }

    fn check_pole(&self, a: T) -> Result<()> {
        if !(a > self.rate) || !a.is_finite() {
            return Err(Error::invalid(
                "a",
                format!("must be > envelope rate {}", self.rate),
            ));
        }
        Ok(())
    }
}

/// Envelope after `p` low-pass sections `1 / (s + a)`:
/// `amp / (a - rate)^p`, `floor / a^p`.
pub fn lowpass_envelope<T: Real>(env: Envelope<T>, a: T, p: u32) -> Result<Envelope<T>> {
    env.check_pole(a)?;
    Ok(Envelope {
        amp: env.amp / powu(a - env.rate, p),
        rate: env.rate,
        floor: env.floor / powu(a, p),
    })
}

/// Envelope after `q` high-pass sections `s / (s + a)`:
/// `amp ((2a - rate) / (a - rate))^q`, `2^q floor`.
pub fn highpass_envelope<T: Real>(env: Envelope<T>, a: T, q: u32) -> Result<Envelope<T>> {
    env.check_pole(a)?;
    let gain = (T::lit(2.0) * a - env.rate) / (a - env.rate);
    Ok(Envelope {
        amp: env.amp * powu(gain, q),
        rate: env.rate,
        floor: env.floor * powu(T::lit(2.0), q),
    })
}

/// Envelope after `s^q / (s + a)^p`, `p >= q`: `q` high-pass sections followed
/// by `p - q` low-pass ones.
pub fn mixed_envelope<T: Real>(env: Envelope<T>, a: T, p: u32, q: u32) -> Result<Envelope<T>> {
    if p < q {
        return Err(Error::invalid("q", format!("must be <= p = {p}")));
    }
    lowpass_envelope(highpass_envelope(env, a, q)?, a, p - q)
}

/// Envelope on the `i`-th tracking error derivative implied by `|r| < psi_r`:
/// `(2a - mu_r)^i psi_r0 / (a - mu_r)^{n-1}` decaying at `mu_r`, plus
/// `2^i psi_r_inf / a^{n-i-1}`.
///
/// Derived for zero initial error derivatives.
pub fn deriv_envelope<T: Real>(vspec: &VirtualSpec<T>, i: usize) -> Result<Envelope<T>> {
    let n = vspec.order();
    if i >= n {
        return Err(Error::invalid("i", format!("must be < n = {n}")));
    }
    let a = vspec.a();
    let mu = vspec.mu_r();
    let two = T::lit(2.0);
    let i32_ = i as u32;
    Ok(Envelope {
        amp: powu(two * a - mu, i32_) * vspec.psi_r0() / powu(a - mu, (n - 1) as u32),
        rate: mu,
        floor: powu(two, i32_) * vspec.psi_r_inf() / powu(a, (n - i - 1) as u32),
    })
}

/// Input signal fed to [`filter_cascade_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestSignal {
    Zero,
    /// The envelope itself, `X(t) = X0 e^{-mu t} + Xinf`.
    WorstCase,
    /// Piecewise-constant segments of random length and random level in
    /// `[-1, 1]` times the envelope, reproducible from the seed.
    RandomBounded {
        seed: u64,
    },
}

/// `P(m, x) = e^{-x} sum_{j >= m} x^j / j!`, the regularized lower incomplete
/// gamma function, summed directly so small `x` does not cancel.
fn gamma_p<T: Real>(m: u32, x: T) -> T {
    let mut term = T::one();
    for j in 1..=m {
        term = term * x / T::count(j as u64);
    }
    let mut sum = term;
    let mut j = m + 1;
    while term > sum * T::epsilon() * T::lit(1e-3) {
        term = term * x / T::count(j as u64);
        sum = sum + term;
        j += 1;
    }
    (-x).exp() * sum
}

struct SignalSource {
    kind: TestSignal,
    rng: Option<ChaCha8Rng>,
    level: f64,
    steps_left: usize,
    max_hold: usize,
}

impl SignalSource {
    fn new(kind: TestSignal, max_hold: usize) -> Self {
        let rng = match kind {
            TestSignal::RandomBounded { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Self {
            kind,
            rng,
            level: 0.0,
            steps_left: 0,
            max_hold: max_hold.max(1),
        }
    }

    /// Multiplier in `[-1, 1]` applied to the envelope for the next step.
    fn next_level(&mut self) -> f64 {
        match self.kind {
            TestSignal::Zero => 0.0,
            TestSignal::WorstCase => 1.0,
            TestSignal::RandomBounded { .. } => {
                let rng = self.rng.as_mut().expect("seeded");
                if self.steps_left == 0 {
                    self.steps_left = rng.random_range(1..=self.max_hold);
                    self.level = if rng.random_bool(0.3) {
                        if rng.random_bool(0.5) {
                            1.0
                        } else {
                            -1.0
                        }
                    } else {
                        rng.random_range(-1.0..=1.0)
                    };
                }
                self.steps_left -= 1;
                self.level
            }
        }
    }
}

/// Drives `s^q / (s + a)^p` from zero state with a signal under `env` and
/// returns `max_t (|Z(t)| - bound(t))` over the grid `t_k = k dt`, where
/// `bound` is [`mixed_envelope`]. Negative means the bound held everywhere.
///
/// The input is held constant on each step at the envelope's value at the end
/// of the step, so the held signal itself stays under the envelope. With a
/// constant input, every low-pass section of the chain has a closed-form
/// update:
///
/// ```text
/// W_m(t + h) = e^{-ah} sum_{j<m} W_{m-j}(t) h^j / j! + x P(m, ah) / a^m
/// ```
///
/// which reduces to `z e^{-ah} + x (1 - e^{-ah}) / a` for a single section.
/// The high-pass sections `x - a x / (s + a)` are expanded binomially:
/// `Z = sum_j C(q, j) (-a)^j W_{p-q+j}` with `W_0 = x`. The recursion is
/// therefore exact at the grid points and discretization cannot produce a
/// spurious violation.
pub fn filter_cascade_check<T: Real>(
    env: Envelope<T>,
    a: T,
    p: u32,
    q: u32,
    dt: T,
    t_end: T,
    signal: TestSignal,
) -> Result<T> {
    filter_cascade_outcome(env, a, p, q, dt, t_end, signal).map(|o| o.raw_margin)
}

/// Result of a cascade run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeOutcome<T> {
    /// `max_t (|Z(t)| - bound(t))`, as returned by [`filter_cascade_check`].
    pub raw_margin: T,
    /// The same maximum after subtracting, at every grid point, an allowance
    /// for floating-point rounding in the recursion and in the bound. For a
    /// signal riding its envelope the exact gap decays like `e^{-at}` and
    /// eventually drops below what `T` can resolve; this margin stays
    /// negative there while any breach larger than rounding noise still makes
    /// it positive.
    pub margin: T,
}

/// [`filter_cascade_check`] reporting both the raw margin and the margin net
/// of rounding.
pub fn filter_cascade_outcome<T: Real>(
    env: Envelope<T>,
    a: T,
    p: u32,
    q: u32,
    dt: T,
    t_end: T,
    signal: TestSignal,
) -> Result<CascadeOutcome<T>> {
    let out_env = mixed_envelope(env, a, p, q)?;
    if !(dt > T::zero()) {
        return Err(Error::invalid("dt", "must be > 0"));
    }
    if !(t_end > dt) || !t_end.is_finite() {
        return Err(Error::invalid("t_end", "must exceed dt"));
    }
    let h = dt;
    if a * h > T::lit(0.5) {
        return Err(Error::invalid("dt", "a * dt must be <= 0.5"));
    }
    let steps = (t_end / dt).round().to_usize().unwrap_or(usize::MAX);
    let order = p as usize;

    let decay = (-a * h).exp();
    let mut poly = vec![T::one(); order.max(1)];
    for j in 1..poly.len() {
        poly[j] = poly[j - 1] * h / T::count(j as u64);
    }
    let forced: Vec<T> = (1..=p).map(|m| gamma_p(m, a * h) / powu(a, m)).collect();
    let mix: Vec<T> = (0..=q)
        .map(|j| T::count(binomial(q, j)) * powu(-a, j))
        .collect();

    // w[0] is the held input, w[m] the m-th low-pass state
    let mut w = vec![T::zero(); order + 1];
    let mut next = vec![T::zero(); order + 1];
    let max_hold = (T::lit(3.0) / (a * h)).to_usize().unwrap_or(1);
    let mut source = SignalSource::new(signal, max_hold);

    let ulp = T::epsilon() * T::count(u64::from(p) + 2);
    // rounding in the stable recursion accumulates over ~1/(1 - e^{-ah}) steps
    let memory = T::one() / (T::one() - decay);
    let mut raw = T::neg_infinity();
    let mut resolved = T::neg_infinity();
    for k in 0..=steps {
        let t = h * T::count(k as u64);
        let level = T::lit(source.next_level());
        w[0] = level * env.value(t + h);

        let base = (p - q) as usize;
        let (z, size) =
            mix.iter()
                .enumerate()
                .fold((T::zero(), T::zero()), |(z, size), (j, &c)| {
                    let term = c * w[base + j];
                    (z + term, size + term.abs())
                });
        let bound = out_env.value(t);
        let steps_so_far = T::count(k as u64 + 1);
        let allowance = T::lit(8.0) * ulp * (size * memory.min(steps_so_far) + bound);
        raw = raw.max(z.abs() - bound);
        resolved = resolved.max(z.abs() - bound - allowance);
        if k == steps {
            break;
        }

        for m in 1..=order {
            let free = (0..m).fold(T::zero(), |acc, j| acc + w[m - j] * poly[j]);
            next[m] = decay * free + w[0] * forced[m - 1];
        }
        w[1..].copy_from_slice(&next[1..]);
    }
    Ok(CascadeOutcome {
        raw_margin: raw,
        margin: resolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perfspec::{derive_vpc, PerformanceSpec};

    fn env(amp: f64, rate: f64, floor: f64) -> Envelope<f64> {
        Envelope::new(amp, rate, floor).unwrap()
    }

    #[test]
    fn zero_order_filters_are_identity() {
        let e = env(1.3, 0.4, 0.2);
        assert_eq!(lowpass_envelope(e, 2.0, 0).unwrap(), e);
        assert_eq!(highpass_envelope(e, 2.0, 0).unwrap(), e);
    }

    #[test]
    fn lowpass_single_section() {
        assert_eq!(
            lowpass_envelope(env(1.0, 1.0, 0.01), 2.0, 1).unwrap(),
            env(1.0, 1.0, 0.005)
        );
    }

    #[test]
    fn lowpass_undecayed_input() {
        let got = lowpass_envelope(env(4.0, 0.0, 0.8), 2.0, 3).unwrap();
        assert_eq!(got, env(0.5, 0.0, 0.1));
    }

    #[test]
    fn highpass_gains() {
        assert_eq!(
            highpass_envelope(env(1.0, 1.0, 0.5), 2.0, 1).unwrap(),
            env(3.0, 1.0, 1.0)
        );
        assert_eq!(
            highpass_envelope(env(1.0, 1.0, 0.5), 2.0, 2).unwrap(),
            env(9.0, 1.0, 2.0)
        );
    }

    #[test]
    fn mixed_reductions() {
        let e = env(0.7, 1.0, 0.3);
        assert_eq!(
            mixed_envelope(e, 2.0, 2, 2).unwrap(),
            highpass_envelope(e, 2.0, 2).unwrap()
        );
        assert_eq!(
            mixed_envelope(e, 2.0, 3, 0).unwrap(),
            lowpass_envelope(e, 2.0, 3).unwrap()
        );
        assert_eq!(
            mixed_envelope(env(1.0, 1.0, 1.0), 2.0, 2, 1).unwrap(),
            env(3.0, 1.0, 1.0)
        );
        assert!(mixed_envelope(e, 2.0, 1, 2).is_err());
    }

    #[test]
    fn pole_must_exceed_rate() {
        let e = env(1.0, 2.0, 0.1);
        assert!(lowpass_envelope(e, 2.0, 1).is_err());
        assert!(highpass_envelope(e, 1.5, 1).is_err());
        assert!(Envelope::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn derivative_envelopes_for_example_design() {
        let pps = PerformanceSpec::new(1.0, 0.01, 1.0).unwrap();
        let v = derive_vpc(&pps, 2.0, 2).unwrap();
        assert_eq!(deriv_envelope(&v, 0).unwrap(), env(1.0, 1.0, 0.01));
        assert_eq!(deriv_envelope(&v, 1).unwrap(), env(3.0, 1.0, 0.04));
        assert!(deriv_envelope(&v, 2).is_err());
    }

    #[test]
    fn final_bound_form() {
        // after substituting the funnel design: (2a - mu)^i psi0 and (2a)^i psi_inf
        let pps = PerformanceSpec::new(0.8, 0.05, 0.5).unwrap();
        let v = derive_vpc(&pps, 1.5, 4).unwrap();
        for i in 0..4 {
            let e = deriv_envelope(&v, i).unwrap();
            let amp = 2.5f64.powi(i as i32) * 0.8;
            let floor = 3.0f64.powi(i as i32) * 0.05;
            assert!((e.amp - amp).abs() <= 1e-13 * amp, "i={i}");
            assert!((e.floor - floor).abs() <= 1e-13 * floor, "i={i}");
        }
    }

    #[test]
    fn gamma_p_matches_complement() {
        for m in 1..5u32 {
            for &x in &[0.5f64, 0.1, 1e-3] {
                let mut partial = 0.0;
                let mut term = 1.0;
                for j in 0..m {
                    if j > 0 {
                        term *= x / j as f64;
                    }
                    partial += term;
                }
                let want = 1.0 - (-x).exp() * partial;
                let got = gamma_p(m, x);
                assert!(
                    (got - want).abs() <= 1e-12 * want.max(1e-300) + 1e-16,
                    "m={m} x={x}"
                );
            }
        }
    }

    #[test]
    fn single_section_matches_closed_form_response() {
        // constant input c into 1/(s+a): c (1 - e^{-at}) / a
        let e = env(0.0, 0.0, 1.0);
        let a = 2.0;
        let margin = filter_cascade_check(e, a, 1, 0, 1e-3, 5.0, TestSignal::WorstCase).unwrap();
        let want = (1.0 - (-a * 5.0f64).exp()) / a - 0.5;
        assert!((margin - want).abs() < 1e-14, "{margin} vs {want}");
    }

    #[test]
    fn double_section_matches_closed_form_response() {
        // unit step into 1/(s+a)^2: (1 - e^{-at}(1 + at)) / a^2
        let a = 3.0;
        let margin = filter_cascade_check(
            env(0.0, 0.0, 1.0),
            a,
            2,
            0,
            1e-3,
            1.0,
            TestSignal::WorstCase,
        )
        .unwrap();
        let t = 1.0f64;
        let want = (1.0 - (-a * t).exp() * (1.0 + a * t)) / (a * a) - 1.0 / (a * a);
        assert!((margin - want).abs() < 1e-14, "{margin} vs {want}");
    }

    #[test]
    fn zero_input_margin_is_final_envelope() {
        let e = env(1.0, 1.0, 0.01);
        let out = mixed_envelope(e, 2.0, 2, 1).unwrap();
        let margin = filter_cascade_check(e, 2.0, 2, 1, 1e-3, 10.0, TestSignal::Zero).unwrap();
        assert_eq!(margin, -out.value(10.0));
        assert!(margin <= -out.floor);
    }

    #[test]
    fn worst_case_lowpass_respects_bound() {
        let margin = filter_cascade_check(
            env(1.0, 1.0, 0.01),
            2.0,
            1,
            0,
            1e-4,
            20.0,
            TestSignal::WorstCase,
        )
        .unwrap();
        assert!(margin < 0.0, "{margin}");
    }

    #[test]
    fn rounding_allowance_is_small_and_one_sided() {
        let e = env(4.44, 4.99, 0.49);
        let o = filter_cascade_outcome(e, 5.58, 1, 0, 1e-3, 8.0, TestSignal::WorstCase).unwrap();
        assert!(o.margin < 0.0 && o.margin <= o.raw_margin);
        assert!(o.raw_margin - o.margin < 1e-11, "{o:?}");
        // a tie in exact arithmetic: the input passed straight through
        let flat = env(0.0, 0.0, 1.0);
        let o = filter_cascade_outcome(flat, 2.0, 0, 0, 1e-3, 1.0, TestSignal::WorstCase).unwrap();
        assert_eq!(o.raw_margin, 0.0);
        assert!(o.margin < 0.0 && o.margin > -1e-14);
    }

    #[test]
    fn random_signals_are_reproducible() {
        let e = env(1.0, 0.5, 0.1);
        let s = TestSignal::RandomBounded { seed: 7 };
        let m1 = filter_cascade_check(e, 2.0, 3, 1, 1e-3, 5.0, s).unwrap();
        let m2 = filter_cascade_check(e, 2.0, 3, 1, 1e-3, 5.0, s).unwrap();
        assert_eq!(m1, m2);
        assert!(m1 < 0.0);
    }

    #[test]
    fn coarse_steps_rejected() {
        let e = env(1.0, 0.5, 0.1);
        assert!(filter_cascade_check(e, 2.0, 1, 0, 0.3, 5.0, TestSignal::Zero).is_err());
        assert!(filter_cascade_check(e, 2.0, 1, 0, 0.0, 5.0, TestSignal::Zero).is_err());
        assert!(filter_cascade_check(e, 2.0, 1, 0, 0.1, 0.05, TestSignal::Zero).is_err());
    }
}
