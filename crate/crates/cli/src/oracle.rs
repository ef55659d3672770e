//! Batch runner for the filter-cascade bound oracle.

use ppcsat::bounds::{filter_cascade_outcome, Envelope, TestSignal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::output::TrialRow;

/// Upper end of the randomized pole range.
pub const MAX_POLE: f64 = 10.0;
/// Largest cascade order drawn in randomized mode.
pub const MAX_SECTIONS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeCase {
    pub a: f64,
    pub mu_x: f64,
    pub amp: f64,
    pub floor: f64,
    pub p: u32,
    pub q: u32,
}

impl CascadeCase {
    /// Draws `a` in `(mu_x, 10]`, `1 <= p <= 4`, `q <= p`.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mu_x = rng.random_range(0.0..5.0);
        let a = rng.random_range(mu_x..MAX_POLE);
        // half-open ranges can return the lower end
        let a = if a > mu_x { a } else { MAX_POLE };
        let p = rng.random_range(1..=MAX_SECTIONS);
        CascadeCase {
            a,
            mu_x,
            amp: rng.random_range(0.0..5.0),
            floor: rng.random_range(1e-3..2.0),
            p,
            q: rng.random_range(0..=p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalMode {
    Random,
    WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRun {
    /// Parameters for every trial unless `randomize` is set.
    pub case: CascadeCase,
    pub randomize: bool,
    pub dt: f64,
    pub t_end: f64,
    pub trials: usize,
    pub seed: u64,
    pub signal: SignalMode,
}

/// Runs all trials; a trial passes when its margin, net of floating-point
/// rounding, is strictly negative.
pub fn run_trials(run: &OracleRun) -> ppcsat::Result<Vec<TrialRow>> {
    let mut params = ChaCha8Rng::seed_from_u64(run.seed);
    (0..run.trials)
        .map(|trial| {
            let case = if run.randomize {
                CascadeCase::random(&mut params)
            } else {
                run.case
            };
            let signal = match run.signal {
                SignalMode::WorstCase => TestSignal::WorstCase,
                SignalMode::Random => TestSignal::RandomBounded {
                    seed: params.random(),
                },
            };
            let env = Envelope::new(case.amp, case.mu_x, case.floor)?;
            // keep the exact update well inside its validity range
            let dt = run.dt.min(0.5 / case.a);
            let margin =
                filter_cascade_outcome(env, case.a, case.p, case.q, dt, run.t_end, signal)?.margin;
            Ok(TrialRow {
                trial,
                margin,
                pass: margin < 0.0,
            })
        })
        .collect()
}
