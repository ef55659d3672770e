//! Fixed-step closed-loop simulation with constraint monitors.

use crate::bounds::{deriv_envelope, Envelope};
use crate::controller::{error_derivatives, ControlOutput, Controller};
use crate::error::{Error, Result};
use crate::perfspec::{PerformanceSpec, VirtualSpec};
use crate::plant::{PlantModel, TrajectorySpec};
use crate::scalar::Real;

/// One classical fourth-order Runge-Kutta step of `x' = rhs(t, x)`.
///
/// `rhs` writes the derivative into its third argument.
pub fn rk4_step<T, F>(mut rhs: F, t: T, state: &[T], dt: T) -> Result<Vec<T>>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]) -> Result<()>,
{
    let n = state.len();
    let half = dt / T::lit(2.0);
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];

    rhs(t, state, &mut k1)?;
    for i in 0..n {
        tmp[i] = state[i] + half * k1[i];
    }
    rhs(t + half, &tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = state[i] + half * k2[i];
    }
    rhs(t + half, &tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = state[i] + dt * k3[i];
    }
    rhs(t + dt, &tmp, &mut k4)?;

    let next: Vec<T> = (0..n)
        .map(|i| state[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
        .collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            t: (t + dt).as_f64(),
        });
    }
    Ok(next)
}

/// Plant, reference and controller wired together.
#[derive(Debug, Clone)]
pub struct ClosedLoop<'a, T> {
    plant: &'a PlantModel<T>,
    reference: &'a TrajectorySpec<T>,
    controller: Controller<T>,
    ref_buf: Vec<T>,
    err_buf: Vec<T>,
}

impl<'a, T: Real> ClosedLoop<'a, T> {
    pub fn new(
        plant: &'a PlantModel<T>,
        reference: &'a TrajectorySpec<T>,
        controller: Controller<T>,
    ) -> Result<Self> {
        let n = plant.order();
        if reference.order() != n {
            return Err(Error::invalid(
                "trajectory",
                format!("has {} derivatives, plant order is {n}", reference.order()),
            ));
        }
        if controller.vspec().order() != n {
            return Err(Error::invalid(
                "a",
                format!(
                    "filter built for order {}, plant order is {n}",
                    controller.vspec().order()
                ),
            ));
        }
        Ok(Self {
            plant,
            reference,
            controller,
            ref_buf: vec![T::zero(); n + 1],
            err_buf: vec![T::zero(); n],
        })
    }

    pub fn controller(&self) -> &Controller<T> {
        &self.controller
    }

    /// Reference derivatives and tracking error derivatives at `(t, state)`.
    pub fn errors(&mut self, t: T, state: &[T]) -> Result<(&[T], &[T])> {
        self.reference.eval_into(t, &mut self.ref_buf)?;
        error_derivatives(state, &self.ref_buf, &mut self.err_buf)?;
        Ok((&self.ref_buf, &self.err_buf))
    }

    /// Control input at `(t, state)`. Latches the controller's violation flag.
    pub fn control(&mut self, t: T, state: &[T]) -> Result<ControlOutput<T>> {
        self.errors(t, state)?;
        self.controller.compute(t, &self.err_buf)
    }

    fn rhs(&mut self, t: T, state: &[T], out: &mut [T]) -> Result<()> {
        let u = self.control(t, state)?.u;
        self.plant.dynamics_into(state, u, t, out)
    }

    /// RK4 step with the input re-evaluated at every stage.
    pub fn step(&mut self, t: T, state: &[T], dt: T) -> Result<Vec<T>> {
        rk4_step(|t, x, out| self.rhs(t, x, out), t, state, dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub dt: T,
    pub t_end: T,
    pub x0: Vec<T>,
    /// Keep every `record_stride`-th step (the last step is always kept).
    pub record_stride: usize,
}

impl<T: Real> SimConfig<T> {
    pub fn new(x0: Vec<T>) -> Self {
        Self {
            dt: T::lit(1e-3),
            t_end: T::lit(20.0),
            x0,
            record_stride: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::invalid("dt", "must be > 0"));
        }
        if !(self.t_end > self.dt) || !self.t_end.is_finite() {
            return Err(Error::invalid("t_end", "must be > dt"));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be >= 1"));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("x0", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `|e| >= psi`.
    Ppc,
    /// `|r| >= psi_r`.
    Vpc,
    /// `|u| > u_bar`.
    Pic,
    /// `|e^{(i)}|` above its derivative envelope, `i >= 1`. Advisory only: the
    /// envelope is derived for zero initial error derivatives.
    Envelope(usize),
}

impl ViolationKind {
    pub fn is_hard(self) -> bool {
        !matches!(self, ViolationKind::Envelope(_))
    }
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ViolationKind::Ppc => f.write_str("PPC"),
            ViolationKind::Vpc => f.write_str("VPC"),
            ViolationKind::Pic => f.write_str("PIC"),
            ViolationKind::Envelope(i) => write!(f, "envelope_{i}"),
        }
    }
}

/// Onset of a monitored breach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationEvent<T> {
    pub time: T,
    pub kind: ViolationKind,
    pub value: T,
    pub bound: T,
}

/// One recorded instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub state: Vec<T>,
    /// `[xd, xd', ..., xd^(n)]`.
    pub xd: Vec<T>,
    /// `[e, e', ..., e^(n-1)]`.
    pub err: Vec<T>,
    pub psi: T,
    pub r: T,
    pub psi_r: T,
    pub u: T,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub order: usize,
    pub u_bar: T,
    pub samples: Vec<Sample<T>>,
    /// One event per breach onset, in time order. Monitors run at every
    /// integration step, not only at recorded samples.
    pub violations: Vec<ViolationEvent<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn hard_violations(&self) -> impl Iterator<Item = &ViolationEvent<T>> {
        self.violations.iter().filter(|v| v.kind.is_hard())
    }

    pub fn has_hard_violation(&self) -> bool {
        self.hard_violations().next().is_some()
    }

    pub fn warnings(&self) -> impl Iterator<Item = &ViolationEvent<T>> {
        self.violations.iter().filter(|v| !v.kind.is_hard())
    }
}

struct Monitor<T> {
    kind: ViolationKind,
    active: bool,
    events: Vec<ViolationEvent<T>>,
}

impl<T: Real> Monitor<T> {
    fn new(kind: ViolationKind) -> Self {
        Self {
            kind,
            active: false,
            events: Vec::new(),
        }
    }

    fn observe(&mut self, time: T, breached: bool, value: T, bound: T) {
        if breached && !self.active {
            self.events.push(ViolationEvent {
                time,
                kind: self.kind,
                value,
                bound,
            });
        }
        self.active = breached;
    }
}

/// Integrates the closed loop from `cfg.x0` over `[0, cfg.t_end]`.
///
/// Feasibility is not checked here.
pub fn simulate<T: Real>(
    plant: &PlantModel<T>,
    reference: &TrajectorySpec<T>,
    pps: &PerformanceSpec<T>,
    vspec: &VirtualSpec<T>,
    u_bar: T,
    cfg: &SimConfig<T>,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let n = plant.order();
    if cfg.x0.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: cfg.x0.len(),
        });
    }
    let controller = Controller::new(vspec.clone(), u_bar)?;
    let mut system = ClosedLoop::new(plant, reference, controller)?;

    let envelopes: Vec<Envelope<T>> = (1..n)
        .map(|i| deriv_envelope(vspec, i))
        .collect::<Result<_>>()?;
    let mut ppc = Monitor::new(ViolationKind::Ppc);
    let mut vpc = Monitor::new(ViolationKind::Vpc);
    let mut pic = Monitor::new(ViolationKind::Pic);
    let mut env_monitors: Vec<Monitor<T>> = (1..n)
        .map(|i| Monitor::new(ViolationKind::Envelope(i)))
        .collect();

    let steps = (cfg.t_end / cfg.dt)
        .round()
        .to_usize()
        .unwrap_or(usize::MAX);
    let mut samples = Vec::with_capacity(steps / cfg.record_stride + 2);
    let mut state = cfg.x0.clone();

    for k in 0..=steps {
        let t = cfg.dt * T::count(k as u64);
        let out = system.control(t, &state)?;
        let (xd, err) = system.errors(t, &state)?;
        let psi = pps.psi(t);

        ppc.observe(t, err[0].abs() >= psi, err[0], psi);
        vpc.observe(t, out.r.abs() >= out.psi_r, out.r, out.psi_r);
        pic.observe(t, out.u.abs() > u_bar, out.u, u_bar);
        for (i, (mon, env)) in env_monitors.iter_mut().zip(&envelopes).enumerate() {
            let bound = env.value(t);
            let v = err[i + 1];
            mon.observe(t, v.abs() >= bound, v, bound);
        }

        if k % cfg.record_stride == 0 || k == steps {
            samples.push(Sample {
                t,
                state: state.clone(),
                xd: xd.to_vec(),
                err: err.to_vec(),
                psi,
                r: out.r,
                psi_r: out.psi_r,
                u: out.u,
                saturated: out.saturated,
            });
        }
        if k < steps {
            state = system.step(t, &state, cfg.dt)?;
        }
    }

    let mut violations: Vec<ViolationEvent<T>> = [ppc, vpc, pic]
        .into_iter()
        .chain(env_monitors)
        .flat_map(|m| m.events)
        .collect();
    violations.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));

    Ok(Trajectory {
        order: n,
        u_bar,
        samples,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perfspec::derive_vpc;
    use crate::plant::builtin_example;

    fn decay(_t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = -x[0];
        Ok(())
    }

    #[test]
    fn rk4_single_step_on_decay() {
        let x = rk4_step(decay, 0.0, &[1.0], 0.1).unwrap();
        let h = 0.1f64;
        let want = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((x[0] - want).abs() < 1e-15);
        assert!((x[0] - 0.9048375).abs() < 1e-7);
    }

    #[test]
    fn rk4_zero_dynamics() {
        let x = rk4_step(
            |_, _, out: &mut [f64]| {
                out.fill(0.0);
                Ok(())
            },
            0.0,
            &[1.5, -2.0],
            0.3,
        )
        .unwrap();
        assert_eq!(x, vec![1.5, -2.0]);
    }

    #[test]
    fn rk4_integrates_decay_to_one_second() {
        let mut x = vec![1.0f64];
        let dt = 1e-3;
        for k in 0..1000 {
            x = rk4_step(decay, k as f64 * dt, &x, dt).unwrap();
        }
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn rk4_reports_blow_up() {
        let err = rk4_step(
            |_, x: &[f64], out: &mut [f64]| {
                out[0] = x[0] * 1e308;
                Ok(())
            },
            0.0,
            &[10.0],
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::new(vec![0.0f64, 0.0]);
        assert!(cfg.validate().is_ok());
        cfg.dt = 0.0;
        assert!(cfg.validate().is_err());
        cfg.dt = 1.0;
        cfg.t_end = 1.0;
        assert!(cfg.validate().is_err());
        cfg.t_end = 2.0;
        cfg.record_stride = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn short_example_run_records_expected_rows() {
        let (plant, reference) = builtin_example::<f64>();
        let pps = PerformanceSpec::new(1.0, 0.01, 1.0).unwrap();
        let vspec = derive_vpc(&pps, 2.0, 2).unwrap();
        let cfg = SimConfig {
            dt: 1e-3,
            t_end: 1.0,
            x0: vec![0.4, 0.29],
            record_stride: 100,
        };
        let traj = simulate(&plant, &reference, &pps, &vspec, 6.0, &cfg).unwrap();
        assert_eq!(traj.samples.len(), 11);
        let first = &traj.samples[0];
        assert_eq!(first.t, 0.0);
        assert!((first.r - 0.59).abs() < 1e-12);
        assert_eq!(first.psi_r, 1.02);
        assert!((traj.samples[10].t - 1.0).abs() < 1e-12);
        assert!(!traj.has_hard_violation());
    }

    #[test]
    fn tiny_input_bound_breaches_funnel() {
        let (plant, reference) = builtin_example::<f64>();
        let pps = PerformanceSpec::new(1.0, 0.01, 1.0).unwrap();
        let vspec = derive_vpc(&pps, 2.0, 2).unwrap();
        let cfg = SimConfig {
            dt: 1e-3,
            t_end: 10.0,
            x0: vec![0.6, 0.29],
            record_stride: 10,
        };
        let traj = simulate(&plant, &reference, &pps, &vspec, 0.05, &cfg).unwrap();
        assert!(traj.has_hard_violation());
        assert!(traj.samples.iter().all(|s| s.u.abs() <= 0.05));
    }

    #[test]
    fn mismatched_initial_state() {
        let (plant, reference) = builtin_example::<f64>();
        let pps = PerformanceSpec::new(1.0, 0.01, 1.0).unwrap();
        let vspec = derive_vpc(&pps, 2.0, 2).unwrap();
        let cfg = SimConfig::new(vec![0.0]);
        assert!(matches!(
            simulate(&plant, &reference, &pps, &vspec, 6.0, &cfg),
            Err(Error::LengthMismatch {
                expected: 2,
                got: 1
            })
        ));
        let vspec3 = derive_vpc(&pps, 2.0, 3).unwrap();
        let cfg = SimConfig::new(vec![0.0, 0.0]);
        assert!(simulate(&plant, &reference, &pps, &vspec3, 6.0, &cfg).is_err());
    }
}
