//! Fixed-step classical Runge-Kutta integration.

use serde::{Deserialize, Serialize};

use crate::dynamics::{BodyState, StateDerivative, STATE_LEN};
use crate::error::{FlightError, Result};

pub const MAX_DT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Step size, s.
    pub dt: f64,
    /// Renormalize the quaternion every this many steps.
    pub renormalize_every: u32,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: 0.01, renormalize_every: 1 }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(FlightError::InvalidConfig(format!("dt = {} must lie in (0, {MAX_DT}]", self.dt)));
        }
        if self.renormalize_every == 0 {
            return Err(FlightError::InvalidConfig("renormalize_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Number of steps needed to cover `duration`, i.e. `ceil(duration / dt)`
/// with a small allowance for representation error in the quotient.
pub fn step_count(duration: f64, dt: f64) -> u64 {
    if duration <= 0.0 {
        return 0;
    }
    let n = duration / dt;
    let rounded = n.round();
    if (n - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded as u64
    } else {
        n.ceil() as u64
    }
}

/// One classical RK4 step on a fixed-size state vector.
pub fn rk4<const N: usize, E>(
    t: f64,
    y: &[f64; N],
    dt: f64,
    mut f: impl FnMut(f64, &[f64; N]) -> std::result::Result<[f64; N], E>,
) -> std::result::Result<[f64; N], E> {
    let offset = |k: &[f64; N], h: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + h * k[i]) };
    let half = 0.5 * dt;
    let k1 = f(t, y)?;
    let k2 = f(t + half, &offset(&k1, half))?;
    let k3 = f(t + half, &offset(&k2, half))?;
    let k4 = f(t + dt, &offset(&k3, dt))?;
    Ok(std::array::from_fn(|i| {
        y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

/// One RK4 step of the 13-component vehicle state. No renormalization;
/// intermediate stages see a non-unit quaternion.
pub fn rk4_step(
    t: f64,
    s: &BodyState,
    dt: f64,
    mut rhs: impl FnMut(f64, &BodyState) -> Result<StateDerivative>,
) -> Result<BodyState> {
    let y = rk4::<STATE_LEN, FlightError>(t, &s.to_array(), dt, |t, y| {
        rhs(t, &BodyState::from_array(y)).map(|d| d.to_array())
    })?;
    Ok(BodyState::from_array(&y))
}

/// Stateful stepper: tracks the step index (time is `index * dt`, never
/// accumulated) and applies the renormalization schedule.
#[derive(Debug, Clone)]
pub struct Integrator {
    cfg: IntegratorConfig,
    steps: u64,
}

impl Integrator {
    pub fn new(cfg: IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, steps: 0 })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.cfg.dt
    }

    pub fn step(
        &mut self,
        s: &BodyState,
        rhs: impl FnMut(f64, &BodyState) -> Result<StateDerivative>,
    ) -> Result<BodyState> {
        let mut next = rk4_step(self.time(), s, self.cfg.dt, rhs)?;
        self.steps += 1;
        if !next.is_finite() {
            return Err(FlightError::NonFiniteState { step: self.steps });
        }
        if self.steps % u64::from(self.cfg.renormalize_every) == 0 {
            next.q = next.q.normalize()?;
        }
        Ok(next)
    }
}

/// Integrates for `ceil(duration / dt)` steps, calling `observer(t, state)`
/// after each one.
pub fn integrate(
    s0: &BodyState,
    mut rhs: impl FnMut(f64, &BodyState) -> Result<StateDerivative>,
    duration: f64,
    cfg: IntegratorConfig,
    mut observer: impl FnMut(f64, &BodyState),
) -> Result<BodyState> {
    let mut integrator = Integrator::new(cfg)?;
    let mut s = *s0;
    for _ in 0..step_count(duration, cfg.dt) {
        s = integrator.step(&s, &mut rhs).map_err(|e| e.at(integrator.time()))?;
        observer(integrator.time(), &s);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{quat_derivative, AttitudeQuaternion, BodyRates};
    use crate::Vec3;

    fn spin(w: BodyRates) -> impl FnMut(f64, &BodyState) -> Result<StateDerivative> {
        move |_, s| {
            Ok(StateDerivative {
                q_dot: quat_derivative(&s.q, &w),
                ..Default::default()
            })
        }
    }

    #[test]
    fn step_counts() {
        assert_eq!(step_count(0.0, 0.01), 0);
        assert_eq!(step_count(10.0, 0.01), 1000);
        assert_eq!(step_count(0.3, 0.1), 3);
        assert_eq!(step_count(0.35, 0.1), 4);
        assert_eq!(step_count(1.0, 0.003), 334);
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        assert!(IntegratorConfig::with_dt(0.0).validate().is_err());
        assert!(IntegratorConfig::with_dt(0.2).validate().is_err());
        assert!(IntegratorConfig { dt: 0.01, renormalize_every: 0 }.validate().is_err());
    }

    #[test]
    fn zero_rhs_is_identity() {
        let s = BodyState {
            position: Vec3::new(1.0, 2.0, 3.0),
            v_body: Vec3::new(50.0, 0.0, -1.0),
            ..Default::default()
        };
        let out = rk4_step(0.0, &s, 0.01, |_, _| Ok(StateDerivative::default())).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn constant_acceleration_is_exact() {
        let a = Vec3::new(0.5, -9.8, 2.0);
        let rhs = |_: f64, s: &BodyState| {
            Ok(StateDerivative { position_dot: s.v_body, v_body_dot: a, ..Default::default() })
        };
        let v0 = Vec3::new(3.0, 1.0, 0.0);
        let s0 = BodyState { v_body: v0, ..Default::default() };
        let s = integrate(&s0, rhs, 2.0, IntegratorConfig::with_dt(0.05), |_, _| {}).unwrap();
        let t = 2.0;
        let exact = v0 * t + a * (0.5 * t * t);
        assert!((s.position - exact).amax() <= 1e-12);
    }

    #[test]
    fn duration_zero_never_observes() {
        let mut calls = 0;
        let s0 = BodyState::default();
        let s = integrate(&s0, spin(BodyRates::new(1.0, 0.0, 0.0)), 0.0, IntegratorConfig::default(), |_, _| calls += 1)
            .unwrap();
        assert_eq!(calls, 0);
        assert_eq!(s, s0);
    }

    #[test]
    fn observer_sees_every_step_time() {
        let mut times = Vec::new();
        integrate(&BodyState::default(), spin(BodyRates::ZERO), 0.05, IntegratorConfig::default(), |t, _| {
            times.push(t)
        })
        .unwrap();
        assert_eq!(times.len(), 5);
        assert_eq!(times[4], 5.0 * 0.01);
    }

    #[test]
    fn constant_rate_matches_axis_angle() {
        let w = BodyRates::new(0.3, -0.4, 0.5);
        let s = integrate(&BodyState::default(), spin(w), 10.0, IntegratorConfig::default(), |_, _| {}).unwrap();
        let wv = w.to_vec3();
        let exact = AttitudeQuaternion::IDENTITY.mul(&AttitudeQuaternion::from_axis_angle(wv, wv.norm() * 10.0));
        assert!(s.q.angle_to(&exact) <= 1e-6);
        assert!((s.q.norm() - 1.0).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn norm_drift_per_step_is_tiny() {
        let w = BodyRates::new(0.6, -0.5, 0.6);
        let s0 = BodyState::default();
        let s1 = rk4_step(0.0, &s0, 0.01, spin(w)).unwrap();
        assert!((s1.q.norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn renormalization_schedule() {
        let w = BodyRates::new(1.0, 0.0, 0.0);
        let mut it = Integrator::new(IntegratorConfig { dt: 0.1, renormalize_every: 3 }).unwrap();
        let mut s = BodyState::default();
        let mut norms = Vec::new();
        for _ in 0..3 {
            s = it.step(&s, spin(w)).unwrap();
            norms.push(s.q.norm());
        }
        assert!((norms[0] - 1.0).abs() > 0.0);
        assert!((norms[2] - 1.0).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn non_finite_state_reports_step() {
        let rhs = |t: f64, _: &BodyState| {
            let v = if t >= 0.02 { f64::INFINITY } else { 0.0 };
            Ok(StateDerivative { v_body_dot: Vec3::new(v, 0.0, 0.0), ..Default::default() })
        };
        let err = integrate(&BodyState::default(), rhs, 1.0, IntegratorConfig::default(), |_, _| {}).unwrap_err();
        assert!(matches!(err.root(), FlightError::NonFiniteState { step: 2 }));
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let w = BodyRates::new(0.2, 0.7, -0.3);
        let run = || {
            let mut out = Vec::new();
            integrate(&BodyState::default(), spin(w), 1.0, IntegratorConfig::default(), |_, s| {
                out.push(s.to_array().map(f64::to_bits))
            })
            .unwrap();
            out
        };
        assert_eq!(run(), run());
    }
}
