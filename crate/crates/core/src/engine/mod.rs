//! Simulation loops built on the integrator: scenario loading, trim, and
//! batch and real-time runs producing telemetry frames.

mod realtime;
mod scenario;
mod trim;

use std::time::{Duration, Instant};

pub use realtime::{
    run_realtime, Clock, ControlMailbox, ControlSource, MonotonicClock, RealtimeOptions, ScriptedControls,
    VirtualClock, MAX_CATCH_UP_STEPS,
};
pub use scenario::{
    InitialCondition, PreparedRun, Scenario, ScenarioError, ScheduleEntry, Setting, TrimSpec, BUILTIN_SCENARIOS,
};
pub use trim::{trim_level, TrimSolution, TRIM_ACCEL_TOL, TRIM_ANGULAR_TOL, TRIM_MAX_ITERATIONS};

use crate::dynamics::{state_derivative, AircraftParameters, BodyState, ControlInputs};
use crate::error::Result;
use crate::integrator::{step_count, IntegratorConfig, Integrator};
use crate::telemetry::StateFrame;

/// Piecewise-constant control history: `base` until the first point,
/// then each point's inputs from its time onward.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProfile {
    base: ControlInputs,
    points: Vec<(f64, ControlInputs)>,
}

impl ControlProfile {
    pub fn constant(u: ControlInputs) -> Self {
        Self { base: u, points: Vec::new() }
    }

    /// `points` must be sorted by time.
    pub fn new(base: ControlInputs, points: Vec<(f64, ControlInputs)>) -> Self {
        Self { base, points }
    }

    pub fn base(&self) -> ControlInputs {
        self.base
    }

    pub fn at(&self, t: f64) -> ControlInputs {
        match self.points.partition_point(|(ti, _)| *ti <= t) {
            0 => self.base,
            k => self.points[k - 1].1,
        }
    }
}

/// One aircraft advancing in fixed steps under externally supplied
/// controls.
#[derive(Debug, Clone)]
pub struct Simulation {
    params: AircraftParameters,
    integrator: Integrator,
    state: BodyState,
}

impl Simulation {
    pub fn new(params: AircraftParameters, initial: BodyState, cfg: IntegratorConfig) -> Result<Self> {
        Ok(Self { params, integrator: Integrator::new(cfg)?, state: initial })
    }

    pub fn time(&self) -> f64 {
        self.integrator.time()
    }

    pub fn steps(&self) -> u64 {
        self.integrator.steps_taken()
    }

    pub fn state(&self) -> &BodyState {
        &self.state
    }

    pub fn params(&self) -> &AircraftParameters {
        &self.params
    }

    /// Advances one step holding `u` constant. Errors carry the time at
    /// which the step started.
    pub fn step(&mut self, u: &ControlInputs) -> Result<&BodyState> {
        let t = self.time();
        u.validate().map_err(|e| e.at(t))?;
        let params = &self.params;
        self.state = self
            .integrator
            .step(&self.state, |_, s| state_derivative(s, params, u))
            .map_err(|e| e.at(t))?;
        Ok(&self.state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub final_time: f64,
    pub final_state: BodyState,
    pub overruns: u64,
    pub wall_time: Duration,
}

/// Runs a prepared start state and control profile for `duration`,
/// handing every post-step frame to `sink`. On failure a last frame
/// carrying the error message is emitted before the error is returned.
pub fn run_profile(
    params: &AircraftParameters,
    initial: &BodyState,
    controls: &ControlProfile,
    cfg: IntegratorConfig,
    duration: f64,
    mut sink: impl FnMut(&StateFrame),
) -> Result<RunSummary> {
    let started = Instant::now();
    let mut sim = Simulation::new(*params, *initial, cfg)?;
    for _ in 0..step_count(duration, cfg.dt) {
        let u = controls.at(sim.time());
        if let Err(e) = sim.step(&u) {
            let mut frame = StateFrame::capture(sim.time(), sim.state(), &u, 0);
            frame.error = Some(e.to_string());
            sink(&frame);
            return Err(e);
        }
        sink(&StateFrame::capture(sim.time(), sim.state(), &u, 0));
    }
    Ok(RunSummary {
        steps: sim.steps(),
        final_time: sim.time(),
        final_state: *sim.state(),
        overruns: 0,
        wall_time: started.elapsed(),
    })
}

/// Runs a scenario as fast as possible.
pub fn run_batch(sc: &Scenario, sink: impl FnMut(&StateFrame)) -> std::result::Result<RunSummary, ScenarioError> {
    let run = sc.prepare()?;
    Ok(run_profile(&sc.aircraft, &run.initial, &run.controls, sc.integrator, sc.duration, sink)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_zero_order_hold() {
        let a = ControlInputs { throttle: 0.1, ..Default::default() };
        let b = ControlInputs { throttle: 0.2, ..Default::default() };
        let c = ControlInputs { throttle: 0.3, ..Default::default() };
        let p = ControlProfile::new(a, vec![(1.0, b), (2.0, c)]);
        assert_eq!(p.at(0.0), a);
        assert_eq!(p.at(0.999), a);
        assert_eq!(p.at(1.0), b);
        assert_eq!(p.at(1.5), b);
        assert_eq!(p.at(2.0), c);
        assert_eq!(p.at(100.0), c);
        assert_eq!(ControlProfile::constant(a).at(5.0), a);
    }

    #[test]
    fn batch_emits_one_frame_per_step() {
        let mut sc = Scenario::kittyhawk500();
        sc.duration = 1.0;
        let mut times = Vec::new();
        let summary = run_batch(&sc, |f| times.push(f.t)).unwrap();
        assert_eq!(times.len(), 100);
        assert_eq!(summary.steps, 100);
        assert_eq!(times[0], 0.01);
        assert_eq!(*times.last().unwrap(), summary.final_time);
    }

    #[test]
    fn unperturbed_trim_holds_airspeed_for_30_s() {
        let sc = Scenario::kittyhawk500();
        let v0 = sc.prepare().unwrap().initial.v_body.norm();
        let mut worst = 0.0f64;
        run_batch(&sc, |f| worst = worst.max((f.airdata.v - v0).abs())).unwrap();
        assert!(worst < 0.1, "{worst}");
    }

    #[test]
    fn trimmed_cruise_stays_put() {
        let mut sc = Scenario::kittyhawk500();
        sc.duration = 5.0;
        let run = sc.prepare().unwrap();
        let summary = run_batch(&sc, |_| {}).unwrap();
        let drift = summary.final_state.v_body - run.initial.v_body;
        assert!(drift.norm() < 1e-5, "{drift}");
        assert!((summary.final_state.altitude() - 3000.0).abs() < 1e-4);
    }

    #[test]
    fn failure_emits_error_frame() {
        let mut sc = Scenario::kittyhawk500();
        sc.duration = 10.0;
        if let InitialCondition::Trim(t) = &mut sc.initial {
            t.altitude = 10_999.0;
        }
        // Climb out of the modelled atmosphere with full nose-up elevator.
        sc.schedule = vec![ScheduleEntry {
            t: 0.0,
            elevator: Setting::Absolute(-0.5),
            aileron: Setting::Hold,
            rudder: Setting::Hold,
            throttle: Setting::Absolute(1.0),
        }];
        let mut frames = Vec::new();
        let err = run_batch(&sc, |f| frames.push(f.clone())).unwrap_err();
        assert!(matches!(err, ScenarioError::Runtime(_)));
        let last = frames.last().unwrap();
        assert!(last.error.as_deref().unwrap().contains("altitude"));
        assert!(frames[..frames.len() - 1].iter().all(|f| f.error.is_none()));
    }
}
