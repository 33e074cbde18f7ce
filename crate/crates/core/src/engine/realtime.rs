//! Wall-clock paced stepping with live control input.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use super::{ControlProfile, RunSummary, Scenario, ScenarioError, Simulation};
use crate::dynamics::ControlInputs;
use crate::integrator::step_count;
use crate::telemetry::StateFrame;

/// Steps run back to back while behind schedule before pacing is
/// re-anchored and an overrun is counted.
pub const MAX_CATCH_UP_STEPS: u32 = 5;

pub trait Clock {
    /// Time since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep_until(&self, deadline: Duration);
}

#[derive(Debug, Clone)]
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep_until(&self, deadline: Duration) {
        let now = self.now();
        if deadline > now {
            std::thread::sleep(deadline - now);
        }
    }
}

/// Deterministic clock for tests. Sleeping jumps straight to the deadline;
/// every reading also advances the clock by `cost`, which stands in for the
/// time spent computing.
#[derive(Debug, Default)]
pub struct VirtualClock {
    now: Mutex<Duration>,
    cost: Duration,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cost(cost: Duration) -> Self {
        Self { now: Mutex::new(Duration::ZERO), cost }
    }

    pub fn advance(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Duration {
        let mut now = self.now.lock().unwrap();
        *now += self.cost;
        *now
    }

    fn sleep_until(&self, deadline: Duration) {
        let mut now = self.now.lock().unwrap();
        *now = (*now).max(deadline);
    }
}

pub trait ControlSource {
    /// Latest inputs, if any have arrived. `t` is the simulation time of
    /// the step about to be taken.
    fn poll(&mut self, t: f64) -> Option<ControlInputs>;
}

/// Single-slot, last-write-wins hand-off from an input thread.
#[derive(Debug, Clone, Default)]
pub struct ControlMailbox {
    slot: Arc<Mutex<Option<ControlInputs>>>,
}

impl ControlMailbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn post(&self, u: ControlInputs) {
        *self.slot.lock().unwrap() = Some(u);
    }

    pub fn latest(&self) -> Option<ControlInputs> {
        *self.slot.lock().unwrap()
    }
}

impl ControlSource for ControlMailbox {
    fn poll(&mut self, _t: f64) -> Option<ControlInputs> {
        self.latest()
    }
}

/// Replays a control profile by simulation time.
#[derive(Debug, Clone)]
pub struct ScriptedControls(pub ControlProfile);

impl ControlSource for ScriptedControls {
    fn poll(&mut self, t: f64) -> Option<ControlInputs> {
        Some(self.0.at(t))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RealtimeOptions {
    /// Stop after this much simulated time; run until stopped if `None`.
    pub duration: Option<f64>,
    pub stop: Option<Arc<AtomicBool>>,
}

/// Runs a scenario paced to `clock`, reading controls from `source` before
/// each step. Until the source yields anything the initial (trim) controls
/// are held; the scenario's own schedule is not applied.
pub fn run_realtime(
    sc: &Scenario,
    source: &mut dyn ControlSource,
    mut sink: impl FnMut(&StateFrame),
    clock: &dyn Clock,
    opts: &RealtimeOptions,
) -> Result<RunSummary, ScenarioError> {
    let wall_start = Instant::now();
    let run = sc.prepare()?;
    let cfg = sc.integrator;
    let mut sim = Simulation::new(sc.aircraft, run.initial, cfg)?;
    let mut controls = run.controls.base();
    let limit = opts.duration.map(|d| step_count(d, cfg.dt));
    let dt = Duration::from_secs_f64(cfg.dt);

    let mut anchor = clock.now();
    let mut anchor_step = 0u64;
    let mut behind = 0u32;
    let mut overruns = 0u64;

    loop {
        if limit.is_some_and(|n| sim.steps() >= n) {
            break;
        }
        if opts.stop.as_ref().is_some_and(|s| s.load(Ordering::Relaxed)) {
            break;
        }

        let due = anchor + dt * (sim.steps() - anchor_step) as u32;
        let now = clock.now();
        if now < due {
            clock.sleep_until(due);
            behind = 0;
        } else if now - due >= dt {
            behind += 1;
            if behind > MAX_CATCH_UP_STEPS {
                overruns += 1;
                behind = 0;
                anchor = now;
                anchor_step = sim.steps();
            }
        } else {
            behind = 0;
        }

        if let Some(u) = source.poll(sim.time()) {
            controls = u;
        }
        match sim.step(&controls) {
            Ok(_) => sink(&StateFrame::capture(sim.time(), sim.state(), &controls, overruns)),
            Err(e) => {
                let mut frame = StateFrame::capture(sim.time(), sim.state(), &controls, overruns);
                frame.error = Some(e.to_string());
                sink(&frame);
                return Err(e.into());
            }
        }
    }

    Ok(RunSummary {
        steps: sim.steps(),
        final_time: sim.time(),
        final_state: *sim.state(),
        overruns,
        wall_time: wall_start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_profile;

    fn short(duration: f64) -> RealtimeOptions {
        RealtimeOptions { duration: Some(duration), stop: None }
    }

    #[test]
    fn scripted_source_matches_batch_bit_for_bit() {
        let sc = Scenario::builtin("kittyhawk500_pulse").unwrap();
        let run = sc.prepare().unwrap();
        let mut batch = Vec::new();
        run_profile(&sc.aircraft, &run.initial, &run.controls, sc.integrator, 3.0, |f| batch.push(f.clone())).unwrap();

        let mut live = Vec::new();
        let clock = VirtualClock::new();
        let mut src = ScriptedControls(run.controls.clone());
        run_realtime(&sc, &mut src, |f| live.push(f.clone()), &clock, &short(3.0)).unwrap();

        assert_eq!(batch.len(), live.len());
        for (a, b) in batch.iter().zip(&live) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!(a.q.map(f64::to_bits), b.q.map(f64::to_bits));
            assert_eq!(a.v_body.map(f64::to_bits), b.v_body.map(f64::to_bits));
        }
    }

    #[test]
    fn paced_clock_tracks_simulation_time() {
        let sc = Scenario::kittyhawk500();
        let clock = VirtualClock::new();
        let summary = run_realtime(&sc, &mut ControlMailbox::new(), |_| {}, &clock, &short(2.0)).unwrap();
        assert_eq!(summary.steps, 200);
        assert_eq!(summary.overruns, 0);
        let lag = clock.now().as_secs_f64() - 1.99;
        assert!(lag.abs() < 1e-6, "{lag}");
    }

    #[test]
    fn slow_steps_count_overruns() {
        let sc = Scenario::kittyhawk500();
        // Each clock read costs 30 ms against a 10 ms step.
        let clock = VirtualClock::with_cost(Duration::from_millis(30));
        let mut last = 0;
        let summary = run_realtime(&sc, &mut ControlMailbox::new(), |f| last = f.overrun_count, &clock, &short(1.0)).unwrap();
        assert_eq!(summary.steps, 100);
        assert!(summary.overruns > 0);
        assert_eq!(last, summary.overruns);
    }

    #[test]
    fn no_overruns_when_fast_enough() {
        let sc = Scenario::kittyhawk500();
        let clock = VirtualClock::with_cost(Duration::from_millis(2));
        let summary = run_realtime(&sc, &mut ControlMailbox::new(), |_| {}, &clock, &short(1.0)).unwrap();
        assert_eq!(summary.overruns, 0);
    }

    #[test]
    fn mailbox_is_last_write_wins() {
        let m = ControlMailbox::new();
        assert_eq!(m.latest(), None);
        m.post(ControlInputs { throttle: 0.1, ..Default::default() });
        m.post(ControlInputs { throttle: 0.7, ..Default::default() });
        let mut src = m.clone();
        assert_eq!(src.poll(0.0).unwrap().throttle, 0.7);
    }

    #[test]
    fn holds_trim_until_input_arrives() {
        let sc = Scenario::kittyhawk500();
        let trim = sc.prepare().unwrap().trim.unwrap().controls;
        let mut seen = Vec::new();
        run_realtime(&sc, &mut ControlMailbox::new(), |f| seen.push(f.controls.thr), &VirtualClock::new(), &short(0.1))
            .unwrap();
        assert!(seen.iter().all(|&t| t == trim.throttle));
    }

    #[test]
    fn stop_flag_ends_run() {
        let sc = Scenario::kittyhawk500();
        let stop = Arc::new(AtomicBool::new(false));
        let opts = RealtimeOptions { duration: None, stop: Some(stop.clone()) };
        let mut n = 0;
        let summary = run_realtime(
            &sc,
            &mut ControlMailbox::new(),
            |_| {
                n += 1;
                if n == 42 {
                    stop.store(true, Ordering::Relaxed);
                }
            },
            &VirtualClock::new(),
            &opts,
        )
        .unwrap();
        assert_eq!(summary.steps, 42);
    }
}
