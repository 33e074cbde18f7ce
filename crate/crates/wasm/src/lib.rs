//! Browser demo: attitude conversions, an elevator pulse response and a
//! trim sweep, each returned as a JSON string.
//!
//! The plain functions are usable natively; the `wasm_bindgen` wrappers
//! only convert errors to JavaScript exceptions.

use flightlab_core::engine::{trim_level, ControlProfile, Scenario, ScenarioError, Simulation};
use flightlab_core::frames::{dcm_from_quat, euler_from_quat, quat_from_euler};
use flightlab_core::telemetry::StateFrame;
use flightlab_core::{ControlInputs, EulerAngles, FlightError};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Flight(#[from] FlightError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Input(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttitudeReport {
    /// `[q0, q1, q2, q3]`, scalar first.
    pub q: [f64; 4],
    /// Local-to-body rows.
    pub dcm: [[f64; 3]; 3],
    /// Roll, pitch, yaw recovered from `q`, deg.
    pub recovered: [f64; 3],
    pub gimbal_lock: bool,
    /// Body x (nose) and z (right wing) axes in local north/up/east.
    pub nose: [f64; 3],
    pub right_wing: [f64; 3],
}

/// Converts roll, pitch and yaw in degrees to a quaternion and back.
pub fn attitude_report(roll_deg: f64, pitch_deg: f64, yaw_deg: f64) -> Result<AttitudeReport, DemoError> {
    if ![roll_deg, pitch_deg, yaw_deg].iter().all(|a| a.is_finite()) {
        return Err(DemoError::Input("angles must be finite".into()));
    }
    if pitch_deg.abs() > 90.0 {
        return Err(DemoError::Input(format!("pitch {pitch_deg} deg is outside [-90, 90]")));
    }
    let q = quat_from_euler(&EulerAngles::from_degrees(roll_deg, pitch_deg, yaw_deg));
    let m = dcm_from_quat(&q);
    let back = euler_from_quat(&q);
    let e = back.angles();
    let row = |i: usize| [m.0[(i, 0)], m.0[(i, 1)], m.0[(i, 2)]];
    Ok(AttitudeReport {
        q: q.components(),
        dcm: [row(0), row(1), row(2)],
        recovered: [e.gamma.to_degrees(), e.theta.to_degrees(), e.psi.to_degrees()],
        gimbal_lock: back.is_gimbal_lock(),
        nose: row(0),
        right_wing: row(2),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PulseResponse {
    pub t: Vec<f64>,
    /// Angle of attack, deg.
    pub alpha: Vec<f64>,
    /// Pitch rate, deg/s.
    pub pitch_rate: Vec<f64>,
    pub airspeed: Vec<f64>,
    pub altitude: Vec<f64>,
    pub elevator: Vec<f64>,
}

const PULSE_START: f64 = 1.0;
const SAMPLE_EVERY: u64 = 5;

/// Flies the reference aircraft from trim with an elevator pulse of
/// `elevator_deg` held for `width_s`, starting at 1 s.
pub fn pulse_response(elevator_deg: f64, width_s: f64, duration_s: f64) -> Result<PulseResponse, DemoError> {
    if !(width_s > 0.0 && width_s.is_finite()) {
        return Err(DemoError::Input(format!("pulse width {width_s} s must be positive")));
    }
    if !(duration_s > 0.0 && duration_s <= 600.0) {
        return Err(DemoError::Input(format!("duration {duration_s} s must be in (0, 600]")));
    }
    let sc = Scenario::kittyhawk500();
    let run = sc.prepare()?;
    let trim = run.controls.base();
    let pulse = ControlInputs { elevator: trim.elevator + elevator_deg.to_radians(), ..trim };
    pulse.validate()?;
    let profile = ControlProfile::new(trim, vec![(PULSE_START, pulse), (PULSE_START + width_s, trim)]);

    let mut sim = Simulation::new(sc.aircraft, run.initial, sc.integrator)?;
    let mut out = PulseResponse::default();
    let steps = (duration_s / sc.integrator.dt).round() as u64;
    for _ in 0..steps {
        let u = profile.at(sim.time());
        sim.step(&u)?;
        if sim.steps() % SAMPLE_EVERY == 0 {
            let f = StateFrame::capture(sim.time(), sim.state(), &u, 0);
            out.t.push(f.t);
            out.alpha.push(f.airdata.alpha.to_degrees());
            out.pitch_rate.push(f.w[2].to_degrees());
            out.airspeed.push(f.airdata.v);
            out.altitude.push(f.position[1]);
            out.elevator.push(u.elevator.to_degrees());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrimPoint {
    pub airspeed: f64,
    /// `None` where no level-flight trim exists.
    pub alpha_deg: Option<f64>,
    pub elevator_deg: Option<f64>,
    pub throttle: Option<f64>,
}

/// Level-flight trim of the reference aircraft at `points` airspeeds
/// spread evenly over `[v_min, v_max]`.
pub fn trim_sweep(altitude: f64, v_min: f64, v_max: f64, points: usize) -> Result<Vec<TrimPoint>, DemoError> {
    if !(2..=200).contains(&points) {
        return Err(DemoError::Input(format!("{points} points, expected 2 to 200")));
    }
    if !(v_min > 0.0 && v_max > v_min) {
        return Err(DemoError::Input(format!("airspeed range [{v_min}, {v_max}] is empty")));
    }
    let p = Scenario::kittyhawk500().aircraft;
    (0..points)
        .map(|i| {
            let v = v_min + (v_max - v_min) * i as f64 / (points - 1) as f64;
            match trim_level(&p, altitude, v, 0.0) {
                Ok(t) => Ok(TrimPoint {
                    airspeed: v,
                    alpha_deg: Some(t.alpha.to_degrees()),
                    elevator_deg: Some(t.controls.elevator.to_degrees()),
                    throttle: Some(t.controls.throttle),
                }),
                Err(FlightError::TrimNotConverged { .. }) => {
                    Ok(TrimPoint { airspeed: v, alpha_deg: None, elevator_deg: None, throttle: None })
                }
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}

fn to_js<T: Serialize>(r: Result<T, DemoError>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = attitudeReport)]
pub fn attitude_report_js(roll_deg: f64, pitch_deg: f64, yaw_deg: f64) -> Result<String, JsError> {
    to_js(attitude_report(roll_deg, pitch_deg, yaw_deg))
}

#[wasm_bindgen(js_name = pulseResponse)]
pub fn pulse_response_js(elevator_deg: f64, width_s: f64, duration_s: f64) -> Result<String, JsError> {
    to_js(pulse_response(elevator_deg, width_s, duration_s))
}

#[wasm_bindgen(js_name = trimSweep)]
pub fn trim_sweep_js(altitude: f64, v_min: f64, v_max: f64, points: usize) -> Result<String, JsError> {
    to_js(trim_sweep(altitude, v_min, v_max, points))
}
