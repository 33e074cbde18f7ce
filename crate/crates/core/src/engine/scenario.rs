//! Scenario files: aircraft, initial condition, run length, integrator
//! settings and a timed control schedule, in TOML.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::trim::{trim_level, TrimSolution};
use super::ControlProfile;
use crate::airdata::TROPOPAUSE;
use crate::dynamics::{AircraftParameters, BodyState, ControlInputs};
use crate::error::FlightError;
use crate::frames::{quat_from_euler, AttitudeQuaternion, BodyRates, EulerAngles};
use crate::integrator::{IntegratorConfig, MAX_DT};
use crate::Vec3;

/// Scenarios compiled into the library, by name.
pub const BUILTIN_SCENARIOS: [(&str, &str); 2] = [
    ("kittyhawk500", include_str!("../../scenarios/kittyhawk500.toml")),
    ("kittyhawk500_pulse", include_str!("../../scenarios/kittyhawk500_pulse.toml")),
];

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },
    #[error(transparent)]
    Runtime(#[from] FlightError),
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ScenarioError::Validation { field: field.into(), reason: reason.into() }
    }

    /// True for problems with the scenario itself rather than with the run.
    pub fn is_validation(&self) -> bool {
        !matches!(self, ScenarioError::Runtime(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrimSpec {
    /// m
    pub altitude: f64,
    /// m/s
    pub airspeed: f64,
    /// rad
    #[serde(default)]
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Trim(TrimSpec),
    State { state: BodyState, controls: ControlInputs },
}

/// How one control channel changes at a schedule point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Setting {
    #[default]
    Hold,
    Absolute(f64),
    /// Offset from the initial (trim) setting.
    Delta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry {
    pub t: f64,
    pub elevator: Setting,
    pub aileron: Setting,
    pub rudder: Setting,
    pub throttle: Setting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub aircraft: AircraftParameters,
    pub initial: InitialCondition,
    /// s
    pub duration: f64,
    pub integrator: IntegratorConfig,
    pub schedule: Vec<ScheduleEntry>,
}

/// A scenario resolved into a start state and a control history.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedRun {
    pub initial: BodyState,
    pub controls: ControlProfile,
    pub trim: Option<TrimSolution>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    duration: f64,
    #[serde(default)]
    integrator: IntegratorConfig,
    aircraft: AircraftParameters,
    initial: RawInitial,
    #[serde(default)]
    schedule: Vec<RawEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    trim: Option<TrimSpec>,
    state: Option<RawState>,
    controls: Option<ControlInputs>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    position: [f64; 3],
    v_body: [f64; 3],
    /// Roll, pitch, yaw in rad.
    euler: Option<[f64; 3]>,
    q: Option<[f64; 4]>,
    #[serde(default)]
    w: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    t: f64,
    elevator: Option<f64>,
    aileron: Option<f64>,
    rudder: Option<f64>,
    throttle: Option<f64>,
    delta_elevator: Option<f64>,
    delta_aileron: Option<f64>,
    delta_rudder: Option<f64>,
    delta_throttle: Option<f64>,
}

fn setting(field: &str, abs: Option<f64>, delta: Option<f64>) -> Result<Setting, ScenarioError> {
    match (abs, delta) {
        (Some(_), Some(_)) => Err(ScenarioError::invalid(field, "give either an absolute value or a delta, not both")),
        (Some(v), None) => Ok(Setting::Absolute(v)),
        (None, Some(d)) => Ok(Setting::Delta(d)),
        (None, None) => Ok(Setting::Hold),
    }
}

fn finite(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::invalid(field, format!("{v} is not a finite number")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ScenarioError::invalid(field, format!("{v} must be positive")))
    }
}

fn controls_field(prefix: &str, e: FlightError) -> ScenarioError {
    match e {
        FlightError::DeflectionOutOfRange { name, value } => {
            ScenarioError::invalid(format!("{prefix}.{name}"), format!("{value} rad exceeds the deflection limit"))
        }
        FlightError::ThrottleOutOfRange { throttle } => {
            ScenarioError::invalid(format!("{prefix}.throttle"), format!("{throttle} is outside [0, 1]"))
        }
        e => ScenarioError::invalid(prefix, e.to_string()),
    }
}

impl RawState {
    fn resolve(&self) -> Result<BodyState, ScenarioError> {
        let q = match (self.euler, self.q) {
            (Some(e), None) => quat_from_euler(&EulerAngles::new(e[0], e[1], e[2])),
            (None, Some(q)) => AttitudeQuaternion::new(q[0], q[1], q[2], q[3])
                .map_err(|e| ScenarioError::invalid("initial.state.q", e.to_string()))?,
            _ => return Err(ScenarioError::invalid("initial.state", "give exactly one of `euler` or `q`")),
        };
        Ok(BodyState {
            position: Vec3::from(self.position),
            v_body: Vec3::from(self.v_body),
            q,
            w: BodyRates::new(self.w[0], self.w[1], self.w[2]),
        })
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let initial = match (raw.initial.trim, raw.initial.state) {
            (Some(trim), None) => {
                if raw.initial.controls.is_some() {
                    return Err(ScenarioError::invalid("initial.controls", "trim computes the controls"));
                }
                InitialCondition::Trim(trim)
            }
            (None, Some(state)) => InitialCondition::State {
                state: state.resolve()?,
                controls: raw.initial.controls.unwrap_or_default(),
            },
            _ => return Err(ScenarioError::invalid("initial", "give exactly one of `trim` or `state`")),
        };
        let schedule = raw
            .schedule
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let f = |name: &str| format!("schedule[{i}].{name}");
                Ok(ScheduleEntry {
                    t: e.t,
                    elevator: setting(&f("elevator"), e.elevator, e.delta_elevator)?,
                    aileron: setting(&f("aileron"), e.aileron, e.delta_aileron)?,
                    rudder: setting(&f("rudder"), e.rudder, e.delta_rudder)?,
                    throttle: setting(&f("throttle"), e.throttle, e.delta_throttle)?,
                })
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        let sc = Scenario {
            name: raw.name.unwrap_or_else(|| "scenario".into()),
            aircraft: raw.aircraft,
            initial,
            duration: raw.duration,
            integrator: raw.integrator,
            schedule,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.into(), source })?;
        let mut sc = Self::from_toml_str(&text)?;
        if sc.name == "scenario" {
            if let Some(stem) = path.file_stem() {
                sc.name = stem.to_string_lossy().into_owned();
            }
        }
        Ok(sc)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTIN_SCENARIOS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_toml_str(text).expect("built-in scenario is valid"))
    }

    /// Trimmed cruise of the reference light aircraft at 3000 m, 250 km/h.
    pub fn kittyhawk500() -> Self {
        Self::builtin("kittyhawk500").expect("built-in scenario exists")
    }

    /// Checks everything that can be checked without running the model.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        positive("duration", self.duration)?;
        let ic = &self.integrator;
        if !(ic.dt > 0.0 && ic.dt <= MAX_DT) {
            return Err(ScenarioError::invalid("integrator.dt", format!("{} must lie in (0, {MAX_DT}]", ic.dt)));
        }
        if ic.renormalize_every == 0 {
            return Err(ScenarioError::invalid("integrator.renormalize_every", "must be at least 1"));
        }

        let a = &self.aircraft;
        positive("aircraft.mass", a.mass)?;
        if !(a.max_thrust.is_finite() && a.max_thrust >= 0.0) {
            return Err(ScenarioError::invalid("aircraft.max_thrust", "must be a non-negative number"));
        }
        positive("aircraft.geometry.area", a.geometry.area)?;
        positive("aircraft.geometry.span", a.geometry.span)?;
        positive("aircraft.geometry.chord", a.geometry.chord)?;
        a.inertia.check().map_err(|reason| ScenarioError::invalid("aircraft.inertia", reason))?;
        for (name, d) in a.derivatives.iter() {
            for (term, v) in d.terms() {
                finite(&format!("aircraft.derivatives.{name}.{term}"), v)?;
            }
        }

        match &self.initial {
            InitialCondition::Trim(t) => {
                if !(0.0..=TROPOPAUSE).contains(&t.altitude) {
                    return Err(ScenarioError::invalid(
                        "initial.trim.altitude",
                        format!("{} m is outside 0..={TROPOPAUSE} m", t.altitude),
                    ));
                }
                positive("initial.trim.airspeed", t.airspeed)?;
                finite("initial.trim.heading", t.heading)?;
            }
            InitialCondition::State { state, controls } => {
                if !state.is_finite() {
                    return Err(ScenarioError::invalid("initial.state", "contains a non-finite value"));
                }
                if !(0.0..=TROPOPAUSE).contains(&state.altitude()) {
                    return Err(ScenarioError::invalid(
                        "initial.state.position",
                        format!("altitude {} m is outside 0..={TROPOPAUSE} m", state.altitude()),
                    ));
                }
                controls.validate().map_err(|e| controls_field("initial.controls", e))?;
            }
        }

        let mut last = f64::NEG_INFINITY;
        for (i, e) in self.schedule.iter().enumerate() {
            if !(e.t.is_finite() && e.t >= 0.0) {
                return Err(ScenarioError::invalid(format!("schedule[{i}].t"), "must be a non-negative time"));
            }
            if e.t <= last {
                return Err(ScenarioError::invalid(format!("schedule[{i}].t"), "times must be strictly increasing"));
            }
            last = e.t;
            for (name, s) in [("elevator", e.elevator), ("aileron", e.aileron), ("rudder", e.rudder), ("throttle", e.throttle)] {
                if let Setting::Absolute(v) | Setting::Delta(v) = s {
                    finite(&format!("schedule[{i}].{name}"), v)?;
                }
            }
        }
        Ok(())
    }

    /// Trims if asked to and resolves the schedule against the initial
    /// controls.
    pub fn prepare(&self) -> Result<PreparedRun, ScenarioError> {
        self.validate()?;
        let (initial, base, trim) = match self.initial {
            InitialCondition::Trim(spec) => {
                let t = trim_level(&self.aircraft, spec.altitude, spec.airspeed, spec.heading)?;
                (t.state, t.controls, Some(t))
            }
            InitialCondition::State { state, controls } => (state, controls, None),
        };
        let mut current = base;
        let mut points = Vec::with_capacity(self.schedule.len());
        for (i, e) in self.schedule.iter().enumerate() {
            let apply = |s: Setting, prev: f64, base: f64| match s {
                Setting::Hold => prev,
                Setting::Absolute(v) => v,
                Setting::Delta(d) => base + d,
            };
            current = ControlInputs {
                elevator: apply(e.elevator, current.elevator, base.elevator),
                aileron: apply(e.aileron, current.aileron, base.aileron),
                rudder: apply(e.rudder, current.rudder, base.rudder),
                throttle: apply(e.throttle, current.throttle, base.throttle),
            };
            current.validate().map_err(|err| controls_field(&format!("schedule[{i}]"), err))?;
            points.push((e.t, current));
        }
        Ok(PreparedRun { initial, controls: ControlProfile::new(base, points), trim })
    }
}
