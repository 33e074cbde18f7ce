use thiserror::Error;

/// Errors raised by the physics and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlightError {
    #[error("quaternion norm {norm:e} is too small to normalize")]
    DegenerateQuaternion { norm: f64 },

    #[error("pitch {theta:.6} rad is inside the Euler-rate singular band; use the quaternion path")]
    SingularAttitude { theta: f64 },

    #[error("altitude {altitude} m is outside the atmosphere model range [0, 11000] m")]
    AltitudeOutOfRange { altitude: f64 },

    #[error("airspeed {airspeed:e} m/s is too small to define alpha and beta")]
    ZeroAirspeed { airspeed: f64 },

    #[error("vbx^2 + vby^2 = {planar:e} is too small to define the alpha rate")]
    DegenerateAlphaRate { planar: f64 },

    #[error("airspeed {airspeed} m/s is below the coefficient model's 1 m/s floor")]
    AirspeedTooLow { airspeed: f64 },

    #[error("aerodynamic coefficient {name} = {value} exceeds the sanity bound of 10")]
    CoefficientOutOfRange { name: &'static str, value: f64 },

    #[error("throttle {throttle} is outside [0, 1]")]
    ThrottleOutOfRange { throttle: f64 },

    #[error("control {name} = {value} rad is outside [-0.5, 0.5]")]
    DeflectionOutOfRange { name: &'static str, value: f64 },

    #[error("inertia matrix is singular or not positive definite")]
    SingularInertia,

    #[error("symmetric rotational model requires Jyz = Jxz = 0 (got Jyz = {jyz}, Jxz = {jxz})")]
    AsymmetricInertia { jyz: f64, jxz: f64 },

    #[error("state became non-finite at step {step}")]
    NonFiniteState { step: u64 },

    #[error("trim did not converge after {iterations} iterations (residual {residual:e})")]
    TrimNotConverged { iterations: usize, residual: f64 },

    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),

    #[error("at t = {t:.4} s: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<FlightError>,
    },
}

impl FlightError {
    pub fn at(self, t: f64) -> Self {
        match self {
            e @ FlightError::AtTime { .. } => e,
            e => FlightError::AtTime { t, source: Box::new(e) },
        }
    }

    /// Innermost error, with any time context stripped.
    pub fn root(&self) -> &FlightError {
        match self {
            FlightError::AtTime { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = FlightError> = std::result::Result<T, E>;
