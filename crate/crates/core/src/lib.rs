//! Six-degree-of-freedom rigid-body flight dynamics for a fixed-wing
//! aircraft: attitude kinematics, standard atmosphere, a linear
//! aerodynamic model, RK4 integration, trim, and batch and real-time
//! simulation loops with a line-oriented telemetry stream.

pub mod aero;
pub mod airdata;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod frames;
pub mod integrator;
pub mod telemetry;

pub type Vec3 = nalgebra::Vector3<f64>;

pub use dynamics::{AircraftParameters, BodyState, ControlInputs, InertiaTensor};
pub use error::{FlightError, Result};
pub use frames::{AttitudeQuaternion, BodyRates, EulerAngles};
pub use telemetry::StateFrame;
