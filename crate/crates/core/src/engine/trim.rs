//! Steady, wings-level, constant-altitude trim.

use nalgebra::{Matrix3, Vector3};

use crate::airdata::isa_atmosphere;
use crate::dynamics::{state_derivative, AircraftParameters, BodyState, ControlInputs, MAX_DEFLECTION};
use crate::error::{FlightError, Result};
use crate::frames::{quat_from_euler, BodyRates, EulerAngles};
use crate::Vec3;

/// Translational acceleration allowed at a trim point, m/s^2.
pub const TRIM_ACCEL_TOL: f64 = 1e-6;
/// Angular acceleration allowed at a trim point, rad/s^2.
pub const TRIM_ANGULAR_TOL: f64 = 1e-8;
pub const TRIM_MAX_ITERATIONS: usize = 200;

const PITCH_LIMIT: f64 = 0.5;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimSolution {
    pub controls: ControlInputs,
    pub state: BodyState,
    /// Angle of attack, rad. Equal to pitch in level flight.
    pub alpha: f64,
    pub theta: f64,
    /// Norm of the body-axis acceleration at the solution.
    pub accel_residual: f64,
    /// Norm of the angular acceleration at the solution.
    pub angular_residual: f64,
    pub iterations: usize,
}

fn level_state(altitude: f64, airspeed: f64, heading: f64, theta: f64) -> BodyState {
    BodyState {
        position: Vec3::new(0.0, altitude, 0.0),
        v_body: Vec3::new(airspeed * theta.cos(), -airspeed * theta.sin(), 0.0),
        q: quat_from_euler(&EulerAngles::new(0.0, theta, heading)),
        w: BodyRates::ZERO,
    }
}

const LOWER: [f64; 3] = [-MAX_DEFLECTION, 0.0, -PITCH_LIMIT];
const UPPER: [f64; 3] = [MAX_DEFLECTION, 1.0, PITCH_LIMIT];

fn clamp(x: Vector3<f64>) -> Vector3<f64> {
    Vector3::from_fn(|i, _| x[i].clamp(LOWER[i], UPPER[i]))
}

/// Solves for elevator, throttle and pitch attitude giving unaccelerated
/// level flight at the given altitude, airspeed and heading.
///
/// Damped Newton iteration on (axial accel, normal accel, pitch accel)
/// with a finite-difference Jacobian, all unknowns kept within their
/// limits.
pub fn trim_level(p: &AircraftParameters, altitude: f64, airspeed: f64, heading: f64) -> Result<TrimSolution> {
    isa_atmosphere(altitude)?;
    // Points where the model itself refuses (too slow, coefficients out of
    // range) count as infeasible rather than as errors.
    let residual = |x: &Vector3<f64>| -> Option<Vector3<f64>> {
        let u = ControlInputs { elevator: x[0], throttle: x[1], ..ControlInputs::default() };
        let d = state_derivative(&level_state(altitude, airspeed, heading, x[2]), p, &u).ok()?;
        Some(Vector3::new(d.v_body_dot.x, d.v_body_dot.y, d.w_dot.z))
    };
    let size = |r: &Vector3<f64>| r.norm();
    let not_converged = |iterations, residual| FlightError::TrimNotConverged { iterations, residual };

    let mut x = Vector3::new(0.0, 0.5, 0.05);
    let mut r = residual(&x).ok_or(not_converged(0, f64::INFINITY))?;
    let mut iterations = 0;
    while iterations < TRIM_MAX_ITERATIONS {
        if r[0].hypot(r[1]) <= 1e-3 * TRIM_ACCEL_TOL && r[2].abs() <= 1e-3 * TRIM_ANGULAR_TOL {
            break;
        }
        iterations += 1;
        let mut jac = Matrix3::zeros();
        for k in 0..3 {
            let mut hi = x;
            let mut lo = x;
            hi[k] = (x[k] + FD_STEP).min(UPPER[k]);
            lo[k] = (x[k] - FD_STEP).max(LOWER[k]);
            let (Some(rh), Some(rl)) = (residual(&hi), residual(&lo)) else {
                return Err(not_converged(iterations, size(&r)));
            };
            jac.set_column(k, &((rh - rl) / (hi[k] - lo[k])));
        }
        let Some(delta) = jac.lu().solve(&(-r)) else {
            break;
        };
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda >= 1e-4 {
            let candidate = clamp(x + delta * lambda);
            if let Some(rc) = residual(&candidate) {
                if size(&rc) < size(&r) {
                    x = candidate;
                    r = rc;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }

    let controls = ControlInputs { elevator: x[0], throttle: x[1], ..ControlInputs::default() };
    let state = level_state(altitude, airspeed, heading, x[2]);
    let d = state_derivative(&state, p, &controls).map_err(|_| not_converged(iterations, size(&r)))?;
    let accel_residual = d.v_body_dot.norm();
    let angular_residual = d.w_dot.norm();
    if !(accel_residual <= TRIM_ACCEL_TOL && angular_residual <= TRIM_ANGULAR_TOL) {
        return Err(not_converged(iterations, accel_residual.max(angular_residual)));
    }
    Ok(TrimSolution { controls, state, alpha: x[2], theta: x[2], accel_residual, angular_residual, iterations })
}
