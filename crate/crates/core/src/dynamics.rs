//! Six-degree-of-freedom equations of motion over a flat, non-rotating
//! earth.
//!
//! The local frame is right-handed with x north, y up, z east. Attitude is
//! carried as a quaternion; Euler angles are derived on output only.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::aero::{self, DerivativeSet, ReferenceGeometry};
use crate::airdata::{self, STANDARD_GRAVITY};
use crate::error::{FlightError, Result};
use crate::frames::{self, AttitudeQuaternion, BodyRates};
use crate::Vec3;

/// Limit on elevator, aileron and rudder deflection magnitude, rad.
pub const MAX_DEFLECTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InertiaTensor {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    #[serde(default)]
    pub jxy: f64,
    #[serde(default)]
    pub jyz: f64,
    #[serde(default)]
    pub jxz: f64,
}

impl InertiaTensor {
    pub const fn diagonal(jx: f64, jy: f64, jz: f64) -> Self {
        Self { jx, jy, jz, jxy: 0.0, jyz: 0.0, jxz: 0.0 }
    }

    /// Inertia matrix with the products entering negated off the diagonal.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.jx, -self.jxy, -self.jxz, //
            -self.jxy, self.jy, -self.jyz, //
            -self.jxz, -self.jyz, self.jz,
        )
    }

    pub fn is_symmetric_aircraft(&self) -> bool {
        self.jyz == 0.0 && self.jxz == 0.0
    }

    /// Checks positivity, the triangle inequalities and positive
    /// definiteness. Returns a description of the first violation.
    pub fn check(&self) -> std::result::Result<(), String> {
        let all = [self.jx, self.jy, self.jz, self.jxy, self.jyz, self.jxz];
        if all.iter().any(|v| !v.is_finite()) {
            return Err("inertia components must be finite".into());
        }
        if self.jx <= 0.0 || self.jy <= 0.0 || self.jz <= 0.0 {
            return Err("principal moments must be positive".into());
        }
        if self.jx + self.jy < self.jz || self.jy + self.jz < self.jx || self.jz + self.jx < self.jy {
            return Err("moments violate the triangle inequality".into());
        }
        if self.matrix().cholesky().is_none() {
            return Err("inertia matrix is not positive definite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlInputs {
    /// Elevator deflection, rad.
    pub elevator: f64,
    /// Aileron deflection, rad.
    pub aileron: f64,
    /// Rudder deflection, rad.
    pub rudder: f64,
    /// Throttle fraction in [0, 1].
    pub throttle: f64,
}

impl ControlInputs {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("elevator", self.elevator), ("aileron", self.aileron), ("rudder", self.rudder)] {
            if !(value.abs() <= MAX_DEFLECTION) {
                return Err(FlightError::DeflectionOutOfRange { name, value });
            }
        }
        if !(0.0..=1.0).contains(&self.throttle) {
            return Err(FlightError::ThrottleOutOfRange { throttle: self.throttle });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AircraftParameters {
    /// kg
    pub mass: f64,
    pub inertia: InertiaTensor,
    pub geometry: ReferenceGeometry,
    #[serde(default)]
    pub derivatives: DerivativeSet,
    /// Static thrust at full throttle, N.
    pub max_thrust: f64,
}

/// Vehicle state: local-frame position, body-axis velocity, attitude and
/// body rates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyState {
    pub position: Vec3,
    pub v_body: Vec3,
    pub q: AttitudeQuaternion,
    pub w: BodyRates,
}

pub const STATE_LEN: usize = 13;

impl BodyState {
    pub fn altitude(&self) -> f64 {
        self.position.y
    }

    pub fn to_array(&self) -> [f64; STATE_LEN] {
        let q = self.q.components();
        [
            self.position.x,
            self.position.y,
            self.position.z,
            self.v_body.x,
            self.v_body.y,
            self.v_body.z,
            q[0],
            q[1],
            q[2],
            q[3],
            self.w.omega_x,
            self.w.omega_y,
            self.w.omega_z,
        ]
    }

    /// Inverse of [`to_array`](Self::to_array). The quaternion is taken
    /// as-is.
    pub fn from_array(a: &[f64; STATE_LEN]) -> Self {
        Self {
            position: Vec3::new(a[0], a[1], a[2]),
            v_body: Vec3::new(a[3], a[4], a[5]),
            q: AttitudeQuaternion::from_raw([a[6], a[7], a[8], a[9]]),
            w: BodyRates::new(a[10], a[11], a[12]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub position_dot: Vec3,
    pub v_body_dot: Vec3,
    pub q_dot: [f64; 4],
    pub w_dot: Vec3,
}

impl StateDerivative {
    pub fn to_array(&self) -> [f64; STATE_LEN] {
        let p = &self.position_dot;
        let v = &self.v_body_dot;
        let q = &self.q_dot;
        let w = &self.w_dot;
        [p.x, p.y, p.z, v.x, v.y, v.z, q[0], q[1], q[2], q[3], w.x, w.y, w.z]
    }
}

/// Weight resolved into body axes. The local-frame weight is
/// `(0, -m g0, 0)`.
pub fn gravity_body(q: &AttitudeQuaternion, mass: f64, g0: f64) -> Vec3 {
    frames::dcm_from_quat(q).local_to_body(&Vec3::new(0.0, -mass * g0, 0.0))
}

/// Body-axis translational acceleration. `f_total` already contains
/// aerodynamic, thrust and gravity forces.
pub fn translational_accel(mass: f64, v: &Vec3, w: &BodyRates, f_total: &Vec3) -> Vec3 {
    let (wx, wy, wz) = (w.omega_x, w.omega_y, w.omega_z);
    Vec3::new(
        f_total.x / mass - (wy * v.z - wz * v.y),
        f_total.y / mass - (wz * v.x - wx * v.z),
        f_total.z / mass - (wx * v.y - wy * v.x),
    )
}

/// Angular acceleration from the full rotational equations with all three
/// products of inertia. The angular-acceleration terms are gathered into
/// the inertia matrix and the remaining rate terms moved to the right-hand
/// side, then solved by Cholesky factorization.
pub fn rotational_accel_full(j: &InertiaTensor, w: &BodyRates, m: &Vec3) -> Result<Vec3> {
    let rhs = Vec3::new(
        m.x + (j.jy - j.jz) * w.omega_y * w.omega_z
            + j.jyz * (w.omega_y * w.omega_y - w.omega_z * w.omega_z)
            + j.jxz * w.omega_x * w.omega_y
            - j.jxy * w.omega_z * w.omega_x,
        m.y + (j.jz - j.jx) * w.omega_z * w.omega_x
            + j.jxz * (w.omega_z * w.omega_z - w.omega_x * w.omega_x)
            + j.jxy * w.omega_y * w.omega_z
            - j.jyz * w.omega_x * w.omega_y,
        m.z + (j.jx - j.jy) * w.omega_x * w.omega_y
            + j.jxy * (w.omega_x * w.omega_x - w.omega_y * w.omega_y)
            + j.jyz * w.omega_z * w.omega_x
            - j.jxz * w.omega_y * w.omega_z,
    );
    let chol = j.matrix().cholesky().ok_or(FlightError::SingularInertia)?;
    let w_dot = chol.solve(&rhs);
    if w_dot.iter().all(|v| v.is_finite()) {
        Ok(w_dot)
    } else {
        Err(FlightError::SingularInertia)
    }
}

/// Angular acceleration for an aircraft symmetric about its x-y plane
/// (`jyz = jxz = 0`). Pitch decouples; roll and yaw are coupled through
/// `jxy` and solved as a 2x2 system.
pub fn rotational_accel_sym(j: &InertiaTensor, w: &BodyRates, m: &Vec3) -> Result<Vec3> {
    if !j.is_symmetric_aircraft() {
        return Err(FlightError::AsymmetricInertia { jyz: j.jyz, jxz: j.jxz });
    }
    let (wx, wy, wz) = (w.omega_x, w.omega_y, w.omega_z);
    let det = j.jx * j.jy - j.jxy * j.jxy;
    if !(det > 0.0) || !(j.jz > 0.0) {
        return Err(FlightError::SingularInertia);
    }
    let wz_dot = (m.z + (j.jx - j.jy) * wx * wy + j.jxy * (wx * wx - wy * wy)) / j.jz;
    let rx = m.x + (j.jy - j.jz) * wy * wz - j.jxy * wz * wx;
    let ry = m.y + (j.jz - j.jx) * wz * wx + j.jxy * wy * wz;
    Ok(Vec3::new(
        (j.jy * rx + j.jxy * ry) / det,
        (j.jxy * rx + j.jx * ry) / det,
        wz_dot,
    ))
}

/// Everything the right-hand side computes on the way to the derivative;
/// used for telemetry and trim diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub derivative: StateDerivative,
    pub aero: aero::ForcesMoments,
    pub thrust: Vec3,
    pub gravity: Vec3,
}

pub fn evaluate(s: &BodyState, p: &AircraftParameters, u: &ControlInputs) -> Result<Evaluation> {
    let atm = airdata::isa_atmosphere(s.altitude())?;

    let loads = if p.derivatives.is_zero() {
        aero::ForcesMoments::default()
    } else {
        let air = airdata::airdata_from_velocity(&s.v_body, &atm)?;
        let c = aero::coefficients(&p.derivatives, air.alpha, air.beta, &s.w, u, air.v, &p.geometry)?;
        aero::ForcesMoments {
            force: aero::aero_forces(air.qbar, &p.geometry, &c),
            moment: aero::aero_moments(air.qbar, &p.geometry, &c),
        }
    };
    let thrust = aero::thrust_force(u.throttle, p.max_thrust)?;
    let gravity = gravity_body(&s.q, p.mass, STANDARD_GRAVITY);
    let f_total = loads.force + thrust + gravity;

    let v_body_dot = translational_accel(p.mass, &s.v_body, &s.w, &f_total);
    let w_dot = if p.inertia.is_symmetric_aircraft() {
        rotational_accel_sym(&p.inertia, &s.w, &loads.moment)?
    } else {
        rotational_accel_full(&p.inertia, &s.w, &loads.moment)?
    };
    let derivative = StateDerivative {
        position_dot: frames::dcm_from_quat(&s.q).body_to_local(&s.v_body),
        v_body_dot,
        q_dot: frames::quat_derivative(&s.q, &s.w),
        w_dot,
    };
    Ok(Evaluation { derivative, aero: loads, thrust, gravity })
}

pub fn state_derivative(s: &BodyState, p: &AircraftParameters, u: &ControlInputs) -> Result<StateDerivative> {
    evaluate(s, p, u).map(|e| e.derivative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{euler_from_quat, local_to_body, quat_from_euler, EulerAngles};
    use std::f64::consts::FRAC_PI_2;

    fn gravity_only() -> AircraftParameters {
        AircraftParameters {
            mass: 1000.0,
            inertia: InertiaTensor { jxy: 50.0, ..InertiaTensor::diagonal(1285.0, 2667.0, 1825.0) },
            geometry: ReferenceGeometry { area: 19.0, span: 10.0, chord: 1.9 },
            derivatives: DerivativeSet::default(),
            max_thrust: 3000.0,
        }
    }

    fn close3(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn level_weight_points_down_the_y_axis() {
        let g = gravity_body(&AttitudeQuaternion::IDENTITY, 1000.0, STANDARD_GRAVITY);
        assert_eq!(g, Vec3::new(0.0, -1000.0 * STANDARD_GRAVITY, 0.0));
    }

    #[test]
    fn weight_at_ninety_degrees_roll() {
        let e = EulerAngles::new(FRAC_PI_2, 0.0, 0.0);
        let mg = 1000.0 * STANDARD_GRAVITY;
        let g = gravity_body(&quat_from_euler(&e), 1000.0, STANDARD_GRAVITY);
        let oracle = local_to_body(&e, &Vec3::new(0.0, -mg, 0.0));
        assert!(close3(&g, &oracle, 1e-9));
        assert!(close3(&g, &Vec3::new(0.0, 0.0, mg), 1e-9));
    }

    #[test]
    fn weight_magnitude_is_attitude_independent() {
        for (a, b, c) in [(0.3, -1.2, 2.0), (3.0, 0.7, -0.4), (-2.2, 1.5, 0.1)] {
            let q = quat_from_euler(&EulerAngles::new(a, b, c));
            let g = gravity_body(&q, 1000.0, STANDARD_GRAVITY);
            assert!((g.norm() - 1000.0 * STANDARD_GRAVITY).abs() < 1e-9);
        }
    }

    #[test]
    fn translational_substitutions() {
        let a = translational_accel(2.0, &Vec3::new(5.0, 1.0, 2.0), &BodyRates::ZERO, &Vec3::new(6.0, 0.0, 0.0));
        assert_eq!(a, Vec3::new(3.0, 0.0, 0.0));

        let a = translational_accel(1.0, &Vec3::new(0.0, 0.0, 4.0), &BodyRates::new(0.0, 0.5, 0.0), &Vec3::zeros());
        assert_eq!(a, Vec3::new(-2.0, 0.0, 0.0));

        let a = translational_accel(1000.0, &Vec3::zeros(), &BodyRates::ZERO, &Vec3::new(1000.0, 0.0, 0.0));
        assert_eq!(a, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn diagonal_inertia_unit_moment() {
        let j = InertiaTensor::diagonal(4.0, 5.0, 6.0);
        let a = rotational_accel_full(&j, &BodyRates::ZERO, &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!(close3(&a, &Vec3::new(0.25, 0.0, 0.0), 1e-15));
    }

    #[test]
    fn principal_spin_is_equilibrium() {
        let j = InertiaTensor::diagonal(1000.0, 3000.0, 3500.0);
        for w in [BodyRates::new(2.0, 0.0, 0.0), BodyRates::new(0.0, -1.0, 0.0), BodyRates::new(0.0, 0.0, 0.7)] {
            assert_eq!(rotational_accel_full(&j, &w, &Vec3::zeros()).unwrap(), Vec3::zeros());
            assert_eq!(rotational_accel_sym(&j, &w, &Vec3::zeros()).unwrap(), Vec3::zeros());
        }
    }

    #[test]
    fn symmetric_classic_euler_case() {
        let j = InertiaTensor::diagonal(1.0, 2.0, 3.0);
        let a = rotational_accel_sym(&j, &BodyRates::new(0.0, 1.0, 1.0), &Vec3::zeros()).unwrap();
        assert_eq!(a, Vec3::new(-1.0, 0.0, 0.0));

        let sphere = InertiaTensor::diagonal(7.0, 7.0, 7.0);
        let a = rotational_accel_sym(&sphere, &BodyRates::new(0.3, -2.0, 1.1), &Vec3::zeros()).unwrap();
        assert_eq!(a, Vec3::zeros());
    }

    #[test]
    fn symmetric_model_refuses_off_plane_products() {
        let j = InertiaTensor { jxz: 1.0, ..InertiaTensor::diagonal(1.0, 2.0, 3.0) };
        assert!(matches!(
            rotational_accel_sym(&j, &BodyRates::ZERO, &Vec3::zeros()),
            Err(FlightError::AsymmetricInertia { .. })
        ));
        let bad = InertiaTensor { jxy: 3.0, ..InertiaTensor::diagonal(1.0, 2.0, 3.0) };
        assert!(matches!(
            rotational_accel_sym(&bad, &BodyRates::ZERO, &Vec3::zeros()),
            Err(FlightError::SingularInertia)
        ));
        assert!(matches!(
            rotational_accel_full(&bad, &BodyRates::ZERO, &Vec3::zeros()),
            Err(FlightError::SingularInertia)
        ));
    }

    #[test]
    fn inertia_checks() {
        assert!(InertiaTensor::diagonal(1285.0, 2667.0, 1825.0).check().is_ok());
        assert!(InertiaTensor::diagonal(1.0, 1.0, 3.0).check().is_err());
        assert!(InertiaTensor::diagonal(-1.0, 1.0, 1.0).check().is_err());
        assert!(InertiaTensor { jxy: 2.0, ..InertiaTensor::diagonal(1.0, 2.0, 2.0) }.check().is_err());
    }

    #[test]
    fn control_limits() {
        assert!(ControlInputs { elevator: 0.5, throttle: 1.0, ..Default::default() }.validate().is_ok());
        assert!(ControlInputs { rudder: -0.51, ..Default::default() }.validate().is_err());
        assert!(ControlInputs { throttle: 1.01, ..Default::default() }.validate().is_err());
        assert!(ControlInputs { aileron: f64::NAN, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn gravity_only_from_rest() {
        let s = BodyState { position: Vec3::new(0.0, 1000.0, 0.0), ..Default::default() };
        let d = state_derivative(&s, &gravity_only(), &ControlInputs::default()).unwrap();
        assert_eq!(d.v_body_dot, Vec3::new(0.0, -9.806_65, 0.0));
        assert_eq!(d.w_dot, Vec3::zeros());
        assert_eq!(d.q_dot, [0.0; 4]);
        assert_eq!(d.position_dot, Vec3::zeros());
    }

    #[test]
    fn aerodynamic_model_needs_airspeed() {
        let p = AircraftParameters { derivatives: DerivativeSet::reference_light_aircraft(), ..gravity_only() };
        let s = BodyState { position: Vec3::new(0.0, 1000.0, 0.0), ..Default::default() };
        let e = state_derivative(&s, &p, &ControlInputs::default()).unwrap_err();
        assert!(matches!(e, FlightError::ZeroAirspeed { .. }));
        let s = BodyState { v_body: Vec3::new(0.5, 0.0, 0.0), ..s };
        let e = state_derivative(&s, &p, &ControlInputs::default()).unwrap_err();
        assert!(matches!(e, FlightError::AirspeedTooLow { .. }));
    }

    #[test]
    fn altitude_must_be_in_atmosphere() {
        let s = BodyState { position: Vec3::new(0.0, -5.0, 0.0), ..Default::default() };
        let e = state_derivative(&s, &gravity_only(), &ControlInputs::default()).unwrap_err();
        assert!(matches!(e, FlightError::AltitudeOutOfRange { .. }));
    }

    #[test]
    fn position_rate_is_body_velocity_in_local_axes() {
        let p = AircraftParameters { derivatives: DerivativeSet::reference_light_aircraft(), ..gravity_only() };
        let e = EulerAngles::from_degrees(25.0, -10.0, 130.0);
        let s = BodyState {
            position: Vec3::new(10.0, 2000.0, -40.0),
            v_body: Vec3::new(60.0, -4.0, 3.0),
            q: quat_from_euler(&e),
            w: BodyRates::new(0.1, -0.05, 0.2),
        };
        let d = state_derivative(&s, &p, &ControlInputs { throttle: 0.5, ..Default::default() }).unwrap();
        let oracle = frames::body_to_local(&euler_from_quat(&s.q).angles(), &s.v_body);
        assert!(close3(&d.position_dot, &oracle, 1e-12));
    }

    #[test]
    fn derivative_is_deterministic() {
        let p = AircraftParameters { derivatives: DerivativeSet::reference_light_aircraft(), ..gravity_only() };
        let s = BodyState {
            position: Vec3::new(0.0, 3000.0, 0.0),
            v_body: Vec3::new(69.0, -3.0, 1.0),
            q: quat_from_euler(&EulerAngles::from_degrees(5.0, 3.0, 0.0)),
            w: BodyRates::new(0.01, 0.02, -0.03),
        };
        let u = ControlInputs { elevator: -0.05, throttle: 0.7, ..Default::default() };
        let a = state_derivative(&s, &p, &u).unwrap().to_array();
        let b = state_derivative(&s, &p, &u).unwrap().to_array();
        assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
    }

    #[test]
    fn state_array_round_trip() {
        let s = BodyState {
            position: Vec3::new(1.0, 2.0, 3.0),
            v_body: Vec3::new(4.0, 5.0, 6.0),
            q: AttitudeQuaternion::from_raw([0.1, 0.2, 0.3, 0.4]),
            w: BodyRates::new(7.0, 8.0, 9.0),
        };
        assert_eq!(BodyState::from_array(&s.to_array()), s);
    }
}
