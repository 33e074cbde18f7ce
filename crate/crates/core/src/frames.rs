//! Attitude representations and frame transforms.
//!
//! Axis conventions: body x forward, y up (lift direction), z out the right
//! wing. Euler angles are applied yaw `psi` (about y), then pitch `theta`
//! (about z), then roll `gamma` (about x). The direction cosine matrix maps
//! local-frame components into body-frame components.

use nalgebra::Matrix3;

use crate::error::{FlightError, Result};
use crate::Vec3;

/// Width of the band below |theta| = pi/2 where the Euler-rate equations
/// are refused.
pub const SINGULAR_BAND: f64 = 0.01;

/// |l12| above `1 - GIMBAL_LOCK_EPS` is reported as gimbal lock.
pub const GIMBAL_LOCK_EPS: f64 = 1e-8;

const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    /// Roll, rad.
    pub gamma: f64,
    /// Pitch, rad.
    pub theta: f64,
    /// Yaw, rad.
    pub psi: f64,
}

impl EulerAngles {
    pub const fn new(gamma: f64, theta: f64, psi: f64) -> Self {
        Self { gamma, theta, psi }
    }

    pub fn from_degrees(gamma: f64, theta: f64, psi: f64) -> Self {
        Self::new(gamma.to_radians(), theta.to_radians(), psi.to_radians())
    }
}

/// Result of extracting Euler angles from a quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EulerSolution {
    Regular(EulerAngles),
    /// Pitch at +-90 deg. Roll is pinned to zero and yaw carries the
    /// combined roll/yaw rotation.
    GimbalLock(EulerAngles),
}

impl EulerSolution {
    pub fn angles(&self) -> EulerAngles {
        match *self {
            EulerSolution::Regular(e) | EulerSolution::GimbalLock(e) => e,
        }
    }

    pub fn is_gimbal_lock(&self) -> bool {
        matches!(self, EulerSolution::GimbalLock(_))
    }
}

/// Unit attitude quaternion, `q0` scalar part.
///
/// Constructors normalize and pick the `q0 >= 0` representative. The raw
/// constructor exists for integrator intermediates, which are not unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeQuaternion {
    q: [f64; 4],
}

impl AttitudeQuaternion {
    pub const IDENTITY: Self = Self { q: [1.0, 0.0, 0.0, 0.0] };

    pub fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Result<Self> {
        Self::from_raw([q0, q1, q2, q3]).normalize()
    }

    /// Wraps the components as-is: no normalization, no sign choice.
    pub const fn from_raw(q: [f64; 4]) -> Self {
        Self { q }
    }

    pub fn components(&self) -> [f64; 4] {
        self.q
    }

    pub fn q0(&self) -> f64 {
        self.q[0]
    }
    pub fn q1(&self) -> f64 {
        self.q[1]
    }
    pub fn q2(&self) -> f64 {
        self.q[2]
    }
    pub fn q3(&self) -> f64 {
        self.q[3]
    }

    pub fn norm(&self) -> f64 {
        self.q.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn normalize(&self) -> Result<Self> {
        normalize(self)
    }

    /// Hamilton product `self * rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let [a0, a1, a2, a3] = self.q;
        let [b0, b1, b2, b3] = rhs.q;
        Self::from_raw([
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ])
    }

    pub fn conjugate(&self) -> Self {
        let [a0, a1, a2, a3] = self.q;
        Self::from_raw([a0, -a1, -a2, -a3])
    }

    /// Rotation angle (rad, in [0, pi]) separating two attitudes; sign of
    /// either quaternion is irrelevant.
    pub fn angle_to(&self, other: &Self) -> f64 {
        let d = self.conjugate().mul(other);
        let [w, x, y, z] = d.q;
        let v = (x * x + y * y + z * z).sqrt();
        2.0 * v.atan2(w.abs())
    }

    /// Quaternion for a rotation of `angle` about `axis`. Body rates `w`
    /// held constant for time `t` carry `q` to
    /// `q.mul(&from_axis_angle(w, |w| t))`.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 || angle == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (angle / 2.0).sin_cos();
        let a = axis / n;
        canonical([c, s * a.x, s * a.y, s * a.z])
    }
}

impl Default for AttitudeQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

fn canonical(q: [f64; 4]) -> AttitudeQuaternion {
    if q[0] < 0.0 {
        AttitudeQuaternion::from_raw([-q[0], -q[1], -q[2], -q[3]])
    } else {
        AttitudeQuaternion::from_raw(q)
    }
}

/// Direction cosine matrix, local frame to body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionCosineMatrix(pub Matrix3<f64>);

impl DirectionCosineMatrix {
    /// One-based element access matching the `l11 .. l33` naming.
    pub fn l(&self, i: usize, j: usize) -> f64 {
        self.0[(i - 1, j - 1)]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn local_to_body(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn body_to_local(&self, v: &Vec3) -> Vec3 {
        self.0.transpose() * v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyRates {
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
}

impl BodyRates {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);

    pub const fn new(omega_x: f64, omega_y: f64, omega_z: f64) -> Self {
        Self { omega_x, omega_y, omega_z }
    }

    pub fn from_vec3(v: &Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn to_vec3(self) -> Vec3 {
        Vec3::new(self.omega_x, self.omega_y, self.omega_z)
    }
}

/// Euler angle rates, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerRates {
    pub gamma_dot: f64,
    pub theta_dot: f64,
    pub psi_dot: f64,
}

/// Half-angle product form of the Euler-to-quaternion conversion.
///
/// The vector part carries the sign that makes the result agree with
/// [`dcm_from_quat`], [`euler_from_quat`] and [`dcm_from_euler`]; with the
/// opposite sign the quaternion would describe the inverse rotation.
pub fn quat_from_euler(e: &EulerAngles) -> AttitudeQuaternion {
    let (sg, cg) = (e.gamma / 2.0).sin_cos();
    let (st, ct) = (e.theta / 2.0).sin_cos();
    let (sp, cp) = (e.psi / 2.0).sin_cos();
    canonical([
        cg * ct * cp - sg * st * sp,
        cg * st * sp + sg * ct * cp,
        cg * ct * sp + sg * st * cp,
        cg * st * cp - sg * ct * sp,
    ])
}

pub fn dcm_from_quat(q: &AttitudeQuaternion) -> DirectionCosineMatrix {
    let [q0, q1, q2, q3] = q.components();
    let (s0, s1, s2, s3) = (q0 * q0, q1 * q1, q2 * q2, q3 * q3);
    DirectionCosineMatrix(Matrix3::new(
        s0 + s1 - s2 - s3,
        2.0 * (q1 * q2 + q0 * q3),
        2.0 * (q1 * q3 - q0 * q2),
        2.0 * (q1 * q2 - q0 * q3),
        s0 - s1 + s2 - s3,
        2.0 * (q2 * q3 + q0 * q1),
        2.0 * (q0 * q2 + q1 * q3),
        2.0 * (q2 * q3 - q0 * q1),
        s0 - s1 - s2 + s3,
    ))
}

/// Local-to-body rotation matrix written directly in Euler angles.
pub fn dcm_from_euler(e: &EulerAngles) -> DirectionCosineMatrix {
    let (sg, cg) = e.gamma.sin_cos();
    let (st, ct) = e.theta.sin_cos();
    let (sp, cp) = e.psi.sin_cos();
    DirectionCosineMatrix(Matrix3::new(
        ct * cp,
        st,
        -ct * sp,
        -st * cp * cg + sp * sg,
        ct * cg,
        st * sp * cg + cp * sg,
        st * cp * sg + sp * cg,
        -ct * sg,
        -st * sp * sg + cp * cg,
    ))
}

/// Maps an angle from atan2's [-pi, pi] into (-pi, pi].
fn half_open(a: f64) -> f64 {
    if a <= -std::f64::consts::PI {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

pub fn euler_from_quat(q: &AttitudeQuaternion) -> EulerSolution {
    let l = dcm_from_quat(q);
    let l12 = l.l(1, 2);
    if l12.abs() > 1.0 - GIMBAL_LOCK_EPS {
        let theta = std::f64::consts::FRAC_PI_2.copysign(l12);
        // With gamma = 0 the third row reduces to (sin psi, 0, cos psi).
        let psi = half_open(l.l(3, 1).atan2(l.l(3, 3)));
        return EulerSolution::GimbalLock(EulerAngles::new(0.0, theta, psi));
    }
    let theta = l12.clamp(-1.0, 1.0).asin();
    let gamma = half_open((-l.l(3, 2)).atan2(l.l(2, 2)));
    let psi = half_open((-l.l(1, 3)).atan2(l.l(1, 1)));
    EulerSolution::Regular(EulerAngles::new(gamma, theta, psi))
}

pub fn euler_rates(e: &EulerAngles, w: &BodyRates) -> Result<EulerRates> {
    if e.theta.abs() >= std::f64::consts::FRAC_PI_2 - SINGULAR_BAND {
        return Err(FlightError::SingularAttitude { theta: e.theta });
    }
    let (sg, cg) = e.gamma.sin_cos();
    let (ct, tt) = (e.theta.cos(), e.theta.tan());
    let lateral = w.omega_y * cg - w.omega_z * sg;
    Ok(EulerRates {
        gamma_dot: w.omega_x - tt * lateral,
        theta_dot: w.omega_y * sg + w.omega_z * cg,
        psi_dot: w.omega_y * cg / ct - w.omega_z * sg / ct,
    })
}

/// Quaternion kinematics: half the rate matrix applied to `q`.
pub fn quat_derivative(q: &AttitudeQuaternion, w: &BodyRates) -> [f64; 4] {
    let [q0, q1, q2, q3] = q.components();
    let (wx, wy, wz) = (w.omega_x, w.omega_y, w.omega_z);
    [
        0.5 * (-wx * q1 - wy * q2 - wz * q3),
        0.5 * (wx * q0 + wz * q2 - wy * q3),
        0.5 * (wy * q0 - wz * q1 + wx * q3),
        0.5 * (wz * q0 + wy * q1 - wx * q2),
    ]
}

pub fn local_to_body(e: &EulerAngles, v_local: &Vec3) -> Vec3 {
    dcm_from_euler(e).local_to_body(v_local)
}

pub fn body_to_local(e: &EulerAngles, v_body: &Vec3) -> Vec3 {
    dcm_from_euler(e).body_to_local(v_body)
}

pub fn normalize(q: &AttitudeQuaternion) -> Result<AttitudeQuaternion> {
    let n = q.norm();
    if !(n >= DEGENERATE_NORM) {
        return Err(FlightError::DegenerateQuaternion { norm: n });
    }
    let c = q.components();
    Ok(canonical([c[0] / n, c[1] / n, c[2] / n, c[3] / n]))
}
