//! Linear stability-derivative coefficient model and the body-axis
//! aerodynamic force and moment equations.
//!
//! Coefficients are body-axis: `cx` along x (negative is drag), `cy` along y
//! (lift), `cz` along z (side force); `mx` roll, `my` yaw, `mz` pitch.
//! Rates enter nondimensionalized: roll rate `p_hat = wx b / 2V`, yaw rate
//! `r_hat = wy b / 2V`, pitch rate `q_hat = wz c / 2V`.

use serde::{Deserialize, Serialize};

use crate::dynamics::ControlInputs;
use crate::error::{FlightError, Result};
use crate::frames::BodyRates;
use crate::Vec3;

pub const MIN_AIRSPEED: f64 = 1.0;
pub const COEFFICIENT_BOUND: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AeroCoefficients {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceGeometry {
    /// Wing area, m^2.
    pub area: f64,
    /// Wingspan, m.
    pub span: f64,
    /// Mean aerodynamic chord, m.
    pub chord: f64,
}

/// Affine expansion of one coefficient. All slopes are per radian (or per
/// unit nondimensional rate).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientDerivatives {
    pub zero: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p_hat: f64,
    pub q_hat: f64,
    pub r_hat: f64,
    pub elevator: f64,
    pub aileron: f64,
    pub rudder: f64,
}

impl CoefficientDerivatives {
    fn is_zero(&self) -> bool {
        *self == Self::default()
    }

    pub fn terms(&self) -> [(&'static str, f64); 9] {
        [
            ("zero", self.zero),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("p_hat", self.p_hat),
            ("q_hat", self.q_hat),
            ("r_hat", self.r_hat),
            ("elevator", self.elevator),
            ("aileron", self.aileron),
            ("rudder", self.rudder),
        ]
    }

    fn evaluate(&self, r: &Regressors) -> f64 {
        self.zero
            + self.alpha * r.alpha
            + self.beta * r.beta
            + self.p_hat * r.p_hat
            + self.q_hat * r.q_hat
            + self.r_hat * r.r_hat
            + self.elevator * r.elevator
            + self.aileron * r.aileron
            + self.rudder * r.rudder
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DerivativeSet {
    pub cx: CoefficientDerivatives,
    pub cy: CoefficientDerivatives,
    pub cz: CoefficientDerivatives,
    pub mx: CoefficientDerivatives,
    pub my: CoefficientDerivatives,
    pub mz: CoefficientDerivatives,
}

impl DerivativeSet {
    /// All-zero sets switch aerodynamics off entirely.
    pub fn is_zero(&self) -> bool {
        [self.cx, self.cy, self.cz, self.mx, self.my, self.mz].iter().all(|c| c.is_zero())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &CoefficientDerivatives)> {
        [
            ("cx", &self.cx),
            ("cy", &self.cy),
            ("cz", &self.cz),
            ("mx", &self.mx),
            ("my", &self.my),
            ("mz", &self.mz),
        ]
        .into_iter()
    }

    /// Placeholder derivatives for a 1000 kg single-engine light aircraft.
    /// Statically and dynamically stable; the short period is underdamped
    /// enough to overshoot twice. Not measured data.
    pub fn reference_light_aircraft() -> Self {
        let d = CoefficientDerivatives::default();
        DerivativeSet {
            cx: CoefficientDerivatives { zero: -0.05, alpha: 0.15, ..d },
            cy: CoefficientDerivatives { alpha: 4.8, q_hat: 3.9, elevator: 0.4, ..d },
            cz: CoefficientDerivatives { beta: -0.3, rudder: 0.18, ..d },
            mx: CoefficientDerivatives { beta: -0.09, p_hat: -0.47, r_hat: -0.1, aileron: 0.18, ..d },
            my: CoefficientDerivatives { beta: -0.065, p_hat: 0.03, r_hat: -0.1, rudder: -0.07, ..d },
            mz: CoefficientDerivatives { alpha: -1.2, q_hat: -6.0, elevator: -1.2, ..d },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForcesMoments {
    /// Body-axis force (X, Y, Z), N.
    pub force: Vec3,
    /// Body-axis moment (Mx, My, Mz), N m.
    pub moment: Vec3,
}

struct Regressors {
    alpha: f64,
    beta: f64,
    p_hat: f64,
    q_hat: f64,
    r_hat: f64,
    elevator: f64,
    aileron: f64,
    rudder: f64,
}

pub fn coefficients(
    d: &DerivativeSet,
    alpha: f64,
    beta: f64,
    w: &BodyRates,
    controls: &ControlInputs,
    v: f64,
    geom: &ReferenceGeometry,
) -> Result<AeroCoefficients> {
    if !(v >= MIN_AIRSPEED) {
        return Err(FlightError::AirspeedTooLow { airspeed: v });
    }
    let lateral = geom.span / (2.0 * v);
    let r = Regressors {
        alpha,
        beta,
        p_hat: w.omega_x * lateral,
        q_hat: w.omega_z * geom.chord / (2.0 * v),
        r_hat: w.omega_y * lateral,
        elevator: controls.elevator,
        aileron: controls.aileron,
        rudder: controls.rudder,
    };
    let c = AeroCoefficients {
        cx: d.cx.evaluate(&r),
        cy: d.cy.evaluate(&r),
        cz: d.cz.evaluate(&r),
        mx: d.mx.evaluate(&r),
        my: d.my.evaluate(&r),
        mz: d.mz.evaluate(&r),
    };
    for (name, value) in [("cx", c.cx), ("cy", c.cy), ("cz", c.cz), ("mx", c.mx), ("my", c.my), ("mz", c.mz)] {
        if !(value.abs() <= COEFFICIENT_BOUND) {
            return Err(FlightError::CoefficientOutOfRange { name, value });
        }
    }
    Ok(c)
}

pub fn aero_forces(qbar: f64, geom: &ReferenceGeometry, c: &AeroCoefficients) -> Vec3 {
    let qs = qbar * geom.area;
    Vec3::new(qs * c.cx, qs * c.cy, qs * c.cz)
}

/// Roll and yaw scale with span, pitch with chord.
pub fn aero_moments(qbar: f64, geom: &ReferenceGeometry, c: &AeroCoefficients) -> Vec3 {
    let qs = qbar * geom.area;
    Vec3::new(qs * geom.span * c.mx, qs * geom.span * c.my, qs * geom.chord * c.mz)
}

pub fn thrust_force(throttle: f64, max_thrust: f64) -> Result<Vec3> {
    if !(0.0..=1.0).contains(&throttle) {
        return Err(FlightError::ThrottleOutOfRange { throttle });
    }
    Ok(Vec3::new(throttle * max_thrust, 0.0, 0.0))
}
