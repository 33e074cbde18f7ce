//! Standard atmosphere (troposphere) and air-data quantities.

use crate::error::{FlightError, Result};
use crate::Vec3;

pub const SEA_LEVEL_TEMPERATURE: f64 = 288.15;
pub const SEA_LEVEL_PRESSURE: f64 = 101_325.0;
pub const LAPSE_RATE: f64 = 0.0065;
pub const GAS_CONSTANT: f64 = 287.05;
pub const HEAT_CAPACITY_RATIO: f64 = 1.4;
pub const STANDARD_GRAVITY: f64 = 9.806_65;
pub const TROPOPAUSE: f64 = 11_000.0;

/// Below this airspeed alpha and beta are the direction of a null vector.
pub const ZERO_AIRSPEED: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphereSample {
    /// Density, kg/m^3.
    pub rho: f64,
    /// Speed of sound, m/s.
    pub a: f64,
    /// Temperature, K.
    pub temperature: f64,
    /// Static pressure, Pa.
    pub pressure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AirData {
    pub v: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mach: f64,
    pub qbar: f64,
    pub v_dot: f64,
    pub alpha_dot: f64,
    pub beta_dot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirDataRates {
    pub v_dot: f64,
    pub alpha_dot: f64,
    pub beta_dot: f64,
}

pub fn isa_atmosphere(altitude: f64) -> Result<AtmosphereSample> {
    if !(0.0..=TROPOPAUSE).contains(&altitude) {
        return Err(FlightError::AltitudeOutOfRange { altitude });
    }
    let temperature = SEA_LEVEL_TEMPERATURE - LAPSE_RATE * altitude;
    let exponent = STANDARD_GRAVITY / (LAPSE_RATE * GAS_CONSTANT);
    let pressure = SEA_LEVEL_PRESSURE * (temperature / SEA_LEVEL_TEMPERATURE).powf(exponent);
    Ok(AtmosphereSample {
        rho: pressure / (GAS_CONSTANT * temperature),
        a: (HEAT_CAPACITY_RATIO * GAS_CONSTANT * temperature).sqrt(),
        temperature,
        pressure,
    })
}

pub fn dynamic_pressure(rho: f64, v: f64) -> f64 {
    0.5 * rho * v * v
}

/// Airspeed, incidence angles, Mach and dynamic pressure from the body-axis
/// velocity. Rate fields are left at zero.
///
/// Alpha is positive when the relative velocity has a negative y_b
/// component; beta is positive when it has a positive z_b component.
pub fn airdata_from_velocity(v_body: &Vec3, atm: &AtmosphereSample) -> Result<AirData> {
    let v = v_body.norm();
    if v < ZERO_AIRSPEED {
        return Err(FlightError::ZeroAirspeed { airspeed: v });
    }
    let planar = v_body.x.hypot(v_body.y);
    Ok(AirData {
        v,
        alpha: (-v_body.y).atan2(v_body.x),
        beta: v_body.z.atan2(planar),
        mach: v / atm.a,
        qbar: dynamic_pressure(atm.rho, v),
        ..AirData::default()
    })
}

pub fn airdata_rates(v_body: &Vec3, v_body_dot: &Vec3) -> Result<AirDataRates> {
    let (vx, vy, vz) = (v_body.x, v_body.y, v_body.z);
    let (ax, ay, az) = (v_body_dot.x, v_body_dot.y, v_body_dot.z);
    let v2 = vx * vx + vy * vy + vz * vz;
    let v = v2.sqrt();
    if v < ZERO_AIRSPEED {
        return Err(FlightError::ZeroAirspeed { airspeed: v });
    }
    let planar2 = vx * vx + vy * vy;
    if planar2 <= 1e-12 {
        return Err(FlightError::DegenerateAlphaRate { planar: planar2 });
    }
    let planar_dot = vx * ax + vy * ay;
    Ok(AirDataRates {
        v_dot: (planar_dot + vz * az) / v,
        alpha_dot: (vy * ax - vx * ay) / planar2,
        beta_dot: (az * planar2 - vz * planar_dot) / (v2 * planar2.sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // Reference values below come from a 40-digit evaluation of the same
    // closed-form troposphere relations.

    #[test]
    fn sea_level() {
        let s = isa_atmosphere(0.0).unwrap();
        assert!(close(s.rho, 1.225_012_265_99, 1e-9));
        assert!(close(s.a, 340.292_286_865, 1e-8));
        assert_eq!(s.pressure, 101_325.0);
    }

    #[test]
    fn three_kilometres() {
        let s = isa_atmosphere(3000.0).unwrap();
        assert!(close(s.temperature, 268.65, 1e-12));
        assert!(close(s.pressure, 70_108.268_339_7, 1e-6));
        assert!(close(s.rho, 0.909_127_603_214, 1e-9));
        assert!(close(s.a, 328.576_285_663, 1e-8));
    }

    #[test]
    fn outside_troposphere() {
        assert!(matches!(isa_atmosphere(20_000.0), Err(FlightError::AltitudeOutOfRange { .. })));
        assert!(isa_atmosphere(-1.0).is_err());
        assert!(isa_atmosphere(f64::NAN).is_err());
        assert!(isa_atmosphere(11_000.0).is_ok());
    }

    #[test]
    fn dynamic_pressure_values() {
        assert_eq!(dynamic_pressure(1.0, 0.0), 0.0);
        assert_eq!(dynamic_pressure(2.0, 10.0), 100.0);
        assert!(close(dynamic_pressure(0.9093, 69.444), 2192.535_593, 1e-5));
    }

    #[test]
    fn incidence_angles() {
        let atm = isa_atmosphere(0.0).unwrap();
        let a = airdata_from_velocity(&Vec3::new(50.0, 0.0, 0.0), &atm).unwrap();
        assert_eq!((a.alpha, a.beta), (0.0, 0.0));

        let a = airdata_from_velocity(&Vec3::new(100.0, -10.0, 0.0), &atm).unwrap();
        assert!(close(a.alpha, 0.1f64.atan(), 1e-15));
        assert!(close(a.alpha.to_degrees(), 5.711, 1e-3));
        assert_eq!(a.beta, 0.0);

        let a = airdata_from_velocity(&Vec3::new(100.0, 0.0, 10.0), &atm).unwrap();
        assert_eq!(a.alpha, 0.0);
        assert!(close(a.beta, 0.1f64.atan(), 1e-15));
    }

    #[test]
    fn incidence_survives_reverse_flow() {
        let atm = isa_atmosphere(0.0).unwrap();
        let a = airdata_from_velocity(&Vec3::new(-10.0, -1.0, 0.0), &atm).unwrap();
        assert!(a.alpha > 3.0);
    }

    #[test]
    fn zero_airspeed_rejected() {
        let atm = isa_atmosphere(0.0).unwrap();
        assert!(matches!(
            airdata_from_velocity(&Vec3::zeros(), &atm),
            Err(FlightError::ZeroAirspeed { .. })
        ));
        assert!(matches!(
            airdata_rates(&Vec3::zeros(), &Vec3::x()),
            Err(FlightError::ZeroAirspeed { .. })
        ));
        assert!(matches!(
            airdata_rates(&Vec3::new(0.0, 0.0, 5.0), &Vec3::x()),
            Err(FlightError::DegenerateAlphaRate { .. })
        ));
    }

    #[test]
    fn rate_substitutions() {
        let r = airdata_rates(&Vec3::new(100.0, 0.0, 0.0), &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!((r.v_dot, r.alpha_dot, r.beta_dot), (1.0, 0.0, 0.0));
        let r = airdata_rates(&Vec3::new(100.0, 0.0, 0.0), &Vec3::new(0.0, -1.0, 0.0)).unwrap();
        assert_eq!(r.alpha_dot, 0.01);
    }

    #[test]
    fn sign_conventions() {
        let atm = isa_atmosphere(0.0).unwrap();
        let a = airdata_from_velocity(&Vec3::new(60.0, -3.0, 2.0), &atm).unwrap();
        assert!(a.alpha > 0.0 && a.beta > 0.0);
        let a = airdata_from_velocity(&Vec3::new(60.0, 3.0, -2.0), &atm).unwrap();
        assert!(a.alpha < 0.0 && a.beta < 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vel() -> impl Strategy<Value = Vec3> {
            (20.0..120.0f64, -30.0..30.0f64, -30.0..30.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
        }

        fn acc() -> impl Strategy<Value = Vec3> {
            (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
        }

        proptest! {
            #[test]
            fn rates_match_central_difference(v in vel(), vd in acc()) {
                let atm = isa_atmosphere(1000.0).unwrap();
                let h = 1e-6;
                let fwd = airdata_from_velocity(&(v + vd * h), &atm).unwrap();
                let back = airdata_from_velocity(&(v - vd * h), &atm).unwrap();
                let r = airdata_rates(&v, &vd).unwrap();
                prop_assert!(close(r.v_dot, (fwd.v - back.v) / (2.0 * h), 1e-6));
                prop_assert!(close(r.alpha_dot, (fwd.alpha - back.alpha) / (2.0 * h), 1e-6));
                prop_assert!(close(r.beta_dot, (fwd.beta - back.beta) / (2.0 * h), 1e-6));
            }

            #[test]
            fn qbar_and_mach_monotone_in_speed(h in 0.0..11_000.0f64, v in 1.0..300.0f64, dv in 1e-3..50.0f64) {
                let atm = isa_atmosphere(h).unwrap();
                let lo = airdata_from_velocity(&Vec3::new(v, 0.0, 0.0), &atm).unwrap();
                let hi = airdata_from_velocity(&Vec3::new(v + dv, 0.0, 0.0), &atm).unwrap();
                prop_assert!(hi.qbar > lo.qbar);
                prop_assert!(hi.mach > lo.mach);
            }
        }
    }
}
