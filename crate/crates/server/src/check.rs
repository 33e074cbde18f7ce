//! Fast invariant checks run by `flightlab check`.

use flightlab_core::aero::ReferenceGeometry;
use flightlab_core::airdata::STANDARD_GRAVITY;
use flightlab_core::dynamics::{rotational_accel_full, rotational_accel_sym, state_derivative, StateDerivative};
use flightlab_core::engine::{
    run_batch, run_realtime, RealtimeOptions, Scenario, ScriptedControls, VirtualClock, TRIM_ACCEL_TOL,
    TRIM_ANGULAR_TOL,
};
use flightlab_core::frames::{dcm_from_euler, dcm_from_quat, euler_from_quat, quat_derivative, quat_from_euler};
use flightlab_core::integrator::{integrate, IntegratorConfig};
use flightlab_core::telemetry::{decode_frame, encode_frame};
use flightlab_core::{
    AircraftParameters, AttitudeQuaternion, BodyRates, BodyState, ControlInputs, EulerAngles, InertiaTensor, Vec3,
};

pub type CheckResult = Result<String, String>;

fn verdict(ok: bool, detail: String) -> CheckResult {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn wrap(a: f64) -> f64 {
    let d = a.rem_euclid(std::f64::consts::TAU);
    if d > std::f64::consts::PI {
        d - std::f64::consts::TAU
    } else {
        d
    }
}

fn attitude_grid() -> impl Iterator<Item = EulerAngles> {
    (0..12).flat_map(|i| {
        (0..11).flat_map(move |j| {
            (0..12).map(move |k| {
                EulerAngles::new(
                    -3.1 + 0.52 * i as f64,
                    (-85.0 + 17.0 * j as f64).to_radians(),
                    -3.0 + 0.51 * k as f64,
                )
            })
        })
    })
}

fn euler_round_trip() -> CheckResult {
    let worst = attitude_grid()
        .map(|e| {
            let b = euler_from_quat(&quat_from_euler(&e)).angles();
            wrap(b.gamma - e.gamma).abs().max((b.theta - e.theta).abs()).max(wrap(b.psi - e.psi).abs())
        })
        .fold(0.0, f64::max);
    verdict(worst <= 1e-9, format!("max error {worst:.1e} rad"))
}

fn dcm_consistency() -> CheckResult {
    let identity = dcm_from_quat(&AttitudeQuaternion::IDENTITY);
    let worst = attitude_grid()
        .map(|e| {
            let m = dcm_from_quat(&quat_from_euler(&e)).0;
            let ortho = (m.transpose() * m - identity.0).amax();
            (m - dcm_from_euler(&e).0).amax().max(ortho).max((m.determinant() - 1.0).abs())
        })
        .fold(0.0, f64::max);
    verdict(worst <= 1e-12, format!("max deviation {worst:.1e}"))
}

fn spin_closed_form() -> CheckResult {
    let w = BodyRates::new(0.3, -0.2, 0.4);
    let rhs = |_: f64, s: &BodyState| Ok(StateDerivative { q_dot: quat_derivative(&s.q, &w), ..Default::default() });
    let s = integrate(&BodyState::default(), rhs, 10.0, IntegratorConfig::default(), |_, _| {})
        .map_err(|e| e.to_string())?;
    let exact = AttitudeQuaternion::from_axis_angle(w.to_vec3(), w.to_vec3().norm() * 10.0);
    let err = s.q.angle_to(&exact);
    verdict(err <= 1e-6, format!("attitude error after 10 s {err:.1e} rad"))
}

fn free_fall() -> CheckResult {
    let p = AircraftParameters {
        mass: 1000.0,
        inertia: InertiaTensor::diagonal(1000.0, 2000.0, 1500.0),
        geometry: ReferenceGeometry { area: 10.0, span: 10.0, chord: 1.0 },
        derivatives: Default::default(),
        max_thrust: 0.0,
    };
    let s0 = BodyState { position: Vec3::new(0.0, 500.0, 0.0), ..Default::default() };
    let u = ControlInputs::default();
    let s = integrate(&s0, |_, s| state_derivative(s, &p, &u), 5.0, IntegratorConfig::default(), |_, _| {})
        .map_err(|e| e.to_string())?;
    let drop = 0.5 * STANDARD_GRAVITY * 25.0;
    let rel = ((500.0 - s.position.y) - drop).abs() / drop;
    verdict(rel <= 1e-9, format!("drop after 5 s off by {rel:.1e} relative"))
}

fn rotational_forms() -> CheckResult {
    let mut worst = 0.0f64;
    for (i, jxy) in [0.0, 50.0, -120.0, 300.0].into_iter().enumerate() {
        let j = InertiaTensor { jxy, ..InertiaTensor::diagonal(1285.0, 2667.0, 1825.0) };
        let w = BodyRates::new(0.4 - 0.3 * i as f64, 0.2 * i as f64, -0.5);
        let m = Vec3::new(120.0, -300.0, 75.0 * i as f64);
        let full = rotational_accel_full(&j, &w, &m).map_err(|e| e.to_string())?;
        let sym = rotational_accel_sym(&j, &w, &m).map_err(|e| e.to_string())?;
        worst = worst.max((full - sym).amax());
    }
    verdict(worst <= 1e-12, format!("max difference {worst:.1e} rad/s^2"))
}

fn trim_residual() -> CheckResult {
    let sc = Scenario::kittyhawk500();
    let run = sc.prepare().map_err(|e| e.to_string())?;
    let t = run.trim.ok_or("default scenario does not trim")?;
    let d = state_derivative(&t.state, &sc.aircraft, &t.controls).map_err(|e| e.to_string())?;
    let (a, w) = (d.v_body_dot.norm(), d.w_dot.norm());
    verdict(a <= TRIM_ACCEL_TOL && w <= TRIM_ANGULAR_TOL, format!("|v_dot| {a:.1e}, |w_dot| {w:.1e}"))
}

fn batch_matches_realtime() -> CheckResult {
    let mut sc = Scenario::builtin("kittyhawk500_pulse").ok_or("pulse scenario missing")?;
    sc.duration = 2.0;
    let run = sc.prepare().map_err(|e| e.to_string())?;
    let mut batch = Vec::new();
    run_batch(&sc, |f| batch.push(encode_frame(f))).map_err(|e| e.to_string())?;
    let mut live = Vec::new();
    let opts = RealtimeOptions { duration: Some(sc.duration), stop: None };
    run_realtime(&sc, &mut ScriptedControls(run.controls), |f| live.push(encode_frame(f)), &VirtualClock::new(), &opts)
        .map_err(|e| e.to_string())?;
    verdict(batch == live, format!("{} frames compared", batch.len()))
}

fn wire_round_trip() -> CheckResult {
    let mut sc = Scenario::kittyhawk500();
    sc.duration = 0.2;
    let mut worst = 0.0f64;
    let mut err = None;
    run_batch(&sc, |f| match decode_frame(&encode_frame(f)) {
        Ok(back) => worst = worst.max(((back.airdata.v - f.airdata.v) / f.airdata.v).abs()),
        Err(e) => err = Some(e.to_string()),
    })
    .map_err(|e| e.to_string())?;
    if let Some(e) = err {
        return Err(e);
    }
    verdict(worst <= 5e-9, format!("airspeed relative error {worst:.1e}"))
}

pub fn quick_suite() -> Vec<(&'static str, CheckResult)> {
    let checks: [(&str, fn() -> CheckResult); 8] = [
        ("euler round-trip", euler_round_trip),
        ("dcm consistency", dcm_consistency),
        ("quaternion spin", spin_closed_form),
        ("free fall", free_fall),
        ("rotational forms", rotational_forms),
        ("trim residual", trim_residual),
        ("batch/real-time", batch_matches_realtime),
        ("wire round-trip", wire_round_trip),
    ];
    checks.into_iter().map(|(name, f)| (name, f())).collect()
}
