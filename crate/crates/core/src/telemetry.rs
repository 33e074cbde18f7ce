//! State frames, the newline-delimited JSON wire encoding and CSV recording.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Deserializer};

use crate::airdata;
use crate::dynamics::{BodyState, ControlInputs};
use crate::frames;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct FrameEuler {
    #[serde(deserialize_with = "f64_or_nan")]
    pub gamma: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub theta: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub psi: f64,
    pub gimbal_lock: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct FrameAirData {
    #[serde(rename = "V", deserialize_with = "f64_or_nan")]
    pub v: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub alpha: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub beta: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub mach: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub qbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct FrameControls {
    #[serde(deserialize_with = "f64_or_nan")]
    pub elev: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub ail: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub rud: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub thr: f64,
}

impl From<&ControlInputs> for FrameControls {
    fn from(u: &ControlInputs) -> Self {
        Self { elev: u.elevator, ail: u.aileron, rud: u.rudder, thr: u.throttle }
    }
}

/// Snapshot of the vehicle at one instant, as streamed and recorded.
/// Quantities that cannot be evaluated (air data at zero airspeed, outside
/// the atmosphere) are NaN and travel as `null`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct StateFrame {
    pub t: f64,
    #[serde(deserialize_with = "array_or_nan")]
    pub position: [f64; 3],
    #[serde(deserialize_with = "array_or_nan")]
    pub v_body: [f64; 3],
    #[serde(deserialize_with = "array_or_nan")]
    pub q: [f64; 4],
    pub euler: FrameEuler,
    #[serde(deserialize_with = "array_or_nan")]
    pub w: [f64; 3],
    pub airdata: FrameAirData,
    pub controls: FrameControls,
    pub overrun_count: u64,
    /// Set only on the last frame of a run that ended in an error.
    #[serde(default)]
    pub error: Option<String>,
}

impl StateFrame {
    pub fn capture(t: f64, s: &BodyState, u: &ControlInputs, overrun_count: u64) -> Self {
        let solution = frames::euler_from_quat(&s.q);
        let e = solution.angles();
        let air = airdata::isa_atmosphere(s.altitude())
            .and_then(|atm| airdata::airdata_from_velocity(&s.v_body, &atm))
            .map(|a| FrameAirData { v: a.v, alpha: a.alpha, beta: a.beta, mach: a.mach, qbar: a.qbar })
            .unwrap_or(FrameAirData {
                v: s.v_body.norm(),
                alpha: f64::NAN,
                beta: f64::NAN,
                mach: f64::NAN,
                qbar: f64::NAN,
            });
        Self {
            t,
            position: s.position.into(),
            v_body: s.v_body.into(),
            q: s.q.components(),
            euler: FrameEuler { gamma: e.gamma, theta: e.theta, psi: e.psi, gimbal_lock: solution.is_gimbal_lock() },
            w: s.w.to_vec3().into(),
            airdata: air,
            controls: u.into(),
            overrun_count,
            error: None,
        }
    }
}

fn f64_or_nan<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn array_or_nan<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[f64; N], D::Error>
where
    [Option<f64>; N]: Deserialize<'de>,
{
    Ok(<[Option<f64>; N]>::deserialize(d)?.map(|v| v.unwrap_or(f64::NAN)))
}

/// Writes `x` with 9 significant digits, trailing zeros trimmed; plain
/// decimal for moderate exponents, `1.5e-9` style otherwise. Non-finite
/// values become `null`.
pub fn push_number(out: &mut String, x: f64) {
    if !x.is_finite() {
        out.push_str("null");
        return;
    }
    if x == 0.0 {
        out.push('0');
        return;
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    if x < 0.0 {
        out.push('-');
    }
    if (-7..21).contains(&exp) {
        if exp >= 0 {
            let int_len = exp as usize + 1;
            if digits.len() <= int_len {
                out.push_str(digits);
                out.extend(std::iter::repeat_n('0', int_len - digits.len()));
            } else {
                out.push_str(&digits[..int_len]);
                out.push('.');
                out.push_str(&digits[int_len..]);
            }
        } else {
            out.push_str("0.");
            out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
            out.push_str(digits);
        }
    } else {
        out.push_str(&digits[..1]);
        if digits.len() > 1 {
            out.push('.');
            out.push_str(&digits[1..]);
        }
        let _ = write!(out, "e{exp}");
    }
}

fn push_array(out: &mut String, xs: &[f64]) {
    out.push('[');
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_number(out, *x);
    }
    out.push(']');
}

fn push_fields(out: &mut String, fields: &[(&str, f64)]) {
    out.push('{');
    for (i, (k, v)) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "\"{k}\":");
        push_number(out, *v);
    }
    out.push('}');
}

/// One JSON object per line with a fixed key order, terminated by `\n`.
pub fn encode_frame(f: &StateFrame) -> String {
    let mut out = String::with_capacity(512);
    out.push_str("{\"t\":");
    push_number(&mut out, f.t);
    out.push_str(",\"position\":");
    push_array(&mut out, &f.position);
    out.push_str(",\"v_body\":");
    push_array(&mut out, &f.v_body);
    out.push_str(",\"q\":");
    push_array(&mut out, &f.q);
    out.push_str(",\"euler\":{\"gamma\":");
    push_number(&mut out, f.euler.gamma);
    out.push_str(",\"theta\":");
    push_number(&mut out, f.euler.theta);
    out.push_str(",\"psi\":");
    push_number(&mut out, f.euler.psi);
    let _ = write!(out, ",\"gimbal_lock\":{}}}", f.euler.gimbal_lock);
    out.push_str(",\"w\":");
    push_array(&mut out, &f.w);
    out.push_str(",\"airdata\":");
    let a = &f.airdata;
    push_fields(&mut out, &[("V", a.v), ("alpha", a.alpha), ("beta", a.beta), ("mach", a.mach), ("qbar", a.qbar)]);
    out.push_str(",\"controls\":");
    let c = &f.controls;
    push_fields(&mut out, &[("elev", c.elev), ("ail", c.ail), ("rud", c.rud), ("thr", c.thr)]);
    let _ = write!(out, ",\"overrun_count\":{}", f.overrun_count);
    if let Some(err) = &f.error {
        out.push_str(",\"error\":");
        out.push_str(&serde_json::to_string(err).expect("string serializes"));
    }
    out.push_str("}\n");
    out
}

pub fn decode_frame(line: &str) -> serde_json::Result<StateFrame> {
    serde_json::from_str(line.trim_end())
}

pub const CSV_HEADER: [&str; 26] = [
    "t", "px", "py", "pz", "vbx", "vby", "vbz", "q0", "q1", "q2", "q3", "gamma", "theta", "psi", "wx", "wy", "wz",
    "V", "alpha", "beta", "mach", "qbar", "elev", "ail", "rud", "thr",
];

/// Streams frames into CSV rows.
pub struct CsvRecorder<W: Write> {
    writer: csv::Writer<W>,
    rows: usize,
}

impl CsvRecorder<std::fs::File> {
    pub fn create(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Self::new(std::fs::File::create(path)?)
    }
}

impl<W: Write> CsvRecorder<W> {
    pub fn new(w: W) -> std::io::Result<Self> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        writer.write_record(CSV_HEADER)?;
        Ok(Self { writer, rows: 0 })
    }

    pub fn record(&mut self, f: &StateFrame) -> std::io::Result<()> {
        let e = &f.euler;
        let a = &f.airdata;
        let c = &f.controls;
        let values = [
            f.t, f.position[0], f.position[1], f.position[2], f.v_body[0], f.v_body[1], f.v_body[2], f.q[0], f.q[1],
            f.q[2], f.q[3], e.gamma, e.theta, e.psi, f.w[0], f.w[1], f.w[2], a.v, a.alpha, a.beta, a.mach, a.qbar,
            c.elev, c.ail, c.rud, c.thr,
        ];
        self.writer.write_record(values.iter().map(|v| v.to_string()))?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Flushes and returns the number of data rows written.
    pub fn finish(mut self) -> std::io::Result<usize> {
        self.writer.flush()?;
        Ok(self.rows)
    }
}

pub fn record_csv<'a>(frames: impl IntoIterator<Item = &'a StateFrame>, path: impl AsRef<Path>) -> std::io::Result<usize> {
    let mut rec = CsvRecorder::create(path)?;
    for f in frames {
        rec.record(f)?;
    }
    rec.finish()
}
