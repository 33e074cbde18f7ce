use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use flightlab_core::engine::{run_batch, trim_level, InitialCondition, Scenario, ScenarioError};
use flightlab_core::frames::euler_from_quat;
use flightlab_core::telemetry::CsvRecorder;

use crate::check::quick_suite;
use crate::server::{Flight, FlightOptions, DEFAULT_PORT, PORT_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "flightlab", version, about = "Six-degree-of-freedom flight simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario as fast as possible.
    Run {
        /// Scenario file, or the name of a built-in scenario.
        scenario: String,
        /// Write every frame to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Override the scenario duration, s.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Fly a scenario in real time, serving telemetry and accepting controls.
    Fly {
        scenario: String,
        #[arg(long, env = PORT_ENV, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        host: IpAddr,
        /// Stop after this many simulated seconds; fly until interrupted if omitted.
        #[arg(long)]
        duration: Option<f64>,
        /// Serve this directory at / instead of the built-in page.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
    /// Print the level-flight trim for a scenario's initial condition.
    Trim { scenario: String },
    /// Run the quick invariant suite.
    Check,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("{failed} of {total} checks failed")]
    Checks { failed: usize, total: usize },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Scenario(e) if e.is_validation() => EXIT_VALIDATION,
            _ => EXIT_RUNTIME,
        }
    }
}

/// Resolves a built-in scenario name or a path to a scenario file.
pub fn resolve_scenario(arg: &str) -> Result<Scenario, ScenarioError> {
    if !Path::new(arg).exists() {
        if let Some(sc) = Scenario::builtin(arg) {
            return Ok(sc);
        }
    }
    Scenario::load(arg)
}

fn with_duration(mut sc: Scenario, duration: Option<f64>) -> Result<Scenario, ScenarioError> {
    if let Some(d) = duration {
        sc.duration = d;
        sc.validate()?;
    }
    Ok(sc)
}

fn run(scenario: &str, csv: Option<PathBuf>, duration: Option<f64>, out: &mut dyn Write) -> Result<(), CliError> {
    let sc = with_duration(resolve_scenario(scenario)?, duration)?;
    sc.prepare()?;
    let output_error = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Output { path, source }
    };
    let mut recorder = match &csv {
        Some(path) => Some(CsvRecorder::create(path).map_err(output_error(path))?),
        None => None,
    };
    let mut write_error = None;
    let result = run_batch(&sc, |f| {
        if let Some(rec) = recorder.as_mut() {
            if let Err(e) = rec.record(f) {
                write_error.get_or_insert(e);
            }
        }
    });
    let rows = match (recorder, &csv) {
        (Some(rec), Some(path)) => {
            if let Some(e) = write_error {
                return Err(output_error(path)(e));
            }
            Some(rec.finish().map_err(output_error(path))?)
        }
        _ => None,
    };
    let summary = result?;
    let s = &summary.final_state;
    let _ = writeln!(
        out,
        "{}: {} steps to t = {} s, V = {:.3} m/s, altitude = {:.2} m, wall time {:.3} s",
        sc.name,
        summary.steps,
        summary.final_time,
        s.v_body.norm(),
        s.altitude(),
        summary.wall_time.as_secs_f64()
    );
    if let (Some(rows), Some(path)) = (rows, csv) {
        let _ = writeln!(out, "wrote {rows} rows to {}", path.display());
    }
    Ok(())
}

fn trim(scenario: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let sc = resolve_scenario(scenario)?;
    let (altitude, airspeed, heading) = match sc.initial {
        InitialCondition::Trim(t) => (t.altitude, t.airspeed, t.heading),
        InitialCondition::State { state, .. } => {
            (state.altitude(), state.v_body.norm(), euler_from_quat(&state.q).angles().psi)
        }
    };
    let t = trim_level(&sc.aircraft, altitude, airspeed, heading).map_err(ScenarioError::from)?;
    let _ = writeln!(out, "{}: level flight at {altitude} m, {airspeed:.4} m/s", sc.name);
    let _ = writeln!(out, "elevator  {:+.6} rad ({:+.3} deg)", t.controls.elevator, t.controls.elevator.to_degrees());
    let _ = writeln!(out, "throttle  {:.6}", t.controls.throttle);
    let _ = writeln!(out, "theta     {:+.6} rad ({:+.3} deg)", t.theta, t.theta.to_degrees());
    let _ = writeln!(out, "alpha     {:+.6} rad ({:+.3} deg)", t.alpha, t.alpha.to_degrees());
    let _ = writeln!(
        out,
        "residual  |v_dot| {:.1e} m/s^2, |w_dot| {:.1e} rad/s^2 after {} iterations",
        t.accel_residual, t.angular_residual, t.iterations
    );
    Ok(())
}

fn check(out: &mut dyn Write) -> Result<(), CliError> {
    let results = quick_suite();
    let total = results.len();
    let mut failed = 0;
    for (name, r) in results {
        match r {
            Ok(detail) => {
                let _ = writeln!(out, "PASS  {name}: {detail}");
            }
            Err(detail) => {
                failed += 1;
                let _ = writeln!(out, "FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        return Err(CliError::Checks { failed, total });
    }
    Ok(())
}

fn fly(
    scenario: &str,
    addr: SocketAddr,
    duration: Option<f64>,
    assets: Option<PathBuf>,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let sc = resolve_scenario(scenario)?;
    if let Some(d) = duration {
        with_duration(sc.clone(), Some(d))?;
    }
    sc.prepare()?;
    let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Bind { addr, source })?;
    runtime.block_on(async {
        let listener =
            tokio::net::TcpListener::bind(addr).await.map_err(|source| CliError::Bind { addr, source })?;
        let flight = Flight::start(sc, listener, FlightOptions { duration, assets })
            .await
            .map_err(|source| CliError::Bind { addr, source })?;
        let _ = writeln!(err, "listening on http://{}", flight.local_addr());
        let _ = err.flush();
        loop {
            tokio::select! {
                _ = tokio::signal::ctrl_c() => {
                    flight.stop();
                    break;
                }
                _ = tokio::time::sleep(std::time::Duration::from_millis(50)) => {
                    if flight.is_finished() {
                        break;
                    }
                }
            }
        }
        let summary = flight.finish().await?;
        let _ = writeln!(
            err,
            "flew {} steps to t = {} s with {} overruns",
            summary.steps, summary.final_time, summary.overruns
        );
        Ok(())
    })
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with(args: impl IntoIterator<Item = impl Into<OsString> + Clone>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_VALIDATION;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Run { scenario, csv, duration } => run(&scenario, csv, duration, out),
        Command::Fly { scenario, port, host, duration, assets } => {
            fly(&scenario, SocketAddr::new(host, port), duration, assets, err)
        }
        Command::Trim { scenario } => trim(&scenario, out),
        Command::Check => check(out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
