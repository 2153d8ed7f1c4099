//! The measurement pipeline shared by `run` and `bench`.

use std::io::Write;
use std::process::{Command, ExitStatus};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use chrono::{SecondsFormat, Utc};
use nix::sys::signal::{kill, Signal};
use nix::unistd::Pid;
use signal_hook::consts::{SIGINT, SIGTERM};
use signal_hook::iterator::Signals;

use energy_usage_core::emissions::EquivalencyFactors;
use energy_usage_core::grid::DatasetSnapshot;
use energy_usage_core::locate::{
    resolve_location, HttpGeoLookup, LocateOptions, LocationResolution, REGION_ENV_VAR,
};
use energy_usage_core::meter::{
    summarize, GpuProbe, GpuSource, MeasurementSummary, MeterConfig, MeterError, Phase,
    PowerSample, PowercapMeter, SamplingSession, StopWhen, SystemClock, TraceRecording,
};
use energy_usage_core::report::{
    build_report, render_html, render_json, render_text, ReportDocument, ReportHeader, Timestamps,
};

use crate::args::{DataArgs, Format, MeasureArgs, ReportTo};
use crate::Failure;

const REMEDIATION: &str = "energy readings need Linux RAPL counters under \
/sys/class/powercap/intel-rapl (Intel or recent AMD CPUs, readable energy_uj files; \
newer kernels restrict them to root). Run with sufficient privileges on such a host, \
or pass --trace <file> to replay recorded counters.";

pub fn load_snapshot(data: &DataArgs) -> Result<DatasetSnapshot, Failure> {
    match (&data.us_data, &data.intl_data) {
        (None, None) => Ok(DatasetSnapshot::embedded()),
        (us, intl) => {
            let read =
                |p: &Option<std::path::PathBuf>, embedded: &str| -> Result<Vec<u8>, Failure> {
                    match p {
                        Some(p) => std::fs::read(p)
                            .with_context(|| format!("cannot read {}", p.display()))
                            .map_err(Failure::env),
                        None => Ok(embedded.as_bytes().to_vec()),
                    }
                };
            let us = read(us, energy_usage_core::grid::EMBEDDED_US_CSV)?;
            let intl = read(intl, energy_usage_core::grid::EMBEDDED_INTL_CSV)?;
            DatasetSnapshot::from_csv(&us, &intl)
                .context("invalid replacement dataset")
                .map_err(Failure::env)
        }
    }
}

fn locate(args: &MeasureArgs, snapshot: &DatasetSnapshot) -> Result<LocationResolution, Failure> {
    let options = LocateOptions {
        explicit: args.location.clone(),
        env: std::env::var(REGION_ENV_VAR).ok(),
        default_choice: args.default_region,
        offline: args.offline,
    };
    let geo = HttpGeoLookup {
        endpoint: args.geo_endpoint.clone(),
        timeout: Duration::from_secs_f64(args.geo_timeout.max(0.0)),
    };
    resolve_location(&options, snapshot, &geo).map_err(Failure::env)
}

/// Where power readings come from for one run.
enum Readings {
    Hardware(SamplingSession),
    Trace(TraceRecording),
}

fn open_readings(args: &MeasureArgs, config: MeterConfig) -> Result<Readings, Failure> {
    if let Some(path) = &args.trace {
        let trace = TraceRecording::from_path(path).map_err(Failure::env)?;
        return Ok(Readings::Trace(trace));
    }
    let meter = PowercapMeter::discover().map_err(|e| match e {
        MeterError::NoPowercapInterface { .. } => Failure::env(anyhow!("{e}\n{REMEDIATION}")),
        other => Failure::env(other),
    })?;
    let gpu: Option<Box<dyn GpuSource>> = Some(Box::new(GpuProbe::default()));
    SamplingSession::new(
        Box::new(meter),
        Box::new(SystemClock::default()),
        gpu,
        config,
    )
    .map(Readings::Hardware)
    .map_err(Failure::env)
}

fn exit_code(status: ExitStatus) -> i32 {
    use std::os::unix::process::ExitStatusExt;
    status
        .code()
        .or_else(|| status.signal().map(|s| 128 + s))
        .unwrap_or(1)
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

struct ChildRun {
    code: i32,
    interrupted: bool,
    wall_s: f64,
    samples: Vec<PowerSample>,
}

/// Spawn the child with inherited stdio, sample while it runs and forward
/// SIGINT/SIGTERM to it.
fn run_child(argv: &[String], session: Option<SamplingSession>) -> Result<ChildRun, Failure> {
    let interrupted = Arc::new(AtomicBool::new(false));
    let mut signals = Signals::new([SIGINT, SIGTERM])
        .context("cannot install signal handlers")
        .map_err(Failure::internal)?;
    let handle = signals.handle();

    let started = Instant::now();
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .spawn()
        .map_err(|e| Failure::spawn(anyhow!("cannot run `{}`: {e}", argv[0])))?;
    let pid = Pid::from_raw(child.id() as i32);

    let forwarder = {
        let interrupted = Arc::clone(&interrupted);
        std::thread::spawn(move || {
            for sig in signals.forever() {
                interrupted.store(true, Ordering::SeqCst);
                if let Ok(sig) = Signal::try_from(sig) {
                    let _ = kill(pid, sig);
                }
            }
        })
    };

    let (stop_tx, stop_rx) = mpsc::channel();
    let sampler = session
        .map(|mut s| std::thread::spawn(move || s.run(Phase::Process(StopWhen::Signal(stop_rx)))));

    let status = child.wait();
    let wall_s = started.elapsed().as_secs_f64();
    let _ = stop_tx.send(());
    handle.close();
    let _ = forwarder.join();

    let samples = match sampler {
        Some(t) => t
            .join()
            .map_err(|_| Failure::internal(anyhow!("sampling thread panicked")))?
            .unwrap_or_else(|e| {
                eprintln!("energy-usage: sampling failed: {e}");
                Vec::new()
            }),
        None => Vec::new(),
    };
    let status = status
        .context("waiting for the child failed")
        .map_err(Failure::internal)?;
    Ok(ChildRun {
        code: exit_code(status),
        interrupted: interrupted.load(Ordering::SeqCst),
        wall_s,
        samples,
    })
}

fn render(doc: &ReportDocument, format: Format) -> Vec<u8> {
    match format {
        Format::Text => render_text(doc).into_bytes(),
        Format::Json => render_json(doc),
        Format::Html => render_html(doc),
    }
}

fn emit(doc: &ReportDocument, args: &MeasureArgs) -> anyhow::Result<()> {
    let bytes = render(doc, args.format);
    match (&args.out, args.report_to) {
        (Some(path), _) => std::fs::write(path, &bytes)
            .with_context(|| format!("cannot write report to {}", path.display())),
        (None, ReportTo::Stderr) => Ok(std::io::stderr().lock().write_all(&bytes)?),
        (None, ReportTo::Stdout) => Ok(std::io::stdout().lock().write_all(&bytes)?),
    }
}

pub struct Measured {
    pub exit_code: i32,
    pub summary: Option<MeasurementSummary>,
}

/// Measure `argv` and emit its report. Errors are only returned for
/// failures before the child starts; afterwards the child's exit code wins.
pub fn measure(
    argv: &[String],
    header: ReportHeader,
    args: &MeasureArgs,
) -> Result<Measured, Failure> {
    let config = args.meter_config();
    config.validate().map_err(Failure::env)?;
    let snapshot = load_snapshot(&args.data)?;
    let factors = match &args.equivalencies {
        Some(p) => EquivalencyFactors::from_path(p).map_err(Failure::env)?,
        None => EquivalencyFactors::default(),
    };
    let resolution = locate(args, &snapshot)?;
    let readings = open_readings(args, config)?;

    let started_at = now();
    let (baseline, session, trace) = match readings {
        Readings::Hardware(mut session) => {
            let baseline = session.run(Phase::Baseline).map_err(Failure::env)?;
            (baseline, Some(session), None)
        }
        Readings::Trace(trace) => {
            let baseline = if args.no_baseline {
                Vec::new()
            } else {
                trace.baseline_samples()
            };
            (baseline, None, Some(trace))
        }
    };

    let child = run_child(argv, session)?;
    let finished_at = now();

    let (process, duration_s) = match &trace {
        Some(t) => (t.process_samples(), t.process_duration_s()),
        None => (child.samples, child.wall_s),
    };
    let summary = match summarize(&baseline, &process, duration_s, &config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("energy-usage: no report: {e}");
            return Ok(Measured {
                exit_code: child.code,
                summary: None,
            });
        }
    };

    let mut header = header;
    header.exit_code = Some(child.code);
    header.interrupted = child.interrupted;
    let doc = build_report(
        header,
        summary,
        resolution,
        &snapshot,
        &factors,
        Timestamps {
            started_at,
            finished_at,
        },
    );
    if let Err(e) = emit(&doc, args) {
        eprintln!("energy-usage: {e:#}");
    }
    Ok(Measured {
        exit_code: child.code,
        summary: Some(summary),
    })
}
