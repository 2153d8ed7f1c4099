mod args;
mod measure;
mod regions;

use std::process::ExitCode;

use anyhow::anyhow;
use clap::Parser;

use energy_usage_core::bench::{run_workload, WorkloadSpec};
use energy_usage_core::report::ReportHeader;

use args::{BenchArgs, Cli, Command, RunArgs};

/// Exit code for problems with the environment or the invocation.
pub const EXIT_ENV: i32 = 2;
/// Exit code when the command could not be started.
pub const EXIT_SPAWN: i32 = 127;

/// An error that ends the wrapper itself, with the code to exit with.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn env(e: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_ENV,
            error: e.into(),
        }
    }

    pub fn spawn(e: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_SPAWN,
            error: e.into(),
        }
    }

    pub fn internal(e: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 1,
            error: e.into(),
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<i32, Failure> {
    let header = ReportHeader::new(args.command[0].clone(), args.command[1..].to_vec());
    Ok(measure::measure(&args.command, header, &args.measure)?.exit_code)
}

fn cmd_bench(args: BenchArgs) -> Result<i32, Failure> {
    let spec = WorkloadSpec {
        unit_ops: args.unit_ops,
        ..WorkloadSpec::new(args.shape, args.n)
    };
    let additions = spec.total_additions().map_err(Failure::env)?;
    let exe = std::env::current_exe()
        .map_err(|e| Failure::internal(anyhow!("cannot locate own executable: {e}")))?;
    let argv = vec![
        exe.to_string_lossy().into_owned(),
        "__workload".into(),
        args.shape.to_string(),
        args.n.to_string(),
        "--unit-ops".into(),
        args.unit_ops.to_string(),
    ];
    let header = ReportHeader::new("bench", vec![args.shape.to_string(), args.n.to_string()]);
    let measured = measure::measure(&argv, header, &args.measure)?;
    if let Some(s) = measured.summary {
        println!(
            "bench {} n={} additions={additions} duration_s={:.3} process_watts={:.3} measured_kwh={:e} adjusted_kwh={:e}",
            args.shape, args.n, s.duration_s, s.process_watts, s.measured_kwh, s.adjusted_kwh
        );
    }
    Ok(measured.exit_code)
}

fn cmd_workload(
    shape: energy_usage_core::bench::Shape,
    n: u64,
    unit_ops: u64,
) -> Result<i32, Failure> {
    let spec = WorkloadSpec {
        unit_ops,
        ..WorkloadSpec::new(shape, n)
    };
    let run = run_workload(&spec).map_err(Failure::env)?;
    println!("checksum={} additions={}", run.checksum, run.additions);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Regions(a) => regions::cmd_regions(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Workload { shape, n, unit_ops } => cmd_workload(shape, n, unit_ops),
    };
    let code = match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("energy-usage: {:#}", f.error);
            f.code
        }
    };
    ExitCode::from(code.clamp(0, 255) as u8)
}
