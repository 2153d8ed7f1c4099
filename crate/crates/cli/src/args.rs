use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use energy_usage_core::bench::{Shape, DEFAULT_UNIT_OPS};
use energy_usage_core::locate::{DefaultRegion, DEFAULT_GEO_ENDPOINT, DEFAULT_GEO_TIMEOUT_S};
use energy_usage_core::meter::MeterConfig;

#[derive(Debug, Parser)]
#[command(
    name = "energy-usage",
    version,
    about = "Measure the energy a command uses and the CO2 it emits on the local grid"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a command under measurement and report its energy and emissions.
    Run(RunArgs),
    /// List regions in the dataset snapshot, or one group's extremes.
    Regions(RegionsArgs),
    /// Run a synthetic workload under measurement.
    Bench(BenchArgs),
    /// The workload itself; spawned by `bench`.
    #[command(name = "__workload", hide = true)]
    Workload {
        shape: Shape,
        n: u64,
        #[arg(long, default_value_t = DEFAULT_UNIT_OPS)]
        unit_ops: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Html,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportTo {
    Stderr,
    Stdout,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Replacement US state CSV.
    #[arg(long, value_name = "PATH")]
    pub us_data: Option<PathBuf>,
    /// Replacement international CSV.
    #[arg(long, value_name = "PATH")]
    pub intl_data: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report to this file instead of a terminal stream.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Stream for the report when --out is not given.
    #[arg(long, value_enum, default_value_t = ReportTo::Stderr)]
    pub report_to: ReportTo,
    /// Power supply efficiency in (0, 1].
    #[arg(long, default_value_t = MeterConfig::default().psu_efficiency)]
    pub efficiency: f64,
    /// Seconds between counter reads.
    #[arg(long, default_value_t = MeterConfig::default().sample_interval_s)]
    pub sample_interval: f64,
    /// Seconds of idle sampling before the command starts.
    #[arg(long, default_value_t = MeterConfig::default().baseline_duration_s)]
    pub baseline_duration: f64,
    /// Skip the idle baseline; all measured power is attributed to the command.
    #[arg(long)]
    pub no_baseline: bool,
    /// Do not poll nvidia-smi.
    #[arg(long)]
    pub no_gpu: bool,
    /// Take readings from a recorded counter trace instead of the hardware.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Region id or name, e.g. `us-wy`, `Wyoming`, `de`.
    #[arg(long)]
    pub location: Option<String>,
    /// Region used when the location cannot be determined.
    #[arg(long, default_value = "world")]
    pub default_region: DefaultRegion,
    /// Never contact the geolocation service.
    #[arg(long)]
    pub offline: bool,
    #[arg(long, default_value = DEFAULT_GEO_ENDPOINT)]
    pub geo_endpoint: String,
    /// Geolocation timeout in seconds.
    #[arg(long, default_value_t = DEFAULT_GEO_TIMEOUT_S)]
    pub geo_timeout: f64,
    #[command(flatten)]
    pub data: DataArgs,
    /// Replacement equivalency constants CSV.
    #[arg(long, value_name = "PATH")]
    pub equivalencies: Option<PathBuf>,
}

impl MeasureArgs {
    pub fn meter_config(&self) -> MeterConfig {
        MeterConfig {
            sample_interval_s: self.sample_interval,
            psu_efficiency: self.efficiency,
            baseline_duration_s: if self.no_baseline {
                0.0
            } else {
                self.baseline_duration
            },
            gpu_enabled: !self.no_gpu,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// The command to measure, after `--`.
    #[arg(last = true, required = true, value_name = "COMMAND")]
    pub command: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RegionsArgs {
    /// Print the lowest, median and highest emitting region of a group
    /// (us, europe, global).
    #[arg(long, value_name = "GROUP")]
    pub extremes: Option<String>,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub shape: Shape,
    pub n: u64,
    /// Additions per unit of work.
    #[arg(long, default_value_t = DEFAULT_UNIT_OPS)]
    pub unit_ops: u64,
    #[command(flatten)]
    pub measure: MeasureArgs,
}
