//! CPU package energy metering.
//!
//! Power is derived from pairs of cumulative RAPL counter readings: the
//! energy delta divided by the time between them. A negative delta means
//! the counter wrapped and that pair is discarded.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod gpu;
pub mod powercap;
pub mod session;
pub mod synthetic;
pub mod trace;

pub use gpu::{read_gpu_power, GpuProbe, GpuSource};
pub use powercap::{enumerate_package_domains, read_counter, PowercapMeter};
pub use session::{
    run_sampling_session, Clock, Meter, Phase, SamplingSession, StopWhen, SystemClock,
};
pub use synthetic::{SyntheticMeter, VirtualClock};
pub use trace::TraceRecording;

pub const MICROJOULES_PER_JOULE: f64 = 1e6;
pub const JOULES_PER_KWH: f64 = 3.6e6;

#[derive(Debug, Error)]
pub enum MeterError {
    #[error("no RAPL powercap package domains under {}", root.display())]
    NoPowercapInterface { root: PathBuf },
    #[error("cannot read {}: {source}", path.display())]
    ReadFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unexpected counter contents in {}: {content:?}", path.display())]
    CounterParse { path: PathBuf, content: String },
    #[error("no power samples were collected while the process ran")]
    EmptyProcessSamples,
    #[error("process duration must be positive, got {0} s")]
    InvalidDuration(f64),
    #[error("invalid meter configuration: {0}")]
    InvalidConfig(String),
    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },
}

/// Identifier of a RAPL package domain, e.g. `intel-rapl:0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DomainId(pub String);

impl DomainId {
    pub fn new(id: impl Into<String>) -> Self {
        DomainId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for DomainId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// One cumulative counter sample. `timestamp_s` is seconds on the session's
/// monotonic clock.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCounterReading {
    pub domain: DomainId,
    pub energy_uj: u64,
    pub max_range_uj: u64,
    pub timestamp_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerSource {
    Cpu,
    Gpu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    pub watts: f64,
    pub interval_s: f64,
    pub source: PowerSource,
}

/// Average power between two readings of the same domain, or `None` when
/// the pair must be discarded (counter wrapped, or no time elapsed).
pub fn power_from_readings(
    first: &EnergyCounterReading,
    second: &EnergyCounterReading,
) -> Option<PowerSample> {
    debug_assert_eq!(first.domain, second.domain);
    let dt = second.timestamp_s - first.timestamp_s;
    if second.energy_uj < first.energy_uj || dt <= 0.0 {
        return None;
    }
    let joules = (second.energy_uj - first.energy_uj) as f64 / MICROJOULES_PER_JOULE;
    Some(PowerSample {
        watts: joules / dt,
        interval_s: dt,
        source: PowerSource::Cpu,
    })
}

/// Readings of every package domain taken at one sampling instant, plus the
/// GPU draw polled at the same instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterRound {
    pub readings: Vec<EnergyCounterReading>,
    pub gpu_watts: Option<f64>,
}

/// Convert consecutive rounds into per-instant samples: one CPU sample
/// summed over domains, followed by a GPU sample when one was polled.
///
/// If any domain's pair is discarded the whole instant is dropped, so an
/// instant never reports a partial sum.
pub fn samples_from_rounds(rounds: &[CounterRound]) -> Vec<PowerSample> {
    let mut out = Vec::with_capacity(rounds.len());
    for pair in rounds.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        if prev.readings.len() != next.readings.len() || next.readings.is_empty() {
            continue;
        }
        let mut watts = 0.0;
        let mut interval = 0.0;
        let mut discarded = false;
        for (a, b) in prev.readings.iter().zip(&next.readings) {
            match power_from_readings(a, b) {
                Some(s) => {
                    watts += s.watts;
                    interval = s.interval_s;
                }
                None => {
                    discarded = true;
                    break;
                }
            }
        }
        if discarded {
            continue;
        }
        out.push(PowerSample {
            watts,
            interval_s: interval,
            source: PowerSource::Cpu,
        });
        if let Some(gpu) = next.gpu_watts {
            out.push(PowerSample {
                watts: gpu,
                interval_s: interval,
                source: PowerSource::Gpu,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeterConfig {
    pub sample_interval_s: f64,
    pub psu_efficiency: f64,
    pub baseline_duration_s: f64,
    pub gpu_enabled: bool,
}

pub const MIN_SAMPLE_INTERVAL_S: f64 = 0.01;

impl Default for MeterConfig {
    fn default() -> Self {
        MeterConfig {
            sample_interval_s: 0.1,
            psu_efficiency: 0.8,
            baseline_duration_s: 5.0,
            gpu_enabled: false,
        }
    }
}

impl MeterConfig {
    pub fn validate(&self) -> Result<(), MeterError> {
        if !(self.psu_efficiency > 0.0 && self.psu_efficiency <= 1.0) {
            return Err(MeterError::InvalidConfig(format!(
                "PSU efficiency must be in (0, 1], got {}",
                self.psu_efficiency
            )));
        }
        if !(self.sample_interval_s.is_finite() && self.sample_interval_s >= MIN_SAMPLE_INTERVAL_S)
        {
            return Err(MeterError::InvalidConfig(format!(
                "sample interval must be at least {MIN_SAMPLE_INTERVAL_S} s, got {}",
                self.sample_interval_s
            )));
        }
        if !(self.baseline_duration_s.is_finite() && self.baseline_duration_s >= 0.0) {
            return Err(MeterError::InvalidConfig(format!(
                "baseline duration must be non-negative, got {}",
                self.baseline_duration_s
            )));
        }
        Ok(())
    }
}

/// Readings for one measured process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSummary {
    pub baseline_watts: f64,
    pub total_watts: f64,
    /// `total_watts - baseline_watts`, floored at 0.
    pub process_watts: f64,
    pub duration_s: f64,
    /// Energy attributed to the process at the counter, kWh.
    pub measured_kwh: f64,
    /// Wall-side energy: `measured_kwh / psu_efficiency`.
    pub adjusted_kwh: f64,
    pub psu_efficiency: f64,
    /// Set when baseline exceeded total and the process wattage was clamped.
    pub clamped: bool,
}

impl MeasurementSummary {
    pub fn from_averages(
        baseline_watts: f64,
        total_watts: f64,
        duration_s: f64,
        psu_efficiency: f64,
    ) -> Result<Self, MeterError> {
        if !(duration_s.is_finite() && duration_s > 0.0) {
            return Err(MeterError::InvalidDuration(duration_s));
        }
        if !(psu_efficiency > 0.0 && psu_efficiency <= 1.0) {
            return Err(MeterError::InvalidConfig(format!(
                "PSU efficiency must be in (0, 1], got {psu_efficiency}"
            )));
        }
        let raw = total_watts - baseline_watts;
        let process_watts = raw.max(0.0);
        let measured_kwh = process_watts * duration_s / JOULES_PER_KWH;
        Ok(MeasurementSummary {
            baseline_watts,
            total_watts,
            process_watts,
            duration_s,
            measured_kwh,
            adjusted_kwh: measured_kwh / psu_efficiency,
            psu_efficiency,
            clamped: raw < 0.0,
        })
    }
}

/// Mean of per-instant power: every GPU sample is added to the CPU sample of
/// its instant, so the divisor is the number of CPU samples.
fn mean_instant_watts(samples: &[PowerSample]) -> Option<f64> {
    let instants = samples
        .iter()
        .filter(|s| s.source == PowerSource::Cpu)
        .count();
    if instants == 0 {
        return None;
    }
    Some(samples.iter().map(|s| s.watts).sum::<f64>() / instants as f64)
}

pub fn summarize(
    baseline: &[PowerSample],
    process: &[PowerSample],
    duration_s: f64,
    config: &MeterConfig,
) -> Result<MeasurementSummary, MeterError> {
    let total_watts = mean_instant_watts(process).ok_or(MeterError::EmptyProcessSamples)?;
    let baseline_watts = mean_instant_watts(baseline).unwrap_or(0.0);
    MeasurementSummary::from_averages(
        baseline_watts,
        total_watts,
        duration_s,
        config.psu_efficiency,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reading(energy_uj: u64, t: f64) -> EnergyCounterReading {
        EnergyCounterReading {
            domain: DomainId::new("intel-rapl:0"),
            energy_uj,
            max_range_uj: 262_143_328_850,
            timestamp_s: t,
        }
    }

    fn cpu(watts: f64) -> PowerSample {
        PowerSample {
            watts,
            interval_s: 0.1,
            source: PowerSource::Cpu,
        }
    }

    #[test]
    fn two_joules_over_one_second() {
        let s = power_from_readings(&reading(1_000_000, 0.0), &reading(3_000_000, 1.0)).unwrap();
        assert_eq!(s.watts, 2.0);
        assert_eq!(s.interval_s, 1.0);
    }

    #[test]
    fn wrapped_counter_is_discarded() {
        assert_eq!(
            power_from_readings(&reading(900, 0.0), &reading(100, 0.1)),
            None
        );
    }

    #[test]
    fn zero_delta_is_idle() {
        let s = power_from_readings(&reading(5_000_000, 0.0), &reading(5_000_000, 0.1)).unwrap();
        assert_eq!(s.watts, 0.0);
    }

    #[test]
    fn worked_example_readings() {
        let s = MeasurementSummary::from_averages(2.35, 15.53, 1000.0, 0.8).unwrap();
        assert!((s.process_watts - 13.18).abs() < 1e-9);
        assert!((s.measured_kwh - 0.00366).abs() <= 0.00002);
        assert!((s.measured_kwh - 0.00367).abs() <= 0.00002);
    }

    #[test]
    fn psu_adjustment_divides_by_efficiency() {
        // 0.8 kWh measured: 2880 W for 1000 s.
        let s = MeasurementSummary::from_averages(0.0, 2880.0, 1000.0, 0.8).unwrap();
        assert!((s.measured_kwh - 0.8).abs() < 1e-12);
        assert!((s.adjusted_kwh - 1.0).abs() < 1e-12);
        let ident = MeasurementSummary::from_averages(0.0, 2880.0, 1000.0, 1.0).unwrap();
        assert_eq!(ident.adjusted_kwh, ident.measured_kwh);
    }

    #[test]
    fn summarize_means_and_clamp() {
        let cfg = MeterConfig::default();
        let s = summarize(&[cpu(2.0), cpu(4.0)], &[cpu(10.0), cpu(14.0)], 10.0, &cfg).unwrap();
        assert_eq!(s.baseline_watts, 3.0);
        assert_eq!(s.total_watts, 12.0);
        assert_eq!(s.process_watts, 9.0);
        assert!(!s.clamped);

        let noisy = summarize(&[cpu(5.0)], &[cpu(4.0)], 1.0, &cfg).unwrap();
        assert_eq!(noisy.process_watts, 0.0);
        assert!(noisy.clamped);
        assert_eq!(noisy.measured_kwh, 0.0);
    }

    #[test]
    fn gpu_samples_add_to_their_instant() {
        let gpu = PowerSample {
            watts: 40.0,
            interval_s: 0.1,
            source: PowerSource::Gpu,
        };
        let s = summarize(
            &[],
            &[cpu(10.0), gpu, cpu(12.0), gpu],
            1.0,
            &MeterConfig::default(),
        )
        .unwrap();
        assert_eq!(s.total_watts, 51.0);
        assert_eq!(s.baseline_watts, 0.0);
    }

    #[test]
    fn empty_process_or_bad_duration_fails() {
        let cfg = MeterConfig::default();
        assert!(matches!(
            summarize(&[cpu(1.0)], &[], 1.0, &cfg),
            Err(MeterError::EmptyProcessSamples)
        ));
        assert!(matches!(
            summarize(&[], &[cpu(1.0)], 0.0, &cfg),
            Err(MeterError::InvalidDuration(_))
        ));
    }

    #[test]
    fn config_bounds() {
        assert!(MeterConfig::default().validate().is_ok());
        for bad in [
            MeterConfig {
                psu_efficiency: 0.0,
                ..Default::default()
            },
            MeterConfig {
                psu_efficiency: 1.2,
                ..Default::default()
            },
            MeterConfig {
                sample_interval_s: 0.001,
                ..Default::default()
            },
            MeterConfig {
                baseline_duration_s: -1.0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn rounds_drop_whole_instant_on_any_wrap() {
        let round = |e0: u64, e1: u64, t: f64| CounterRound {
            readings: vec![
                EnergyCounterReading {
                    domain: DomainId::new("intel-rapl:0"),
                    energy_uj: e0,
                    max_range_uj: u64::MAX,
                    timestamp_s: t,
                },
                EnergyCounterReading {
                    domain: DomainId::new("intel-rapl:1"),
                    energy_uj: e1,
                    max_range_uj: u64::MAX,
                    timestamp_s: t,
                },
            ],
            gpu_watts: Some(5.0),
        };
        let rounds = [
            round(0, 0, 0.0),
            round(1_000_000, 1_000_000, 1.0),
            round(2_000_000, 10, 2.0),
            round(3_000_000, 1_000_010, 3.0),
        ];
        let samples = samples_from_rounds(&rounds);
        let cpu: Vec<f64> = samples
            .iter()
            .filter(|s| s.source == PowerSource::Cpu)
            .map(|s| s.watts)
            .collect();
        assert_eq!(cpu, [2.0, 2.0]);
        assert_eq!(samples.len(), 4);
    }
}
