//! Sampling loop: read every package domain at a fixed cadence and turn
//! consecutive rounds into power samples.

use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use super::gpu::GpuSource;
use super::{
    samples_from_rounds, CounterRound, DomainId, EnergyCounterReading, MeterConfig, MeterError,
    PowerSample,
};

/// A source of cumulative energy counters.
pub trait Meter: Send {
    fn domains(&self) -> &[DomainId];
    fn read(&mut self, domain: &DomainId) -> Result<EnergyCounterReading, MeterError>;
}

/// Time base for the sampling cadence.
pub trait Clock: Send {
    fn now(&self) -> f64;
    fn sleep(&mut self, secs: f64);
}

pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }

    fn sleep(&mut self, secs: f64) {
        if secs > 0.0 {
            std::thread::sleep(Duration::from_secs_f64(secs));
        }
    }
}

pub enum StopWhen {
    /// Stop after this many seconds on the session clock.
    After(f64),
    /// Stop when a message arrives or the sender is dropped. Waiting happens
    /// in real time, so pair this with a real-time clock.
    Signal(Receiver<()>),
}

pub enum Phase {
    /// Idle sampling for `baseline_duration_s`.
    Baseline,
    /// Sampling while the measured process runs.
    Process(StopWhen),
}

pub struct SamplingSession {
    meter: Box<dyn Meter>,
    clock: Box<dyn Clock>,
    gpu: Option<Box<dyn GpuSource>>,
    config: MeterConfig,
}

impl SamplingSession {
    pub fn new(
        meter: Box<dyn Meter>,
        clock: Box<dyn Clock>,
        gpu: Option<Box<dyn GpuSource>>,
        config: MeterConfig,
    ) -> Result<Self, MeterError> {
        config.validate()?;
        if meter.domains().is_empty() {
            return Err(MeterError::NoPowercapInterface {
                root: "<meter without package domains>".into(),
            });
        }
        let gpu = if config.gpu_enabled { gpu } else { None };
        Ok(SamplingSession {
            meter,
            clock,
            gpu,
            config,
        })
    }

    pub fn config(&self) -> &MeterConfig {
        &self.config
    }

    fn read_round(&mut self) -> Result<CounterRound, MeterError> {
        let domains = self.meter.domains().to_vec();
        let mut readings = Vec::with_capacity(domains.len());
        for d in &domains {
            readings.push(self.meter.read(d)?);
        }
        let gpu_watts = self.gpu.as_mut().and_then(|g| g.power_watts());
        Ok(CounterRound {
            readings,
            gpu_watts,
        })
    }

    /// Run one phase. The first round must read cleanly; a failed read later
    /// in the phase skips that round and the next pair spans the gap.
    pub fn run(&mut self, phase: Phase) -> Result<Vec<PowerSample>, MeterError> {
        let stop = match phase {
            Phase::Baseline => StopWhen::After(self.config.baseline_duration_s),
            Phase::Process(stop) => stop,
        };
        if let StopWhen::After(d) = stop {
            if d <= 0.0 {
                return Ok(Vec::new());
            }
        }
        let interval = self.config.sample_interval_s;
        let mut rounds = vec![self.read_round()?];
        let start = self.clock.now();
        loop {
            match &stop {
                StopWhen::After(d) => {
                    let remaining = d - (self.clock.now() - start);
                    if remaining <= 1e-9 {
                        break;
                    }
                    self.clock.sleep(remaining.min(interval));
                }
                StopWhen::Signal(rx) => match rx.recv_timeout(Duration::from_secs_f64(interval)) {
                    Err(RecvTimeoutError::Timeout) => {}
                    Ok(()) | Err(RecvTimeoutError::Disconnected) => {
                        if let Ok(r) = self.read_round() {
                            rounds.push(r);
                        }
                        break;
                    }
                },
            }
            if let Ok(r) = self.read_round() {
                rounds.push(r);
            }
        }
        Ok(samples_from_rounds(&rounds))
    }
}

/// One-shot form of [`SamplingSession::run`].
pub fn run_sampling_session(
    meter: Box<dyn Meter>,
    clock: Box<dyn Clock>,
    gpu: Option<Box<dyn GpuSource>>,
    config: MeterConfig,
    phase: Phase,
) -> Result<Vec<PowerSample>, MeterError> {
    SamplingSession::new(meter, clock, gpu, config)?.run(phase)
}
