//! NVIDIA GPU power via `nvidia-smi`. GPU support is additive: any failure
//! simply means no GPU sample.

use std::path::PathBuf;
use std::process::{Command, Stdio};

use super::{PowerSample, PowerSource};

pub const NVIDIA_SMI: &str = "nvidia-smi";
pub const QUERY_ARGS: [&str; 2] = ["--query-gpu=power.draw", "--format=csv,noheader,nounits"];

pub trait GpuSource: Send {
    /// Instantaneous draw in watts summed over GPUs, if available.
    fn power_watts(&mut self) -> Option<f64>;
}

/// Sum the one-value-per-GPU output. Any unparsable line (e.g. `[N/A]`)
/// voids the whole reading.
pub fn parse_power_draw(stdout: &str) -> Option<f64> {
    let mut total = 0.0;
    let mut any = false;
    for line in stdout.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let w: f64 = line.parse().ok()?;
        if !w.is_finite() || w < 0.0 {
            return None;
        }
        total += w;
        any = true;
    }
    any.then_some(total)
}

#[derive(Debug, Clone)]
pub struct GpuProbe {
    program: PathBuf,
}

impl Default for GpuProbe {
    fn default() -> Self {
        GpuProbe {
            program: PathBuf::from(NVIDIA_SMI),
        }
    }
}

impl GpuProbe {
    pub fn with_program(program: impl Into<PathBuf>) -> Self {
        GpuProbe {
            program: program.into(),
        }
    }

    pub fn read(&self) -> Option<f64> {
        let out = Command::new(&self.program)
            .args(QUERY_ARGS)
            .stdin(Stdio::null())
            .stderr(Stdio::null())
            .output()
            .ok()?;
        if !out.status.success() {
            return None;
        }
        parse_power_draw(&String::from_utf8_lossy(&out.stdout))
    }

    pub fn read_sample(&self, interval_s: f64) -> Option<PowerSample> {
        self.read().map(|watts| PowerSample {
            watts,
            interval_s,
            source: PowerSource::Gpu,
        })
    }
}

impl GpuSource for GpuProbe {
    fn power_watts(&mut self) -> Option<f64> {
        self.read()
    }
}

/// GPU sample from `nvidia-smi` on `PATH`, or `None` when there is no GPU.
pub fn read_gpu_power() -> Option<PowerSample> {
    GpuProbe::default().read_sample(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_and_multi_gpu_output() {
        assert_eq!(parse_power_draw("41.73\n"), Some(41.73));
        assert_eq!(parse_power_draw("10.5\n20.25\n"), Some(30.75));
    }

    #[test]
    fn garbage_is_absent() {
        assert_eq!(parse_power_draw("[N/A]\n"), None);
        assert_eq!(parse_power_draw("NVIDIA-SMI has failed\n"), None);
        assert_eq!(parse_power_draw(""), None);
        assert_eq!(parse_power_draw("-3\n"), None);
    }

    #[test]
    fn missing_program_is_absent() {
        let probe = GpuProbe::with_program("/nonexistent/nvidia-smi");
        assert_eq!(probe.read(), None);
    }
}
