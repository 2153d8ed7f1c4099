//! Deterministic meter driven by a virtual clock, for hosts without RAPL and
//! for tests that need exact energy totals.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::session::{Clock, Meter};
use super::{DomainId, EnergyCounterReading, MeterError, MICROJOULES_PER_JOULE};

/// Shared virtual time in seconds. Sleeping advances it instantly.
#[derive(Debug, Clone, Default)]
pub struct VirtualClock {
    bits: Arc<AtomicU64>,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&self, secs: f64) {
        self.bits.store(secs.to_bits(), Ordering::SeqCst);
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> f64 {
        f64::from_bits(self.bits.load(Ordering::SeqCst))
    }

    fn sleep(&mut self, secs: f64) {
        if secs > 0.0 {
            self.set(self.now() + secs);
        }
    }
}

/// Piecewise-constant power: `(end_s, watts)` segments in increasing order.
/// Power after the last segment's end is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    segments: Vec<(f64, f64)>,
}

impl PowerProfile {
    pub fn constant(watts: f64) -> Self {
        PowerProfile {
            segments: vec![(f64::INFINITY, watts)],
        }
    }

    pub fn piecewise(segments: Vec<(f64, f64)>) -> Self {
        debug_assert!(segments.windows(2).all(|w| w[0].0 < w[1].0));
        PowerProfile { segments }
    }

    /// Energy in joules delivered over `[0, t]`.
    pub fn energy_j(&self, t: f64) -> f64 {
        let mut start = 0.0;
        let mut total = 0.0;
        for &(end, watts) in &self.segments {
            if t <= start {
                break;
            }
            total += watts * (t.min(end) - start);
            start = end;
        }
        total
    }
}

pub struct SyntheticMeter {
    domains: Vec<DomainId>,
    profiles: Vec<PowerProfile>,
    max_range_uj: u64,
    clock: VirtualClock,
}

impl SyntheticMeter {
    pub fn new(profiles: Vec<PowerProfile>, max_range_uj: u64, clock: VirtualClock) -> Self {
        let domains = (0..profiles.len())
            .map(|i| DomainId(format!("intel-rapl:{i}")))
            .collect();
        SyntheticMeter {
            domains,
            profiles,
            max_range_uj,
            clock,
        }
    }

    pub fn constant(watts: &[f64], max_range_uj: u64, clock: VirtualClock) -> Self {
        Self::new(
            watts.iter().map(|&w| PowerProfile::constant(w)).collect(),
            max_range_uj,
            clock,
        )
    }
}

impl Meter for SyntheticMeter {
    fn domains(&self) -> &[DomainId] {
        &self.domains
    }

    fn read(&mut self, domain: &DomainId) -> Result<EnergyCounterReading, MeterError> {
        let i = self
            .domains
            .iter()
            .position(|d| d == domain)
            .ok_or_else(|| MeterError::InvalidConfig(format!("unknown domain {domain}")))?;
        let t = self.clock.now();
        let total_uj = (self.profiles[i].energy_j(t) * MICROJOULES_PER_JOULE).round() as u64;
        let energy_uj = match self.max_range_uj.checked_add(1) {
            Some(modulus) => total_uj % modulus,
            None => total_uj,
        };
        Ok(EnergyCounterReading {
            domain: domain.clone(),
            energy_uj,
            max_range_uj: self.max_range_uj,
            timestamp_s: t,
        })
    }
}
