//! Linux powercap (`intel-rapl`) counters. Reading these files needs no
//! elevated privileges on most distributions.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::{DomainId, EnergyCounterReading, Meter, MeterError};

pub const DEFAULT_POWERCAP_ROOT: &str = "/sys/class/powercap/intel-rapl";
const FLAT_POWERCAP_ROOT: &str = "/sys/class/powercap";

/// Top-level zones are named `intel-rapl:<N>`; `intel-rapl:<N>:<M>`
/// sub-zones (core, uncore, dram) are skipped.
fn zone_index(name: &str) -> Option<u32> {
    let rest = name.strip_prefix("intel-rapl:")?;
    rest.parse().ok()
}

fn package_zones_in(root: &Path) -> Vec<(u32, PathBuf)> {
    let Ok(entries) = fs::read_dir(root) else {
        return Vec::new();
    };
    let mut zones: Vec<(u32, PathBuf)> = entries
        .filter_map(Result::ok)
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            let index = zone_index(&name)?;
            let path = e.path();
            let zone_name = fs::read_to_string(path.join("name")).ok()?;
            zone_name
                .trim()
                .starts_with("package-")
                .then_some((index, path))
        })
        .collect();
    zones.sort();
    zones
}

/// Package domains under `root`, ordered by zone index.
pub fn enumerate_package_domains_in(root: &Path) -> Result<Vec<(DomainId, PathBuf)>, MeterError> {
    let zones = package_zones_in(root);
    if zones.is_empty() {
        return Err(MeterError::NoPowercapInterface {
            root: root.to_path_buf(),
        });
    }
    Ok(zones
        .into_iter()
        .map(|(i, path)| (DomainId(format!("intel-rapl:{i}")), path))
        .collect())
}

/// Package domains on this host. Newer kernels also expose the zones flat
/// under `/sys/class/powercap`, which is tried second.
pub fn enumerate_package_domains() -> Result<Vec<DomainId>, MeterError> {
    discover().map(|d| d.into_iter().map(|(id, _)| id).collect())
}

fn discover() -> Result<Vec<(DomainId, PathBuf)>, MeterError> {
    enumerate_package_domains_in(Path::new(DEFAULT_POWERCAP_ROOT))
        .or_else(|_| enumerate_package_domains_in(Path::new(FLAT_POWERCAP_ROOT)))
        .map_err(|_| MeterError::NoPowercapInterface {
            root: PathBuf::from(DEFAULT_POWERCAP_ROOT),
        })
}

fn read_u64(path: &Path) -> Result<u64, MeterError> {
    let content = fs::read_to_string(path).map_err(|source| MeterError::ReadFailure {
        path: path.to_path_buf(),
        source,
    })?;
    content
        .trim()
        .parse()
        .map_err(|_| MeterError::CounterParse {
            path: path.to_path_buf(),
            content,
        })
}

/// Read one zone directory. `timestamp_s` is taken after the read.
pub fn read_counter(
    domain: &DomainId,
    zone_dir: &Path,
    timestamp_s: impl FnOnce() -> f64,
) -> Result<EnergyCounterReading, MeterError> {
    let energy_uj = read_u64(&zone_dir.join("energy_uj"))?;
    let max_range_uj = read_u64(&zone_dir.join("max_energy_range_uj"))?;
    Ok(EnergyCounterReading {
        domain: domain.clone(),
        energy_uj,
        max_range_uj,
        timestamp_s: timestamp_s(),
    })
}

pub struct PowercapMeter {
    zones: Vec<(DomainId, PathBuf)>,
    ids: Vec<DomainId>,
    origin: Instant,
}

impl PowercapMeter {
    pub fn discover() -> Result<Self, MeterError> {
        Ok(Self::from_zones(discover()?))
    }

    pub fn with_root(root: &Path) -> Result<Self, MeterError> {
        Ok(Self::from_zones(enumerate_package_domains_in(root)?))
    }

    fn from_zones(zones: Vec<(DomainId, PathBuf)>) -> Self {
        let ids = zones.iter().map(|(id, _)| id.clone()).collect();
        PowercapMeter {
            zones,
            ids,
            origin: Instant::now(),
        }
    }
}

impl Meter for PowercapMeter {
    fn domains(&self) -> &[DomainId] {
        &self.ids
    }

    fn read(&mut self, domain: &DomainId) -> Result<EnergyCounterReading, MeterError> {
        let (_, dir) = self
            .zones
            .iter()
            .find(|(id, _)| id == domain)
            .ok_or_else(|| MeterError::NoPowercapInterface {
                root: PathBuf::from(domain.as_str()),
            })?;
        let origin = self.origin;
        read_counter(domain, dir, || origin.elapsed().as_secs_f64())
    }
}
