use std::io::Write;

use anyhow::anyhow;
use energy_usage_core::grid::{DatasetSnapshot, RegionGroup, RegionRecord};

use crate::args::RegionsArgs;
use crate::measure::load_snapshot;
use crate::Failure;

fn line(snapshot: &DatasetSnapshot, r: &RegionRecord) -> String {
    let m = &r.mix;
    format!(
        "{:<28} {:<34} coal {:>5.1}%  oil {:>5.1}%  gas {:>5.1}%  low-carbon {:>5.1}%  {:.4} kg CO2/kWh",
        r.id,
        r.display_name,
        m.coal * 100.0,
        m.oil * 100.0,
        m.natural_gas * 100.0,
        m.low_carbon * 100.0,
        snapshot.effective_intensity(r)
    )
}

pub fn cmd_regions(args: RegionsArgs) -> Result<i32, Failure> {
    let snapshot = load_snapshot(&args.data)?;
    let mut out = std::io::stdout().lock();
    let mut write = |s: String| writeln!(out, "{s}").map_err(Failure::internal);
    match args.extremes {
        None => {
            for r in snapshot.regions() {
                write(line(&snapshot, r))?;
            }
        }
        Some(key) => {
            let group: RegionGroup = key.parse().map_err(|e: String| Failure::env(anyhow!(e)))?;
            let e = snapshot.region_extremes(group).map_err(Failure::env)?;
            for (rank, r) in ["lowest", "median", "highest"].iter().zip(e.as_array()) {
                write(format!("{rank:<8} {}", line(&snapshot, r)))?;
            }
        }
    }
    Ok(0)
}
