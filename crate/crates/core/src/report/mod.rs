//! The Energy Usage Report: a structured document assembled from one
//! measurement, and its text, JSON and HTML renderings.

use serde::{Deserialize, Serialize};

use crate::emissions::{
    comparison_sets, emissions_for_energy, equivalents, Comparisons, EquivalencyFactors,
    Equivalents,
};
use crate::grid::{DatasetSnapshot, EnergyMix, FuelIntensities};
use crate::locate::LocationResolution;
use crate::meter::MeasurementSummary;

pub mod format;
mod html;
mod json;
mod text;

pub use html::render_html;
pub use json::{parse_json, render_json};
pub use text::render_text;

pub const SCHEMA_VERSION: &str = "1";
pub const TOOL_NAME: &str = "energy-usage";

/// What was measured: the command line, and how it ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub command: String,
    pub args: Vec<String>,
    pub exit_code: Option<i32>,
    pub interrupted: bool,
}

impl ReportHeader {
    pub fn new(command: impl Into<String>, args: Vec<String>) -> Self {
        ReportHeader {
            command: command.into(),
            args,
            exit_code: None,
            interrupted: false,
        }
    }

    pub fn command_line(&self) -> String {
        std::iter::once(self.command.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixSection {
    pub region_id: String,
    pub region_name: String,
    pub mix: EnergyMix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummarySection {
    /// Wall-side energy, kWh.
    pub kwh: f64,
    pub kg_co2: f64,
    pub intensity_kg_per_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_at: String,
    pub finished_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub tool_version: String,
    pub header: ReportHeader,
    pub readings: MeasurementSummary,
    pub mix: MixSection,
    pub summary: SummarySection,
    pub assumptions: FuelIntensities,
    pub equivalency_factors: EquivalencyFactors,
    pub equivalents: Equivalents,
    pub comparisons: Comparisons,
    pub resolution: LocationResolution,
    pub timestamps: Timestamps,
}

pub fn build_report(
    header: ReportHeader,
    readings: MeasurementSummary,
    resolution: LocationResolution,
    snapshot: &DatasetSnapshot,
    factors: &EquivalencyFactors,
    timestamps: Timestamps,
) -> ReportDocument {
    let kwh = readings.adjusted_kwh;
    let local = emissions_for_energy(kwh, &resolution.region, &snapshot.intensities);
    ReportDocument {
        schema_version: SCHEMA_VERSION.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        header,
        readings,
        mix: MixSection {
            region_id: resolution.region.id.clone(),
            region_name: resolution.region.display_name.clone(),
            mix: resolution.region.mix,
        },
        summary: SummarySection {
            kwh,
            kg_co2: local.kg_co2,
            intensity_kg_per_kwh: local.intensity_kg_per_kwh,
        },
        assumptions: snapshot.intensities,
        equivalency_factors: *factors,
        equivalents: equivalents(local.kg_co2, factors),
        comparisons: comparison_sets(kwh, snapshot, &resolution.region),
        resolution,
        timestamps,
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::locate::ResolutionMethod;

    /// The wattages and duration of the published example report, priced
    /// in Wyoming.
    pub fn worked_example(method: ResolutionMethod, region_key: &str) -> ReportDocument {
        let snap = DatasetSnapshot::embedded();
        let readings = MeasurementSummary::from_averages(2.35, 15.53, 1000.0, 0.8).unwrap();
        let resolution = LocationResolution {
            region: snap.lookup_region(region_key).unwrap().clone(),
            method,
            detail: "fixture".into(),
        };
        build_report(
            ReportHeader::new("exp", vec!["10".into()]),
            readings,
            resolution,
            &snap,
            &EquivalencyFactors::default(),
            Timestamps {
                started_at: "2019-07-01T12:00:00Z".into(),
                finished_at: "2019-07-01T12:16:40Z".into(),
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::worked_example;
    use super::*;
    use crate::locate::ResolutionMethod;

    #[test]
    fn readings_block_carries_measurement() {
        let doc = worked_example(ResolutionMethod::ExplicitFlag, "wyoming");
        assert_eq!(doc.readings.baseline_watts, 2.35);
        assert_eq!(doc.readings.total_watts, 15.53);
        assert!((doc.readings.process_watts - 13.18).abs() < 1e-9);
        assert_eq!(doc.readings.duration_s, 1000.0);
        assert_eq!(doc.assumptions.coal, 996.0);
        assert_eq!(doc.comparisons.sets.len(), 3);
    }

    #[test]
    fn summary_is_consistent_with_readings() {
        let doc = worked_example(ResolutionMethod::ExplicitFlag, "wyoming");
        let recomputed = doc.readings.adjusted_kwh
            * crate::emissions::effective_intensity(&doc.resolution.region, &doc.assumptions);
        assert!((doc.summary.kg_co2 - recomputed).abs() <= 1e-9 * recomputed.abs());
        assert_eq!(doc.summary.kwh, doc.readings.adjusted_kwh);
    }

    #[test]
    fn zero_energy_keeps_structure() {
        let snap = DatasetSnapshot::embedded();
        let readings = MeasurementSummary::from_averages(5.0, 5.0, 10.0, 0.8).unwrap();
        let resolution = LocationResolution {
            region: snap.lookup_region("world-average").unwrap().clone(),
            method: ResolutionMethod::DefaultFallback,
            detail: String::new(),
        };
        let doc = build_report(
            ReportHeader::new("true", vec![]),
            readings,
            resolution,
            &snap,
            &EquivalencyFactors::default(),
            Timestamps::default(),
        );
        assert_eq!(doc.summary.kwh, 0.0);
        assert_eq!(doc.summary.kg_co2, 0.0);
        assert_eq!(doc.equivalents.miles, 0.0);
        assert_eq!(doc.comparisons.sets.len(), 3);
        assert!(doc
            .comparisons
            .sets
            .iter()
            .all(|s| s.entries.len() == 3 && s.entries.iter().all(|e| e.kg_co2 == 0.0)));
    }
}
