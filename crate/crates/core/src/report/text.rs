use std::fmt::Write as _;

use super::format::{duration_hms, human, percent, sci, sig3};
use super::ReportDocument;
use crate::locate::ResolutionMethod;

pub(crate) fn method_label(method: ResolutionMethod) -> &'static str {
    match method {
        ResolutionMethod::ExplicitFlag => "--location flag",
        ResolutionMethod::EnvVar => "environment variable",
        ResolutionMethod::GeoIp => "IP geolocation",
        ResolutionMethod::DefaultFallback => "default",
    }
}

/// Note shown when no location source was available.
pub(crate) fn fallback_note(doc: &ReportDocument) -> Option<String> {
    (doc.resolution.method == ResolutionMethod::DefaultFallback).then(|| {
        let what = match doc.resolution.region.id.as_str() {
            "us-average" => "US average",
            "europe-average" => "Europe average",
            _ => "world average",
        };
        format!("location defaulted to {what}")
    })
}

pub(crate) const CLAMP_WARNING: &str =
    "baseline exceeded total power; process wattage clamped to 0";

/// Right-align labels to a common width so colons line up.
fn table(out: &mut String, rows: &[(&str, String)]) {
    let width = rows
        .iter()
        .map(|(l, _)| l.chars().count())
        .max()
        .unwrap_or(0);
    for (label, value) in rows {
        let pad = width - label.chars().count();
        let _ = writeln!(out, "  {}{label}: {value}", " ".repeat(pad));
    }
}

pub fn render_text(doc: &ReportDocument) -> String {
    let mut out = String::new();
    let r = &doc.readings;

    let _ = writeln!(out, "Energy Usage Report");
    let _ = writeln!(out, "===================");
    let _ = writeln!(out, "Command: {}", doc.header.command_line());
    if doc.header.interrupted {
        let _ = writeln!(out, "Interrupted: partial measurement");
    }
    if let Some(code) = doc.header.exit_code {
        let _ = writeln!(out, "Exit code: {code}");
    }
    let _ = writeln!(
        out,
        "Location: {} ({}) via {}",
        doc.mix.region_name,
        doc.mix.region_id,
        method_label(doc.resolution.method)
    );
    if let Some(note) = fallback_note(doc) {
        let _ = writeln!(out, "Note: {note}");
    }
    if r.clamped {
        let _ = writeln!(out, "Warning: {CLAMP_WARNING}");
    }

    let _ = writeln!(out, "\nEnergy Usage Readings");
    table(
        &mut out,
        &[
            (
                "Average baseline wattage",
                format!("{:.2} watts", r.baseline_watts),
            ),
            (
                "Average total wattage",
                format!("{:.2} watts", r.total_watts),
            ),
            (
                "Average process wattage",
                format!("{:.2} watts", r.process_watts),
            ),
            ("Process duration", duration_hms(r.duration_s)),
            ("Measured energy", format!("{} kWh", sig3(r.measured_kwh))),
            ("PSU efficiency", format!("{:.2}", r.psu_efficiency)),
        ],
    );

    let _ = writeln!(out, "\nEnergy Mix Data: {}", doc.mix.region_name);
    let m = &doc.mix.mix;
    table(
        &mut out,
        &[
            ("Coal", percent(m.coal)),
            ("Oil", percent(m.oil)),
            ("Natural gas", percent(m.natural_gas)),
            ("Low carbon", percent(m.low_carbon)),
        ],
    );

    let _ = writeln!(out, "\nSummary");
    table(
        &mut out,
        &[
            (
                "Total kilowatt hours used",
                format!("{} kWh", sig3(doc.summary.kwh)),
            ),
            (
                "Effective emissions",
                format!("{} kg CO2", sci(doc.summary.kg_co2)),
            ),
            (
                "Carbon intensity",
                format!("{:.3} kg CO2/kWh", doc.summary.intensity_kg_per_kwh),
            ),
        ],
    );

    let a = &doc.assumptions;
    let _ = writeln!(out, "\nAssumed Carbon Equivalencies");
    table(
        &mut out,
        &[
            ("Coal", format!("{} kg CO2/MWh", a.coal)),
            ("Oil", format!("{} kg CO2/MWh", a.oil)),
            ("Natural gas", format!("{} kg CO2/MWh", a.natural_gas)),
            ("Low carbon", format!("{} kg CO2/MWh", a.low_carbon)),
        ],
    );

    let e = &doc.equivalents;
    let _ = writeln!(out, "\nCO2 Emissions Equivalents");
    table(
        &mut out,
        &[
            ("Miles driven", format!("{} mi", human(e.miles))),
            (
                "Min. of 32-in. LCD TV",
                format!("{} min", human(e.tv_minutes)),
            ),
            (
                "% of CO2 per US house/day",
                format!("{}%", human(e.household_day_percent)),
            ),
        ],
    );

    let _ = writeln!(out, "\nEmission Comparisons");
    let _ = writeln!(
        out,
        "  CO2 emissions if the computation had run on another grid."
    );
    for set in &doc.comparisons.sets {
        let _ = writeln!(out, "\n  {}", set.label);
        let mut rows: Vec<(&str, String)> = vec![(
            "Local",
            format!(
                "{} kg CO2 ({})",
                sci(doc.comparisons.local.kg_co2),
                doc.comparisons.local.region.display_name
            ),
        )];
        for (rank, entry) in ["Lowest", "Median", "Highest"].iter().zip(&set.entries) {
            rows.push((
                rank,
                format!(
                    "{} kg CO2 ({})",
                    sci(entry.kg_co2),
                    entry.region.display_name
                ),
            ));
        }
        table(&mut out, &rows);
    }
    out
}
