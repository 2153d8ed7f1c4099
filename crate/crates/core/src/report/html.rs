use std::f64::consts::PI;
use std::fmt::Write as _;

use super::format::{duration_hms, human, percent, sci, sig3};
use super::text::{fallback_note, method_label, CLAMP_WARNING};
use super::ReportDocument;
use crate::emissions::ComparisonSet;

const PIE_CX: f64 = 100.0;
const PIE_CY: f64 = 100.0;
const PIE_R: f64 = 90.0;
const FULL_TURN_EPS: f64 = 1e-9;

const FUEL_COLORS: [(&str, &str); 4] = [
    ("Coal", "#4d4d4d"),
    ("Oil", "#a0522d"),
    ("Natural gas", "#e0a030"),
    ("Low carbon", "#4caf50"),
];

const BAR_W: f64 = 300.0;
const BAR_H: f64 = 220.0;
const BAR_TOP: f64 = 20.0;
const BAR_BASE: f64 = 170.0;
const BAR_LEFT: f64 = 50.0;
const BAR_SLOT: f64 = 60.0;
const BAR_WIDTH: f64 = 40.0;

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Point on the pie rim `deg` degrees clockwise from 12 o'clock.
fn rim(deg: f64) -> (f64, f64) {
    let rad = deg * PI / 180.0;
    (PIE_CX + PIE_R * rad.sin(), PIE_CY - PIE_R * rad.cos())
}

fn pie_svg(doc: &ReportDocument) -> String {
    let m = &doc.mix.mix;
    let fractions = [m.coal, m.oil, m.natural_gas, m.low_carbon];
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg class="pie" xmlns="http://www.w3.org/2000/svg" version="1.1" width="200" height="200" viewBox="0 0 200 200">"#
    );
    let mut start = 0.0f64;
    for ((name, color), frac) in FUEL_COLORS.iter().zip(fractions) {
        let angle = frac * 360.0;
        let attrs = format!(
            r#"class="wedge" data-fuel="{}" data-fraction="{frac}" data-angle="{angle}" fill="{color}""#,
            escape(name)
        );
        if angle >= 360.0 - FULL_TURN_EPS {
            let _ = writeln!(
                svg,
                r#"  <circle {attrs} cx="{PIE_CX:.3}" cy="{PIE_CY:.3}" r="{PIE_R:.3}"/>"#
            );
        } else if angle > 0.0 {
            let (x0, y0) = rim(start);
            let (x1, y1) = rim(start + angle);
            let large = u8::from(angle > 180.0);
            let _ = writeln!(
                svg,
                r#"  <path {attrs} d="M {PIE_CX:.3} {PIE_CY:.3} L {x0:.3} {y0:.3} A {PIE_R:.3} {PIE_R:.3} 0 {large} 1 {x1:.3} {y1:.3} Z"/>"#
            );
        }
        start += angle;
    }
    svg.push_str("</svg>");
    svg
}

fn bar_svg(set: &ComparisonSet, doc: &ReportDocument) -> String {
    let local = &doc.comparisons.local;
    let bars: Vec<(String, String, f64)> = std::iter::once((
        "Local".to_string(),
        local.region.display_name.clone(),
        local.kg_co2,
    ))
    .chain(
        ["Lowest", "Median", "Highest"]
            .iter()
            .zip(&set.entries)
            .map(|(rank, e)| (rank.to_string(), e.region.display_name.clone(), e.kg_co2)),
    )
    .collect();
    let max = bars.iter().map(|b| b.2).fold(0.0f64, f64::max);
    let plot_h = BAR_BASE - BAR_TOP;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg class="bars" data-group="{}" xmlns="http://www.w3.org/2000/svg" version="1.1" width="{BAR_W}" height="{BAR_H}" viewBox="0 0 {BAR_W} {BAR_H}">"#,
        set.group
    );
    let _ = writeln!(
        svg,
        r#"  <text x="{:.3}" y="14" text-anchor="middle" font-size="13">{}</text>"#,
        BAR_W / 2.0,
        escape(&set.label)
    );
    // shared y-axis: max value at the top, zero at the base
    let _ = writeln!(
        svg,
        r#"  <line x1="{BAR_LEFT:.3}" y1="{BAR_TOP:.3}" x2="{BAR_LEFT:.3}" y2="{BAR_BASE:.3}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"  <line x1="{BAR_LEFT:.3}" y1="{BAR_BASE:.3}" x2="{:.3}" y2="{BAR_BASE:.3}" stroke="black"/>"#,
        BAR_W - 10.0
    );
    let _ = writeln!(
        svg,
        r#"  <text class="ymax" x="{:.3}" y="{:.3}" text-anchor="end" font-size="9">{}</text>"#,
        BAR_LEFT - 3.0,
        BAR_TOP + 4.0,
        sci(max)
    );
    let _ = writeln!(
        svg,
        r#"  <text x="{:.3}" y="{:.3}" text-anchor="end" font-size="9">0</text>"#,
        BAR_LEFT - 3.0,
        BAR_BASE
    );
    for (i, (rank, name, kg)) in bars.iter().enumerate() {
        let height = if max > 0.0 { kg / max * plot_h } else { 0.0 };
        let x = BAR_LEFT + 10.0 + i as f64 * BAR_SLOT;
        let y = BAR_BASE - height;
        let fill = if i == 0 { "#1f77b4" } else { "#aaaaaa" };
        let _ = writeln!(
            svg,
            r#"  <rect class="bar" data-rank="{}" data-region="{}" data-kg="{kg}" x="{x:.3}" y="{y:.3}" width="{BAR_WIDTH:.3}" height="{height:.3}" fill="{fill}"/>"#,
            rank.to_lowercase(),
            escape(name)
        );
        let cx = x + BAR_WIDTH / 2.0;
        let _ = writeln!(
            svg,
            r#"  <text x="{cx:.3}" y="{:.3}" text-anchor="middle" font-size="9">{}</text>"#,
            y - 3.0,
            sci(*kg)
        );
        let _ = writeln!(
            svg,
            r#"  <text x="{cx:.3}" y="{:.3}" text-anchor="middle" font-size="10">{}</text>"#,
            BAR_BASE + 14.0,
            escape(rank)
        );
        let _ = writeln!(
            svg,
            r#"  <text x="{cx:.3}" y="{:.3}" text-anchor="middle" font-size="9">{}</text>"#,
            BAR_BASE + 27.0,
            escape(name)
        );
    }
    svg.push_str("</svg>");
    svg
}

fn rows(out: &mut String, rows: &[(&str, String)]) {
    out.push_str("<table>\n");
    for (label, value) in rows {
        let _ = writeln!(
            out,
            "<tr><th>{}:</th><td>{}</td></tr>",
            escape(label),
            escape(value)
        );
    }
    out.push_str("</table>\n");
}

const STYLE: &str = "body{font-family:sans-serif;max-width:960px;margin:2em auto;color:#222}\
th{text-align:right;font-weight:normal;padding-right:.5em}\
.summary{border:2px solid #444;padding:.5em 1em;display:inline-block;font-size:1.2em}\
.note{color:#a15c00}.charts svg{margin-right:1em}";

pub fn render_html(doc: &ReportDocument) -> Vec<u8> {
    let r = &doc.readings;
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str("<title>Energy Usage Report</title>\n");
    let _ = writeln!(out, "<style>{STYLE}</style>\n</head>\n<body>");
    out.push_str("<h1>Energy Usage Report</h1>\n");
    let _ = writeln!(
        out,
        "<p>Command: <code>{}</code></p>",
        escape(&doc.header.command_line())
    );
    if let Some(code) = doc.header.exit_code {
        let _ = writeln!(out, "<p>Exit code: {code}</p>");
    }
    if doc.header.interrupted {
        out.push_str("<p class=\"note\">Interrupted: partial measurement</p>\n");
    }
    let _ = writeln!(
        out,
        "<p>Location: {} ({}) via {}</p>",
        escape(&doc.mix.region_name),
        escape(&doc.mix.region_id),
        method_label(doc.resolution.method)
    );
    if let Some(note) = fallback_note(doc) {
        let _ = writeln!(out, "<p class=\"note\">Note: {}</p>", escape(&note));
    }
    if r.clamped {
        let _ = writeln!(
            out,
            "<p class=\"note\">Warning: {}</p>",
            escape(CLAMP_WARNING)
        );
    }

    out.push_str("<h2>Energy Usage Readings</h2>\n");
    rows(
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

    let _ = writeln!(
        out,
        "<h2>Energy Mix Data: {}</h2>",
        escape(&doc.mix.region_name)
    );
    out.push_str(&pie_svg(doc));
    out.push('\n');
    let m = &doc.mix.mix;
    rows(
        &mut out,
        &[
            ("Coal", percent(m.coal)),
            ("Oil", percent(m.oil)),
            ("Natural gas", percent(m.natural_gas)),
            ("Low carbon", percent(m.low_carbon)),
        ],
    );

    out.push_str("<div class=\"summary\">\n");
    rows(
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
        ],
    );
    out.push_str("</div>\n");

    let a = &doc.assumptions;
    out.push_str("<h2>Assumed Carbon Equivalencies</h2>\n");
    rows(
        &mut out,
        &[
            ("Coal", format!("{} kg CO2/MWh", a.coal)),
            ("Oil", format!("{} kg CO2/MWh", a.oil)),
            ("Natural gas", format!("{} kg CO2/MWh", a.natural_gas)),
            ("Low carbon", format!("{} kg CO2/MWh", a.low_carbon)),
        ],
    );

    let e = &doc.equivalents;
    out.push_str("<h2>CO2 Emissions Equivalents</h2>\n");
    rows(
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

    out.push_str("<h2>Emission Comparisons</h2>\n");
    out.push_str("<p>CO2 emissions if the computation had run on another grid.</p>\n");
    out.push_str("<div class=\"charts\">\n");
    for set in &doc.comparisons.sets {
        out.push_str(&bar_svg(set, doc));
        out.push('\n');
    }
    out.push_str("</div>\n");
    let _ = writeln!(
        out,
        "<footer><small>energy-usage {} &middot; {} &ndash; {}</small></footer>",
        escape(&doc.tool_version),
        escape(&doc.timestamps.started_at),
        escape(&doc.timestamps.finished_at)
    );
    out.push_str("</body>\n</html>\n");
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{EnergyMix, WORLD_MIX};
    use crate::locate::ResolutionMethod;
    use crate::report::fixtures::worked_example;

    fn attr_values(html: &str, attr: &str) -> Vec<f64> {
        let needle = format!("{attr}=\"");
        html.match_indices(&needle)
            .map(|(i, _)| {
                let rest = &html[i + needle.len()..];
                rest[..rest.find('"').unwrap()].parse().unwrap()
            })
            .collect()
    }

    fn with_mix(mix: EnergyMix) -> String {
        let mut doc = worked_example(ResolutionMethod::GeoIp, "world-average");
        doc.mix.mix = mix;
        String::from_utf8(render_html(&doc)).unwrap()
    }

    #[test]
    fn four_svgs_no_external_resources() {
        let html = with_mix(WORLD_MIX);
        assert_eq!(html.matches("<svg").count(), 4);
        assert!(!html.contains("http://") || html.matches("http://").count() == 4);
        assert!(!html.contains("https://"));
        assert!(!html.contains("<script"));
        assert!(!html.contains("<link"));
    }

    #[test]
    fn world_mix_wedges_are_fraction_times_360() {
        let html = with_mix(WORLD_MIX);
        let angles = attr_values(&html, "data-angle");
        let expect = [0.287, 0.229, 0.339, 0.144].map(|f| f * 360.0);
        assert_eq!(angles.len(), 4);
        for (got, want) in angles.iter().zip(expect) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn all_low_carbon_is_a_full_circle() {
        let html = with_mix(EnergyMix {
            coal: 0.0,
            oil: 0.0,
            natural_gas: 0.0,
            low_carbon: 1.0,
        });
        assert!(html.contains(r#"<circle class="wedge" data-fuel="Low carbon""#));
        assert_eq!(html.matches("class=\"wedge\"").count(), 1);
    }

    #[test]
    fn bar_heights_proportional_to_kg() {
        let html = String::from_utf8(render_html(&worked_example(
            ResolutionMethod::GeoIp,
            "wyoming",
        )))
        .unwrap();
        for panel in html.split("<svg class=\"bars\"").skip(1) {
            let kgs = attr_values(panel, "data-kg");
            let heights: Vec<f64> = panel
                .match_indices("class=\"bar\"")
                .map(|(i, _)| {
                    let rest = &panel[i..];
                    let h = rest.find(" height=\"").unwrap() + 9;
                    rest[h..h + rest[h..].find('"').unwrap()].parse().unwrap()
                })
                .collect();
            assert_eq!(kgs.len(), 4);
            let max = kgs.iter().cloned().fold(0.0, f64::max);
            for (kg, h) in kgs.iter().zip(&heights) {
                let expect = kg / max * (BAR_BASE - BAR_TOP);
                assert!((h - expect).abs() <= 0.001, "{h} vs {expect}");
            }
        }
    }

    #[test]
    fn text_is_escaped() {
        let mut doc = worked_example(ResolutionMethod::GeoIp, "wyoming");
        doc.header.command = "<b>&evil</b>".into();
        let html = String::from_utf8(render_html(&doc)).unwrap();
        assert!(html.contains("&lt;b&gt;&amp;evil&lt;/b&gt;"));
        assert!(!html.contains("<b>&evil"));
    }
}
