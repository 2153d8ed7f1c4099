//! Electricity-grid snapshot: US state resource mixes and output emission
//! rates, international generation mixes, and the per-fuel carbon
//! intensities used to price a mix.
//!
//! The shipped snapshot is a re-normalized CSV rendition of the 2016 eGRID
//! state tables and the 2016 EIA international electricity data. Either file
//! can be replaced at runtime with [`DatasetSnapshot::from_csv`].

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emissions;

pub const EMBEDDED_US_CSV: &str = include_str!("../data/us_states_2016.csv");
pub const EMBEDDED_INTL_CSV: &str = include_str!("../data/international_2016.csv");

pub const US_HEADER: [&str; 13] = [
    "state_id",
    "state_name",
    "coal_frac",
    "oil_frac",
    "gas_frac",
    "lowcarbon_frac",
    "output_rate_lbs_per_mwh",
    "coal_gen_mwh",
    "oil_gen_mwh",
    "gas_gen_mwh",
    "coal_emit_kt",
    "oil_emit_kt",
    "gas_emit_kt",
];

pub const INTL_HEADER: [&str; 7] = [
    "country_id",
    "country_name",
    "is_europe",
    "coal_frac",
    "oil_frac",
    "gas_frac",
    "lowcarbon_frac",
];

/// Accepted range for the sum of a mix's four fractions.
pub const MIX_SUM_RANGE: (f64, f64) = (0.99, 1.01);

/// Negative values at or above this are source-rounding noise and read as 0.
pub const NEGLIGIBLE_NEGATIVE: f64 = -1e-6;

/// World average mix and output rate (EIA 2016).
pub const WORLD_MIX: EnergyMix = EnergyMix {
    coal: 0.287,
    oil: 0.229,
    natural_gas: 0.339,
    low_carbon: 0.144,
};
pub const WORLD_RATE_LBS_PER_MWH: f64 = 1600.6;

/// Entities in the EIA tables that no longer exist and carry no 2016 data.
const EXCLUDED_ENTITIES: [&str; 9] = [
    "former czechoslovakia",
    "former serbia and montenegro",
    "former u.s.s.r.",
    "former yugoslavia",
    "hawaiian trade zone",
    "east germany",
    "west germany",
    "germany, east",
    "germany, west",
];

pub const US_STATE_CODES: [&str; 51] = [
    "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DC", "DE", "FL", "GA", "HI", "IA", "ID", "IL", "IN",
    "KS", "KY", "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH", "NJ",
    "NM", "NV", "NY", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA",
    "WI", "WV", "WY",
];

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("schema error at row {row}, column `{column}`: {message}")]
    Schema {
        row: u64,
        column: String,
        message: String,
    },
    #[error("{fuel} has emissions but zero generation")]
    ZeroGeneration { fuel: Fuel },
    #[error("no regions in group {0}")]
    EmptyGroup(RegionGroup),
    #[error("unknown region `{key}`{}", suggestion_suffix(.suggestions))]
    UnknownRegion {
        key: String,
        suggestions: Vec<String>,
    },
    #[error("duplicate region id `{0}`")]
    DuplicateRegion(String),
    #[error("US snapshot is missing states: {}", .0.join(", "))]
    MissingStates(Vec<String>),
}

fn suggestion_suffix(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!(" (did you mean: {}?)", suggestions.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fuel {
    Coal,
    Oil,
    NaturalGas,
    LowCarbon,
}

impl fmt::Display for Fuel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fuel::Coal => "coal",
            Fuel::Oil => "oil",
            Fuel::NaturalGas => "natural gas",
            Fuel::LowCarbon => "low carbon",
        })
    }
}

/// Share of electricity generation by fuel, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyMix {
    pub coal: f64,
    pub oil: f64,
    pub natural_gas: f64,
    pub low_carbon: f64,
}

impl EnergyMix {
    /// Validated constructor; the error message names the violated bound.
    pub fn new(coal: f64, oil: f64, natural_gas: f64, low_carbon: f64) -> Result<Self, String> {
        let mix = EnergyMix {
            coal,
            oil,
            natural_gas,
            low_carbon,
        };
        for (fuel, v) in mix.shares() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(format!("{fuel} fraction {v} outside [0, 1]"));
            }
        }
        let sum = mix.sum();
        if !(MIX_SUM_RANGE.0..=MIX_SUM_RANGE.1).contains(&sum) {
            return Err(format!(
                "fractions sum to {sum:.4}, expected within [{}, {}]",
                MIX_SUM_RANGE.0, MIX_SUM_RANGE.1
            ));
        }
        Ok(mix)
    }

    /// Fractions in chart order: coal, oil, natural gas, low carbon.
    pub fn shares(&self) -> [(Fuel, f64); 4] {
        [
            (Fuel::Coal, self.coal),
            (Fuel::Oil, self.oil),
            (Fuel::NaturalGas, self.natural_gas),
            (Fuel::LowCarbon, self.low_carbon),
        ]
    }

    pub fn sum(&self) -> f64 {
        self.coal + self.oil + self.natural_gas + self.low_carbon
    }
}

/// Carbon intensity per fuel in kg CO₂ per MWh generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelIntensities {
    pub coal: f64,
    pub oil: f64,
    pub natural_gas: f64,
    pub low_carbon: f64,
}

/// The fixed per-fuel constants applied to every mix-priced region: the
/// means of the West Virginia, Missouri and Wyoming derivations, rounded as
/// published. Low-carbon generation is modeled as emission free.
///
/// Note the exact arithmetic means of the three per-state values are
/// 998.0 / 818.3 / 745.7; the published rounded constants are what ships.
pub fn canonical_intensities() -> FuelIntensities {
    FuelIntensities {
        coal: 996.0,
        oil: 817.0,
        natural_gas: 744.0,
        low_carbon: 0.0,
    }
}

/// Per-fuel quantity for the three fossil fuels (MWh or emissions mass).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FossilQuantities {
    pub coal: f64,
    pub oil: f64,
    pub natural_gas: f64,
}

impl FossilQuantities {
    fn by_fuel(&self) -> [(Fuel, f64); 3] {
        [
            (Fuel::Coal, self.coal),
            (Fuel::Oil, self.oil),
            (Fuel::NaturalGas, self.natural_gas),
        ]
    }

    pub fn total(&self) -> f64 {
        self.coal + self.oil + self.natural_gas
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmissionsUnit {
    /// Thousands of metric tons, as in the eGRID state tables.
    Kilotonnes,
    MetricTons,
}

impl EmissionsUnit {
    fn kg(self) -> f64 {
        match self {
            EmissionsUnit::Kilotonnes => 1_000_000.0,
            EmissionsUnit::MetricTons => 1_000.0,
        }
    }
}

/// kg CO₂ per MWh for each fossil fuel: emissions converted to kilograms,
/// divided by the generation from that fuel.
///
/// A fuel with neither generation nor emissions derives to 0.
pub fn derive_fuel_intensity(
    generation_mwh: &FossilQuantities,
    emissions: &FossilQuantities,
    unit: EmissionsUnit,
) -> Result<FuelIntensities, GridError> {
    let mut out = [0.0; 3];
    for (slot, ((fuel, gen), (_, emitted))) in out.iter_mut().zip(
        generation_mwh
            .by_fuel()
            .into_iter()
            .zip(emissions.by_fuel()),
    ) {
        if gen > 0.0 {
            *slot = emitted * unit.kg() / gen;
        } else if emitted > 0.0 {
            return Err(GridError::ZeroGeneration { fuel });
        }
    }
    Ok(FuelIntensities {
        coal: out[0],
        oil: out[1],
        natural_gas: out[2],
        low_carbon: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionGroup {
    Us,
    Europe,
    GlobalExUsEurope,
}

impl RegionGroup {
    pub const ALL: [RegionGroup; 3] = [
        RegionGroup::Us,
        RegionGroup::Europe,
        RegionGroup::GlobalExUsEurope,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RegionGroup::Us => "United States",
            RegionGroup::Europe => "Europe",
            RegionGroup::GlobalExUsEurope => "Global (excluding US and Europe)",
        }
    }
}

impl fmt::Display for RegionGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegionGroup::Us => "us",
            RegionGroup::Europe => "europe",
            RegionGroup::GlobalExUsEurope => "global",
        })
    }
}

impl std::str::FromStr for RegionGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "us" | "usa" | "united-states" => Ok(RegionGroup::Us),
            "europe" | "eu" => Ok(RegionGroup::Europe),
            "global" | "world" | "global-ex-us-europe" => Ok(RegionGroup::GlobalExUsEurope),
            other => Err(format!(
                "unknown group `{other}` (expected us, europe or global)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateKind {
    UsAverage,
    EuropeAverage,
    WorldAverage,
    GlobalExUsEurope,
}

impl AggregateKind {
    pub fn id(self) -> &'static str {
        match self {
            AggregateKind::UsAverage => "us-average",
            AggregateKind::EuropeAverage => "europe-average",
            AggregateKind::WorldAverage => "world-average",
            AggregateKind::GlobalExUsEurope => "global-ex-us-europe-average",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "aggregate")]
pub enum RegionKind {
    UsState,
    Country,
    Aggregate(AggregateKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub id: String,
    pub display_name: String,
    pub kind: RegionKind,
    pub mix: EnergyMix,
    /// Output emission rate, lbs CO₂ per MWh. Present for US states and the
    /// US and world aggregates only.
    pub direct_rate_lbs_per_mwh: Option<f64>,
    pub group: Option<RegionGroup>,
}

impl RegionRecord {
    pub fn is_aggregate(&self) -> bool {
        matches!(self.kind, RegionKind::Aggregate(_))
    }
}

/// Generation and emissions by fuel for one state, kept alongside the state
/// record so the per-fuel intensities can be re-derived.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFuelData {
    pub state_id: String,
    pub generation_mwh: FossilQuantities,
    pub emissions_kt: FossilQuantities,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateRow {
    pub record: RegionRecord,
    pub fuel: StateFuelData,
}

pub fn state_region_id(code: &str) -> String {
    format!("us-{}", code.to_ascii_lowercase())
}

pub fn country_region_id(code: &str) -> String {
    code.to_ascii_lowercase()
}

struct Columns {
    index: Vec<usize>,
}

impl Columns {
    fn resolve(headers: &csv::StringRecord, wanted: &[&str]) -> Result<Self, GridError> {
        let mut index = Vec::with_capacity(wanted.len());
        for name in wanted {
            let i = headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
                .ok_or_else(|| GridError::Schema {
                    row: 1,
                    column: name.to_string(),
                    message: "missing column in header".into(),
                })?;
            index.push(i);
        }
        Ok(Columns { index })
    }
}

struct RowReader<'a> {
    record: &'a csv::StringRecord,
    columns: &'a Columns,
    names: &'a [&'a str],
    row: u64,
}

impl RowReader<'_> {
    fn schema(&self, col: usize, message: impl Into<String>) -> GridError {
        GridError::Schema {
            row: self.row,
            column: self.names[col].to_string(),
            message: message.into(),
        }
    }

    fn text(&self, col: usize) -> Result<&str, GridError> {
        let v = self
            .record
            .get(self.columns.index[col])
            .map(str::trim)
            .unwrap_or("");
        if v.is_empty() {
            return Err(self.schema(col, "empty value"));
        }
        Ok(v)
    }

    fn number(&self, col: usize) -> Result<f64, GridError> {
        let raw = self.text(col)?;
        let v: f64 = raw
            .parse()
            .map_err(|_| self.schema(col, format!("`{raw}` is not a number")))?;
        if !v.is_finite() {
            return Err(self.schema(col, format!("`{raw}` is not finite")));
        }
        Ok(v)
    }

    /// Non-negative quantity; tiny negative rounding residue clamps to 0.
    fn quantity(&self, col: usize) -> Result<f64, GridError> {
        let v = self.number(col)?;
        if v < 0.0 {
            if v >= NEGLIGIBLE_NEGATIVE {
                return Ok(0.0);
            }
            return Err(self.schema(col, format!("negative value {v}")));
        }
        Ok(v)
    }

    fn mix(&self, first: usize) -> Result<EnergyMix, GridError> {
        let coal = self.quantity(first)?;
        let oil = self.quantity(first + 1)?;
        let gas = self.quantity(first + 2)?;
        let low = self.quantity(first + 3)?;
        EnergyMix::new(coal, oil, gas, low).map_err(|m| self.schema(first, m))
    }
}

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes)
}

fn csv_failure(e: csv::Error) -> GridError {
    let row = e.position().map(|p| p.line()).unwrap_or(0);
    GridError::Schema {
        row,
        column: String::new(),
        message: e.to_string(),
    }
}

/// Parse the US state snapshot. `otherFossil` generation is not part of the
/// schema; anything outside coal, oil and gas is counted as low carbon.
pub fn parse_egrid(bytes: &[u8]) -> Result<Vec<StateRow>, GridError> {
    let mut rdr = reader(bytes);
    let headers = rdr.headers().map_err(csv_failure)?.clone();
    let columns = Columns::resolve(&headers, &US_HEADER)?;
    let mut out = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(csv_failure)?;
        let row = RowReader {
            record: &record,
            columns: &columns,
            names: &US_HEADER,
            row: record.position().map(|p| p.line()).unwrap_or(0),
        };
        let code = row.text(0)?.to_ascii_uppercase();
        let name = row.text(1)?.to_string();
        let mix = row.mix(2)?;
        let rate = row.quantity(6)?;
        let generation_mwh = FossilQuantities {
            coal: row.quantity(7)?,
            oil: row.quantity(8)?,
            natural_gas: row.quantity(9)?,
        };
        let emissions_kt = FossilQuantities {
            coal: row.quantity(10)?,
            oil: row.quantity(11)?,
            natural_gas: row.quantity(12)?,
        };
        let id = state_region_id(&code);
        out.push(StateRow {
            record: RegionRecord {
                id: id.clone(),
                display_name: name,
                kind: RegionKind::UsState,
                mix,
                direct_rate_lbs_per_mwh: Some(rate),
                group: Some(RegionGroup::Us),
            },
            fuel: StateFuelData {
                state_id: id,
                generation_mwh,
                emissions_kt,
            },
        });
    }
    Ok(out)
}

fn parse_flag(row: &RowReader<'_>, col: usize) -> Result<bool, GridError> {
    match row.text(col)?.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        other => Err(row.schema(col, format!("`{other}` is not a boolean"))),
    }
}

/// Parse the international snapshot. Defunct entities are dropped, as is the
/// United States (covered state by state).
pub fn parse_eia(bytes: &[u8]) -> Result<Vec<RegionRecord>, GridError> {
    let mut rdr = reader(bytes);
    let headers = rdr.headers().map_err(csv_failure)?.clone();
    let columns = Columns::resolve(&headers, &INTL_HEADER)?;
    let mut out = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(csv_failure)?;
        let row = RowReader {
            record: &record,
            columns: &columns,
            names: &INTL_HEADER,
            row: record.position().map(|p| p.line()).unwrap_or(0),
        };
        let code = row.text(0)?;
        let name = row.text(1)?;
        let lowered = name.to_ascii_lowercase();
        if EXCLUDED_ENTITIES.contains(&lowered.as_str())
            || code.eq_ignore_ascii_case("US")
            || lowered == "united states"
        {
            continue;
        }
        let europe = parse_flag(&row, 2)?;
        let mix = row.mix(3)?;
        out.push(RegionRecord {
            id: country_region_id(code),
            display_name: name.to_string(),
            kind: RegionKind::Country,
            mix,
            direct_rate_lbs_per_mwh: None,
            group: Some(if europe {
                RegionGroup::Europe
            } else {
                RegionGroup::GlobalExUsEurope
            }),
        });
    }
    Ok(out)
}

/// Lowest, median (lower-middle for even counts) and highest emitting
/// regions of a group.
#[derive(Debug, Clone, PartialEq)]
pub struct Extremes<'a> {
    pub lowest: &'a RegionRecord,
    pub median: &'a RegionRecord,
    pub highest: &'a RegionRecord,
}

impl<'a> Extremes<'a> {
    pub fn as_array(&self) -> [&'a RegionRecord; 3] {
        [self.lowest, self.median, self.highest]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSnapshot {
    regions: Vec<RegionRecord>,
    pub intensities: FuelIntensities,
    pub vintage: String,
    pub provenance: Vec<String>,
    pub state_fuel: Vec<StateFuelData>,
}

impl DatasetSnapshot {
    /// The snapshot compiled into the binary.
    pub fn embedded() -> Self {
        Self::from_csv(EMBEDDED_US_CSV.as_bytes(), EMBEDDED_INTL_CSV.as_bytes())
            .expect("embedded snapshot is valid")
    }

    pub fn from_csv(us_csv: &[u8], intl_csv: &[u8]) -> Result<Self, GridError> {
        let states = parse_egrid(us_csv)?;
        let countries = parse_eia(intl_csv)?;

        let present: BTreeSet<String> = states.iter().map(|s| s.record.id.clone()).collect();
        let missing: Vec<String> = US_STATE_CODES
            .iter()
            .filter(|c| !present.contains(&state_region_id(c)))
            .map(|c| c.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(GridError::MissingStates(missing));
        }

        let mut regions = Vec::with_capacity(states.len() + countries.len() + 4);
        let mut state_fuel = Vec::with_capacity(states.len());
        for s in states {
            regions.push(s.record);
            state_fuel.push(s.fuel);
        }
        regions.extend(countries);
        regions.extend(aggregates(&regions, &state_fuel));

        let mut seen = BTreeSet::new();
        for r in &regions {
            if !seen.insert(r.id.as_str()) {
                return Err(GridError::DuplicateRegion(r.id.clone()));
            }
        }

        Ok(DatasetSnapshot {
            regions,
            intensities: canonical_intensities(),
            vintage: "2016".into(),
            provenance: vec![
                "US EPA eGRID 2016: state resource mix, state output emission rates, \
                 state generation and emissions by fuel"
                    .into(),
                "US EIA international electricity generation by source, 2016".into(),
            ],
            state_fuel,
        })
    }

    pub fn regions(&self) -> &[RegionRecord] {
        &self.regions
    }

    pub fn get(&self, id: &str) -> Option<&RegionRecord> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn aggregate(&self, kind: AggregateKind) -> &RegionRecord {
        self.get(kind.id())
            .expect("aggregates are always present in a snapshot")
    }

    pub fn state_fuel(&self, state_code: &str) -> Option<&StateFuelData> {
        let id = state_region_id(state_code);
        self.state_fuel.iter().find(|s| s.state_id == id)
    }

    pub fn effective_intensity(&self, region: &RegionRecord) -> f64 {
        emissions::effective_intensity(region, &self.intensities)
    }

    pub fn group_members(&self, group: RegionGroup) -> impl Iterator<Item = &RegionRecord> {
        self.regions
            .iter()
            .filter(move |r| !r.is_aggregate() && r.group == Some(group))
    }

    /// Members of a group ordered by effective intensity, ties broken by id.
    pub fn ranked(&self, group: RegionGroup) -> Vec<&RegionRecord> {
        let mut members: Vec<(&RegionRecord, f64)> = self
            .group_members(group)
            .map(|r| (r, self.effective_intensity(r)))
            .collect();
        members.sort_by(|a, b| match a.1.total_cmp(&b.1) {
            Ordering::Equal => a.0.id.cmp(&b.0.id),
            o => o,
        });
        members.into_iter().map(|(r, _)| r).collect()
    }

    pub fn region_extremes(&self, group: RegionGroup) -> Result<Extremes<'_>, GridError> {
        let ranked = self.ranked(group);
        if ranked.is_empty() {
            return Err(GridError::EmptyGroup(group));
        }
        Ok(Extremes {
            lowest: ranked[0],
            median: ranked[(ranked.len() - 1) / 2],
            highest: ranked[ranked.len() - 1],
        })
    }

    /// Case-insensitive lookup by id, then by display name. A name shared
    /// by a US state and a country (Georgia) resolves to the state; the
    /// country stays reachable by its ISO code.
    pub fn lookup_region(&self, key: &str) -> Result<&RegionRecord, GridError> {
        let needle = key.trim().to_lowercase();
        if let Some(r) = self.regions.iter().find(|r| r.id == needle) {
            return Ok(r);
        }
        if let Some(r) = self
            .regions
            .iter()
            .find(|r| r.display_name.to_lowercase() == needle)
        {
            return Ok(r);
        }
        Err(GridError::UnknownRegion {
            key: key.to_string(),
            suggestions: self.suggestions(&needle),
        })
    }

    fn suggestions(&self, needle: &str) -> Vec<String> {
        let mut scored: Vec<(usize, &str)> = self
            .regions
            .iter()
            .map(|r| {
                let name = r.display_name.to_lowercase();
                let d = strsim::levenshtein(needle, &name).min(strsim::levenshtein(needle, &r.id));
                (d, r.display_name.as_str())
            })
            .filter(|(d, _)| *d <= needle.chars().count().max(3) / 2)
            .collect();
        scored.sort();
        scored
            .into_iter()
            .take(3)
            .map(|(_, n)| n.to_string())
            .collect()
    }

    /// Serialize the US half back to the snapshot CSV schema.
    pub fn to_us_csv(&self) -> String {
        let mut out = US_HEADER.join(",");
        out.push('\n');
        for (r, fuel) in self
            .regions
            .iter()
            .filter(|r| r.kind == RegionKind::UsState)
            .zip(&self.state_fuel)
        {
            let code = r.id.trim_start_matches("us-").to_ascii_uppercase();
            let fields = [
                code,
                csv_text(&r.display_name),
                r.mix.coal.to_string(),
                r.mix.oil.to_string(),
                r.mix.natural_gas.to_string(),
                r.mix.low_carbon.to_string(),
                r.direct_rate_lbs_per_mwh.unwrap_or(0.0).to_string(),
                fuel.generation_mwh.coal.to_string(),
                fuel.generation_mwh.oil.to_string(),
                fuel.generation_mwh.natural_gas.to_string(),
                fuel.emissions_kt.coal.to_string(),
                fuel.emissions_kt.oil.to_string(),
                fuel.emissions_kt.natural_gas.to_string(),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Serialize the international half back to the snapshot CSV schema.
    pub fn to_intl_csv(&self) -> String {
        let mut out = INTL_HEADER.join(",");
        out.push('\n');
        for r in self
            .regions
            .iter()
            .filter(|r| r.kind == RegionKind::Country)
        {
            let fields = [
                r.id.to_ascii_uppercase(),
                csv_text(&r.display_name),
                if r.group == Some(RegionGroup::Europe) {
                    "1"
                } else {
                    "0"
                }
                .to_string(),
                r.mix.coal.to_string(),
                r.mix.oil.to_string(),
                r.mix.natural_gas.to_string(),
                r.mix.low_carbon.to_string(),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Total generation of a state, recovered from its fossil generation and
/// fossil share. States with no fossil share carry no weight.
fn inferred_total_generation(record: &RegionRecord, fuel: &StateFuelData) -> f64 {
    let fossil_share = record.mix.coal + record.mix.oil + record.mix.natural_gas;
    if fossil_share > 0.0 {
        fuel.generation_mwh.total() / fossil_share
    } else {
        0.0
    }
}

fn mean_mix<'a>(members: impl Iterator<Item = (&'a RegionRecord, f64)>) -> Option<EnergyMix> {
    let mut acc = [0.0; 4];
    let mut weight = 0.0;
    for (r, w) in members {
        for (slot, (_, v)) in acc.iter_mut().zip(r.mix.shares()) {
            *slot += v * w;
        }
        weight += w;
    }
    (weight > 0.0).then(|| EnergyMix {
        coal: acc[0] / weight,
        oil: acc[1] / weight,
        natural_gas: acc[2] / weight,
        low_carbon: acc[3] / weight,
    })
}

fn aggregates(regions: &[RegionRecord], state_fuel: &[StateFuelData]) -> Vec<RegionRecord> {
    let weighted_states: Vec<(&RegionRecord, f64)> = regions
        .iter()
        .filter(|r| r.kind == RegionKind::UsState)
        .zip(state_fuel)
        .map(|(r, f)| (r, inferred_total_generation(r, f)))
        .collect();
    let total_weight: f64 = weighted_states.iter().map(|(_, w)| w).sum();
    let us_rate = weighted_states
        .iter()
        .map(|(r, w)| r.direct_rate_lbs_per_mwh.unwrap_or(0.0) * w)
        .sum::<f64>()
        / total_weight;
    let us_mix = mean_mix(weighted_states.iter().copied()).unwrap_or(WORLD_MIX);

    let mut out = vec![
        RegionRecord {
            id: AggregateKind::WorldAverage.id().into(),
            display_name: "World average".into(),
            kind: RegionKind::Aggregate(AggregateKind::WorldAverage),
            mix: WORLD_MIX,
            direct_rate_lbs_per_mwh: Some(WORLD_RATE_LBS_PER_MWH),
            group: None,
        },
        RegionRecord {
            id: AggregateKind::UsAverage.id().into(),
            display_name: "United States average".into(),
            kind: RegionKind::Aggregate(AggregateKind::UsAverage),
            mix: us_mix,
            direct_rate_lbs_per_mwh: Some(us_rate),
            group: None,
        },
    ];
    for (kind, group, name) in [
        (
            AggregateKind::EuropeAverage,
            RegionGroup::Europe,
            "Europe average",
        ),
        (
            AggregateKind::GlobalExUsEurope,
            RegionGroup::GlobalExUsEurope,
            "Global average (excluding US and Europe)",
        ),
    ] {
        let members = regions
            .iter()
            .filter(|r| r.kind == RegionKind::Country && r.group == Some(group))
            .map(|r| (r, 1.0));
        if let Some(mix) = mean_mix(members) {
            out.push(RegionRecord {
                id: kind.id().into(),
                display_name: name.into(),
                kind: RegionKind::Aggregate(kind),
                mix,
                direct_rate_lbs_per_mwh: None,
                group: None,
            });
        }
    }
    out
}
