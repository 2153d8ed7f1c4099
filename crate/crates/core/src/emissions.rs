//! Energy to CO₂ conversion, everyday equivalents and cross-grid comparisons.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{DatasetSnapshot, EnergyMix, FuelIntensities, RegionGroup, RegionRecord};

pub const KG_PER_LB: f64 = 0.453592;

pub const EMBEDDED_EQUIVALENCIES_CSV: &str = include_str!("../data/equivalencies.csv");

/// lbs CO₂/MWh → kg CO₂/kWh.
pub fn direct_rate_intensity(lbs_per_mwh: f64) -> f64 {
    lbs_per_mwh * KG_PER_LB / 1000.0
}

/// Mix-weighted intensity in kg CO₂/kWh.
pub fn mix_intensity(mix: &EnergyMix, intensities: &FuelIntensities) -> f64 {
    (mix.coal * intensities.coal
        + mix.oil * intensities.oil
        + mix.natural_gas * intensities.natural_gas
        + mix.low_carbon * intensities.low_carbon)
        / 1000.0
}

/// kg CO₂ per kWh for a region. Regions carrying an output emission rate use
/// it directly; everything else is priced from its generation mix.
pub fn effective_intensity(region: &RegionRecord, intensities: &FuelIntensities) -> f64 {
    match region.direct_rate_lbs_per_mwh {
        Some(rate) => direct_rate_intensity(rate),
        None => mix_intensity(&region.mix, intensities),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionsResult {
    pub kwh: f64,
    pub region: RegionRecord,
    pub intensity_kg_per_kwh: f64,
    pub kg_co2: f64,
}

pub fn emissions_for_energy(
    kwh: f64,
    region: &RegionRecord,
    intensities: &FuelIntensities,
) -> EmissionsResult {
    let intensity = effective_intensity(region, intensities);
    EmissionsResult {
        kwh,
        region: region.clone(),
        intensity_kg_per_kwh: intensity,
        kg_co2: kwh * intensity,
    }
}

#[derive(Debug, Error)]
pub enum EquivalencyError {
    #[error("cannot read equivalency file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("equivalency file line {line}: {message}")]
    Invalid { line: u64, message: String },
    #[error("equivalency file is missing `{0}`")]
    Missing(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalencyFactors {
    pub kg_per_mile: f64,
    pub kg_per_tv_minute: f64,
    pub kg_per_household_day: f64,
}

impl Default for EquivalencyFactors {
    fn default() -> Self {
        Self::from_csv(EMBEDDED_EQUIVALENCIES_CSV.as_bytes())
            .expect("embedded equivalency constants are valid")
    }
}

#[derive(Debug, Deserialize)]
struct FactorRow {
    key: String,
    value: f64,
    #[allow(dead_code)]
    unit: String,
    #[allow(dead_code)]
    source: String,
}

impl EquivalencyFactors {
    /// Parse a `key,value,unit,source` file. Unknown keys are ignored.
    pub fn from_csv(bytes: &[u8]) -> Result<Self, EquivalencyError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let (mut mile, mut tv, mut house) = (None, None, None);
        for row in rdr.deserialize::<FactorRow>() {
            let row = row.map_err(|e| EquivalencyError::Invalid {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            if !(row.value.is_finite() && row.value > 0.0) {
                return Err(EquivalencyError::Invalid {
                    line: 0,
                    message: format!("`{}` must be strictly positive", row.key),
                });
            }
            match row.key.as_str() {
                "kg_per_mile" => mile = Some(row.value),
                "kg_per_tv_minute" => tv = Some(row.value),
                "kg_per_household_day" => house = Some(row.value),
                _ => {}
            }
        }
        Ok(EquivalencyFactors {
            kg_per_mile: mile.ok_or(EquivalencyError::Missing("kg_per_mile"))?,
            kg_per_tv_minute: tv.ok_or(EquivalencyError::Missing("kg_per_tv_minute"))?,
            kg_per_household_day: house.ok_or(EquivalencyError::Missing("kg_per_household_day"))?,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, EquivalencyError> {
        let bytes = std::fs::read(path).map_err(|source| EquivalencyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv(&bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equivalents {
    pub miles: f64,
    pub tv_minutes: f64,
    pub household_day_percent: f64,
}

pub fn equivalents(kg_co2: f64, factors: &EquivalencyFactors) -> Equivalents {
    Equivalents {
        miles: kg_co2 / factors.kg_per_mile,
        tv_minutes: kg_co2 / factors.kg_per_tv_minute,
        household_day_percent: 100.0 * kg_co2 / factors.kg_per_household_day,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub region: RegionRecord,
    pub kg_co2: f64,
}

/// Lowest, median and highest emitting grids of one group, priced at the
/// same energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSet {
    pub group: RegionGroup,
    pub label: String,
    pub entries: Vec<ComparisonEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparisons {
    pub local: EmissionsResult,
    pub sets: Vec<ComparisonSet>,
}

/// Price `kwh` on the lowest, median and highest grid of each group, plus
/// the local grid. A group with no members (possible with a replacement
/// international file) is left out.
pub fn comparison_sets(kwh: f64, snapshot: &DatasetSnapshot, local: &RegionRecord) -> Comparisons {
    let mut sets = Vec::with_capacity(RegionGroup::ALL.len());
    for group in RegionGroup::ALL {
        let Ok(extremes) = snapshot.region_extremes(group) else {
            continue;
        };
        let entries = extremes
            .as_array()
            .into_iter()
            .map(|r| ComparisonEntry {
                region: r.clone(),
                kg_co2: emissions_for_energy(kwh, r, &snapshot.intensities).kg_co2,
            })
            .collect();
        sets.push(ComparisonSet {
            group,
            label: group.label().to_string(),
            entries,
        });
    }
    Comparisons {
        local: emissions_for_energy(kwh, local, &snapshot.intensities),
        sets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{canonical_intensities, RegionKind, WORLD_MIX};

    fn mix_region(mix: EnergyMix) -> RegionRecord {
        RegionRecord {
            id: "xx".into(),
            display_name: "Test".into(),
            kind: RegionKind::Country,
            mix,
            direct_rate_lbs_per_mwh: None,
            group: Some(RegionGroup::GlobalExUsEurope),
        }
    }

    const ALL_COAL: EnergyMix = EnergyMix {
        coal: 1.0,
        oil: 0.0,
        natural_gas: 0.0,
        low_carbon: 0.0,
    };

    #[test]
    fn world_direct_rate_converts_to_726_kg_per_mwh() {
        let kg_per_kwh = direct_rate_intensity(1600.6);
        assert!((kg_per_kwh - 0.72602).abs() < 1e-5, "{kg_per_kwh}");
    }

    #[test]
    fn all_coal_mix_prices_at_coal_constant() {
        let r = mix_region(ALL_COAL);
        assert!((effective_intensity(&r, &canonical_intensities()) - 0.996).abs() < 1e-12);
        let e = emissions_for_energy(1.0, &r, &canonical_intensities());
        assert!((e.kg_co2 - 0.996).abs() < 1e-12);
    }

    #[test]
    fn world_mix_weighted_sum() {
        let oracle = 0.287 * 996.0 + 0.229 * 817.0 + 0.339 * 744.0;
        let got = mix_intensity(&WORLD_MIX, &canonical_intensities()) * 1000.0;
        assert!((got - oracle).abs() < 1e-9);
        assert!((got - 725.2).abs() < 0.05);
    }

    #[test]
    fn zero_energy_is_zero_emissions() {
        let r = mix_region(ALL_COAL);
        assert_eq!(
            emissions_for_energy(0.0, &r, &canonical_intensities()).kg_co2,
            0.0
        );
    }

    #[test]
    fn milli_kwh_at_world_rate() {
        let mut r = mix_region(WORLD_MIX);
        r.direct_rate_lbs_per_mwh = Some(1600.6);
        let e = emissions_for_energy(0.001, &r, &canonical_intensities());
        assert!((e.kg_co2 - 7.26e-4).abs() < 1e-7);
    }

    #[test]
    fn equivalents_ratios() {
        let f = EquivalencyFactors::default();
        let one = equivalents(f.kg_per_mile, &f);
        assert!((one.miles - 1.0).abs() < 1e-12);
        let zero = equivalents(0.0, &f);
        assert_eq!(
            (zero.miles, zero.tv_minutes, zero.household_day_percent),
            (0.0, 0.0, 0.0)
        );
        let tv = equivalents(1.78e-3, &f).tv_minutes;
        assert!((tv - 1.10).abs() < 0.005, "{tv}");
    }

    #[test]
    fn factor_file_requires_all_keys_and_positive_values() {
        let missing =
            EquivalencyFactors::from_csv(b"key,value,unit,source\nkg_per_mile,0.4,kg,x\n");
        assert!(matches!(missing, Err(EquivalencyError::Missing(_))));
        let negative = EquivalencyFactors::from_csv(
            b"key,value,unit,source\nkg_per_mile,-1,kg,x\nkg_per_tv_minute,1,kg,x\nkg_per_household_day,1,kg,x\n",
        );
        assert!(matches!(negative, Err(EquivalencyError::Invalid { .. })));
    }

    #[test]
    fn comparison_sets_follow_extremes() {
        let snap = DatasetSnapshot::embedded();
        let local = snap.lookup_region("world-average").unwrap();
        let c = comparison_sets(1.0, &snap, local);
        assert_eq!(c.sets.len(), 3);
        let us: Vec<_> = c.sets[0]
            .entries
            .iter()
            .map(|e| e.region.display_name.as_str())
            .collect();
        assert_eq!(us, ["Vermont", "Mississippi", "Wyoming"]);
        for set in &c.sets {
            assert!(set.entries.windows(2).all(|w| w[0].kg_co2 <= w[1].kg_co2));
        }
        let iceland = &c.sets[1].entries[0];
        assert_eq!(iceland.region.display_name, "Iceland");
        assert!(iceland.kg_co2.abs() < 1e-9);

        let zero = comparison_sets(0.0, &snap, local);
        assert!(zero
            .sets
            .iter()
            .flat_map(|s| &s.entries)
            .all(|e| e.kg_co2 == 0.0));
        assert_eq!(zero.sets[0].entries[0].region.id, "us-vt");
    }
}
