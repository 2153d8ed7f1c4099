use energy_usage_core::emissions::{
    comparison_sets, direct_rate_intensity, effective_intensity, emissions_for_energy,
    mix_intensity, KG_PER_LB,
};
use energy_usage_core::grid::{
    canonical_intensities, DatasetSnapshot, EnergyMix, RegionGroup, RegionKind, RegionRecord,
};
use proptest::prelude::*;

fn mix() -> impl Strategy<Value = EnergyMix> {
    (0u32..=1000, 0u32..=1000, 0u32..=1000, 0u32..=1000)
        .prop_filter("non-empty", |(a, b, c, d)| a + b + c + d > 0)
        .prop_map(|(a, b, c, d)| {
            let s = (a + b + c + d) as f64;
            EnergyMix {
                coal: a as f64 / s,
                oil: b as f64 / s,
                natural_gas: c as f64 / s,
                low_carbon: d as f64 / s,
            }
        })
}

fn country(mix: EnergyMix) -> RegionRecord {
    RegionRecord {
        id: "xa".into(),
        display_name: "Synthetic".into(),
        kind: RegionKind::Country,
        mix,
        direct_rate_lbs_per_mwh: None,
        group: Some(RegionGroup::GlobalExUsEurope),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn emissions_are_linear_in_energy(m in mix(), kwh in 0.0f64..1e4, a in 0.0f64..1e3) {
        let r = country(m);
        let c = canonical_intensities();
        let scaled = emissions_for_energy(a * kwh, &r, &c).kg_co2;
        let base = a * emissions_for_energy(kwh, &r, &c).kg_co2;
        prop_assert!((scaled - base).abs() <= 1e-9 * base.abs().max(1e-12));
    }

    #[test]
    fn direct_and_mix_paths_agree(m in mix()) {
        let c = canonical_intensities();
        let mix_path = mix_intensity(&m, &c);
        // a rate generated from the mix: kg/kWh -> lbs/MWh
        let rate = mix_path * 1000.0 / KG_PER_LB;
        let mut r = country(m);
        r.direct_rate_lbs_per_mwh = Some(rate);
        let direct = effective_intensity(&r, &c);
        prop_assert!((direct - mix_path).abs() <= 1e-9 * mix_path.max(1e-12));
        prop_assert!((direct_rate_intensity(rate) - mix_path).abs() <= 1e-9 * mix_path.max(1e-12));
    }

    #[test]
    fn mix_intensity_never_exceeds_coal(m in mix()) {
        let i = effective_intensity(&country(m), &canonical_intensities());
        prop_assert!((0.0..=0.996 + 1e-12).contains(&i), "{}", i);
    }

    #[test]
    fn comparison_sets_are_ordered(kwh in 0.0f64..100.0) {
        let snap = DatasetSnapshot::embedded();
        let local = snap.lookup_region("world-average").unwrap();
        let c = comparison_sets(kwh, &snap, local);
        prop_assert_eq!(c.sets.len(), 3);
        for set in &c.sets {
            prop_assert_eq!(set.entries.len(), 3);
            prop_assert!(set.entries[0].kg_co2 <= set.entries[1].kg_co2);
            prop_assert!(set.entries[1].kg_co2 <= set.entries[2].kg_co2);
        }
    }
}

#[test]
fn every_shipped_mix_region_is_bounded() {
    let snap = DatasetSnapshot::embedded();
    for r in snap
        .regions()
        .iter()
        .filter(|r| r.direct_rate_lbs_per_mwh.is_none())
    {
        let i = snap.effective_intensity(r);
        assert!(i <= 0.996 + 1e-12, "{} at {i}", r.id);
    }
}
