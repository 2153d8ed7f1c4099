use energy_usage_core::grid::{
    derive_fuel_intensity, DatasetSnapshot, EmissionsUnit, RegionGroup, EMBEDDED_INTL_CSV,
    EMBEDDED_US_CSV,
};
use proptest::prelude::*;

fn split(csv: &str) -> (String, Vec<String>) {
    let mut lines = csv.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap().to_string();
    (header, lines.map(str::to_string).collect())
}

fn join(header: &str, rows: &[String]) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    out
}

fn extreme_ids(snap: &DatasetSnapshot) -> Vec<[String; 3]> {
    RegionGroup::ALL
        .iter()
        .map(|&g| {
            let e = snap.region_extremes(g).unwrap();
            e.as_array().map(|r| r.id.clone())
        })
        .collect()
}

/// Country rows with normalized random mixes. Ids come from the X* block,
/// skipping Kosovo's XK, so they cannot clash with the embedded rows.
const SYNTHETIC_IDS: &[u8] = b"ABCDEFGHIJLMNOPQRSTU";

fn country_rows() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        (
            0u32..1000,
            0u32..1000,
            0u32..1000,
            0u32..1000,
            any::<bool>(),
        ),
        1..20,
    )
    .prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (a, b, c, d, eu))| {
                let sum = (a + b + c + d).max(1) as f64;
                let (coal, oil, gas) = (a as f64 / sum, b as f64 / sum, c as f64 / sum);
                let low = if a + b + c + d == 0 {
                    1.0
                } else {
                    1.0 - coal - oil - gas
                };
                format!(
                    "X{},Synthetic {i},{},{coal},{oil},{gas},{}",
                    SYNTHETIC_IDS[i] as char,
                    u8::from(eu),
                    low.max(0.0)
                )
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extremes_survive_row_permutation(
        us in Just(split(EMBEDDED_US_CSV).1).prop_shuffle(),
        intl in Just(split(EMBEDDED_INTL_CSV).1).prop_shuffle(),
    ) {
        let base = DatasetSnapshot::embedded();
        let shuffled = DatasetSnapshot::from_csv(
            join(&split(EMBEDDED_US_CSV).0, &us).as_bytes(),
            join(&split(EMBEDDED_INTL_CSV).0, &intl).as_bytes(),
        )
        .unwrap();
        prop_assert_eq!(extreme_ids(&base), extreme_ids(&shuffled));
    }

    #[test]
    fn snapshot_round_trips(extra in country_rows()) {
        let (header, mut rows) = split(EMBEDDED_INTL_CSV);
        rows.extend(extra);
        let snap = DatasetSnapshot::from_csv(
            EMBEDDED_US_CSV.as_bytes(),
            join(&header, &rows).as_bytes(),
        )
        .unwrap();
        let again = DatasetSnapshot::from_csv(
            snap.to_us_csv().as_bytes(),
            snap.to_intl_csv().as_bytes(),
        )
        .unwrap();
        prop_assert_eq!(snap, again);
    }
}

#[test]
fn equal_intensity_ties_break_by_id() {
    let (header, mut rows) = split(EMBEDDED_INTL_CSV);
    // two all-coal countries tie for the global maximum
    rows.push("QZ,Tie Z,0,1,0,0,0".into());
    rows.push("QB,Tie B,0,1,0,0,0".into());
    let a = DatasetSnapshot::from_csv(EMBEDDED_US_CSV.as_bytes(), join(&header, &rows).as_bytes())
        .unwrap();
    rows.reverse();
    let b = DatasetSnapshot::from_csv(EMBEDDED_US_CSV.as_bytes(), join(&header, &rows).as_bytes())
        .unwrap();
    for snap in [&a, &b] {
        let e = snap.region_extremes(RegionGroup::GlobalExUsEurope).unwrap();
        assert_eq!(e.highest.id, "qz");
    }
}

#[test]
fn anchor_states_derive_published_intensities() {
    let snap = DatasetSnapshot::embedded();
    let published = [
        ("WV", [934.0, 735.0, 700.0]),
        ("MO", [975.0, 922.0, 528.0]),
        ("WY", [1085.0, 798.0, 1009.0]),
    ];
    for (code, [coal, oil, gas]) in published {
        let fuel = snap.state_fuel(code).unwrap();
        let got = derive_fuel_intensity(
            &fuel.generation_mwh,
            &fuel.emissions_kt,
            EmissionsUnit::Kilotonnes,
        )
        .unwrap();
        assert!((got.coal - coal).abs() <= 1.0, "{code} coal {}", got.coal);
        assert!((got.oil - oil).abs() <= 1.0, "{code} oil {}", got.oil);
        assert!(
            (got.natural_gas - gas).abs() <= 1.0,
            "{code} gas {}",
            got.natural_gas
        );
    }
}
