use std::collections::BTreeMap;
use std::fs;

use chrono::{Duration, NaiveDate};
use epiexplain_core::dataset::FeatureRow;
use epiexplain_core::explain::{Method, RankedFeature};
use epiexplain_core::report::RowTopK;
use epiexplain_core::rt::{estimate_rt, mean_filter, new_cases_from_cumulative, CaseSeries};
use epiexplain_core::serial_interval::default_serial_interval;
use epiexplain_core::tables::{
    read_dataset, read_explanations, read_rt, render_dataset, render_explanations, render_rt,
    RegionEstimate,
};
use epiexplain_core::Error;
use proptest::prelude::*;

fn day(i: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 22).unwrap() + Duration::days(i as i64)
}

fn estimate(region: &str, increments: &[u64]) -> RegionEstimate {
    let mut total = 0;
    let entries = increments
        .iter()
        .enumerate()
        .map(|(i, inc)| {
            total += inc;
            (day(i), total)
        })
        .collect();
    let raw = new_cases_from_cumulative(&CaseSeries::new(region, entries).unwrap());
    let smoothed = mean_filter(&raw, 1);
    let rt = estimate_rt(&smoothed, &default_serial_interval(), 20);
    RegionEstimate { raw, smoothed, rt }
}

fn feature_row() -> impl Strategy<Value = FeatureRow> {
    (
        0usize..3,
        0usize..90,
        0.0f64..6.0,
        0.0f64..1e5,
        prop::array::uniform7(0u32..120),
        -30.0f64..40.0,
        0.0f64..=100.0,
    )
        .prop_map(
            |(region, d, r_t, new_cases, days_since, temperature, humidity)| FeatureRow {
                region: ["Hubei", "Hong Kong", "New York"][region].into(),
                date: day(d),
                r_t,
                new_cases,
                days_since,
                temperature,
                humidity,
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rt_file_round_trips(
        a in prop::collection::vec(0u64..200, 1..40),
        b in prop::collection::vec(0u64..200, 1..40),
    ) {
        let estimates = vec![estimate("Alpha", &a), estimate("Beta", &b)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        fs::write(&path, render_rt(&estimates)).unwrap();
        let back = read_rt(&path).unwrap();
        prop_assert_eq!(back.len(), 2);
        for (orig, read) in estimates.iter().zip(&back) {
            prop_assert_eq!(&orig.raw, &read.raw);
            prop_assert_eq!(&orig.smoothed, &read.smoothed);
            prop_assert_eq!(&orig.rt.points, &read.rt.points);
        }
        prop_assert_eq!(render_rt(&back), render_rt(&estimates));
    }

    #[test]
    fn dataset_file_round_trips(rows in prop::collection::vec(feature_row(), 0..30)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.csv");
        fs::write(&path, render_dataset(&rows)).unwrap();
        prop_assert_eq!(read_dataset(&path).unwrap(), rows);
    }

    #[test]
    fn explanations_file_round_trips(
        specs in prop::collection::vec((0usize..60, 1usize..4, any::<bool>(), -1.0f64..1.0), 0..20),
    ) {
        let mut new_cases = BTreeMap::new();
        let rows: Vec<RowTopK> = specs
            .iter()
            .enumerate()
            .map(|(i, &(d, k, shap, score))| {
                let region = format!("R{i}");
                new_cases.insert((region.clone(), day(d)), (i * 17) as f64);
                RowTopK {
                    region,
                    date: day(d),
                    theta: if shap { 1.0 } else { 2.5 },
                    method: if shap { Method::Shap } else { Method::Ecpi },
                    new_cases: (i * 17) as f64,
                    ranked: (0..k)
                        .map(|r| RankedFeature { feature: (i + 3 * r) % 10, code: (r % 3) as u8, score: score / (r + 1) as f64 })
                        .collect(),
                }
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("explanations.csv");
        fs::write(&path, render_explanations(&rows)).unwrap();
        prop_assert_eq!(read_explanations(&path, &new_cases).unwrap(), rows);
    }
}

#[test]
fn malformed_files_are_ingestion_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rt.csv");
    fs::write(&path, "region,date,r_t\nA,2020-01-22,1.0\n").unwrap();
    assert!(matches!(read_rt(&path), Err(Error::Ingest(_))));

    fs::write(
        &path,
        "region,date,cumulative,new_cases,smoothed_new_cases,r_t\n\
         A,2020-01-22,5,5,5,\nA,2020-01-24,9,4,4,1.5\n",
    )
    .unwrap();
    assert!(matches!(read_rt(&path), Err(Error::Ingest(_))));

    let rows = vec![FeatureRow {
        region: "A".into(),
        date: day(3),
        r_t: 0.5,
        new_cases: 12.0,
        days_since: [1, 0, 0, 4, 0, 0, 9],
        temperature: 3.5,
        humidity: 41.0,
    }];
    let text = render_dataset(&rows).replace("0.5,12", "0.5,twelve");
    fs::write(&path, text).unwrap();
    let err = read_dataset(&path).unwrap_err();
    assert!(err.to_string().contains("twelve"), "{err}");

    let missing = dir.path().join("absent.csv");
    assert!(matches!(read_dataset(&missing), Err(Error::Io { .. })));
}
