//! Regenerates the synthetic `cases.csv` and `weather.csv` fixtures.
//!
//! Daily R_t for each region is a baseline reduced multiplicatively by every
//! measure in force (ramping in over a week), nudged by temperature, and
//! perturbed by AR(1) log-noise. Cases follow the renewal model from
//! a few seed days plus imported cases; cumulative counts are the rounded
//! running sums.
//!
//! ```text
//! cargo run -p epiexplain-core --example gen_fixtures -- data
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use epiexplain_core::dataset::{days_since, Measure, MeasureSchedule};
use epiexplain_core::ingest::read_measures;
use epiexplain_core::serial_interval::default_serial_interval;
use epiexplain_core::IngestReport;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

const SEED: u64 = 2020;
const DAYS: usize = 72;

struct Region {
    name: &'static str,
    /// Days after the first date before the first seed day.
    intro: usize,
    seed: &'static [f64],
    r0: f64,
    /// Temperature at the first date and its daily drift.
    temp: (f64, f64),
    humidity: f64,
    /// Extra transmission (multiplier, first day, last day), e.g. a cluster.
    shock: Option<(f64, usize, usize)>,
    /// Imported cases per day (rate, first day, last day).
    imports: &'static [(f64, usize, usize)],
}

#[rustfmt::skip]
const REGIONS: &[Region] = &[
    Region { name: "Australia", intro: 22, seed: &[1.0], r0: 2.5, temp: (24.0, -0.06), humidity: 65.0, shock: None, imports: &[(1.0, 40, 71)] },
    Region { name: "Beijing", intro: 0, seed: &[3.0, 4.0, 5.0], r0: 2.7, temp: (-3.0, 0.15), humidity: 35.0, shock: None, imports: &[(2.0, 0, 14), (0.3, 50, 71)] },
    Region { name: "California", intro: 16, seed: &[1.0], r0: 2.7, temp: (13.0, 0.05), humidity: 60.0, shock: None, imports: &[(0.5, 40, 71)] },
    Region { name: "France", intro: 14, seed: &[1.0], r0: 3.0, temp: (5.0, 0.1), humidity: 80.0, shock: None, imports: &[] },
    Region { name: "Germany", intro: 12, seed: &[1.0], r0: 2.8, temp: (3.0, 0.1), humidity: 80.0, shock: None, imports: &[] },
    Region { name: "Guangdong", intro: 0, seed: &[6.0, 8.0, 10.0], r0: 2.8, temp: (15.0, 0.1), humidity: 75.0, shock: None, imports: &[(4.0, 0, 14), (0.4, 50, 71)] },
    Region { name: "Hong Kong", intro: 0, seed: &[1.0, 1.0, 2.0], r0: 2.3, temp: (17.0, 0.08), humidity: 78.0, shock: None, imports: &[(0.5, 0, 20), (3.0, 52, 71)] },
    Region { name: "Hubei", intro: 0, seed: &[250.0, 300.0, 350.0], r0: 3.1, temp: (5.0, 0.15), humidity: 78.0, shock: None, imports: &[] },
    Region { name: "Italy", intro: 9, seed: &[1.0], r0: 3.2, temp: (8.0, 0.1), humidity: 70.0, shock: None, imports: &[] },
    Region { name: "Japan", intro: 0, seed: &[1.0, 1.0], r0: 2.4, temp: (6.0, 0.1), humidity: 55.0, shock: Some((1.6, 40, 60)), imports: &[(0.5, 0, 40), (1.5, 55, 71)] },
    Region { name: "Macau", intro: 0, seed: &[1.0, 2.0, 2.0], r0: 2.1, temp: (16.0, 0.08), humidity: 78.0, shock: None, imports: &[(0.4, 0, 14), (0.8, 55, 71)] },
    Region { name: "New York", intro: 24, seed: &[1.0], r0: 3.7, temp: (2.0, 0.12), humidity: 62.0, shock: None, imports: &[] },
    Region { name: "Singapore", intro: 0, seed: &[1.0, 2.0], r0: 2.3, temp: (27.0, 0.01), humidity: 80.0, shock: None, imports: &[(0.5, 0, 30), (4.0, 50, 71)] },
    Region { name: "South Korea", intro: 0, seed: &[1.0, 1.0, 1.0], r0: 2.5, temp: (0.0, 0.15), humidity: 55.0, shock: Some((4.0, 26, 36)), imports: &[(0.3, 0, 30), (1.0, 55, 71)] },
    Region { name: "Spain", intro: 15, seed: &[1.0], r0: 3.4, temp: (9.0, 0.1), humidity: 65.0, shock: None, imports: &[] },
    Region { name: "Taiwan", intro: 0, seed: &[1.0, 1.0], r0: 2.1, temp: (17.0, 0.08), humidity: 78.0, shock: None, imports: &[(0.4, 0, 30), (2.0, 52, 71)] },
    Region { name: "United Kingdom", intro: 17, seed: &[1.0], r0: 3.0, temp: (6.0, 0.07), humidity: 82.0, shock: None, imports: &[] },
    Region { name: "Washington", intro: 10, seed: &[1.0], r0: 2.6, temp: (6.0, 0.08), humidity: 80.0, shock: None, imports: &[] },
];

/// Log-scale reduction of R when a measure is fully in force.
fn effect(m: Measure) -> f64 {
    match m {
        Measure::GovernmentAdvocation => 0.2,
        Measure::MaskUse => 0.3,
        Measure::SchoolClosure => 0.35,
        Measure::CityLockdown => 0.9,
        Measure::MassTesting => 0.25,
        Measure::TravelBan => 0.1,
        Measure::ContactTracing => 0.8,
    }
}

fn reproduction(
    region: &Region,
    schedule: &MeasureSchedule,
    date: NaiveDate,
    day: usize,
    temperature: f64,
    noise: f64,
) -> f64 {
    let mut log_r = region.r0.ln() + noise - 0.015 * (temperature - 10.0);
    for m in Measure::ALL {
        let d = days_since(schedule.date(m), date) as f64;
        log_r -= effect(m) * (d / 7.0).min(1.0);
    }
    if let Some((factor, from, to)) = region.shock {
        if (from..=to).contains(&day) {
            log_r += factor.ln();
        }
    }
    log_r.exp()
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    let measures_path = dir.join("measures.csv");
    let mut report = IngestReport::default();
    let file = File::open(&measures_path).expect("measures.csv must exist");
    let schedules: BTreeMap<String, MeasureSchedule> =
        read_measures(file, &measures_path, &mut report);
    assert!(report.is_empty(), "{report}");

    let start = NaiveDate::from_ymd_opt(2020, 1, 22).expect("valid date");
    let si = default_serial_interval();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let shock = Normal::new(0.0, 0.12).expect("valid sd");
    let temp_noise = Normal::new(0.0, 2.5).expect("valid sd");
    let hum_noise = Normal::new(0.0, 10.0).expect("valid sd");
    let import_noise = LogNormal::new(0.0, 0.5).expect("valid sd");

    let mut cases = String::from("region,date,cumulative_confirmed\n");
    let mut weather = String::from("region,date,temp_c,humidity_pct\n");
    for region in REGIONS {
        let schedule = &schedules[region.name];
        let mut temps = Vec::with_capacity(DAYS);
        for day in 0..DAYS {
            let date = start + Duration::days(day as i64);
            let t = region.temp.0 + region.temp.1 * day as f64 + temp_noise.sample(&mut rng);
            let h = (region.humidity + hum_noise.sample(&mut rng)).clamp(10.0, 100.0);
            let _ = writeln!(weather, "{},{},{:.1},{:.1}", region.name, date, t, h);
            temps.push(t);
        }

        let first = region.intro + region.seed.len();
        let mut noise = 0.0;
        let trajectory: Vec<f64> = (first..DAYS)
            .map(|day| {
                noise = 0.7 * noise + shock.sample(&mut rng);
                let date = start + Duration::days(day as i64);
                reproduction(region, schedule, date, day, temps[day], noise)
            })
            .collect();
        let mut daily: Vec<f64> = std::iter::repeat_n(0.0, region.intro)
            .chain(region.seed.iter().copied())
            .collect();
        for (day, r) in (first..DAYS).zip(trajectory) {
            let pressure: f64 = (1..=day.min(si.horizon()))
                .map(|lag| daily[day - lag] * si.weight(lag))
                .sum();
            let imported: f64 = region
                .imports
                .iter()
                .filter(|&&(_, from, to)| (from..=to).contains(&day))
                .map(|&(rate, _, _)| rate * import_noise.sample(&mut rng))
                .sum();
            daily.push(r * pressure + imported);
        }

        let mut running = 0.0;
        for (day, c) in daily.iter().enumerate() {
            running += c;
            let date = start + Duration::days(day as i64);
            let _ = writeln!(cases, "{},{},{}", region.name, date, running.round() as u64);
        }
    }
    write(&dir.join("cases.csv"), &cases);
    write(&dir.join("weather.csv"), &weather);
}

fn write(path: &Path, contents: &str) {
    fs::write(path, contents).unwrap_or_else(|e| panic!("cannot write {}: {e}", path.display()));
    println!("wrote {}", path.display());
}
