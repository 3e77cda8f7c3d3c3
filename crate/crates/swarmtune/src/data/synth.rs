//! Synthetic connection-log generator.
//!
//! Each access point emits records from an inhomogeneous Poisson process with
//! a daytime-peaked sinusoidal intensity and weekday-heavy day weights. Every
//! event is attributed to a device drawn from the AP's MAC pool, so devices
//! re-associate across buckets the way real clients do.

use chrono::{NaiveDate, TimeDelta};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use swarmtune_core::seed;

use super::{ConnectionRecord, DataError, DayOfWeek};

/// Relative intensity per day of week, Monday first.
pub const DAY_WEIGHTS: [f64; 7] = [0.85, 1.0, 1.0, 0.95, 0.60, 0.16, 0.10];

/// First minute of the active daytime window (07:00).
const ACTIVE_START_MINUTE: u32 = 420;
/// Last minute of the active daytime window (22:00).
const ACTIVE_END_MINUTE: u32 = 1320;

/// Shape of a synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Number of buildings.
    pub n_buildings: u32,
    /// Access points per building.
    pub aps_per_building: u32,
    /// Whole calendar weeks to generate, starting at `start`.
    pub weeks: u32,
    /// Peak event rate per AP in records per minute.
    pub base_rate: f64,
    /// Size of each AP's device pool.
    pub macs_per_ap: u32,
    /// Generator seed.
    pub seed: u64,
    /// First day of the dataset.
    pub start: NaiveDate,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_buildings: 2,
            aps_per_building: 3,
            weeks: 6,
            base_rate: 8.0,
            macs_per_ap: 512,
            seed: 0,
            // A Monday, so week boundaries align with the data's first day.
            start: NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date"),
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), DataError> {
        if self.n_buildings == 0 || self.aps_per_building == 0 || self.weeks == 0 {
            return Err(DataError::BadSynthConfig("counts must be positive"));
        }
        if !(self.base_rate > 0.0 && self.base_rate.is_finite()) {
            return Err(DataError::BadSynthConfig(
                "base_rate must be positive and finite",
            ));
        }
        if self.macs_per_ap == 0 || self.macs_per_ap > 0x0100_0000 {
            return Err(DataError::BadSynthConfig("macs_per_ap must be in 1..=2^24"));
        }
        Ok(())
    }

    fn total_aps(&self) -> u32 {
        self.n_buildings * self.aps_per_building
    }
}

/// Expected records per minute for one AP at a given day and minute of day.
pub fn intensity(base_rate: f64, day: DayOfWeek, minute: u32) -> f64 {
    if !(ACTIVE_START_MINUTE..=ACTIVE_END_MINUTE).contains(&minute) {
        return 0.0;
    }
    let phase = f64::from(minute - ACTIVE_START_MINUTE) * std::f64::consts::PI
        / f64::from(ACTIVE_END_MINUTE - ACTIVE_START_MINUTE);
    base_rate * DAY_WEIGHTS[day.index()] * phase.sin()
}

/// Expected number of records across the whole dataset.
pub fn expected_record_count(config: &SynthConfig) -> f64 {
    let mut per_ap = 0.0;
    for d in 0..i64::from(config.weeks * 7) {
        let day = DayOfWeek::from_date(config.start + TimeDelta::days(d));
        for minute in 0..1440 {
            per_ap += intensity(config.base_rate, day, minute);
        }
    }
    per_ap * f64::from(config.total_aps())
}

/// Expected records for one AP within one bucket of a given day.
pub fn expected_bucket_records(
    config: &SynthConfig,
    day: DayOfWeek,
    bucket_start_minute: u32,
    bucket_minutes: u32,
) -> f64 {
    (bucket_start_minute..bucket_start_minute + bucket_minutes)
        .map(|m| intensity(config.base_rate, day, m))
        .sum()
}

fn mac_string(building: u32, ap: u32, device: u32) -> String {
    format!(
        "02:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
        building & 0xff,
        ap & 0xff,
        (device >> 16) & 0xff,
        (device >> 8) & 0xff,
        device & 0xff,
    )
}

/// Generates a synthetic connection log, deterministic per config and seed.
///
/// Records come back sorted by timestamp, building, AP, and MAC.
pub fn generate(config: &SynthConfig) -> Result<Vec<ConnectionRecord>, DataError> {
    config.validate()?;
    let days = i64::from(config.weeks * 7);
    let mut records = Vec::new();
    for b in 0..config.n_buildings {
        let building = format!("B{}", b + 1);
        for a in 0..config.aps_per_building {
            let ap_id = format!("AP-{}-{}", building, a + 1);
            // One stream per AP keeps output stable under loop refactoring.
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed::derive(config.seed, &[u64::from(b), u64::from(a)]));
            for d in 0..days {
                let date = config.start + TimeDelta::days(d);
                let day = DayOfWeek::from_date(date);
                for minute in 0..1440u32 {
                    let lambda = intensity(config.base_rate, day, minute);
                    if lambda <= 0.0 {
                        continue;
                    }
                    let events = Poisson::new(lambda)
                        .expect("rate is positive and finite")
                        .sample(&mut rng) as u32;
                    for _ in 0..events {
                        let device = rng.random_range(0..config.macs_per_ap);
                        records.push(ConnectionRecord {
                            ap_id: ap_id.clone(),
                            timestamp: date
                                .and_hms_opt(minute / 60, minute % 60, 0)
                                .expect("minute of day is valid"),
                            mac: mac_string(b, a, device),
                            building: building.clone(),
                        });
                    }
                }
            }
        }
    }
    records.sort_by(|x, y| {
        (x.timestamp, &x.building, &x.ap_id, &x.mac).cmp(&(
            y.timestamp,
            &y.building,
            &y.ap_id,
            &y.mac,
        ))
    });
    Ok(records)
}
