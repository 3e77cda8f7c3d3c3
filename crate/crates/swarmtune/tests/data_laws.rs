//! Property tests for the data layer: week splitting partitions rows
//! without reordering them, and bucket aggregation conserves device
//! counts while keeping each day's buckets contiguous.

use chrono::{Datelike, NaiveDate, NaiveDateTime, TimeDelta};
use proptest::prelude::*;
use std::collections::BTreeSet;
use swarmtune::data::{
    bucket_counts, split_train_test, ConnectionRecord, LocationKey, SplitSpec, SupervisedRow,
    SupervisedSet,
};

fn base() -> NaiveDateTime {
    // A Thursday, so the week anchor never coincides with the first row.
    NaiveDate::from_ymd_opt(2024, 2, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
}

fn monday_of(ts: NaiveDateTime) -> NaiveDate {
    ts.date() - TimeDelta::days(i64::from(ts.date().weekday().num_days_from_monday()))
}

fn row(day: i64, slot: i64, location: u8, count: u32) -> SupervisedRow {
    SupervisedRow {
        location: LocationKey {
            ap_id: format!("AP-{location}"),
            building: "B1".to_string(),
        },
        bucket_start: base() + TimeDelta::minutes(day * 1440 + slot * 15),
        features: vec![
            f64::from(location),
            0.0,
            0.0,
            0.0,
            f64::from(count),
            0.0,
            0.0,
        ],
        target: count,
    }
}

fn rows_strategy() -> impl Strategy<Value = Vec<SupervisedRow>> {
    proptest::collection::vec(
        (0..56i64, 0..96i64, 0..3u8, 0..50u32)
            .prop_map(|(day, slot, location, count)| row(day, slot, location, count)),
        1..80,
    )
}

fn records_strategy() -> impl Strategy<Value = Vec<ConnectionRecord>> {
    proptest::collection::vec(
        (0..10i64, 0..1440i64, 0..3u8, 0..2u8, 0..24u8).prop_map(
            |(day, minute, ap, building, device)| ConnectionRecord {
                ap_id: format!("AP-{ap}"),
                building: format!("B{building}"),
                mac: format!("02:00:00:00:00:{device:02x}"),
                timestamp: base() + TimeDelta::minutes(day * 1440 + minute),
            },
        ),
        1..300,
    )
}

proptest! {
    #[test]
    fn week_split_partitions_rows_in_order(rows in rows_strategy()) {
        let set = SupervisedSet { bucket_minutes: 15, horizon_minutes: 60, rows };
        let spec = SplitSpec::default();
        let anchor = monday_of(set.rows.iter().map(|r| r.bucket_start).min().unwrap());
        let week_of = |r: &SupervisedRow| -> u32 {
            ((r.bucket_start.date() - anchor).num_days() / 7) as u32 + 1
        };
        let last_week = set.rows.iter().map(week_of).max().unwrap();

        match split_train_test(&set, &spec) {
            Err(err) => {
                prop_assert!(last_week < spec.test_week, "unexpected failure: {err}");
            }
            Ok((train, test)) => {
                prop_assert!(last_week >= spec.test_week);
                prop_assert!(train.rows.iter().all(|r| week_of(r) <= spec.train_weeks));
                prop_assert!(test.rows.iter().all(|r| week_of(r) == spec.test_week));

                let dropped = set.rows.iter().filter(|r| week_of(r) > spec.test_week).count();
                prop_assert_eq!(
                    train.rows.len() + test.rows.len() + dropped,
                    set.rows.len()
                );

                // Each part preserves the input order: filtering the
                // original rows by week reproduces it exactly.
                let expect_train: Vec<_> = set
                    .rows
                    .iter()
                    .filter(|r| week_of(r) <= spec.train_weeks)
                    .cloned()
                    .collect();
                prop_assert_eq!(&train.rows, &expect_train);
                let expect_test: Vec<_> = set
                    .rows
                    .iter()
                    .filter(|r| week_of(r) == spec.test_week)
                    .cloned()
                    .collect();
                prop_assert_eq!(&test.rows, &expect_test);

                if let (Some(latest), Some(earliest)) = (
                    train.rows.iter().map(|r| r.bucket_start).max(),
                    test.rows.iter().map(|r| r.bucket_start).min(),
                ) {
                    prop_assert!(latest < earliest);
                }
            }
        }
    }

    #[test]
    fn bucket_aggregation_conserves_devices_and_stays_contiguous(
        records in records_strategy(),
        width in prop_oneof![Just(15u32), Just(30u32), Just(60u32)],
    ) {
        let series = bucket_counts(&records, width).unwrap();

        // Conservation: the summed counts equal the number of distinct
        // (location, bucket, device) combinations in the raw log.
        let mut distinct = BTreeSet::new();
        for r in &records {
            let minute = i64::from(width) * (r.timestamp.signed_duration_since(base())
                .num_minutes() / i64::from(width));
            distinct.insert((r.building.clone(), r.ap_id.clone(), minute, r.mac.clone()));
        }
        let total: u64 = series
            .iter()
            .flat_map(|s| s.buckets.iter().map(|b| u64::from(b.count)))
            .sum();
        prop_assert_eq!(total, distinct.len() as u64);

        for s in &series {
            prop_assert_eq!(s.bucket_minutes, width);
            // Within one calendar day buckets advance by exactly one
            // width; zero-filling never crosses midnight.
            for pair in s.buckets.windows(2) {
                if pair[0].start.date() == pair[1].start.date() {
                    prop_assert_eq!(
                        pair[1].start - pair[0].start,
                        TimeDelta::minutes(i64::from(width))
                    );
                } else {
                    prop_assert!(pair[1].start.date() > pair[0].start.date());
                }
            }
            // Every spanned day is anchored by at least one real record.
            let observed: BTreeSet<NaiveDate> = records
                .iter()
                .filter(|r| r.ap_id == s.location.ap_id && r.building == s.location.building)
                .map(|r| r.timestamp.date())
                .collect();
            for bucket in &s.buckets {
                prop_assert!(observed.contains(&bucket.start.date()));
            }
        }
    }
}
