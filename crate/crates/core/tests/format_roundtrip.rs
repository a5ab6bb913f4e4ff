// SPDX-License-Identifier: Apache-2.0

use benchlite_core::{
    emit_canonical, parse_canonical, AttributeCatalog, BenchmarkRecord, FormatError, RecordRole,
};
use chrono::{DateTime, TimeZone, Utc};
use proptest::prelude::*;
use proptest::sample::subsequence;

fn catalog() -> AttributeCatalog {
    AttributeCatalog::builtin()
}

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0),
        0.0f64..1e-6,
        0.0f64..1.0,
        0.0f64..1e9,
        (0u32..1_000_000).prop_map(f64::from),
    ]
}

fn timestamp() -> impl Strategy<Value = DateTime<Utc>> {
    (1_000_000_000i64..2_000_000_000, 0u32..1_000_000_000).prop_map(|(s, ns)| Utc.timestamp_opt(s, ns).unwrap())
}

/// One run: several targets, each with a subset of the catalog.
fn record_set() -> impl Strategy<Value = Vec<BenchmarkRecord>> {
    let ids: Vec<String> = catalog().attributes().iter().map(|a| a.id.clone()).collect();
    (
        "[a-z][a-z0-9.]{0,10}-[0-9a-f]{8}",
        1u32..=65536,
        1u32..=64,
        timestamp(),
        prop_oneof![Just(RecordRole::Current), Just(RecordRole::Historic)],
        prop::collection::btree_set("[a-z][a-z0-9.-]{0,12}", 1..6),
    )
        .prop_flat_map(move |(run, mem, cores, ts, role, targets)| {
            let per_target: Vec<_> = targets
                .into_iter()
                .map(|t| {
                    let n = ids.len();
                    (Just(t), subsequence(ids.clone(), 1..=n), prop::collection::vec(value(), n))
                })
                .collect();
            (Just((run, mem, cores, ts, role)), per_target)
        })
        .prop_map(|((run, mem, cores, ts, role), per_target)| {
            let cat = catalog();
            let mut out = Vec::new();
            for (target, attrs, values) in per_target {
                for (a, v) in attrs.into_iter().zip(values) {
                    out.push(BenchmarkRecord {
                        target_name: target.clone(),
                        unit: cat.get(&a).unwrap().unit.clone(),
                        attribute_id: a,
                        value: v,
                        container_mem_mb: mem,
                        cpu_cores: cores,
                        run_id: run.clone(),
                        timestamp: ts,
                        role,
                    });
                }
            }
            out
        })
}

fn sorted(mut records: Vec<BenchmarkRecord>) -> Vec<BenchmarkRecord> {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    records
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parse_inverts_emit(records in record_set()) {
        let text = emit_canonical(&records).unwrap();
        let parsed = parse_canonical(&text, &catalog()).unwrap();
        prop_assert!(parsed.warnings.is_empty());
        prop_assert_eq!(parsed.records, sorted(records));
    }

    #[test]
    fn emit_ignores_input_order(records in record_set(), seed in any::<u64>()) {
        let mut shuffled = records.clone();
        // Deterministic rotation and reversal are enough to disturb order.
        let k = (seed as usize) % shuffled.len().max(1);
        shuffled.rotate_left(k);
        if seed & 1 == 1 {
            shuffled.reverse();
        }
        prop_assert_eq!(emit_canonical(&records).unwrap(), emit_canonical(&shuffled).unwrap());
    }

    #[test]
    fn emit_is_a_fixed_point(records in record_set()) {
        let text = emit_canonical(&records).unwrap();
        let again = emit_canonical(&parse_canonical(&text, &catalog()).unwrap().records).unwrap();
        prop_assert_eq!(text, again);
    }
}

#[test]
fn mixed_runs_are_rejected() {
    let ts = Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap();
    let rec = |run: &str| BenchmarkRecord {
        target_name: "a".into(),
        attribute_id: "ops.int.add".into(),
        value: 1.0,
        unit: "ns".into(),
        container_mem_mb: 100,
        cpu_cores: 1,
        run_id: run.into(),
        timestamp: ts,
        role: RecordRole::Current,
    };
    assert!(matches!(emit_canonical(&[rec("r1"), rec("r2")]), Err(FormatError::MixedRuns(..))));
    assert!(matches!(emit_canonical(&[]), Err(FormatError::EmptyRecords)));
}
