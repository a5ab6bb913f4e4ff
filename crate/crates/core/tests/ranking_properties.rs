// SPDX-License-Identifier: Apache-2.0

use benchlite_core::{
    normalise, rank, rank_targets, score_hybrid, score_native, AttributeCatalog, BenchmarkRecord, Column,
    Direction, GroupId, GroupedMatrix, RankMethod, RankTable, RecordIndex, RecordRole, WeightVector,
};
use chrono::{TimeZone, Utc};
use proptest::prelude::*;

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("t{i:02}")).collect()
}

/// A matrix with at least one column per group.
fn matrix() -> impl Strategy<Value = GroupedMatrix> {
    (2usize..12, prop::collection::vec(0usize..4, 4..14)).prop_flat_map(|(m, extra_groups)| {
        let groups: Vec<GroupId> = GroupId::ALL
            .iter()
            .copied()
            .chain(extra_groups.into_iter().map(|g| GroupId::ALL[g]))
            .collect();
        let cols: Vec<_> = groups
            .into_iter()
            .map(move |g| (Just(g), prop::collection::vec(-1e6f64..1e6, m)))
            .collect();
        cols.prop_map(move |cols| {
            let columns = cols
                .into_iter()
                .enumerate()
                .map(|(i, (group, values))| Column {
                    attribute_id: format!("a{i}"),
                    group,
                    values,
                })
                .collect();
            GroupedMatrix::new(names(m), columns).unwrap()
        })
    })
}

fn weights() -> impl Strategy<Value = WeightVector> {
    prop::array::uniform4(0.0f64..=5.0)
        .prop_filter("not all zero", |w| w.iter().any(|x| *x > 0.0))
        .prop_map(|w| WeightVector::from_array(w).unwrap())
}

fn ranks(t: &RankTable) -> Vec<(String, u32)> {
    let mut v: Vec<_> = t.entries.iter().map(|e| (e.target.clone(), e.rank)).collect();
    v.sort();
    v
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Competition ranks recomputed by brute force; `None` if two scores are
/// within `tol` but not equal (rank order would depend on rounding).
fn stable_ranks(scores: &[(String, f64)], tol: f64) -> Option<Vec<(String, u32)>> {
    for (i, a) in scores.iter().enumerate() {
        for b in &scores[i + 1..] {
            if a.1 != b.1 && (a.1 - b.1).abs() < tol {
                return None;
            }
        }
    }
    let mut v: Vec<_> = scores
        .iter()
        .map(|(t, s)| (t.clone(), 1 + scores.iter().filter(|(_, o)| o > s).count() as u32))
        .collect();
    v.sort();
    Some(v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn columns_are_standardised(m in matrix()) {
        let z = normalise(&m);
        for c in z.columns() {
            let n = c.z.len() as f64;
            let mean = c.z.iter().sum::<f64>() / n;
            let var = c.z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9, "mean {mean}");
            if c.std_dev > 0.0 {
                prop_assert!((var.sqrt() - 1.0).abs() < 1e-9, "std {}", var.sqrt());
            } else {
                prop_assert!(c.z.iter().all(|x| *x == 0.0));
            }
        }
    }

    #[test]
    fn native_scores_sum_to_zero(m in matrix(), w in weights()) {
        let s = score_native(&normalise(&m), &w).unwrap();
        let total: f64 = s.iter().map(|(_, x)| x).sum();
        prop_assert!(total.abs() < 1e-9, "sum {total}");
    }

    #[test]
    fn affine_maps_leave_ranking_unchanged(
        m in matrix(),
        w in weights(),
        a in 1e-3f64..1e3,
        b in -1e6f64..1e6,
    ) {
        let moved = GroupedMatrix::new(
            m.targets().to_vec(),
            m.columns()
                .iter()
                .map(|c| Column { values: c.values.iter().map(|x| a * x + b).collect(), ..c.clone() })
                .collect(),
        )
        .unwrap();
        let s1 = score_native(&normalise(&m), &w).unwrap();
        let s2 = score_native(&normalise(&moved), &w).unwrap();
        for ((_, x), (_, y)) in s1.iter().zip(&s2) {
            prop_assert!(close(*x, *y, 1e-6), "{x} vs {y}");
        }
        if let Some(expected) = stable_ranks(&s1, 1e-6) {
            prop_assert_eq!(ranks(&rank(&s2, RankMethod::Native)), expected);
        }
    }

    #[test]
    fn zero_weight_groups_are_irrelevant(m in matrix(), w in weights(), noise in prop::collection::vec(-1e6f64..1e6, 64)) {
        let w0 = {
            let mut a = w.as_array();
            a[3] = 0.0;
            if a.iter().all(|x| *x == 0.0) {
                a[0] = 1.0;
            }
            WeightVector::from_array(a).unwrap()
        };
        let mut i = 0;
        let changed = GroupedMatrix::new(
            m.targets().to_vec(),
            m.columns()
                .iter()
                .map(|c| {
                    if c.group != GroupId::Storage {
                        return c.clone();
                    }
                    let values = c.values.iter().map(|_| { i += 1; noise[i % noise.len()] }).collect();
                    Column { values, ..c.clone() }
                })
                .collect(),
        )
        .unwrap();
        prop_assert_eq!(
            score_native(&normalise(&m), &w0).unwrap(),
            score_native(&normalise(&changed), &w0).unwrap()
        );
    }

    #[test]
    fn weight_scaling_keeps_ranks(m in matrix(), w in weights(), c in 0.01f64..1.0) {
        let a = w.as_array();
        let scaled = WeightVector::from_array([a[0] * c, a[1] * c, a[2] * c, a[3] * c]).unwrap();
        let z = normalise(&m);
        let s1 = score_native(&z, &w).unwrap();
        let s2 = score_native(&z, &scaled).unwrap();
        for ((_, x), (_, y)) in s1.iter().zip(&s2) {
            prop_assert!(close(x * c, *y, 1e-9));
        }
        if let Some(expected) = stable_ranks(&s1, 1e-9) {
            prop_assert_eq!(ranks(&rank(&s2, RankMethod::Native)), expected);
        }
    }

    #[test]
    fn identical_history_doubles_scores(m in matrix(), w in weights()) {
        let z = normalise(&m);
        let native = score_native(&z, &w).unwrap();
        let hybrid = score_hybrid(&z, &z, &w).unwrap();
        for ((t1, n), (t2, h)) in native.iter().zip(&hybrid) {
            prop_assert_eq!(t1, t2);
            prop_assert_eq!(2.0 * n, *h);
        }
        prop_assert_eq!(ranks(&rank(&native, RankMethod::Native)), ranks(&rank(&hybrid, RankMethod::Hybrid)));
    }

    #[test]
    fn competition_ranking_matches_definition(values in prop::collection::vec(0u8..6, 1..40)) {
        // Few distinct values force ties.
        let scores: Vec<(String, f64)> = values.iter().enumerate().map(|(i, v)| (format!("t{i}"), f64::from(*v))).collect();
        let table = rank(&scores, RankMethod::Native);
        prop_assert_eq!(ranks(&table), stable_ranks(&scores, 0.0).unwrap());
        // Output is in rank order.
        prop_assert!(table.entries.windows(2).all(|p| p[0].rank <= p[1].rank));
    }
}

#[test]
fn constant_columns_are_score_neutral() {
    let m = GroupedMatrix::new(
        names(3),
        vec![
            Column { attribute_id: "a".into(), group: GroupId::MemoryProcess, values: vec![1.0, 2.0, 3.0] },
            Column { attribute_id: "b".into(), group: GroupId::LocalCommunication, values: vec![7.0; 3] },
            Column { attribute_id: "c".into(), group: GroupId::Computation, values: vec![1e-300; 3] },
            Column { attribute_id: "d".into(), group: GroupId::Storage, values: vec![4.0; 3] },
        ],
    )
    .unwrap();
    let w = WeightVector::from_array([0.0, 5.0, 5.0, 5.0]).unwrap();
    let s = score_native(&normalise(&m), &w).unwrap();
    assert!(s.iter().all(|(_, x)| *x == 0.0));
    assert!(rank(&s, RankMethod::Native).entries.iter().all(|e| e.rank == 1));
}

#[test]
fn tie_example() {
    let scores: Vec<(String, f64)> = [30.0, 20.0, 20.0, 10.0]
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("v{i}"), *s))
        .collect();
    let got: Vec<u32> = rank(&scores, RankMethod::Native).entries.iter().map(|e| e.rank).collect();
    assert_eq!(got, [1, 2, 2, 4]);
}

/// Scores recomputed from raw records with nothing but arithmetic, compared
/// with the full store-to-ranking path.
#[test]
fn independent_score_oracle() {
    let catalog = AttributeCatalog::builtin();
    let ts = Utc.with_ymd_and_hms(2026, 3, 1, 12, 0, 0).unwrap();
    let targets = ["alpha", "bravo", "charlie", "delta", "echo"];
    let mut records = Vec::new();
    for (ti, t) in targets.iter().enumerate() {
        for (ai, a) in catalog.attributes().iter().enumerate() {
            let value = 1.0 + ((ti * 31 + ai * 17) % 23) as f64 * 0.75 + ai as f64;
            records.push(BenchmarkRecord {
                target_name: t.to_string(),
                attribute_id: a.id.clone(),
                value,
                unit: a.unit.clone(),
                container_mem_mb: 100,
                cpu_cores: 1,
                run_id: "r1".into(),
                timestamp: ts,
                role: RecordRole::Current,
            });
        }
    }
    let w = [4.0, 3.0, 5.0, 0.0];
    let mut oracle = [0.0f64; 5];
    for g in GroupId::ALL {
        let attrs: Vec<_> = catalog.in_group(g).collect();
        for a in &attrs {
            let sign = if a.direction == Direction::LowerIsBetter { -1.0 } else { 1.0 };
            let col: Vec<f64> = targets
                .iter()
                .map(|t| {
                    sign * records
                        .iter()
                        .find(|r| r.target_name == *t && r.attribute_id == a.id)
                        .unwrap()
                        .value
                })
                .collect();
            let mean = col.iter().sum::<f64>() / 5.0;
            let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 5.0).sqrt();
            for (i, x) in col.iter().enumerate() {
                let z = if sd > 0.0 { (x - mean) / sd } else { 0.0 };
                oracle[i] += w[g.index()] * z / attrs.len() as f64;
            }
        }
    }
    let index = RecordIndex::from_records(records).unwrap();
    let table = rank_targets(&WeightVector::from_array(w).unwrap(), &index, RankMethod::Native, 100, &catalog).unwrap();
    for (i, t) in targets.iter().enumerate() {
        let e = table.entries.iter().find(|e| e.target == *t).unwrap();
        assert!((e.score - oracle[i]).abs() < 1e-12, "{t}: {} vs {}", e.score, oracle[i]);
        let expected_rank = 1 + oracle.iter().filter(|o| **o > oracle[i]).count() as u32;
        assert_eq!(e.rank, expected_rank);
    }
}
