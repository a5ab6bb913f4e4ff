// SPDX-License-Identifier: Apache-2.0

//! Text and CSV rendering of rank tables, comparisons and run summaries.

use std::fmt::Write as _;

use benchlite_core::{RankComparison, RankTable};

use crate::files::FixtureComparison;
use crate::orchestrator::{RunResult, TargetRunStatus};

fn width<'a>(names: impl Iterator<Item = &'a str>, min: usize) -> usize {
    names.map(str::len).max().unwrap_or(0).max(min)
}

/// Aligned table: rank, target, score.
pub fn rank_table_text(table: &RankTable) -> String {
    let w = width(table.entries.iter().map(|e| e.target.as_str()), 6);
    let mut out = format!("{:>4}  {:<w$}  {:>10}\n", "rank", "target", "score");
    for e in &table.entries {
        let _ = writeln!(out, "{:>4}  {:<w$}  {:>10.4}", e.rank, e.target, e.score);
    }
    out
}

/// One `target|score|rank` line per entry, readable back as a rank file.
pub fn rank_table_lines(table: &RankTable) -> String {
    table
        .entries
        .iter()
        .map(|e| format!("{}|{:.6}|{}\n", e.target, e.score, e.rank))
        .collect()
}

fn summary_lines(cmp: &RankComparison) -> String {
    format!("d_s={}\ncorr={:.1}%\n", cmp.distance_sum, cmp.correlation_pct)
}

/// Per-target rank distances followed by `d_s=` and `corr=` lines.
pub fn comparison_text(cmp: &RankComparison) -> String {
    let w = width(cmp.rows.iter().map(|r| r.target.as_str()), 6);
    let mut out = format!("{:<w$}  {:>4}  {:>4}  {:>4}\n", "target", "Rp", "Re", "|d|");
    for r in &cmp.rows {
        let _ = writeln!(
            out,
            "{:<w$}  {:>4}  {:>4}  {:>4}",
            r.target, r.benchmark_rank, r.empirical_rank, r.distance
        );
    }
    out.push_str(&summary_lines(cmp));
    out
}

pub fn comparison_csv(cmp: &RankComparison) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["target", "benchmark_rank", "empirical_rank", "distance"]);
    for r in &cmp.rows {
        let _ = w.write_record([
            r.target.clone(),
            r.benchmark_rank.to_string(),
            r.empirical_rank.to_string(),
            r.distance.to_string(),
        ]);
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}

/// One line per fixture configuration: key, `d_s=`, `corr=`.
pub fn fixture_summary_text(rows: &[(FixtureComparison, RankComparison)]) -> String {
    let w = width(rows.iter().map(|(f, _)| f.table.as_str()), 0) + 30;
    rows.iter()
        .map(|(f, c)| format!("{:<w$} d_s={:<3} corr={:.1}%\n", f.key(), c.distance_sum, c.correlation_pct))
        .collect()
}

/// Correlation and distance per configuration, for plotting.
pub fn fixture_summary_csv(rows: &[(FixtureComparison, RankComparison)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["table", "case", "mode", "method", "size_mb", "d_s", "corr_pct"]);
    for (f, c) in rows {
        let _ = w.write_record([
            f.table.clone(),
            f.case.to_string(),
            f.mode.as_str().to_string(),
            f.method.as_str().to_string(),
            f.size_mb.to_string(),
            c.distance_sum.to_string(),
            c.correlation_pct.to_string(),
        ]);
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}

fn status_detail(status: &TargetRunStatus) -> String {
    match status {
        TargetRunStatus::Failed(reason) => format!(" ({reason})"),
        _ => String::new(),
    }
}

/// Per-target status and duration, then a totals line.
pub fn run_summary_text(result: &RunResult) -> String {
    let w = width(result.outcomes.iter().map(|o| o.target.as_str()), 6);
    let mut out = format!("run {}\n", result.run_id);
    for o in &result.outcomes {
        let _ = writeln!(
            out,
            "{:<w$}  {:<9}  {:>9.3}s  {:>3} records{}",
            o.target,
            o.status.label(),
            o.duration.as_secs_f64(),
            o.records,
            status_detail(&o.status)
        );
    }
    let _ = writeln!(
        out,
        "{}/{} targets succeeded in {:.3}s",
        result.succeeded(),
        result.outcomes.len(),
        result.elapsed.as_secs_f64()
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use benchlite_core::{compare, rank, RankMethod};

    #[test]
    fn rank_lines_round_trip_through_rank_file_format() {
        let table = rank(
            &[("a".into(), 1.5), ("b".into(), -1.5), ("c".into(), 1.5)],
            RankMethod::Native,
        );
        assert_eq!(rank_table_lines(&table), "a|1.500000|1\nc|1.500000|1\nb|-1.500000|3\n");
        assert!(rank_table_text(&table).lines().nth(3).unwrap().starts_with("   3  b"));
    }

    #[test]
    fn comparison_footer() {
        let b = RankTable::from_ranks(RankMethod::Native, [("x", 1), ("y", 2), ("z", 3)]);
        let e = RankTable::from_ranks(RankMethod::Empirical, [("x", 2), ("y", 1), ("z", 3)]);
        let cmp = compare(&b, &e).unwrap();
        let text = comparison_text(&cmp);
        assert!(text.ends_with("d_s=2\ncorr=50.0%\n"), "{text}");
        let csv = comparison_csv(&cmp);
        assert_eq!(csv.lines().next(), Some("target,benchmark_rank,empirical_rank,distance"));
        assert_eq!(csv.lines().count(), 4);
    }
}
