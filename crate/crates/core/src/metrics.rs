//! Blocked/dropped call rates and prefix curves over an event log, plus the
//! report writers. Everything here is a pure function of log content; rates
//! with a zero denominator are defined as 0 so curves are plottable from
//! the first request.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::admission::{CallId, CallKind, Outcome};
use crate::simulator::EventLog;

/// Terminal counts and rates of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSummary {
    pub requested_new: u64,
    pub blocked_new: u64,
    pub requested_handoff: u64,
    pub dropped_handoff: u64,
    /// blocked_new / requested_new, or 0 when nothing was requested.
    pub blocked_rate: f64,
    /// dropped_handoff / requested_handoff, or 0 when nothing was requested.
    pub dropped_rate: f64,
}

/// Running rate after the n-th request of one kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub n: u64,
    pub rate: f64,
}

/// Blocked-rate curve over new calls and dropped-rate curve over handoffs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrefixCurves {
    pub new_calls: Vec<RatePoint>,
    pub handoff_calls: Vec<RatePoint>,
}

pub const CURVES_CSV_HEADER: &str = "n,kind,rate";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("malformed log record for call {call_id}: {kind} call with outcome {outcome}")]
    MalformedRecord {
        call_id: CallId,
        kind: CallKind,
        outcome: Outcome,
    },
    #[error("curves CSV line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
    #[error("curves CSV is missing the `{CURVES_CSV_HEADER}` header")]
    MissingCsvHeader,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn rate(numerator: u64, denominator: u64) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// Partition the log's decisions by kind and outcome.
pub fn summarize(log: &EventLog) -> Result<RateSummary, MetricsError> {
    let mut summary = RateSummary {
        requested_new: 0,
        blocked_new: 0,
        requested_handoff: 0,
        dropped_handoff: 0,
        blocked_rate: 0.0,
        dropped_rate: 0.0,
    };
    for record in log.records() {
        match (record.kind, record.outcome) {
            (CallKind::New, Outcome::Accepted) => summary.requested_new += 1,
            (CallKind::New, Outcome::Blocked) => {
                summary.requested_new += 1;
                summary.blocked_new += 1;
            }
            (CallKind::Handoff, Outcome::Accepted) => summary.requested_handoff += 1,
            (CallKind::Handoff, Outcome::Dropped) => {
                summary.requested_handoff += 1;
                summary.dropped_handoff += 1;
            }
            (kind, outcome) => {
                return Err(MetricsError::MalformedRecord {
                    call_id: record.call_id,
                    kind,
                    outcome,
                })
            }
        }
    }
    summary.blocked_rate = rate(summary.blocked_new, summary.requested_new);
    summary.dropped_rate = rate(summary.dropped_handoff, summary.requested_handoff);
    Ok(summary)
}

/// Running blocked/dropped rates after each request of the respective kind.
/// The final point of each curve equals the [`summarize`] rate.
pub fn prefix_curves(log: &EventLog) -> Result<PrefixCurves, MetricsError> {
    let mut curves = PrefixCurves::default();
    let mut new_seen = 0;
    let mut new_blocked = 0;
    let mut handoff_seen = 0;
    let mut handoff_dropped = 0;
    for record in log.records() {
        match (record.kind, record.outcome) {
            (CallKind::New, outcome) => {
                new_seen += 1;
                if outcome == Outcome::Blocked {
                    new_blocked += 1;
                } else if outcome != Outcome::Accepted {
                    return Err(MetricsError::MalformedRecord {
                        call_id: record.call_id,
                        kind: record.kind,
                        outcome,
                    });
                }
                curves.new_calls.push(RatePoint {
                    n: new_seen,
                    rate: rate(new_blocked, new_seen),
                });
            }
            (CallKind::Handoff, outcome) => {
                handoff_seen += 1;
                if outcome == Outcome::Dropped {
                    handoff_dropped += 1;
                } else if outcome != Outcome::Accepted {
                    return Err(MetricsError::MalformedRecord {
                        call_id: record.call_id,
                        kind: record.kind,
                        outcome,
                    });
                }
                curves.handoff_calls.push(RatePoint {
                    n: handoff_seen,
                    rate: rate(handoff_dropped, handoff_seen),
                });
            }
        }
    }
    Ok(curves)
}

/// Serialize both curves as `n,kind,rate` rows, full float precision.
pub fn curves_to_csv(curves: &PrefixCurves) -> String {
    let mut out = String::from(CURVES_CSV_HEADER);
    out.push('\n');
    for point in &curves.new_calls {
        out.push_str(&format!("{},new,{}\n", point.n, point.rate));
    }
    for point in &curves.handoff_calls {
        out.push_str(&format!("{},handoff,{}\n", point.n, point.rate));
    }
    out
}

/// Inverse of [`curves_to_csv`].
pub fn curves_from_csv(text: &str) -> Result<PrefixCurves, MetricsError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CURVES_CSV_HEADER => {}
        _ => return Err(MetricsError::MissingCsvHeader),
    }
    let mut curves = PrefixCurves::default();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let line_no = i + 2;
        let malformed = |reason: String| MetricsError::MalformedCsv {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(malformed(format!(
                "expected 3 fields, got {}",
                fields.len()
            )));
        }
        let n = fields[0]
            .parse::<u64>()
            .map_err(|e| malformed(format!("n: {e}")))?;
        let point_rate = fields[2]
            .parse::<f64>()
            .map_err(|e| malformed(format!("rate: {e}")))?;
        match fields[1] {
            "new" => curves.new_calls.push(RatePoint {
                n,
                rate: point_rate,
            }),
            "handoff" => curves.handoff_calls.push(RatePoint {
                n,
                rate: point_rate,
            }),
            other => return Err(malformed(format!("unknown kind `{other}`"))),
        }
    }
    Ok(curves)
}

/// Files produced by [`write_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub summary: PathBuf,
    pub curves: PathBuf,
}

pub fn summary_text(summary: &RateSummary) -> String {
    format!(
        "requested new calls:     {}\n\
         blocked new calls:       {}\n\
         blocked call rate:       {}\n\
         requested handoff calls: {}\n\
         dropped handoff calls:   {}\n\
         dropped call rate:       {}\n",
        summary.requested_new,
        summary.blocked_new,
        summary.blocked_rate,
        summary.requested_handoff,
        summary.dropped_handoff,
        summary.dropped_rate,
    )
}

/// Write `summary.txt` and `curves.csv` into `destination`, creating the
/// directory when needed.
pub fn write_report(
    summary: &RateSummary,
    curves: &PrefixCurves,
    destination: &Path,
) -> Result<ReportPaths, MetricsError> {
    fs::create_dir_all(destination)?;
    let paths = ReportPaths {
        summary: destination.join("summary.txt"),
        curves: destination.join("curves.csv"),
    };
    fs::write(&paths.summary, summary_text(summary))?;
    fs::write(&paths.curves, curves_to_csv(curves))?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{builtin_scenario, Policy};
    use crate::simulator::{run, EventLog};

    fn default_log(policy: Policy) -> EventLog {
        let mut scenario = builtin_scenario("table2_default").unwrap();
        scenario.policy = policy;
        run(&scenario).unwrap()
    }

    #[test]
    fn empty_log_summarizes_to_zeroes() {
        let summary = summarize(&EventLog::default()).unwrap();
        assert_eq!(summary.requested_new, 0);
        assert_eq!(summary.blocked_rate, 0.0);
        assert_eq!(summary.dropped_rate, 0.0);
    }

    #[test]
    fn blocked_rate_is_blocked_over_requested() {
        let log = default_log(Policy::Hard);
        let summary = summarize(&log).unwrap();
        // 64 new requests against 600 kbps: 32 fit, 32 blocked.
        assert_eq!(summary.requested_new, 64);
        assert_eq!(summary.blocked_new, 32);
        assert_eq!(summary.blocked_rate, 0.5);
        assert_eq!(summary.requested_handoff, 0);
        assert_eq!(summary.dropped_rate, 0.0);
    }

    #[test]
    fn truncated_hard_run_matches_the_prefix_sum_count() {
        // First 40 cycle requests against 600 kbps: 32 fit (4 cycles of
        // 150), requests 33..=40 are blocked, so the rate is 8/40.
        let mut scenario = builtin_scenario("table2_default").unwrap();
        scenario.policy = Policy::Hard;
        scenario.workload.total_requests = 40;
        let summary = summarize(&run(&scenario).unwrap()).unwrap();
        assert_eq!(summary.blocked_new, 8);
        assert_eq!(summary.blocked_rate, 0.2);
    }

    #[test]
    fn prefix_curve_final_point_equals_summary() {
        for policy in [Policy::Hard, Policy::SoftStrict, Policy::SoftElastic] {
            let log = default_log(policy);
            let summary = summarize(&log).unwrap();
            let curves = prefix_curves(&log).unwrap();
            let last = curves.new_calls.last().unwrap();
            assert_eq!(last.n, summary.requested_new);
            assert_eq!(last.rate, summary.blocked_rate);
        }
    }

    #[test]
    fn single_accepted_new_call_curve() {
        let mut scenario = builtin_scenario("table2_default").unwrap();
        scenario.workload.total_requests = 1;
        let curves = prefix_curves(&run(&scenario).unwrap()).unwrap();
        assert_eq!(curves.new_calls, vec![RatePoint { n: 1, rate: 0.0 }]);
        assert!(curves.handoff_calls.is_empty());
    }

    #[test]
    fn single_dropped_handoff_curve() {
        let mut scenario = builtin_scenario("table2_default").unwrap();
        scenario.capacity = 1.0;
        scenario.workload.total_requests = 1;
        scenario.workload.kind_pattern = crate::scenario::KindPattern::AllHandoff;
        let curves = prefix_curves(&run(&scenario).unwrap()).unwrap();
        assert_eq!(curves.handoff_calls, vec![RatePoint { n: 1, rate: 1.0 }]);
        assert!(curves.new_calls.is_empty());
    }

    #[test]
    fn blocked_rate_is_non_decreasing_without_departures() {
        let curves = prefix_curves(&default_log(Policy::Hard)).unwrap();
        let first_block = curves.new_calls.iter().position(|p| p.rate > 0.0).unwrap();
        for window in curves.new_calls[first_block..].windows(2) {
            assert!(window[1].rate >= window[0].rate - f64::EPSILON);
        }
    }

    #[test]
    fn summarize_is_a_pure_function_of_content() {
        let log = default_log(Policy::SoftStrict);
        let reparsed = EventLog::from_csv(&log.to_csv()).unwrap();
        assert_eq!(summarize(&log).unwrap(), summarize(&reparsed).unwrap());
    }

    #[test]
    fn curves_csv_round_trips() {
        let curves = prefix_curves(&default_log(Policy::SoftStrict)).unwrap();
        let csv = curves_to_csv(&curves);
        let parsed = curves_from_csv(&csv).unwrap();
        assert_eq!(parsed, curves);
    }

    #[test]
    fn empty_curves_serialize_to_header_only() {
        let csv = curves_to_csv(&PrefixCurves::default());
        assert_eq!(csv, format!("{CURVES_CSV_HEADER}\n"));
        assert_eq!(curves_from_csv(&csv).unwrap(), PrefixCurves::default());
    }

    #[test]
    fn soft_and_hard_reports_share_the_n_grid() {
        let soft = prefix_curves(&default_log(Policy::SoftStrict)).unwrap();
        let hard = prefix_curves(&default_log(Policy::Hard)).unwrap();
        let ns = |c: &PrefixCurves| c.new_calls.iter().map(|p| p.n).collect::<Vec<_>>();
        assert_eq!(ns(&soft), ns(&hard));
        for (s, h) in soft.new_calls.iter().zip(&hard.new_calls) {
            assert!(s.rate <= h.rate + f64::EPSILON);
        }
    }

    #[test]
    fn write_report_emits_both_files() {
        let dir = std::env::temp_dir().join(format!("softqos-report-{}", std::process::id()));
        let log = default_log(Policy::Hard);
        let summary = summarize(&log).unwrap();
        let curves = prefix_curves(&log).unwrap();
        let paths = write_report(&summary, &curves, &dir).unwrap();
        let text = std::fs::read_to_string(&paths.summary).unwrap();
        assert!(text.contains("blocked call rate:       0.5"));
        let parsed = curves_from_csv(&std::fs::read_to_string(&paths.curves).unwrap()).unwrap();
        assert_eq!(parsed, curves);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
