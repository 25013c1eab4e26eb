use std::fmt::Write as _;

use crate::evaluation::RunTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algorithm: String,
    pub final_rmse: f64,
    /// First iteration with RMSE at or below the threshold.
    pub iterations_to_threshold: Option<usize>,
    pub total_messages: usize,
    /// `final_rmse / crlb`, when a bound is known.
    pub crlb_ratio: Option<f64>,
}

/// One summary row per trace.
pub fn compare_runs(traces: &[RunTrace], threshold: f64, crlb: Option<f64>) -> Vec<RunSummary> {
    traces
        .iter()
        .map(|t| {
            let final_rmse = t.final_rmse().unwrap_or(f64::NAN);
            RunSummary {
                algorithm: t.algorithm.clone(),
                final_rmse,
                iterations_to_threshold: t.iterations_to(threshold),
                total_messages: t.total_messages(),
                crlb_ratio: crlb.map(|b| final_rmse / b),
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[RunSummary]) -> String {
    let mut out = String::from("algorithm,final_rmse,iterations_to_threshold,total_messages,crlb_ratio\n");
    for r in rows {
        let iters = r.iterations_to_threshold.map(|v| v.to_string()).unwrap_or_default();
        let ratio = r.crlb_ratio.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{}", r.algorithm, r.final_rmse, iters, r.total_messages, ratio);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::TraceRow;

    fn trace(name: &str, series: &[f64]) -> RunTrace {
        let mut t = RunTrace::new(name);
        for (k, &v) in series.iter().enumerate() {
            t.push(TraceRow {
                iter: k + 1,
                rmse: v,
                max_gap: 0.0,
                mean_gap: 0.0,
                nonconvex_frac: 0.0,
                messages: 10,
                elapsed_ms: 0.0,
            });
        }
        t
    }

    #[test]
    fn identical_traces_identical_rows() {
        let a = trace("admm-sf", &[0.5, 0.2, 0.1]);
        let rows = compare_runs(&[a.clone(), a], 0.2, Some(0.05));
        assert_eq!(rows[0], rows[1]);
        assert_eq!(rows[0].iterations_to_threshold, Some(2));
        assert_eq!(rows[0].total_messages, 30);
        assert_eq!(rows[0].crlb_ratio, Some(2.0));
    }

    #[test]
    fn empty_list_gives_empty_table() {
        assert!(compare_runs(&[], 0.1, None).is_empty());
        assert_eq!(summary_csv(&[]).lines().count(), 1);
    }
}
