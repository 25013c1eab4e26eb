use std::fmt::Write as _;

use crate::netmodel::Point;

/// Column header of the per-iteration CSV.
pub const TRACE_COLUMNS: &str = "iter,rmse,max_gap,mean_gap,nonconvex_frac,messages,elapsed_ms";

/// One round of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub rmse: f64,
    pub max_gap: f64,
    pub mean_gap: f64,
    pub nonconvex_frac: f64,
    /// Directed messages exchanged in this round.
    pub messages: usize,
    pub elapsed_ms: f64,
}

/// Per-iteration record of a run plus the final estimates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub algorithm: String,
    /// `key=value` pairs written as comment lines above the CSV header.
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<TraceRow>,
    pub final_estimates: Vec<Point>,
}

impl RunTrace {
    pub fn new(algorithm: impl Into<String>) -> Self {
        Self {
            algorithm: algorithm.into(),
            ..Self::default()
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: TraceRow) {
        debug_assert!(self.rows.last().map_or(true, |last| last.iter < row.iter));
        self.rows.push(row);
    }

    pub fn final_rmse(&self) -> Option<f64> {
        self.rows.last().map(|r| r.rmse)
    }

    pub fn rmse_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rmse).collect()
    }

    pub fn total_messages(&self) -> usize {
        self.rows.iter().map(|r| r.messages).sum()
    }

    /// First iteration whose RMSE is at or below `level`.
    pub fn iterations_to(&self, level: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.rmse <= level).map(|r| r.iter)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# algorithm={}", self.algorithm);
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(TRACE_COLUMNS);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.iter, r.rmse, r.max_gap, r.mean_gap, r.nonconvex_frac, r.messages, r.elapsed_ms
            );
        }
        out
    }
}

/// Plateau detection: the first iteration after which RMSE stays within
/// `rel_tol` of its final value.
pub fn iterations_to_plateau(series: &[f64], rel_tol: f64) -> Option<usize> {
    let last = *series.last()?;
    let band = last.abs() * rel_tol;
    let mut first = series.len();
    for (k, v) in series.iter().enumerate().rev() {
        if (v - last).abs() <= band {
            first = k;
        } else {
            break;
        }
    }
    Some(first + 1)
}

/// Element-wise mean of equally long series.
pub fn mean_series(series: &[Vec<f64>]) -> Vec<f64> {
    let Some(len) = series.iter().map(Vec::len).min() else {
        return Vec::new();
    };
    (0..len)
        .map(|k| series.iter().map(|s| s[k]).sum::<f64>() / series.len() as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iter: usize, rmse: f64) -> TraceRow {
        TraceRow {
            iter,
            rmse,
            max_gap: 0.0,
            mean_gap: 0.0,
            nonconvex_frac: 0.0,
            messages: 4,
            elapsed_ms: 0.0,
        }
    }

    #[test]
    fn header_only_when_empty() {
        let csv = RunTrace::new("admm-h").with_meta("seed", 3).to_csv();
        assert_eq!(csv, format!("# algorithm=admm-h\n# seed=3\n{TRACE_COLUMNS}\n"));
    }

    #[test]
    fn plateau_and_levels() {
        let series = [1.0, 0.5, 0.3, 0.21, 0.2, 0.2];
        assert_eq!(iterations_to_plateau(&series, 0.06), Some(4));
        let mut t = RunTrace::new("x");
        for (k, v) in series.iter().enumerate() {
            t.push(row(k + 1, *v));
        }
        assert_eq!(t.iterations_to(0.3), Some(3));
        assert_eq!(t.iterations_to(0.1), None);
        assert_eq!(t.total_messages(), 24);
    }
}
