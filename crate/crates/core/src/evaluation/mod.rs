//! Accuracy metrics, the Cramer-Rao reference and the centralized baseline.

mod compare;
mod crlb;
mod nesterov;
mod trace;

pub use compare::{compare_runs, summary_csv, RunSummary};
pub use crlb::{crlb_rmse, Crlb};
pub use nesterov::{nesterov_sf, relaxed_cost, relaxed_gradient, NesterovOptions, StepPolicy};
pub use trace::{iterations_to_plateau, mean_series, RunTrace, TraceRow, TRACE_COLUMNS};

use crate::error::{Error, Result};
use crate::netmodel::Point;

/// `sqrt((1/N) Σ_i ‖x_i − p_i‖²)` over all nodes.
pub fn rmse(estimates: &[Point], truth: &[Point]) -> Result<f64> {
    if estimates.len() != truth.len() {
        return Err(Error::SizeMismatch(estimates.len(), truth.len()));
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = estimates.iter().zip(truth).map(|(e, t)| (e - t).norm_squared()).sum();
    Ok((sum / truth.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_examples() {
        let t = [Point::new(0.1, 0.2, 0.0)];
        assert_eq!(rmse(&t, &t).unwrap(), 0.0);
        let e = [Point::new(0.4, 0.6, 0.0)];
        assert!((rmse(&e, &t).unwrap() - 0.5).abs() < 1e-15);
        let truth = [Point::zeros(), Point::zeros()];
        let est = [Point::zeros(), Point::new(1.0, 0.0, 0.0)];
        assert!((rmse(&est, &truth).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(rmse(&est, &truth[..1]), Err(Error::SizeMismatch(2, 1))));
    }
}
