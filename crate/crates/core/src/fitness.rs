//! Tolerance-window accuracy, the fitness metric for topology search.
//!
//! Occupant counts are integers, so predictions are rounded before
//! comparison and a miss by at most ±n still counts as correct.

use thiserror::Error;

/// Errors from metric evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitnessError {
    /// Metric inputs were empty.
    #[error("empty input: {0}")]
    Empty(&'static str),
    /// Paired inputs differ in length.
    #[error("length mismatch: {predictions} predictions vs {actuals} actuals")]
    LengthMismatch {
        /// Prediction count.
        predictions: usize,
        /// Actual count.
        actuals: usize,
    },
}

/// Occupant-count tolerance: a prediction within ±n of the actual
/// count is treated as correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ToleranceWindow {
    /// Allowed absolute deviation in occupants.
    pub n: u32,
}

impl ToleranceWindow {
    /// Window with the given tolerance.
    pub fn new(n: u32) -> Self {
        Self { n }
    }
}

impl Default for ToleranceWindow {
    fn default() -> Self {
        Self { n: 20 }
    }
}

/// Fraction of predictions with |round(prediction) − actual| ≤ n.
///
/// Non-finite predictions never fall inside the window, so they count
/// as misses rather than poisoning the score.
pub fn window_accuracy(
    predictions: &[f64],
    actuals: &[f64],
    window: ToleranceWindow,
) -> Result<f64, FitnessError> {
    if predictions.is_empty() {
        return Err(FitnessError::Empty("predictions"));
    }
    if predictions.len() != actuals.len() {
        return Err(FitnessError::LengthMismatch {
            predictions: predictions.len(),
            actuals: actuals.len(),
        });
    }
    let tolerance = f64::from(window.n);
    let hits = predictions
        .iter()
        .zip(actuals)
        .filter(|(p, a)| (libm::round(**p) - **a).abs() <= tolerance)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn window_examples() {
        let a = window_accuracy(&[150.0], &[167.0], ToleranceWindow::new(20)).unwrap();
        assert_eq!(a, 1.0);
        let a = window_accuracy(&[150.0], &[167.0], ToleranceWindow::new(10)).unwrap();
        assert_eq!(a, 0.0);
    }

    #[test]
    fn rounding_happens_before_comparison() {
        // 166.6 rounds to 167, exactly on target
        let a = window_accuracy(&[166.6], &[167.0], ToleranceWindow::new(0)).unwrap();
        assert_eq!(a, 1.0);
        // 166.4 rounds to 166, one off
        let a = window_accuracy(&[166.4], &[167.0], ToleranceWindow::new(0)).unwrap();
        assert_eq!(a, 0.0);
    }

    #[test]
    fn fraction_over_mixed_batch() {
        let preds = [10.0, 50.0, 100.0, 0.0];
        let actuals = [12.0, 80.0, 101.0, 30.0];
        let a = window_accuracy(&preds, &actuals, ToleranceWindow::new(5)).unwrap();
        assert_eq!(a, 0.5);
    }

    #[test]
    fn accuracy_stays_in_unit_interval_and_grows_with_n() {
        let preds: vec::Vec<f64> = (0..100).map(|i| i as f64 * 1.7 - 20.0).collect();
        let actuals: vec::Vec<f64> = (0..100).map(|i| i as f64 * 2.0 - 30.0).collect();
        let mut previous = 0.0;
        for n in [0u32, 1, 5, 20, 50, 200] {
            let a = window_accuracy(&preds, &actuals, ToleranceWindow::new(n)).unwrap();
            assert!((0.0..=1.0).contains(&a));
            assert!(a >= previous);
            previous = a;
        }
        assert_eq!(previous, 1.0);
    }

    #[test]
    fn non_finite_predictions_count_as_misses() {
        let a = window_accuracy(
            &[f64::NAN, f64::INFINITY, 10.0],
            &[10.0, 10.0, 10.0],
            ToleranceWindow::new(20),
        )
        .unwrap();
        assert!((a - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            window_accuracy(&[], &[], ToleranceWindow::default()),
            Err(FitnessError::Empty(_))
        ));
        assert!(matches!(
            window_accuracy(&[1.0], &[1.0, 2.0], ToleranceWindow::default()),
            Err(FitnessError::LengthMismatch { .. })
        ));
    }
}
