use crate::error::{arg_err, Result};
use crate::scalar::Scalar;

use super::series::{make_windows, normalize, NormalizationStats, SlidingWindowDataset, WINDOW_LEN};

/// A chronologically split, normalized forecasting problem.
#[derive(Clone, Debug)]
pub struct ForecastData<T> {
    pub train: SlidingWindowDataset<T>,
    pub test: SlidingWindowDataset<T>,
    pub stats: NormalizationStats<T>,
}

/// Splits an hourly series at `train_fraction`, fits min-max bounds on the
/// training part and windows both parts independently.
pub fn prepare<T: Scalar>(series: &[f64], train_fraction: f64) -> Result<ForecastData<T>> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return arg_err(format!("train fraction {train_fraction} outside (0, 1)"));
    }
    let series: Vec<T> = series.iter().map(|&x| T::lit(x)).collect();
    let cut = (series.len() as f64 * train_fraction).round() as usize;
    let (head, tail) = series.split_at(cut);
    let Some(stats) = NormalizationStats::from_series(head) else {
        return arg_err("training portion is empty or non-finite");
    };
    Ok(ForecastData {
        train: make_windows(&normalize(head, &stats), WINDOW_LEN, 1),
        test: make_windows(&normalize(tail, &stats), WINDOW_LEN, 1),
        stats,
    })
}
