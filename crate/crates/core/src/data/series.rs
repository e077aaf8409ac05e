use crate::scalar::Scalar;

/// Input length of every forecasting window.
pub const WINDOW_LEN: usize = 24;

/// Min-max bounds of one feature, taken from the training portion only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationStats<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> NormalizationStats<T> {
    /// Returns `None` for an empty series or one containing a non-finite value.
    pub fn from_series(series: &[T]) -> Option<Self> {
        let mut it = series.iter().copied();
        let first = it.next()?;
        let (mut min, mut max) = (first, first);
        for v in series {
            if !v.is_finite() {
                return None;
            }
            min = min.min(*v);
            max = max.max(*v);
        }
        Some(NormalizationStats { min, max })
    }

    pub fn is_degenerate(&self) -> bool {
        self.max <= self.min
    }

    #[inline]
    pub fn scale(&self, x: T) -> T {
        if self.is_degenerate() {
            T::zero()
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    #[inline]
    pub fn unscale(&self, y: T) -> T {
        if self.is_degenerate() {
            self.min
        } else {
            y * (self.max - self.min) + self.min
        }
    }
}

/// Maps `x` to `(x - min) / (max - min)`; a degenerate range maps everything to 0.
pub fn normalize<T: Scalar>(series: &[T], stats: &NormalizationStats<T>) -> Vec<T> {
    series.iter().map(|&x| stats.scale(x)).collect()
}

pub fn denormalize<T: Scalar>(series: &[T], stats: &NormalizationStats<T>) -> Vec<T> {
    series.iter().map(|&y| stats.unscale(y)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Window<T> {
    pub input: Vec<T>,
    pub target: T,
}

/// Supervised windows over a single normalized series.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SlidingWindowDataset<T> {
    pub windows: Vec<Window<T>>,
}

impl<T: Scalar> SlidingWindowDataset<T> {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Copies a contiguous index range into a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        SlidingWindowDataset { windows: self.windows[range].to_vec() }
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Self>) -> Self {
        SlidingWindowDataset { windows: parts.into_iter().flat_map(|p| p.windows.iter().cloned()).collect() }
    }

    pub fn targets(&self) -> Vec<T> {
        self.windows.iter().map(|w| w.target).collect()
    }
}

/// Stride-1 windows: window `k` reads `series[k..k+window_len]` and targets
/// `series[k + window_len + horizon - 1]`.
pub fn make_windows<T: Scalar>(series: &[T], window_len: usize, horizon: usize) -> SlidingWindowDataset<T> {
    let horizon = horizon.max(1);
    let count = series.len().saturating_sub(window_len + horizon - 1);
    let windows = (0..count)
        .map(|k| Window { input: series[k..k + window_len].to_vec(), target: series[k + window_len + horizon - 1] })
        .collect();
    SlidingWindowDataset { windows }
}
