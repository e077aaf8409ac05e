//! Synthetic hourly household load, used when the UCI file is unavailable.

use rand_distr::{Distribution, Normal};

use crate::rng::{rng_from, stream};

/// Hourly active power in kW: daily morning/evening peaks, a weekend uplift, a
/// slow seasonal drift and AR(1) noise. Always strictly positive.
pub fn household_load(hours: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from(seed, &[stream::SYNTHETIC]);
    let shock = Normal::new(0.0, 0.12).expect("valid normal");
    let mut noise = 0.0;
    (0..hours)
        .map(|t| {
            let hour = (t % 24) as f64;
            let day = t / 24;
            let tau = std::f64::consts::TAU;
            let morning = 0.6 * (-((hour - 8.0) / 1.5).powi(2)).exp();
            let evening = 1.2 * (-((hour - 20.0) / 2.0).powi(2)).exp();
            let daily = 0.25 * (tau * hour / 24.0).sin();
            let weekend = if day % 7 >= 5 { 0.25 } else { 0.0 };
            let season = 0.3 * (tau * t as f64 / (24.0 * 365.0)).cos();
            noise = 0.6 * noise + shock.sample(&mut rng);
            (0.9 + morning + evening + daily + weekend + season + noise).max(0.05)
        })
        .collect()
}

/// Noiseless sine series in [0, 1] with the given period in samples.
pub fn sine(len: usize, period: f64) -> Vec<f64> {
    (0..len).map(|t| 0.5 + 0.4 * (std::f64::consts::TAU * t as f64 / period).sin()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_positive() {
        let a = household_load(24 * 30, 1);
        assert_eq!(a, household_load(24 * 30, 1));
        assert_ne!(a, household_load(24 * 30, 2));
        assert!(a.iter().all(|&x| x > 0.0 && x.is_finite()));
    }
}
