use crate::error::{arg_err, Result};

/// Convex majorant of `x·p`, tight at `(x_i, p_i)`:
/// `½(p_i/x_i)x² + ½(x_i/p_i)p²`.
pub fn convexified_bilinear(x: f64, p: f64, x_i: f64, p_i: f64) -> Result<f64> {
    if !(x_i > 0.0 && p_i > 0.0) {
        return arg_err(format!("expansion point ({x_i}, {p_i}) must be positive"));
    }
    Ok(0.5 * (p_i / x_i) * x * x + 0.5 * (x_i / p_i) * p * p)
}

/// Concave minorant of `ln(1 + z)` with `z = p·g/(b·n0)`, tight at `p = p_i`:
/// `ln(1 + z_i) + z_i/(1 + z_i) - z_i²/((1 + z_i)·z)`.
pub fn convexified_rate_lower(p: f64, p_i: f64, gain: f64, bandwidth: f64, noise_density: f64) -> Result<f64> {
    if !(p > 0.0 && p_i > 0.0 && gain > 0.0 && bandwidth > 0.0 && noise_density > 0.0) {
        return arg_err("rate minorant needs positive power, expansion point, gain, bandwidth and noise");
    }
    let scale = gain / (bandwidth * noise_density);
    Ok(rate_minorant(scale * p, scale * p_i))
}

/// The minorant in terms of SNRs directly.
pub(crate) fn rate_minorant(z: f64, z_i: f64) -> f64 {
    z_i.ln_1p() + z_i / (1.0 + z_i) - z_i * z_i / ((1.0 + z_i) * z)
}
