use crate::scalar::Scalar;

/// Shannon-form uplink rate `b·log2(1 + p·g/(b·n0))` in bits/s.
pub fn achievable_rate<T: Scalar>(bandwidth: T, power: T, gain: T, noise_density: T) -> T {
    bandwidth * (power * gain / (bandwidth * noise_density)).ln_1p() / T::lit(std::f64::consts::LN_2)
}

pub fn dbm_to_watts<T: Scalar>(dbm: T) -> T {
    T::lit(10.0).powf((dbm - T::lit(30.0)) / T::lit(10.0))
}

pub fn watts_to_dbm<T: Scalar>(watts: T) -> T {
    T::lit(10.0) * watts.log10() + T::lit(30.0)
}
