//! Unit conversions between configuration units and SI.

/// Seconds in one million years (Julian year).
pub const SECONDS_PER_MA: f64 = 3.15576e13;

/// Offset between the Kelvin and Celsius scales.
pub const KELVIN_OFFSET: f64 = 273.15;

pub fn ma_to_seconds(ma: f64) -> f64 {
    ma * SECONDS_PER_MA
}

pub fn seconds_to_ma(s: f64) -> f64 {
    s / SECONDS_PER_MA
}

/// Sedimentation rate in m/Ma to m/s.
pub fn rate_to_si(m_per_ma: f64) -> f64 {
    m_per_ma / SECONDS_PER_MA
}
