//! Physical constants (SI).

/// Magnetic flux quantum h/2e in Wb.
pub const FLUX_QUANTUM: f64 = 2.067833848e-15;

/// Reduced flux quantum Φ₀/2π in Wb.
pub const REDUCED_FLUX_QUANTUM: f64 = FLUX_QUANTUM / std::f64::consts::TAU;

/// Convert a frequency in GHz to angular frequency in rad/s.
pub fn ghz_to_rad(f_ghz: f64) -> f64 {
    std::f64::consts::TAU * f_ghz * 1e9
}

/// Convert an angular frequency in rad/s to frequency in GHz.
pub fn rad_to_ghz(omega: f64) -> f64 {
    omega / (std::f64::consts::TAU * 1e9)
}
