//! Physical constants and unit conversions.

/// Elementary charge (C), exact SI value.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// 1 µeV expressed as a frequency E/h in GHz.
pub const GHZ_PER_MICRO_EV: f64 = 0.241_799;

/// Induced gap used when none is configured (µeV).
pub const DEFAULT_GAP_MICRO_EV: f64 = 90.0;

pub const MHZ_PER_GHZ: f64 = 1e3;

pub fn micro_ev_to_ghz(energy_micro_ev: f64) -> f64 {
    energy_micro_ev * GHZ_PER_MICRO_EV
}

pub fn ghz_to_micro_ev(freq_ghz: f64) -> f64 {
    freq_ghz / GHZ_PER_MICRO_EV
}

pub fn mhz_to_ghz(freq_mhz: f64) -> f64 {
    freq_mhz / MHZ_PER_GHZ
}

pub fn ghz_to_mhz(freq_ghz: f64) -> f64 {
    freq_ghz * MHZ_PER_GHZ
}
