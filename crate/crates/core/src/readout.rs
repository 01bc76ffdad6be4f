//! Resonator side of the dispersive readout.
//!
//! Frequencies are in GHz, except the coupling `g`, linewidth `kappa` and the
//! dispersive shift `chi`, which are in MHz.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{ghz_to_mhz, mhz_to_ghz};

/// Minimum `|fr - fq| / g` for the first-order dispersive formula.
pub const DEFAULT_GUARD_RATIO: f64 = 10.0;

/// Resonator linewidth assumed when none is given (approximate, MHz).
pub const DEFAULT_KAPPA_MHZ: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorParams {
    /// Bare resonance frequency (GHz).
    pub f0: f64,
    /// Total linewidth (MHz).
    pub kappa: f64,
    /// Qubit-resonator coupling (MHz).
    pub g: f64,
}

impl ResonatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f0 > 0.0) {
            return Err(Error::invalid("f0", format!("must be > 0, got {}", self.f0)));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::invalid("kappa", format!("must be > 0, got {}", self.kappa)));
        }
        if !(self.g >= 0.0) {
            return Err(Error::invalid("g", format!("must be >= 0, got {}", self.g)));
        }
        Ok(())
    }
}

/// Resonator dressed by a qubit in its ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersiveState {
    /// Dressed resonator frequency (GHz).
    pub fr: f64,
    /// `g^2 / detuning` (MHz).
    pub chi: f64,
    /// `fr - fq` (GHz).
    pub detuning: f64,
}

impl DispersiveState {
    /// Dresses the resonator for a qubit at `fq`.
    ///
    /// The ground-state qubit pulls the resonator to `f0 + g^2 / (f0 - fq)`,
    /// above `f0` when the qubit sits below it. `chi` then follows the
    /// `g^2 / (fr - fq)` form with the dressed `fr`, so `chi * detuning = g^2`
    /// while `fr - f0` (the observable excursion) differs from `chi` only at
    /// second order in `g / detuning`.
    pub fn dress(rp: &ResonatorParams, fq: f64, guard_ratio: f64) -> Result<Self> {
        rp.validate()?;
        check_guard(rp.g, rp.f0, fq, guard_ratio)?;
        let g = mhz_to_ghz(rp.g);
        let fr = rp.f0 + g * g / (rp.f0 - fq);
        let detuning = fr - fq;
        Ok(Self {
            fr,
            chi: ghz_to_mhz(g * g / detuning),
            detuning,
        })
    }
}

fn check_guard(g_mhz: f64, fr: f64, fq: f64, ratio: f64) -> Result<()> {
    let detuning_mhz = ghz_to_mhz((fr - fq).abs());
    let limit_mhz = ratio * g_mhz;
    if g_mhz > 0.0 && !(detuning_mhz > limit_mhz) {
        return Err(Error::DispersiveGuard {
            detuning_mhz,
            limit_mhz,
            ratio,
        });
    }
    Ok(())
}

/// First-order dispersive shift `chi = g^2 / (fr - fq)` in MHz, with the
/// default guard ratio of 10.
pub fn dispersive_shift(g: f64, fr: f64, fq: f64) -> Result<f64> {
    dispersive_shift_guarded(g, fr, fq, DEFAULT_GUARD_RATIO)
}

/// As [`dispersive_shift`], requiring `|fr - fq| > guard_ratio * g`.
pub fn dispersive_shift_guarded(g: f64, fr: f64, fq: f64, guard_ratio: f64) -> Result<f64> {
    if !(g >= 0.0) {
        return Err(Error::invalid("g", format!("must be >= 0, got {g}")));
    }
    check_guard(g, fr, fq, guard_ratio)?;
    if g == 0.0 {
        return Ok(0.0);
    }
    Ok(g * g / ghz_to_mhz(fr - fq))
}

/// Coupling `g = sqrt(chi (fr - fq))` in MHz; inverse of [`dispersive_shift`].
pub fn g_from_shift(chi: f64, fr: f64, fq: f64) -> Result<f64> {
    let detuning_mhz = ghz_to_mhz(fr - fq);
    let product = chi * detuning_mhz;
    if product < 0.0 {
        return Err(Error::SignMismatch {
            chi_mhz: chi,
            detuning_ghz: fr - fq,
        });
    }
    Ok(product.sqrt())
}

pub(crate) fn check_increasing(name: &'static str, grid: &[f64]) -> Result<()> {
    match grid.windows(2).position(|w| !(w[1] > w[0])) {
        Some(index) => Err(Error::GridNotIncreasing { name, index: index + 1 }),
        None => Ok(()),
    }
}

/// Notch-type transmission of a resonator side-coupled to a feedline.
///
/// `|S21| = 1 - depth / (1 + (2 (f - fr) / kappa)^2)`: minimum `1 - depth` at
/// `fr`, full width at half depth `kappa`. The phase is that of the complex
/// notch response `1 - depth / (1 + 2i (f - fr) / kappa)`.
pub fn s21_notch(freq_grid: &[f64], fr: f64, kappa: f64, depth: f64) -> Result<Vec<Complex64>> {
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa", format!("must be > 0, got {kappa}")));
    }
    if !(depth > 0.0 && depth <= 1.0) {
        return Err(Error::invalid("depth", format!("must be in (0, 1], got {depth}")));
    }
    check_increasing("freq_grid", freq_grid)?;
    let half_width = mhz_to_ghz(kappa) / 2.0;
    Ok(freq_grid
        .iter()
        .map(|&f| {
            let x = (f - fr) / half_width;
            let magnitude = 1.0 - depth / (1.0 + x * x);
            let phase = (Complex64::new(1.0, 0.0) - depth / Complex64::new(1.0, x)).arg();
            Complex64::from_polar(magnitude, phase)
        })
        .collect())
}

/// Resonator amplitude time constant `1 / (pi kappa)` in ns for `kappa` in MHz.
///
/// This is the field (amplitude) decay time for an energy decay rate of
/// `2 pi kappa`.
pub fn ring_time_constant(kappa: f64) -> f64 {
    1e3 / (PI * kappa)
}

/// Normalized resonator amplitude for a drive switched on at `pulse_on` and
/// off at `pulse_off` (ns): zero before the pulse, `1 - exp(-(t - on)/tau)`
/// during it and an exponential decay from the reached value afterwards, with
/// `tau = ring_time_constant(kappa)`.
pub fn ring_response(time_grid: &[f64], kappa: f64, pulse_on: f64, pulse_off: f64) -> Result<Vec<f64>> {
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa", format!("must be > 0, got {kappa}")));
    }
    if !(pulse_on < pulse_off) {
        return Err(Error::invalid(
            "pulse_off",
            format!("must be later than pulse_on ({pulse_on} >= {pulse_off})"),
        ));
    }
    let tau = ring_time_constant(kappa);
    let at_off = -(-(pulse_off - pulse_on) / tau).exp_m1();
    Ok(time_grid
        .iter()
        .map(|&t| {
            if t < pulse_on {
                0.0
            } else if t < pulse_off {
                -(-(t - pulse_on) / tau).exp_m1()
            } else {
                at_off * (-(t - pulse_off) / tau).exp()
            }
        })
        .collect())
}
