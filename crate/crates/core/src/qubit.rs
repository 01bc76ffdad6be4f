//! Qubit Hamiltonian: exact Cooper-pair-box spectrum in the charge basis and
//! the first-order perturbative spectrum of a transmon with a few
//! high-transparency junction channels.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{micro_ev_to_ghz, DEFAULT_GAP_MICRO_EV, ELEMENTARY_CHARGE};

pub const MAX_CHANNELS: u32 = 8;

/// Charge-basis cutoff |n| used for the first diagonalization attempt.
pub const INITIAL_CUTOFF: usize = 30;
/// Largest charge-basis cutoff tried before giving up.
pub const MAX_CUTOFF: usize = 200;
/// Cutoff increment used to probe convergence.
const CUTOFF_PROBE: usize = 5;
const TRUNCATION_RTOL: f64 = 1e-10;
const CONVERGED_LEVELS: usize = 4;

/// Number of offset-charge samples in `[0, 0.5]` used for charge dispersion.
pub const DISPERSION_SAMPLES: usize = 11;

/// Parameters of the qubit Hamiltonian. Energies are E/h in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    pub ej: f64,
    pub ec: f64,
    /// Induced superconducting gap of the junction.
    pub gap: f64,
    pub n_channels: u32,
    /// Equal per-channel transmission, when known.
    pub transmission: Option<f64>,
    /// Offset charge in Cooper-pair units.
    pub offset_charge: f64,
}

impl QubitParams {
    /// Single channel, 90 µeV gap, no transmission set, `n_g = 0`.
    pub fn new(ej: f64, ec: f64) -> Self {
        Self {
            ej,
            ec,
            gap: micro_ev_to_ghz(DEFAULT_GAP_MICRO_EV),
            n_channels: 1,
            transmission: None,
            offset_charge: 0.0,
        }
    }

    /// Builds parameters whose E_J follows from `E_J = gap * N * T / 4`.
    pub fn from_transmission(ec: f64, gap: f64, n_channels: u32, transmission: f64) -> Self {
        Self {
            ej: ej_from_transmission(gap, n_channels, transmission),
            ec,
            gap,
            n_channels,
            transmission: Some(transmission),
            offset_charge: 0.0,
        }
    }

    pub fn with_gap(mut self, gap: f64) -> Self {
        self.gap = gap;
        self
    }

    pub fn with_channels(mut self, n_channels: u32) -> Self {
        self.n_channels = n_channels;
        self
    }

    pub fn with_offset_charge(mut self, offset_charge: f64) -> Self {
        self.offset_charge = offset_charge;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        if !(self.ej > 0.0) {
            return Err(Error::invalid("ej", format!("must be > 0, got {}", self.ej)));
        }
        Ok(())
    }

    // Everything except the strict E_J > 0 requirement; the exact
    // diagonalizer also accepts the decoupled E_J = 0 box.
    fn validate_common(&self) -> Result<()> {
        if !(self.ej >= 0.0) || !self.ej.is_finite() {
            return Err(Error::invalid(
                "ej",
                format!("must be finite and >= 0, got {}", self.ej),
            ));
        }
        if !(self.ec > 0.0) || !self.ec.is_finite() {
            return Err(Error::invalid("ec", format!("must be > 0, got {}", self.ec)));
        }
        if !(self.gap > 0.0) {
            return Err(Error::invalid("gap", format!("must be > 0, got {}", self.gap)));
        }
        if !(1..=MAX_CHANNELS).contains(&self.n_channels) {
            return Err(Error::invalid(
                "n_channels",
                format!("must be in 1..={MAX_CHANNELS}, got {}", self.n_channels),
            ));
        }
        if !self.offset_charge.is_finite() {
            return Err(Error::invalid("offset_charge", "must be finite"));
        }
        if let Some(t) = self.transmission {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid("transmission", format!("must be in [0, 1], got {t}")));
            }
            let expected = ej_from_transmission(self.gap, self.n_channels, t);
            let scale = self.ej.abs().max(expected.abs()).max(f64::MIN_POSITIVE);
            if (self.ej - expected).abs() > 1e-9 * scale {
                return Err(Error::invalid(
                    "transmission",
                    format!("ej = {} inconsistent with gap * N * T / 4 = {expected}", self.ej),
                ));
            }
        }
        Ok(())
    }
}

/// Transition frequencies of the lowest qubit levels (GHz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub f01: f64,
    /// Two-photon 0 -> 2 transition frequency divided by two.
    pub f02_half: f64,
    /// Anharmonicity `2 (f01 - f02/2)`; positive for a standard transmon.
    pub alpha: f64,
    /// Level energies relative to the ground state, non-decreasing,
    /// `levels[0] == 0`.
    pub levels: Vec<f64>,
}

impl SpectrumResult {
    fn from_levels(levels: Vec<f64>) -> Self {
        let f01 = levels[1];
        let f02_half = levels[2] / 2.0;
        Self {
            f01,
            f02_half,
            alpha: 2.0 * (f01 - f02_half),
            levels,
        }
    }
}

/// Critical current of the junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalCurrent {
    /// Nanoamperes.
    pub ic: f64,
}

/// Channel transmission inferred from the anharmonicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionEstimate {
    /// Unclamped value `(4/3)(1 - alpha/E_C)`.
    pub raw: f64,
    /// `raw` clamped into `[0, 1]`.
    pub clamped: f64,
    /// False when `raw` lies outside `[0, 1]`.
    pub physical: bool,
}

fn cpb_hamiltonian(ej: f64, ec: f64, ng: f64, cutoff: usize) -> DMatrix<f64> {
    let dim = 2 * cutoff + 1;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let n = i as f64 - cutoff as f64;
        h[(i, i)] = 4.0 * ec * (n - ng) * (n - ng);
        if i + 1 < dim {
            h[(i, i + 1)] = -0.5 * ej;
            h[(i + 1, i)] = -0.5 * ej;
        }
    }
    h
}

fn lowest_eigenvalues(ej: f64, ec: f64, ng: f64, cutoff: usize, count: usize) -> Vec<f64> {
    let eigenvalues = cpb_hamiltonian(ej, ec, ng, cutoff).symmetric_eigenvalues();
    let mut values: Vec<f64> = eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values.truncate(count);
    values
}

fn truncation_converged(a: &[f64], b: &[f64], ec: f64) -> bool {
    a.iter()
        .zip(b)
        .take(CONVERGED_LEVELS)
        .all(|(x, y)| (x - y).abs() <= TRUNCATION_RTOL * x.abs().max(y.abs()).max(ec))
}

/// Absolute eigenvalues of `4 E_C (n - n_g)^2 - E_J cos(phi)`, converged in the
/// charge-basis cutoff.
fn converged_eigenvalues(ej: f64, ec: f64, ng: f64, count: usize) -> Result<Vec<f64>> {
    let count = count.max(CONVERGED_LEVELS);
    let mut cutoff = INITIAL_CUTOFF;
    loop {
        let previous = lowest_eigenvalues(ej, ec, ng, cutoff, count);
        let last = lowest_eigenvalues(ej, ec, ng, cutoff + CUTOFF_PROBE, count);
        if truncation_converged(&previous, &last, ec) {
            return Ok(last);
        }
        if cutoff + CUTOFF_PROBE >= MAX_CUTOFF {
            return Err(Error::TruncationNotConverged {
                cutoff: MAX_CUTOFF,
                previous,
                last,
            });
        }
        cutoff = (2 * cutoff).min(MAX_CUTOFF - CUTOFF_PROBE);
    }
}

/// Exact spectrum of the Cooper-pair box `H = 4 E_C (n - n_g)^2 - E_J cos(phi)`.
///
/// The Hamiltonian is tridiagonal in the charge basis. The cutoff starts at
/// |n| <= 30 and doubles until the lowest four eigenvalues change by less than
/// 1e-10 relative when the cutoff grows by 5; |n| <= 200 is the hard cap.
/// Returns `max(n_levels, 4)` levels relative to the ground state.
pub fn cpb_spectrum_exact(params: &QubitParams, n_levels: usize) -> Result<SpectrumResult> {
    if n_levels < 3 {
        return Err(Error::invalid("n_levels", format!("must be >= 3, got {n_levels}")));
    }
    params.validate_common()?;
    let values = converged_eigenvalues(params.ej, params.ec, params.offset_charge, n_levels)?;
    let ground = values[0];
    let levels = values.iter().map(|e| e - ground).collect();
    Ok(SpectrumResult::from_levels(levels))
}

/// Peak-to-peak variation of the `level` transition frequency (`E_level - E_0`)
/// over 11 evenly spaced offset charges in `[0, 0.5]`.
pub fn charge_dispersion(params: &QubitParams, level: usize) -> Result<f64> {
    if level < 1 {
        return Err(Error::invalid("level", "must be >= 1"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..DISPERSION_SAMPLES {
        let ng = 0.5 * k as f64 / (DISPERSION_SAMPLES - 1) as f64;
        let spectrum = cpb_spectrum_exact(&params.with_offset_charge(ng), (level + 1).max(3))?;
        let f = spectrum.levels[level];
        lo = lo.min(f);
        hi = hi.max(f);
    }
    Ok(hi - lo)
}

/// Anharmonicity `E_C (1 - 3 E_J / (gap N))` of the high-transparency model.
pub fn perturbative_alpha(ej: f64, ec: f64, gap: f64, n_channels: u32) -> f64 {
    ec * (1.0 - 3.0 * ej / (gap * n_channels as f64))
}

/// First-order perturbative spectrum for a junction of `N` equal channels.
///
/// `alpha = E_C (1 - 3 E_J / (gap N))`, `f01 = sqrt(8 E_J E_C) - alpha`,
/// `f02/2 = f01 - alpha/2`. `alpha` changes sign once `3 E_J > gap N`; it is
/// reported as is. The returned `levels` follow the Duffing ladder
/// `E_m = m sqrt(8 E_J E_C) - alpha m (m + 1) / 2` for `m = 0..4`.
pub fn spectrum_perturbative(params: &QubitParams) -> Result<SpectrumResult> {
    params.validate()?;
    let alpha = perturbative_alpha(params.ej, params.ec, params.gap, params.n_channels);
    let plasma = (8.0 * params.ej * params.ec).sqrt();
    let levels = (0..4)
        .map(|m| {
            let m = m as f64;
            m * plasma - alpha * m * (m + 1.0) / 2.0
        })
        .collect::<Vec<_>>();
    let f01 = plasma - alpha;
    Ok(SpectrumResult {
        f01,
        f02_half: f01 - alpha / 2.0,
        alpha,
        levels,
    })
}

/// `E_J = gap * N * T / 4` for `N` channels of equal transmission `T`.
pub fn ej_from_transmission(gap: f64, n_channels: u32, transmission: f64) -> f64 {
    gap * n_channels as f64 * transmission / 4.0
}

/// `T = (4/3)(1 - alpha / E_C)`; values outside `[0, 1]` are flagged and kept.
pub fn transmission_from_alpha(alpha: f64, ec: f64) -> Result<TransmissionEstimate> {
    if !(ec > 0.0) {
        return Err(Error::invalid("ec", format!("must be > 0, got {ec}")));
    }
    let raw = 4.0 / 3.0 * (1.0 - alpha / ec);
    Ok(TransmissionEstimate {
        raw,
        clamped: raw.clamp(0.0, 1.0),
        physical: (0.0..=1.0).contains(&raw),
    })
}

/// Critical current from `E_J = hbar I_c / (2e)`, i.e. `I_c = 4 pi e (E_J/h)`.
pub fn ic_from_ej(ej: f64) -> Result<CriticalCurrent> {
    if !(ej > 0.0) {
        return Err(Error::invalid("ej", format!("must be > 0, got {ej}")));
    }
    // GHz -> Hz, A -> nA
    Ok(CriticalCurrent {
        ic: 4.0 * PI * ELEMENTARY_CHARGE * ej * 1e9 * 1e9,
    })
}
