//! Seeded synthetic experiments: gate-voltage profiles, resonator and
//! two-tone spectroscopy maps, pulse-chop T1 curves and continuously
//! monitored Rabi responses.
//!
//! Noise is additive white Gaussian. Every map row and every trace draws from
//! its own ChaCha stream (`seed`, stream = row index), so output is
//! bit-identical for identical inputs regardless of evaluation order.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{spectrum_perturbative, QubitParams, SpectrumResult};
use crate::readout::{
    check_increasing, ring_response, s21_notch, DispersiveState, ResonatorParams, DEFAULT_GUARD_RATIO,
};

/// Downconversion intermediate frequency (GHz) whose period multiples are
/// removed from pulse-chop sweeps.
pub const DEFAULT_IF_FREQ: f64 = 0.125;

/// Relative height of the f02/2 peak at high drive power.
pub const DEFAULT_HIGH_POWER_RATIO: f64 = 0.6;

/// Metadata carried alongside every synthetic map and trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub kind: String,
    pub seed: Option<u64>,
    pub noise_sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit: Option<QubitParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator: Option<ResonatorParams>,
    /// Scalar annotations such as the gate voltage or injected T1.
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

impl Metadata {
    pub fn new(kind: &str, seed: Option<u64>, noise_sigma: f64) -> Self {
        Self {
            kind: kind.to_string(),
            seed,
            noise_sigma,
            ..Self::default()
        }
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub height: f64,
}

/// Phenomenological Josephson energy versus gate voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateProfile {
    /// Volts, strictly increasing.
    pub vg_grid: Vec<f64>,
    /// E_J/h in GHz at each grid point; zero where the junction is pinched off.
    pub ej_of_vg: Vec<f64>,
    pub seed: u64,
    pub ej_floor: f64,
    pub ej_peak: f64,
    pub bumps: Vec<Bump>,
    /// Gate voltage below which the junction carries no supercurrent.
    pub pinch_off: Option<f64>,
}

impl GateProfile {
    /// Sets E_J to zero for every gate voltage below `vg`.
    pub fn with_pinch_off(mut self, vg: f64) -> Self {
        for (v, ej) in self.vg_grid.iter().zip(self.ej_of_vg.iter_mut()) {
            if *v < vg {
                *ej = 0.0;
            }
        }
        self.pinch_off = Some(vg);
        self
    }

    pub fn len(&self) -> usize {
        self.vg_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vg_grid.is_empty()
    }
}

/// 2-D magnitude map, one row per gate voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectroMap {
    pub vg_grid: Vec<f64>,
    pub freq_grid: Vec<f64>,
    /// `magnitude[i][j]` at `vg_grid[i]`, `freq_grid[j]` (linear units).
    pub magnitude: Vec<Vec<f64>>,
    pub meta: Metadata,
}

impl SpectroMap {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.magnitude[i]
    }

    pub fn validate(&self) -> Result<()> {
        check_increasing("vg_grid", &self.vg_grid)?;
        check_increasing("freq_grid", &self.freq_grid)?;
        if self.magnitude.len() != self.vg_grid.len() || self.magnitude.iter().any(|r| r.len() != self.freq_grid.len())
        {
            return Err(Error::invalid("magnitude", "array shape does not match the grids"));
        }
        if self.magnitude.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("magnitude", "non-finite value"));
        }
        Ok(())
    }
}

/// 1-D real trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    /// Time (or pulse period) grid, ns, strictly increasing.
    pub t_grid: Vec<f64>,
    pub signal: Vec<f64>,
    pub meta: Metadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivePower {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChopMode {
    /// Signal `1/2 + ...`, measured in transmission.
    Transmission,
    /// Signal `1/2 - ...`, measured in reflection.
    Reflection,
}

impl ChopMode {
    pub fn model(self) -> crate::fit::ModelKind {
        match self {
            ChopMode::Transmission => crate::fit::ModelKind::T1ChopTransmission,
            ChopMode::Reflection => crate::fit::ModelKind::T1ChopReflection,
        }
    }
}

/// Resonator spectroscopy sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSweep {
    /// GHz, strictly increasing.
    pub freq_grid: Vec<f64>,
    /// Notch depth in (0, 1].
    pub depth: f64,
    pub guard_ratio: f64,
}

/// Two-tone (qubit) spectroscopy sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoToneSweep {
    /// GHz, strictly increasing.
    pub freq_grid: Vec<f64>,
    /// Coherence time setting the low-power linewidth, `HWHM = 1/(2 pi T2')`.
    pub t2prime: f64,
    pub amplitude: f64,
    pub background: f64,
    /// Height of the f02/2 peak relative to the f01 peak at high power.
    pub high_power_ratio: f64,
    /// Linewidth multiplier applied to both peaks at high power.
    pub power_broadening: f64,
    pub guard_ratio: f64,
}

impl TwoToneSweep {
    pub fn new(freq_grid: Vec<f64>, t2prime: f64) -> Self {
        Self {
            freq_grid,
            t2prime,
            amplitude: 1.0,
            background: 0.0,
            high_power_ratio: DEFAULT_HIGH_POWER_RATIO,
            power_broadening: 1.5,
            guard_ratio: DEFAULT_GUARD_RATIO,
        }
    }

    /// Low-power full width at half maximum (GHz).
    pub fn fwhm(&self) -> f64 {
        1.0 / (PI * self.t2prime)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn add_noise(values: &mut [f64], sigma: f64, seed: u64, stream: u64) -> Result<()> {
    if sigma == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid("noise_sigma", e.to_string()))?;
    let mut rng = stream_rng(seed, stream);
    for v in values {
        *v += normal.sample(&mut rng);
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(
            "noise_sigma",
            format!("must be finite and >= 0, got {sigma}"),
        ));
    }
    Ok(())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Josephson energy profile `floor + sum of Gaussian bumps`, rescaled so that
/// its maximum on the grid equals `ej_peak`. Bump centers, widths and
/// relative heights are drawn from `seed`.
pub fn make_gate_profile(
    seed: u64,
    vg_range: (f64, f64),
    n_points: usize,
    n_bumps: usize,
    ej_floor: f64,
    ej_peak: f64,
) -> Result<GateProfile> {
    if !(ej_floor < ej_peak) {
        return Err(Error::invalid(
            "ej_peak",
            format!("must exceed ej_floor ({ej_floor} >= {ej_peak})"),
        ));
    }
    if !(ej_floor >= 0.0) {
        return Err(Error::invalid("ej_floor", "must be >= 0"));
    }
    let (lo, hi) = vg_range;
    if n_points > 1 && !(hi > lo) {
        return Err(Error::invalid("vg_range", format!("empty range ({lo}, {hi})")));
    }
    let vg_grid = linspace(lo, hi, n_points);
    let span = hi - lo;
    let mut rng = stream_rng(seed, 0);
    let bumps: Vec<Bump> = (0..n_bumps)
        .map(|_| {
            let scale = span / (n_bumps as f64 + 1.0);
            Bump {
                center: lo + span * rng.random::<f64>(),
                width: scale * rng.random_range(0.15..0.5),
                height: rng.random_range(0.4..1.0),
            }
        })
        .collect();

    let shape: Vec<f64> = vg_grid
        .iter()
        .map(|&v| {
            bumps
                .iter()
                .map(|b| b.height * (-(v - b.center).powi(2) / (2.0 * b.width * b.width)).exp())
                .sum()
        })
        .collect();
    let max_shape = shape.iter().copied().fold(0.0, f64::max);
    let ej_of_vg = shape
        .iter()
        .map(|s| {
            if max_shape > 0.0 {
                ej_floor + (ej_peak - ej_floor) * s / max_shape
            } else {
                ej_floor
            }
        })
        .collect();

    Ok(GateProfile {
        vg_grid,
        ej_of_vg,
        seed,
        ej_floor,
        ej_peak,
        bumps,
        pinch_off: None,
    })
}

/// Perturbative qubit spectrum at each gate point; `None` where the junction
/// is pinched off (`E_J = 0`) or the qubit frequency is not positive.
pub fn qubit_track(profile: &GateProfile, template: &QubitParams) -> Result<Vec<Option<SpectrumResult>>> {
    profile
        .ej_of_vg
        .iter()
        .map(|&ej| {
            if ej <= 0.0 {
                return Ok(None);
            }
            let params = QubitParams {
                ej,
                transmission: None,
                ..*template
            };
            let s = spectrum_perturbative(&params)?;
            Ok((s.f01 > 0.0).then_some(s))
        })
        .collect()
}

/// Dressed resonator state at each gate point (`None` without a qubit).
pub fn dressed_track(
    profile: &GateProfile,
    template: &QubitParams,
    rp: &ResonatorParams,
    guard_ratio: f64,
) -> Result<Vec<Option<DispersiveState>>> {
    let track = qubit_track(profile, template)?;
    track
        .iter()
        .zip(&profile.vg_grid)
        .map(|(s, &vg)| match s {
            None => Ok(None),
            Some(s) => DispersiveState::dress(rp, s.f01, guard_ratio)
                .map(Some)
                .map_err(|e| match e {
                    guard @ Error::DispersiveGuard { .. } => Error::GuardAtGate {
                        vg,
                        source: Box::new(guard),
                    },
                    other => other,
                }),
        })
        .collect()
}

/// Resonator spectroscopy versus gate voltage: `|S21|` of the notch dip at
/// the dressed frequency, plus noise.
pub fn synth_resonator_map(
    profile: &GateProfile,
    qp: &QubitParams,
    rp: &ResonatorParams,
    sweep: &ResonatorSweep,
    noise_sigma: f64,
    seed: u64,
) -> Result<SpectroMap> {
    rp.validate()?;
    check_sigma(noise_sigma)?;
    check_increasing("freq_grid", &sweep.freq_grid)?;
    let dressed = dressed_track(profile, qp, rp, sweep.guard_ratio)?;
    let mut magnitude = Vec::with_capacity(profile.len());
    for (row, state) in dressed.iter().enumerate() {
        let fr = state.map_or(rp.f0, |s| s.fr);
        let mut mags: Vec<f64> = s21_notch(&sweep.freq_grid, fr, rp.kappa, sweep.depth)?
            .iter()
            .map(|z| z.norm())
            .collect();
        add_noise(&mut mags, noise_sigma, seed, row as u64)?;
        magnitude.push(mags);
    }
    let mut meta = Metadata::new("resonator_map", Some(seed), noise_sigma);
    meta.qubit = Some(*qp);
    meta.resonator = Some(*rp);
    Ok(SpectroMap {
        vg_grid: profile.vg_grid.clone(),
        freq_grid: sweep.freq_grid.clone(),
        magnitude,
        meta,
    })
}

fn lorentzian(f: f64, center: f64, fwhm: f64) -> f64 {
    let u = 2.0 * (f - center) / fwhm;
    1.0 / (1.0 + u * u)
}

/// Noiseless two-tone response for one qubit: a single Lorentzian at f01 at
/// low power; at high power a broadened f01 peak plus a second peak at
/// `f02/2 = f01 - alpha/2`.
pub fn twotone_trace(
    freq_grid: &[f64],
    spectrum: Option<&SpectrumResult>,
    sweep: &TwoToneSweep,
    power: DrivePower,
) -> Vec<f64> {
    let Some(s) = spectrum else {
        return vec![sweep.background; freq_grid.len()];
    };
    let fwhm = sweep.fwhm();
    freq_grid
        .iter()
        .map(|&f| {
            let response = match power {
                DrivePower::Low => lorentzian(f, s.f01, fwhm),
                DrivePower::High => {
                    let w = fwhm * sweep.power_broadening;
                    lorentzian(f, s.f01, w) + sweep.high_power_ratio * lorentzian(f, s.f02_half, w)
                }
            };
            sweep.background + sweep.amplitude * response
        })
        .collect()
}

/// Two-tone spectroscopy versus gate voltage at the given drive power.
pub fn synth_twotone_map(
    profile: &GateProfile,
    qp: &QubitParams,
    rp: &ResonatorParams,
    sweep: &TwoToneSweep,
    power: DrivePower,
    noise_sigma: f64,
    seed: u64,
) -> Result<SpectroMap> {
    check_sigma(noise_sigma)?;
    check_increasing("freq_grid", &sweep.freq_grid)?;
    if !(sweep.t2prime > 0.0) {
        return Err(Error::invalid("t2prime", "must be > 0"));
    }
    // Guard soundness: every qubit frequency must be dispersive w.r.t. the resonator.
    dressed_track(profile, qp, rp, sweep.guard_ratio)?;
    let track = qubit_track(profile, qp)?;
    let mut magnitude = Vec::with_capacity(profile.len());
    for (row, s) in track.iter().enumerate() {
        let mut mags = twotone_trace(&sweep.freq_grid, s.as_ref(), sweep, power);
        add_noise(&mut mags, noise_sigma, seed, row as u64)?;
        magnitude.push(mags);
    }
    let kind = match power {
        DrivePower::Low => "twotone_low",
        DrivePower::High => "twotone_high",
    };
    let mut meta = Metadata::new(kind, Some(seed), noise_sigma).with_extra("t2prime_ns", sweep.t2prime);
    meta.qubit = Some(*qp);
    meta.resonator = Some(*rp);
    Ok(SpectroMap {
        vg_grid: profile.vg_grid.clone(),
        freq_grid: sweep.freq_grid.clone(),
        magnitude,
        meta,
    })
}

/// True when `tau` (ns) is an integer multiple of the IF period `1/if_freq`.
pub fn is_if_multiple(tau: f64, if_freq: f64) -> bool {
    let cycles = tau * if_freq;
    (cycles - cycles.round()).abs() <= 1e-9 * cycles.abs().max(1.0)
}

/// Pulse-chop relaxation curve `S(tau) = 1/2 +- T1 (1 - exp(-tau/(2 T1))) / tau`
/// over the pulse periods in `tau_grid`, with IF-period multiples removed.
pub fn synth_t1_chop(
    t1: f64,
    tau_grid: &[f64],
    mode: ChopMode,
    noise_sigma: f64,
    seed: u64,
    if_freq: f64,
) -> Result<TimeTrace> {
    if !(t1 > 0.0) {
        return Err(Error::invalid("t1", format!("must be > 0, got {t1}")));
    }
    if tau_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("tau_grid", "pulse periods must be positive"));
    }
    check_increasing("tau_grid", tau_grid)?;
    check_sigma(noise_sigma)?;
    let t_grid: Vec<f64> = tau_grid
        .iter()
        .copied()
        .filter(|&tau| !(if_freq > 0.0 && is_if_multiple(tau, if_freq)))
        .collect();
    let model = mode.model();
    let mut signal: Vec<f64> = t_grid.iter().map(|&tau| model.eval(&[t1], tau)).collect();
    add_noise(&mut signal, noise_sigma, seed, 0)?;
    let meta = Metadata::new(model.name(), Some(seed), noise_sigma)
        .with_extra("t1_ns", t1)
        .with_extra("if_freq_ghz", if_freq);
    Ok(TimeTrace { t_grid, signal, meta })
}

/// Piecewise Rabi-frequency law versus drive amplitude: linear below the knee,
/// constant above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiLaw {
    /// MHz per volt.
    pub slope: f64,
    /// Volts.
    pub knee: f64,
    /// MHz.
    pub saturation: f64,
}

impl Default for RabiLaw {
    fn default() -> Self {
        Self {
            slope: 78.3,
            knee: 0.6,
            saturation: 40.0,
        }
    }
}

impl RabiLaw {
    /// Rabi frequency `Omega / 2 pi` in MHz.
    pub fn frequency(&self, amplitude: f64) -> f64 {
        if amplitude < self.knee {
            self.slope * amplitude
        } else {
            self.saturation
        }
    }
}

/// Pulse timing for the continuously monitored Rabi experiment (ns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiMonitorConfig {
    /// Resonator linewidth (MHz) setting the ring-up of the baseline.
    pub kappa: f64,
    pub resonator_on: f64,
    pub resonator_off: f64,
    pub qubit_on: f64,
    pub qubit_off: f64,
    /// Steady-state extra resonator response while the qubit is driven.
    pub response: f64,
    /// Decay time of the qubit-induced response after the qubit pulse.
    pub release: f64,
}

impl Default for RabiMonitorConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            resonator_on: 0.0,
            resonator_off: 2000.0,
            qubit_on: 500.0,
            qubit_off: 1000.0,
            response: 0.3,
            release: 100.0,
        }
    }
}

fn rabi_signal(omega: f64, decay: f64, t_grid: &[f64], cfg: &RabiMonitorConfig, response: f64) -> Result<Vec<f64>> {
    let baseline = ring_response(t_grid, cfg.kappa, cfg.resonator_on, cfg.resonator_off)?;
    let freq = omega / 1e3; // MHz -> cycles per ns
    let at = |s: f64| 1.0 - (-s / decay).exp() * (2.0 * PI * freq * s).cos();
    let at_off = at(cfg.qubit_off - cfg.qubit_on);
    Ok(t_grid
        .iter()
        .zip(baseline)
        .map(|(&t, base)| {
            let s = t - cfg.qubit_on;
            let qubit = if t < cfg.qubit_on {
                0.0
            } else if t < cfg.qubit_off {
                at(s)
            } else {
                at_off * (-(t - cfg.qubit_off) / cfg.release).exp()
            };
            base + response * qubit
        })
        .collect())
}

/// Resonator response while the qubit is driven: an exponentially decaying
/// oscillation at the Rabi frequency `omega` (MHz) that settles to a raised
/// steady state, on top of the resonator ring-up baseline.
pub fn synth_rabi_monitor(
    omega: f64,
    decay: f64,
    t_grid: &[f64],
    noise_sigma: f64,
    seed: u64,
    cfg: &RabiMonitorConfig,
) -> Result<TimeTrace> {
    if !(omega > 0.0) {
        return Err(Error::invalid("omega", format!("must be > 0, got {omega}")));
    }
    if !(decay > 0.0) {
        return Err(Error::invalid("decay", format!("must be > 0, got {decay}")));
    }
    check_increasing("t_grid", t_grid)?;
    check_sigma(noise_sigma)?;
    let mut signal = rabi_signal(omega, decay, t_grid, cfg, cfg.response)?;
    add_noise(&mut signal, noise_sigma, seed, 0)?;
    let meta = Metadata::new("rabi_monitor", Some(seed), noise_sigma)
        .with_extra("omega_mhz", omega)
        .with_extra("decay_ns", decay)
        .with_extra("qubit_on_ns", cfg.qubit_on)
        .with_extra("qubit_off_ns", cfg.qubit_off);
    Ok(TimeTrace {
        t_grid: t_grid.to_vec(),
        signal,
        meta,
    })
}

/// Monitor traces over a drive-amplitude sweep using `law`; a zero amplitude
/// yields the bare resonator baseline. Trace `k` uses noise stream `k`.
pub fn synth_rabi_amplitude_sweep(
    amplitudes: &[f64],
    law: &RabiLaw,
    decay: f64,
    t_grid: &[f64],
    noise_sigma: f64,
    seed: u64,
    cfg: &RabiMonitorConfig,
) -> Result<Vec<TimeTrace>> {
    check_increasing("t_grid", t_grid)?;
    check_sigma(noise_sigma)?;
    amplitudes
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let omega = law.frequency(v);
            let response = if v > 0.0 { cfg.response } else { 0.0 };
            let mut signal = rabi_signal(omega.max(f64::MIN_POSITIVE), decay, t_grid, cfg, response)?;
            add_noise(&mut signal, noise_sigma, seed, k as u64)?;
            let meta = Metadata::new("rabi_monitor", Some(seed), noise_sigma)
                .with_extra("v_amp", v)
                .with_extra("omega_mhz", omega)
                .with_extra("decay_ns", decay)
                .with_extra("qubit_on_ns", cfg.qubit_on)
                .with_extra("qubit_off_ns", cfg.qubit_off);
            Ok(TimeTrace {
                t_grid: t_grid.to_vec(),
                signal,
                meta,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::micro_ev_to_ghz;

    fn device_params() -> (QubitParams, ResonatorParams) {
        let qp = QubitParams::new(4.0, 0.508).with_gap(micro_ev_to_ghz(90.0));
        let rp = ResonatorParams {
            f0: 5.572,
            kappa: 1.0,
            g: 113.0,
        };
        (qp, rp)
    }

    #[test]
    fn flat_profile_without_bumps() {
        let p = make_gate_profile(7, (-1.0, 1.0), 21, 0, 3.0, 5.0).unwrap();
        assert!(p.ej_of_vg.iter().all(|&e| e == 3.0));
    }

    #[test]
    fn profile_is_seeded() {
        let a = make_gate_profile(11, (-40.0, 0.0), 200, 4, 2.0, 4.8).unwrap();
        let b = make_gate_profile(11, (-40.0, 0.0), 200, 4, 2.0, 4.8).unwrap();
        let c = make_gate_profile(12, (-40.0, 0.0), 200, 4, 2.0, 4.8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.ej_of_vg, c.ej_of_vg);
        let max = a.ej_of_vg.iter().copied().fold(f64::MIN, f64::max);
        assert!((max - 4.8).abs() < 1e-12);
        assert!(a.ej_of_vg.iter().all(|&e| e >= 2.0));
    }

    #[test]
    fn profile_rejects_inverted_levels() {
        assert!(make_gate_profile(1, (0.0, 1.0), 5, 1, 5.0, 5.0).is_err());
    }

    #[test]
    fn pinch_off_zeroes_ej() {
        let p = make_gate_profile(3, (-40.0, 0.0), 81, 2, 2.0, 4.0)
            .unwrap()
            .with_pinch_off(-30.0);
        for (v, e) in p.vg_grid.iter().zip(&p.ej_of_vg) {
            assert_eq!(*v < -30.0, *e == 0.0);
        }
    }

    #[test]
    fn flat_profile_gives_identical_rows() {
        let (qp, rp) = device_params();
        let profile = make_gate_profile(1, (0.0, 1.0), 5, 0, 4.0, 5.0).unwrap();
        let sweep = ResonatorSweep {
            freq_grid: linspace(5.570, 5.590, 401),
            depth: 0.8,
            guard_ratio: DEFAULT_GUARD_RATIO,
        };
        let map = synth_resonator_map(&profile, &qp, &rp, &sweep, 0.0, 0).unwrap();
        map.validate().unwrap();
        assert!(map.magnitude.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn guard_violation_names_gate_voltage() {
        let (qp, rp) = device_params();
        let profile = make_gate_profile(1, (0.0, 1.0), 3, 0, 7.0, 8.0).unwrap();
        let sweep = ResonatorSweep {
            freq_grid: linspace(5.5, 5.6, 11),
            depth: 0.8,
            guard_ratio: DEFAULT_GUARD_RATIO,
        };
        match synth_resonator_map(&profile, &qp, &rp, &sweep, 0.0, 0) {
            Err(Error::GuardAtGate { vg, .. }) => assert_eq!(vg, 0.0),
            other => panic!("expected guard error, got {other:?}"),
        }
    }

    #[test]
    fn low_power_has_single_maximum() {
        let (qp, rp) = device_params();
        let profile = make_gate_profile(5, (-1.0, 1.0), 9, 2, 3.0, 4.5).unwrap();
        let sweep = TwoToneSweep::new(linspace(2.5, 4.5, 2001), 19.0);
        let map = synth_twotone_map(&profile, &qp, &rp, &sweep, DrivePower::Low, 0.0, 1).unwrap();
        for row in &map.magnitude {
            let maxima = row.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count();
            assert_eq!(maxima, 1);
        }
    }

    #[test]
    fn high_power_second_peak_below() {
        let (qp, rp) = device_params();
        let s = spectrum_perturbative(&qp).unwrap();
        let grid = linspace(s.f01 - 0.3, s.f01 + 0.1, 4001);
        let sweep = TwoToneSweep::new(grid.clone(), 19.0);
        let trace = twotone_trace(&grid, Some(&s), &sweep, DrivePower::High);
        let maxima: Vec<f64> = (1..grid.len() - 1)
            .filter(|&i| trace[i] > trace[i - 1] && trace[i] > trace[i + 1])
            .map(|i| grid[i])
            .collect();
        assert_eq!(maxima.len(), 2);
        assert!((maxima[1] - s.f01).abs() < 2e-4);
        assert!(maxima[0] < maxima[1]);
        assert!((maxima[1] - maxima[0] - s.alpha / 2.0).abs() < 2e-3);
        let _ = rp;
    }

    #[test]
    fn chop_filters_if_multiples() {
        let tau: Vec<f64> = (1..=100).map(|i| 2.0 * i as f64).collect();
        let t = synth_t1_chop(117.3, &tau, ChopMode::Transmission, 0.0, 0, DEFAULT_IF_FREQ).unwrap();
        assert_eq!(t.t_grid.len(), 75);
        assert!(t.t_grid.iter().all(|tau| tau % 8.0 != 0.0));
        assert!(t.signal.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn chop_limits() {
        let t1 = 117.3;
        let t = synth_t1_chop(t1, &[1e-4, 100.0 * t1], ChopMode::Transmission, 0.0, 0, 0.0).unwrap();
        assert!((t.signal[0] - 1.0).abs() < 1e-6);
        assert!((t.signal[1] - 0.5).abs() <= 0.01 + 1e-12);
        assert!(synth_t1_chop(0.0, &[1.0], ChopMode::Reflection, 0.0, 0, 0.0).is_err());
        assert!(synth_t1_chop(10.0, &[0.0, 1.0], ChopMode::Reflection, 0.0, 0, 0.0).is_err());
    }

    #[test]
    fn rabi_law_is_piecewise() {
        let law = RabiLaw::default();
        assert!((law.frequency(0.5) - 39.15).abs() < 1e-12);
        assert_eq!(law.frequency(0.8), 40.0);
        assert_eq!(law.frequency(0.0), 0.0);
    }

    #[test]
    fn zero_amplitude_is_bare_baseline() {
        let t = linspace(0.0, 1500.0, 1501);
        let cfg = RabiMonitorConfig::default();
        let traces = synth_rabi_amplitude_sweep(&[0.0], &RabiLaw::default(), 100.0, &t, 0.0, 0, &cfg).unwrap();
        let base = ring_response(&t, cfg.kappa, cfg.resonator_on, cfg.resonator_off).unwrap();
        assert_eq!(traces[0].signal, base);
    }

    #[test]
    fn rabi_monitor_validates() {
        let t = linspace(0.0, 10.0, 11);
        let cfg = RabiMonitorConfig::default();
        assert!(synth_rabi_monitor(0.0, 10.0, &t, 0.0, 0, &cfg).is_err());
        assert!(synth_rabi_monitor(10.0, 0.0, &t, 0.0, 0, &cfg).is_err());
    }
}
