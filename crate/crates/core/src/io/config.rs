//! Run configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::qubit::{QubitParams, MAX_CHANNELS};
use crate::readout::{ResonatorParams, DEFAULT_GUARD_RATIO, DEFAULT_KAPPA_MHZ};
use crate::synth::{
    linspace, ChopMode, RabiLaw, RabiMonitorConfig, ResonatorSweep, TwoToneSweep, DEFAULT_HIGH_POWER_RATIO,
    DEFAULT_IF_FREQ,
};
use crate::units::{micro_ev_to_ghz, DEFAULT_GAP_MICRO_EV};

fn default_gap() -> f64 {
    DEFAULT_GAP_MICRO_EV
}
fn default_one() -> u32 {
    1
}
fn default_kappa() -> f64 {
    DEFAULT_KAPPA_MHZ
}
fn default_depth() -> f64 {
    0.8
}
fn default_guard() -> f64 {
    DEFAULT_GUARD_RATIO
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_ratio() -> f64 {
    DEFAULT_HIGH_POWER_RATIO
}
fn default_broadening() -> f64 {
    1.5
}
fn default_if() -> f64 {
    DEFAULT_IF_FREQ
}
fn default_traces() -> usize {
    1
}
fn default_candidates() -> Vec<u32> {
    vec![1, 2, 3, 4]
}
fn default_knee() -> f64 {
    RabiLaw::default().knee
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    /// GHz
    pub ec: f64,
    #[serde(default = "default_one")]
    pub n_channels: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorSection {
    /// GHz
    pub f0: f64,
    /// MHz
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// MHz
    pub g: f64,
    #[serde(default = "default_depth")]
    pub depth: f64,
    #[serde(default = "default_guard")]
    pub guard_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    pub vg_min: f64,
    pub vg_max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub n_bumps: usize,
    pub ej_floor: f64,
    pub ej_peak: f64,
    #[serde(default)]
    pub pinch_off: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// GHz
    pub f_min: f64,
    /// GHz
    pub f_max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoToneSection {
    pub f_min: f64,
    pub f_max: f64,
    pub n_points: usize,
    /// ns
    pub t2prime: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub background: f64,
    #[serde(default = "default_ratio")]
    pub high_power_ratio: f64,
    #[serde(default = "default_broadening")]
    pub power_broadening: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChopSection {
    /// ns
    pub t1: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_mode")]
    pub mode: ChopMode,
    /// GHz
    #[serde(default = "default_if")]
    pub if_freq: f64,
    /// Number of gate points (evenly spread over those with a qubit) at which
    /// a chop curve is recorded.
    #[serde(default = "default_traces")]
    pub n_traces: usize,
}

fn default_mode() -> ChopMode {
    ChopMode::Transmission
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiSection {
    /// Drive amplitudes (V); a zero entry provides the drive-off reference.
    pub amplitudes: Vec<f64>,
    /// ns
    pub decay: f64,
    pub t_max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub law: Option<RabiLaw>,
    #[serde(default)]
    pub timing: Option<RabiMonitorConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractSection {
    /// Bare resonator frequency (GHz); found from the untuned region if absent.
    #[serde(default)]
    pub f0: Option<f64>,
    /// Fixed E_C (GHz) for the channel-count curves; self-consistent if absent.
    #[serde(default)]
    pub ec_reference: Option<f64>,
    #[serde(default = "default_candidates")]
    pub candidates: Vec<u32>,
    /// Upper drive amplitude (V) of the linear Rabi regime.
    #[serde(default = "default_knee")]
    pub rabi_v_max: f64,
}

impl Default for ExtractSection {
    fn default() -> Self {
        Self {
            f0: None,
            ec_reference: None,
            candidates: default_candidates(),
            rabi_v_max: default_knee(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    /// Induced superconducting gap in micro-eV.
    #[serde(default = "default_gap")]
    pub gap_micro_ev: f64,
    pub qubit: QubitSection,
    pub resonator: ResonatorSection,
    pub gate: GateSection,
    pub resonator_sweep: SweepSection,
    pub twotone: TwoToneSection,
    #[serde(default)]
    pub t1_chop: Option<ChopSection>,
    #[serde(default)]
    pub rabi: Option<RabiSection>,
    #[serde(default)]
    pub extract: ExtractSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn bad(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be a positive number, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be >= 0, got {v}")))
    }
}

fn range(section: &str, lo: f64, hi: f64, n: usize) -> Result<()> {
    if n > 1 && !(hi > lo) {
        return Err(bad(
            &format!("{section}.f_max"),
            format!("grid is not increasing ({lo} .. {hi})"),
        ));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "config".into());
            bad(&field, e.to_string().trim().replace('\n', " "))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// True when any product draws random numbers.
    pub fn is_stochastic(&self) -> bool {
        self.gate.n_bumps > 0
            || self.resonator_sweep.noise_sigma > 0.0
            || self.twotone.noise_sigma > 0.0
            || self.t1_chop.as_ref().is_some_and(|c| c.noise_sigma > 0.0)
            || self.rabi.as_ref().is_some_and(|r| r.noise_sigma > 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        positive("gap_micro_ev", self.gap_micro_ev)?;
        positive("qubit.ec", self.qubit.ec)?;
        if self.qubit.n_channels == 0 || self.qubit.n_channels > MAX_CHANNELS {
            return Err(bad("qubit.n_channels", format!("must be in 1..={MAX_CHANNELS}")));
        }
        positive("resonator.f0", self.resonator.f0)?;
        positive("resonator.kappa", self.resonator.kappa)?;
        non_negative("resonator.g", self.resonator.g)?;
        if !(self.resonator.depth > 0.0 && self.resonator.depth <= 1.0) {
            return Err(bad("resonator.depth", "must be in (0, 1]"));
        }
        positive("resonator.guard_ratio", self.resonator.guard_ratio)?;

        let g = &self.gate;
        if g.n_points > 1 && !(g.vg_max > g.vg_min) {
            return Err(bad(
                "gate.vg_max",
                format!("grid is not increasing ({} .. {})", g.vg_min, g.vg_max),
            ));
        }
        non_negative("gate.ej_floor", g.ej_floor)?;
        if !(g.ej_peak > g.ej_floor) {
            return Err(bad("gate.ej_peak", "must exceed gate.ej_floor"));
        }

        let s = &self.resonator_sweep;
        range("resonator_sweep", s.f_min, s.f_max, s.n_points)?;
        non_negative("resonator_sweep.noise_sigma", s.noise_sigma)?;
        let t = &self.twotone;
        range("twotone", t.f_min, t.f_max, t.n_points)?;
        non_negative("twotone.noise_sigma", t.noise_sigma)?;
        positive("twotone.t2prime", t.t2prime)?;
        non_negative("twotone.high_power_ratio", t.high_power_ratio)?;
        positive("twotone.power_broadening", t.power_broadening)?;

        if let Some(c) = &self.t1_chop {
            positive("t1_chop.t1", c.t1)?;
            positive("t1_chop.tau_min", c.tau_min)?;
            if c.n_points > 1 && !(c.tau_max > c.tau_min) {
                return Err(bad("t1_chop.tau_max", "grid is not increasing"));
            }
            non_negative("t1_chop.noise_sigma", c.noise_sigma)?;
            non_negative("t1_chop.if_freq", c.if_freq)?;
        }
        if let Some(r) = &self.rabi {
            positive("rabi.decay", r.decay)?;
            positive("rabi.t_max", r.t_max)?;
            non_negative("rabi.noise_sigma", r.noise_sigma)?;
            if r.amplitudes.iter().any(|v| !(*v >= 0.0)) {
                return Err(bad("rabi.amplitudes", "amplitudes must be >= 0"));
            }
        }
        if self.extract.candidates.is_empty() || self.extract.candidates.iter().any(|&n| n == 0 || n > MAX_CHANNELS) {
            return Err(bad(
                "extract.candidates",
                format!("channel counts must be in 1..={MAX_CHANNELS}"),
            ));
        }
        if self.is_stochastic() && self.seed.is_none() {
            return Err(bad(
                "seed",
                "a seed is required when noise or random gate bumps are configured",
            ));
        }
        Ok(())
    }

    pub fn gap_ghz(&self) -> f64 {
        micro_ev_to_ghz(self.gap_micro_ev)
    }

    /// Qubit template; `E_J` is replaced per gate point.
    pub fn qubit_template(&self) -> QubitParams {
        QubitParams::new(self.gate.ej_peak, self.qubit.ec)
            .with_gap(self.gap_ghz())
            .with_channels(self.qubit.n_channels)
    }

    pub fn resonator_params(&self) -> ResonatorParams {
        ResonatorParams {
            f0: self.resonator.f0,
            kappa: self.resonator.kappa,
            g: self.resonator.g,
        }
    }

    pub fn resonator_sweep(&self) -> ResonatorSweep {
        let s = &self.resonator_sweep;
        ResonatorSweep {
            freq_grid: linspace(s.f_min, s.f_max, s.n_points),
            depth: self.resonator.depth,
            guard_ratio: self.resonator.guard_ratio,
        }
    }

    pub fn twotone_sweep(&self) -> TwoToneSweep {
        let t = &self.twotone;
        TwoToneSweep {
            amplitude: t.amplitude,
            background: t.background,
            high_power_ratio: t.high_power_ratio,
            power_broadening: t.power_broadening,
            guard_ratio: self.resonator.guard_ratio,
            ..TwoToneSweep::new(linspace(t.f_min, t.f_max, t.n_points), t.t2prime)
        }
    }

    /// Hex SHA-256 of the canonical JSON form, output location excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputSection::default();
        let json = serde_json::to_string(&canonical).unwrap_or_default();
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
