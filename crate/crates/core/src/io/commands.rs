//! Command drivers behind the `gatequbit` binary.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{
    analyze_pairs, build_report, estimate_rabi_frequency, estimate_t1_trace, estimate_t2prime, extract_g_vs_fq,
    map_peaks, rabi_slope, t1_chop_initial_guess, CoherencePoint, DeviceReport, Polarity, RabiPoint, ReportInputs,
    DEFAULT_MIN_PROMINENCE,
};
use crate::fit::{fit, FitModel, FitResult, ModelKind};
use crate::synth::{
    dressed_track, linspace, make_gate_profile, qubit_track, synth_rabi_amplitude_sweep, synth_resonator_map,
    synth_t1_chop, synth_twotone_map, ChopMode, DrivePower, GateProfile, SpectroMap, TimeTrace,
};

use super::config::{ExtractSection, RunConfig};
use super::format::{
    read_json, read_spectro_map, read_time_trace, write_json, write_spectro_map, write_time_trace, write_trace, Axis,
    Column, TraceFile,
};

pub const RESONATOR_MAP: &str = "resonator_map.dat";
pub const TWOTONE_LOW: &str = "twotone_low.dat";
pub const TWOTONE_HIGH: &str = "twotone_high.dat";
pub const TRUTH: &str = "truth.json";
pub const REPORT: &str = "report.json";
const CHOP_PREFIX: &str = "t1_chop_";
const RABI_PREFIX: &str = "rabi_";

/// Seed for the `k`-th synthetic product of a run.
fn product_seed(seed: u64, k: u64) -> u64 {
    seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Injected per-gate-point values, written alongside the synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub vg: f64,
    pub ej: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f01: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Dressed resonator frequency (GHz).
    pub fr: f64,
    /// MHz
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub config_hash: String,
    pub profile: GateProfile,
    pub rows: Vec<TruthRow>,
}

/// Generates every configured synthetic product into `out`. Returns the
/// written data files.
pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    create_dir(out)?;
    let hash = cfg.hash();
    let seed = cfg.seed.unwrap_or(0);
    let g = &cfg.gate;
    let mut profile = make_gate_profile(seed, (g.vg_min, g.vg_max), g.n_points, g.n_bumps, g.ej_floor, g.ej_peak)?;
    if let Some(v) = g.pinch_off {
        profile = profile.with_pinch_off(v);
    }
    let qp = cfg.qubit_template();
    let rp = cfg.resonator_params();
    let mut written = Vec::new();

    let stamp = |mut map: SpectroMap| {
        map.meta.config_hash = Some(hash.clone());
        map
    };
    let res = stamp(synth_resonator_map(
        &profile,
        &qp,
        &rp,
        &cfg.resonator_sweep(),
        cfg.resonator_sweep.noise_sigma,
        product_seed(seed, 1),
    )?);
    let path = out.join(RESONATOR_MAP);
    write_spectro_map(&path, &res, Axis::new("magnitude", "linear"))?;
    written.push(path);

    let sweep = cfg.twotone_sweep();
    for (power, name, k) in [(DrivePower::Low, TWOTONE_LOW, 2), (DrivePower::High, TWOTONE_HIGH, 3)] {
        let map = stamp(synth_twotone_map(
            &profile,
            &qp,
            &rp,
            &sweep,
            power,
            cfg.twotone.noise_sigma,
            product_seed(seed, k),
        )?);
        let path = out.join(name);
        write_spectro_map(&path, &map, Axis::new("response", "arb"))?;
        written.push(path);
    }

    let track = qubit_track(&profile, &qp)?;
    let dressed = dressed_track(&profile, &qp, &rp, cfg.resonator.guard_ratio)?;
    let rows = profile
        .vg_grid
        .iter()
        .zip(&profile.ej_of_vg)
        .zip(track.iter().zip(&dressed))
        .map(|((&vg, &ej), (s, d))| TruthRow {
            vg,
            ej,
            f01: s.as_ref().map(|s| s.f01),
            alpha: s.as_ref().map(|s| s.alpha),
            fr: d.map_or(rp.f0, |d| d.fr),
            chi: d.map(|d| d.chi),
        })
        .collect();
    write_json(
        &out.join(TRUTH),
        &Truth {
            config_hash: hash.clone(),
            profile: profile.clone(),
            rows,
        },
    )?;

    if let Some(c) = &cfg.t1_chop {
        let with_qubit: Vec<usize> = (0..track.len()).filter(|&i| track[i].is_some()).collect();
        let tau = linspace(c.tau_min, c.tau_max, c.n_points);
        for k in 0..c.n_traces.min(with_qubit.len()) {
            let pick = if c.n_traces > 1 {
                with_qubit[k * (with_qubit.len() - 1) / (c.n_traces - 1)]
            } else {
                with_qubit[with_qubit.len() / 2]
            };
            let mut trace = synth_t1_chop(
                c.t1,
                &tau,
                c.mode,
                c.noise_sigma,
                product_seed(seed, 100 + k as u64),
                c.if_freq,
            )?;
            trace.meta.config_hash = Some(hash.clone());
            trace.meta.extra.insert("vg".into(), profile.vg_grid[pick]);
            if let Some(s) = &track[pick] {
                trace.meta.extra.insert("fq_ghz".into(), s.f01);
            }
            let path = out.join(format!("{CHOP_PREFIX}{k:02}.dat"));
            write_time_trace(&path, &trace, Axis::new("tau", "ns"), Axis::new("signal", "normalized"))?;
            written.push(path);
        }
    }

    if let Some(r) = &cfg.rabi {
        let t = linspace(0.0, r.t_max, r.n_points);
        let law = r.law.unwrap_or_default();
        let timing = r.timing.unwrap_or_default();
        let timing = crate::synth::RabiMonitorConfig {
            kappa: if r.timing.is_some() {
                timing.kappa
            } else {
                cfg.resonator.kappa
            },
            ..timing
        };
        let traces = synth_rabi_amplitude_sweep(
            &r.amplitudes,
            &law,
            r.decay,
            &t,
            r.noise_sigma,
            product_seed(seed, 4),
            &timing,
        )?;
        for (k, mut trace) in traces.into_iter().enumerate() {
            trace.meta.config_hash = Some(hash.clone());
            let path = out.join(format!("{RABI_PREFIX}{k:02}.dat"));
            write_time_trace(&path, &trace, Axis::new("t", "ns"), Axis::new("signal", "arb"))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Extraction settings not carried by the data files.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractSettings {
    /// GHz
    pub gap: f64,
    pub extract: ExtractSection,
    pub force_mixed_hash: bool,
}

impl ExtractSettings {
    pub fn from_config(cfg: Option<&RunConfig>, force_mixed_hash: bool) -> Self {
        Self {
            gap: cfg.map_or(crate::units::micro_ev_to_ghz(crate::units::DEFAULT_GAP_MICRO_EV), |c| {
                c.gap_ghz()
            }),
            extract: cfg.map(|c| c.extract.clone()).unwrap_or_default(),
            force_mixed_hash,
        }
    }
}

/// Result of [`cmd_extract`]: the report plus non-fatal notes.
#[derive(Debug, Clone)]
pub struct ExtractOutcome {
    pub report: DeviceReport,
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn prefixed_files(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(prefix) && n.ends_with(".dat"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn optional_map(path: PathBuf) -> Result<Option<SpectroMap>> {
    if path.exists() {
        read_spectro_map(&path).map(Some)
    } else {
        Ok(None)
    }
}

fn check_hashes<'a>(hashes: impl Iterator<Item = &'a Option<String>>, force: bool) -> Result<Option<String>> {
    let distinct: BTreeSet<&str> = hashes.flatten().map(String::as_str).collect();
    match distinct.len() {
        0 => Ok(None),
        1 => Ok(distinct.into_iter().next().map(str::to_string)),
        _ if force => Ok(Some("mixed".into())),
        _ => Err(Error::MixedHash(distinct.into_iter().collect::<Vec<_>>().join(", "))),
    }
}

fn plot(path: &Path, hash: &Option<String>, columns: Vec<Column>) -> Result<()> {
    write_trace(
        path,
        &TraceFile {
            columns,
            config_hash: hash.clone(),
        },
    )
}

fn histogram(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    if values.is_empty() {
        return (vec![], vec![]);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = (values.len() as f64).sqrt().ceil().max(1.0) as usize;
    if hi == lo {
        return (vec![lo], vec![values.len() as f64]);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0.0; bins];
    for v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1.0;
    }
    let centers = (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect();
    (centers, counts)
}

fn chop_mode(trace: &TimeTrace) -> ChopMode {
    match trace.meta.kind.parse::<ModelKind>() {
        Ok(ModelKind::T1ChopReflection) => ChopMode::Reflection,
        _ => ChopMode::Transmission,
    }
}

/// Runs the extraction chain on the data files in `input` and writes the
/// report and plot data into `out`.
pub fn cmd_extract(input: &Path, out: &Path, settings: &ExtractSettings) -> Result<ExtractOutcome> {
    if !input.is_dir() {
        return Err(Error::io(
            input,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input directory not found"),
        ));
    }
    let res = optional_map(input.join(RESONATOR_MAP))?;
    let low = optional_map(input.join(TWOTONE_LOW))?;
    let high = optional_map(input.join(TWOTONE_HIGH))?;
    let chops = prefixed_files(input, CHOP_PREFIX)?
        .iter()
        .map(|p| read_time_trace(p))
        .collect::<Result<Vec<_>>>()?;
    let rabis = prefixed_files(input, RABI_PREFIX)?
        .iter()
        .map(|p| read_time_trace(p))
        .collect::<Result<Vec<_>>>()?;

    let hashes: Vec<Option<String>> = [&res, &low, &high]
        .into_iter()
        .flatten()
        .map(|m| m.meta.config_hash.clone())
        .chain(chops.iter().chain(&rabis).map(|t| t.meta.config_hash.clone()))
        .collect();
    let hash = check_hashes(hashes.iter(), settings.force_mixed_hash)?;

    let mut warnings = Vec::new();
    let mut inputs = ReportInputs {
        config_hash: hash.clone(),
        ..ReportInputs::default()
    };
    let ex = &settings.extract;

    if let (Some(res), Some(low)) = (&res, &low) {
        match extract_g_vs_fq(res, low, ex.f0) {
            Ok(c) => inputs.coupling = Some(c),
            Err(e @ Error::NoUntunedRegion) => return Err(e),
            Err(e) => warnings.push(format!("coupling: {e}")),
        }
    }
    if let Some(high) = &high {
        let columns = map_peaks(high, Polarity::Peak, DEFAULT_MIN_PROMINENCE)?;
        match analyze_pairs(&columns, settings.gap, ex.ec_reference, &ex.candidates) {
            Ok(s) => {
                if s.channels.ambiguous {
                    warnings.push(format!("channel count {} is ambiguous", s.channels.n_channels));
                }
                inputs.spectroscopy = Some(s);
            }
            Err(e) => warnings.push(format!("spectroscopy: {e}")),
        }
    }
    if let Some(low) = &low {
        for row in &low.magnitude {
            match estimate_t2prime(&low.freq_grid, row) {
                Ok(t2) => {
                    let fq = crate::extract::find_peaks(&low.freq_grid, row, Polarity::Peak, DEFAULT_MIN_PROMINENCE)?
                        .first()
                        .map(|p| p.center);
                    inputs.t2prime.push(CoherencePoint {
                        fq,
                        value: t2.value,
                        sigma: t2.sigma,
                    });
                }
                Err(Error::NoPeak(_)) => {}
                Err(e) => warnings.push(format!("t2prime: {e}")),
            }
        }
    }
    for trace in &chops {
        match estimate_t1_trace(trace, chop_mode(trace)) {
            Ok(t1) => inputs.t1.push(CoherencePoint {
                fq: trace.meta.extra.get("fq_ghz").copied(),
                value: t1.value,
                sigma: t1.sigma,
            }),
            Err(e) => warnings.push(format!("t1: {e}")),
        }
    }
    if !rabis.is_empty() {
        let amp = |t: &TimeTrace| t.meta.extra.get("v_amp").copied();
        let reference = rabis.iter().find(|t| amp(t) == Some(0.0));
        for trace in &rabis {
            let Some(v) = amp(trace).filter(|v| *v > 0.0) else {
                continue;
            };
            let on = trace.meta.extra.get("qubit_on_ns").copied().unwrap_or(0.0);
            let off = trace.meta.extra.get("qubit_off_ns").copied().unwrap_or(f64::INFINITY);
            match estimate_rabi_frequency(trace, reference, (on, off)) {
                Ok(w) => inputs.rabi.push(RabiPoint {
                    v_amp: v,
                    omega: w.value,
                    sigma: w.sigma,
                }),
                Err(e) => warnings.push(format!("rabi at {v} V: {e}")),
            }
        }
        let pts: Vec<(f64, f64)> = inputs.rabi.iter().map(|p| (p.v_amp, p.omega)).collect();
        if pts.iter().filter(|(v, _)| *v < ex.rabi_v_max).count() >= 3 {
            match rabi_slope(&pts, ex.rabi_v_max) {
                Ok(s) => inputs.rabi_slope = Some(s),
                Err(e) => warnings.push(format!("rabi slope: {e}")),
            }
        }
    }

    let report = build_report(inputs)?;
    create_dir(out)?;
    let mut written = Vec::new();
    let path = out.join(REPORT);
    write_json(&path, &report)?;
    written.push(path);

    if !report.coupling.is_empty() {
        let c = &report.coupling;
        let path = out.join("g_vs_fq.dat");
        plot(
            &path,
            &hash,
            vec![
                Column::new("fq", "GHz", c.iter().map(|p| p.fq).collect()),
                Column::new("g", "MHz", c.iter().map(|p| p.g).collect()),
                Column::new("chi", "MHz", c.iter().map(|p| p.chi).collect()),
            ],
        )?;
        written.push(path);
    }
    if !report.points.is_empty() {
        let p = &report.points;
        let path = out.join("ej_vs_fq.dat");
        plot(
            &path,
            &hash,
            vec![
                Column::new("fq", "GHz", p.iter().map(|p| p.f01).collect()),
                Column::new("ej", "GHz", p.iter().map(|p| p.ej).collect()),
                Column::new("ec", "GHz", p.iter().map(|p| p.ec).collect()),
                Column::new("transmission", "1", p.iter().map(|p| p.transmission).collect()),
                Column::new("ic", "nA", p.iter().map(|p| p.ic).collect()),
            ],
        )?;
        written.push(path);
        let (centers, counts) = histogram(&p.iter().map(|p| p.ec).collect::<Vec<_>>());
        let path = out.join("ec_hist.dat");
        plot(
            &path,
            &hash,
            vec![Column::new("ec", "GHz", centers), Column::new("count", "1", counts)],
        )?;
        written.push(path);
    }
    for (name, points) in [("t1_vs_fq.dat", &report.t1), ("t2prime_vs_fq.dat", &report.t2prime)] {
        let with_fq: Vec<&CoherencePoint> = points.iter().filter(|p| p.fq.is_some()).collect();
        if with_fq.is_empty() {
            continue;
        }
        let label = name.split("_vs").next().unwrap_or("t");
        let path = out.join(name);
        plot(
            &path,
            &hash,
            vec![
                Column::new("fq", "GHz", with_fq.iter().filter_map(|p| p.fq).collect()),
                Column::new(label, "ns", with_fq.iter().map(|p| p.value).collect()),
                Column::new("sigma", "ns", with_fq.iter().map(|p| p.sigma).collect()),
            ],
        )?;
        written.push(path);
    }
    if !report.rabi.is_empty() {
        let r = &report.rabi;
        let path = out.join("rabi_vs_amplitude.dat");
        plot(
            &path,
            &hash,
            vec![
                Column::new("v_amp", "V", r.iter().map(|p| p.v_amp).collect()),
                Column::new("omega", "MHz", r.iter().map(|p| p.omega).collect()),
                Column::new("sigma", "MHz", r.iter().map(|p| p.sigma).collect()),
            ],
        )?;
        written.push(path);
    }
    Ok(ExtractOutcome {
        report,
        written,
        warnings,
    })
}

/// Fits `model` to the first two columns of a trace file. Chop models may
/// omit `init`; every other model needs one starting value per parameter.
pub fn cmd_fit(model: &str, input: &Path, init: Option<&[f64]>) -> Result<FitResult> {
    let kind: ModelKind = model.parse()?;
    let trace = read_time_trace(input)?;
    let init = match (init, kind) {
        (Some(p), _) => p.to_vec(),
        (None, ModelKind::T1ChopTransmission) => vec![t1_chop_initial_guess(
            &trace.t_grid,
            &trace.signal,
            ChopMode::Transmission,
        )],
        (None, ModelKind::T1ChopReflection) => vec![t1_chop_initial_guess(
            &trace.t_grid,
            &trace.signal,
            ChopMode::Reflection,
        )],
        (None, _) => {
            return Err(Error::Config {
                field: "init".into(),
                reason: format!("{kind} needs starting values for {}", kind.param_names().join(", ")),
            })
        }
    };
    fit(&FitModel::new(kind), &trace.t_grid, &trace.signal, &init, None)
}

pub fn read_report(path: &Path) -> Result<DeviceReport> {
    read_json(path)
}

fn stats_line(out: &mut String, label: &str, s: &Option<crate::extract::Stats>, unit: &str) {
    if let Some(s) = s {
        out.push_str(&format!(
            "{label:<14}{:.4} +- {:.4} {unit} (n = {})\n",
            s.mean, s.std, s.n
        ));
    }
}

/// Plain-text summary of a device report.
pub fn render_report(r: &DeviceReport) -> String {
    let mut out = String::new();
    if let Some(f0) = r.f0 {
        out.push_str(&format!("{:<14}{f0:.6} GHz\n", "f0"));
    }
    if let Some(k) = r.kappa {
        out.push_str(&format!("{:<14}{k:.3} MHz\n", "kappa"));
    }
    if let Some((lo, hi)) = r.fq_range {
        out.push_str(&format!("{:<14}{lo:.3} - {hi:.3} GHz\n", "fq range"));
    }
    if let (Some(lo), Some(hi)) = (r.g_min, r.g_max) {
        out.push_str(&format!("{:<14}{lo:.1} - {hi:.1} MHz\n", "g"));
    }
    if let Some(c) = r.chi_max {
        out.push_str(&format!("{:<14}{c:.2} MHz\n", "chi_max"));
    }
    if let Some(c) = &r.channels {
        let margin = c.margin.map_or("unbounded".to_string(), |m| format!("{m:.3e}"));
        out.push_str(&format!(
            "{:<14}{} (margin {margin}{})\n",
            "channels",
            c.n_channels,
            if c.ambiguous { ", ambiguous" } else { "" }
        ));
    }
    stats_line(&mut out, "E_J", &r.ej, "GHz");
    stats_line(&mut out, "E_C", &r.ec, "GHz");
    stats_line(&mut out, "E_J/E_C", &r.ej_over_ec, "");
    stats_line(&mut out, "T", &r.transmission, "");
    stats_line(&mut out, "I_c", &r.ic, "nA");
    stats_line(&mut out, "T1", &r.t1_mean, "ns");
    stats_line(&mut out, "T2'", &r.t2prime_mean, "ns");
    if let Some(s) = r.rabi_slope {
        out.push_str(&format!("{:<14}{:.2} +- {:.2} MHz/V\n", "Rabi slope", s.value, s.sigma));
    }
    if out.is_empty() {
        out.push_str("empty report\n");
    }
    out
}
