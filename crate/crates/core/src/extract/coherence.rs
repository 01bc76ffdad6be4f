//! Relaxation (pulse-chop), spectroscopic coherence and Rabi-frequency
//! estimates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit, lorentzian_hwhm, FitModel, FitResult, Measured, ModelKind};
use crate::synth::{ChopMode, TimeTrace};

use super::peaks::{find_peaks, Polarity, DEFAULT_MIN_PROMINENCE};

/// A coherence time with its qubit frequency, when known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherencePoint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fq: Option<f64>,
    /// ns
    pub value: f64,
    /// ns
    pub sigma: f64,
}

fn converged(r: FitResult) -> Result<FitResult> {
    if r.converged {
        Ok(r)
    } else {
        Err(Error::NotConverged(r.message))
    }
}

/// Starting T1 for a chop fit: the best of a coarse log-spaced scan from a
/// tenth of the shortest to ten times the longest pulse period.
pub fn t1_chop_initial_guess(tau: &[f64], signal: &[f64], mode: ChopMode) -> f64 {
    let kind = mode.model();
    let sse = |t1: f64| -> f64 {
        tau.iter()
            .zip(signal)
            .map(|(&t, &y)| (y - kind.eval(&[t1], t)).powi(2))
            .sum()
    };
    let lo = tau.iter().copied().fold(f64::INFINITY, f64::min).max(f64::MIN_POSITIVE);
    let hi = tau.iter().copied().fold(lo, f64::max);
    let (a, b) = ((lo / 10.0).ln(), (hi * 10.0).ln());
    (0..=200)
        .map(|k| (a + (b - a) * k as f64 / 200.0).exp())
        .min_by(|x, y| sse(*x).total_cmp(&sse(*y)))
        .unwrap_or(hi)
}

/// T1 from a normalized pulse-chop curve, T1 being the only free parameter.
/// Returns `(t1, sigma)` in ns.
pub fn estimate_t1_chop(tau: &[f64], signal: &[f64], mode: ChopMode) -> Result<Measured> {
    let model = FitModel::new(mode.model());
    if tau.len() != signal.len() || tau.len() < 2 {
        return Err(Error::InsufficientData(format!("{} chop samples", tau.len())));
    }
    if !tau.iter().all(|t| *t > 0.0) {
        return Err(Error::invalid("tau", "pulse periods must be positive"));
    }
    let init = t1_chop_initial_guess(tau, signal, mode);
    let r = converged(fit(&model, tau, signal, &[init], None)?)?;
    Ok(Measured {
        value: r.params[0],
        sigma: r.sigmas[0],
    })
}

/// [`estimate_t1_chop`] on a trace.
pub fn estimate_t1_trace(trace: &TimeTrace, mode: ChopMode) -> Result<Measured> {
    estimate_t1_chop(&trace.t_grid, &trace.signal, mode)
}

/// `T2' = 1 / (2 pi HWHM)` in ns for a half width in GHz, with propagated sigma.
pub fn t2prime_from_hwhm(hwhm: Measured) -> Result<Measured> {
    if !(hwhm.value > 0.0) {
        return Err(Error::invalid("hwhm", format!("must be > 0, got {}", hwhm.value)));
    }
    let t2 = 1.0 / (2.0 * PI * hwhm.value);
    Ok(Measured {
        value: t2,
        sigma: t2 * hwhm.sigma / hwhm.value,
    })
}

/// T2' from a low-power qubit line: a Lorentzian fit over the whole trace
/// (frequency in GHz) gives the half width. More than one resolvable line is
/// refused, since it means the drive power is too high.
pub fn estimate_t2prime(freq: &[f64], signal: &[f64]) -> Result<Measured> {
    let peaks = find_peaks(freq, signal, Polarity::Peak, DEFAULT_MIN_PROMINENCE)?;
    let peak = match peaks.as_slice() {
        [] => return Err(Error::NoPeak("no qubit line in the trace".into())),
        [p] => *p,
        more => return Err(Error::MultiPeak { count: more.len() }),
    };
    let offset = signal[peak.index] - peak.amplitude;
    let init = [peak.center, peak.width, peak.amplitude, offset];
    let r = converged(fit(&FitModel::new(ModelKind::Lorentzian), freq, signal, &init, None)?)?;
    t2prime_from_hwhm(lorentzian_hwhm(&r)?)
}

/// Dominant oscillation frequency of `y` (cycles per unit of `t`), scanning
/// the discrete-time Fourier magnitude of the mean-subtracted samples.
fn dominant_frequency(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let span = t[n - 1] - t[0];
    let nyquist = 0.5 * (n - 1) as f64 / span;
    let df = 1.0 / (8.0 * span);
    let mut best = (0.0, df);
    let mut f = df;
    while f < nyquist {
        let (mut re, mut im) = (0.0, 0.0);
        for (&ti, &yi) in t.iter().zip(y) {
            let (s, c) = (2.0 * PI * f * (ti - t[0])).sin_cos();
            re += (yi - mean) * c;
            im += (yi - mean) * s;
        }
        let power = re * re + im * im;
        if power > best.0 {
            best = (power, f);
        }
        f += df;
    }
    best.1
}

/// Rabi frequency (MHz) from a monitored drive response.
///
/// The drive-off `reference` (if given) is subtracted, and an exponentially
/// decaying sinusoid is fitted over `window = (start, end)` ns with time
/// measured from `start`.
pub fn estimate_rabi_frequency(
    trace: &TimeTrace,
    reference: Option<&TimeTrace>,
    window: (f64, f64),
) -> Result<Measured> {
    let mut t = Vec::new();
    let mut y = Vec::new();
    if let Some(r) = reference {
        if r.t_grid != trace.t_grid {
            return Err(Error::invalid("reference", "time grid differs from the trace"));
        }
    }
    for (i, (&ti, &yi)) in trace.t_grid.iter().zip(&trace.signal).enumerate() {
        if ti >= window.0 && ti < window.1 {
            t.push(ti - window.0);
            y.push(yi - reference.map_or(0.0, |r| r.signal[i]));
        }
    }
    if t.len() < 16 {
        return Err(Error::InsufficientData(format!(
            "{} samples in the Rabi window",
            t.len()
        )));
    }
    let n = y.len();
    let tail = &y[n - n / 4..];
    let offset = tail.iter().sum::<f64>() / tail.len() as f64;
    let freq = dominant_frequency(&t, &y);
    let init = [y[0] - offset, freq, t[n - 1] / 3.0, 0.0, offset];
    let r = converged(fit(&FitModel::new(ModelKind::DecayingSine), &t, &y, &init, None)?)?;
    // cycles per ns -> MHz
    Ok(Measured {
        value: r.params[1].abs() * 1e3,
        sigma: r.sigmas[1] * 1e3,
    })
}

/// Slope (MHz/V) of a straight-line fit to `(amplitude, rabi_frequency)`
/// points with amplitude below `v_max`.
pub fn rabi_slope(points: &[(f64, f64)], v_max: f64) -> Result<Measured> {
    let (v, omega): (Vec<f64>, Vec<f64>) = points.iter().copied().filter(|(v, _)| *v < v_max).unzip();
    let r = converged(fit(&FitModel::new(ModelKind::Linear), &v, &omega, &[0.0, 1.0], None)?)?;
    Ok(Measured {
        value: r.params[1],
        sigma: r.sigmas[1],
    })
}
