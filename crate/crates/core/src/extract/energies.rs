//! (E_J, E_C) inversion, junction channel count and per-gate-point energies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{ic_from_ej, MAX_CHANNELS};

use super::peaks::PeakSet;

/// Transmissions up to this value are clamped to 1; larger ones are dropped.
pub const TRANSMISSION_CLAMP_LIMIT: f64 = 1.05;

/// Relative score difference below which two channel counts are a tie.
pub const AMBIGUITY_TOLERANCE: f64 = 0.01;

/// Closed-form inverse of the perturbative spectrum:
/// `E_C = alpha + 3 (f01 + alpha)^2 / (8 gap N)`, `E_J = (f01 + alpha)^2 / (8 E_C)`.
pub fn solve_ej_ec(f01: f64, alpha: f64, gap: f64, n_channels: u32) -> Result<(f64, f64)> {
    if !(f01 + alpha > 0.0) {
        return Err(Error::invalid(
            "f01",
            format!("f01 + alpha must be > 0, got {}", f01 + alpha),
        ));
    }
    if !(gap > 0.0) {
        return Err(Error::invalid("gap", format!("must be > 0, got {gap}")));
    }
    if n_channels == 0 {
        return Err(Error::invalid("n_channels", "must be > 0"));
    }
    let plasma_sq = (f01 + alpha).powi(2);
    let ec = alpha + 3.0 * plasma_sq / (8.0 * gap * n_channels as f64);
    if !(ec > 0.0) {
        return Err(Error::Unphysical(format!(
            "E_C = {ec} GHz from f01 = {f01}, alpha = {alpha}"
        )));
    }
    let ej = plasma_sq / (8.0 * ec);
    if !(ej > 0.0) {
        return Err(Error::Unphysical(format!("E_J = {ej} GHz")));
    }
    Ok((ej, ec))
}

/// `f01(T) = sqrt(2 gap E_C T N) - E_C (1 - 3T/4)` for `N` channels of
/// transmission `T`.
pub fn channel_curve(transmission: f64, ec: f64, gap: f64, n_channels: u32) -> f64 {
    (2.0 * gap * ec * transmission * n_channels as f64).sqrt() - ec * (1.0 - 0.75 * transmission)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScore {
    pub n_channels: u32,
    /// Sum of squared f01 residuals against [`channel_curve`] (GHz^2).
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelChoice {
    pub n_channels: u32,
    /// One entry per candidate, in candidate order.
    pub scores: Vec<ChannelScore>,
    /// Runner-up score divided by the best; `None` when the best fit is exact
    /// (or there is no runner-up) and the margin is unbounded.
    pub margin: Option<f64>,
    /// Set when the runner-up lies within 1% of the best score.
    pub ambiguous: bool,
}

fn choose(scores: Vec<ChannelScore>) -> Result<ChannelChoice> {
    let mut ranked = scores.clone();
    ranked.sort_by(|a, b| a.score.total_cmp(&b.score));
    let best = *ranked
        .first()
        .ok_or_else(|| Error::invalid("candidates", "empty candidate set"))?;
    let (margin, ambiguous) = match ranked.get(1) {
        None => (None, false),
        Some(r) => {
            let margin = if best.score > 0.0 {
                Some(r.score / best.score)
            } else if r.score > 0.0 {
                None
            } else {
                Some(1.0)
            };
            (margin, r.score <= (1.0 + AMBIGUITY_TOLERANCE) * best.score)
        }
    };
    Ok(ChannelChoice {
        n_channels: best.n_channels,
        scores,
        margin,
        ambiguous,
    })
}

fn check_candidates(candidates: &[u32]) -> Result<()> {
    if candidates.is_empty() || candidates.iter().any(|&n| n == 0 || n > MAX_CHANNELS) {
        return Err(Error::invalid(
            "candidates",
            format!("need channel counts in 1..={MAX_CHANNELS}"),
        ));
    }
    Ok(())
}

/// Channel count whose [`channel_curve`] best matches the measured
/// `(transmission, f01)` pairs at fixed `E_C`.
pub fn determine_n_channels(pairs: &[(f64, f64)], ec: f64, gap: f64, candidates: &[u32]) -> Result<ChannelChoice> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} (T, f01) pairs, need 3",
            pairs.len()
        )));
    }
    if !(ec > 0.0) {
        return Err(Error::invalid("ec", format!("must be > 0, got {ec}")));
    }
    if !(gap > 0.0) {
        return Err(Error::invalid("gap", format!("must be > 0, got {gap}")));
    }
    check_candidates(candidates)?;
    let scores = candidates
        .iter()
        .map(|&n| ChannelScore {
            n_channels: n,
            score: pairs
                .iter()
                .map(|&(t, f01)| (f01 - channel_curve(t, ec, gap, n)).powi(2))
                .sum(),
        })
        .collect();
    choose(scores)
}

/// Transmission inferred from `alpha` and `E_C`, clamped per
/// [`TRANSMISSION_CLAMP_LIMIT`]. `None` marks an invalid point.
pub fn clamp_transmission(raw: f64) -> Option<(f64, bool)> {
    if !(raw >= 0.0) || raw > TRANSMISSION_CLAMP_LIMIT {
        None
    } else if raw > 1.0 {
        Some((1.0, true))
    } else {
        Some((raw, false))
    }
}

/// Energies of one gate point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEnergies {
    pub vg: f64,
    pub f01: f64,
    pub f02_half: f64,
    pub alpha: f64,
    pub ej: f64,
    pub ec: f64,
    pub transmission: f64,
    /// Transmission exceeded 1 (by at most 5%) and was clamped.
    pub clamped: bool,
    /// Critical current (nA).
    pub ic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyExtraction {
    pub gap: f64,
    /// E_C used for the channel-count curves (GHz).
    pub ec_reference: f64,
    pub channels: ChannelChoice,
    /// Candidates left unscored because fewer than three points gave a
    /// physical transmission.
    pub infeasible: Vec<u32>,
    pub points: Vec<PointEnergies>,
    /// Paired columns discarded as unphysical.
    pub rejected: usize,
}

/// Per-point solution for `N` channels; `None` when unphysical.
fn solve_point(vg: f64, f01: f64, f02_half: f64, gap: f64, n: u32) -> Option<PointEnergies> {
    let alpha = 2.0 * (f01 - f02_half);
    let (ej, ec) = solve_ej_ec(f01, alpha, gap, n).ok()?;
    let (transmission, clamped) = clamp_transmission(4.0 * ej / (gap * n as f64))?;
    Some(PointEnergies {
        vg,
        f01,
        f02_half,
        alpha,
        ej,
        ec,
        transmission,
        clamped,
        ic: ic_from_ej(ej).ok()?.ic,
    })
}

/// Channel count and per-point energies from the paired high-power lines.
///
/// Each candidate `N` is scored against [`channel_curve`] with transmissions
/// `T = (4/3)(1 - alpha/E_C)`. With `ec_reference` given, that E_C is used for
/// every candidate; otherwise each candidate uses the mean E_C of its own
/// per-point solutions, so only the true `N` yields a gate-independent E_C
/// that places every point on its curve.
pub fn analyze_pairs(
    columns: &[PeakSet],
    gap: f64,
    ec_reference: Option<f64>,
    candidates: &[u32],
) -> Result<SpectroscopyExtraction> {
    check_candidates(candidates)?;
    let paired: Vec<(f64, f64, f64)> = columns
        .iter()
        .filter_map(|c| c.pair.map(|p| (c.vg, p.f01, p.f02_half)))
        .collect();
    if paired.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} paired columns, need 3",
            paired.len()
        )));
    }

    let mut scores = Vec::with_capacity(candidates.len());
    let mut refs = Vec::with_capacity(candidates.len());
    let mut infeasible = Vec::new();
    for &n in candidates {
        let ec_n = match ec_reference {
            Some(ec) => ec,
            None => {
                let ecs: Vec<f64> = paired
                    .iter()
                    .filter_map(|&(vg, f01, f02)| solve_point(vg, f01, f02, gap, n).map(|p| p.ec))
                    .collect();
                if ecs.is_empty() {
                    f64::NAN
                } else {
                    ecs.iter().sum::<f64>() / ecs.len() as f64
                }
            }
        };
        let pairs: Vec<(f64, f64)> = paired
            .iter()
            .filter_map(|&(_, f01, f02)| {
                let alpha = 2.0 * (f01 - f02);
                let raw = 4.0 / 3.0 * (1.0 - alpha / ec_n);
                clamp_transmission(raw).map(|(t, _)| (t, f01))
            })
            .collect();
        if pairs.len() >= 3 && ec_n > 0.0 {
            scores.push(determine_n_channels(&pairs, ec_n, gap, &[n])?.scores[0]);
            refs.push(ec_n);
        } else {
            infeasible.push(n);
        }
    }
    if scores.is_empty() {
        return Err(Error::Unphysical(
            "no channel count yields physical transmissions".into(),
        ));
    }
    let channels = choose(scores)?;
    let ec_ref = refs[channels
        .scores
        .iter()
        .position(|s| s.n_channels == channels.n_channels)
        .unwrap_or(0)];

    let points: Vec<PointEnergies> = paired
        .iter()
        .filter_map(|&(vg, f01, f02)| solve_point(vg, f01, f02, gap, channels.n_channels))
        .collect();
    Ok(SpectroscopyExtraction {
        gap,
        ec_reference: ec_ref,
        rejected: paired.len() - points.len(),
        channels,
        infeasible,
        points,
    })
}
