//! Bare resonator frequency, dispersive shift and coupling versus qubit
//! frequency from resonator and low-power qubit spectroscopy maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::readout::g_from_shift;
use crate::synth::SpectroMap;
use crate::units::ghz_to_mhz;

use super::peaks::{find_peaks, Peak, Polarity, DEFAULT_MIN_PROMINENCE};

/// Shortest run of gate points accepted as an untuned region.
pub const MIN_UNTUNED_RUN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingPoint {
    pub vg: f64,
    /// Qubit frequency (GHz).
    pub fq: f64,
    /// Dressed resonator frequency (GHz).
    pub fr: f64,
    /// `fr - f0` (MHz).
    pub chi: f64,
    /// `sqrt(chi (fr - fq))` (MHz).
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingExtraction {
    /// Bare resonator frequency (GHz).
    pub f0: f64,
    /// Median fitted dip width (MHz).
    pub kappa: f64,
    /// Gate voltages bounding the untuned region; `None` when f0 was supplied.
    pub untuned: Option<(f64, f64)>,
    pub points: Vec<CouplingPoint>,
    /// Gate points with both a dip and a qubit line but a shift below `kappa/10`
    /// or of the wrong sign.
    pub omitted: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Deepest resonator dip of each row, if any.
pub fn resonator_dips(map: &SpectroMap) -> Result<Vec<Option<Peak>>> {
    map.validate()?;
    map.magnitude
        .iter()
        .map(|row| {
            let dips = find_peaks(&map.freq_grid, row, Polarity::Dip, DEFAULT_MIN_PROMINENCE)?;
            Ok(dips.into_iter().max_by(|a, b| a.prominence.total_cmp(&b.prominence)))
        })
        .collect()
}

/// Strongest qubit line of each row, if any.
pub fn qubit_lines(map: &SpectroMap) -> Result<Vec<Option<Peak>>> {
    map.validate()?;
    map.magnitude
        .iter()
        .map(|row| {
            let peaks = find_peaks(&map.freq_grid, row, Polarity::Peak, DEFAULT_MIN_PROMINENCE)?;
            Ok(peaks.into_iter().max_by(|a, b| a.prominence.total_cmp(&b.prominence)))
        })
        .collect()
}

/// Median dip frequency over the longest contiguous run of gate points whose
/// dip frequencies stay within `spread` (GHz) of each other. Returns
/// `(f0, first_index, last_index)`.
pub fn untuned_f0(dips: &[Option<f64>], spread: f64) -> Result<(f64, usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = 0;
    while start < dips.len() {
        let Some(first) = dips[start] else {
            start += 1;
            continue;
        };
        let (mut lo, mut hi) = (first, first);
        let mut end = start;
        while end + 1 < dips.len() {
            let Some(f) = dips[end + 1] else { break };
            if f.max(hi) - f.min(lo) >= spread {
                break;
            }
            lo = lo.min(f);
            hi = hi.max(f);
            end += 1;
        }
        if best.is_none_or(|(s, e)| end - start > e - s) {
            best = Some((start, end));
        }
        start += 1;
    }
    match best {
        Some((s, e)) if e - s + 1 >= MIN_UNTUNED_RUN => {
            let f0 = median(dips[s..=e].iter().flatten().copied().collect());
            Ok((f0, s, e))
        }
        _ => Err(Error::NoUntunedRegion),
    }
}

/// Coupling versus qubit frequency.
///
/// At each gate point with both a resonator dip at `fr` and a qubit line at
/// `fq`, `chi = fr - f0` and `g = sqrt(chi (fr - fq))`. `f0` is taken from the
/// untuned gate region (dip spread below `kappa/10`) unless `f0_override` is
/// given. Points whose shift is below `kappa/10` are omitted.
pub fn extract_g_vs_fq(
    resonator_map: &SpectroMap,
    qubit_map: &SpectroMap,
    f0_override: Option<f64>,
) -> Result<CouplingExtraction> {
    if resonator_map.vg_grid != qubit_map.vg_grid {
        return Err(Error::invalid("qubit_map", "maps do not share the gate-voltage grid"));
    }
    let dips = resonator_dips(resonator_map)?;
    let lines = qubit_lines(qubit_map)?;
    let widths: Vec<f64> = dips.iter().flatten().filter(|d| d.refined).map(|d| d.width).collect();
    if widths.is_empty() {
        return Err(Error::NoPeak("no resonator dip in the resonator map".into()));
    }
    let kappa_ghz = median(widths);
    let floor = kappa_ghz / 10.0;

    let (f0, untuned) = match f0_override {
        Some(f0) => (f0, None),
        None => {
            let centers: Vec<Option<f64>> = dips.iter().map(|d| d.map(|d| d.center)).collect();
            let (f0, s, e) = untuned_f0(&centers, floor)?;
            (f0, Some((resonator_map.vg_grid[s], resonator_map.vg_grid[e])))
        }
    };

    let mut points = Vec::new();
    let mut omitted = 0;
    for ((&vg, dip), line) in resonator_map.vg_grid.iter().zip(&dips).zip(&lines) {
        let (Some(dip), Some(line)) = (dip, line) else { continue };
        let shift = dip.center - f0;
        if shift.abs() < floor {
            omitted += 1;
            continue;
        }
        let chi = ghz_to_mhz(shift);
        match g_from_shift(chi, dip.center, line.center) {
            Ok(g) => points.push(CouplingPoint {
                vg,
                fq: line.center,
                fr: dip.center,
                chi,
                g,
            }),
            Err(Error::SignMismatch { .. }) => omitted += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(CouplingExtraction {
        f0,
        kappa: ghz_to_mhz(kappa_ghz),
        untuned,
        points,
        omitted,
    })
}
