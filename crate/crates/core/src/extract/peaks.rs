//! Peak and dip detection on 1-D spectroscopy traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit, FitModel, ModelKind};

/// Default detection threshold, in units of the robust noise scale.
pub const DEFAULT_MIN_PROMINENCE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Peak,
    Dip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Sample index of the raw extremum.
    pub index: usize,
    /// Refined center, in the units of the x axis.
    pub center: f64,
    /// Signed height above the trace baseline (negative for dips).
    pub amplitude: f64,
    /// Full width at half maximum, `> 0`.
    pub width: f64,
    /// Topographic prominence in raw signal units.
    pub prominence: f64,
    /// Whether the local Lorentzian refinement succeeded; otherwise center
    /// and width are the raw sample estimates.
    pub refined: bool,
}

/// The two clearest lines of a high-power trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakPair {
    pub f01: f64,
    pub f02_half: f64,
}

impl PeakPair {
    /// Anharmonicity `2 (f01 - f02/2)`.
    pub fn alpha(&self) -> f64 {
        2.0 * (self.f01 - self.f02_half)
    }
}

/// Peaks of one gate-voltage column and, where possible, their pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub vg: f64,
    /// Sorted by center.
    pub peaks: Vec<Peak>,
    pub pair: Option<PeakPair>,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Robust white-noise scale `1.4826 MAD(diff(y)) / sqrt(2)`, floored at
/// `1e-9` of the signal range.
pub fn noise_scale(y: &[f64]) -> f64 {
    if y.len() < 3 {
        return 0.0;
    }
    let mut d: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let m = median(&mut d.clone());
    for v in &mut d {
        *v = (*v - m).abs();
    }
    let mad = median(&mut d);
    let (lo, hi) = y
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    (1.4826 * mad / std::f64::consts::SQRT_2).max(1e-9 * (hi - lo))
}

/// Prominence of the local maximum at `i` and the indices of the lowest
/// points on either side before a higher sample (or the trace end).
fn prominence(z: &[f64], i: usize) -> (f64, usize, usize) {
    let (mut lmin, mut li) = (z[i], i);
    for j in (0..i).rev() {
        if z[j] > z[i] {
            break;
        }
        if z[j] < lmin {
            lmin = z[j];
            li = j;
        }
    }
    let (mut rmin, mut ri) = (z[i], i);
    for (j, &v) in z.iter().enumerate().skip(i + 1) {
        if v > z[i] {
            break;
        }
        if v < rmin {
            rmin = v;
            ri = j;
        }
    }
    (z[i] - lmin.max(rmin), li, ri)
}

/// Full width at half height above `base`, from linear interpolation of the
/// half-level crossings around `i`.
fn half_width(x: &[f64], z: &[f64], i: usize, base: f64) -> f64 {
    let half = base + 0.5 * (z[i] - base);
    let mut left = x[0];
    for j in (0..i).rev() {
        if z[j] < half {
            left = x[j] + (half - z[j]) / (z[j + 1] - z[j]) * (x[j + 1] - x[j]);
            break;
        }
    }
    let mut right = x[x.len() - 1];
    for j in i + 1..z.len() {
        if z[j] < half {
            right = x[j - 1] + (z[j - 1] - half) / (z[j - 1] - z[j]) * (x[j] - x[j - 1]);
            break;
        }
    }
    let step = if i + 1 < x.len() {
        x[i + 1] - x[i]
    } else {
        x[i] - x[i - 1]
    };
    (right - left).max(step)
}

/// Local extrema whose height above the median baseline and whose
/// topographic prominence both exceed `min_prominence` robust noise scales,
/// each refined by a Lorentzian fit over its neighborhood. Sorted by center.
pub fn find_peaks(x: &[f64], y: &[f64], polarity: Polarity, min_prominence: f64) -> Result<Vec<Peak>> {
    if x.len() != y.len() {
        return Err(Error::invalid("trace", "x and y lengths differ"));
    }
    if y.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(Error::invalid("trace", "non-finite sample"));
    }
    if y.len() < 3 {
        return Ok(Vec::new());
    }
    let sign = match polarity {
        Polarity::Peak => 1.0,
        Polarity::Dip => -1.0,
    };
    let z: Vec<f64> = y.iter().map(|v| sign * v).collect();
    let base = median(&mut z.clone());
    let threshold = min_prominence * noise_scale(&z);

    struct Candidate {
        index: usize,
        prominence: f64,
    }
    let mut found: Vec<Candidate> = (1..z.len() - 1)
        .filter(|&i| z[i] > z[i - 1] && z[i] >= z[i + 1] && z[i] - base > threshold)
        .filter_map(|i| {
            let (p, _, _) = prominence(&z, i);
            (p > threshold).then_some(Candidate {
                index: i,
                prominence: p,
            })
        })
        .collect();
    found.sort_by_key(|c| c.index);

    let mut peaks = Vec::with_capacity(found.len());
    for (k, c) in found.iter().enumerate() {
        let i = c.index;
        let width = half_width(x, &z, i, base);
        // Fit window: +-3 widths, not crossing the valley towards a neighbor.
        let mut lo_x = x[i] - 3.0 * width;
        let mut hi_x = x[i] + 3.0 * width;
        if k > 0 {
            let prev = found[k - 1].index;
            let valley = (prev..=i).min_by(|&a, &b| z[a].total_cmp(&z[b])).unwrap_or(prev);
            lo_x = lo_x.max(x[valley]);
        }
        if k + 1 < found.len() {
            let next = found[k + 1].index;
            let valley = (i..=next).min_by(|&a, &b| z[a].total_cmp(&z[b])).unwrap_or(next);
            hi_x = hi_x.min(x[valley]);
        }
        let mut lo = x.partition_point(|&v| v < lo_x);
        let mut hi = x.partition_point(|&v| v <= hi_x);
        while hi - lo < 7 && (lo > 0 || hi < x.len()) {
            lo = lo.saturating_sub(1);
            hi = (hi + 1).min(x.len());
        }
        let amplitude = z[i] - base;
        let mut peak = Peak {
            index: i,
            center: x[i],
            amplitude: sign * amplitude,
            width,
            prominence: c.prominence,
            refined: false,
        };
        let init = [x[i], width, amplitude, base];
        if let Ok(r) = fit(
            &FitModel::new(ModelKind::Lorentzian),
            &x[lo..hi],
            &z[lo..hi],
            &init,
            None,
        ) {
            let (center, fwhm, amp) = (r.params[0], r.params[1].abs(), r.params[2]);
            if r.converged && center >= x[lo] && center <= x[hi - 1] && fwhm > 0.0 && amp > 0.0 {
                peak.center = center;
                peak.width = fwhm;
                peak.amplitude = sign * amp;
                peak.refined = true;
            }
        }
        peaks.push(peak);
    }
    peaks.sort_by(|a, b| a.center.total_cmp(&b.center));
    Ok(peaks)
}

/// Pairs the two most prominent peaks into `(f01, f02/2)` when they are
/// separated by more than the larger of their widths.
pub fn pair_peaks(peaks: &[Peak]) -> Option<PeakPair> {
    if peaks.len() < 2 {
        return None;
    }
    let mut by_prominence: Vec<&Peak> = peaks.iter().collect();
    by_prominence.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
    let (a, b) = (by_prominence[0], by_prominence[1]);
    if (a.center - b.center).abs() <= a.width.max(b.width) {
        return None;
    }
    Some(PeakPair {
        f01: a.center.max(b.center),
        f02_half: a.center.min(b.center),
    })
}

/// Peaks of every row of `map` (one [`PeakSet`] per gate voltage).
pub fn map_peaks(map: &crate::synth::SpectroMap, polarity: Polarity, min_prominence: f64) -> Result<Vec<PeakSet>> {
    map.validate()?;
    map.vg_grid
        .iter()
        .zip(&map.magnitude)
        .map(|(&vg, row)| {
            let peaks = find_peaks(&map.freq_grid, row, polarity, min_prominence)?;
            let pair = pair_peaks(&peaks);
            Ok(PeakSet { vg, peaks, pair })
        })
        .collect()
}
