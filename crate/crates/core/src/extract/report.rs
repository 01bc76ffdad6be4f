//! Aggregated device report.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::Measured;

use super::coherence::CoherencePoint;
use super::coupling::{CouplingExtraction, CouplingPoint};
use super::energies::{ChannelChoice, PointEnergies, SpectroscopyExtraction};

/// Sample mean and standard deviation (`n - 1` normalization).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeviceReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,

    /// Bare resonator frequency (GHz).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    /// Fitted resonator linewidth (MHz).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Lowest and highest qubit frequency seen (GHz).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fq_range: Option<(f64, f64)>,
    /// MHz
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_min: Option<f64>,
    /// MHz
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_max: Option<f64>,
    /// Largest dispersive shift, i.e. the maximum resonator excursion (MHz).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_max: Option<f64>,
    #[serde(default)]
    pub coupling: Vec<CouplingPoint>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<ChannelChoice>,
    #[serde(default)]
    pub points: Vec<PointEnergies>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ej: Option<Stats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ec: Option<Stats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ej_over_ec: Option<Stats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmission: Option<Stats>,
    /// Critical current (nA).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ic: Option<Stats>,

    #[serde(default)]
    pub t1: Vec<CoherencePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_mean: Option<Stats>,
    #[serde(default)]
    pub t2prime: Vec<CoherencePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2prime_mean: Option<Stats>,

    #[serde(default)]
    pub rabi: Vec<RabiPoint>,
    /// Rabi frequency per drive amplitude in the linear regime (MHz/V).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_slope: Option<Measured>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiPoint {
    /// V
    pub v_amp: f64,
    /// MHz
    pub omega: f64,
    pub sigma: f64,
}

/// Everything the report can be assembled from; any subset may be present.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    pub coupling: Option<CouplingExtraction>,
    pub spectroscopy: Option<SpectroscopyExtraction>,
    pub t1: Vec<CoherencePoint>,
    pub t2prime: Vec<CoherencePoint>,
    pub rabi: Vec<RabiPoint>,
    pub rabi_slope: Option<Measured>,
    pub config_hash: Option<String>,
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

pub fn build_report(inputs: ReportInputs) -> Result<DeviceReport> {
    if inputs.coupling.is_none()
        && inputs.spectroscopy.is_none()
        && inputs.t1.is_empty()
        && inputs.t2prime.is_empty()
        && inputs.rabi.is_empty()
    {
        return Err(Error::InsufficientData("no extraction product to report".into()));
    }
    let mut report = DeviceReport {
        config_hash: inputs.config_hash,
        ..DeviceReport::default()
    };

    if let Some(c) = inputs.coupling {
        report.f0 = Some(c.f0);
        report.kappa = Some(c.kappa);
        let g = range(c.points.iter().map(|p| p.g));
        report.g_min = g.map(|r| r.0);
        report.g_max = g.map(|r| r.1);
        report.chi_max = c.points.iter().map(|p| p.chi).reduce(f64::max);
        report.fq_range = range(c.points.iter().map(|p| p.fq));
        report.coupling = c.points;
    }

    if let Some(s) = inputs.spectroscopy {
        let p = &s.points;
        report.ej = Stats::of(p.iter().map(|p| p.ej));
        report.ec = Stats::of(p.iter().map(|p| p.ec));
        report.ej_over_ec = Stats::of(p.iter().map(|p| p.ej / p.ec));
        report.transmission = Stats::of(p.iter().map(|p| p.transmission));
        report.ic = Stats::of(p.iter().map(|p| p.ic));
        if let Some((lo, hi)) = range(p.iter().map(|p| p.f01)) {
            report.fq_range = Some(match report.fq_range {
                Some((a, b)) => (a.min(lo), b.max(hi)),
                None => (lo, hi),
            });
        }
        report.channels = Some(s.channels);
        report.points = s.points;
    }

    report.t1_mean = Stats::of(inputs.t1.iter().map(|p| p.value));
    report.t1 = inputs.t1;
    report.t2prime_mean = Stats::of(inputs.t2prime.iter().map(|p| p.value));
    report.t2prime = inputs.t2prime;
    report.rabi = inputs.rabi;
    report.rabi_slope = inputs.rabi_slope;
    Ok(report)
}
