//! Closed-form model functions and their analytic parameter gradients.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Below `tau < CHOP_SERIES_THRESHOLD * T1` the pulse-chop model is evaluated
/// from its series expansion.
pub const CHOP_SERIES_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `offset + amplitude / (1 + (2 (x - center) / fwhm)^2)`
    Lorentzian,
    /// `offset + amplitude * exp(-x / tau)`
    ExpDecay,
    /// `offset + amplitude * exp(-x / decay) * cos(2 pi freq x + phase)`
    DecayingSine,
    /// `1/2 + T1 (1 - exp(-x / (2 T1))) / x`
    T1ChopTransmission,
    /// `1/2 - T1 (1 - exp(-x / (2 T1))) / x`
    T1ChopReflection,
    /// `intercept + slope * x`
    Linear,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Lorentzian,
        ModelKind::ExpDecay,
        ModelKind::DecayingSine,
        ModelKind::T1ChopTransmission,
        ModelKind::T1ChopReflection,
        ModelKind::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lorentzian => "lorentzian",
            ModelKind::ExpDecay => "exp_decay",
            ModelKind::DecayingSine => "decaying_sine",
            ModelKind::T1ChopTransmission => "t1_chop_transmission",
            ModelKind::T1ChopReflection => "t1_chop_reflection",
            ModelKind::Linear => "linear",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Lorentzian => &["center", "fwhm", "amplitude", "offset"],
            ModelKind::ExpDecay => &["amplitude", "tau", "offset"],
            ModelKind::DecayingSine => &["amplitude", "freq", "decay", "phase", "offset"],
            ModelKind::T1ChopTransmission | ModelKind::T1ChopReflection => &["t1"],
            ModelKind::Linear => &["intercept", "slope"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    /// Value at `x`. `p` must hold `n_params()` entries.
    pub fn eval(self, p: &[f64], x: f64) -> f64 {
        match self {
            ModelKind::Lorentzian => {
                let u = 2.0 * (x - p[0]) / p[1];
                p[3] + p[2] / (1.0 + u * u)
            }
            ModelKind::ExpDecay => p[2] + p[0] * (-x / p[1]).exp(),
            ModelKind::DecayingSine => {
                let theta = 2.0 * PI * p[1] * x + p[3];
                p[4] + p[0] * (-x / p[2]).exp() * theta.cos()
            }
            ModelKind::T1ChopTransmission => 0.5 + chop_term(x, p[0]),
            ModelKind::T1ChopReflection => 0.5 - chop_term(x, p[0]),
            ModelKind::Linear => p[0] + p[1] * x,
        }
    }

    /// Analytic gradient with respect to the parameters, written into `out`.
    pub fn gradient(self, p: &[f64], x: f64, out: &mut [f64]) {
        match self {
            ModelKind::Lorentzian => {
                let (center, width, amp) = (p[0], p[1], p[2]);
                let u = 2.0 * (x - center) / width;
                let d = 1.0 + u * u;
                out[0] = 4.0 * amp * u / (width * d * d);
                out[1] = 2.0 * amp * u * u / (width * d * d);
                out[2] = 1.0 / d;
                out[3] = 1.0;
            }
            ModelKind::ExpDecay => {
                let e = (-x / p[1]).exp();
                out[0] = e;
                out[1] = p[0] * e * x / (p[1] * p[1]);
                out[2] = 1.0;
            }
            ModelKind::DecayingSine => {
                let (amp, freq, decay, phase) = (p[0], p[1], p[2], p[3]);
                let e = (-x / decay).exp();
                let theta = 2.0 * PI * freq * x + phase;
                let (s, c) = theta.sin_cos();
                out[0] = e * c;
                out[1] = -amp * e * s * 2.0 * PI * x;
                out[2] = amp * e * c * x / (decay * decay);
                out[3] = -amp * e * s;
                out[4] = 1.0;
            }
            ModelKind::T1ChopTransmission => out[0] = chop_term_dt1(x, p[0]),
            ModelKind::T1ChopReflection => out[0] = -chop_term_dt1(x, p[0]),
            ModelKind::Linear => {
                out[0] = 1.0;
                out[1] = x;
            }
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

/// `T1 (1 - exp(-tau / (2 T1))) / tau`, tending to 1/2 as `tau -> 0`.
fn chop_term(tau: f64, t1: f64) -> f64 {
    let u = tau / (2.0 * t1);
    if tau.abs() < CHOP_SERIES_THRESHOLD * t1.abs() {
        0.5 * (1.0 - u / 2.0 + u * u / 6.0 - u * u * u / 24.0)
    } else {
        -t1 * (-u).exp_m1() / tau
    }
}

/// d/dT1 of [`chop_term`]: `(1 - (1 + u) exp(-u)) / tau` with `u = tau / (2 T1)`.
fn chop_term_dt1(tau: f64, t1: f64) -> f64 {
    let u = tau / (2.0 * t1);
    if tau.abs() < CHOP_SERIES_THRESHOLD * t1.abs() {
        (u / 4.0 - u * u / 6.0 + u * u * u / 16.0) / t1
    } else {
        (1.0 - (1.0 + u) * (-u).exp()) / tau
    }
}
