//! Nonlinear least-squares fitting of the spectroscopy and coherence models.
//!
//! [`fit`] runs a damped least-squares solver on one of the closed-form
//! [`ModelKind`]s and reports 1-sigma uncertainties from the linearized
//! covariance `(J^T J)^-1` scaled by the reduced chi-square. Initial guesses
//! are the caller's responsibility; see [`crate::extract`] for heuristics.

mod models;
mod solver;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use models::{ModelKind, CHOP_SERIES_THRESHOLD};
pub use solver::SolverOptions;

/// Box constraint on one parameter; `None` leaves that side open. Bounds are
/// exclusive: iterates never reach them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Bound {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Bound {
    pub const OPEN: Bound = Bound {
        lower: None,
        upper: None,
    };
    pub const POSITIVE: Bound = Bound {
        lower: Some(0.0),
        upper: None,
    };

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && self.lower.is_none_or(|lo| v > lo) && self.upper.is_none_or(|hi| v < hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitModel {
    pub kind: ModelKind,
    pub bounds: Vec<Bound>,
}

impl FitModel {
    /// Model with its natural bounds: positive widths, decay times and T1,
    /// non-negative oscillation frequency.
    pub fn new(kind: ModelKind) -> Self {
        use Bound as B;
        let bounds = match kind {
            ModelKind::Lorentzian => vec![B::OPEN, B::POSITIVE, B::OPEN, B::OPEN],
            ModelKind::ExpDecay => vec![B::OPEN, B::POSITIVE, B::OPEN],
            ModelKind::DecayingSine => {
                vec![B::OPEN, B::OPEN, B::POSITIVE, B::OPEN, B::OPEN]
            }
            ModelKind::T1ChopTransmission | ModelKind::T1ChopReflection => vec![B::POSITIVE],
            ModelKind::Linear => vec![B::OPEN, B::OPEN],
        };
        Self { kind, bounds }
    }

    pub fn with_bound(mut self, index: usize, bound: Bound) -> Self {
        self.bounds[index] = bound;
        self
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        self.kind.param_names()
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.kind.n_params() {
            return Err(Error::invalid(
                "params",
                format!(
                    "{} expects {} parameters, got {}",
                    self.kind,
                    self.kind.n_params(),
                    params.len()
                ),
            ));
        }
        if self.bounds.len() != params.len() {
            return Err(Error::invalid("bounds", "one bound per parameter required"));
        }
        for ((name, &v), b) in self.kind.param_names().iter().zip(params).zip(&self.bounds) {
            if !b.contains(v) {
                return Err(Error::invalid("params", format!("{name} = {v} outside bounds {b:?}")));
            }
        }
        Ok(())
    }
}

/// A value with its 1-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelKind,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    /// 1-sigma uncertainties from the linearized covariance scaled by the
    /// reduced chi-square.
    pub sigmas: Vec<f64>,
    /// Euclidean norm of the (weighted) residual vector.
    pub residual_norm: f64,
    pub converged: bool,
    pub n_iter: usize,
    pub message: String,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<Measured> {
        let i = self.param_names.iter().position(|n| n == name)?;
        Some(Measured {
            value: self.params[i],
            sigma: self.sigmas[i],
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.model.eval(&self.params, x)
    }
}

/// Pointwise model evaluation.
pub fn model_eval(model: &FitModel, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    model.check_params(params)?;
    Ok(x.iter().map(|&x| model.kind.eval(params, x)).collect())
}

/// Least-squares fit of `model` to `(x, y)` starting from `init`.
///
/// `weights` multiply the residuals (use `1/sigma_i`). A run that exhausts
/// its iterations is returned with `converged = false`, never as an error.
pub fn fit(model: &FitModel, x: &[f64], y: &[f64], init: &[f64], weights: Option<&[f64]>) -> Result<FitResult> {
    fit_with_options(model, x, y, init, weights, &SolverOptions::default())
}

pub fn fit_with_options(
    model: &FitModel,
    x: &[f64],
    y: &[f64],
    init: &[f64],
    weights: Option<&[f64]>,
    options: &SolverOptions,
) -> Result<FitResult> {
    model.check_params(init)?;
    let n = init.len();
    if x.len() != y.len() {
        return Err(Error::invalid(
            "y",
            format!("length {} differs from x length {}", y.len(), x.len()),
        ));
    }
    if x.len() < n + 1 {
        return Err(Error::InsufficientData(format!(
            "{} points for {} parameters",
            x.len(),
            n
        )));
    }
    if let Some(w) = weights {
        if w.len() != x.len() || w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("weights", "one finite non-negative weight per point"));
        }
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("data", "x and y must be finite"));
    }

    let problem = solver::Problem {
        kind: model.kind,
        bounds: &model.bounds,
        x,
        y,
        weights,
    };
    let sol = solver::solve(&problem, init, options);
    let dof = (x.len() - n) as f64;
    let reduced = sol.sum_sq / dof;
    let cov = invert_normal(&sol.normal);
    let sigmas = (0..n).map(|j| (cov[(j, j)] * reduced).max(0.0).sqrt()).collect();

    Ok(FitResult {
        model: model.kind,
        param_names: model.kind.param_names().iter().map(|s| s.to_string()).collect(),
        params: sol.params,
        sigmas,
        residual_norm: sol.sum_sq.sqrt(),
        converged: sol.converged,
        n_iter: sol.n_iter,
        message: sol.message,
    })
}

fn invert_normal(a: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(chol) = a.clone().cholesky() {
        return chol.inverse();
    }
    let n = a.nrows();
    a.clone()
        .pseudo_inverse(1e-14 * a.norm())
        .unwrap_or_else(|_| DMatrix::from_element(n, n, f64::INFINITY))
}

/// Half width at half maximum of a converged Lorentzian fit, in the units of
/// its x axis, with the propagated 1-sigma uncertainty.
pub fn lorentzian_hwhm(result: &FitResult) -> Result<Measured> {
    if result.model != ModelKind::Lorentzian {
        return Err(Error::invalid(
            "result",
            format!("expected a lorentzian fit, got {}", result.model),
        ));
    }
    if !result.converged {
        return Err(Error::NotConverged(result.message.clone()));
    }
    Ok(Measured {
        value: result.params[1].abs() / 2.0,
        sigma: result.sigmas[1] / 2.0,
    })
}
