//! Damped least squares (Levenberg-Marquardt) with Marquardt diagonal scaling,
//! gain-ratio damping control and interior bound handling.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::models::ModelKind;
use super::Bound;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Relative gradient tolerance: the largest cosine between a Jacobian
    /// column and the residual vector.
    pub gtol: f64,
    /// Relative step tolerance.
    pub xtol: f64,
    /// Relative cost-reduction tolerance.
    pub ftol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            gtol: 1e-10,
            xtol: 1e-12,
            ftol: 1e-15,
        }
    }
}

pub(crate) struct Problem<'a> {
    pub kind: ModelKind,
    pub bounds: &'a [Bound],
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub weights: Option<&'a [f64]>,
}

pub(crate) struct Solution {
    pub params: Vec<f64>,
    /// Normal matrix `J^T W^2 J` at the solution.
    pub normal: DMatrix<f64>,
    pub sum_sq: f64,
    pub converged: bool,
    pub n_iter: usize,
    pub message: String,
}

impl Problem<'_> {
    fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    fn sum_sq(&self, p: &[f64]) -> f64 {
        self.x
            .iter()
            .zip(self.y)
            .enumerate()
            .map(|(i, (&x, &y))| {
                let r = self.weight(i) * (y - self.kind.eval(p, x));
                r * r
            })
            .sum()
    }

    /// Normal matrix `J^T W^2 J`, the descent vector `J^T W^2 r` and the
    /// weighted residual sum of squares, with `J` the model Jacobian.
    fn linearize(&self, p: &[f64]) -> (DMatrix<f64>, DVector<f64>, f64) {
        let n = p.len();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut g = DVector::<f64>::zeros(n);
        let mut ss = 0.0;
        let mut row = vec![0.0; n];
        for (i, (&x, &y)) in self.x.iter().zip(self.y).enumerate() {
            let w = self.weight(i);
            self.kind.gradient(p, x, &mut row);
            let r = w * (y - self.kind.eval(p, x));
            ss += r * r;
            for j in 0..n {
                let jj = w * row[j];
                g[j] += jj * r;
                for k in 0..=j {
                    a[(j, k)] += jj * w * row[k];
                }
            }
        }
        for j in 0..n {
            for k in 0..j {
                a[(k, j)] = a[(j, k)];
            }
        }
        (a, g, ss)
    }

    // Keeps iterates strictly inside the bounds: a step that would cross a
    // bound moves halfway from the current value to it instead.
    fn project(&self, current: &[f64], candidate: &mut [f64]) {
        for ((c, &p), b) in candidate.iter_mut().zip(current).zip(self.bounds) {
            if let Some(lo) = b.lower {
                if *c <= lo {
                    *c = 0.5 * (p + lo);
                }
            }
            if let Some(hi) = b.upper {
                if *c >= hi {
                    *c = 0.5 * (p + hi);
                }
            }
        }
    }
}

fn gradient_cosine(a: &DMatrix<f64>, g: &DVector<f64>, sum_sq: f64) -> f64 {
    let rnorm = sum_sq.sqrt();
    if rnorm == 0.0 {
        return 0.0;
    }
    (0..g.len())
        .map(|j| {
            let col = a[(j, j)].sqrt();
            if col == 0.0 {
                0.0
            } else {
                g[j].abs() / (col * rnorm)
            }
        })
        .fold(0.0, f64::max)
}

pub(crate) fn solve(problem: &Problem<'_>, init: &[f64], opts: &SolverOptions) -> Solution {
    let n = init.len();
    let mut p = init.to_vec();
    let (mut a, mut g, mut ss) = problem.linearize(&p);
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut message = String::from("maximum iterations reached");
    let mut converged = false;
    let mut n_iter = 0;

    // Residuals at rounding level carry no direction information.
    let y_sq: f64 = problem
        .y
        .iter()
        .enumerate()
        .map(|(i, y)| (problem.weight(i) * y).powi(2))
        .sum();
    let noise_floor = (1e-13f64).powi(2) * y_sq;

    while n_iter < opts.max_iter {
        if ss <= noise_floor {
            converged = true;
            message = "residual at rounding level".into();
            break;
        }
        if gradient_cosine(&a, &g, ss) <= opts.gtol {
            converged = true;
            message = "gradient tolerance reached".into();
            break;
        }
        n_iter += 1;

        let diag_floor = 1e-12 * (0..n).map(|j| a[(j, j)]).fold(0.0, f64::max);
        let mut accepted = None;
        while lambda < 1e20 {
            let mut m = a.clone();
            for j in 0..n {
                m[(j, j)] += lambda * a[(j, j)].max(diag_floor);
            }
            let Some(chol) = Cholesky::new(m) else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            let step = chol.solve(&g);
            let mut candidate: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            problem.project(&p, &mut candidate);
            let delta = DVector::from_iterator(n, candidate.iter().zip(&p).map(|(c, p)| c - p));
            let new_ss = problem.sum_sq(&candidate);
            let predicted = 2.0 * delta.dot(&g) - (&a * &delta).dot(&delta);
            let actual = ss - new_ss;
            if new_ss.is_finite() && actual > 0.0 && predicted > 0.0 {
                let rho = actual / predicted;
                lambda *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                accepted = Some((candidate, delta, actual, predicted));
                break;
            }
            lambda *= nu;
            nu *= 2.0;
        }

        let Some((candidate, delta, actual, predicted)) = accepted else {
            // No decrease is resolvable once the predicted reduction (about
            // cos^2 * ss) falls below the rounding of the summed cost.
            let resolvable = (problem.x.len() as f64 * f64::EPSILON).sqrt();
            converged = ss <= noise_floor || gradient_cosine(&a, &g, ss) <= opts.gtol.max(resolvable);
            message = if converged {
                "no further decrease possible".into()
            } else {
                "damping exhausted without decrease".into()
            };
            break;
        };

        let prev_ss = ss;
        p = candidate;
        (a, g, ss) = problem.linearize(&p);

        let pnorm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if delta.norm() <= opts.xtol * (pnorm + opts.xtol) {
            converged = true;
            message = "step tolerance reached".into();
            break;
        }
        if actual <= opts.ftol * prev_ss && predicted <= opts.ftol * prev_ss {
            converged = true;
            message = "cost tolerance reached".into();
            break;
        }
    }

    Solution {
        params: p,
        normal: a,
        sum_sq: ss,
        converged,
        n_iter,
        message,
    }
}
