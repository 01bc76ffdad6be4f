#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use gatequbit::fit::ModelKind;
use rand::Rng;

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn reference_config() -> PathBuf {
    repo_root().join("configs/reference_device.toml")
}

/// A random parameter vector and abscissa inside the useful domain of `kind`.
pub fn sample_point(kind: ModelKind, rng: &mut impl Rng) -> (Vec<f64>, f64) {
    match kind {
        ModelKind::Lorentzian => {
            let (c, w) = (rng.random_range(3.0..4.0), rng.random_range(0.005..0.05));
            let x = c + w * rng.random_range(-3.0..3.0);
            (vec![c, w, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], x)
        }
        ModelKind::ExpDecay => (
            vec![
                rng.random_range(0.1..2.0),
                rng.random_range(10.0..500.0),
                rng.random_range(-1.0..1.0),
            ],
            rng.random_range(0.0..1000.0),
        ),
        ModelKind::DecayingSine => (
            vec![
                rng.random_range(0.1..1.0),
                rng.random_range(0.005..0.05),
                rng.random_range(50.0..500.0),
                rng.random_range(-PI..PI),
                rng.random_range(-1.0..1.0),
            ],
            rng.random_range(0.0..1000.0),
        ),
        ModelKind::T1ChopTransmission | ModelKind::T1ChopReflection => {
            // log-uniform pulse periods reach both the series and closed-form branches
            let x = 10f64.powf(rng.random_range(-1.5..3.5));
            (vec![rng.random_range(20.0..500.0)], x)
        }
        ModelKind::Linear => (
            vec![rng.random_range(-10.0..10.0), rng.random_range(-100.0..100.0)],
            rng.random_range(-1.0..1.0),
        ),
    }
}

/// Largest disagreement between the analytic gradient and a five-point
/// central difference, relative to the largest gradient component.
pub fn gradient_error(kind: ModelKind, p: &[f64], x: f64) -> f64 {
    let mut analytic = vec![0.0; p.len()];
    kind.gradient(p, x, &mut analytic);
    let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for j in 0..p.len() {
        let h = 1e-5 * p[j].abs().max(1e-2);
        let at = |d: f64| {
            let mut q = p.to_vec();
            q[j] += d;
            kind.eval(&q, x)
        };
        let fd = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
        worst = worst.max((analytic[j] - fd).abs() / scale.max(f64::MIN_POSITIVE));
    }
    worst
}
