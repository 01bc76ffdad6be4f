//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use gatequbit::extract::{
    channel_curve, determine_n_channels, estimate_rabi_frequency, estimate_t1_chop, estimate_t2prime, rabi_slope,
    solve_ej_ec,
};
use gatequbit::fit::ModelKind;
use gatequbit::io::{cmd_extract, cmd_synth, ExtractSettings, RunConfig};
use gatequbit::qubit::{charge_dispersion, cpb_spectrum_exact, ic_from_ej, spectrum_perturbative, QubitParams};
use gatequbit::readout::dispersive_shift;
use gatequbit::synth::{linspace, synth_rabi_amplitude_sweep, synth_t1_chop, ChopMode, RabiLaw, RabiMonitorConfig};
use gatequbit::units::micro_ev_to_ghz;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use common::rel;

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn dispersive_consistency() -> Outcome {
    let a = dispersive_shift(113.0, 5.572, 4.2).unwrap();
    let b = dispersive_shift(85.0, 4.595, 3.5).unwrap();
    let pass = (a - 9.31).abs() < 5e-3 && (b - 6.60).abs() < 5e-3 && rel(a, 10.0) <= 0.1 && rel(b, 7.0) <= 0.1;
    outcome(pass, format!("chi = {a:.4} MHz (vs 10) and {b:.4} MHz (vs 7)"))
}

fn inversion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (ej, ec) = (rng.random_range(0.5..60.0), rng.random_range(0.05..1.5));
        let gap = micro_ev_to_ghz(rng.random_range(40.0..400.0));
        let n = rng.random_range(1..=4u32);
        let p = QubitParams {
            gap,
            n_channels: n,
            ..QubitParams::new(ej, ec)
        };
        let s = spectrum_perturbative(&p).unwrap();
        let (ej2, ec2) = solve_ej_ec(s.f01, s.alpha, gap, n).unwrap();
        worst = worst.max(rel(ej2, ej)).max(rel(ec2, ec));
    }
    outcome(worst < 1e-9, format!("worst relative error {worst:.2e} over 1000 sets"))
}

fn oracle_agreement() -> Outcome {
    let ec = 0.3;
    let mut worst = 0.0f64;
    for ratio in [50.0, 80.0, 100.0] {
        let p = QubitParams::new(ratio * ec, ec);
        let exact = cpb_spectrum_exact(&p, 4).unwrap().f01;
        let approx = (8.0 * p.ej * ec).sqrt() - ec;
        worst = worst.max(rel(approx, exact));
    }
    let dispersion: Vec<f64> = [5.0, 10.0, 20.0, 50.0]
        .iter()
        .map(|r| charge_dispersion(&QubitParams::new(r * ec, ec), 1).unwrap())
        .collect();
    let f01_50 = cpb_spectrum_exact(&QubitParams::new(50.0 * ec, ec), 4).unwrap().f01;
    let small = dispersion[3] < 1e-3 * f01_50;
    let monotone = dispersion.windows(2).all(|w| w[1] < w[0]);
    outcome(
        worst < 0.02 && small && monotone,
        format!(
            "worst f01 deviation {:.3}%, dispersion at 50 = {:.2e} f01, decreasing: {monotone}",
            100.0 * worst,
            dispersion[3] / f01_50
        ),
    )
}

fn critical_current() -> Outcome {
    let mean = ic_from_ej(4.768).unwrap().ic;
    // E_J span whose critical-current axis reads 5 to 13 nA
    let (lo, hi) = (ic_from_ej(2.483).unwrap().ic, ic_from_ej(6.456).unwrap().ic);
    let pass = rel(mean, 9.6) <= 0.01 && rel(lo, 5.0) <= 0.01 && rel(hi, 13.0) <= 0.01;
    outcome(
        pass,
        format!("I_c(4.768 GHz) = {mean:.3} nA; E_J 2.483-6.456 GHz -> {lo:.2}-{hi:.2} nA"),
    )
}

fn channel_pairs(ec: f64, gap: f64, n: u32, noise: Option<(&Normal<f64>, &mut ChaCha8Rng)>) -> Vec<(f64, f64)> {
    let t = linspace(0.2, 1.0, 25);
    match noise {
        None => t.iter().map(|&t| (t, channel_curve(t, ec, gap, n))).collect(),
        Some((normal, rng)) => t
            .iter()
            .map(|&t| (t, channel_curve(t, ec, gap, n) * (1.0 + normal.sample(rng))))
            .collect(),
    }
}

fn n_determination() -> Outcome {
    let gap = micro_ev_to_ghz(90.0);
    let candidates = [1, 2, 3, 4];
    let mut exact_ok = true;
    let mut min_margin = f64::INFINITY;
    let normal = Normal::new(0.0, 0.02).unwrap();
    let mut worst_rate = 1.0f64;
    for ec in [0.508, 0.391] {
        for n in candidates {
            let choice = determine_n_channels(&channel_pairs(ec, gap, n, None), ec, gap, &candidates).unwrap();
            let margin = choice.margin.unwrap_or(f64::INFINITY);
            exact_ok &= choice.n_channels == n && margin >= 2.0;
            min_margin = min_margin.min(margin);

            let hits = (0..200u64)
                .filter(|&seed| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let pairs = channel_pairs(ec, gap, n, Some((&normal, &mut rng)));
                    determine_n_channels(&pairs, ec, gap, &candidates).unwrap().n_channels == n
                })
                .count();
            worst_rate = worst_rate.min(hits as f64 / 200.0);
        }
    }
    outcome(
        exact_ok && worst_rate >= 0.95,
        format!(
            "noiseless margin >= {min_margin:.3e}; worst noisy hit rate {:.1}%",
            100.0 * worst_rate
        ),
    )
}

/// Noise level at which the linearized T1 uncertainty equals `target_sigma`.
fn calibrated_noise(tau: &[f64], mode: ChopMode, t1: f64, target_sigma: f64) -> f64 {
    let kind = mode.model();
    let mut d = [0.0];
    let info: f64 = tau
        .iter()
        .map(|&t| {
            kind.gradient(&[t1], t, &mut d);
            d[0] * d[0]
        })
        .sum();
    target_sigma * info.sqrt()
}

fn t1_chop() -> Outcome {
    let t1 = 117.3;
    let grid: Vec<f64> = linspace(2.0, 2000.0, 1000);
    let mut parts = Vec::new();
    let mut pass = true;
    for mode in [ChopMode::Transmission, ChopMode::Reflection] {
        let clean = synth_t1_chop(t1, &grid, mode, 0.0, 0, 0.125).unwrap();
        let sigma = calibrated_noise(&clean.t_grid, mode, t1, 5.8);
        let mut hits = 0;
        let mut reported = 0.0;
        for seed in 0..100 {
            let tr = synth_t1_chop(t1, &grid, mode, sigma, seed, 0.125).unwrap();
            if let Ok(m) = estimate_t1_chop(&tr.t_grid, &tr.signal, mode) {
                reported += m.sigma / 100.0;
                if rel(m.value, t1) <= 0.05 {
                    hits += 1;
                }
            }
        }
        pass &= hits >= 90;
        parts.push(format!("{mode:?}: {hits}/100 within 5% (mean sigma {reported:.2} ns)"));
    }
    outcome(pass, parts.join("; "))
}

fn t2prime() -> Outcome {
    let x = linspace(3.5, 4.0, 2001);
    let y: Vec<f64> = x
        .iter()
        .map(|f| 0.1 + 0.5 / (1.0 + ((f - 3.74) / 8.377e-3).powi(2)))
        .collect();
    let base = estimate_t2prime(&x, &y).unwrap();
    let invariant = (-8..=8).all(|k| {
        let s = 2f64.powi(k);
        let scaled: Vec<f64> = y.iter().map(|v| v * s).collect();
        estimate_t2prime(&x, &scaled).unwrap().value == base.value
    });
    outcome(
        rel(base.value, 19.0) <= 0.01 && invariant,
        format!("T2' = {:.4} ns; bit-exact under 2^k rescaling: {invariant}", base.value),
    )
}

fn end_to_end() -> Outcome {
    let cfg = RunConfig::load(&common::reference_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    cmd_synth(&cfg, dir.path()).unwrap();
    let settings = ExtractSettings::from_config(Some(&cfg), false);
    let report = match cmd_extract(dir.path(), dir.path(), &settings) {
        Ok(o) => o.report,
        Err(e) => return outcome(false, format!("extraction failed: {e}")),
    };
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("truth.json")).unwrap()).unwrap();
    let rows = truth["rows"].as_array().unwrap();
    let chi_true = rows
        .iter()
        .filter_map(|r| r["chi"].as_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    let ratios: Vec<f64> = rows
        .iter()
        .filter(|r| r["f01"].as_f64().is_some())
        .map(|r| r["ej"].as_f64().unwrap() / cfg.qubit.ec)
        .collect();
    let ratio_true = ratios.iter().sum::<f64>() / ratios.len() as f64;

    let f0 = report.f0.unwrap_or(f64::NAN);
    let g_max = report.g_max.unwrap_or(f64::NAN);
    let chi = report.chi_max.unwrap_or(f64::NAN);
    let ratio = report.ej_over_ec.map_or(f64::NAN, |s| s.mean);
    let checks = [
        (f0 - cfg.resonator.f0).abs() <= cfg.resonator.kappa * 1e-3 / 10.0,
        rel(g_max, cfg.resonator.g) <= 0.10,
        rel(chi, chi_true) <= 0.15,
        rel(ratio, ratio_true) <= 0.20,
        rel(chi, 10.0) <= 0.20,
    ];
    outcome(
        checks.iter().all(|c| *c),
        format!(
            "f0 {f0:.6} GHz, g_max {g_max:.2} MHz, chi_max {chi:.3} MHz (true {chi_true:.3}), \
             E_J/E_C {ratio:.3} (true {ratio_true:.3})"
        ),
    )
}

fn gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for kind in ModelKind::ALL {
        for _ in 0..100 {
            let (p, x) = common::sample_point(kind, &mut rng);
            worst = worst.max(common::gradient_error(kind, &p, x));
        }
    }
    outcome(
        worst < 1e-6,
        format!("worst disagreement {worst:.2e} over {} models", ModelKind::ALL.len()),
    )
}

fn rabi_law() -> Outcome {
    let law = RabiLaw::default();
    let cfg = RabiMonitorConfig::default();
    let amplitudes: Vec<f64> = (0..=20).map(|i| 0.05 * i as f64).collect();
    let t = linspace(0.0, 1500.0, 1501);
    let traces = synth_rabi_amplitude_sweep(&amplitudes, &law, 250.0, &t, 0.002, 8, &cfg).unwrap();
    let reference = &traces[0];
    let points: Vec<(f64, f64)> = amplitudes
        .iter()
        .zip(&traces)
        .skip(1)
        .filter_map(|(&v, tr)| {
            estimate_rabi_frequency(tr, Some(reference), (cfg.qubit_on, cfg.qubit_off))
                .ok()
                .map(|m| (v, m.value))
        })
        .collect();
    match rabi_slope(&points, law.knee) {
        Ok(s) => outcome(
            rel(s.value, law.slope) <= 0.03,
            format!(
                "slope {:.3} +- {:.3} MHz/V from {} traces",
                s.value,
                s.sigma,
                points.len()
            ),
        ),
        Err(e) => outcome(false, format!("slope fit failed: {e}")),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("dispersive consistency", Duration::from_secs(1), dispersive_consistency),
        ("(E_J, E_C) inversion", Duration::from_secs(1), inversion),
        ("oracle agreement", Duration::from_secs(5), oracle_agreement),
        ("critical current", Duration::from_secs(1), critical_current),
        ("channel-count determination", Duration::from_secs(10), n_determination),
        ("T1 pulse-chop", Duration::from_secs(10), t1_chop),
        ("T2' linewidth", Duration::from_secs(1), t2prime),
        ("end-to-end reference device", Duration::from_secs(60), end_to_end),
        ("fit-model gradients", Duration::from_secs(5), gradients),
        ("Rabi amplitude law", Duration::from_secs(5), rabi_law),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= *budget;
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {name}: {} [{:.2} s of {} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
