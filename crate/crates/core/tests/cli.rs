mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gatequbit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth_reference(out: &Path, extra: &[&str]) -> Output {
    let cfg = common::reference_config();
    let mut args = vec![
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

const MINIMAL: &str = r#"
[qubit]
ec = 0.508
[resonator]
f0 = 5.572
g = 113.0
[gate]
vg_min = -1.0
vg_max = 0.0
n_points = 5
ej_floor = 2.5
ej_peak = 3.0
[resonator_sweep]
f_min = 5.56
f_max = 5.59
n_points = 0
[twotone]
f_min = 2.5
f_max = 4.5
n_points = 0
t2prime = 19.0
[t1_chop]
t1 = 100.0
tau_min = 2.0
tau_max = 100.0
n_points = 0
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    assert!(synth_reference(a.path(), &[]).status.success());
    assert!(synth_reference(b.path(), &[]).status.success());
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() > 10);
    for name in names {
        let x = fs::read(a.path().join(&name)).unwrap();
        let y = fs::read(b.path().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn seed_override_changes_noise() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    assert!(synth_reference(a.path(), &[]).status.success());
    assert!(synth_reference(b.path(), &["--seed", "7"]).status.success());
    let f = "twotone_low.dat";
    assert_ne!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
}

#[test]
fn empty_sweep_writes_header_only_files() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let out = dir.path().join("out");
    let o = run(&["synth", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("t1_chop_00.dat")).unwrap();
    assert!(text.lines().all(|l| l.starts_with('#')), "{text}");
    assert!(text.contains("# rows: 0"));
    let map = gatequbit::io::read_spectro_map(&out.join("resonator_map.dat")).unwrap();
    assert!(map.freq_grid.is_empty() && map.vg_grid.len() == 5);
}

#[test]
fn invalid_config_exits_2_naming_field() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), &MINIMAL.replace("ec = 0.508", "ec = -1.0"));
    let o = run(&["synth", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("qubit.ec"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), &MINIMAL.replace("g = 113.0", "g = 113.0\ncoupling = 3"));
    let o = run(&["synth", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("coupling"), "{}", stderr(&o));
}

#[test]
fn stochastic_config_without_seed_exits_2() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &MINIMAL.replace(
            "n_points = 0\n[twotone]",
            "n_points = 10\nnoise_sigma = 0.01\n[twotone]",
        ),
    );
    let o = run(&["synth", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
}

#[test]
fn guard_violation_exits_4() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), &MINIMAL.replace("g = 113.0", "g = 300.0"));
    let o = run(&["synth", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("V_G"), "{}", stderr(&o));
}

#[test]
fn missing_input_exits_3() {
    let dir = tempdir().unwrap();
    let missing = dir.path().join("nothing-here");
    let o = run(&[
        "extract",
        "--input",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn corrupt_header_reports_byte_offset() {
    let dir = tempdir().unwrap();
    assert!(synth_reference(dir.path(), &[]).status.success());
    let path = dir.path().join("twotone_low.dat");
    let text = fs::read_to_string(&path).unwrap();
    let line = text.lines().find(|l| l.starts_with("# shape:")).unwrap().to_string();
    let broken = line.replacen("# shape: ", "# shape: ?", 1);
    let text = text.replacen(&line, &broken, 1);
    let expected = text.find("?").unwrap();
    fs::write(&path, text).unwrap();
    let o = run(&[
        "extract",
        "--input",
        dir.path().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(
        stderr(&o).contains(&format!("byte offset {expected}")),
        "{}",
        stderr(&o)
    );
}

#[test]
fn mixed_hash_refused_unless_forced() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    assert!(synth_reference(a.path(), &[]).status.success());
    assert!(synth_reference(b.path(), &["--seed", "99"]).status.success());
    for f in ["t1_chop_00.dat", "t1_chop_00.dat.json"] {
        fs::copy(b.path().join(f), a.path().join(f)).unwrap();
    }
    let dir = a.path().to_str().unwrap();
    let o = run(&["extract", "--input", dir, "--out", dir]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("--force-mixed-hash"), "{}", stderr(&o));

    let o = run(&["extract", "--input", dir, "--out", dir, "--force-mixed-hash"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = gatequbit::io::read_report(&a.path().join("report.json")).unwrap();
    assert_eq!(report.config_hash.as_deref(), Some("mixed"));
}

#[test]
fn extract_then_report() {
    let dir = tempdir().unwrap();
    assert!(synth_reference(dir.path(), &[]).status.success());
    let d = dir.path().to_str().unwrap();
    let o = run(&["extract", "--input", d, "--out", d]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "report.json",
        "g_vs_fq.dat",
        "ej_vs_fq.dat",
        "ec_hist.dat",
        "t1_vs_fq.dat",
        "t2prime_vs_fq.dat",
    ] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let report = dir.path().join("report.json");
    let o = run(&["report", "--input", report.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("chi_max") && text.contains("E_J/E_C"), "{text}");
}

#[test]
fn fit_chop_trace_gives_t1() {
    let dir = tempdir().unwrap();
    assert!(synth_reference(dir.path(), &[]).status.success());
    let input = dir.path().join("t1_chop_00.dat");
    let out = dir.path().join("fit.json");
    let o = run(&[
        "fit",
        "--model",
        "t1_chop_transmission",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["converged"], true);
    let t1 = v["params"][0].as_f64().unwrap();
    assert!(common::rel(t1, 117.3) < 0.05, "{t1}");
    assert!(v["sigmas"][0].as_f64().unwrap() > 0.0);
}

#[test]
fn unconverged_fit_exits_0_with_flag() {
    let dir = tempdir().unwrap();
    assert!(synth_reference(dir.path(), &[]).status.success());
    let input = dir.path().join("t1_chop_00.dat");
    let o = run(&[
        "fit",
        "--model",
        "decaying_sine",
        "--input",
        input.to_str().unwrap(),
        "--init",
        "1,0.49,1,0,0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["converged"], false);
    assert!(stderr(&o).contains("did not converge"));
}

#[test]
fn unknown_model_exits_2_listing_models() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("x.dat");
    fs::write(
        &input,
        "# gatequbit-trace 1\n# config_hash: none\n# column: x 1\n# column: y 1\n# rows: 0\n",
    )
    .unwrap();
    let o = run(&["fit", "--model", "ramsey", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("lorentzian") && e.contains("t1_chop_reflection"), "{e}");
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(run(&["synth"]).status.code(), Some(2));
    assert_eq!(run(&["transmogrify"]).status.code(), Some(2));
}
