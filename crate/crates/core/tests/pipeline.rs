mod common;

use gatequbit::extract::DeviceReport;
use gatequbit::io::format::read_trace;
use gatequbit::io::{cmd_extract, cmd_synth, ExtractSettings, RunConfig};
use tempfile::tempdir;

/// The reference device on a coarser gate grid, without the time-domain products.
fn light_config() -> RunConfig {
    let mut cfg = RunConfig::load(&common::reference_config()).unwrap();
    cfg.gate.n_points = 61;
    cfg.t1_chop = None;
    cfg.rabi = None;
    cfg
}

fn synth_extract(cfg: &RunConfig) -> DeviceReport {
    let dir = tempdir().unwrap();
    cmd_synth(cfg, dir.path()).unwrap();
    let settings = ExtractSettings::from_config(Some(cfg), false);
    cmd_extract(dir.path(), dir.path(), &settings).unwrap().report
}

#[test]
fn report_without_coherence_inputs() {
    let report = synth_extract(&light_config());
    assert!(report.t1.is_empty() && report.t1_mean.is_none());
    assert!(report.rabi.is_empty() && report.rabi_slope.is_none());
    assert!(report.t2prime_mean.is_some());
    let json = serde_json::to_value(&report).unwrap();
    assert!(json.get("t1_mean").is_none() && json.get("rabi_slope").is_none());
}

#[test]
fn larger_coupling_gives_larger_shift() {
    let mut chi = Vec::new();
    for g in [60.0, 85.0, 113.0] {
        let mut cfg = light_config();
        cfg.resonator.g = g;
        chi.push(synth_extract(&cfg).chi_max.unwrap());
    }
    assert!(chi.windows(2).all(|w| w[1] > w[0]), "{chi:?}");
}

#[test]
fn recovers_two_channel_device() {
    let mut cfg = light_config();
    cfg.qubit.n_channels = 2;
    let report = synth_extract(&cfg);
    let ch = report.channels.unwrap();
    assert_eq!(ch.n_channels, 2, "{ch:?}");
    assert!(!ch.ambiguous);
}

#[test]
fn fixed_charging_energy_reference() {
    let mut cfg = light_config();
    cfg.extract.ec_reference = Some(0.508);
    let report = synth_extract(&cfg);
    assert_eq!(report.channels.unwrap().n_channels, 1);
    assert!(common::rel(report.ec.unwrap().mean, 0.508) < 0.02);
}

#[test]
fn extract_reads_files_back() {
    let cfg = light_config();
    let dir = tempdir().unwrap();
    cmd_synth(&cfg, dir.path()).unwrap();
    let settings = ExtractSettings::from_config(Some(&cfg), false);
    let outcome = cmd_extract(dir.path(), dir.path(), &settings).unwrap();
    let on_disk = gatequbit::io::read_report(&dir.path().join("report.json")).unwrap();
    assert_eq!(on_disk, outcome.report);
    assert_eq!(outcome.report.config_hash.as_deref(), Some(cfg.hash().as_str()));
    let plot = read_trace(&dir.path().join("g_vs_fq.dat")).unwrap();
    let names: Vec<&str> = plot.columns.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(&names[..2], ["fq", "g"]);
    assert_eq!(plot.columns[1].values.len(), outcome.report.coupling.len());
}
