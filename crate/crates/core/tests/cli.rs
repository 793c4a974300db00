use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qmoire::analysis::beat_from_spectrum;
use qmoire::classical::{extract_scanline, ScanLine};
use qmoire::harness::{parse_fit_report, preset, read_pgm, render_classical, PresetName, RunPreset};

fn qmoire(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmoire"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn report_value(path: &Path, key: &str) -> String {
    let kv = parse_fit_report(&fs::read_to_string(path).unwrap()).unwrap();
    kv.into_iter().find(|(k, _)| k == key).map(|(_, v)| v).unwrap_or_else(|| panic!("no {key}"))
}

#[test]
fn beat_prints_twelve_decimals() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmoire(&["beat", "1.2", "1.6"], dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "4.800000000000\n");

    let out = qmoire(&["beat", "0.8", "0.8"], dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "infinite\n");
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for flag in ["--help", "--version"] {
        let out = qmoire(&[flag], dir.path());
        assert_eq!(code(&out), 0, "{flag}");
        assert!(!stdout(&out).is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec![],
        vec!["beat", "-1", "2"],
        vec!["run", "fig9z"],
        vec!["run", "fig3a", "--mode", "fast"],
        vec!["fit", "x.csv", "--model", "product", "--fast-period", "0.8"],
    ] {
        let out = qmoire(&args, dir.path());
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "setup = pump-idler\nfoo = 1\n").unwrap();
    let out = qmoire(&["run", "bad.cfg"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmoire(&["fit", "missing.csv", "--model", "product"], dir.path());
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    fs::write(dir.path().join("garbage.csv"), "not,a,scan\n").unwrap();
    let out = qmoire(&["fit", "garbage.csv", "--model", "envelope"], dir.path());
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn single_step_open_scan_golden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "setup = pump-idler\ng1.period = open\ng2.period = open\n\
               scan.steps = 1\nscan.step.g1 = 0.1\nscan.step.g2 = 0.2\nname = open1\n";
    fs::write(dir.path().join("open.cfg"), cfg).unwrap();
    let out = qmoire(&["run", "open.cfg"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("open1_analytic.csv")).unwrap();
    assert_eq!(
        csv,
        "step,position_mm,value,expected_rate\n0,0.000000000000,1.000000000000,1.000000000000\n"
    );
    // One sample cannot be fitted; the run still succeeds and says so.
    let report = dir.path().join("open1_analytic_fit.txt");
    assert_eq!(report_value(&report, "status"), "failed");
}

#[test]
fn preset_run_then_refit_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmoire(&["run", "fig3a"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = dir.path().join("fig3a_analytic_fit.txt");
    assert_eq!(report_value(&report, "status"), "converged");

    let out = qmoire(
        &["fit", "fig3a_analytic.csv", "--model", "product", "--out", "refit.txt"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let refit = dir.path().join("refit.txt");
    assert_eq!(stdout(&out), fs::read_to_string(&refit).unwrap());
    // The CSV carries 12 decimals, so the refit agrees to well below that.
    for key in ["period_1_mm", "period_2_mm"] {
        let a: f64 = report_value(&report, key).parse().unwrap();
        let b: f64 = report_value(&refit, key).parse().unwrap();
        assert!((a - b).abs() < 1e-9, "{key}: {a} vs {b}");
    }
}

#[test]
fn monte_carlo_csv_is_byte_identical_across_runs_and_threads() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out = qmoire(&["run", "fig5a", "--mode", "mc", "--threads", "1"], a.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = qmoire(&["run", "fig5a", "--mode", "mc", "--threads", "4"], b.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let first = fs::read(a.path().join("fig5a_mc.csv")).unwrap();
    let second = fs::read(b.path().join("fig5a_mc.csv")).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, second);
}

#[test]
fn monte_carlo_rejects_classical_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmoire(&["run", "fig1a", "--mode", "mc"], dir.path());
    assert_ne!(code(&out), 0);
}

#[test]
fn exported_pgm_keeps_the_beat_within_one_bin() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmoire(&["run", "fig1b"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let Some(RunPreset::Classical(run)) = preset(PresetName::Fig1b) else { panic!("fig1b is classical") };
    let (image, in_memory) = render_classical(&run).unwrap();
    let reread = read_pgm(&dir.path().join("fig1b.pgm"), image.pitch()).unwrap();
    assert_eq!((reread.width(), reread.height()), (image.width(), image.height()));
    let line = ScanLine::center_line(&reread, run.scan_length).unwrap();
    let from_file = extract_scanline(&reread, &line).unwrap();

    let want = beat_from_spectrum(&in_memory).unwrap();
    let got = beat_from_spectrum(&from_file).unwrap();
    let bin = 1.0 / run.scan_length;
    assert!((got.frequency - want.frequency).abs() <= bin, "{} vs {}", got.period, want.period);
}

#[test]
fn rendered_fig1a_centre_line_beats_at_the_moire_period() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmoire(&["render", "fig1a", "--out", "fig1a.pgm"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let Some(RunPreset::Classical(run)) = preset(PresetName::Fig1a) else { panic!("fig1a is classical") };
    let image = read_pgm(&dir.path().join("fig1a.pgm"), run.grid.pitch).unwrap();
    let line = ScanLine::center_line(&image, run.scan_length).unwrap();
    let record = extract_scanline(&image, &line).unwrap();
    let beat = beat_from_spectrum(&record).unwrap();
    assert!((beat.period - 4.8).abs() <= 0.02 * 4.8, "{}", beat.period);
}
