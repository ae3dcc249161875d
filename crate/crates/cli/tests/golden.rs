//! End-to-end tests: every subcommand runs as a real process against the
//! committed fixtures and each artifact is compared byte-for-byte with a
//! golden copy. Regenerate goldens after an intentional change with
//! `BLESS=1 cargo test -p chimag-cli --test golden`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Runs the binary in `dir` with colors disabled.
fn chimag(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chimag"));
    cmd.args(args).current_dir(dir).env("CHIMAG_NO_COLOR", "1");
    cmd.output().expect("failed to spawn chimag")
}

/// Runs a command that must succeed cleanly: exit 0, empty stderr.
fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = chimag(dir, args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(
        out.status.code(),
        Some(0),
        "command {args:?} failed\nstderr: {stderr}"
    );
    assert!(stderr.is_empty(), "unexpected diagnostics: {stderr}");
    String::from_utf8(out.stdout).expect("stdout is not UTF-8")
}

fn exit_code(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = chimag(dir, args);
    (
        out.status.code().expect("no exit code"),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn read_artifact(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("artifact `{name}` was not written: {e}"))
}

/// Compares `actual` against the committed golden file, or rewrites the
/// golden when the BLESS environment variable is set.
fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| {
        panic!(
            "missing golden `{name}` ({e}); regenerate with \
             `BLESS=1 cargo test -p chimag-cli --test golden`"
        )
    });
    if expected == actual {
        return;
    }
    let mismatch = expected
        .lines()
        .zip(actual.lines())
        .enumerate()
        .find(|(_, (e, a))| e != a);
    match mismatch {
        Some((i, (e, a))) => panic!(
            "`{name}` diverges from its golden at line {}:\n  golden: {}\n  actual: {}",
            i + 1,
            &e[..e.len().min(160)],
            &a[..a.len().min(160)]
        ),
        None => panic!(
            "`{name}` diverges from its golden in length: {} vs {} lines",
            expected.lines().count(),
            actual.lines().count()
        ),
    }
}

#[test]
fn simulate_exports_all_artifacts() {
    let dir = TempDir::new().unwrap();
    let stdout = run_ok(
        dir.path(),
        &[
            "simulate",
            "--config",
            fixture("single.toml").to_str().unwrap(),
            "--out",
            "spectrum.csv",
            "--absorption",
            "absorption.csv",
            "--touchstone",
            "network.s2p",
            "--plot",
            "absorption.svg",
        ],
    );
    check_golden("simulate_stdout.txt", &stdout);
    check_golden(
        "simulate_spectrum.csv",
        &read_artifact(dir.path(), "spectrum.csv"),
    );
    check_golden(
        "simulate_absorption.csv",
        &read_artifact(dir.path(), "absorption.csv"),
    );
    check_golden(
        "simulate_network.s2p",
        &read_artifact(dir.path(), "network.s2p"),
    );
    check_golden(
        "simulate_absorption.svg",
        &read_artifact(dir.path(), "absorption.svg"),
    );
}

#[test]
fn simulate_plot_kinds_and_axis_overrides() {
    let dir = TempDir::new().unwrap();
    let config = fixture("single.toml");
    let config = config.to_str().unwrap();
    run_ok(
        dir.path(),
        &[
            "simulate",
            "--config",
            config,
            "--out",
            "s.csv",
            "--plot",
            "mag.svg",
            "--plot-kind",
            "spectrum",
        ],
    );
    check_golden(
        "simulate_magnitudes.svg",
        &read_artifact(dir.path(), "mag.svg"),
    );
    run_ok(
        dir.path(),
        &[
            "simulate",
            "--config",
            config,
            "--out",
            "s.csv",
            "--plot",
            "phase.svg",
            "--plot-kind",
            "phase",
            "--x-range",
            "3.08:3.12",
            "--y-range",
            "-4:4",
        ],
    );
    check_golden(
        "simulate_phase.svg",
        &read_artifact(dir.path(), "phase.svg"),
    );
}

#[test]
fn cascade_exports_touchstone() {
    let dir = TempDir::new().unwrap();
    let stdout = run_ok(
        dir.path(),
        &[
            "cascade",
            "--config",
            fixture("pair.toml").to_str().unwrap(),
            "--out",
            "pair.s2p",
        ],
    );
    check_golden("cascade_stdout.txt", &stdout);
    check_golden("cascade_pair.s2p", &read_artifact(dir.path(), "pair.s2p"));
}

#[test]
fn cascade_reversed_direction_and_ma_format() {
    let dir = TempDir::new().unwrap();
    let stdout = run_ok(
        dir.path(),
        &[
            "cascade",
            "--config",
            fixture("pair.toml").to_str().unwrap(),
            "--out",
            "rev.s2p",
            "--reverse",
            "--format",
            "ma",
        ],
    );
    check_golden("cascade_rev_stdout.txt", &stdout);
    check_golden(
        "cascade_pair_rev.s2p",
        &read_artifact(dir.path(), "rev.s2p"),
    );
}

#[test]
fn fit_phase_known_all_components() {
    let dir = TempDir::new().unwrap();
    let stdout = run_ok(
        dir.path(),
        &[
            "fit",
            "--in",
            fixture("measured.s2p").to_str().unwrap(),
            "--components",
            "s11,s21,s12,s22",
            "--phase-known",
            "--report",
            "fit.txt",
            "--curve",
            "curve.csv",
            "--plot",
            "overlay.svg",
        ],
    );
    check_golden("fit_stdout.txt", &stdout);
    check_golden("fit_report.txt", &read_artifact(dir.path(), "fit.txt"));
    check_golden("fit_curve.csv", &read_artifact(dir.path(), "curve.csv"));
    check_golden("fit_overlay.svg", &read_artifact(dir.path(), "overlay.svg"));
}

#[test]
fn fit_magnitude_only_with_free_background() {
    let dir = TempDir::new().unwrap();
    let stdout = run_ok(
        dir.path(),
        &[
            "fit",
            "--in",
            fixture("measured.s2p").to_str().unwrap(),
            "--free-background",
            "--report",
            "fit.txt",
        ],
    );
    check_golden("fit_mag_stdout.txt", &stdout);
    check_golden("fit_mag_report.txt", &read_artifact(dir.path(), "fit.txt"));
}

#[test]
fn sweep_field_exports_grid() {
    let dir = TempDir::new().unwrap();
    let stdout = run_ok(
        dir.path(),
        &[
            "sweep-field",
            "--config",
            fixture("sweep.toml").to_str().unwrap(),
            "--b-start-t",
            "0.1096",
            "--b-stop-t",
            "0.1118",
            "--n-fields",
            "9",
            "--out",
            "sweep.csv",
            "--plot",
            "sweep.svg",
        ],
    );
    check_golden("sweep_stdout.txt", &stdout);
    check_golden("sweep_map.csv", &read_artifact(dir.path(), "sweep.csv"));
    check_golden("sweep_heatmap.svg", &read_artifact(dir.path(), "sweep.svg"));
}

#[test]
fn fieldmap_scans_the_map_axis_by_default() {
    let dir = TempDir::new().unwrap();
    let stdout = run_ok(
        dir.path(),
        &[
            "fieldmap",
            "--in",
            fixture("map.csv").to_str().unwrap(),
            "--x-mm",
            "0",
            "--out",
            "profile.csv",
            "--plot",
            "profile.svg",
        ],
    );
    check_golden("fieldmap_stdout.txt", &stdout);
    check_golden(
        "fieldmap_profile.csv",
        &read_artifact(dir.path(), "profile.csv"),
    );
    check_golden(
        "fieldmap_profile.svg",
        &read_artifact(dir.path(), "profile.svg"),
    );
}

#[test]
fn fieldmap_custom_scan_positions() {
    let dir = TempDir::new().unwrap();
    let stdout = run_ok(
        dir.path(),
        &[
            "fieldmap",
            "--in",
            fixture("map.csv").to_str().unwrap(),
            "--x-mm",
            "0",
            "--y-start-mm",
            "-3.4",
            "--y-stop-mm",
            "3.4",
            "--n-positions",
            "8",
            "--out",
            "scan.csv",
        ],
    );
    check_golden("fieldmap_scan_stdout.txt", &stdout);
    check_golden("fieldmap_scan.csv", &read_artifact(dir.path(), "scan.csv"));
}

#[test]
fn dispersion_tabulates_curve() {
    let dir = TempDir::new().unwrap();
    let stdout = run_ok(
        dir.path(),
        &[
            "dispersion",
            "--p-mm",
            "1.5",
            "--h-mm",
            "2.0",
            "--n-points",
            "120",
            "--out",
            "curve.csv",
            "--plot",
            "beta.svg",
        ],
    );
    check_golden("dispersion_stdout.txt", &stdout);
    check_golden(
        "dispersion_curve.csv",
        &read_artifact(dir.path(), "curve.csv"),
    );
    check_golden(
        "dispersion_beta.svg",
        &read_artifact(dir.path(), "beta.svg"),
    );
}

#[test]
fn critical_report_file_matches_stdout_mode() {
    let dir = TempDir::new().unwrap();
    let config = fixture("pair.toml");
    let config = config.to_str().unwrap();
    let stdout = run_ok(
        dir.path(),
        &["critical", "--config", config, "--report", "critical.txt"],
    );
    check_golden("critical_stdout.txt", &stdout);
    check_golden(
        "critical_report.txt",
        &read_artifact(dir.path(), "critical.txt"),
    );

    // Without --report the same text goes to stdout.
    let direct = run_ok(dir.path(), &["critical", "--config", config]);
    check_golden("critical_report.txt", &direct);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = |out: &str, plot: &str| {
        [
            "simulate".to_string(),
            "--config".into(),
            fixture("single.toml").to_str().unwrap().into(),
            "--out".into(),
            out.into(),
            "--plot".into(),
            plot.into(),
        ]
    };
    let dir_a = TempDir::new().unwrap();
    let dir_b = TempDir::new().unwrap();
    for dir in [&dir_a, &dir_b] {
        let argv: Vec<String> = args("s.csv", "p.svg").into();
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        run_ok(dir.path(), &argv);
    }
    for name in ["s.csv", "p.svg"] {
        assert_eq!(
            read_artifact(dir_a.path(), name),
            read_artifact(dir_b.path(), name),
            "`{name}` differs between identical runs"
        );
    }
}

#[test]
fn help_and_version_exit_cleanly() {
    let dir = TempDir::new().unwrap();
    let out = chimag(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let help = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "simulate",
        "cascade",
        "fit",
        "sweep-field",
        "fieldmap",
        "dispersion",
        "critical",
    ] {
        assert!(help.contains(sub), "--help does not mention `{sub}`");
    }

    let out = chimag(dir.path(), &["simulate", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("--plot-kind"));

    let out = chimag(dir.path(), &["--version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("chimag "));
}

#[test]
fn usage_problems_exit_2() {
    let dir = TempDir::new().unwrap();
    let config = fixture("single.toml");
    let config = config.to_str().unwrap();

    let (code, _) = exit_code(dir.path(), &[]);
    assert_eq!(code, 2, "missing subcommand");
    let (code, _) = exit_code(dir.path(), &["conjure"]);
    assert_eq!(code, 2, "unknown subcommand");
    let (code, _) = exit_code(
        dir.path(),
        &["simulate", "--config", config, "--out", "s.csv", "--nope"],
    );
    assert_eq!(code, 2, "unknown flag");
    let (code, _) = exit_code(
        dir.path(),
        &[
            "fit",
            "--in",
            fixture("measured.s2p").to_str().unwrap(),
            "--components",
            "s13",
        ],
    );
    assert_eq!(code, 2, "unknown S-parameter component");
    let (code, stderr) = exit_code(
        dir.path(),
        &[
            "sweep-field",
            "--config",
            config,
            "--b-start-t",
            "0.1",
            "--b-stop-t",
            "0.11",
            "--n-fields",
            "1",
            "--out",
            "s.csv",
        ],
    );
    assert_eq!(code, 2, "single-point field sweep");
    assert!(stderr.starts_with("error: "), "stderr: {stderr}");
    let (code, _) = exit_code(
        dir.path(),
        &[
            "fieldmap",
            "--in",
            fixture("map.csv").to_str().unwrap(),
            "--x-mm",
            "0",
            "--y-start-mm",
            "-1",
            "--out",
            "p.csv",
        ],
    );
    assert_eq!(code, 2, "partial custom-scan flags");
}

#[test]
fn invalid_config_content_exits_2() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "conjured_key = true\n").unwrap();
    let (code, stderr) = exit_code(
        dir.path(),
        &["simulate", "--config", "bad.toml", "--out", "s.csv"],
    );
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.starts_with("error: "), "stderr: {stderr}");
}

#[test]
fn environment_failures_exit_1() {
    let dir = TempDir::new().unwrap();
    let (code, stderr) = exit_code(
        dir.path(),
        &["simulate", "--config", "missing.toml", "--out", "s.csv"],
    );
    assert_eq!(code, 1, "missing config file; stderr: {stderr}");
    assert!(stderr.starts_with("error: cannot read"), "stderr: {stderr}");

    let (code, stderr) = exit_code(
        dir.path(),
        &[
            "simulate",
            "--config",
            fixture("single.toml").to_str().unwrap(),
            "--out",
            "no-such-dir/s.csv",
        ],
    );
    assert_eq!(code, 1, "unwritable output directory; stderr: {stderr}");
}

#[test]
fn diagnostics_stay_plain_when_piped() {
    // Even without the opt-out variable, a piped stderr must not get ANSI
    // escapes.
    let dir = TempDir::new().unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chimag"));
    cmd.args(["simulate", "--config", "missing.toml", "--out", "s.csv"])
        .current_dir(dir.path())
        .env_remove("CHIMAG_NO_COLOR");
    let out = cmd.output().expect("failed to spawn chimag");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:"), "stderr: {stderr}");
    assert!(!stderr.contains('\x1b'), "ANSI escape on piped stderr");
}
