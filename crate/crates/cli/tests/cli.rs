use std::path::Path;
use std::process::{Command, Output};

use superdir::io::{read_coupling_csv, write_coupling_csv};
use superdir::linalg::frobenius;

fn superdir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superdir"))
        .args(args)
        .env_remove("SUPERDIR_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["coupling", "synth", "--out-dir", path_str(dir)];
    args.extend_from_slice(extra);
    let out = superdir(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

fn field_files(dir: &Path, kind: &str, m: usize) -> Vec<String> {
    (0..m)
        .map(|k| dir.join(format!("{kind}_{k}.csv")).to_string_lossy().into_owned())
        .collect()
}

#[test]
fn single_element_beamform_is_unit_excitation() {
    let out = superdir(&["beamform", "--antennas", "1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("[0]") && text.contains("1.000+0j"), "{text}");
    assert!(text.contains("directivity: 1.000"), "{text}");
}

#[test]
fn beamform_reports_linear_and_dbi() {
    let out = superdir(&["beamform", "--antennas", "2", "--spacing", "0.05"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("directivity: 3.974 (5.992 dBi)"), "{}", stdout(&out));
}

#[test]
fn broadside_half_wave_sweep_gives_two() {
    let out = superdir(&[
        "sweep",
        "--antennas",
        "2",
        "--pattern",
        "isotropic",
        "--spacing",
        "0.5:0.5:1",
        "--theta0",
        "90",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "spacing,dmax,d_traditional,d_coupled,gain,cond_z");
    assert_eq!(lines.len(), 2);
    let dmax: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((dmax - 2.0).abs() < 1e-9);
}

#[test]
fn sweep_reads_config_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg,
        "# endfire pair\nantennas = 2\npattern = isotropic\nspacing = 0.05:0.5:4\ntheta0 = 0\n",
    )
    .unwrap();
    let out = superdir(&["sweep", "--config", path_str(&cfg), "--spacing", "0.01:0.01:1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 0.01);
    assert!(row[1] > 0.99 * 4.0 && row[1] < 4.0);
}

#[test]
fn unknown_config_key_is_a_data_error_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(&cfg, "antennas = 2\nspacnig = 0.1\n").unwrap();
    let out = superdir(&["sweep", "--config", path_str(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&superdir(&["beamform", "--pattern", "yagi"])), 1);
    assert_eq!(code(&superdir(&["beamform", "--antennas", "0"])), 1);
    assert_eq!(code(&superdir(&["beamform", "--efficiency", "1.5"])), 1);
    assert_eq!(code(&superdir(&["beamform", "--theta0", "200"])), 1);
    assert_eq!(code(&superdir(&["sweep", "--spacing", "0.1:0.05:3"])), 1);
    assert_eq!(code(&superdir(&["swe", "fit", "missing.csv"])), 1);
    assert_eq!(code(&superdir(&["frobnicate"])), 1);
    assert_eq!(code(&superdir(&["--help"])), 0);
}

#[test]
fn bad_thread_environment_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_superdir"))
        .args(["beamform", "--antennas", "1"])
        .env("SUPERDIR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn synth_then_estimate_recovers_fixture() {
    let dir = tempfile::tempdir().unwrap();
    synth(
        dir.path(),
        &["--antennas", "3", "--spacing", "0.1", "--pattern", "half-wave", "--asymmetry", "0.3"],
    );
    let out_csv = dir.path().join("coupling_est.csv");
    let mut args = vec!["coupling", "estimate", "--spacing", "0.1", "--output", path_str(&out_csv)];
    let iso = field_files(dir.path(), "isolated", 3);
    let act = field_files(dir.path(), "active", 3);
    args.push("--isolated");
    args.extend(iso.iter().map(String::as_str));
    args.push("--active");
    args.extend(act.iter().map(String::as_str));
    let out = superdir(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let text = stdout(&out);
    let residual: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("residual: "))
        .expect("residual line")
        .parse()
        .unwrap();
    assert!(residual < 1e-9, "{residual}");

    let est_text = std::fs::read_to_string(&out_csv).unwrap();
    let est = read_coupling_csv(&est_text).unwrap();
    assert_eq!(write_coupling_csv(&est), est_text);
    let truth = read_coupling_csv(&std::fs::read_to_string(dir.path().join("coupling_true.csv")).unwrap()).unwrap();
    let err = frobenius(&(est.values() - truth.values())) / frobenius(truth.values());
    assert!(err < 1e-8, "{err:e}");

    // the estimated matrix drives beamform directly
    let coupling = format!("file:{}", path_str(&out_csv));
    let out = superdir(&[
        "beamform",
        "--antennas",
        "3",
        "--spacing",
        "0.1",
        "--pattern",
        "half-wave",
        "--coupling",
        &coupling,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("uncoupled drive in coupled model"));
}

#[test]
fn mismatched_grids_are_a_data_error() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth(a.path(), &["--antennas", "2", "--spacing", "0.1"]);
    synth(b.path(), &["--antennas", "2", "--spacing", "0.1", "--truncation", "12"]);
    let iso = field_files(a.path(), "isolated", 2);
    let act = field_files(b.path(), "active", 2);
    let out = superdir(&[
        "coupling",
        "estimate",
        "--truncation",
        "11",
        "--isolated",
        &iso[0],
        &iso[1],
        "--active",
        &act[0],
        &act[1],
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn identical_isolated_fields_are_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &["--antennas", "2", "--spacing", "0.1"]);
    let iso = field_files(dir.path(), "isolated", 2);
    let act = field_files(dir.path(), "active", 2);
    let out = superdir(&[
        "coupling",
        "estimate",
        "--spacing",
        "0.1",
        "--isolated",
        &iso[0],
        &iso[0],
        "--active",
        &act[0],
        &act[1],
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn malformed_field_file_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.csv");
    std::fs::write(
        &path,
        "theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi\n10,0,1,0,0,0\n20,0,1,zero,0,0\n",
    )
    .unwrap();
    let out = superdir(&["swe", "fit", path_str(&path), "--truncation", "1"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn swe_fit_writes_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &["--antennas", "2", "--spacing", "0.2", "--pattern", "hertzian"]);
    let input = dir.path().join("isolated_1.csv");
    let output = dir.path().join("q.csv");
    let out = superdir(&[
        "swe",
        "fit",
        path_str(&input),
        "--radius",
        "0.2",
        "--output",
        path_str(&output),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("truncation 12"), "{}", stdout(&out));
    let text = std::fs::read_to_string(&output).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,m,n,re,im"));
    assert_eq!(lines.count(), 2 * 12 * 14);

    // metres at the default 845 MHz: 0.2 wavelengths is about 7.1 cm
    let out = superdir(&["swe", "fit", path_str(&input), "--radius-m", "0.071"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("truncation 12"), "{}", stderr(&out));
}

#[test]
fn sweep_output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let many = dir.path().join("many.csv");
    let base = [
        "sweep",
        "--antennas",
        "3",
        "--pattern",
        "half-wave",
        "--spacing",
        "0.05:0.5:8",
        "--coupling",
        "synthetic:gamma=0.3,beta=0.5,asymmetry=0.1",
        "--efficiency",
        "0.96",
    ];
    let mut a: Vec<&str> = base.to_vec();
    a.extend(["--threads", "1", "--output", path_str(&one)]);
    let mut b: Vec<&str> = base.to_vec();
    b.extend(["--threads", "4", "--output", path_str(&many)]);
    assert_eq!(code(&superdir(&a)), 0);
    assert_eq!(code(&superdir(&b)), 0);
    assert_eq!(std::fs::read(&one).unwrap(), std::fs::read(&many).unwrap());
}

#[test]
fn impedance_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.csv");
    let out = superdir(&["impedance", "--antennas", "2", "--spacing", "0.5", "--output", path_str(&path)]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 4);
    assert!((values[0] - 1.0).abs() < 1e-12 && values[1].abs() < 1e-12);
}
