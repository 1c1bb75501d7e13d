//! End-to-end tests against the built binary: exit codes, artifact
//! layout, and reproducibility of the written files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gradbound"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const PME_RUN: &str = "\
model.name = pme
model.params = 2
dim = 1
n = 128
t_end = 0.05
output_every = 0.01
snapshot_times = 0, 0.025
initial.kind = sine
initial.mean = 0.5
initial.amplitude = 0.4
";

#[test]
fn run_writes_artifacts_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "run.conf", PME_RUN);
    let out = run_in(tmp.path(), &["run", "--config", "run.conf", "--out", "art"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let dir = tmp.path().join("art");
    for f in [
        "config.effective",
        "diagnostics.csv",
        "verdicts.txt",
        "snapshot-000.dat",
        "snapshot-001.dat",
    ] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let csv = fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,dt,max_grad,u_min,u_max,mass,w_rate");
    assert!(lines.next().unwrap().starts_with("0,"), "first row is t = 0");
    let verdicts = fs::read_to_string(dir.join("verdicts.txt")).unwrap();
    assert!(verdicts.contains("overall = pass"));
    assert!(stdout(&out).contains("overall = pass"));

    // snapshots carry the requested times in their headers
    let snap = fs::read_to_string(dir.join("snapshot-001.dat")).unwrap();
    assert!(snap.starts_with("# d=1 n=128 t=2.5"), "header: {}", &snap[..40]);
}

#[test]
fn identical_configs_regenerate_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "run.conf", PME_RUN);

    // default out dir is named from the config hash
    let first = run_in(tmp.path(), &["run", "--config", "run.conf"]);
    assert_eq!(code(&first), 0);
    let line = stdout(&first);
    let hash_dir = line
        .lines()
        .find_map(|l| l.strip_prefix("out = "))
        .expect("run prints its out dir")
        .to_string();
    assert!(hash_dir.starts_with("run-"));

    // the effective dump reparses to the same configuration, so pointing
    // the binary at it must land in the same directory
    let eff = format!("{hash_dir}/config.effective");
    let again = run_in(tmp.path(), &["run", "--config", &eff]);
    assert_eq!(code(&again), 0);
    assert!(stdout(&again).contains(&format!("out = {hash_dir}")));

    // and a separate --out tree is bit-identical file by file
    let other = run_in(tmp.path(), &["run", "--config", "run.conf", "--out", "copy"]);
    assert_eq!(code(&other), 0);
    for f in [
        "config.effective",
        "diagnostics.csv",
        "verdicts.txt",
        "snapshot-000.dat",
        "snapshot-001.dat",
    ] {
        let a = fs::read(tmp.path().join(&hash_dir).join(f)).unwrap();
        let b = fs::read(tmp.path().join("copy").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between regenerations");
    }
}

#[test]
fn constant_initial_data_keeps_every_row_identical() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "c.conf",
        "model.name = pme\nmodel.params = 2\nn = 64\nt_end = 0.02\noutput_every = 0.005\n\
         initial.kind = constant\ninitial.value = 0.4\n",
    );
    let out = run_in(tmp.path(), &["run", "--config", "c.conf", "--out", "art"]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(tmp.path().join("art/diagnostics.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows.len() >= 4);
    // columns after t and dt: max_grad, u_min, u_max, mass
    let stats = |row: &str| {
        row.split(',').skip(2).take(4).map(str::to_string).collect::<Vec<_>>()
    };
    let first = stats(rows[0]);
    assert_eq!(first[0], "0", "constant data has zero gradient");
    for row in &rows {
        assert_eq!(stats(row), first, "row '{row}' drifted");
    }
}

#[test]
fn initial_data_outside_the_box_exits_three_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    // amplitude 0.45 pushes u to 0.05, outside the d=2 certified interval
    write_config(
        tmp.path(),
        "h.conf",
        "model.name = hydrology_full\ndim = 2\nn = 32\nt_end = 0.01\n\
         initial.kind = sine\ninitial.mean = 0.5\ninitial.amplitude = 0.45\n",
    );
    let out = run_in(tmp.path(), &["run", "--config", "h.conf"]);
    assert_eq!(code(&out), 3);
    let leftovers: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("run-"))
        .collect();
    assert!(leftovers.is_empty(), "failed run must not leave a run dir");
}

#[test]
fn missing_and_malformed_configs_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["run", "--config", "absent.conf"]);
    assert_eq!(code(&out), 2);

    write_config(tmp.path(), "bad.conf", "model.name = pme\nmystery = 1\n");
    let out = run_in(tmp.path(), &["run", "--config", "bad.conf"]);
    assert_eq!(code(&out), 2);

    write_config(
        tmp.path(),
        "nomodel.conf",
        "model.name = wavelet\ninitial.kind = constant\ninitial.value = 0.5\n",
    );
    let out = run_in(tmp.path(), &["run", "--config", "nomodel.conf"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn certify_boundary_violator_and_unknown_model() {
    let tmp = tempfile::tempdir().unwrap();
    let pass = run_in(
        tmp.path(),
        &["certify", "pme", "--m", "1.8", "--dim", "2", "--samples", "200"],
    );
    assert_eq!(code(&pass), 0, "m = 1.8 is exactly the d=2 boundary");
    let text = stdout(&pass);
    assert!(text.contains("condition = g_condition"));
    assert!(text.contains("condition = differential_inequality"));
    assert!(!text.contains("verdict = fail"));

    let fail = run_in(
        tmp.path(),
        &["certify", "pme", "--m", "1.81", "--dim", "2", "--samples", "200"],
    );
    assert_eq!(code(&fail), 1);
    let text = stdout(&fail);
    assert!(text.contains("verdict = fail"));
    assert!(text.contains("witness_u = "), "failures carry a witness");

    let unknown = run_in(tmp.path(), &["certify", "wavelet"]);
    assert_eq!(code(&unknown), 2);
}

#[test]
fn certify_hydrology_default_box_passes_and_writes_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "certify",
            "psi:hydrology_full",
            "--dim",
            "1",
            "--samples",
            "200",
            "--grid-samples",
            "81",
            "--out",
            "cert",
        ],
    );
    assert_eq!(code(&out), 0);
    let file = fs::read_to_string(tmp.path().join("cert/verdicts.txt")).unwrap();
    assert_eq!(file, stdout(&out), "file mirrors what was printed");
    assert!(file.contains("condition = psi_condition"));
}

#[test]
fn compare_reports_the_gap_and_rejects_swapped_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "cmp.conf",
        "model.name = pme\nmodel.params = 2\nn = 64\nt_end = 0.02\n\
         initial.kind = constant\ninitial.value = 0.3\n\
         initial2.kind = constant\ninitial2.value = 0.5\n",
    );
    let out = run_in(tmp.path(), &["compare", "--config", "cmp.conf"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("max_defect = -0.2"));

    write_config(
        tmp.path(),
        "swap.conf",
        "model.name = pme\nmodel.params = 2\nn = 64\nt_end = 0.02\n\
         initial.kind = constant\ninitial.value = 0.5\n\
         initial2.kind = constant\ninitial2.value = 0.3\n",
    );
    let out = run_in(tmp.path(), &["compare", "--config", "swap.conf"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn compare_holds_for_an_ordered_sine_pair() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "pair.conf",
        "model.name = pme\nmodel.params = 2\nn = 64\nt_end = 0.02\n\
         initial.kind = sine\ninitial.mean = 0.5\ninitial.amplitude = 0.3\n\
         initial2.kind = sine\ninitial2.mean = 0.6\ninitial2.amplitude = 0.3\n",
    );
    let out = run_in(tmp.path(), &["compare", "--config", "pair.conf"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_locates_the_flip_and_handles_edge_ranges() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "sweep", "pme", "--range", "1.9:2.1:0.05", "--dim", "1", "--samples", "150",
            "--grid-samples", "81", "--out", "sw",
        ],
    );
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(tmp.path().join("sw/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "parameter,dim,certify_verdict,worst_margin");
    assert_eq!(lines.len(), 6, "five parameters plus the header");
    let verdict = |param: &str| {
        lines
            .iter()
            .find(|l| l.starts_with(&format!("{param},1,")))
            .unwrap_or_else(|| panic!("no row for {param}"))
            .split(',')
            .nth(2)
            .unwrap()
            .to_string()
    };
    assert_eq!(verdict("1.9"), "pass");
    assert_eq!(verdict("2"), "pass", "the boundary parameter still passes");
    assert_eq!(verdict("2.05"), "fail");
    assert_eq!(verdict("2.1"), "fail");

    // empty range: header only, still success
    let out = run_in(
        tmp.path(),
        &["sweep", "pme", "--range", "2.0:1.0:0.05", "--out", "empty"],
    );
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(tmp.path().join("empty/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);

    let out = run_in(tmp.path(), &["sweep", "pme", "--range", "nope"]);
    assert_eq!(code(&out), 2);
    let out = run_in(tmp.path(), &["sweep", "gravity", "--range", "1:2:0.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_run_column_reports_bound_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "sweep", "pme", "--range", "1.5:2.0:0.5", "--dim", "1", "--run", "--n", "32",
            "--samples", "100", "--grid-samples", "61", "--out", "sw",
        ],
    );
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(tmp.path().join("sw/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "parameter,dim,certify_verdict,worst_margin,run_verdict");
    for row in &lines[1..] {
        assert!(row.ends_with(",pass"), "run verdict in '{row}'");
    }
}

#[test]
fn snapshot_files_feed_back_in_as_initial_data() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "run.conf", PME_RUN);
    let out = run_in(tmp.path(), &["run", "--config", "run.conf", "--out", "a"]);
    assert_eq!(code(&out), 0);

    write_config(
        tmp.path(),
        "resume.conf",
        "model.name = pme\nmodel.params = 2\nn = 128\nt_end = 0.01\noutput_every = 0.005\n\
         initial.kind = file\ninitial.path = a/snapshot-001.dat\n",
    );
    let out = run_in(tmp.path(), &["run", "--config", "resume.conf", "--out", "b"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let verdicts = fs::read_to_string(tmp.path().join("b/verdicts.txt")).unwrap();
    assert!(verdicts.contains("overall = pass"));
}
