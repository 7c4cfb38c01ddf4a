use std::process::Command;

use birelay_cli::{emit, emit_to_path, read_json, run_sweep, Format, Protocol, RunSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_birelay"))
}

fn small_spec() -> RunSpec {
    RunSpec {
        pt_db_sweep: vec![0.0],
        protocols: vec![Protocol::TdbcNoPa],
        n_slots: 3000,
        ..RunSpec::default()
    }
}

const HEADER: &str = "protocol,pt_db,sum_rate,r1r,r2r,rr1,rr2,avg_power,freq_m1,freq_m2,freq_m3,freq_m4,freq_m5,freq_m6,mu1,mu2,gamma,converged";

#[test]
fn one_row_table_is_two_csv_lines() {
    let table = run_sweep(&small_spec()).unwrap();
    let mut buf = Vec::new();
    emit(&table, Format::Csv, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], HEADER);
    assert!(lines[1].starts_with("tdbc_no_pa,0.0,"));
    assert!(lines[1].ends_with(",,,,true"));
}

#[test]
fn json_round_trips() {
    let spec = RunSpec {
        protocols: vec![Protocol::Proposed, Protocol::TdbcPa],
        ..small_spec()
    };
    let table = run_sweep(&spec).unwrap();
    let mut buf = Vec::new();
    emit(&table, Format::Json, &mut buf).unwrap();
    let back = read_json(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back.rows.len(), 2);
    for (a, b) in table.rows.iter().zip(&back.rows) {
        assert_eq!(
            (a.protocol, a.sum_rate, a.mu1, a.gamma, a.converged),
            (b.protocol, b.sum_rate, b.mu1, b.gamma, b.converged)
        );
    }
}

#[test]
fn repeated_emits_are_byte_identical() {
    let table = run_sweep(&small_spec()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    emit_to_path(&table, Format::Csv, &a).unwrap();
    emit_to_path(&table, Format::Csv, &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn unwritable_path_is_an_error() {
    let table = run_sweep(&small_spec()).unwrap();
    assert!(emit_to_path(&table, Format::Csv, std::path::Path::new("/nonexistent/dir/out.csv")).is_err());
}

#[test]
fn budget_is_respected_in_every_row() {
    let spec = RunSpec {
        pt_db_sweep: vec![-10.0, 10.0],
        n_slots: 4000,
        ..RunSpec::default()
    };
    let table = run_sweep(&spec).unwrap();
    assert_eq!(table.rows.len(), 10);
    for row in &table.rows {
        let pt = birelay_core::db_to_linear(row.pt_db);
        assert!(row.avg_power <= 1.01 * pt, "{row:?}");
    }
}

#[test]
fn proposed_sum_rate_grows_with_power() {
    let spec = RunSpec {
        pt_db_sweep: vec![-20.0, -10.0, 0.0, 10.0, 20.0],
        protocols: vec![Protocol::Proposed],
        ..RunSpec::default()
    };
    let table = run_sweep(&spec).unwrap();
    for w in table.rows.windows(2) {
        assert!(w[1].sum_rate >= w[0].sum_rate);
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("spec.toml");
    std::fs::write(
        &config,
        "pt_db_sweep = [0.0, 5.0]\nprotocols = [\"tdbc_no_pa\"]\nn_slots = 3000\nformat = \"json\"\n",
    )
    .unwrap();
    let out = dir.path().join("out.csv");
    let status = bin()
        .args(["sweep", "-q", "--format", "csv", "--pt-db-list=-5", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("tdbc_no_pa,-5.0,"));
}

#[test]
fn sweep_range_flags() {
    let out = bin()
        .args(["sweep", "-q", "--protocols", "tdbc_no_pa", "--slots", "3000"])
        .args(["--pt-db-start", "-4", "--pt-db-stop", "4", "--pt-db-step", "4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);
}

#[test]
fn usage_errors_exit_with_2() {
    let cases: [&[&str]; 4] = [
        &["sweep", "--slots", "10"],
        &["sweep", "--protocols", "nonsense"],
        &["sweep", "--pt-db-stop", "3"],
        &["calibrate", "--pt-db", "0", "--tol-rate", "0.5"],
    ];
    for args in cases {
        let status = bin().args(args).output().unwrap().status;
        assert_eq!(status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn calibrate_prints_thresholds() {
    let out = bin()
        .args(["calibrate", "--pt-db", "10", "--slots", "3000"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["converged"], true);
    assert!(v["thresholds"]["gamma"].as_f64().unwrap() > 0.0);
}
