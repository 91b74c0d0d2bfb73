use irsan_core::harness::{
    emit_csv, read_csv, sweep, write_traces, Axis, Baseline, ScenarioConfig, CSV_HEADER,
};
use irsan_core::Setup;

fn desk() -> ScenarioConfig {
    ScenarioConfig {
        n: 4,
        k: 2,
        m: 3,
        channel: irsan_core::ChannelParams {
            ura_rows: 2,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn degenerate_sweeps_are_rejected() {
    let cfg = desk();
    assert!(sweep(&cfg, Axis::Pmax, &[40.0], 1, &[]).is_err());
    assert!(sweep(&cfg, Axis::Pmax, &[], 1, &Baseline::ALL).is_err());
    assert!(sweep(&cfg, Axis::Pmax, &[40.0], 0, &Baseline::ALL).is_err());
    assert!(sweep(&cfg, Axis::K, &[1.5], 1, &Baseline::ALL).is_err());
    assert!(sweep(&cfg, Axis::N, &[3.0], 1, &Baseline::ALL).is_err());
}

#[test]
fn cells_follow_value_then_baseline_order() {
    let res = sweep(&desk(), Axis::K, &[1.0, 2.0], 2, &Baseline::ALL).unwrap();
    let order: Vec<(f64, String)> = res
        .table
        .cells
        .iter()
        .map(|c| (c.value, c.baseline.clone()))
        .collect();
    let expected: Vec<(f64, String)> = [1.0, 2.0]
        .iter()
        .flat_map(|&v| {
            Baseline::ALL
                .iter()
                .map(move |b| (v, b.label().to_string()))
        })
        .collect();
    assert_eq!(order, expected);
    assert_eq!(res.records.len(), 16);
    for c in &res.table.cells {
        assert_eq!(c.trials_ok + c.trials_failed, 2);
        assert!(c.mean_rate_bps_hz >= 0.0);
    }
}

#[test]
fn single_cell_csv_has_two_lines_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    let res = sweep(&desk(), Axis::Pmax, &[40.0], 1, &[Baseline::AN_IRS]).unwrap();
    emit_csv(&res.table, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.split_terminator('\n').collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], CSV_HEADER);
    assert!(!text.contains('\r'));
    assert_eq!(read_csv(&path).unwrap(), res.table);
}

#[test]
fn rerun_writes_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk();
    let mut files = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("run{i}.csv"));
        let res = sweep(&cfg, Axis::Pmax, &[30.0, 40.0], 3, &Baseline::ALL).unwrap();
        emit_csv(&res.table, &path).unwrap();
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn empty_table_is_not_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    assert!(emit_csv(&Default::default(), &path).is_err());
    assert!(!path.exists());
}

#[test]
fn direct_links_do_not_depend_on_the_setup() {
    let a = ScenarioConfig {
        setup: Setup::A,
        ..desk()
    };
    let b = ScenarioConfig {
        setup: Setup::B,
        ..desk()
    };
    let ra = sweep(&a, Axis::Pmax, &[40.0], 1, &[Baseline::AN]).unwrap();
    let rb = sweep(&b, Axis::Pmax, &[40.0], 1, &[Baseline::AN]).unwrap();
    assert_eq!(
        ra.table.cells[0].mean_rate_bps_hz,
        rb.table.cells[0].mean_rate_bps_hz
    );
    assert_ne!(ra.table.cells[0].setup, rb.table.cells[0].setup);
}

#[test]
fn traces_are_one_json_object_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traces.jsonl");
    let res = sweep(
        &desk(),
        Axis::Pmax,
        &[40.0],
        2,
        &[Baseline::AN_IRS, Baseline::NONE],
    )
    .unwrap();
    write_traces(&res.records, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["trace"].is_array());
        assert!(v["config_hash"].is_string());
    }
}

#[test]
fn io_errors_name_the_path() {
    let res = sweep(&desk(), Axis::Pmax, &[40.0], 1, &[Baseline::NONE]).unwrap();
    let path = std::path::Path::new("/nonexistent-dir/out.csv");
    let err = emit_csv(&res.table, path).unwrap_err().to_string();
    assert!(err.contains("/nonexistent-dir/out.csv"), "{err}");
}
