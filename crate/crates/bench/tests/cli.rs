use std::path::Path;
use std::process::Command;

use mht_bench::read_metrics;

fn bench(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mht-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_into(dir: &Path, extra: &[&str]) -> std::process::Output {
    let mut args = vec!["--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    bench(&args)
}

#[test]
fn repeated_runs_write_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let flags = [
        "--targets",
        "10",
        "--scans",
        "100",
        "--seed",
        "7",
        "--no-timing",
    ];
    assert!(run_into(&a, &flags).status.success());
    assert!(run_into(&b, &flags).status.success());
    for name in ["metrics.csv", "tracks.jsonl", "truth.jsonl"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert!(!x.is_empty(), "{name} empty");
        assert_eq!(x, y, "{name} differs");
    }
    let rows = read_metrics(&a.join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 100);
    let header = std::fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert!(header.starts_with(
        "tick,wall_time_micros,cluster_count,total_leaves,max_cluster_leaves,confirmed_event_count\n"
    ));
}

#[test]
fn clutter_only_run_confirms_no_track() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_into(
        tmp.path(),
        &["--targets", "0", "--scans", "50", "--seed", "3"],
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("confirmed tracks 0"), "{stdout}");
    assert_eq!(
        std::fs::read_to_string(tmp.path().join("truth.jsonl")).unwrap(),
        ""
    );
}

#[test]
fn malformed_scenario_exits_2_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, "detection_probability = 1.5\n").unwrap();
    let out = run_into(tmp.path(), &["--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("detection_probability"));

    std::fs::write(&path, "radar_radius = \"far\"\n").unwrap();
    let out = run_into(tmp.path(), &["--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radar_radius"));

    std::fs::write(&path, "radar_radius_typo = 3.0\n").unwrap();
    let out = run_into(tmp.path(), &["--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radar_radius_typo"));
}

#[test]
fn bad_flag_value_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_into(tmp.path(), &["--pd", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("detection_probability"));
}

#[test]
fn sweep_writes_one_row_per_count() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_into(
        tmp.path(),
        &["--sweep", "10,20", "--reps", "1", "--scans", "12"],
    );
    assert!(out.status.success());
    let rows = mht_bench::read_sweep(&tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.target_count).collect::<Vec<_>>(),
        vec![10, 20]
    );
    assert!(rows
        .iter()
        .all(|r| r.mean_time_micros > 0.0 && r.stddev_micros >= 0.0));
}

#[test]
fn scenario_file_is_read() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("s.toml");
    std::fs::write(&path, "duration = 7\ntarget_count = 2\n").unwrap();
    let out = run_into(
        tmp.path(),
        &["--scenario", path.to_str().unwrap(), "--no-events"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = read_metrics(&tmp.path().join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r.confirmed_event_count == 0));
}
