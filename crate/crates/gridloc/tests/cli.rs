use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gridloc_core::channel::{distance_to_rss, ChannelParams};
use gridloc_core::geometry::{build_lattice, GridSpec, Point};

fn gridloc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridloc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn noiseless_reports(truth: Point, corners: &[(f64, f64)]) -> String {
    let mut text = String::from("beacon_x,beacon_y,avg_rssi_dbm,sample_count\n");
    for &(x, y) in corners {
        let rss = distance_to_rss(Point::new(x, y).dist(&truth), &ChannelParams::default()).unwrap();
        text.push_str(&format!("{x},{y},{rss:?},8\n"));
    }
    text
}

#[test]
fn locate_recovers_a_corner_cell_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reports.csv");
    fs::write(
        &path,
        noiseless_reports(Point::new(1.0, 1.0), &[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0), (4.0, 4.0)]),
    )
    .unwrap();
    let o = gridloc(&["locate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "1,1,refined,2\n");
}

#[test]
fn locate_uses_every_reported_beacon() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reports.csv");
    let all: Vec<(f64, f64)> = build_lattice(&GridSpec::default())
        .unwrap()
        .iter()
        .map(|b| (b.pos.x, b.pos.y))
        .collect();
    fs::write(&path, noiseless_reports(Point::new(5.5, 2.5), &all)).unwrap();
    let o = gridloc(&["locate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "5.5,2.5,refined,2\n");
}

#[test]
fn locate_with_three_reports_is_no_fix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reports.csv");
    fs::write(
        &path,
        noiseless_reports(Point::new(1.0, 1.0), &[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)]),
    )
    .unwrap();
    let o = gridloc(&["locate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o), ",,no_fix,2\n");
}

#[test]
fn locate_rejects_malformed_rows_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reports.csv");
    fs::write(&path, "0,0,-48,8\n4,0,loud,8\n0,4,-50,8\n4,4,-52,8\n").unwrap();
    let o = gridloc(&["locate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn locate_missing_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridloc(&["locate", "absent.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_bundled_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridloc(&["simulate", "paper_sweep", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = stdout(&o);
    assert!(summary.contains("rounds=625"), "{summary}");
    assert!(summary.contains("no_fix=0"), "{summary}");
    assert!(summary.contains("fraction_below_1.5m=1.000"), "{summary}");

    let out = dir.path().join("out");
    let records = fs::read_to_string(out.join("records.csv")).unwrap();
    let mut lines = records.lines();
    assert_eq!(
        lines.next(),
        Some("round,true_x,true_y,est_x,est_y,method,error_m,n_used")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 625);
    assert!(rows.iter().all(|r| r.split(',').nth(5) == Some("refined")));

    let buckets = fs::read_to_string(out.join("buckets.csv")).unwrap();
    assert!(
        buckets.starts_with("edge_lo,edge_hi,count,fraction\n0,0.5,625,1\n"),
        "{buckets}"
    );

    let surface = fs::read_to_string(out.join("surface.dat")).unwrap();
    let body: Vec<&str> = surface.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.iter().filter(|l| l.is_empty()).count(), 24);
    assert_eq!(body.iter().filter(|l| !l.is_empty()).count(), 625);
    assert!(!out.join("trace.csv").exists());
}

const NOISY: &str =
    "seed = 3\n[channel]\nsigma_dbm = 4.0\n[trajectory]\nkind = \"lattice_sweep\"\ncols = 10\nrows = 10\n";

#[test]
fn simulate_is_deterministic_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("noisy.toml"), NOISY).unwrap();
    for out in ["a", "b", "c"] {
        let seed = if out == "c" { "8" } else { "7" };
        let o = gridloc(
            &["simulate", "noisy.toml", "--seed", seed, "--out", out, "--trace"],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &str, f: &str| fs::read(dir.path().join(d).join(f)).unwrap();
    for f in ["records.csv", "buckets.csv", "surface.dat", "trace.csv"] {
        assert_eq!(read("a", f), read("b", f), "{f}");
    }
    assert_ne!(read("a", "records.csv"), read("c", "records.csv"));
}

#[test]
fn simulate_writes_trace_lines() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("one.toml"),
        "[trajectory]\nkind = \"static\"\npoint = [1.0, 1.0]\n",
    )
    .unwrap();
    let o = gridloc(&["simulate", "one.toml", "--out", "o", "--trace"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("o/trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "0,blind0,*,location_start,0");
    assert_eq!(lines[1], "0,beacon0,blind0,ack,0");
    assert!(lines.contains(&"140,blind0,*,rssi_test,0,8"));
    assert!(lines.contains(&"160,blind0,*,rssi_avg_request,0"), "{trace}");
    let responses: Vec<&&str> = lines.iter().filter(|l| l.contains(",rssi_avg_response,")).collect();
    assert_eq!(responses.len(), 9);
    assert!(responses.iter().all(|l| l.ends_with(",8")));
    // records for a static scenario have no surface
    assert!(!dir.path().join("o/surface.dat").exists());
}

#[test]
fn simulate_custom_buckets() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridloc(
        &["simulate", "paper_sweep", "--out", "o", "--buckets", "0.25,1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let buckets = fs::read_to_string(dir.path().join("o/buckets.csv")).unwrap();
    assert_eq!(
        buckets,
        "edge_lo,edge_hi,count,fraction\n0,0.25,625,1\n0.25,1,0,0\n1,inf,0,0\nno_fix,no_fix,0,\n"
    );

    let o = gridloc(
        &["simulate", "paper_sweep", "--out", "o", "--buckets", "1,0.5"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_rejects_blind_outside_hull_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "[trajectory]\nkind = \"static\"\npoint = [12.0, 1.0]\n",
    )
    .unwrap();
    let o = gridloc(&["simulate", "bad.toml", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("trajectory.point"), "{}", stderr(&o));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn simulate_rejects_unknown_keys_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[estimator]\nwindow_ms = 5\n").unwrap();
    let o = gridloc(&["simulate", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("estimator.window_ms"), "{}", stderr(&o));

    let o = gridloc(&["simulate", "missing.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

fn summary_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn sweep_sigma_medians_do_not_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let o = gridloc(
        &["sweep", "paper_sweep", "--vary", "sigma=0,2,4", "--out", "s"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = fs::read_to_string(dir.path().join("s/summary.csv")).unwrap();
    assert_eq!(stdout(&o), summary);
    assert!(summary.starts_with("key,value,rounds,"));
    let rows = summary_rows(&summary);
    assert_eq!(rows.len(), 3);
    let medians: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(medians.windows(2).all(|w| w[0] <= w[1]), "{medians:?}");
    for v in ["0", "2", "4"] {
        for kind in ["refined", "baseline", "comparison"] {
            assert!(
                dir.path().join(format!("s/sigma_{v}_{kind}.csv")).exists(),
                "{v} {kind}"
            );
        }
    }
    let baseline = fs::read_to_string(dir.path().join("s/sigma_0_baseline.csv")).unwrap();
    assert!(baseline.lines().nth(1).unwrap().contains(",weighted_centroid,"));
}

#[test]
fn sweep_spacing_emits_both_rows() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("noisy.toml"), "[channel]\nsigma_dbm = 2.0\n").unwrap();
    let o = gridloc(
        &["sweep", "noisy.toml", "--vary", "spacing=4,8", "--out", "s"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = summary_rows(&stdout(&o));
    assert_eq!(
        rows.iter().map(|r| (r[0].as_str(), r[1].as_str())).collect::<Vec<_>>(),
        [("spacing", "4"), ("spacing", "8")]
    );
}

#[test]
fn sweep_rejects_bad_vary_specs() {
    let dir = tempfile::tempdir().unwrap();
    for vary in ["sigma=", "height=1,2", "sigma", "spacing=-4"] {
        let o = gridloc(&["sweep", "paper_sweep", "--vary", vary, "--out", "s"], dir.path());
        assert_eq!(o.status.code(), Some(1), "{vary}");
        assert!(!stderr(&o).is_empty());
    }
    let o = gridloc(&["sweep", "paper_sweep", "--out", "s"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gridloc(&[], dir.path()).status.code(), Some(1));
    assert_eq!(gridloc(&["teleport"], dir.path()).status.code(), Some(1));
    assert_eq!(gridloc(&["--help"], dir.path()).status.code(), Some(0));
}
