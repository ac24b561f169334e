use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use relmap::io::{read_columns, read_grid, read_records};

fn relmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relmap"))
        .args(args)
        .env_remove("RELMAP_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = relmap(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn value_after(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("no '{key}' in {stdout}"))
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn map_right_writes_grid_and_pgm() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["map", "--width", "30", "--height", "20", "--source-radius", "2", "-o", s(dir.path())]);
    let phi = read_grid(dir.path().join("phi_dilation.grid"), false).unwrap();
    assert_eq!((phi.width(), phi.height()), (30, 20));
    // Fan opens to the right of the source at (6, 10).
    assert_eq!(phi.get(25, 10), 1.0);
    assert!(phi.get(1, 10) < 0.01);
    let pgm = fs::read(dir.path().join("phi_dilation.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n30 20\n65535\n"));
}

#[test]
fn inside_conv_reproduces_source() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["map", "--relation", "inside", "--method", "conv", "--width", "24", "--height", "18", "-o", s(dir.path())]);
    let src = read_grid(dir.path().join("source.grid"), false).unwrap();
    let phi = read_grid(dir.path().join("phi_conv.grid"), false).unwrap();
    assert_eq!(src, phi);
    assert_eq!(src.sum(), 81.0);
}

#[test]
fn map_diff_mse_matches_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["map", "--method", "chm", "--p", "100", "--diff", "--width", "40", "--height", "40", "--source-radius", "2", "-o", s(dir.path())]);
    let mse = value_after(&out, "mse_vs_dilation");
    assert!(dir.path().join("diff_chm.grid").exists());

    let csv = dir.path().join("sweep.csv");
    ok(&["bench", "sweep-p", "--sizes", "40", "--p-values", "10,100", "-o", s(&csv)]);
    let records = read_records(&csv).unwrap();
    let rec = records
        .iter()
        .find(|r| r.method == "chm" && r.param == 100.0)
        .unwrap();
    assert_eq!(rec.metric, mse);
    assert!(records.iter().any(|r| r.method == "dilation" && r.metric == 0.0));
}

#[test]
fn pixel_heatmap_equals_map() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    ok(&["map", "--width", "25", "--height", "25", "-o", d]);
    ok(&["heatmap", "--target", "pixel", "--width", "25", "--height", "25", "-o", d]);
    assert_eq!(
        fs::read(dir.path().join("phi_dilation.grid")).unwrap(),
        fs::read(dir.path().join("score_dilation.grid")).unwrap()
    );
    for label in ["conv", "chm", "genmean"] {
        assert!(dir.path().join(format!("scorediff_{label}.grid")).exists());
        assert!(dir.path().join(format!("score_{label}.pgm")).exists());
    }
}

#[test]
fn close_midcut_is_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["heatmap", "--relation", "close", "--width", "41", "--height", "41", "--ring", "1,2,4,8", "-o", s(dir.path())]);
    let (names, cols) = read_columns(dir.path().join("midcut_y.csv")).unwrap();
    assert_eq!(names, ["dilation", "conv", "chm", "genmean"]);
    for col in &cols {
        let n = col.len();
        for i in 0..n {
            assert!((col[i] - col[n - 1 - i]).abs() < 1e-12);
        }
    }
    assert!(dir.path().join("midcut_x.csv").exists());
}

#[test]
fn grad_defaults_pass_fd_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["grad", "--width", "30", "--height", "30", "-o", s(dir.path())]);
    for name in ["ds_dk", "ds_dl"] {
        let line = out.lines().find(|l| l.starts_with(&format!("fd_rel_error {name} "))).unwrap();
        assert!(line.ends_with(" ok"), "{line}");
        let err: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
        assert!(err < 1e-5);
    }
}

#[test]
fn grad_dot_kernel_gives_normalized_target() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["grad", "--relation", "inside", "--width", "20", "--height", "20", "-o", s(dir.path())]);
    let g = read_grid(dir.path().join("ds_dk.grid"), true).unwrap();
    let l = read_grid(dir.path().join("target.grid"), false).unwrap();
    let mass = l.sum();
    for (gv, lv) in g.values().iter().zip(l.values()) {
        assert_eq!(*gv, lv / mass);
    }
}

#[test]
fn config_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 6] = [
        &["grad", "--target-empty", "--width", "10", "--height", "10"],
        &["map", "--support", "4"],
        &["map", "--method", "chm", "--p", "0"],
        &["heatmap", "--target", "disk", "--target-radius", "-1"],
        &["map", "--relation", "sideways"],
        &["heatmap", "--relation", "close", "--ring", "1,2,3"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let out_dir = dir.path().join(format!("case{i}"));
        let mut full = args.to_vec();
        full.extend(["-o", s(&out_dir)]);
        let out = relmap(&full);
        assert_eq!(out.status.code(), Some(2), "{full:?}");
        assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
        assert!(!out_dir.exists(), "{full:?} left output behind");
    }
}

#[test]
fn failing_fd_tolerance_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = relmap(&["grad", "--width", "12", "--height", "12", "--fd-tolerance", "0", "-o", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        ok(&["map", "--method", "genmean", "--diff", "--width", "30", "--height", "30", "-o", s(d)]);
        ok(&["heatmap", "--relation", "far", "--width", "30", "--height", "30", "-o", s(d)]);
        ok(&["grad", "--width", "20", "--height", "20", "--seed", "7", "-o", s(d)]);
        ok(&["bench", "sweep-p", "--sizes", "20", "-o", s(&d.join("sweep.csv"))]);
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 20);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&["--threads", "1", "heatmap", "--width", "20", "--height", "20", "-o", s(a.path())]);
    ok(&["--threads", "3", "heatmap", "--width", "20", "--height", "20", "-o", s(b.path())]);
    for n in ["score_chm.grid", "score_genmean.grid", "midcut_y.csv"] {
        assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(b.path().join(n)).unwrap());
    }
}

#[test]
fn timing_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    ok(&["bench", "timing", "--sizes", "10,12", "--repeats", "3", "-o", s(&csv)]);
    let recs = read_records(&csv).unwrap();
    assert_eq!(recs.len(), 8);
    assert!(recs.iter().all(|r| r.experiment == "timing" && r.repeats == 3));
}
