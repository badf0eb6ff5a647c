use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use moseg::synth::{prevalence_error, read_manifest};
use moseg::{load_trajectories, save_trajectories};

fn moseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moseg"))
        .args(args)
        .env("MOSEG_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = moseg(args);
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

fn synth(dir: &Path, archetype: &str) -> PathBuf {
    let stdout = ok(&["synth", archetype, "--seed", "1", "-o", s(dir)]);
    PathBuf::from(stdout.trim())
}

#[test]
fn synth_writes_a_readable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "hopkins-like");
    assert_eq!(manifest, dir.path().join("hopkins-like").join("manifest.txt"));
    let entries = read_manifest(&manifest).unwrap();
    assert_eq!(entries.len(), 5);
    for e in &entries {
        let t = load_trajectories(&e.path).unwrap();
        assert_eq!(t.num_motions(), Some(e.num_motions));
        assert!(!e.expected_hard);
    }
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# hopkins-like-01: frames=")));
}

#[test]
fn synth_all_writes_every_archetype() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["synth", "all", "-o", s(dir.path())]);
    assert_eq!(stdout.lines().count(), 4);
    for line in stdout.lines() {
        assert!(Path::new(line).exists());
    }
}

#[test]
fn run_writes_labels_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "hopkins-like");
    let out = dir.path().join("out");
    ok(&["run", s(&manifest), "-m", "keradd", "--budget", "300", "-o", s(&out)]);

    for e in read_manifest(&manifest).unwrap() {
        let t = load_trajectories(&e.path).unwrap();
        let labels: Vec<usize> = fs::read_to_string(out.join(format!("{}.labels.txt", e.name)))
            .unwrap()
            .lines()
            .map(|l| l.parse().unwrap())
            .collect();
        assert_eq!(labels.len(), t.num_points());
        assert!(labels.iter().all(|&l| (1..=e.num_motions).contains(&l)));
    }
    let report = fs::read_to_string(out.join("keradd.report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "sequence,method,points,motions,error,converged,status");
    assert_eq!(lines.len(), 1 + 5 + 2);
    assert!(lines[1].starts_with("hopkins-like-01,keradd,") && lines[1].ends_with(",ok"));
    assert!(lines[6].starts_with("mean,keradd,,,0."));
    assert!(lines[7].starts_with("median,keradd,,,0."));
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "degenerate-mix");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    let common = ["-m", "subset", "--budget", "400", "--seed", "3"];
    let run = |out: &Path, jobs: &str| {
        let mut args = vec!["run", s(&manifest), "-o", s(out), "--jobs", jobs];
        args.extend(common);
        ok(&args);
    };
    run(&a, "1");
    run(&b, "1");
    run(&c, "2");
    for e in read_manifest(&manifest).unwrap() {
        let name = format!("{}.labels.txt", e.name);
        let la = fs::read(a.join(&name)).unwrap();
        assert_eq!(la, fs::read(b.join(&name)).unwrap(), "{name}");
        assert_eq!(la, fs::read(c.join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn run_dumps_kernels_embeddings_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "hopkins-like");
    let entry = &read_manifest(&manifest).unwrap()[0];
    let out = dir.path().join("out");
    ok(&[
        "run",
        s(&entry.path),
        "-m",
        "coreg",
        "--budget",
        "300",
        "-o",
        s(&out),
        "--dump-kernels",
        "--kernel-format",
        "coo",
        "--dump-embeddings",
        "--dump-trace",
    ]);
    let name = &entry.name;
    for view in ["affine", "homography", "fundamental"] {
        assert!(out.join(format!("{name}.{view}.kernel.coo")).exists());
        let emb = fs::read_to_string(out.join(format!("{name}.{view}.embedding.txt"))).unwrap();
        let t = load_trajectories(&entry.path).unwrap();
        assert_eq!(
            emb.lines().next().unwrap(),
            format!("{} {}", t.num_points(), entry.num_motions)
        );
    }
    let trace = fs::read_to_string(out.join(format!("{name}.trace.csv"))).unwrap();
    let totals: Vec<f64> = trace
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(totals.len() >= 4);
    for w in totals.windows(2) {
        assert!(w[1] <= w[0] + 1e-10, "{} -> {}", w[0], w[1]);
    }
    assert!(!fs::read_dir(&out)
        .unwrap()
        .any(|e| e.unwrap().file_name().to_string_lossy().contains(".tmp")));
}

#[test]
fn bench_writes_a_table_with_prevalence() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "hopkins-like");
    let out = dir.path().join("bench");
    let stdout = ok(&[
        "bench",
        s(&manifest),
        "--methods",
        "affine,subset",
        "--budget",
        "300",
        "-o",
        s(&out),
    ]);
    assert!(stdout.starts_with("sequence\tprevalence\taffine\tsubset\n"));
    let report = fs::read_to_string(out.join("bench.report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 1 + 5 + 2);
    for (line, e) in lines[1..6].iter().zip(read_manifest(&manifest).unwrap()) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], e.name);
        let t = load_trajectories(&e.path).unwrap();
        let want = prevalence_error(t.labels().unwrap());
        assert!((cells[1].parse::<f64>().unwrap() - want).abs() < 1e-6);
        assert_eq!(cells.len(), 4);
    }
    assert!(lines[6].starts_with("mean,"));
}

#[test]
fn bench_reports_failed_cells() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "hopkins-like");
    let entries = read_manifest(&manifest).unwrap();
    fs::remove_file(&entries[1].path).unwrap();
    let out = dir.path().join("bench");
    let result = moseg(&[
        "bench",
        s(&manifest),
        "--methods",
        "affine",
        "--budget",
        "200",
        "-o",
        s(&out),
    ]);
    assert_eq!(result.status.code(), Some(3));
    let report = fs::read_to_string(out.join("bench.report.csv")).unwrap();
    assert!(report.contains(&format!("{},,error:io", entries[1].name)));
}

#[test]
fn unlabelled_input_needs_motion_count() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "hopkins-like");
    let entry = &read_manifest(&manifest).unwrap()[0];
    let t = load_trajectories(&entry.path).unwrap().with_labels(None).unwrap();
    let plain = dir.path().join("plain.txt");
    save_trajectories(&t, &plain).unwrap();
    let out = dir.path().join("out");

    let missing = moseg(&["run", s(&plain), "-m", "affine", "-o", s(&out)]);
    assert_eq!(missing.status.code(), Some(2));

    ok(&[
        "run",
        s(&plain),
        "-M",
        "3",
        "-m",
        "affine",
        "--budget",
        "200",
        "-o",
        s(&out),
    ]);
    assert!(out.join("plain.labels.txt").exists());
    let report = fs::read_to_string(out.join("affine.report.csv")).unwrap();
    assert!(report.lines().nth(1).unwrap().starts_with("plain,affine,"));
}

#[test]
fn exit_codes_follow_error_categories() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("nope.txt");
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "2 1 1\n1 0 0 x 1\n").unwrap();

    assert_eq!(moseg(&[]).status.code(), Some(2));
    assert_eq!(
        moseg(&["run", s(&bad), "-m", "nope", "-o", s(&out)]).status.code(),
        Some(2)
    );
    assert_eq!(moseg(&["run", s(&missing), "-o", s(&out)]).status.code(), Some(3));
    assert_eq!(moseg(&["run", s(&bad), "-o", s(&out)]).status.code(), Some(4));
    assert_eq!(moseg(&["synth", "nope", "-o", s(&out)]).status.code(), Some(2));
    let stderr = String::from_utf8(moseg(&["run", s(&missing), "-o", s(&out)]).stderr).unwrap();
    assert!(stderr.contains("[io]") && stderr.contains("nope.txt"));
}

#[test]
fn convert_check_reports_each_file() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "kt-like");
    let entry = &read_manifest(&manifest).unwrap()[0];
    let missing = dir.path().join("nope.txt");

    let stdout = ok(&["convert-check", s(&entry.path), "--min-frames", "2"]);
    let t = load_trajectories(&entry.path).unwrap();
    assert!(stdout.contains(&format!(
        ": ok F={} N={} M={}",
        t.num_frames(),
        t.num_points(),
        entry.num_motions
    )));
    assert!(stdout.contains("survive(min_frames=2)="));

    let both = moseg(&["convert-check", s(&entry.path), s(&missing)]);
    assert_eq!(both.status.code(), Some(3));
    let stdout = String::from_utf8(both.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2);
    assert!(stdout.lines().nth(1).unwrap().contains("[io]"));
}
