use std::path::Path;
use std::process::{Command, Output};

use forcerank::synth::{make_dented_patch, PatchSpec};
use forcerank::{Point3, PointCloud};
use forcerank_cli::io;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forcerank")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.xyz");
    let b = dir.path().join("b.xyz");
    for f in [&a, &b] {
        let out = run(&["synth", "--points", "3000", "--cones", "2", "--seed", "3", "-o", p(f)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ta = std::fs::read(dir.path().join("a.truth.csv")).unwrap();
    assert_eq!(ta, std::fs::read(dir.path().join("b.truth.csv")).unwrap());
    assert!(String::from_utf8(ta).unwrap().lines().skip(1).any(|l| l.ends_with(",1")));
}

#[test]
fn synth_without_cones_has_clean_truth() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("c.ply");
    assert_eq!(code(&run(&["synth", "--points", "2000", "--cones", "0", "-o", p(&cloud)])), 0);
    let truth = std::fs::read_to_string(dir.path().join("c.truth.csv")).unwrap();
    let mut lines = truth.lines();
    assert_eq!(lines.next(), Some("index,label"));
    assert!(lines.all(|l| l.ends_with(",0")));
    assert!(io::read_cloud(&cloud).unwrap().len() > 1500);
}

#[test]
fn detect_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("s.ply");
    assert_eq!(code(&run(&["synth", "--points", "1000", "--cones", "1", "-o", p(&cloud)])), 0);
    let out_dir = dir.path().join("run");
    let out = run(&["detect", "-i", p(&cloud), "-o", p(&out_dir), "--fps", "0"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let manifest = std::fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("fps_target = disabled"));
    assert!(manifest.contains("xi = "));
    let labels = io::read_labels(&out_dir.join("labels.csv")).unwrap();
    let n = io::read_cloud(&cloud).unwrap().len();
    assert_eq!(labels.iter().map(|r| r.0).collect::<Vec<_>>(), (0..n).collect::<Vec<_>>());
    let heat = io::read_cloud(&out_dir.join("heatmap.ply")).unwrap();
    assert_eq!(heat.len(), n);

    let metrics = dir.path().join("m.txt");
    let out = run(&[
        "eval", "--pred", p(&out_dir.join("labels.csv")), "--scores", p(&out_dir.join("scores.csv")),
        "--truth", p(&dir.path().join("s.truth.csv")), "-o", p(&metrics),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&metrics).unwrap();
    for key in ["precision", "recall", "f1", "auroc", "tp", "fp", "tn", "fn"] {
        assert!(text.contains(&format!("\n{key} = ")), "{key} missing from {text}");
    }
}

#[test]
fn eval_trivial_cases() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("t.csv");
    let scores = dir.path().join("s.csv");
    let flipped = dir.path().join("f.csv");
    std::fs::write(&truth, "index,label\n0,1\n1,0\n2,1\n3,0\n").unwrap();
    std::fs::write(&scores, "index,score,displacement\n0,0.9,0\n1,0.5,0\n2,0.3,0\n3,0.1,0\n").unwrap();
    std::fs::write(&flipped, "index,score\n0,-0.9\n1,-0.5\n2,-0.3\n3,-0.1\n").unwrap();
    let out = run(&["eval", "--pred", p(&truth), "--scores", p(&scores), "--truth", p(&truth)]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("precision = 1\nrecall = 1\nf1 = 1\nauroc = 0.75\n"), "{text}");
    let out = run(&["eval", "--pred", p(&truth), "--scores", p(&flipped), "--truth", p(&truth)]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("auroc = 0.25\n"));

    let single = dir.path().join("one.csv");
    std::fs::write(&single, "index,label\n0,0\n1,0\n2,0\n3,0\n").unwrap();
    let out = run(&["eval", "--pred", p(&truth), "--scores", p(&scores), "--truth", p(&single)]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("auroc = undefined"));

    let short = dir.path().join("short.csv");
    std::fs::write(&short, "index,score\n0,0.1\n").unwrap();
    let out = run(&["eval", "--pred", p(&truth), "--scores", p(&short), "--truth", p(&truth)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_theorem_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("c.xyz");
    assert_eq!(code(&run(&["synth", "--points", "1500", "--cones", "1", "-o", p(&cloud)])), 0);
    let report = dir.path().join("r.txt");
    let out = run(&["verify-theorem", "-i", p(&cloud), "-o", p(&report)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(std::fs::read_to_string(&report).unwrap().contains("violations = 0"));

    let dup = dir.path().join("dup.xyz");
    std::fs::write(&dup, "0 0 0\n1 0 0\n0 1 0\n1 0 0\n0 0 1\n").unwrap();
    let out = run(&["verify-theorem", "-i", p(&dup)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("coincident points 1 and 3"), "{}", stderr(&out));

    let empty = dir.path().join("empty.ply");
    std::fs::write(&empty, "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n").unwrap();
    let out = run(&["verify-theorem", "-i", p(&empty)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("empty.ply"), "{}", stderr(&out));
}

#[test]
fn usage_and_config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("c.xyz");
    std::fs::write(&cloud, "0 0 0\n1 0 0\n0 1 0\n").unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "[graph]\nxi_multiplier = 4\n[force]\nspring = 2\n").unwrap();
    let out = run(&["detect", "-i", p(&cloud), "-o", p(dir.path()), "-c", p(&cfg)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("run.cfg:4:"), "{}", stderr(&out));

    assert_eq!(code(&run(&["detect", "--bogus"])), 1);
    assert_eq!(code(&run(&["detect", "-i", p(&cloud), "-o", p(dir.path()), "--delta", "0"])), 1);
    assert_eq!(code(&run(&["synth", "--shape", "sphere", "-o", p(&cloud)])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn malformed_cloud_names_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("bad.xyz");
    std::fs::write(&cloud, "0 0 0\n1 0 zero\n").unwrap();
    let out = run(&["detect", "-i", p(&cloud), "-o", p(dir.path())]);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("bad.xyz") && msg.contains("line 2"), "{msg}");
}

#[test]
fn open_surface_flag_spares_the_rim() {
    let dir = tempfile::tempdir().unwrap();
    let patch = make_dented_patch(&PatchSpec { side: 30.0, dent_radius: 5.0, ..PatchSpec::default() }).unwrap();
    let cloud = dir.path().join("patch.ply");
    io::write_cloud(&cloud, &patch.cloud).unwrap();
    let out_dir = dir.path().join("run");
    let out = run(&["detect", "-i", p(&cloud), "-o", p(&out_dir), "--open-surface"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest = std::fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("open_surface = true"));
    // rim: within two grid spacings of the patch edge
    let labels = io::read_labels(&out_dir.join("labels.csv")).unwrap();
    for (i, l) in labels {
        let q = patch.cloud.get(i);
        let rim = q.x.min(q.y).min(30.0 - q.x).min(30.0 - q.y) < 2.0;
        assert!(!(rim && l == 1), "rim point {i} labeled");
    }
}

#[test]
fn ascii_round_trip_of_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = PointCloud::new(vec![Point3::new(1.0 / 3.0, -7.25e-4, 12345.678901), Point3::new(0.0, 1.0, 2.0)]).unwrap();
    for name in ["r.ply", "r.xyz"] {
        let path = dir.path().join(name);
        io::write_cloud(&path, &cloud).unwrap();
        let back = io::read_cloud(&path).unwrap();
        for (a, b) in back.points().iter().zip(cloud.points()) {
            assert!((*a - *b).norm() <= 1e-9 * b.norm().max(1.0));
        }
    }
}
