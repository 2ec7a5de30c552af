mod common;

use std::path::Path;
use std::process::{Command, Output};

use trapforge::pipeline::load_image;

fn trapforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trapforge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn evaluate_two_class_example() {
    let dir = tempfile::tempdir().unwrap();
    let classes = write(dir.path(), "classes.txt", "neg\npos\n");
    let truth = write(
        dir.path(),
        "truth.csv",
        "id,path,label\na,a.png,neg\nb,b.png,neg\nc,c.png,pos\n",
    );
    let pred = write(dir.path(), "pred.csv", "id,neg,pos\na,0.9,0.1\nb,0.2,0.8\nc,0.3,0.7\n");
    let out = trapforge(&[
        "evaluate",
        "--pred",
        p(&pred),
        "--truth",
        p(&truth),
        "--classes",
        p(&classes),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("macro-F1: 0.666667"), "{}", stdout(&out));
}

#[test]
fn evaluate_reports_missing_ids() {
    let dir = tempfile::tempdir().unwrap();
    let classes = write(dir.path(), "classes.txt", "neg\npos\n");
    let truth = write(
        dir.path(),
        "truth.csv",
        "id,path,label\na,a.png,neg\nb,b.png,pos\nlost_one,c.png,pos\n",
    );
    let pred = write(dir.path(), "pred.csv", "id,neg,pos\na,0.9,0.1\nb,0.2,0.8\n");
    let out = trapforge(&[
        "evaluate",
        "--pred",
        p(&pred),
        "--truth",
        p(&truth),
        "--classes",
        p(&classes),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("lost_one"), "{}", stderr(&out));
}

#[test]
fn evaluate_rejects_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let classes = write(dir.path(), "classes.txt", "neg\npos\n");
    let truth = write(dir.path(), "truth.csv", "id,path,label\na,a.png,neg\n");
    let pred = write(dir.path(), "pred.csv", "id,neg,pos\na,0.9,0.9\n");
    let out = trapforge(&[
        "evaluate",
        "--pred",
        p(&pred),
        "--truth",
        p(&truth),
        "--classes",
        p(&classes),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error:"), "{}", stderr(&out));
}

#[test]
fn ensemble_normalizes_weights() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "id,x,y\ns1,1,0\ns2,0.5,0.5\n");
    let b = write(dir.path(), "b.csv", "id,x,y\ns2,0.25,0.75\ns1,0,1\n");
    let out_path = dir.path().join("avg.csv");
    let out = trapforge(&[
        "ensemble",
        "--pred",
        p(&a),
        p(&b),
        "--weights",
        "2,2",
        "--out",
        p(&out_path),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("0.500000"), "{}", stdout(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text, "id,x,y\ns1,0.500000000,0.500000000\ns2,0.375000000,0.625000000\n");
}

#[test]
fn ensemble_rejects_weight_count_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "id,x,y\ns1,1,0\n");
    let out_path = dir.path().join("avg.csv");
    let out = trapforge(&["ensemble", "--pred", p(&a), "--weights", "1,2", "--out", p(&out_path)]);
    assert!(!out.status.success());
    assert!(!out_path.exists());
}

fn augment(manifest: &Path, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "augment",
        "--manifest",
        p(manifest),
        "--config",
        p(config),
        "--out",
        p(out),
    ];
    args.extend_from_slice(extra);
    trapforge(&args)
}

#[test]
fn augment_without_steps_preserves_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::synthetic_dataset(dir.path(), 6, 12, 9, &["deer", "fox"], 1);
    let config = write(dir.path(), "run.toml", "seed = 3\nclasses = \"train14\"\n");
    let out = dir.path().join("out");
    let o = augment(&manifest, &config, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for i in 0..6 {
        let src = load_image(&dir.path().join(format!("raw/img_{i:03}.png"))).unwrap();
        let dst = load_image(&out.join(format!("images/img_{i:03}.png"))).unwrap();
        assert_eq!(src, dst);
    }
    let labels = std::fs::read_to_string(out.join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 7);
    assert!(out.join("report.json").exists());
}

#[test]
fn augment_always_on_flip() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::synthetic_dataset(dir.path(), 3, 7, 5, &["deer"], 2);
    let config = write(
        dir.path(),
        "run.toml",
        "classes = \"train14\"\n[[steps]]\nkind = \"hflip\"\nprobability = 1.0\n",
    );
    let out = dir.path().join("out");
    let o = augment(&manifest, &config, &out, &["--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let src = load_image(&dir.path().join("raw/img_001.png")).unwrap();
    let dst = load_image(&out.join("images/img_001.png")).unwrap();
    for y in 0..5 {
        for x in 0..7 {
            for c in 0..3 {
                assert_eq!(dst.get(x, y, c), src.get(6 - x, y, c));
            }
        }
    }
}

#[test]
fn augment_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::synthetic_dataset(dir.path(), 1, 4, 4, &["deer"], 3);
    let config = write(dir.path(), "run.toml", "classes = \"train14\"\n");
    let o = augment(&manifest, &config, &dir.path().join("out"), &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
}

#[test]
fn augment_skip_versus_strict() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::synthetic_dataset(dir.path(), 3, 6, 6, &["deer"], 4);
    std::fs::write(dir.path().join("raw/img_002.png"), b"not a png").unwrap();
    let config = write(
        dir.path(),
        "run.toml",
        "seed = 1\nclasses = \"train14\"\non_error = \"skip\"\n",
    );

    let out = dir.path().join("lenient");
    let o = augment(&manifest, &config, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("img_002"), "{}", stdout(&o));
    assert!(!out.join("images/img_002.png").exists());
    assert!(out.join("images/img_001.png").exists());

    let o = augment(&manifest, &config, &dir.path().join("strict"), &["--strict"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("img_002"), "{}", stderr(&o));
}

#[test]
fn augment_is_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::synthetic_dataset(dir.path(), 12, 16, 12, &["deer", "fox", "empty"], 5);
    let config = write(
        dir.path(),
        "run.toml",
        r#"
seed = 77
classes = "train14"
[mixup]
enabled = true
[[steps]]
kind = "rotate"
[[steps]]
kind = "noise"
[[steps]]
kind = "cutout"
size = 5
"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(augment(&manifest, &config, &a, &["--workers", "1"]).status.success());
    assert!(augment(&manifest, &config, &b, &["--workers", "4"]).status.success());
    assert_eq!(common::snapshot_tree(&a), common::snapshot_tree(&b));
}

#[test]
fn help_lists_defaults() {
    let o = trapforge(&["augment", "--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(
        text.contains("max_degrees = 15") && text.contains("alpha defaults to 0.2"),
        "{text}"
    );
}
