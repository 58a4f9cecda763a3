use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use sresnet::cli::{run, EXIT_CONFIG, EXIT_DATA, EXIT_OK};
use sresnet::model::{Checkpoint, SeScheme};
use sresnet::train::History;
use tempfile::TempDir;

const SYNTH: [&str; 4] = ["--synth", "classes=3", "per-class=6", "size=16"];

fn toy_map() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../assets/toy-regions.json")
        .display()
        .to_string()
}

fn sresnet(args: &[&str]) -> i32 {
    run(std::iter::once("sresnet").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Tiny two-epoch training run into `out`.
fn train_into(out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec![
        "train",
        "--model",
        "tiny",
        "--epochs",
        "2",
        "--batch-size",
        "8",
        "--seed",
        "3",
        "--out",
        p(out),
    ];
    args.extend(SYNTH);
    args.extend(extra);
    sresnet(&args)
}

fn echo(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("run-config.json")).unwrap()).unwrap()
}

fn history(path: impl AsRef<Path>) -> History {
    History::from_csv(&fs::read_to_string(path).unwrap()).unwrap()
}

/// History rows without the wall-clock column.
fn history_sans_seconds(path: &Path) -> Vec<(usize, u64, u64, u64)> {
    history(path)
        .epochs
        .iter()
        .map(|r| {
            (
                r.epoch,
                r.train_loss.to_bits(),
                r.train_acc.to_bits(),
                r.test_acc.to_bits(),
            )
        })
        .collect()
}

#[test]
fn train_writes_history_checkpoint_and_echo() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    assert_eq!(train_into(&out, &["--scheme", "s3"]), EXIT_OK);
    assert_eq!(history(out.join("history.csv")).len(), 2);
    let ckpt = Checkpoint::read(out.join("model.ckpt")).unwrap();
    assert_eq!(ckpt.config().se_scheme, SeScheme::S3);
    assert_eq!(ckpt.config().num_classes, 3);
    assert!(out.join("stats.json").exists());
    let cfg = echo(&out);
    assert_eq!(cfg["epochs"], 2);
    assert_eq!(cfg["scheme"], "s3");
    assert_eq!(cfg["model"], "tiny");
    assert_eq!(cfg["augment"], false);
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x");
    assert_eq!(train_into(&out, &["--epochs", "0"]), EXIT_CONFIG);
    assert_eq!(train_into(&out, &["--scheme", "s9"]), EXIT_CONFIG);
    assert_eq!(train_into(&out, &["--lr", "-1"]), EXIT_CONFIG);
    assert_eq!(train_into(&out, &["--bogus"]), EXIT_CONFIG);
    assert_eq!(
        sresnet(&["train", "--model", "tiny", "--out", p(&out)]),
        EXIT_CONFIG
    );
    assert_eq!(
        sresnet(&[
            "train",
            "--synth",
            "classes=3",
            "colour=red",
            "--out",
            p(&out)
        ]),
        EXIT_CONFIG
    );
    assert_eq!(sresnet(&["frobnicate"]), EXIT_CONFIG);
    assert_eq!(sresnet(&["--help"]), EXIT_OK);
}

#[test]
fn binary_exit_codes_and_usage() {
    let dir = TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_sresnet");
    let missing = Command::new(bin)
        .args(["train", "--model", "tiny", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_CONFIG));
    let stderr = String::from_utf8_lossy(&missing.stderr);
    assert!(stderr.contains("Usage"), "{stderr}");
    assert!(stderr.contains("--synth"), "{stderr}");

    let ablate = Command::new(bin)
        .args(["ablate", "--schemes", "s1,s9", "--out"])
        .arg(dir.path())
        .args(SYNTH)
        .output()
        .unwrap();
    assert_eq!(ablate.status.code(), Some(EXIT_CONFIG));
    let stderr = String::from_utf8_lossy(&ablate.stderr);
    assert!(
        stderr.contains("s9") && stderr.contains("s1, s2, s3, s4"),
        "{stderr}"
    );
}

#[test]
fn flags_override_config_file_over_defaults() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("cfg.json");
    fs::write(
        &file,
        r#"{"epochs": 1, "lr": 0.01, "batch_size": 4, "scheme": "s2"}"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    assert_eq!(
        train_into(&out, &["--config", p(&file), "--scheme", "none"]),
        EXIT_OK
    );
    let cfg = echo(&out);
    // train_into passes --epochs 2 and --batch-size 8 as flags
    assert_eq!(cfg["epochs"], 2);
    assert_eq!(cfg["batch_size"], 8);
    assert_eq!(cfg["lr"], 0.01);
    assert_eq!(cfg["scheme"], "none");
    assert_eq!(cfg["beta1"], 0.9);
    assert_eq!(cfg["train_fraction"], 0.7);

    fs::write(&file, r#"{"epoch": 1}"#).unwrap();
    assert_eq!(train_into(&out, &["--config", p(&file)]), EXIT_CONFIG);
    fs::write(&file, r#"{"epochs": [1]}"#).unwrap();
    assert_eq!(train_into(&out, &["--config", p(&file)]), EXIT_CONFIG);
    fs::write(&file, "not json").unwrap();
    assert_eq!(train_into(&out, &["--config", p(&file)]), EXIT_CONFIG);
    assert_eq!(
        train_into(&out, &["--config", p(&dir.path().join("absent.json"))]),
        EXIT_CONFIG
    );
}

#[test]
fn echoed_config_reproduces_run() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first");
    assert_eq!(train_into(&first, &["--scheme", "s2"]), EXIT_OK);
    let second = dir.path().join("second");
    let echo_path = first.join("run-config.json");
    assert_eq!(
        sresnet(&["train", "--config", p(&echo_path), "--out", p(&second)]),
        EXIT_OK
    );
    assert_eq!(
        history_sans_seconds(&first.join("history.csv")),
        history_sans_seconds(&second.join("history.csv"))
    );
    assert_eq!(
        fs::read(first.join("model.ckpt")).unwrap(),
        fs::read(second.join("model.ckpt")).unwrap()
    );
    let (mut a, mut b) = (echo(&first), echo(&second));
    a["out"] = "".into();
    b["out"] = "".into();
    assert_eq!(a, b);
}

#[test]
fn ablate_writes_one_entry_per_scheme() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("abl");
    let mut args = vec![
        "ablate",
        "--schemes",
        "s1,s3",
        "--model",
        "tiny",
        "--epochs",
        "1",
        "--batch-size",
        "8",
        "--out",
        p(&out),
    ];
    args.extend(SYNTH);
    assert_eq!(sresnet(&args), EXIT_OK);
    let csv = fs::read_to_string(out.join("ablation.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "{csv}");
    assert!(
        lines[0].contains("Scheme 1") && lines[0].contains("Scheme 3"),
        "{csv}"
    );
    assert_eq!(lines[1].split(',').count(), 3, "{csv}");
    for s in ["s1", "s3"] {
        let ckpt = Checkpoint::read(out.join(format!("scheme-{s}.ckpt"))).unwrap();
        assert_eq!(ckpt.config().se_scheme.as_str(), s);
        assert_eq!(history(out.join(format!("history-{s}.csv"))).len(), 1);
    }

    let single = dir.path().join("single");
    let mut args = vec![
        "ablate",
        "--schemes",
        "s3",
        "--model",
        "tiny",
        "--epochs",
        "1",
        "--out",
        p(&single),
    ];
    args.extend(SYNTH);
    assert_eq!(sresnet(&args), EXIT_OK);
    let csv = fs::read_to_string(single.join("ablation.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 2, "{csv}");
}

#[test]
fn eval_extract_and_compare_from_checkpoint() {
    let dir = TempDir::new().unwrap();
    let run_dir = dir.path().join("run");
    assert_eq!(train_into(&run_dir, &[]), EXIT_OK);
    let ckpt = run_dir.join("model.ckpt");
    let with_ckpt = |cmd: &'static str, out: &Path, extra: &[&str]| {
        let mut args = vec![
            cmd,
            "--checkpoint",
            p(&ckpt),
            "--seed",
            "3",
            "--out",
            p(out),
        ];
        args.extend(SYNTH);
        args.extend(extra);
        sresnet(&args)
    };

    let ev = dir.path().join("eval");
    assert_eq!(with_ckpt("eval", &ev, &[]), EXIT_OK);
    let body: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ev.join("eval.json")).unwrap()).unwrap();
    let acc = body["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    // 18 images, 70/30 split
    assert_eq!(body["items"], 6);

    let ex = dir.path().join("extract");
    assert_eq!(with_ckpt("extract", &ex, &[]), EXIT_OK);
    let features = fs::read_to_string(ex.join("features.csv")).unwrap();
    assert_eq!(features.lines().count(), 19);
    // tiny scale: 512 / 4 feature columns after source and class
    assert_eq!(features.lines().next().unwrap().split(',').count(), 2 + 128);
    let protos: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ex.join("prototypes.json")).unwrap()).unwrap();
    assert_eq!(protos.as_array().unwrap().len(), 3);

    let map = toy_map();
    let cmp = |out: &Path| with_ckpt("compare", out, &["--reference", "c1-checks", "--map", &map]);
    let (a, b) = (dir.path().join("cmp-a"), dir.path().join("cmp-b"));
    assert_eq!(cmp(&a), EXIT_OK);
    assert_eq!(cmp(&b), EXIT_OK);
    let report = fs::read_to_string(a.join("report.csv")).unwrap();
    let lines: Vec<_> = report.lines().collect();
    assert_eq!(lines[0], "class,euclidean,manhattan,cosine");
    assert_eq!(lines[1], "c1-checks,0.0000,0.0000,1.0000");
    assert_eq!(lines.len(), 4);
    for metric in ["euclidean", "manhattan", "cosine"] {
        let name = format!("choropleth-{metric}.svg");
        let svg = fs::read(a.join(&name)).unwrap();
        assert_eq!(svg, fs::read(b.join(&name)).unwrap(), "{name}");
        let text = String::from_utf8(svg).unwrap();
        assert_eq!(text.matches(r#"class="matched""#).count(), 3);
        assert_eq!(text.matches(r#"class="unmatched""#).count(), 7);
    }
    assert_eq!(
        fs::read(a.join("report.csv")).unwrap(),
        fs::read(b.join("report.csv")).unwrap()
    );

    let bad = dir.path().join("bad");
    assert_eq!(
        with_ckpt("compare", &bad, &["--reference", "NoSuchClass"]),
        EXIT_DATA
    );
    assert_eq!(
        with_ckpt(
            "compare",
            &bad,
            &["--reference", "c0-stripes", "--scheme", "s1"]
        ),
        EXIT_DATA
    );
    assert_eq!(with_ckpt("compare", &bad, &[]), EXIT_CONFIG);
    let mut args = vec![
        "eval",
        "--checkpoint",
        p(&ckpt),
        "--out",
        p(&bad),
        "--synth",
        "classes=4",
        "per-class=6",
        "size=16",
    ];
    assert_eq!(sresnet(&args), EXIT_DATA);
    args[1] = "--checkpoint";
    args[2] = "/nonexistent/model.ckpt";
    assert_eq!(sresnet(&args), EXIT_DATA);
}

#[test]
fn synth_writes_ppm_tree() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("corpus");
    assert_eq!(
        sresnet(&[
            "synth",
            "--synth",
            "classes=2",
            "per-class=3",
            "size=8",
            "--seed",
            "1",
            "--out",
            p(&out)
        ]),
        EXIT_OK
    );
    let mut ppm = 0;
    for class in fs::read_dir(&out).unwrap() {
        let class = class.unwrap().path();
        if class.is_dir() {
            ppm += fs::read_dir(&class).unwrap().count();
        }
    }
    assert_eq!(ppm, 6);
    assert!(out.join("synth-spec.json").exists());
    assert_eq!(sresnet(&["synth", "--out", p(&out)]), EXIT_CONFIG);

    // the written tree trains through --data
    let run_dir = dir.path().join("run");
    assert_eq!(
        sresnet(&[
            "train",
            "--data",
            p(&out),
            "--model",
            "tiny",
            "--image-size",
            "8",
            "--epochs",
            "1",
            "--train-fraction",
            "0.5",
            "--out",
            p(&run_dir)
        ]),
        EXIT_OK
    );
}

#[test]
fn render_from_report_csv() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.csv");
    fs::write(
        &report,
        "class,euclidean,manhattan,cosine\nc0-stripes,0.0000,0.0000,1.0000\nc1-checks,2.5000,9.0000,0.2500\n",
    )
    .unwrap();
    let map = toy_map();
    let out = dir.path().join("r");
    assert_eq!(
        sresnet(&[
            "render",
            "--report",
            p(&report),
            "--map",
            &map,
            "--metric",
            "cosine",
            "--domain",
            "-1,1",
            "--out",
            p(&out)
        ]),
        EXIT_OK
    );
    let svg = fs::read_to_string(out.join("choropleth-cosine.svg")).unwrap();
    assert!(!out.join("choropleth-euclidean.svg").exists());
    let c0 = svg.lines().find(|l| l.contains(r#"id="r00""#)).unwrap();
    assert!(c0.contains(r##"fill="#8c1c13""##), "{c0}");

    let custom = dir.path().join("custom");
    assert_eq!(
        sresnet(&[
            "render",
            "--report",
            p(&report),
            "--map",
            &map,
            "--low",
            "#000000",
            "--high",
            "#ffffff",
            "--out",
            p(&custom)
        ]),
        EXIT_OK
    );
    let svg = fs::read_to_string(custom.join("choropleth-euclidean.svg")).unwrap();
    let c1 = svg.lines().find(|l| l.contains(r#"id="r01""#)).unwrap();
    assert!(c1.contains(r##"fill="#ffffff""##), "{c1}");

    let bad = dir.path().join("bad");
    assert_eq!(
        sresnet(&[
            "render",
            "--report",
            p(&report),
            "--map",
            &map,
            "--low",
            "red",
            "--out",
            p(&bad)
        ]),
        EXIT_CONFIG
    );
    assert_eq!(
        sresnet(&[
            "render",
            "--report",
            p(&report),
            "--map",
            &map,
            "--domain",
            "1,1",
            "--out",
            p(&bad)
        ]),
        EXIT_CONFIG
    );
    assert_eq!(
        sresnet(&[
            "render",
            "--report",
            p(&report),
            "--map",
            &map,
            "--metric",
            "hamming",
            "--out",
            p(&bad)
        ]),
        EXIT_CONFIG
    );
    assert_eq!(
        sresnet(&["render", "--map", &map, "--out", p(&bad)]),
        EXIT_CONFIG
    );

    let other = dir.path().join("other.json");
    fs::write(
        &other,
        r#"{"regions": [{"id": "z", "name": "Z", "class": "zz", "polygon": [[0,0],[1,0],[0,1]]}]}"#,
    )
    .unwrap();
    assert_eq!(
        sresnet(&[
            "render",
            "--report",
            p(&report),
            "--map",
            p(&other),
            "--out",
            p(&bad)
        ]),
        EXIT_DATA
    );
}
