use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flowgate::io::{read_frame, read_mask, write_flo, write_frame};
use flowgate::{FlowDirection, FlowField, Frame};

fn flowgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowgate"))
        .args(args)
        .env_remove("FLOWGATE_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = flowgate(args);
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

/// Relative path → file bytes for every file under `root`.
fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn small_synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--n", "2", "--seed", "7", "--size", "48", "--out", s(dir)];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn synth_is_byte_reproducible_and_jobs_independent() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    small_synth(a.path(), &[]);
    small_synth(b.path(), &[]);
    small_synth(c.path(), &["--jobs", "3"]);
    let ta = tree(a.path());
    assert!(ta.contains_key(Path::new("clip_000/frame_000.png")));
    assert!(ta.contains_key(Path::new("clip_001/meta.json")));
    assert!(ta.contains_key(Path::new("clip_001/occ_002.png")));
    assert_eq!(ta, tree(b.path()));
    assert_eq!(ta, tree(c.path()));
}

#[test]
fn seed_env_overrides_flag() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(&["synth", "--n", "1", "--seed", "3", "--size", "48", "--out", s(a.path())]);
    let out = Command::new(env!("CARGO_BIN_EXE_flowgate"))
        .args(["synth", "--n", "1", "--seed", "99", "--size", "48", "--out", s(b.path())])
        .env("FLOWGATE_SEED", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(tree(a.path()), tree(b.path()));
}

#[test]
fn occlude_zero_flow_gives_white_mask() {
    let d = tempfile::tempdir().unwrap();
    let flo = d.path().join("z.flo");
    write_flo(&flo, &FlowField::zeros(6, 9, FlowDirection::Forward)).unwrap();
    let mask = d.path().join("m.png");
    ok(&["occlude", "--flow", s(&flo), "--out", s(&mask), "--energy", s(&d.path().join("e.png"))]);
    let m = read_mask(&mask).unwrap();
    assert_eq!(m.count_valid(), 54);
    assert!(d.path().join("e.png").exists());
}

#[test]
fn eval_of_identical_frames_is_perfect() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("a.png");
    write_frame(&p, &Frame::from_fn(12, 12, 3, |i, j, c| ((i + 2 * j + c) % 5) as f64 / 4.0).unwrap()).unwrap();
    let text = ok(&["eval", "--pred", s(&p), "--gt", s(&p), "--losses"]);
    let json_end = text.find("\n}").unwrap() + 2;
    let report: serde_json::Value = serde_json::from_str(&text[..json_end]).unwrap();
    assert_eq!(report["steps"][0]["psnr"], 100.0);
    assert!((report["steps"][0]["ssim"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(text.contains("l1_valid=0\n"));
    assert!(text.contains("total_variation="));
}

#[test]
fn exit_codes() {
    assert_eq!(flowgate(&["synth", "--bogus"]).status.code(), Some(1));
    assert_eq!(flowgate(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(flowgate(&[]).status.code(), Some(1));
    assert_eq!(flowgate(&["--help"]).status.code(), Some(0));
    assert_eq!(flowgate(&["warp", "--help"]).status.code(), Some(0));
    let missing = flowgate(&["eval", "--pred", "/nonexistent/a.png", "--gt", "/nonexistent/b.png"]);
    assert_eq!(missing.status.code(), Some(2));
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.json");
    fs::write(&bad, r#"{"thresholds": {"lo": 3.0, "hi": 1.0, "eps": 0.0}}"#).unwrap();
    assert_eq!(flowgate(&["predict", "--clip", ".", "--config", s(&bad)]).status.code(), Some(2));
}

#[test]
fn config_defaults_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let text = ok(&["predict", "--clip", ".", "--print-config"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["predictor", "solver", "losses", "extrapolation", "inpainter", "mask", "thresholds", "border", "feedback"] {
        assert!(v.get(key).is_some(), "{key} missing");
    }
    assert_eq!(v["losses"]["lambda_sty"], 120.0);
    assert_eq!(v["solver"]["lambda_smt"], 0.1);
    let cfg = d.path().join("cfg.json");
    fs::write(&cfg, &text).unwrap();
    assert_eq!(ok(&["predict", "--clip", ".", "--config", s(&cfg), "--print-config"]), text);
}

#[test]
fn frame_tools_chain() {
    let d = tempfile::tempdir().unwrap();
    let path = |n: &str| d.path().join(n);
    small_synth(&path("suite"), &[]);
    let clip = path("suite/clip_000");
    let (f0, f1) = (clip.join("frame_000.png"), clip.join("frame_001.png"));

    let epe = ok(&["flow", "--src", s(&f0), "--dst", s(&f1), "--out", s(&path("est.flo")), "--gt", s(&clip.join("bwd_000.flo"))]);
    let epe: f64 = epe.trim().strip_prefix("epe=").unwrap().parse().unwrap();
    assert!(epe.is_finite());

    ok(&["warp", "--frame", s(&f0), "--flow", s(&clip.join("bwd_000.flo")), "--out", s(&path("w.png")), "--border", "zero"]);
    ok(&["occlude", "--flow", s(&clip.join("fwd_000.flo")), "--out", s(&path("m.png"))]);
    assert_eq!(read_mask(path("m.png")).unwrap(), read_mask(clip.join("occ_000.png")).unwrap());
    ok(&["inpaint", "--frame", s(&path("w.png")), "--mask", s(&path("m.png")), "--out", s(&path("i.png"))]);
    let inpainted = read_frame(path("i.png")).unwrap();
    assert_eq!(inpainted.dims(), (48, 48));
    ok(&["viz", "--flow", s(&clip.join("fwd_000.flo")), "--out", s(&path("flow.png"))]);
    ok(&["viz", "--frame", s(&f0), "--mask", s(&path("m.png")), "--out", s(&path("ov.png"))]);
    assert_eq!(read_frame(path("ov.png")).unwrap().channels(), 3);
    assert_eq!(flowgate(&["viz", "--out", s(&path("x.png"))]).status.code(), Some(2));
}

#[test]
fn predict_and_ablate_outputs() {
    let d = tempfile::tempdir().unwrap();
    let path = |n: &str| d.path().join(n);
    small_synth(&path("suite"), &[]);
    let clip = path("suite/clip_001");
    for out in ["p1", "p2"] {
        ok(&["predict", "--clip", s(&clip), "--out", s(&path(out))]);
    }
    for name in ["final.png", "warped.png", "mask.png", "energy.png", "flow.flo", "report.json"] {
        assert!(path("p1").join(name).exists(), "{name}");
    }
    assert_eq!(tree(&path("p1")), tree(&path("p2")));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(path("p1/report.json")).unwrap()).unwrap();
    assert_eq!(report["steps"].as_array().unwrap().len(), 1);
    assert!(report["steps"][0]["iou_occluded"].is_number());

    ok(&["predict", "--clip", s(&clip), "--history", "2", "--horizon", "2", "--out", s(&path("multi"))]);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(path("multi/report.json")).unwrap()).unwrap();
    assert_eq!(report["steps"].as_array().unwrap().len(), 2);
    assert!(path("multi/step_001/final.png").exists());

    let csv_a = path("a.csv");
    ok(&["ablate", "--clips", s(&path("suite")), "--predictor", "ground-truth", "--out", s(&csv_a), "--json", s(&path("a.json"))]);
    let text = fs::read_to_string(&csv_a).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
    assert!(text.starts_with("suite,variant,stub,scenes,psnr,ssim,iou_occluded"));
    let generated = ok(&["ablate", "--n", "2", "--seed", "7", "--size", "48", "--predictor", "zero", "--jobs", "2"]);
    let serial = ok(&["ablate", "--n", "2", "--seed", "7", "--size", "48", "--predictor", "zero"]);
    assert_eq!(generated, serial);
}
