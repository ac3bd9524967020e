mod common;

use std::fs;

use camsep_core::tensor::read_tensor;
use common::{camsep, stdout_json, write_inputs};
use tempfile::TempDir;

fn inputs() -> TempDir {
    let dir = TempDir::new().unwrap();
    write_inputs(dir.path());
    dir
}

#[test]
fn help_and_version_exit_zero() {
    let dir = TempDir::new().unwrap();
    assert_eq!(camsep(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(camsep(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let dir = inputs();
    let p = dir.path();
    assert_eq!(camsep(p, &["metrics", "--bogus"]).status.code(), Some(1));
    assert_eq!(camsep(p, &["frobnicate"]).status.code(), Some(1));
    // missing required input
    assert_eq!(camsep(p, &["poisson-complete", "--attn", "a0.mtn"]).status.code(), Some(1));
    // weights do not match inputs
    let out = camsep(p, &["combine", "--attn", "a0.mtn", "--weight", "0.5", "--weight", "0.5", "--out", "x.mtn"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(camsep(p, &["--threads", "0", "metrics", "--a", "a0.mtn", "--b", "a0.mtn"]).status.code(), Some(1));
    let out = camsep(p, &["inspect", "--attn", "a0.mtn", "--pixel", "1,1", "--slice", "0,0", "--out", "x.png"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = inputs();
    let p = dir.path();
    assert_eq!(camsep(p, &["metrics", "--a", "missing.mtn", "--b", "a0.mtn"]).status.code(), Some(2));
    fs::write(p.join("junk.mtn"), b"not a tensor").unwrap();
    assert_eq!(camsep(p, &["metrics", "--a", "junk.mtn", "--b", "a0.mtn"]).status.code(), Some(2));
    // a mask where attention is expected
    assert_eq!(camsep(p, &["metrics", "--a", "mask.mtn", "--b", "a0.mtn"]).status.code(), Some(2));
    // regions that do not cover the canvas
    let out = camsep(p, &["compose-regions", "--pair", "left.mtn:a0.mtn", "--out", "r.mtn"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_convergence_exits_three_and_still_writes() {
    let dir = inputs();
    let p = dir.path();
    let out = camsep(
        p,
        &["poisson-complete", "--attn", "a0.mtn", "--mask", "mask.mtn", "--out", "c.mtn", "--max-iters", "1", "--tol", "1e-12"],
    );
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["converged"], false);
    read_tensor(p.join("c.mtn")).unwrap().into_attention().unwrap();
}

#[test]
fn empty_mask_completion_is_byte_identical() {
    let dir = inputs();
    let p = dir.path();
    let report = stdout_json(&camsep(p, &["poisson-complete", "--attn", "a0.mtn", "--mask", "empty.mtn", "--out", "c.mtn"]));
    assert_eq!(report["iterations"], 0);
    assert_eq!(report["converged"], true);
    assert_eq!(fs::read(p.join("a0.mtn")).unwrap(), fs::read(p.join("c.mtn")).unwrap());
}

#[test]
fn completion_moves_toward_the_clean_map() {
    let dir = inputs();
    let p = dir.path();
    stdout_json(&camsep(p, &["poisson-complete", "--attn", "a0.mtn", "--mask", "mask.mtn", "--out", "c.mtn"]));
    let before = stdout_json(&camsep(p, &["metrics", "--a", "clean.mtn", "--b", "a0.mtn", "--mask", "mask.mtn"]));
    let after = stdout_json(&camsep(p, &["metrics", "--a", "clean.mtn", "--b", "c.mtn", "--mask", "mask.mtn"]));
    let l1 = |v: &serde_json::Value| v["mean_row_l1"].as_f64().unwrap();
    assert!(l1(&after) < l1(&before), "{after} vs {before}");
}

#[test]
fn metrics_of_a_map_with_itself_are_zero() {
    let dir = inputs();
    let report = stdout_json(&camsep(dir.path(), &["metrics", "--a", "a1.mtn", "--b", "a1.mtn"]));
    for key in ["mean_abs_diff", "frobenius", "mean_row_l1", "mean_row_kl", "max_pixel_frobenius"] {
        assert_eq!(report[key].as_f64(), Some(0.0), "{key}");
    }
}

#[test]
fn gen_synth_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let first = stdout_json(&camsep(p, &["gen-synth", "--preset", "pan_with_object", "--seed", "5", "--out", "one"]));
    let second = stdout_json(&camsep(p, &["gen-synth", "--preset", "pan_with_object", "--seed", "5", "--out", "two"]));
    assert_eq!(first, second);
    let mut names: Vec<_> = fs::read_dir(p.join("one")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 12);
    for name in names {
        assert_eq!(fs::read(p.join("one").join(&name)).unwrap(), fs::read(p.join("two").join(&name)).unwrap());
    }
    let attn = read_tensor(p.join("one/attn.mtn")).unwrap().into_attention().unwrap();
    assert_eq!(attn.frames(), 16);
    let sidecar: serde_json::Value =
        serde_json::from_slice(&fs::read(p.join("one/attn.mtn.json")).unwrap()).unwrap();
    assert_eq!(sidecar["kind"], "attention");
    assert_eq!(sidecar["seed"], 5);
}

#[test]
fn gen_synth_rejects_unknown_preset() {
    let dir = TempDir::new().unwrap();
    let out = camsep(dir.path(), &["gen-synth", "--preset", "no_such_scene", "--out", "d"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = inputs();
    let p = dir.path();
    fs::write(
        p.join("run.toml"),
        "[solver]\nomega = 1.7\ntolerance = 1e-5\n[io]\nattn = [\"a0.mtn\"]\nmask = \"mask.mtn\"\nout = \"cfg.mtn\"\n",
    )
    .unwrap();
    let cfg = stdout_json(&camsep(p, &["--config", "run.toml", "--print-config", "poisson-complete", "--omega", "1.2"]));
    assert_eq!(cfg["solver"]["omega"], 1.2);
    assert_eq!(cfg["solver"]["tolerance"], 1e-5);
    assert_eq!(cfg["io"]["out"], "cfg.mtn");
    assert!(!p.join("cfg.mtn").exists(), "--print-config must not run the command");

    stdout_json(&camsep(p, &["--config", "run.toml", "poisson-complete"]));
    assert!(p.join("cfg.mtn").exists());

    fs::write(p.join("bad.toml"), "[solver]\nomgea = 1.0\n").unwrap();
    assert_eq!(camsep(p, &["--config", "bad.toml", "--print-config", "metrics"]).status.code(), Some(1));
}

#[test]
fn combine_with_one_unit_weight_reproduces_the_input() {
    let dir = inputs();
    let p = dir.path();
    stdout_json(&camsep(p, &["combine", "--attn", "a2.mtn", "--weight", "1", "--out", "w.mtn"]));
    let report = stdout_json(&camsep(p, &["metrics", "--a", "a2.mtn", "--b", "w.mtn"]));
    assert!(report["max_pixel_frobenius"].as_f64().unwrap() < 1e-6);
}

#[test]
fn regions_take_each_side_from_its_map() {
    let dir = inputs();
    let p = dir.path();
    stdout_json(&camsep(p, &["compose-regions", "--pair", "left.mtn:a0.mtn", "--pair", "right.mtn:a1.mtn", "--out", "r.mtn"]));
    let left = stdout_json(&camsep(p, &["metrics", "--a", "r.mtn", "--b", "a0.mtn", "--mask", "left.mtn"]));
    let right = stdout_json(&camsep(p, &["metrics", "--a", "r.mtn", "--b", "a1.mtn", "--mask", "right.mtn"]));
    assert_eq!(left["frobenius"].as_f64(), Some(0.0));
    assert_eq!(right["frobenius"].as_f64(), Some(0.0));
}

#[test]
fn apply_keeps_target_values_inside_the_preserve_mask() {
    // the target values are blended in before attention is applied, so an
    // identity map must hand them back unchanged
    let dir = inputs();
    let p = dir.path();
    let report = stdout_json(&camsep(
        p,
        &["apply", "--attn", "identity.mtn", "--values", "values.mtn", "--preserve-mask", "mask.mtn", "--target-values", "target.mtn", "--out", "v.mtn"],
    ));
    assert_eq!(report["mode"], "content_preserving");
    let bytes = fs::read(p.join("v.mtn")).unwrap();
    let (out, _) = camsep_core::Tensor::decode(&bytes, Some(camsep_core::TensorKind::Values)).unwrap();
    let out = out.into_values().unwrap();
    let target = fs::read(p.join("target.mtn")).unwrap();
    let target = camsep_core::Tensor::decode(&target, Some(camsep_core::TensorKind::Values)).unwrap().0.into_values().unwrap();
    let mask = read_tensor(p.join("mask.mtn")).unwrap().into_mask().unwrap();
    assert!(mask.count() > 0);
    let values = fs::read(p.join("values.mtn")).unwrap();
    let values = camsep_core::Tensor::decode(&values, Some(camsep_core::TensorKind::Values)).unwrap().0.into_values().unwrap();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            let expected = if mask.get(x, y) { target.pixel(x, y) } else { values.pixel(x, y) };
            for (a, b) in out.pixel(x, y).iter().zip(expected) {
                assert!((a - b).abs() < 1e-6, "({x}, {y}): {a} vs {b}");
            }
        }
    }
    // half of the pair alone is a usage error
    let out = camsep(p, &["apply", "--attn", "clean.mtn", "--values", "values.mtn", "--preserve-mask", "mask.mtn", "--out", "v.mtn"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn inspect_writes_pngs_of_the_requested_shape() {
    let dir = inputs();
    let p = dir.path();
    let pixel = stdout_json(&camsep(p, &["inspect", "--attn", "a0.mtn", "--pixel", "2,3", "--out", "p.png"]));
    assert_eq!(pixel["image"]["width"], common::FRAMES);
    let slice = stdout_json(&camsep(p, &["inspect", "--attn", "a0.mtn", "--slice", "0,1", "--out", "s.png"]));
    assert_eq!(slice["image"]["width"], common::SIZE);
    assert!(fs::read(p.join("s.png")).unwrap().starts_with(b"\x89PNG"));
    assert_eq!(camsep(p, &["inspect", "--attn", "a0.mtn", "--pixel", "99,0", "--out", "p.png"]).status.code(), Some(1));
}

#[test]
fn few_shot_extraction_writes_valid_attention() {
    let dir = inputs();
    let p = dir.path();
    let report = stdout_json(&camsep(
        p,
        &["extract-few-shot", "--attn", "a0.mtn", "--attn", "a1.mtn", "--attn", "a2.mtn", "--eps", "32", "--out", "f.mtn"],
    ));
    assert!(report.is_object());
    let f = read_tensor(p.join("f.mtn")).unwrap().into_attention().unwrap();
    assert_eq!(f.width(), common::SIZE);
}

#[test]
fn progress_goes_to_stderr_as_json_lines() {
    let dir = inputs();
    let out = camsep(dir.path(), &["poisson-complete", "--attn", "a0.mtn", "--mask", "mask.mtn", "--out", "c.mtn"]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(!stderr.is_empty());
    for line in stderr.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["level"].is_string() && v["msg"].is_string());
    }
}
