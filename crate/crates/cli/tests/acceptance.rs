//! Every subcommand must produce byte-identical stdout and output files
//! across repeated runs and across thread counts. One PASS/FAIL line each.

mod common;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use common::{camsep, write_inputs};
use tempfile::TempDir;

/// Subcommand name, arguments, files it writes.
const CASES: &[(&str, &[&str], &[&str])] = &[
    (
        "gen-synth",
        &["gen-synth", "--preset", "pan_with_object", "--seed", "2", "--out", "synth"],
        &["synth/attn.mtn", "synth/attn_clean.mtn", "synth/frames.mtn", "synth/mask.mtn", "synth/object_masks.mtn"],
    ),
    (
        "poisson-complete",
        &["poisson-complete", "--attn", "a0.mtn", "--mask", "mask.mtn", "--out", "c.mtn"],
        &["c.mtn"],
    ),
    (
        "extract-few-shot",
        &["extract-few-shot", "--attn", "a0.mtn", "--attn", "a1.mtn", "--attn", "a2.mtn", "--eps", "32", "--out", "f.mtn"],
        &["f.mtn"],
    ),
    (
        "combine",
        &["combine", "--attn", "a0.mtn", "--attn", "a1.mtn", "--weight", "0.3", "--weight", "0.7", "--out", "w.mtn"],
        &["w.mtn"],
    ),
    (
        "compose-regions",
        &["compose-regions", "--pair", "left.mtn:a0.mtn", "--pair", "right.mtn:a1.mtn", "--out", "r.mtn"],
        &["r.mtn"],
    ),
    (
        "apply",
        &["apply", "--attn", "a1.mtn", "--values", "values.mtn", "--preserve-mask", "mask.mtn", "--target-values", "target.mtn", "--out", "v.mtn"],
        &["v.mtn"],
    ),
    ("metrics", &["metrics", "--a", "clean.mtn", "--b", "a0.mtn", "--mask", "mask.mtn"], &[]),
    ("inspect", &["inspect", "--attn", "a2.mtn", "--slice", "1,2", "--out", "s.png"], &["s.png"]),
];

/// stdout followed by the written files.
fn run(dir: &Path, threads: &str, args: &[&str], files: &[&str]) -> Result<Vec<Vec<u8>>, String> {
    let mut full = vec!["--threads", threads, "--log-level", "warn"];
    full.extend_from_slice(args);
    let out = camsep(dir, &full);
    if !out.status.success() {
        return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr).trim()));
    }
    let mut captured = vec![out.stdout];
    for f in files {
        captured.push(fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}"))?);
    }
    Ok(captured)
}

fn check(args: &[&str], files: &[&str]) -> Result<String, String> {
    let runs = ["1", "1", "8"]
        .iter()
        .map(|threads| {
            let dir = TempDir::new().unwrap();
            write_inputs(dir.path());
            run(dir.path(), threads, args, files)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let bytes: usize = runs[0].iter().map(Vec::len).sum();
    if runs[0] != runs[1] {
        return Err("two runs at 1 thread differ".into());
    }
    if runs[0] != runs[2] {
        return Err("1 thread and 8 threads differ".into());
    }
    Ok(format!("{bytes} bytes identical over 2 runs and 1 vs 8 threads"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    for (name, args, files) in CASES {
        match check(args, files) {
            Ok(detail) => println!("PASS deterministic {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL deterministic {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
