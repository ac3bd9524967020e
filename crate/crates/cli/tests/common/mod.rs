#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use camsep_core::synth::{attention_from_frames, render_frames, CameraMotion, ObjectMotion, Scenario};
use camsep_core::tensor::{merge_masks, write_tensor};
use camsep_core::{AttentionStack, Mask2D, Tensor};

pub const SIZE: usize = 10;
pub const FRAMES: usize = 8;

pub fn camsep(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_camsep"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn camsep")
}

pub fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "camsep failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn save(dir: &Path, name: &str, tensor: impl Into<Tensor>) {
    write_tensor(&tensor.into(), dir.join(name)).unwrap();
}

/// Small inputs for every subcommand:
/// `a0..a2.mtn` (a panning scene with a different object in each),
/// `clean.mtn`, `identity.mtn`, `mask.mtn` (object of `a0`), `left.mtn`/`right.mtn`
/// (a partition), `empty.mtn`, `values.mtn` and `target.mtn`.
pub fn write_inputs(dir: &Path) {
    let base = Scenario {
        width: SIZE,
        height: SIZE,
        frames: FRAMES,
        channels: 8,
        texture_seed: 3,
        texture_cell: 64,
        camera: CameraMotion::Pan { vx: 1.0, vy: 0.0 },
        objects: Vec::new(),
    };
    let (frames, _) = render_frames(&base).unwrap();
    save(dir, "clean.mtn", attention_from_frames(&frames).unwrap());
    save(dir, "target.mtn", frames);

    for v in 0..3 {
        let start = (2.0 + 2.5 * v as f64, 7.0 - 2.0 * v as f64);
        let object = ObjectMotion {
            trajectory: (0..FRAMES).map(|i| (start.0 + 0.5 * i as f64, start.1)).collect(),
            radius: 1.6,
            texture_seed: 20 + v,
        };
        let scenario = Scenario {
            objects: vec![object],
            ..base.clone()
        };
        let (frames, masks) = render_frames(&scenario).unwrap();
        save(dir, &format!("a{v}.mtn"), attention_from_frames(&frames).unwrap());
        if v == 0 {
            save(dir, "mask.mtn", merge_masks(&masks).unwrap());
            save(dir, "values.mtn", frames);
        }
    }

    let left = Mask2D::from_fn(SIZE, SIZE, |x, _| x < SIZE / 2);
    save(dir, "right.mtn", left.invert());
    save(dir, "left.mtn", left);
    save(dir, "empty.mtn", Mask2D::zeros(SIZE, SIZE));
    save(dir, "identity.mtn", AttentionStack::identity(SIZE, SIZE, FRAMES).unwrap());
}
