use std::fs;
use std::path::{Path, PathBuf};

use camsep_core::combine::{
    apply_attention, content_preserving_transfer, region_compose, weighted_combine, RegionAssignment,
    WeightedMotionSet,
};
use camsep_core::fewshot::extract_common_motion;
use camsep_core::metrics::map_distance;
use camsep_core::poisson::complete_attention;
use camsep_core::synth::{attention_from_frames, make_scenario_preset, render_frames};
use camsep_core::tensor::{merge_masks, read_tensor_with_report, write_sidecar, write_tensor, Sidecar};
use camsep_core::{AttentionStack, Mask2D, Tensor, TensorKind, ValueTensor};
use serde::Serialize;
use serde_json::json;

use crate::config::{require, set, set_list, RunConfig};
use crate::heatmap;
use crate::{CliError, Command};

pub fn dispatch(command: Command, mut cfg: RunConfig, print_config: bool) -> Result<(), CliError> {
    merge_flags(&command, &mut cfg);
    if print_config {
        return emit(&cfg);
    }
    match command {
        Command::GenSynth(_) => gen_synth(&cfg),
        Command::PoissonComplete(_) => poisson_complete(&cfg),
        Command::ExtractFewShot(_) => extract_few_shot(&cfg),
        Command::Combine(_) => combine(&cfg),
        Command::ComposeRegions(_) => compose_regions(&cfg),
        Command::Apply(_) => apply(&cfg),
        Command::Metrics(_) => metrics(&cfg),
        Command::Inspect(args) => inspect(&cfg, args.pixel, args.slice),
    }
}

/// Folds the subcommand's flags into the config; flags win.
fn merge_flags(command: &Command, cfg: &mut RunConfig) {
    let io = &mut cfg.io;
    match command {
        Command::GenSynth(a) => {
            set(&mut cfg.scenario.preset, a.preset.clone().map(Some));
            set(&mut cfg.scenario.seed, a.seed.map(Some));
            set(&mut io.out, a.out.clone().map(Some));
        }
        Command::PoissonComplete(a) => {
            set_list(&mut io.attn, a.attn.iter().cloned().collect());
            set(&mut io.mask, a.mask.clone().map(Some));
            set(&mut io.out, a.out.clone().map(Some));
            set(&mut cfg.solver.omega, a.omega);
            set(&mut cfg.solver.tolerance, a.tol);
            set(&mut cfg.solver.max_iterations, a.max_iters);
        }
        Command::ExtractFewShot(a) => {
            set_list(&mut io.attn, a.attn.clone());
            set(&mut io.out, a.out.clone().map(Some));
            set(&mut cfg.cluster.window, a.k.map(Some));
            set(&mut cfg.cluster.eps, a.eps);
            set(&mut cfg.cluster.min_points, a.min_pts);
            set(&mut cfg.cluster.perplexity, a.perplexity.map(Some));
            set(&mut cfg.cluster.seed, a.seed);
        }
        Command::Combine(a) => {
            set_list(&mut io.attn, a.attn.clone());
            set_list(&mut cfg.combine.weights, a.weight.clone());
            set(&mut cfg.combine.policy, a.policy);
            set(&mut io.out, a.out.clone().map(Some));
        }
        Command::ComposeRegions(a) => {
            set_list(&mut io.pairs, a.pair.clone());
            set(&mut cfg.combine.overlap, a.policy);
            set(&mut io.out, a.out.clone().map(Some));
        }
        Command::Apply(a) => {
            set_list(&mut io.attn, a.attn.iter().cloned().collect());
            set(&mut io.values, a.values.clone().map(Some));
            set(&mut io.preserve_mask, a.preserve_mask.clone().map(Some));
            set(&mut io.target_values, a.target_values.clone().map(Some));
            set(&mut io.out, a.out.clone().map(Some));
        }
        Command::Metrics(a) => {
            if a.a.is_some() || a.b.is_some() {
                let mut pair = io.attn.clone();
                pair.resize(2, PathBuf::new());
                set(&mut pair[0], a.a.clone());
                set(&mut pair[1], a.b.clone());
                io.attn = pair;
            }
            set(&mut io.mask, a.mask.clone().map(Some));
        }
        Command::Inspect(a) => {
            set_list(&mut io.attn, a.attn.iter().cloned().collect());
            set(&mut io.out, a.out.clone().map(Some));
        }
    }
}

fn emit(value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string(value).map_err(|e| CliError::Data(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn load(path: &Path) -> Result<Tensor, CliError> {
    let (tensor, fixed) = read_tensor_with_report(path)?;
    if fixed > 0 {
        log::warn!("{}: renormalized {fixed} rows on load", path.display());
    }
    Ok(tensor)
}

fn load_attention(path: &Path) -> Result<AttentionStack, CliError> {
    Ok(load(path)?.into_attention()?)
}

fn load_values(path: &Path) -> Result<ValueTensor, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    // a [H, W, t, c] file with c == t would be taken for attention
    let (tensor, _) = Tensor::decode(&bytes, Some(TensorKind::Values))?;
    Ok(tensor.into_values()?)
}

/// A mask file, or a per-frame mask stack merged into one mask.
fn load_mask(path: &Path) -> Result<Mask2D, CliError> {
    match load(path)? {
        Tensor::Mask(m) => Ok(m),
        Tensor::MaskStack(s) => Ok(merge_masks(&s)?),
        other => Err(CliError::Data(format!(
            "{}: expected a mask, found {:?}",
            path.display(),
            other.kind()
        ))),
    }
}

fn save(tensor: Tensor, path: &Path, seed: Option<u64>, scenario: Option<serde_json::Value>) -> Result<(), CliError> {
    let sidecar = Sidecar {
        kind: Some(tensor.kind()),
        fps: None,
        seed,
        scenario,
    };
    write_tensor(&tensor, path)?;
    write_sidecar(path, &sidecar)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn single_attn(cfg: &RunConfig) -> Result<&Path, CliError> {
    match cfg.io.attn.as_slice() {
        [one] => Ok(one),
        [] => Err(CliError::Usage("missing attention input (--attn or [io] attn)".into())),
        many => Err(CliError::Usage(format!("expected one attention input, got {}", many.len()))),
    }
}

fn gen_synth(cfg: &RunConfig) -> Result<(), CliError> {
    let preset = require(&cfg.scenario.preset, "--preset")?;
    let seed = cfg.scenario.seed.unwrap_or(0);
    let dir = require(&cfg.io.out, "--out")?;
    let scenario = make_scenario_preset(preset, seed)?;
    let described = serde_json::to_value(&scenario).map_err(|e| CliError::Data(e.to_string()))?;
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;

    log::info!("rendering {preset} with seed {seed}");
    let (frames, object_masks) = render_frames(&scenario)?;
    let (clean_frames, _) = render_frames(&scenario.without_objects())?;
    let mask = merge_masks(&object_masks)?;
    let attn = attention_from_frames(&frames)?;
    let attn_clean = attention_from_frames(&clean_frames)?;

    let outputs: [(&str, Tensor); 6] = [
        ("frames.mtn", frames.into()),
        ("frames_clean.mtn", clean_frames.into()),
        ("object_masks.mtn", object_masks.into()),
        ("mask.mtn", mask.clone().into()),
        ("attn.mtn", attn.into()),
        ("attn_clean.mtn", attn_clean.into()),
    ];
    let mut files = Vec::new();
    for (name, tensor) in outputs {
        let path = dir.join(name);
        save(tensor, &path, Some(seed), Some(described.clone()))?;
        files.push(name);
    }
    emit(&json!({
        "preset": preset,
        "seed": seed,
        "files": files,
        "object_pixels": mask.count(),
        "object_coverage": mask.count() as f64 / (mask.width() * mask.height()) as f64,
    }))
}

fn poisson_complete(cfg: &RunConfig) -> Result<(), CliError> {
    let attn = load_attention(single_attn(cfg)?)?;
    let mask = load_mask(require(&cfg.io.mask, "--mask")?)?;
    let out = require(&cfg.io.out, "--out")?;
    let (completed, report) = complete_attention(&attn, &mask, &cfg.solver)?;
    log::info!(
        "solved {} channels over {} pixels in {} sweeps",
        report.channels_solved,
        mask.count(),
        report.iterations
    );
    save(completed.into(), out, None, None)?;
    emit(&report)?;
    if report.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged)
    }
}

fn extract_few_shot(cfg: &RunConfig) -> Result<(), CliError> {
    let stacks = cfg
        .io
        .attn
        .iter()
        .map(|p| load_attention(p))
        .collect::<Result<Vec<_>, _>>()?;
    let out = require(&cfg.io.out, "--out")?;
    log::info!("extracting common motion from {} videos", stacks.len());
    let (common, report) = extract_common_motion(&stacks, &cfg.cluster)?;
    if report.fallback_pixels > 0 {
        log::warn!("{} pixels fell back to the plain mean", report.fallback_pixels);
    }
    save(common.into(), out, Some(cfg.cluster.seed), None)?;
    emit(&report)
}

fn combine(cfg: &RunConfig) -> Result<(), CliError> {
    let (paths, weights) = (&cfg.io.attn, &cfg.combine.weights);
    if paths.len() != weights.len() {
        return Err(CliError::Usage(format!(
            "{} attention inputs but {} weights",
            paths.len(),
            weights.len()
        )));
    }
    let out = require(&cfg.io.out, "--out")?;
    let members = paths
        .iter()
        .zip(weights)
        .map(|(p, &w)| Ok((load_attention(p)?, w)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let combined = weighted_combine(&WeightedMotionSet {
        members,
        policy: cfg.combine.policy,
    })?;
    save(combined.into(), out, None, None)?;
    emit(&json!({ "members": paths.len(), "weights": weights, "policy": cfg.combine.policy }))
}

fn compose_regions(cfg: &RunConfig) -> Result<(), CliError> {
    let out = require(&cfg.io.out, "--out")?;
    let mut members = Vec::new();
    for pair in &cfg.io.pairs {
        let (mask, attn) = pair
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("pair {pair:?} is not <mask>:<attention>")))?;
        members.push((load_mask(Path::new(mask))?, load_attention(Path::new(attn))?));
    }
    let composed = region_compose(&RegionAssignment {
        members,
        policy: cfg.combine.overlap,
    })?;
    save(composed.into(), out, None, None)?;
    emit(&json!({ "regions": cfg.io.pairs.len(), "policy": cfg.combine.overlap }))
}

fn apply(cfg: &RunConfig) -> Result<(), CliError> {
    let attn = load_attention(single_attn(cfg)?)?;
    let values = load_values(require(&cfg.io.values, "--values")?)?;
    let out = require(&cfg.io.out, "--out")?;
    let (result, mode) = match (&cfg.io.preserve_mask, &cfg.io.target_values) {
        (Some(mask), Some(target)) => {
            let mask = load_mask(mask)?;
            let target = load_values(target)?;
            (content_preserving_transfer(&attn, &target, &values, &mask)?, "content_preserving")
        }
        (None, None) => (apply_attention(&attn, &values)?, "apply"),
        _ => {
            return Err(CliError::Usage(
                "preserve mask and target values must be given together".into(),
            ))
        }
    };
    let [height, width, frames, channels] = result.dims();
    save(result.into(), out, None, None)?;
    emit(&json!({
        "mode": mode,
        "height": height,
        "width": width,
        "frames": frames,
        "channels": channels,
    }))
}

fn metrics(cfg: &RunConfig) -> Result<(), CliError> {
    let [a, b] = cfg.io.attn.as_slice() else {
        return Err(CliError::Usage("metrics needs --a and --b".into()));
    };
    if a.as_os_str().is_empty() || b.as_os_str().is_empty() {
        return Err(CliError::Usage("metrics needs --a and --b".into()));
    }
    let (a, b) = (load_attention(a)?, load_attention(b)?);
    let mask = cfg.io.mask.as_deref().map(load_mask).transpose()?;
    emit(&map_distance(&a, &b, mask.as_ref())?)
}

fn inspect(cfg: &RunConfig, pixel: Option<(usize, usize)>, slice: Option<(usize, usize)>) -> Result<(), CliError> {
    let attn = load_attention(single_attn(cfg)?)?;
    let out = require(&cfg.io.out, "--out")?;
    let ((w, h, values), view) = match (pixel, slice) {
        (Some((x, y)), None) => {
            if x >= attn.width() || y >= attn.height() {
                return Err(CliError::Usage(format!(
                    "pixel ({x}, {y}) outside {}x{} map",
                    attn.width(),
                    attn.height()
                )));
            }
            (heatmap::pixel_matrix(&attn, x, y), json!({ "pixel": [x, y] }))
        }
        (None, Some((i, j))) => {
            if i >= attn.frames() || j >= attn.frames() {
                return Err(CliError::Usage(format!("entry ({i}, {j}) outside t = {}", attn.frames())));
            }
            (heatmap::entry_slice(&attn, i, j), json!({ "slice": [i, j] }))
        }
        _ => return Err(CliError::Usage("give exactly one of --pixel or --slice".into())),
    };
    let info = heatmap::write_png(out, w, h, &values)?;
    emit(&json!({ "view": view, "image": info }))
}
