use super::texture::{make_texture, Texture};
use super::{ObjectMotion, Scenario};
use crate::error::{Error, Result};
use crate::tensor::{Mask2D, MaskStack, ValueTensor};

/// The background texture a scenario renders from.
pub fn scenario_texture(scenario: &Scenario) -> Result<Texture> {
    make_texture(
        scenario.texture_seed,
        scenario.width,
        scenario.height,
        scenario.channels,
        scenario.texture_cell,
    )
}

fn object_texture(object: &ObjectMotion, channels: usize) -> Result<Texture> {
    let side = (2.0 * object.radius).ceil() as usize + 1;
    make_texture(object.texture_seed, side, side, channels, (side / 2).max(2))
}

/// Renders the clip described by `scenario`, returning the frames and the
/// per-frame object support.
pub fn render_frames(scenario: &Scenario) -> Result<(ValueTensor, MaskStack)> {
    let texture = scenario_texture(scenario)?;
    render_frames_with_texture(scenario, &texture)
}

/// [`render_frames`] with an explicit background texture in place of the
/// seeded one.
pub fn render_frames_with_texture(
    scenario: &Scenario,
    texture: &Texture,
) -> Result<(ValueTensor, MaskStack)> {
    scenario.validate()?;
    let (w, h, t, c) = (
        scenario.width,
        scenario.height,
        scenario.frames,
        scenario.channels,
    );
    if texture.channels() != c {
        return Err(Error::Dimension(format!(
            "texture has {} channels, scenario {c}",
            texture.channels()
        )));
    }
    let object_textures = scenario
        .objects
        .iter()
        .map(|o| object_texture(o, c))
        .collect::<Result<Vec<_>>>()?;

    let mut frames = ValueTensor::zeros(h, w, t, c);
    let mut masks = vec![Mask2D::zeros(h, w); t];
    for y in 0..h {
        for x in 0..w {
            let (xf, yf) = (x as f64, y as f64);
            let block = frames.pixel_mut(x, y);
            for (i, feature) in block.chunks_exact_mut(c).enumerate() {
                let (u, v) = scenario.camera.source_position(i, xf, yf)?;
                texture.sample(u, v, feature);
                for (object, tex) in scenario.objects.iter().zip(&object_textures) {
                    if object.covers(i, xf, yf) {
                        let (cx, cy) = object.trajectory[i];
                        tex.sample(xf - cx + object.radius, yf - cy + object.radius, feature);
                        masks[i].set(x, y, true);
                    }
                }
            }
        }
    }
    Ok((frames, MaskStack::new(masks)?))
}
