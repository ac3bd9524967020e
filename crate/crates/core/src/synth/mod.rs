//! Ground-truth scenes: textures warped by parametric camera motions, with
//! optional moving blobs, and their exact temporal attention.
//!
//! The query/key projections are the identity, so a pixel's attention is
//! `softmax(F F^T / sqrt(c))` where `F` is its `t x c` feature block.

mod attention;
mod render;
mod texture;

pub use attention::{attention_from_frames, pixel_attention};
pub use render::{render_frames, render_frames_with_texture, scenario_texture};
pub use texture::{make_texture, Texture};

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Image-space camera motion. Frame `i` of a rendered scene shows the
/// texture sampled at [`CameraMotion::source_position`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CameraMotion {
    /// Constant translation of `(vx, vy)` pixels per frame.
    Pan { vx: f64, vy: f64 },
    /// Constant per-frame scale about `(cx, cy)`; `rate > 1` zooms in.
    Zoom { rate: f64, cx: f64, cy: f64 },
    /// Per-frame scale factors, one per frame. Entry `i` is the scale
    /// applied when stepping into frame `i`, so entry 0 has no effect.
    VariableZoom { rates: Vec<f64>, cx: f64, cy: f64 },
    /// Members applied one after another to the same frame.
    Composite { members: Vec<CameraMotion> },
}

impl CameraMotion {
    pub fn still() -> Self {
        CameraMotion::Pan { vx: 0.0, vy: 0.0 }
    }

    pub fn validate(&self, frames: usize) -> Result<()> {
        match self {
            CameraMotion::Pan { vx, vy } => {
                if !vx.is_finite() || !vy.is_finite() {
                    return Err(Error::Argument("pan velocity must be finite".into()));
                }
            }
            CameraMotion::Zoom { rate, .. } => {
                if !(*rate > 0.0) || !rate.is_finite() {
                    return Err(Error::Argument(format!("zoom rate must be > 0, got {rate}")));
                }
            }
            CameraMotion::VariableZoom { rates, .. } => {
                if rates.len() != frames {
                    return Err(Error::Argument(format!(
                        "variable zoom has {} rates for {frames} frames",
                        rates.len()
                    )));
                }
                if let Some(r) = rates.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
                    return Err(Error::Argument(format!("zoom rate must be > 0, got {r}")));
                }
            }
            CameraMotion::Composite { members } => {
                if members.is_empty() {
                    return Err(Error::Argument("composite camera motion is empty".into()));
                }
                for m in members {
                    m.validate(frames)?;
                }
            }
        }
        Ok(())
    }

    /// Accumulated zoom of frame `frame` (1 for frame 0).
    fn accumulated_scale(&self, frame: usize) -> f64 {
        match self {
            CameraMotion::Zoom { rate, .. } => rate.powi(frame as i32),
            CameraMotion::VariableZoom { rates, .. } => rates[1..=frame].iter().product(),
            _ => 1.0,
        }
    }

    /// Where on the texture pixel `(x, y)` of frame `frame` looks. Zoom-in
    /// magnifies content, so the sampled offset from the center shrinks by
    /// the accumulated scale.
    pub fn source_position(&self, frame: usize, x: f64, y: f64) -> Result<(f64, f64)> {
        let i = frame as f64;
        match self {
            CameraMotion::Pan { vx, vy } => Ok((x + i * vx, y + i * vy)),
            CameraMotion::Zoom { cx, cy, .. } | CameraMotion::VariableZoom { cx, cy, .. } => {
                let s = self.accumulated_scale(frame);
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::Argument(format!(
                        "degenerate accumulated zoom {s} at frame {frame}"
                    )));
                }
                Ok((cx + (x - cx) / s, cy + (y - cy) / s))
            }
            CameraMotion::Composite { members } => {
                let mut p = (x, y);
                for m in members {
                    p = m.source_position(frame, p.0, p.1)?;
                }
                Ok(p)
            }
        }
    }
}

/// A textured disc following a trajectory, composited over the background
/// by hard replacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectMotion {
    /// Blob center per frame.
    pub trajectory: Vec<(f64, f64)>,
    pub radius: f64,
    pub texture_seed: u64,
}

impl ObjectMotion {
    pub fn covers(&self, frame: usize, x: f64, y: f64) -> bool {
        let (cx, cy) = self.trajectory[frame];
        let (dx, dy) = (x - cx, y - cy);
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

/// Everything needed to render a synthetic clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub channels: usize,
    pub texture_seed: u64,
    /// Coarse-grid cell size of the background texture.
    pub texture_cell: usize,
    pub camera: CameraMotion,
    #[serde(default)]
    pub objects: Vec<ObjectMotion>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Argument("scenario canvas must be non-empty".into()));
        }
        if self.channels < 1 {
            return Err(Error::Argument("scenario needs at least one channel".into()));
        }
        if self.frames < 2 {
            return Err(Error::Argument("scenario needs at least two frames".into()));
        }
        self.camera.validate(self.frames)?;
        for (k, o) in self.objects.iter().enumerate() {
            if o.trajectory.len() != self.frames {
                return Err(Error::Argument(format!(
                    "object {k} trajectory has {} points for {} frames",
                    o.trajectory.len(),
                    self.frames
                )));
            }
            if !(o.radius > 0.0) {
                return Err(Error::Argument(format!("object {k} radius must be > 0")));
            }
        }
        Ok(())
    }

    /// Softmax temperature `1 / sqrt(c)`.
    pub fn softmax_scale(&self) -> f64 {
        1.0 / (self.channels as f64).sqrt()
    }

    /// The same scene with every object removed.
    pub fn without_objects(&self) -> Scenario {
        Scenario {
            objects: Vec::new(),
            ..self.clone()
        }
    }
}

/// Named scenes covering the basic and compound camera motions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    PanLeft,
    PanRight,
    ZoomIn,
    ZoomOut,
    VariableZoom,
    DollyZoom,
    PanWithObject,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::PanLeft,
        Preset::PanRight,
        Preset::ZoomIn,
        Preset::ZoomOut,
        Preset::VariableZoom,
        Preset::DollyZoom,
        Preset::PanWithObject,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PanLeft => "pan_left",
            Preset::PanRight => "pan_right",
            Preset::ZoomIn => "zoom_in",
            Preset::ZoomOut => "zoom_out",
            Preset::VariableZoom => "variable_zoom",
            Preset::DollyZoom => "dolly_zoom",
            Preset::PanWithObject => "pan_with_object",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown preset {s:?}")))
    }
}

pub const PRESET_SIZE: usize = 64;
pub const PRESET_FRAMES: usize = 16;
pub const PRESET_CHANNELS: usize = 4;
pub const PRESET_TEXTURE_CELL: usize = 16;
pub const PRESET_PAN_SPEED: f64 = 1.0;
pub const PRESET_ZOOM_RATE: f64 = 1.03;
pub const PRESET_FAST_ZOOM: f64 = 1.06;
pub const PRESET_SLOW_ZOOM: f64 = 1.01;
pub const PRESET_OBJECT_RADIUS: f64 = 8.0;

/// Object texture seeds are decorrelated from the background seed.
const OBJECT_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn make_scenario_preset(name: &str, seed: u64) -> Result<Scenario> {
    Ok(preset_scenario(name.parse()?, seed))
}

pub fn preset_scenario(preset: Preset, seed: u64) -> Scenario {
    let n = PRESET_SIZE;
    let t = PRESET_FRAMES;
    let center = ((n - 1) as f64 / 2.0, (n - 1) as f64 / 2.0);
    let zoom = |rate: f64| CameraMotion::Zoom {
        rate,
        cx: center.0,
        cy: center.1,
    };
    let (camera, objects) = match preset {
        Preset::PanLeft => (
            CameraMotion::Pan {
                vx: -PRESET_PAN_SPEED,
                vy: 0.0,
            },
            vec![],
        ),
        Preset::PanRight => (
            CameraMotion::Pan {
                vx: PRESET_PAN_SPEED,
                vy: 0.0,
            },
            vec![],
        ),
        Preset::ZoomIn => (zoom(PRESET_ZOOM_RATE), vec![]),
        Preset::ZoomOut => (zoom(1.0 / PRESET_ZOOM_RATE), vec![]),
        Preset::VariableZoom => {
            // frames are counted from 1 here: 1..=8 fast, 9..=16 slow
            let rates = (1..=t)
                .map(|f| if f <= t / 2 { PRESET_FAST_ZOOM } else { PRESET_SLOW_ZOOM })
                .collect();
            (
                CameraMotion::VariableZoom {
                    rates,
                    cx: center.0,
                    cy: center.1,
                },
                vec![],
            )
        }
        Preset::DollyZoom => (
            zoom(PRESET_ZOOM_RATE),
            vec![ObjectMotion {
                trajectory: vec![center; t],
                radius: PRESET_OBJECT_RADIUS,
                texture_seed: seed ^ OBJECT_SEED_SALT,
            }],
        ),
        Preset::PanWithObject => {
            let start = center.0 + (t / 2) as f64 - 1.0;
            (
                CameraMotion::Pan {
                    vx: PRESET_PAN_SPEED,
                    vy: 0.0,
                },
                vec![ObjectMotion {
                    trajectory: (0..t).map(|i| (start - i as f64, center.1)).collect(),
                    radius: PRESET_OBJECT_RADIUS,
                    texture_seed: seed ^ OBJECT_SEED_SALT,
                }],
            )
        }
    };
    Scenario {
        width: n,
        height: n,
        frames: t,
        channels: PRESET_CHANNELS,
        texture_seed: seed,
        texture_cell: PRESET_TEXTURE_CELL,
        camera,
        objects,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_deterministic() {
        for p in Preset::ALL {
            assert_eq!(preset_scenario(p, 7), preset_scenario(p, 7));
            preset_scenario(p, 7).validate().unwrap();
        }
    }

    #[test]
    fn preset_defaults() {
        let s = make_scenario_preset("zoom_in", 1).unwrap();
        assert_eq!((s.width, s.height, s.frames, s.channels), (64, 64, 16, 4));
        assert!(matches!(s.camera, CameraMotion::Zoom { rate, .. } if rate == 1.03));
        let s = make_scenario_preset("pan_with_object", 1).unwrap();
        assert_eq!(s.objects.len(), 1);
        assert!(matches!(s.camera, CameraMotion::Pan { vx, vy } if vx == 1.0 && vy == 0.0));
        let traj = &s.objects[0].trajectory;
        assert_eq!(traj[1].0 - traj[0].0, -1.0);
        let s = make_scenario_preset("dolly_zoom", 1).unwrap();
        assert_eq!(s.objects.len(), 1);
        assert!(s.objects[0].trajectory.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn variable_zoom_is_fast_then_slow() {
        let s = make_scenario_preset("variable_zoom", 0).unwrap();
        let CameraMotion::VariableZoom { rates, .. } = &s.camera else {
            panic!("wrong camera kind");
        };
        assert_eq!(rates.len(), 16);
        assert!(rates[..8].iter().all(|&r| r == 1.06));
        assert!(rates[8..].iter().all(|&r| r == 1.01));
    }

    #[test]
    fn unknown_preset_is_rejected() {
        assert!(make_scenario_preset("orbit", 0).is_err());
    }

    #[test]
    fn invalid_cameras_are_rejected() {
        assert!(CameraMotion::Zoom { rate: 0.0, cx: 0.0, cy: 0.0 }.validate(4).is_err());
        assert!(CameraMotion::VariableZoom { rates: vec![1.0; 3], cx: 0.0, cy: 0.0 }
            .validate(4)
            .is_err());
        assert!(CameraMotion::Composite { members: vec![] }.validate(4).is_err());
        assert!(CameraMotion::VariableZoom { rates: vec![1.0, -1.0], cx: 0.0, cy: 0.0 }
            .source_position(1, 3.0, 3.0)
            .is_err());
    }

    #[test]
    fn composite_applies_members_in_order() {
        let cam = CameraMotion::Composite {
            members: vec![
                CameraMotion::Pan { vx: 2.0, vy: 0.0 },
                CameraMotion::Zoom { rate: 2.0, cx: 0.0, cy: 0.0 },
            ],
        };
        // pan then zoom: (1 + 2, 1) / 2
        assert_eq!(cam.source_position(1, 1.0, 1.0).unwrap(), (1.5, 0.5));
    }

    #[test]
    fn scenario_round_trips_through_json() {
        let s = make_scenario_preset("pan_with_object", 3).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<Scenario>(&text).unwrap(), s);
    }
}
