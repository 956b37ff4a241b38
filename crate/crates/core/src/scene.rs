//! Brightness sequences fed to the samplers, and a few analytic test scenes.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Ordered `height × width` brightness frames in digital units, one frame per
/// sampling step.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneStream {
    height: usize,
    width: usize,
    frames: Vec<Array2<f64>>,
}

impl SceneStream {
    pub fn new(frames: Vec<Array2<f64>>) -> Result<Self> {
        let (height, width) = frames.first().ok_or(Error::EmptyScene)?.dim();
        Self::from_parts(height, width, frames)
    }

    /// Like [`SceneStream::new`] but allows an empty frame list.
    pub fn from_parts(height: usize, width: usize, frames: Vec<Array2<f64>>) -> Result<Self> {
        for (t, f) in frames.iter().enumerate() {
            if f.dim() != (height, width) {
                return Err(Error::ShapeMismatch {
                    expected: vec![height, width],
                    actual: f.shape().to_vec(),
                });
            }
            if f.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "frame {t}: brightness must be finite and non-negative"
                )));
            }
        }
        Ok(Self {
            height,
            width,
            frames,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Array2<f64>] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Array2<f64>> {
        self.frames
    }
}

/// Analytic scenes used for tests, demos and robustness runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneKind {
    /// All pixels zero.
    Black,
    /// All pixels at `level`.
    Constant { level: f64 },
    /// Static left-to-right ramp from `low` to `high`.
    Gradient { low: f64, high: f64 },
    /// A bright bar through the centre, one full turn every `period` frames.
    RotatingBar {
        period: u32,
        level: f64,
        background: f64,
        half_thickness: f64,
    },
    /// Bright region left of a vertical edge that sweeps right at `speed`
    /// pixels per frame and wraps around.
    MovingEdge { speed: f64, low: f64, high: f64 },
}

impl SceneKind {
    fn levels(&self) -> Vec<f64> {
        match *self {
            SceneKind::Black => vec![],
            SceneKind::Constant { level } => vec![level],
            SceneKind::Gradient { low, high } => vec![low, high],
            SceneKind::RotatingBar {
                level,
                background,
                half_thickness,
                ..
            } => vec![level, background, half_thickness],
            SceneKind::MovingEdge { speed, low, high } => vec![speed, low, high],
        }
    }
}

/// Renders `frames` frames of an analytic scene.
pub fn synth_scene(
    kind: SceneKind,
    height: usize,
    width: usize,
    frames: usize,
) -> Result<SceneStream> {
    if height == 0 || width == 0 || frames == 0 {
        return Err(Error::Config(format!(
            "scene dimensions must be positive, got {height}x{width}x{frames}"
        )));
    }
    if kind.levels().iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Config(format!(
            "scene parameters must be finite and non-negative: {kind:?}"
        )));
    }
    if let SceneKind::RotatingBar { period: 0, .. } = kind {
        return Err(Error::Config("rotating bar period must be positive".into()));
    }

    let out = (0..frames)
        .map(|t| render(kind, height, width, t))
        .collect();
    SceneStream::from_parts(height, width, out)
}

fn render(kind: SceneKind, height: usize, width: usize, t: usize) -> Array2<f64> {
    match kind {
        SceneKind::Black => Array2::zeros((height, width)),
        SceneKind::Constant { level } => Array2::from_elem((height, width), level),
        SceneKind::Gradient { low, high } => Array2::from_shape_fn((height, width), |(_, c)| {
            if width == 1 {
                low
            } else {
                low + (high - low) * c as f64 / (width - 1) as f64
            }
        }),
        SceneKind::RotatingBar {
            period,
            level,
            background,
            half_thickness,
        } => {
            let angle = 2.0 * PI * (t % period as usize) as f64 / f64::from(period);
            let (sin, cos) = angle.sin_cos();
            let (cy, cx) = ((height as f64 - 1.0) / 2.0, (width as f64 - 1.0) / 2.0);
            Array2::from_shape_fn((height, width), |(r, c)| {
                // distance from the line through the centre with direction (cos, sin)
                let d = (c as f64 - cx) * sin - (r as f64 - cy) * cos;
                if d.abs() <= half_thickness {
                    level
                } else {
                    background
                }
            })
        }
        SceneKind::MovingEdge { speed, low, high } => {
            let edge = (t as f64 * speed) % width as f64;
            Array2::from_shape_fn(
                (height, width),
                |(_, c)| {
                    if (c as f64) < edge {
                        high
                    } else {
                        low
                    }
                },
            )
        }
    }
}
