//! Spike volumes back to brightness images.
//!
//! Fovea-like volumes use interval reconstruction (TFI): a pixel reads
//! `φ / Δt` for its most recent inter-spike interval. Receptive-field volumes
//! keep one running coefficient per accumulator, refreshed the same way on
//! every spike (signed), and synthesise a frame by summing every coefficient
//! times its placed kernel.

use ndarray::{Array2, Array3, ArrayView3, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter_bank::{FilterBank, KernelPlacement, TEMPLATE_UNIT};
use crate::sampler::{Model, SpikeVolume};
use crate::scene::SceneStream;
use crate::sum::pairwise_sum;

const MEAN_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrightnessAdjust {
    None,
    /// Per-frame gain so the frame mean equals the reference mean.
    MatchMean,
    /// Per-frame affine map matching reference mean and standard deviation.
    MatchMeanStd,
}

impl std::str::FromStr for BrightnessAdjust {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "mean" | "match_mean" => Ok(Self::MatchMean),
            "mean_std" | "match_mean_std" => Ok(Self::MatchMeanStd),
            _ => Err(Error::Config(format!(
                "unknown brightness adjustment `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionConfig {
    pub brightness_adjust: BrightnessAdjust,
    /// Clamp the final frames to `[0, 255]`.
    pub clamp: bool,
    /// Template unit used to rebuild receptive-field banks from a scale list.
    pub template_unit: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            brightness_adjust: BrightnessAdjust::MatchMean,
            clamp: true,
            template_unit: TEMPLATE_UNIT,
        }
    }
}

impl ReconstructionConfig {
    pub fn raw() -> Self {
        Self {
            brightness_adjust: BrightnessAdjust::None,
            clamp: false,
            ..Self::default()
        }
    }
}

/// Last two spike times per pixel, for interval reconstruction.
#[derive(Debug, Clone)]
pub struct TfiState {
    threshold: f64,
    last: Array2<u32>,
    previous: Array2<u32>,
    t: u32,
}

impl TfiState {
    pub fn new(threshold: f64, height: usize, width: usize) -> Self {
        Self {
            threshold,
            last: Array2::zeros((height, width)),
            previous: Array2::zeros((height, width)),
            t: 0,
        }
    }

    /// Records the spike plane of step `t`.
    pub fn update(&mut self, plane: ndarray::ArrayView2<'_, i8>, t: u32) -> Result<()> {
        if t <= self.t {
            return Err(Error::NonIncreasingTime {
                previous: self.t,
                got: t,
            });
        }
        ndarray::Zip::from(&mut self.last)
            .and(&mut self.previous)
            .and(plane)
            .for_each(|last, prev, &s| {
                if s != 0 {
                    *prev = *last;
                    *last = t;
                }
            });
        self.t = t;
        Ok(())
    }

    /// `φ / (t_k − t_{k−1})`, with `t_0 = 0`; zero for silent pixels.
    pub fn frame(&self) -> Array2<f64> {
        let phi = self.threshold;
        ndarray::Zip::from(&self.last)
            .and(&self.previous)
            .map_collect(|&last, &prev| {
                if last == 0 {
                    0.0
                } else {
                    phi / f64::from(last - prev)
                }
            })
    }
}

/// Interval reconstruction of an FSM volume at step `t` (1-based).
pub fn tfi_frame(volume: &SpikeVolume, t: usize) -> Result<Array2<f64>> {
    if volume.model() != Model::Fsm {
        return Err(Error::ModelMismatch(format!(
            "interval reconstruction needs an FSM volume, got {}",
            volume.model()
        )));
    }
    if t == 0 || t > volume.len() {
        return Err(Error::Domain(format!(
            "step {t} outside 1..={}",
            volume.len()
        )));
    }
    let mut state = TfiState::new(volume.thresholds()[0], volume.height(), volume.width());
    for step in 1..=t {
        state.update(volume.planes(step).index_axis(Axis(0), 0), step as u32)?;
    }
    Ok(state.frame())
}

/// Running transform-domain coefficients, one per accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientGrid {
    k: Array3<f64>,
    last_fire: Array3<u32>,
    t: u32,
}

impl CoefficientGrid {
    pub fn new(scales: usize, height: usize, width: usize) -> Self {
        Self {
            k: Array3::zeros((scales, height, width)),
            last_fire: Array3::zeros((scales, height, width)),
            t: 0,
        }
    }

    pub fn from_coefficients(k: Array3<f64>) -> Self {
        let dim = k.dim();
        Self {
            k,
            last_fire: Array3::zeros(dim),
            t: 0,
        }
    }

    pub fn coefficients(&self) -> &Array3<f64> {
        &self.k
    }

    pub fn last_fire(&self) -> &Array3<u32> {
        &self.last_fire
    }

    pub fn time(&self) -> u32 {
        self.t
    }

    /// Applies the spike planes of step `t`: a `±1` spike sets the coefficient
    /// to `±φ_σ / (t − t_pre)`; silent accumulators keep their value.
    pub fn update(&mut self, planes: ArrayView3<'_, i8>, thresholds: &[f64], t: u32) -> Result<()> {
        if planes.dim() != self.k.dim() || thresholds.len() != self.k.dim().0 {
            return Err(Error::ShapeMismatch {
                expected: self.k.shape().to_vec(),
                actual: planes.shape().to_vec(),
            });
        }
        if t <= self.t {
            return Err(Error::NonIncreasingTime {
                previous: self.t,
                got: t,
            });
        }
        for (s, &phi) in thresholds.iter().enumerate() {
            ndarray::Zip::from(self.k.index_axis_mut(Axis(0), s))
                .and(self.last_fire.index_axis_mut(Axis(0), s))
                .and(planes.index_axis(Axis(0), s))
                .for_each(|k, last, &spike| {
                    if spike != 0 {
                        *k = f64::from(spike) * phi / f64::from(t - *last);
                        *last = t;
                    }
                });
        }
        self.t = t;
        Ok(())
    }
}

/// Sums every coefficient times its placed kernel.
pub fn synthesize_frame(grid: &CoefficientGrid, bank: &FilterBank) -> Result<Array2<f64>> {
    let (_, h, w) = grid.k.dim();
    synthesize_with(grid, &bank.place(h, w))
}

fn synthesize_with(grid: &CoefficientGrid, placements: &[KernelPlacement]) -> Result<Array2<f64>> {
    let (p, h, w) = grid.k.dim();
    if placements.len() != p || placements.iter().any(|pl| pl.shape() != (h, w)) {
        return Err(Error::ShapeMismatch {
            expected: vec![p, h, w],
            actual: vec![placements.len()],
        });
    }
    let k = grid.k.as_slice().expect("standard layout");
    let mut out = Array2::<f64>::zeros((h, w));
    out.as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(row, out_row)| {
            for (col, px) in out_row.iter_mut().enumerate() {
                let mut sum = 0.0;
                for (s, placement) in placements.iter().enumerate() {
                    let plane = &k[s * h * w..(s + 1) * h * w];
                    let l = placement.half_width() as isize;
                    let side = placement.side();
                    // centre = pixel − offset
                    for di in 0..side {
                        let cr = row as isize - (di as isize - l);
                        if cr < 0 || cr as usize >= h {
                            continue;
                        }
                        for dj in 0..side {
                            let cc = col as isize - (dj as isize - l);
                            if cc < 0 || cc as usize >= w {
                                continue;
                            }
                            let (cr, cc) = (cr as usize, cc as usize);
                            let coeff = plane[cr * w + cc];
                            if coeff != 0.0 {
                                sum += coeff * placement.weights_at(cr, cc)[di * side + dj];
                            }
                        }
                    }
                }
                *px = sum;
            }
        });
    Ok(out)
}

/// Reconstructs every step of a volume, optionally matching the brightness of
/// a reference scene frame by frame.
pub fn reconstruct_sequence(
    volume: &SpikeVolume,
    config: &ReconstructionConfig,
    reference: Option<&SceneStream>,
) -> Result<Vec<Array2<f64>>> {
    let (h, w) = (volume.height(), volume.width());
    if config.brightness_adjust != BrightnessAdjust::None {
        let reference = reference.ok_or(Error::MissingReference)?;
        if reference.len() < volume.len() || (reference.height(), reference.width()) != (h, w) {
            return Err(Error::ShapeMismatch {
                expected: vec![volume.len(), h, w],
                actual: vec![reference.len(), reference.height(), reference.width()],
            });
        }
    }

    let mut frames = Vec::with_capacity(volume.len());
    match volume.model() {
        Model::Fsm => {
            let mut state = TfiState::new(volume.thresholds()[0], h, w);
            for t in 1..=volume.len() {
                state.update(volume.planes(t).index_axis(Axis(0), 0), t as u32)?;
                frames.push(state.frame());
            }
        }
        model => {
            let bank = model.bank_for_scales(volume.scales(), config.template_unit)?;
            let placements = bank.place(h, w);
            let mut grid = CoefficientGrid::new(volume.n_scales(), h, w);
            for t in 1..=volume.len() {
                grid.update(volume.planes(t), volume.thresholds(), t as u32)?;
                frames.push(synthesize_with(&grid, &placements)?);
            }
        }
    }

    if let (Some(reference), adjust) = (reference, config.brightness_adjust) {
        for (frame, truth) in frames.iter_mut().zip(reference.frames()) {
            adjust_brightness(frame, truth, adjust);
        }
    }
    if config.clamp {
        for frame in &mut frames {
            frame.mapv_inplace(|v| v.clamp(0.0, 255.0));
        }
    }
    Ok(frames)
}

fn mean_std(frame: &Array2<f64>) -> (f64, f64) {
    let values: Vec<f64> = frame.iter().copied().collect();
    let n = values.len() as f64;
    let mean = pairwise_sum(&values) / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    (mean, (pairwise_sum(&sq) / n).sqrt())
}

/// Rescales `frame` in place towards the statistics of `reference`.
pub fn adjust_brightness(frame: &mut Array2<f64>, reference: &Array2<f64>, mode: BrightnessAdjust) {
    match mode {
        BrightnessAdjust::None => {}
        BrightnessAdjust::MatchMean => {
            let (m, _) = mean_std(frame);
            let (m_ref, _) = mean_std(reference);
            let gain = if m <= MEAN_EPSILON { 1.0 } else { m_ref / m };
            frame.mapv_inplace(|v| v * gain);
        }
        BrightnessAdjust::MatchMeanStd => {
            let (m, s) = mean_std(frame);
            let (m_ref, s_ref) = mean_std(reference);
            let gain = if s <= MEAN_EPSILON { 1.0 } else { s_ref / s };
            frame.mapv_inplace(|v| (v - m) * gain + m_ref);
        }
    }
}
