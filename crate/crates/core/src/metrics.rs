//! Image quality (MSE, PSNR, SSIM), noise-robustness indices, and the
//! threshold/latency tradeoff of integrate-and-fire sampling.

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampler::{Model, SpikeVolume};
use crate::sum::{pairwise_sum, pairwise_sum_by};

pub const PEAK: f64 = 255.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn check_shape(a: &ArrayView2<'_, f64>, b: &ArrayView2<'_, f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            expected: a.shape().to_vec(),
            actual: b.shape().to_vec(),
        });
    }
    Ok(())
}

pub fn mse(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<f64> {
    check_shape(&a, &b)?;
    let sq: Vec<f64> = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).powi(2))
        .collect();
    Ok(pairwise_sum(&sq) / sq.len().max(1) as f64)
}

/// `10·log10(255² / mse)`; `+∞` for identical images.
pub fn psnr(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut taps = [0.0; SSIM_WINDOW];
    for (i, t) in taps.iter_mut().enumerate() {
        let x = i as f64 - half;
        *t = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = taps.iter().sum();
    taps.map(|t| t / total)
}

/// Separable valid-mode filtering with the SSIM window.
fn filter_valid(img: &Array2<f64>, taps: &[f64; SSIM_WINDOW]) -> Array2<f64> {
    let (h, w) = img.dim();
    let (oh, ow) = (h + 1 - SSIM_WINDOW, w + 1 - SSIM_WINDOW);
    let rows = Array2::from_shape_fn((h, ow), |(r, c)| {
        taps.iter()
            .enumerate()
            .map(|(k, t)| t * img[[r, c + k]])
            .sum::<f64>()
    });
    Array2::from_shape_fn((oh, ow), |(r, c)| {
        taps.iter()
            .enumerate()
            .map(|(k, t)| t * rows[[r + k, c]])
            .sum::<f64>()
    })
}

/// Mean single-scale SSIM over all fully-covered 11×11 Gaussian windows
/// (σ = 1.5, K1 = 0.01, K2 = 0.03, L = 255).
pub fn ssim(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<f64> {
    check_shape(&a, &b)?;
    let (h, w) = a.dim();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            height: h,
            width: w,
            min: SSIM_WINDOW,
        });
    }
    let taps = gaussian_taps();
    let (a, b) = (a.to_owned(), b.to_owned());
    let mu_a = filter_valid(&a, &taps);
    let mu_b = filter_valid(&b, &taps);
    let aa = filter_valid(&(&a * &a), &taps);
    let bb = filter_valid(&(&b * &b), &taps);
    let ab = filter_valid(&(&a * &b), &taps);

    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let map: Vec<f64> = ndarray::Zip::from(&mu_a)
        .and(&mu_b)
        .and(&aa)
        .and(&bb)
        .and(&ab)
        .map_collect(|&ma, &mb, &saa, &sbb, &sab| {
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .into_iter()
        .collect();
    Ok(pairwise_sum(&map) / map.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMetrics {
    pub mse: f64,
    pub psnr: f64,
    pub ssim: f64,
}

/// Per-frame metrics and their sequence means.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub frames: Vec<FrameMetrics>,
    pub mean_mse: f64,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

/// Scores each reconstructed frame against its reference, then averages
/// over the sequence.
pub fn evaluate(reconstructed: &[Array2<f64>], reference: &[Array2<f64>]) -> Result<MetricReport> {
    if reconstructed.len() != reference.len() || reconstructed.is_empty() {
        return Err(Error::ShapeMismatch {
            expected: vec![reference.len()],
            actual: vec![reconstructed.len()],
        });
    }
    let frames = reconstructed
        .par_iter()
        .zip(reference.par_iter())
        .map(|(r, t)| {
            let m = mse(r.view(), t.view())?;
            Ok(FrameMetrics {
                mse: m,
                psnr: psnr(m),
                ssim: ssim(r.view(), t.view())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = frames.len() as f64;
    Ok(MetricReport {
        mean_mse: pairwise_sum_by(&frames, |f| f.mse) / n,
        mean_psnr: pairwise_sum_by(&frames, |f| f.psnr) / n,
        mean_ssim: pairwise_sum_by(&frames, |f| f.ssim) / n,
        frames,
    })
}

impl MetricReport {
    /// `key = value` report. Values are printed with full round-trip
    /// precision.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# image quality report");
        let _ = writeln!(s, "aggregation = per_frame_mean");
        let _ = writeln!(s, "frames = {}", self.frames.len());
        let _ = writeln!(s, "psnr_peak = {PEAK}");
        let _ = writeln!(s, "ssim_window = {SSIM_WINDOW}");
        let _ = writeln!(s, "ssim_sigma = {SSIM_SIGMA}");
        let _ = writeln!(s, "ssim_k1 = {SSIM_K1}");
        let _ = writeln!(s, "ssim_k2 = {SSIM_K2}");
        let _ = writeln!(s, "mse = {}", self.mean_mse);
        let _ = writeln!(s, "psnr_db = {}", self.mean_psnr);
        let _ = writeln!(s, "ssim = {}", self.mean_ssim);
        s
    }

    /// Comma-separated `frame,mse,psnr_db,ssim` rows with a header.
    pub fn render_table(&self) -> String {
        let mut s = String::from("frame,mse,psnr_db,ssim\n");
        for (i, f) in self.frames.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{}", i + 1, f.mse, f.psnr, f.ssim);
        }
        s
    }
}

/// Average spikes per sampling step, counting `|spike|`.
pub fn ass(volume: &SpikeVolume) -> f64 {
    if volume.is_empty() {
        return 0.0;
    }
    volume.total_abs() as f64 / volume.len() as f64
}

/// Average spikes per accumulator per sampling step.
pub fn asas(volume: &SpikeVolume) -> f64 {
    let accumulators = volume.height() * volume.width() * volume.n_scales();
    ass(volume) / accumulators as f64
}

/// Average spikes per accumulator per sampling step at one scale. For FSM
/// volumes this is the whole-volume [`ass`].
pub fn asass(volume: &SpikeVolume, sigma: f64) -> Result<f64> {
    let idx = volume
        .scales()
        .iter()
        .position(|&s| s == sigma)
        .ok_or(Error::UnknownScale(sigma))?;
    Ok(asass_at(volume, idx))
}

fn asass_at(volume: &SpikeVolume, idx: usize) -> f64 {
    if volume.model() == Model::Fsm {
        return ass(volume);
    }
    if volume.is_empty() {
        return 0.0;
    }
    let count: u64 = volume
        .spikes()
        .index_axis(Axis(1), idx)
        .iter()
        .map(|s| u64::from(s.unsigned_abs()))
        .sum();
    count as f64 / (volume.len() * volume.height() * volume.width()) as f64
}

/// Robustness indices of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub model: Model,
    pub scales: Vec<f64>,
    pub steps: usize,
    pub height: usize,
    pub width: usize,
    pub k: f64,
    /// ASS.
    pub i1: f64,
    /// ASAS.
    pub i2: f64,
    /// ASASS, one per scale.
    pub i3: Vec<f64>,
}

pub fn robustness(volume: &SpikeVolume) -> RobustnessReport {
    RobustnessReport {
        model: volume.model(),
        scales: volume.scales().to_vec(),
        steps: volume.len(),
        height: volume.height(),
        width: volume.width(),
        k: volume.noise().map_or(0.0, |n| n.k),
        i1: ass(volume),
        i2: asas(volume),
        i3: (0..volume.n_scales())
            .map(|i| asass_at(volume, i))
            .collect(),
    }
}

fn check_positive(intensity: f64, phi: f64) -> Result<()> {
    if !(intensity > 0.0) || !(phi > 0.0) || !intensity.is_finite() || !phi.is_finite() {
        return Err(Error::Domain(format!(
            "brightness and threshold must be positive, got I={intensity}, phi={phi}"
        )));
    }
    Ok(())
}

/// Steps until the first spike on a constant scene: `ceil(φ / I)`.
pub fn response_time(intensity: f64, phi: f64) -> Result<u64> {
    check_positive(intensity, phi)?;
    Ok((phi / intensity).ceil() as u64)
}

/// Error of the interval estimate on a constant scene: `|φ / ceil(φ / I) − I|`.
pub fn quantization_error_bound(intensity: f64, phi: f64) -> Result<f64> {
    let n = response_time(intensity, phi)?;
    Ok((phi / n as f64 - intensity).abs())
}

/// Strict upper bound `I² / (φ + I)` on [`quantization_error_bound`].
///
/// The exact error is not monotone in `φ` (it drops to zero whenever `φ` is a
/// multiple of `I`), but this envelope falls strictly as `φ` grows: from
/// `ceil(φ/I) < φ/I + 1` the estimate exceeds `φI / (φ + I)`, and it never
/// exceeds `I`.
pub fn quantization_error_envelope(intensity: f64, phi: f64) -> Result<f64> {
    check_positive(intensity, phi)?;
    Ok(intensity * intensity / (phi + intensity))
}
