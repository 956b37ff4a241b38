//! Integrate-and-fire sampling.
//!
//! Every accumulator integrates the kernel-weighted brightness of its
//! receptive field, one frame per step, and fires once its integral reaches
//! the trigger level `θ·φ + V_OS` (noise off: `φ`). Receptive-field models
//! also fire a `-1` spike when the integral falls to the negative trigger
//! level. Firing resets the accumulator.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Array3, Array4, ArrayView2, ArrayView3, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter_bank::{BankKind, BankName, FilterBank, KernelPlacement};
use crate::noise::{NoiseConfig, NoiseField};
use crate::scene::SceneStream;

/// Default firing threshold φ, digital units.
pub const DEFAULT_THRESHOLD: f64 = 400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Fovea-like: per-pixel accumulation, unary spikes.
    Fsm,
    /// Receptive fields from a DoG wavelet bank, ternary spikes.
    RvsmDog,
    /// Receptive fields from a Gaussian bank, ternary spikes.
    RvsmGauss,
}

impl Model {
    pub fn code(self) -> u8 {
        match self {
            Model::Fsm => 0,
            Model::RvsmDog => 1,
            Model::RvsmGauss => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Model::Fsm),
            1 => Some(Model::RvsmDog),
            2 => Some(Model::RvsmGauss),
            _ => None,
        }
    }

    /// Whether the model emits `-1` spikes.
    pub fn is_ternary(self) -> bool {
        self != Model::Fsm
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Model::Fsm => "FSM",
            Model::RvsmDog => "RVSM_DoG",
            Model::RvsmGauss => "RVSM_Gauss",
        }
    }

    /// The model a standard bank is sampled with.
    pub fn for_bank(name: BankName) -> Self {
        match name.mother() {
            None => Model::Fsm,
            Some(crate::filter_bank::MotherKind::DoG) => Model::RvsmDog,
            Some(crate::filter_bank::MotherKind::Gaussian) => Model::RvsmGauss,
        }
    }

    /// Bank to reconstruct with when only the scale list is known.
    pub fn bank_for_scales(self, scales: &[f64], template_unit: f64) -> Result<FilterBank> {
        use crate::filter_bank::MotherKind;
        match self {
            Model::Fsm => Ok(FilterBank::unit()),
            // a single unit-scale RVSM kernel is the degenerate 1×1 bank
            _ if scales == [crate::filter_bank::UNIT_SCALE] => Ok(FilterBank::unit()),
            Model::RvsmDog => {
                FilterBank::with_template_unit(MotherKind::DoG, scales, template_unit)
            }
            Model::RvsmGauss => {
                FilterBank::with_template_unit(MotherKind::Gaussian, scales, template_unit)
            }
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "fsm" => Ok(Model::Fsm),
            "rvsm_dog" | "dog" => Ok(Model::RvsmDog),
            "rvsm_gauss" | "gauss" => Ok(Model::RvsmGauss),
            _ => Err(Error::Config(format!("unknown model `{s}`"))),
        }
    }
}

/// What happens to an accumulator when it fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResetMode {
    /// Accumulation restarts from exactly zero.
    #[default]
    Zero,
    /// The trigger level is subtracted and the residual carried over.
    Subtract,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub model: Model,
    pub bank: FilterBank,
    pub threshold: f64,
    /// Overrides `threshold` per scale when present.
    pub per_scale_threshold: Option<Vec<f64>>,
    pub noise: Option<NoiseConfig>,
    pub seed: u64,
    pub reset: ResetMode,
}

impl SamplerConfig {
    pub fn new(model: Model, bank: FilterBank) -> Self {
        Self {
            model,
            bank,
            threshold: DEFAULT_THRESHOLD,
            per_scale_threshold: None,
            noise: None,
            seed: 0,
            reset: ResetMode::Zero,
        }
    }

    pub fn standard(name: BankName) -> Self {
        Self::new(Model::for_bank(name), FilterBank::standard(name))
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_noise(mut self, noise: Option<NoiseConfig>) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Threshold φ_σ of every scale.
    pub fn thresholds(&self) -> Vec<f64> {
        match &self.per_scale_threshold {
            Some(t) => t.clone(),
            None => vec![self.threshold; self.bank.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) || !self.threshold.is_finite() {
            return Err(Error::Config(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if let Some(t) = &self.per_scale_threshold {
            if t.len() != self.bank.len() {
                return Err(Error::Config(format!(
                    "per-scale thresholds: expected {} values, got {}",
                    self.bank.len(),
                    t.len()
                )));
            }
            if t.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::Config(
                    "per-scale thresholds must be positive".into(),
                ));
            }
        }
        let compatible = match (self.model, self.bank.kind()) {
            (_, BankKind::Unit) => true,
            (Model::Fsm, _) => false,
            (Model::RvsmDog, kind) => kind == BankKind::DoG,
            (Model::RvsmGauss, kind) => kind == BankKind::Gaussian,
        };
        if !compatible {
            return Err(Error::Config(format!(
                "model {} cannot sample with a {:?} bank",
                self.model,
                self.bank.kind()
            )));
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        Ok(())
    }
}

/// `T × scales × height × width` ternary spikes plus the run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeVolume {
    model: Model,
    scales: Vec<f64>,
    thresholds: Vec<f64>,
    spikes: Array4<i8>,
    noise: Option<NoiseConfig>,
    seed: u64,
}

impl SpikeVolume {
    pub fn new(
        model: Model,
        scales: Vec<f64>,
        thresholds: Vec<f64>,
        spikes: Array4<i8>,
        noise: Option<NoiseConfig>,
        seed: u64,
    ) -> Result<Self> {
        let (_, p, _, _) = spikes.dim();
        if scales.is_empty() || scales.len() != p || thresholds.len() != p {
            return Err(Error::ShapeMismatch {
                expected: vec![scales.len(), thresholds.len()],
                actual: spikes.shape().to_vec(),
            });
        }
        if model == Model::Fsm && p != 1 {
            return Err(Error::ModelMismatch(format!(
                "FSM volumes have exactly one scale, got {p}"
            )));
        }
        let lowest = if model.is_ternary() { -1 } else { 0 };
        if spikes.iter().any(|&s| s < lowest || s > 1) {
            return Err(Error::Domain(format!(
                "{model} spikes must lie in [{lowest}, 1]"
            )));
        }
        Ok(Self {
            model,
            scales,
            thresholds,
            spikes,
            noise,
            seed,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn spikes(&self) -> &Array4<i8> {
        &self.spikes
    }

    pub fn noise(&self) -> Option<&NoiseConfig> {
        self.noise.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of sampling steps T.
    pub fn len(&self) -> usize {
        self.spikes.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn height(&self) -> usize {
        self.spikes.dim().2
    }

    pub fn width(&self) -> usize {
        self.spikes.dim().3
    }

    /// All scale planes emitted at step `t` (1-based).
    pub fn planes(&self, t: usize) -> ArrayView3<'_, i8> {
        self.spikes.index_axis(Axis(0), t - 1)
    }

    /// Total of `|spike|` over the volume.
    pub fn total_abs(&self) -> u64 {
        self.spikes
            .iter()
            .map(|s| u64::from(s.unsigned_abs()))
            .sum()
    }

    pub fn with_model(self, model: Model) -> Result<Self> {
        Self::new(
            model,
            self.scales,
            self.thresholds,
            self.spikes,
            self.noise,
            self.seed,
        )
    }
}

/// Stepwise sampling engine for one scene shape.
#[derive(Debug, Clone)]
pub struct Sampler {
    config: SamplerConfig,
    height: usize,
    width: usize,
    placements: Vec<KernelPlacement>,
    trigger: Array3<f64>,
    noise: Option<NoiseField>,
    acc: Array3<f64>,
    input: Array2<f64>,
    t: u32,
}

impl Sampler {
    pub fn new(config: SamplerConfig, height: usize, width: usize) -> Result<Self> {
        config.validate()?;
        if height == 0 || width == 0 {
            return Err(Error::Config(format!(
                "sampling grid must be non-empty, got {height}x{width}"
            )));
        }
        let p = config.bank.len();
        let thresholds = config.thresholds();
        let noise = match &config.noise {
            Some(n) => Some(NoiseField::realize(n, config.seed, (p, height, width))?),
            None => None,
        };
        let trigger = match &noise {
            None => Array3::from_shape_fn((p, height, width), |(s, _, _)| thresholds[s]),
            Some(field) => Array3::from_shape_fn((p, height, width), |(s, r, c)| {
                field.theta()[[s, r, c]] * thresholds[s] + field.v_os()[[s, r, c]]
            }),
        };
        Ok(Self {
            placements: config.bank.place(height, width),
            config,
            height,
            width,
            trigger,
            noise,
            acc: Array3::zeros((p, height, width)),
            input: Array2::zeros((height, width)),
            t: 0,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// Steps taken so far.
    pub fn time(&self) -> u32 {
        self.t
    }

    /// Current accumulator values, `scales × height × width`.
    pub fn accumulators(&self) -> &Array3<f64> {
        &self.acc
    }

    /// Effective trigger level `θ·φ_σ + V_OS` of every accumulator.
    pub fn trigger_levels(&self) -> &Array3<f64> {
        &self.trigger
    }

    pub fn noise(&self) -> Option<&NoiseField> {
        self.noise.as_ref()
    }

    /// Integrates one frame into every accumulator and returns the spike
    /// planes for this step, `scales × height × width`.
    pub fn step(&mut self, frame: ArrayView2<'_, f64>) -> Result<Array3<i8>> {
        if frame.dim() != (self.height, self.width) {
            return Err(Error::ShapeMismatch {
                expected: vec![self.height, self.width],
                actual: frame.shape().to_vec(),
            });
        }
        self.t += 1;
        match &self.noise {
            Some(field) => {
                field.dark_current_into(self.t, &mut self.input);
                self.input.zip_mut_with(&frame, |d, &i| *d += i);
            }
            None => self.input.assign(&frame),
        }

        let (h, w) = (self.height, self.width);
        let mut out = Array3::<i8>::zeros((self.placements.len(), h, w));
        let input = self.input.as_slice().expect("standard layout");
        let ternary = self.config.model.is_ternary();
        let reset = self.config.reset;

        let acc = self.acc.as_slice_mut().expect("standard layout");
        let trigger = self.trigger.as_slice().expect("standard layout");
        let spikes = out.as_slice_mut().expect("standard layout");
        for (s, placement) in self.placements.iter().enumerate() {
            let plane = s * h * w..(s + 1) * h * w;
            acc[plane.clone()]
                .par_chunks_mut(w)
                .zip(spikes[plane.clone()].par_chunks_mut(w))
                .zip(trigger[plane].par_chunks(w))
                .enumerate()
                .for_each(|(row, ((acc_row, spike_row), trig_row))| {
                    for col in 0..w {
                        let a = &mut acc_row[col];
                        *a += weighted_sum(placement, input, h, w, row, col);
                        spike_row[col] = fire(a, trig_row[col], ternary, reset);
                    }
                });
        }
        Ok(out)
    }
}

/// Kernel-weighted sum of `input` around `(row, col)`, accumulated in
/// row-major template order over in-grid offsets.
#[inline]
fn weighted_sum(
    placement: &KernelPlacement,
    input: &[f64],
    h: usize,
    w: usize,
    row: usize,
    col: usize,
) -> f64 {
    let l = placement.half_width();
    let side = placement.side();
    let weights = placement.weights_at(row, col);
    let mut sum = 0.0;
    if placement.is_interior(row, col) {
        for di in 0..side {
            let base = (row + di - l) * w + col - l;
            let src = &input[base..base + side];
            let wr = &weights[di * side..(di + 1) * side];
            for (wt, x) in wr.iter().zip(src) {
                sum += wt * x;
            }
        }
    } else {
        for di in 0..side {
            let r = row as isize + di as isize - l as isize;
            if r < 0 || r as usize >= h {
                continue;
            }
            for dj in 0..side {
                let c = col as isize + dj as isize - l as isize;
                if c < 0 || c as usize >= w {
                    continue;
                }
                sum += weights[di * side + dj] * input[r as usize * w + c as usize];
            }
        }
    }
    sum
}

/// Relative slack on trigger comparisons. Normalised kernel weights carry
/// rounding error, so `n` steps of a sum that is exactly `φ / n` in real
/// arithmetic can land a few ulps below `φ`; the slack makes such
/// accumulators fire on the step their exact value reaches the trigger.
pub const TRIGGER_SLACK: f64 = 1e-12;

/// Firing rule shared by every model: `+1` once `acc ≥ level`, `-1` (ternary
/// models only) once `acc ≤ -level`, both up to [`TRIGGER_SLACK`].
#[inline]
pub fn fire(acc: &mut f64, level: f64, ternary: bool, reset: ResetMode) -> i8 {
    let reach = level - TRIGGER_SLACK * level.abs();
    let spike = if *acc >= reach {
        1
    } else if ternary && *acc <= -reach {
        -1
    } else {
        return 0;
    };
    *acc = match reset {
        ResetMode::Zero => 0.0,
        ResetMode::Subtract => *acc - f64::from(spike) * level,
    };
    spike
}

/// Samples a whole scene from zero initial accumulation.
pub fn sample_sequence(scene: &SceneStream, config: &SamplerConfig) -> Result<SpikeVolume> {
    if scene.is_empty() {
        return Err(Error::EmptyScene);
    }
    let (h, w) = (scene.height(), scene.width());
    let mut sampler = Sampler::new(config.clone(), h, w)?;
    let mut spikes = Array4::<i8>::zeros((scene.len(), config.bank.len(), h, w));
    for (frame, mut slot) in scene.frames().iter().zip(spikes.axis_iter_mut(Axis(0))) {
        slot.assign(&sampler.step(frame.view())?);
    }
    SpikeVolume::new(
        config.model,
        config.bank.scales().to_vec(),
        config.thresholds(),
        spikes,
        config.noise,
        config.seed,
    )
}
