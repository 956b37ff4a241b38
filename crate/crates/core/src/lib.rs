//! Spike-camera sampling simulator.
//!
//! Two families of sampling models are provided:
//!
//! * the fovea-like model (`Model::Fsm`), where each pixel integrates its own
//!   brightness and emits a unary spike whenever the integral reaches a
//!   threshold;
//! * receptive-field models (`Model::RvsmDog`, `Model::RvsmGauss`), where each
//!   accumulator integrates a kernel-weighted neighbourhood at one of several
//!   scales and emits ternary spikes on `±threshold`.
//!
//! The crate also covers noise injection, a packed ternary file format,
//! reconstruction back to images, and quality/robustness metrics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod filter_bank;
pub mod metrics;
pub mod noise;
pub mod reconstructor;
pub mod sampler;
pub mod scene;
pub mod spikeio;
mod sum;

pub use error::{Error, Result};
pub use filter_bank::{BankKind, BankName, FilterBank, Kernel, KernelSpec, MotherKind};
pub use noise::{NoiseConfig, NoiseField};
pub use reconstructor::{BrightnessAdjust, CoefficientGrid, ReconstructionConfig};
pub use sampler::{Model, ResetMode, Sampler, SamplerConfig, SpikeVolume};
pub use scene::{SceneKind, SceneStream};
