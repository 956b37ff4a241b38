//! Sensor noise: dark current, offset voltage and capacitor mismatch.
//!
//! Offset voltage `V_OS` and capacitor factor `θ` are fixed-pattern noise,
//! drawn once per accumulator. Dark current is temporal noise, drawn fresh for
//! every pixel at every timestep and integrated through the receptive field
//! like the scene brightness.
//!
//! All draws come from counter-keyed ChaCha streams: each grid row at a given
//! (kind, scale-or-timestep) has its own stream, so a value depends only on
//! its key and column, never on evaluation order or grid width.

use ndarray::{Array2, Array3, ArrayViewMut1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};

const DOMAIN_OFFSET_VOLTAGE: u64 = 1;
const DOMAIN_CAPACITOR: u64 = 2;
const DOMAIN_DARK_CURRENT: u64 = 3;

/// Means (`e*`), base standard deviations (`beta*`) and intensity multiplier
/// `k` of the three Gaussian noise sources. Effective standard deviations are
/// `beta * k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Dark current mean, digital units per step.
    pub e1: f64,
    /// Offset voltage mean, digital units.
    pub e2: f64,
    /// Capacitor factor mean (multiplies the threshold).
    pub e3: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub k: f64,
}

impl Default for NoiseConfig {
    /// Calibration values, not measured sensor data.
    fn default() -> Self {
        Self {
            e1: 1.0,
            e2: 0.0,
            e3: 1.0,
            beta1: 20.0,
            beta2: 20.0,
            beta3: 0.02,
            k: 1.0,
        }
    }
}

impl NoiseConfig {
    pub fn with_intensity(self, k: f64) -> Self {
        Self { k, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.e1, self.e2, self.e3, self.beta1, self.beta2, self.beta3, self.k,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("noise parameters must be finite".into()));
        }
        if self.beta1 < 0.0 || self.beta2 < 0.0 || self.beta3 < 0.0 {
            return Err(Error::Config(
                "noise standard deviations must be >= 0".into(),
            ));
        }
        if self.k < 0.0 {
            return Err(Error::Config("noise intensity k must be >= 0".into()));
        }
        Ok(())
    }

    fn dark_current(&self) -> Normal<f64> {
        Normal::new(self.e1, self.beta1 * self.k).expect("validated")
    }

    fn offset_voltage(&self) -> Normal<f64> {
        Normal::new(self.e2, self.beta2 * self.k).expect("validated")
    }

    fn capacitor(&self) -> Normal<f64> {
        Normal::new(self.e3, self.beta3 * self.k).expect("validated")
    }

    /// Parameters in storage order `e1, e2, e3, beta1, beta2, beta3, k`.
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.e1, self.e2, self.e3, self.beta1, self.beta2, self.beta3, self.k,
        ]
    }

    pub fn from_array(p: [f64; 7]) -> Self {
        Self {
            e1: p[0],
            e2: p[1],
            e3: p[2],
            beta1: p[3],
            beta2: p[4],
            beta3: p[5],
            k: p[6],
        }
    }
}

fn row_stream(seed: u64, domain: u64, key: u64, row: usize) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&domain.to_le_bytes());
    bytes[16..24].copy_from_slice(&key.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(row as u64);
    rng
}

fn fill_row(mut row: ArrayViewMut1<'_, f64>, dist: &Normal<f64>, mut rng: ChaCha8Rng) {
    for v in row.iter_mut() {
        *v = dist.sample(&mut rng);
    }
}

fn fixed_pattern(
    seed: u64,
    domain: u64,
    dist: Normal<f64>,
    shape: (usize, usize, usize),
) -> Array3<f64> {
    let mut out = Array3::zeros(shape);
    for (scale, mut plane) in out.axis_iter_mut(Axis(0)).enumerate() {
        plane
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(r, row)| fill_row(row, &dist, row_stream(seed, domain, scale as u64, r)));
    }
    out
}

/// Realised noise for one sampling run over `scales × height × width`
/// accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseField {
    config: NoiseConfig,
    seed: u64,
    v_os: Array3<f64>,
    theta: Array3<f64>,
}

/// Draws the fixed-pattern fields for a run. Dark current is drawn lazily per
/// timestep by [`NoiseField::dark_current`].
pub fn realize_noise(
    config: &NoiseConfig,
    seed: u64,
    shape: (usize, usize, usize),
) -> Result<NoiseField> {
    NoiseField::realize(config, seed, shape)
}

impl NoiseField {
    pub fn realize(config: &NoiseConfig, seed: u64, shape: (usize, usize, usize)) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config: *config,
            seed,
            v_os: fixed_pattern(seed, DOMAIN_OFFSET_VOLTAGE, config.offset_voltage(), shape),
            theta: fixed_pattern(seed, DOMAIN_CAPACITOR, config.capacitor(), shape),
        })
    }

    pub fn config(&self) -> &NoiseConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Offset voltage per accumulator, `scales × height × width`.
    pub fn v_os(&self) -> &Array3<f64> {
        &self.v_os
    }

    /// Capacitor factor per accumulator, `scales × height × width`.
    pub fn theta(&self) -> &Array3<f64> {
        &self.theta
    }

    /// Dark current of every pixel during step `t` (1-based).
    pub fn dark_current(&self, t: u32) -> Array2<f64> {
        let (_, h, w) = self.v_os.dim();
        let mut out = Array2::zeros((h, w));
        self.dark_current_into(t, &mut out);
        out
    }

    pub fn dark_current_into(&self, t: u32, out: &mut Array2<f64>) {
        let dist = self.config.dark_current();
        let seed = self.seed;
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(r, row)| {
                fill_row(
                    row,
                    &dist,
                    row_stream(seed, DOMAIN_DARK_CURRENT, u64::from(t), r),
                )
            });
    }
}
