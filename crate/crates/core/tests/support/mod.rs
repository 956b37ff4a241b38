//! Test-only reference implementations, written from the model definitions
//! without reusing any of the library's kernels, placements or loops.

#![allow(dead_code)]

use std::f64::consts::PI;

use ndarray::{Array2, Array4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rvsm::sampler::{ResetMode, SamplerConfig, TRIGGER_SLACK};
use rvsm::scene::SceneStream;
use rvsm::{BankKind, NoiseField};

fn gauss(x: f64, y: f64, s: f64) -> f64 {
    (-(x * x + y * y) / (2.0 * s * s)).exp() / (2.0 * PI * s * s)
}

/// Raw (unnormalised) receptive-field value at template offset `(di, dj)`.
pub fn raw_weight(kind: BankKind, sigma: f64, di: i64, dj: i64) -> f64 {
    let (u, v) = (di as f64 / sigma, dj as f64 / sigma);
    match kind {
        BankKind::Unit => 1.0,
        BankKind::Gaussian => gauss(u, v, 1.0),
        BankKind::DoG => gauss(u, v, 1.0) - gauss(u, v, 1.5874),
    }
}

pub fn half_width(kind: BankKind, sigma: f64, unit: f64) -> i64 {
    match kind {
        BankKind::Unit => 0,
        _ => ((sigma / unit).ceil() as i64).max(1),
    }
}

/// Weights of the receptive field of `(row, col)`: the template clipped to the
/// grid and normalised to unit L1 norm over what remains, as
/// `(r, c, weight)` triples in row-major template order.
pub fn field(
    kind: BankKind,
    sigma: f64,
    unit: f64,
    row: usize,
    col: usize,
    h: usize,
    w: usize,
) -> Vec<(usize, usize, f64)> {
    let l = half_width(kind, sigma, unit);
    let mut taps = Vec::new();
    for di in -l..=l {
        for dj in -l..=l {
            let (r, c) = (row as i64 + di, col as i64 + dj);
            if r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w {
                taps.push((r as usize, c as usize, raw_weight(kind, sigma, di, dj)));
            }
        }
    }
    let norm: f64 = taps.iter().map(|t| t.2.abs()).sum();
    taps.into_iter().map(|(r, c, v)| (r, c, v / norm)).collect()
}

/// Per-accumulator integrate-and-fire, one accumulator at a time.
pub fn naive_sample(scene: &SceneStream, cfg: &SamplerConfig, unit: f64) -> Array4<i8> {
    let (h, w, t_len) = (scene.height(), scene.width(), scene.len());
    let kind = cfg.bank.kind();
    let scales = cfg.bank.scales().to_vec();
    let thresholds = cfg.thresholds();
    let p = scales.len();
    let noise = cfg
        .noise
        .map(|n| NoiseField::realize(&n, cfg.seed, (p, h, w)).unwrap());
    let ternary = cfg.model.is_ternary();

    let mut out = Array4::<i8>::zeros((t_len, p, h, w));
    for s in 0..p {
        for row in 0..h {
            for col in 0..w {
                let taps = field(kind, scales[s], unit, row, col, h, w);
                let level = match &noise {
                    None => thresholds[s],
                    Some(n) => n.theta()[[s, row, col]] * thresholds[s] + n.v_os()[[s, row, col]],
                };
                let reach = level - TRIGGER_SLACK * level.abs();
                let mut acc = 0.0;
                for (t, frame) in scene.frames().iter().enumerate() {
                    let dark = noise.as_ref().map(|n| n.dark_current(t as u32 + 1));
                    for &(r, c, wt) in &taps {
                        let x = match &dark {
                            None => frame[[r, c]],
                            Some(d) => frame[[r, c]] + d[[r, c]],
                        };
                        acc += wt * x;
                    }
                    let spike = if acc >= reach {
                        1
                    } else if ternary && acc <= -reach {
                        -1
                    } else {
                        0
                    };
                    if spike != 0 {
                        out[[t, s, row, col]] = spike;
                        acc = match cfg.reset {
                            ResetMode::Zero => 0.0,
                            ResetMode::Subtract => acc - f64::from(spike) * level,
                        };
                    }
                }
            }
        }
    }
    out
}

/// Uniform random brightness in `[0, max)`.
pub fn random_scene(rng: &mut ChaCha8Rng, h: usize, w: usize, t: usize, max: f64) -> SceneStream {
    let frames = (0..t)
        .map(|_| Array2::from_shape_fn((h, w), |_| rng.random_range(0.0..max)))
        .collect();
    SceneStream::new(frames).unwrap()
}

/// Integer brightness in `0..=max`, so every accumulation is exact.
pub fn integer_scene(rng: &mut ChaCha8Rng, h: usize, w: usize, t: usize, max: u32) -> SceneStream {
    let frames = (0..t)
        .map(|_| Array2::from_shape_fn((h, w), |_| f64::from(rng.random_range(0..=max))))
        .collect();
    SceneStream::new(frames).unwrap()
}

/// Brute-force Gaussian-windowed SSIM: every statistic is summed directly over
/// each fully-covered 11×11 window.
pub fn naive_ssim(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    const N: usize = 11;
    let mut g = [[0.0; N]; N];
    let mut total = 0.0;
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            total += *v;
        }
    }
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let (h, w) = a.dim();
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in 0..=h - N {
        for c in 0..=w - N {
            let (mut ma, mut mb, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..N {
                for j in 0..N {
                    let g = g[i][j] / total;
                    let (x, y) = (a[[r + i, c + j]], b[[r + i, c + j]]);
                    ma += g * x;
                    mb += g * y;
                    aa += g * x * x;
                    bb += g * y * y;
                    ab += g * x * y;
                }
            }
            let (va, vb, cov) = (aa - ma * ma, bb - mb * mb, ab - ma * mb);
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    sum / count as f64
}
