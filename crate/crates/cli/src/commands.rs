//! The subcommands, as plain functions returning what they wrote.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rvsm::metrics::{self, MetricReport, RobustnessReport};
use rvsm::reconstructor::{reconstruct_sequence, BrightnessAdjust, ReconstructionConfig};
use rvsm::sampler::sample_sequence;
use rvsm::scene::{synth_scene, SceneKind, SceneStream};
use rvsm::spikeio;
use rvsm::{NoiseConfig, SpikeVolume};

use crate::config::{NoiseSection, RunConfig, SynthSpec};

/// Renders an analytic scene to `{out}/frame_00000.png`, ...
pub fn cmd_synth(spec: &SynthSpec, out: &Path) -> Result<Vec<PathBuf>> {
    let scene = synth(spec)?;
    spikeio::write_images(scene.frames(), out, "frame")
        .with_context(|| format!("writing frames to {}", out.display()))
}

pub fn synth(spec: &SynthSpec) -> Result<SceneStream> {
    let kind = spec.scene_kind()?;
    synth_scene(kind, spec.height, spec.width, spec.frames).context("synthesising scene")
}

/// Loads the scene named by a config's `[scene]` section.
pub fn load_scene(cfg: &RunConfig) -> Result<SceneStream> {
    let Some(scene) = &cfg.scene else {
        bail!("no scene given: pass a scene directory or add a [scene] section");
    };
    match (&scene.dir, &scene.synth) {
        (Some(dir), None) => read_scene(dir),
        (None, Some(spec)) => synth(spec),
        _ => bail!("[scene] needs exactly one of `dir` or `synth`"),
    }
}

pub fn read_scene(dir: &Path) -> Result<SceneStream> {
    spikeio::read_scene(dir).with_context(|| format!("reading scene from {}", dir.display()))
}

/// What a sampling run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub path: PathBuf,
    pub bytes: u64,
    pub steps: usize,
    pub height: usize,
    pub width: usize,
    pub spikes: u64,
    pub parameters: String,
}

impl SampleSummary {
    pub fn render(&self) -> String {
        let mut s = self.parameters.clone();
        let _ = writeln!(s, "output = {}", self.path.display());
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "height = {}", self.height);
        let _ = writeln!(s, "width = {}", self.width);
        let _ = writeln!(s, "spikes = {}", self.spikes);
        let _ = writeln!(s, "bytes = {}", self.bytes);
        s
    }
}

/// Samples `scene` under `cfg` and writes the spike volume to `out`.
pub fn cmd_sample(scene: &SceneStream, cfg: &RunConfig, out: &Path) -> Result<SampleSummary> {
    let sampler = cfg.sampler_config()?;
    let volume = sample_sequence(scene, &sampler).context("sampling scene")?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let bytes = spikeio::write_volume(out, &volume)
        .with_context(|| format!("writing spikes to {}", out.display()))?;
    Ok(SampleSummary {
        path: out.to_path_buf(),
        bytes,
        steps: volume.len(),
        height: volume.height(),
        width: volume.width(),
        spikes: volume.total_abs(),
        parameters: cfg.render()?,
    })
}

pub fn read_volume(path: &Path) -> Result<SpikeVolume> {
    spikeio::read_volume(path).with_context(|| format!("reading spikes from {}", path.display()))
}

/// Reconstructs every step of `input` into `{out}/recon_00000.png`, ...
pub fn cmd_reconstruct(
    input: &Path,
    out: &Path,
    reference: Option<&Path>,
    config: &ReconstructionConfig,
) -> Result<Vec<PathBuf>> {
    let volume = read_volume(input)?;
    let reference = reference.map(read_scene).transpose()?;
    if reference.is_none() && config.brightness_adjust != BrightnessAdjust::None {
        bail!("brightness adjustment needs a reference scene (--ref)");
    }
    let frames = reconstruct_sequence(&volume, config, reference.as_ref())
        .context("reconstructing spikes")?;
    spikeio::write_images(&frames, out, "recon")
        .with_context(|| format!("writing reconstructions to {}", out.display()))
}

/// Scores a reconstruction directory against a reference directory. The
/// reference may be longer; only its leading frames are used.
pub fn cmd_evaluate(recon_dir: &Path, ref_dir: &Path) -> Result<MetricReport> {
    let recon = read_scene(recon_dir)?;
    let reference = read_scene(ref_dir)?;
    ensure!(
        reference.len() >= recon.len(),
        "reference has {} frames but the reconstruction has {}",
        reference.len(),
        recon.len()
    );
    metrics::evaluate(recon.frames(), &reference.frames()[..recon.len()])
        .context("evaluating reconstruction")
}

/// Parses `a:b:n` into `n` evenly spaced values from `a` to `b` inclusive.
pub fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts[..] else {
        bail!("sweep `{text}` is not of the form a:b:n");
    };
    let a: f64 = a
        .trim()
        .parse()
        .with_context(|| format!("sweep start `{a}`"))?;
    let b: f64 = b
        .trim()
        .parse()
        .with_context(|| format!("sweep end `{b}`"))?;
    let n: usize = n
        .trim()
        .parse()
        .with_context(|| format!("sweep count `{n}`"))?;
    ensure!(n >= 1, "sweep count must be at least 1");
    ensure!(
        a.is_finite() && b.is_finite(),
        "sweep bounds must be finite"
    );
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect())
}

#[derive(Debug, Clone)]
pub struct RobustnessSpec {
    pub ks: Vec<f64>,
    pub models: Vec<String>,
    pub seeds: u64,
    pub base_seed: u64,
    pub height: usize,
    pub width: usize,
    pub steps: usize,
    pub threshold: f64,
    pub noise: NoiseSection,
}

impl Default for RobustnessSpec {
    fn default() -> Self {
        Self {
            ks: vec![1.0],
            models: vec!["FSM".into(), "FourDoG".into()],
            seeds: 10,
            base_seed: 0,
            height: 100,
            width: 100,
            steps: 1000,
            threshold: rvsm::sampler::DEFAULT_THRESHOLD,
            noise: NoiseSection::default(),
        }
    }
}

/// Seed-averaged robustness indices of one model at one noise intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessRow {
    pub k: f64,
    pub model: String,
    pub i1: f64,
    pub i2: f64,
    pub i3: Vec<f64>,
}

/// Samples a black scene under noise for every (k, model, seed) and averages
/// the spike-rate indices over seeds.
pub fn cmd_robustness(spec: &RobustnessSpec) -> Result<Vec<RobustnessRow>> {
    ensure!(spec.seeds >= 1, "need at least one seed");
    ensure!(!spec.models.is_empty(), "need at least one model");
    let scene = synth_scene(SceneKind::Black, spec.height, spec.width, spec.steps)?;
    let base_noise: NoiseConfig = spec.noise.resolve();
    let mut rows = Vec::with_capacity(spec.ks.len() * spec.models.len());
    for &k in &spec.ks {
        for name in &spec.models {
            let mut cfg = RunConfig::for_model(name);
            cfg.threshold = spec.threshold;
            let mut reports: Vec<RobustnessReport> = Vec::with_capacity(spec.seeds as usize);
            for i in 0..spec.seeds {
                cfg.seed = spec.base_seed + i;
                let sampler = cfg
                    .sampler_config()?
                    .with_noise(Some(base_noise.with_intensity(k)));
                let volume = sample_sequence(&scene, &sampler)
                    .with_context(|| format!("sampling {name} at k={k}, seed {}", cfg.seed))?;
                reports.push(metrics::robustness(&volume));
            }
            rows.push(average(k, name, &reports));
        }
    }
    Ok(rows)
}

fn average(k: f64, model: &str, reports: &[RobustnessReport]) -> RobustnessRow {
    let n = reports.len() as f64;
    let scales = reports[0].i3.len();
    RobustnessRow {
        k,
        model: model.to_string(),
        i1: reports.iter().map(|r| r.i1).sum::<f64>() / n,
        i2: reports.iter().map(|r| r.i2).sum::<f64>() / n,
        i3: (0..scales)
            .map(|s| reports.iter().map(|r| r.i3[s]).sum::<f64>() / n)
            .collect(),
    }
}

/// `k,model,I1,I2,I3_s1,...` with one column per scale of the widest bank;
/// narrower banks leave trailing cells empty.
pub fn render_robustness(rows: &[RobustnessRow]) -> String {
    let width = rows.iter().map(|r| r.i3.len()).max().unwrap_or(0);
    let mut s = String::from("k,model,I1,I2");
    for i in 1..=width {
        let _ = write!(s, ",I3_s{i}");
    }
    s.push('\n');
    for row in rows {
        let _ = write!(s, "{},{},{},{}", row.k, row.model, row.i1, row.i2);
        for i in 0..width {
            match row.i3.get(i) {
                Some(v) => {
                    let _ = write!(s, ",{v}");
                }
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        assert_eq!(parse_sweep("0:2:5").unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_sweep("1:9:1").unwrap(), vec![1.0]);
        for bad in ["1:2", "a:1:2", "0:1:0", "0:1:2:3"] {
            assert!(parse_sweep(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn robustness_table_layout() {
        let rows = vec![
            RobustnessRow {
                k: 1.0,
                model: "FSM".into(),
                i1: 2.0,
                i2: 0.5,
                i3: vec![2.0],
            },
            RobustnessRow {
                k: 1.0,
                model: "TwoDoG".into(),
                i1: 1.0,
                i2: 0.25,
                i3: vec![0.5, 0.25],
            },
        ];
        assert_eq!(
            render_robustness(&rows),
            "k,model,I1,I2,I3_s1,I3_s2\n1,FSM,2,0.5,2,\n1,TwoDoG,1,0.25,0.5,0.25\n"
        );
    }

    #[test]
    fn robustness_rows_average_metric_reports() {
        let spec = RobustnessSpec {
            ks: vec![0.0, 2.0],
            models: vec!["FSM".into(), "TwoGauss".into()],
            seeds: 3,
            height: 6,
            width: 7,
            steps: 20,
            ..RobustnessSpec::default()
        };
        let rows = cmd_robustness(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[2].model, "FSM");
        assert_eq!(rows[2].k, 2.0);

        // independent recomputation of one row straight from spike counts
        let scene = synth_scene(SceneKind::Black, 6, 7, 20).unwrap();
        let mut totals = [0u64; 2];
        for seed in 0..3 {
            let cfg = RunConfig {
                seed,
                ..RunConfig::for_model("TwoGauss")
            };
            let sampler = cfg
                .sampler_config()
                .unwrap()
                .with_noise(Some(NoiseConfig::default().with_intensity(2.0)));
            let vol = sample_sequence(&scene, &sampler).unwrap();
            for (s, total) in totals.iter_mut().enumerate() {
                *total += vol
                    .spikes()
                    .index_axis(ndarray::Axis(1), s)
                    .iter()
                    .filter(|&&v| v != 0)
                    .count() as u64;
            }
        }
        let per_acc = 3.0 * 20.0 * 42.0;
        let row = &rows[3];
        assert!((row.i3[0] - totals[0] as f64 / per_acc).abs() < 1e-12);
        assert!((row.i3[1] - totals[1] as f64 / per_acc).abs() < 1e-12);
        let i1 = (totals[0] + totals[1]) as f64 / (3.0 * 20.0);
        assert!((row.i1 - i1).abs() < 1e-12);
        assert!((row.i2 - i1 / 84.0).abs() < 1e-12);
        // at k = 0 only the mean dark current remains, far below φ in 20 steps
        assert!(rows[0].i1 == 0.0 && rows[1].i1 == 0.0);
    }
}
