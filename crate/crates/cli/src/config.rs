//! TOML run configuration.
//!
//! ```toml
//! model = "FourDoG"          # FSM, OneDoG..FourDoG, OneGauss..FourGauss
//! # or an explicit bank:
//! # kind = "dog"             # "dog" | "gauss"
//! # scales = [0.24, 0.5046]
//! threshold = 400.0
//! per_scale_threshold = [400.0, 400.0, 400.0, 400.0]   # optional
//! template_unit = 0.24
//! seed = 7
//! reset = "zero"             # "zero" | "subtract"
//!
//! [noise]                    # optional; present = noise on
//! k = 1.0                    # unset fields keep their defaults
//! e1 = 1.0
//!
//! [scene]                    # exactly one of `dir` / `synth`
//! dir = "frames/"
//! # synth = { kind = "rotating_bar", height = 100, width = 100, frames = 200 }
//!
//! [output]
//! spikes = "out.spk"
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rvsm::filter_bank::{BankName, FilterBank, MotherKind, TEMPLATE_UNIT};
use rvsm::sampler::{Model, ResetMode, SamplerConfig, DEFAULT_THRESHOLD};
use rvsm::scene::SceneKind;
use rvsm::NoiseConfig;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<String>,
    pub kind: Option<String>,
    pub scales: Option<Vec<f64>>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    pub per_scale_threshold: Option<Vec<f64>>,
    #[serde(default = "default_template_unit")]
    pub template_unit: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_reset")]
    pub reset: String,
    pub noise: Option<NoiseSection>,
    pub scene: Option<SceneSection>,
    pub output: Option<OutputSection>,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_template_unit() -> f64 {
    TEMPLATE_UNIT
}

fn default_reset() -> String {
    "zero".into()
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub e3: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub beta3: Option<f64>,
    pub k: Option<f64>,
}

impl NoiseSection {
    pub fn resolve(&self) -> NoiseConfig {
        let d = NoiseConfig::default();
        NoiseConfig {
            e1: self.e1.unwrap_or(d.e1),
            e2: self.e2.unwrap_or(d.e2),
            e3: self.e3.unwrap_or(d.e3),
            beta1: self.beta1.unwrap_or(d.beta1),
            beta2: self.beta2.unwrap_or(d.beta2),
            beta3: self.beta3.unwrap_or(d.beta3),
            k: self.k.unwrap_or(d.k),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    pub dir: Option<PathBuf>,
    pub synth: Option<SynthSpec>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub spikes: Option<PathBuf>,
}

/// Parameters of a builtin analytic scene.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub kind: String,
    #[serde(default = "default_side")]
    pub height: usize,
    #[serde(default = "default_side")]
    pub width: usize,
    #[serde(default = "default_frames")]
    pub frames: usize,
    pub level: Option<f64>,
    pub low: Option<f64>,
    pub high: Option<f64>,
    pub background: Option<f64>,
    pub period: Option<u32>,
    pub speed: Option<f64>,
    pub half_thickness: Option<f64>,
}

fn default_side() -> usize {
    100
}

fn default_frames() -> usize {
    1000
}

pub const SCENE_KINDS: [&str; 5] = [
    "black",
    "constant",
    "gradient",
    "rotating_bar",
    "moving_edge",
];

impl SynthSpec {
    pub fn new(kind: &str, height: usize, width: usize, frames: usize) -> Self {
        Self {
            kind: kind.into(),
            height,
            width,
            frames,
            level: None,
            low: None,
            high: None,
            background: None,
            period: None,
            speed: None,
            half_thickness: None,
        }
    }

    pub fn scene_kind(&self) -> Result<SceneKind> {
        let kind = self.kind.to_ascii_lowercase().replace('-', "_");
        Ok(match kind.as_str() {
            "black" => SceneKind::Black,
            "constant" => SceneKind::Constant {
                level: self.level.unwrap_or(100.0),
            },
            "gradient" => SceneKind::Gradient {
                low: self.low.unwrap_or(0.0),
                high: self.high.unwrap_or(255.0),
            },
            "rotating_bar" => SceneKind::RotatingBar {
                period: self.period.unwrap_or(200),
                level: self.level.unwrap_or(220.0),
                background: self.background.unwrap_or(30.0),
                half_thickness: self.half_thickness.unwrap_or(3.0),
            },
            "moving_edge" => SceneKind::MovingEdge {
                speed: self.speed.unwrap_or(0.5),
                low: self.low.unwrap_or(30.0),
                high: self.high.unwrap_or(200.0),
            },
            other => bail!(
                "unknown scene kind `{other}` (expected one of {})",
                SCENE_KINDS.join(", ")
            ),
        })
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("invalid run configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// A config for a standard bank with everything else at defaults.
    pub fn for_model(name: &str) -> Self {
        Self {
            model: Some(name.into()),
            kind: None,
            scales: None,
            threshold: DEFAULT_THRESHOLD,
            per_scale_threshold: None,
            template_unit: TEMPLATE_UNIT,
            seed: 0,
            reset: default_reset(),
            noise: None,
            scene: None,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.model, &self.kind, &self.scales) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            (None, None, None) => bail!("config needs `model` or `kind` + `scales`"),
            _ => bail!("use either `model` or `kind` + `scales`, not both"),
        }
        if let Some(scene) = &self.scene {
            if scene.dir.is_some() == scene.synth.is_some() {
                bail!("[scene] needs exactly one of `dir` or `synth`");
            }
        }
        self.sampler_config().map(|_| ())
    }

    pub fn bank(&self) -> Result<(Model, FilterBank)> {
        if let Some(name) = &self.model {
            let name: BankName = name.parse()?;
            let bank = match name.mother() {
                None => FilterBank::unit(),
                Some(kind) => {
                    let standard = FilterBank::standard(name);
                    FilterBank::with_template_unit(kind, standard.scales(), self.template_unit)?
                }
            };
            return Ok((Model::for_bank(name), bank));
        }
        let kind = self.kind.as_deref().unwrap_or_default();
        let scales = self.scales.as_deref().unwrap_or_default();
        let (model, mother) = match kind.to_ascii_lowercase().as_str() {
            "dog" => (Model::RvsmDog, MotherKind::DoG),
            "gauss" | "gaussian" => (Model::RvsmGauss, MotherKind::Gaussian),
            other => bail!("unknown bank kind `{other}` (expected `dog` or `gauss`)"),
        };
        Ok((
            model,
            FilterBank::with_template_unit(mother, scales, self.template_unit)?,
        ))
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let (model, bank) = self.bank()?;
        let reset = match self.reset.as_str() {
            "zero" => ResetMode::Zero,
            "subtract" => ResetMode::Subtract,
            other => bail!("unknown reset mode `{other}` (expected `zero` or `subtract`)"),
        };
        let cfg = SamplerConfig {
            model,
            bank,
            threshold: self.threshold,
            per_scale_threshold: self.per_scale_threshold.clone(),
            noise: self.noise.as_ref().map(NoiseSection::resolve),
            seed: self.seed,
            reset,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `key = value` lines echoing every effective parameter.
    pub fn render(&self) -> Result<String> {
        use std::fmt::Write as _;
        let cfg = self.sampler_config()?;
        let mut s = String::new();
        writeln!(s, "model = {}", cfg.model)?;
        writeln!(s, "scales = {:?}", cfg.bank.scales())?;
        writeln!(s, "thresholds = {:?}", cfg.thresholds())?;
        writeln!(s, "template_unit = {}", self.template_unit)?;
        writeln!(s, "reset = {}", self.reset)?;
        writeln!(s, "seed = {}", cfg.seed)?;
        match cfg.noise {
            None => writeln!(s, "noise = off")?,
            Some(n) => {
                writeln!(s, "noise = on")?;
                for (k, v) in ["e1", "e2", "e3", "beta1", "beta2", "beta3", "k"]
                    .iter()
                    .zip(n.to_array())
                {
                    writeln!(s, "noise_{k} = {v}")?;
                }
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = RunConfig::from_toml(
            r#"
            model = "ThreeDoG"
            threshold = 300.0
            seed = 9
            [noise]
            k = 2.0
            [scene]
            synth = { kind = "rotating_bar", height = 20, width = 30, frames = 5, period = 4 }
            [output]
            spikes = "x.spk"
            "#,
        )
        .unwrap();
        let sc = cfg.sampler_config().unwrap();
        assert_eq!(sc.model, Model::RvsmDog);
        assert_eq!(sc.bank.len(), 3);
        assert_eq!(sc.noise.unwrap().k, 2.0);
        assert_eq!(sc.noise.unwrap().beta1, NoiseConfig::default().beta1);
        assert_eq!(sc.threshold, 300.0);
        let synth = cfg.scene.unwrap().synth.unwrap();
        assert!(matches!(
            synth.scene_kind().unwrap(),
            SceneKind::RotatingBar { period: 4, .. }
        ));
    }

    #[test]
    fn explicit_scales() {
        let cfg = RunConfig::from_toml("kind = \"gauss\"\nscales = [0.3, 0.9]\n").unwrap();
        let (model, bank) = cfg.bank().unwrap();
        assert_eq!(model, Model::RvsmGauss);
        assert_eq!(bank.scales(), &[0.3, 0.9]);
        assert_eq!(bank.kernels()[1].half_width(), 4);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            "model = \"FourDoG\"\nbogus = 1\n",
            "model = \"FiveDoG\"\n",
            "threshold = 400.0\n",
            "model = \"FSM\"\nkind = \"dog\"\nscales = [0.24]\n",
            "model = \"FSM\"\nthreshold = -1.0\n",
            "model = \"TwoDoG\"\nper_scale_threshold = [1.0]\n",
            "model = \"FSM\"\n[noise]\nbeta9 = 1.0\n",
            "model = \"FSM\"\n[noise]\nk = -1.0\n",
            "model = \"FSM\"\nreset = \"sideways\"\n",
            "model = \"FSM\"\n[scene]\n",
            "kind = \"dog\"\nscales = [0.5, 0.2]\n",
        ] {
            assert!(RunConfig::from_toml(bad).is_err(), "accepted: {bad}");
        }
    }

    #[test]
    fn render_echoes_parameters() {
        let mut cfg = RunConfig::for_model("FSM");
        cfg.noise = Some(NoiseSection::default());
        let text = cfg.render().unwrap();
        assert!(text.contains("model = FSM\n"));
        assert!(text.contains("noise_beta1 = 20\n"));
    }
}
