use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rvsm::reconstructor::{BrightnessAdjust, ReconstructionConfig};
use rvsm_cli::commands::{load_scene, read_scene, render_robustness};
use rvsm_cli::{
    cmd_evaluate, cmd_reconstruct, cmd_robustness, cmd_sample, cmd_synth, parse_sweep,
    NoiseSection, RobustnessSpec, RunConfig, SynthSpec,
};

/// Environment variable overriding the worker thread count.
const THREADS_ENV: &str = "RVSM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "rvsm",
    version,
    about = "Receptive-field spike sampling and reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render an analytic scene to a directory of PNG frames.
    Synth {
        /// black, constant, gradient, rotating_bar or moving_edge.
        kind: String,
        #[arg(long, default_value_t = 100)]
        height: usize,
        #[arg(long, default_value_t = 100)]
        width: usize,
        #[arg(long, default_value_t = 1000)]
        frames: usize,
        /// Brightness for constant / rotating_bar scenes.
        #[arg(long)]
        level: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a scene into a spike file.
    Sample(SampleArgs),
    /// Reconstruct a spike file into PNG frames.
    Reconstruct {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Reference frames for brightness adjustment.
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        /// none, mean or mean_std. Defaults to mean with --ref, none without.
        #[arg(long)]
        adjust: Option<BrightnessAdjust>,
        /// Keep values outside [0, 255] before 8-bit export.
        #[arg(long)]
        no_clamp: bool,
        /// Template unit used to rebuild the receptive-field bank.
        #[arg(long, default_value_t = rvsm::filter_bank::TEMPLATE_UNIT)]
        template_unit: f64,
    },
    /// Score reconstructed frames against reference frames.
    Evaluate {
        recon_dir: PathBuf,
        ref_dir: PathBuf,
        /// Write the key=value report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write a per-frame CSV table.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Spike rates on a black scene under increasing sensor noise.
    Robustness {
        /// Noise intensities as start:end:count.
        #[arg(long, default_value = "1:1:1")]
        k_sweep: String,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        /// Comma-separated model names.
        #[arg(long, value_delimiter = ',', default_value = "FSM,FourDoG")]
        models: Vec<String>,
        #[arg(long, default_value_t = 100)]
        height: usize,
        #[arg(long, default_value_t = 100)]
        width: usize,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = rvsm::sampler::DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Write the table here instead of stdout.
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Directory of input frames (alternative to a config [scene]).
    scene: Option<PathBuf>,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output spike file (overrides the config's [output]).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model name when no config is given.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Enable sensor noise at default parameters.
    #[arg(long)]
    noise: bool,
    /// Noise intensity (implies --noise).
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    template_unit: Option<f64>,
}

fn run_config(args: &SampleArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            if args.model.is_some() {
                bail!("--model conflicts with --config; set the model in the config file");
            }
            RunConfig::load(path)?
        }
        None => RunConfig::for_model(args.model.as_deref().unwrap_or("FSM")),
    };
    if let Some(t) = args.threshold {
        cfg.threshold = t;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(unit) = args.template_unit {
        cfg.template_unit = unit;
    }
    if args.noise || args.k.is_some() {
        let noise = cfg.noise.get_or_insert_with(NoiseSection::default);
        if args.k.is_some() {
            noise.k = args.k;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_or_print(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            kind,
            height,
            width,
            frames,
            level,
            out,
        } => {
            let mut spec = SynthSpec::new(&kind, height, width, frames);
            spec.level = level;
            let written = cmd_synth(&spec, &out)?;
            println!("wrote {} frames to {}", written.len(), out.display());
        }
        Command::Sample(args) => {
            let cfg = run_config(&args)?;
            let scene = match &args.scene {
                Some(dir) => read_scene(dir)?,
                None => load_scene(&cfg)?,
            };
            let out = args
                .out
                .clone()
                .or_else(|| cfg.output.as_ref().and_then(|o| o.spikes.clone()))
                .context("no output path: pass --out or set [output] spikes")?;
            print!("{}", cmd_sample(&scene, &cfg, &out)?.render());
        }
        Command::Reconstruct {
            input,
            out,
            reference,
            adjust,
            no_clamp,
            template_unit,
        } => {
            let adjust = adjust.unwrap_or(if reference.is_some() {
                BrightnessAdjust::MatchMean
            } else {
                BrightnessAdjust::None
            });
            let config = ReconstructionConfig {
                brightness_adjust: adjust,
                clamp: !no_clamp,
                template_unit,
            };
            let written = cmd_reconstruct(&input, &out, reference.as_deref(), &config)?;
            println!("wrote {} frames to {}", written.len(), out.display());
        }
        Command::Evaluate {
            recon_dir,
            ref_dir,
            report,
            table,
        } => {
            let metrics = cmd_evaluate(&recon_dir, &ref_dir)?;
            write_or_print(report.as_ref(), &metrics.render())?;
            if let Some(table) = table {
                write_or_print(Some(&table), &metrics.render_table())?;
            }
        }
        Command::Robustness {
            k_sweep,
            seeds,
            base_seed,
            models,
            height,
            width,
            steps,
            threshold,
            table,
        } => {
            let spec = RobustnessSpec {
                ks: parse_sweep(&k_sweep)?,
                models,
                seeds,
                base_seed,
                height,
                width,
                steps,
                threshold,
                ..RobustnessSpec::default()
            };
            let rows = cmd_robustness(&spec)?;
            write_or_print(table.as_ref(), &render_robustness(&rows))?;
        }
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_ENV}=`{value}` is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
