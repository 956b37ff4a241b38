//! Command-line frontend: scene synthesis, sampling, reconstruction,
//! evaluation and noise-robustness sweeps over the `rvsm` core.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_evaluate, cmd_reconstruct, cmd_robustness, cmd_sample, cmd_synth, parse_sweep,
    render_robustness, RobustnessRow, RobustnessSpec, SampleSummary,
};
pub use config::{NoiseSection, RunConfig, SynthSpec};
