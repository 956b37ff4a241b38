use std::process::Command;

use rvsm::filter_bank::BankName;
use rvsm::reconstructor::{BrightnessAdjust, ReconstructionConfig};
use rvsm_cli::commands::{read_scene, read_volume};
use rvsm_cli::config::SCENE_KINDS;
use rvsm_cli::{cmd_evaluate, cmd_reconstruct, cmd_sample, cmd_synth, RunConfig, SynthSpec};

#[test]
fn every_scene_kind_through_every_model() {
    let tmp = tempfile::tempdir().unwrap();
    for kind in SCENE_KINDS {
        let scene_dir = tmp.path().join(kind);
        let written = cmd_synth(&SynthSpec::new(kind, 16, 18, 24), &scene_dir).unwrap();
        assert_eq!(written.len(), 24);
        let scene = read_scene(&scene_dir).unwrap();
        for name in BankName::ALL {
            let cfg = RunConfig::for_model(name.as_str());
            let spk = tmp.path().join(format!("{kind}-{name}.spk"));
            let summary = cmd_sample(&scene, &cfg, &spk).unwrap();
            assert_eq!((summary.steps, summary.height, summary.width), (24, 16, 18));
            let vol = read_volume(&spk).unwrap();
            assert_eq!(vol.n_scales(), name.scale_count());

            let recon = tmp.path().join(format!("{kind}-{name}-recon"));
            let frames = cmd_reconstruct(
                &spk,
                &recon,
                Some(&scene_dir),
                &ReconstructionConfig::default(),
            )
            .unwrap();
            assert_eq!(frames.len(), 24);
            let report = cmd_evaluate(&recon, &scene_dir).unwrap();
            assert_eq!(report.frames.len(), 24);
            assert!(report.mean_mse >= 0.0 && report.mean_mse.is_finite());
            assert!(
                report.mean_ssim <= 1.0 + 1e-12,
                "{kind}/{name}: {}",
                report.mean_ssim
            );
        }
    }
}

#[test]
fn identical_directories_score_perfectly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("frames");
    cmd_synth(&SynthSpec::new("moving_edge", 20, 20, 5), &dir).unwrap();
    let report = cmd_evaluate(&dir, &dir).unwrap();
    assert_eq!(report.mean_mse, 0.0);
    assert_eq!(report.mean_ssim, 1.0);
    assert_eq!(report.mean_psnr, f64::INFINITY);
}

#[test]
fn noiseless_black_scene_is_silent() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = rvsm_cli::commands::synth(&SynthSpec::new("black", 100, 100, 1000)).unwrap();
    for name in ["FSM", "FourDoG"] {
        let spk = tmp.path().join(format!("{name}.spk"));
        let summary = cmd_sample(&scene, &RunConfig::for_model(name), &spk).unwrap();
        assert_eq!(summary.spikes, 0);
        assert_eq!(read_volume(&spk).unwrap().total_abs(), 0);
    }
}

#[test]
fn reconstruction_without_reference_needs_no_adjustment() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = rvsm_cli::commands::synth(&SynthSpec::new("constant", 12, 12, 10)).unwrap();
    let spk = tmp.path().join("c.spk");
    cmd_sample(&scene, &RunConfig::for_model("FSM"), &spk).unwrap();
    let out = tmp.path().join("out");
    assert!(cmd_reconstruct(&spk, &out, None, &ReconstructionConfig::default()).is_err());
    let raw = ReconstructionConfig {
        brightness_adjust: BrightnessAdjust::None,
        ..ReconstructionConfig::default()
    };
    assert_eq!(cmd_reconstruct(&spk, &out, None, &raw).unwrap().len(), 10);
}

fn rvsm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rvsm"))
}

#[test]
fn binary_runs_config_files() {
    let tmp = tempfile::tempdir().unwrap();
    let spk = tmp.path().join("cfg.spk");
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "model = \"TwoDoG\"\nseed = 3\n[noise]\nk = 0.5\n\
             [scene]\nsynth = {{ kind = \"gradient\", height = 12, width = 14, frames = 30 }}\n\
             [output]\nspikes = {:?}\n",
            spk.display().to_string()
        ),
    )
    .unwrap();
    let out = rvsm()
        .arg("sample")
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("model = RVSM_DoG\n"));
    assert!(stdout.contains("noise_k = 0.5\n"));
    let vol = read_volume(&spk).unwrap();
    assert_eq!(
        (vol.len(), vol.n_scales(), vol.height(), vol.width()),
        (30, 2, 12, 14)
    );
    assert_eq!(vol.seed(), 3);

    let table = tmp.path().join("rob.csv");
    let out = rvsm()
        .args([
            "robustness",
            "--k-sweep",
            "0.5:1.5:3",
            "--seeds",
            "2",
            "--height",
            "10",
        ])
        .args([
            "--width",
            "10",
            "--steps",
            "50",
            "--models",
            "FSM,TwoGauss",
            "--table",
        ])
        .arg(&table)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,model,I1,I2,I3_s1,I3_s2");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("0.5,FSM,"));
    assert!(lines[6].starts_with("1.5,TwoGauss,"));
}

#[test]
fn binary_reports_errors_with_nonzero_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "model = \"FSM\"\nthresh = 3\n").unwrap();
    let cases: Vec<(Vec<String>, &str)> = vec![
        (
            vec![
                "sample".into(),
                "--config".into(),
                bad.display().to_string(),
                "--out".into(),
                "x.spk".into(),
            ],
            "thresh",
        ),
        (
            vec![
                "reconstruct".into(),
                tmp.path().join("missing.spk").display().to_string(),
                "--out".into(),
                "o".into(),
            ],
            "missing.spk",
        ),
        (
            vec![
                "evaluate".into(),
                tmp.path().join("nope").display().to_string(),
                tmp.path().display().to_string(),
            ],
            "nope",
        ),
        (
            vec!["robustness".into(), "--k-sweep".into(), "1:2".into()],
            "a:b:n",
        ),
        (
            vec![
                "synth".into(),
                "spiral".into(),
                "--out".into(),
                tmp.path().display().to_string(),
            ],
            "spiral",
        ),
    ];
    for (args, needle) in cases {
        let out = rvsm().args(&args).current_dir(tmp.path()).output().unwrap();
        assert!(!out.status.success(), "{args:?} succeeded");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(
            stderr.contains(needle),
            "{args:?}: diagnostic `{stderr}` lacks `{needle}`"
        );
    }
}
